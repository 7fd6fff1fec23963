"""Sprays, nonlinear connections and connections on the pullback bundle.

Conventions in the chart ``(x, y)``:

* A pullback connection ``D`` is stored as ``(N, F, V)`` with respect to the
  horizontal frame of its own nonlinear coefficients,
  ``delta_j = d/dx^j - N^m_j d/dy^m``::

      D_{delta_j} e_k = F^i_jk e_i,     D_{d/dy^j} e_k = V^i_jk e_i

  Arrays are indexed ``F[i, j, k]`` and ``N[i, j]``.
* ``rho(delta_j) = e_j``, ``rho(d/dy^j) = 0``, ``gamma(e_j) = d/dy^j`` and the
  horizontal map sends ``e_j`` to ``delta_j``.
* A spray is ``y^i d/dx^i - 2 G^i d/dy^i``.
* Vector forms on the double tangent space act on column vectors
  ``(dx-part, dy-part)``.

All coefficients are jets, so derivatives of the coefficients (needed for
curvature and covariant derivatives of tensor fields) are exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from . import jets
from .jets import Jet, einsum, jet_constant
from .metrics import ChartPoint, FinslerMetric, MetricField, PiTensor

__all__ = [
    "Spray",
    "NonlinearConnection",
    "VectorForm2n",
    "PullbackConnection",
    "ScalarPiForm",
    "LocalGeometry",
    "HRFConnection",
    "zero_form",
    "support_form",
    "component_form",
    "horizontal_derivative",
    "covariant_derivative",
    "almost_tangent",
    "canonical_spray",
    "barthel",
    "cartan_connection",
    "berwald_connection",
    "berwald_from_cartan",
    "hrf_deformation",
    "hrf_connection",
    "hrf_spray_nonlinear",
    "special_hrf",
]


@dataclass
class Spray:
    point: ChartPoint
    G: np.ndarray

    def vector_field(self) -> np.ndarray:
        """Components ``(y, -2G)`` on the double tangent space."""
        return np.concatenate([np.asarray(self.point.y), -2.0 * self.G])


@dataclass
class VectorForm2n:
    point: ChartPoint
    matrix: np.ndarray

    def __matmul__(self, other: "VectorForm2n") -> "VectorForm2n":
        return VectorForm2n(self.point, self.matrix @ other.matrix)

    def __add__(self, other: "VectorForm2n") -> "VectorForm2n":
        return VectorForm2n(self.point, self.matrix + other.matrix)

    def __sub__(self, other: "VectorForm2n") -> "VectorForm2n":
        return VectorForm2n(self.point, self.matrix - other.matrix)


def almost_tangent(p: ChartPoint) -> VectorForm2n:
    """``J = gamma o rho``: sends d/dx^j to d/dy^j and kills vertical vectors."""
    n = p.dim
    J = np.zeros((2 * n, 2 * n))
    J[n:, :n] = np.eye(n)
    return VectorForm2n(p, J)


def liouville(p: ChartPoint) -> np.ndarray:
    """The Liouville field ``gamma(eta) = y^i d/dy^i``."""
    return np.concatenate([np.zeros(p.dim), np.asarray(p.y)])


@dataclass
class NonlinearConnection:
    point: ChartPoint
    N: np.ndarray

    def vector_form(self) -> VectorForm2n:
        """``Gamma = 2h - I`` where ``h(d/dx^j) = delta_j`` and ``h`` kills d/dy."""
        n = self.point.dim
        G = np.zeros((2 * n, 2 * n))
        G[:n, :n] = np.eye(n)
        G[n:, :n] = -2.0 * self.N
        G[n:, n:] = -np.eye(n)
        return VectorForm2n(self.point, G)

    def horizontal_map(self) -> np.ndarray:
        """``beta`` as a ``2n x n`` matrix: ``e_j -> delta_j``."""
        return np.vstack([np.eye(self.point.dim), -self.N])

    @staticmethod
    def from_vector_form(form: VectorForm2n) -> "NonlinearConnection":
        n = form.point.dim
        return NonlinearConnection(form.point, -0.5 * form.matrix[n:, :n])


def horizontal_derivative(T: Jet, N: Jet) -> Jet:
    """``delta_m T = dT/dx^m - N^a_m dT/dy^a``, appended as the last axis."""
    return T.d_x() - einsum_last(T.d_y(), N)


def einsum_last(dT: Jet, M) -> Jet:
    """Contract the last axis of ``dT`` with the first axis of a matrix."""
    r = len(dT.shape) - 1
    letters = "abcdefghijklmnopqrstuv"[:r]
    return einsum(f"{letters}y,yz->{letters}z", dT, M)


def _index_letters(rank: int) -> str:
    return "abcdefgh"[:rank]


def covariant_derivative(coeff: Jet, T: Jet, signature: str, dT: Jet) -> Jet:
    """Covariant derivative of a tensor field along the frame directions.

    ``dT`` holds the plain frame derivatives ``X_m T`` in its last axis and
    ``coeff[i, m, a]`` the connection coefficients in the same frame.  The
    result carries the direction index ``m`` last.
    """
    rank = len(signature)
    letters = _index_letters(rank)
    out = dT
    for pos, var in enumerate(signature):
        src = letters[:pos] + "p" + letters[pos + 1:]
        if var == "u":
            term = einsum(f"{letters[pos]}mp,{src}->{letters}m", coeff, T)
            out = out + term
        elif var == "d":
            term = einsum(f"pm{letters[pos]},{src}->{letters}m", coeff, T)
            out = out - term
        else:
            raise ValueError(f"bad variance {var!r}")
    return out


class PullbackConnection:
    """Linear connection on the pullback bundle stored as ``(N, F, V)`` jets."""

    def __init__(self, name: str, point: ChartPoint, N: Jet, F: Jet, V: Jet):
        self.name = name
        self.point = point
        self.N = N
        self.F = F
        self.V = V

    def __repr__(self) -> str:
        return f"PullbackConnection({self.name!r}, order={self.order})"

    @property
    def n(self) -> int:
        return self.point.dim

    @property
    def order(self) -> int:
        return min(self.N.order, self.F.order, self.V.order)

    @property
    def nonlinear(self) -> NonlinearConnection:
        return NonlinearConnection(self.point, self.N.value)

    def coefficients(self) -> dict[str, np.ndarray]:
        return {"N": self.N.value, "F": self.F.value, "V": self.V.value}

    def coordinate_coefficients(self) -> tuple[np.ndarray, np.ndarray]:
        """Coefficients along d/dx^j and d/dy^j: ``F + N^m_j V^i_mk`` and ``V``."""
        F, N, V = self.F.value, self.N.value, self.V.value
        return F + np.einsum("mj,imk->ijk", N, V), V

    def connection_map(self) -> np.ndarray:
        """``K(X) = D_X eta`` as an ``n x 2n`` matrix on (dx, dy) components."""
        y = np.asarray(self.point.y)
        Gx, Gy = self.coordinate_coefficients()
        Kx = np.einsum("ijk,k->ij", Gx, y)
        Ky = np.eye(self.n) + np.einsum("ijk,k->ij", Gy, y)
        return np.hstack([Kx, Ky])

    def horizontal_map_from_K(self) -> np.ndarray:
        """Horizontal map rebuilt from the kernel of the connection map."""
        K = self.connection_map()
        n = self.n
        Kx, Ky = K[:, :n], K[:, n:]
        return np.vstack([np.eye(n), -np.linalg.solve(Ky, Kx)])

    def semispray(self) -> Spray:
        """Spray coefficients of ``beta(eta)``: ``G^i = N^i_j y^j / 2``."""
        return Spray(self.point, 0.5 * self.N.value @ np.asarray(self.point.y))

    def reframe(self, N_new: Jet, name: str | None = None) -> "PullbackConnection":
        """Same connection expressed in the horizontal frame of ``N_new``."""
        shift = self.N - N_new
        F_new = self.F + einsum("mj,imk->ijk", shift, self.V)
        return PullbackConnection(name or self.name, self.point, N_new, F_new, self.V)

    def h_derivative(self, T: Jet, signature: str) -> Jet:
        return covariant_derivative(self.F, T, signature, horizontal_derivative(T, self.N))

    def v_derivative(self, T: Jet, signature: str) -> Jet:
        return covariant_derivative(self.V, T, signature, T.d_y())


# -- scalar pi-forms -------------------------------------------------------------

@dataclass(frozen=True)
class ScalarPiForm:
    """Scalar pi-1-form ``A(X) = A_i X^i``; ``evaluate`` yields the jet of ``A_i``."""

    name: str
    evaluate: Callable[[MetricField], Jet]


def zero_form() -> ScalarPiForm:
    return ScalarPiForm("zero", lambda f: jet_constant(f.ctx, np.zeros(f.ctx.n)))


def support_form() -> ScalarPiForm:
    """The normalized support form ``ell = g(eta, .) / L``."""
    return ScalarPiForm("ell", lambda f: f.ell)


def component_form(name: str, comps: Callable) -> ScalarPiForm:
    """Form from a callable ``comps(x, y)`` returning ``n`` scalar expressions."""

    def evaluate(f: MetricField) -> Jet:
        vals = comps(f.x, f.y)
        items = [v if isinstance(v, Jet) else jet_constant(f.ctx, v) for v in vals]
        if len(items) != f.ctx.n:
            raise ValueError(f"form {name!r} has {len(items)} components, expected {f.ctx.n}")
        return jets.stack(items)

    return ScalarPiForm(name, evaluate)


# -- local geometry -------------------------------------------------------------------

class LocalGeometry:
    """All connection data of one metric around one chart point.

    ``order`` is the jet order of L; curvature needs 4, covariant derivatives
    of curvature need 5.
    """

    def __init__(self, metric: FinslerMetric, point: ChartPoint, order: int = 4):
        self.metric = metric
        self.point = point
        self.field = metric.field(point, order)
        self.n = metric.dim
        self._hrf_cache: dict[str, HRFConnection] = {}

    @property
    def L(self) -> Jet:
        return self.field.L

    @property
    def y(self) -> Jet:
        return self.field.y

    @cached_property
    def spray(self) -> Jet:
        f = self.field
        mixed = f.dE_dy.d_x()
        dE_dx = f.E.d_x()
        rhs = einsum("kj,j->k", mixed, f.y) - dE_dx
        return 0.5 * einsum("ik,k->i", f.ginv, rhs)

    @cached_property
    def barthel(self) -> Jet:
        return self.spray.d_y()

    @cached_property
    def cartan(self) -> PullbackConnection:
        f = self.field
        N = self.barthel
        dg = horizontal_derivative(f.g, N)  # dg[a, b, c] = delta_c g_ab
        t = (
            einsum("il,lkj->ijk", f.ginv, dg)
            + einsum("il,jlk->ijk", f.ginv, dg)
            - einsum("il,jkl->ijk", f.ginv, dg)
        )
        return PullbackConnection("cartan", self.point, N, 0.5 * t, f.C_up)

    @cached_property
    def berwald(self) -> PullbackConnection:
        N = self.barthel
        F = N.d_y()
        V = jet_constant(self.field.ctx, np.zeros((self.n,) * 3), F.order)
        return PullbackConnection("berwald", self.point, N, F, V)

    def hrf(self, A: ScalarPiForm) -> "HRFConnection":
        if A.name not in self._hrf_cache:
            self._hrf_cache[A.name] = HRFConnection(self, A)
        return self._hrf_cache[A.name]

    @cached_property
    def special(self) -> "HRFConnection":
        return self.hrf(support_form())


class HRFConnection:
    """Horizontally recurrent connection with prescribed h-recurrence form.

    ``deformation[i, j, k]`` is the component ``i`` of ``N(e_j, e_k)`` so that
    ``D = nabla + N(rho ., .)``; ``shift[i, j]`` is the vertical offset of the
    new horizontal map, ``beta_new(e_j) = beta(e_j) + gamma(shift[:, j])``.
    """

    def __init__(self, geom: LocalGeometry, A: ScalarPiForm):
        self.geom = geom
        self.form = A
        f = geom.field
        self.A = A.evaluate(f)
        self.abar = einsum("ij,j->i", f.ginv, self.A)
        self.A_eta = einsum("i,i->", self.A, f.y)

    @cached_property
    def T_abar(self) -> Jet:
        """``T(abar, e_j)^i`` as ``[i, j]``."""
        return einsum("iaj,a->ij", self.geom.field.C_up, self.abar)

    @cached_property
    def deformation(self) -> Jet:
        f = self.geom.field
        n = self.geom.n
        eye = np.eye(n)
        A, abar, L = self.A, self.abar, f.L
        Cup, C = f.C_up, f.C
        Ta = self.T_abar
        t = (
            einsum("jk,i->ijk", f.g, abar)
            - einsum("j,ik->ijk", A, eye)
            - einsum("k,ij->ijk", A, eye)
            - einsum("k,ij->ijk", f.ell, Ta) * L
            + einsum("ajk,a,i->ijk", C, abar, f.y)
            + (einsum("ibj,bk->ijk", Cup, Ta) - einsum("ib,bjk->ijk", Ta, Cup)) * (L * L)
        )
        return 0.5 * t

    @cached_property
    def shift(self) -> Jet:
        f = self.geom.field
        eye = np.eye(self.geom.n)
        L = f.L
        t = (
            einsum("j,i->ij", self.A, f.y)
            + einsum(",ij->ij", self.A_eta, eye)
            - einsum("jm,m,i->ij", f.g, f.y, self.abar)
            + self.T_abar * (L * L)
        )
        return 0.5 * t

    @cached_property
    def in_cartan_frame(self) -> PullbackConnection:
        cart = self.geom.cartan
        return PullbackConnection(
            f"hrf[{self.form.name}]@cartan-frame", cart.point, cart.N, cart.F + self.deformation, cart.V
        )

    @cached_property
    def connection(self) -> PullbackConnection:
        """The connection in its own horizontal frame."""
        base = self.in_cartan_frame
        N_own = base.N + einsum("ijk,k->ij", self.deformation, self.geom.field.y)
        return base.reframe(N_own, name=f"hrf[{self.form.name}]")

    def deformation_apply(self, X, Y) -> np.ndarray:
        return np.einsum("ijk,j,k->i", self.deformation.value, X, Y)


# -- public operations ----------------------------------------------------------------

def _geometry(m: FinslerMetric, p: ChartPoint, order: int = 4) -> LocalGeometry:
    return LocalGeometry(m, p, order)


def canonical_spray(m: FinslerMetric, p: ChartPoint) -> Spray:
    return Spray(p, _geometry(m, p, 2).spray.value)


def barthel(m: FinslerMetric, p: ChartPoint) -> NonlinearConnection:
    return NonlinearConnection(p, _geometry(m, p, 3).barthel.value)


def cartan_connection(m: FinslerMetric, p: ChartPoint, order: int = 3) -> PullbackConnection:
    return _geometry(m, p, order).cartan


def berwald_connection(m: FinslerMetric, p: ChartPoint, order: int = 4) -> PullbackConnection:
    """Berwald connection from ``F = dN/dy`` and vanishing vertical coefficients."""
    return _geometry(m, p, order).berwald


def berwald_from_cartan(geom: LocalGeometry) -> dict[str, np.ndarray]:
    """Berwald coefficients from Cartan data: ``V - T`` and ``F + Phat``."""
    from .curvature import curvatures, torsions

    cart = geom.cartan
    _, T = torsions(cart)
    Phat = curvatures(cart).Phat
    return {"N": cart.N.value, "F": cart.F.value + Phat, "V": cart.V.value - T}


def hrf_deformation(m: FinslerMetric, A: ScalarPiForm, p: ChartPoint, X, Y) -> PiTensor:
    h = _geometry(m, p, 3).hrf(A)
    return PiTensor(p, ("u",), h.deformation_apply(np.asarray(X, float), np.asarray(Y, float)))


def hrf_connection(m: FinslerMetric, A: ScalarPiForm, p: ChartPoint, order: int = 3) -> PullbackConnection:
    return _geometry(m, p, order).hrf(A).connection


def shifted_spray_nonlinear(h: HRFConnection) -> tuple[Spray, NonlinearConnection]:
    """Spray and nonlinear connection of an HRF-connection from the shift formulas.

    Independent of the connection coefficients: the spray is
    ``G + A(eta) C - (L^2/2) gamma(abar)`` and the nonlinear connection adds
    ``A(rho X) C + A(eta) J X - g(rho X, eta) gamma(abar) + L^2 gamma T(abar, rho X)``.
    """
    geom = h.geom
    p = geom.point
    n = geom.n
    y = np.asarray(p.y)
    L = geom.L.value
    A = h.A.value
    abar = h.abar.value
    A_eta = float(A @ y)
    G = geom.spray.value
    vec = np.concatenate([y, -2.0 * G]) + A_eta * liouville(p)
    vec[n:] -= 0.5 * L**2 * abar
    spray = Spray(p, -0.5 * vec[n:])

    gamma_base = NonlinearConnection(p, geom.barthel.value).vector_form().matrix
    g = geom.field.g.value
    Cup = geom.field.C_up.value
    delta = np.zeros((2 * n, 2 * n))
    # columns act on rho-projections, i.e. on the dx-part
    delta[n:, :n] = (
        np.outer(y, A)
        + A_eta * np.eye(n)
        - np.outer(abar, g @ y)
        + L**2 * np.einsum("iaj,a->ij", Cup, abar)
    )
    gamma_new = VectorForm2n(p, gamma_base + delta)
    return spray, NonlinearConnection.from_vector_form(gamma_new)


def hrf_spray_nonlinear(m: FinslerMetric, A: ScalarPiForm, p: ChartPoint) -> tuple[Spray, NonlinearConnection]:
    return shifted_spray_nonlinear(_geometry(m, p, 3).hrf(A))


def special_hrf(m: FinslerMetric, p: ChartPoint, order: int = 3) -> PullbackConnection:
    return _geometry(m, p, order).special.connection
