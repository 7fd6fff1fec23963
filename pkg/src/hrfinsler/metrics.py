"""Finsler metrics, chart points and the fundamental tensors derived from L.

All tensors are expressed in the natural chart frame: ``g_ij = (1/2) d^2 L^2 /
dy^i dy^j`` and ``C_ijk = (1/4) d^3 L^2 / dy^i dy^j dy^k``.  Metric functions
receive the base and fiber coordinates as indexable sequences so the same
code evaluates on jets and on plain numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from . import jets
from .jets import Jet, JetContext, einsum, get_context, point_jets

__all__ = [
    "DomainError",
    "MetricValidationError",
    "ChartPoint",
    "PiTensor",
    "FinslerMetric",
    "MetricField",
    "euclidean",
    "riemannian",
    "hyperbolic",
    "sphere",
    "randers",
    "catalog_metric",
    "CATALOG",
    "fundamental_tensor",
    "cartan_tensor",
    "support_tensors",
    "inverse",
]

PD_TOL = 1e-10


class DomainError(ValueError):
    """A chart point is degenerate or outside the metric's domain."""


class MetricValidationError(ValueError):
    """The supplied L fails a Finsler-metric requirement at a sampled point."""


@dataclass(frozen=True)
class ChartPoint:
    """Point ``(x, y)`` of the slit tangent bundle in a single chart."""

    x: tuple[float, ...]
    y: tuple[float, ...]

    def __post_init__(self):
        x = tuple(float(v) for v in self.x)
        y = tuple(float(v) for v in self.y)
        if len(x) != len(y):
            raise DomainError(f"base has {len(x)} coordinates but fiber has {len(y)}")
        if not all(np.isfinite(x + y)):
            raise DomainError("chart point coordinates must be finite")
        if not any(y):
            raise DomainError("y = 0 is not a point of the slit tangent bundle")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def dim(self) -> int:
        return len(self.x)


@dataclass
class PiTensor:
    """Components of a pi-tensor at a point.

    ``signature`` lists index variances in storage order, ``"u"`` for
    contravariant and ``"d"`` for covariant.
    """

    point: ChartPoint
    signature: tuple[str, ...]
    comps: np.ndarray

    def __post_init__(self):
        self.comps = np.asarray(self.comps, dtype=float)
        n = self.point.dim
        if self.comps.shape != (n,) * len(self.signature):
            raise ValueError(f"{self.comps.shape} is not a rank-{len(self.signature)} array with n={n}")

    def __array__(self, dtype=None, copy=None):
        return self.comps if dtype is None else self.comps.astype(dtype)


def _always(_: ChartPoint) -> bool:
    return True


@dataclass(frozen=True, eq=False)
class FinslerMetric:
    """A Finsler function ``L(x, y)`` on a chart domain.

    ``L`` takes indexable ``x`` and ``y`` whose entries are scalars, numpy
    arrays or jets, and must be built from arithmetic, powers and the
    dispatching functions of :mod:`hrfinsler.jets`.
    """

    name: str
    dim: int
    L: Callable
    domain: Callable[[ChartPoint], bool] = _always
    params: dict = field(default_factory=dict)
    quadratic: bool = False
    # x is sampled in the ball of this radius
    sample_radius: float = 0.5

    def check_point(self, p: ChartPoint) -> None:
        if p.dim != self.dim:
            raise DomainError(f"point has dimension {p.dim}, metric {self.name} has {self.dim}")
        if not self.domain(p):
            raise DomainError(f"x = {p.x} is outside the domain of {self.name}")

    def __call__(self, x, y):
        return self.L(x, y)

    def field(self, p: ChartPoint, order: int = 4) -> "MetricField":
        return MetricField(self, p, get_context(self.dim, order))

    def validate(self, points: Sequence[ChartPoint], tol: float = 1e-10) -> None:
        """Check positivity, Euler homogeneity and positive-definiteness."""
        for p in points:
            f = self.field(p, order=2)
            L = f.L.value
            if not L > 0:
                raise MetricValidationError(f"{self.name}: L = {L} is not positive at {p}")
            euler = float(np.dot(p.y, f.L.truncate(1).d_y().value))
            if abs(euler - L) > tol * max(1.0, abs(L)):
                raise MetricValidationError(
                    f"{self.name}: y^i dL/dy^i = {euler} differs from L = {L} at {p}"
                )
            f.check_positive_definite()


def inverse(g: Jet) -> Jet:
    """Inverse of a matrix-valued jet by Neumann expansion about its value."""
    g0 = g.coeffs[..., 0]
    g0inv = np.linalg.inv(g0)
    h = g.copy()
    h.coeffs[..., 0] = 0.0
    result = jets.jet_constant(g.ctx, g0inv, g.order)
    term = result
    for _ in range(g.order):
        term = -einsum("ij,jk,kl->il", g0inv, h, term)
        result = result + term
    return result


class MetricField:
    """Jets of L and its fiber derivatives around one chart point.

    With a context of order ``d`` the fundamental tensor is exact to order
    ``d - 2`` and the Cartan tensor to order ``d - 3``.
    """

    def __init__(self, metric: FinslerMetric, point: ChartPoint, ctx: JetContext):
        metric.check_point(point)
        if ctx.n != metric.dim:
            raise ValueError("jet context dimension does not match the metric")
        self.metric = metric
        self.point = point
        self.ctx = ctx
        self.x, self.y = point_jets(ctx, point.x, point.y)
        try:
            L = metric.L(self.x, self.y)
        except jets.JetDomainError as exc:
            raise DomainError(f"{metric.name}: L is not defined at {point}: {exc}") from exc
        if not isinstance(L, Jet):
            L = jets.jet_constant(ctx, L)
        if not L.value > 0:
            raise DomainError(f"{metric.name}: L = {L.value} is not positive at {point}")
        self.L = L

    @cached_property
    def E(self) -> Jet:
        return 0.5 * self.L * self.L

    @cached_property
    def dE_dy(self) -> Jet:
        return self.E.d_y()

    @cached_property
    def g(self) -> Jet:
        return self.dE_dy.d_y()

    @cached_property
    def ginv(self) -> Jet:
        self.check_positive_definite()
        return inverse(self.g)

    @cached_property
    def C(self) -> Jet:
        return 0.5 * self.g.d_y()

    @cached_property
    def C_up(self) -> Jet:
        """Cartan tensor with its first index raised, ``C^i_jk``."""
        return einsum("il,ljk->ijk", self.ginv, self.C)

    @cached_property
    def ell(self) -> Jet:
        return einsum("ij,j->i", self.g, self.y) / self.L

    @cached_property
    def hbar(self) -> Jet:
        return self.g - einsum("i,j->ij", self.ell, self.ell)

    @cached_property
    def phi(self) -> Jet:
        eye = np.eye(self.ctx.n)
        return (einsum("i,j->ij", self.y, self.ell) / self.L) * -1.0 + eye

    def check_positive_definite(self) -> None:
        g0 = self.g.value
        lam = np.linalg.eigvalsh(0.5 * (g0 + g0.T))
        if lam.min() <= PD_TOL:
            raise MetricValidationError(
                f"{self.metric.name}: fundamental tensor not positive definite at {self.point} "
                f"(smallest eigenvalue {lam.min():.3e})"
            )


# -- catalog ------------------------------------------------------------------

def _norm2(v) -> object:
    return sum(v[i] * v[i] for i in range(len(v)))


def _quadratic(a, y, n):
    return sum(a[i][j] * y[i] * y[j] for i in range(n) for j in range(n))


def euclidean(dim: int = 2) -> FinslerMetric:
    return FinslerMetric(
        name="euclidean",
        dim=dim,
        L=lambda x, y: jets.sqrt(_norm2(y)),
        quadratic=True,
    )


def generic_matrix_field(dim: int) -> Callable:
    """A smooth positive definite matrix field of non-constant curvature."""

    def a(x):
        rows = []
        for i in range(dim):
            row = []
            for j in range(dim):
                if i == j:
                    row.append(1.0 + 0.4 * x[i] * x[i] + 0.2 * x[(i + 1) % dim])
                else:
                    row.append(0.15 * x[i] * x[j])
            rows.append(row)
        return rows

    return a


def _matrix_domain(a: Callable, dim: int, radius: float = 1.0):
    def domain(p: ChartPoint) -> bool:
        if np.dot(p.x, p.x) >= radius**2:
            return False
        mat = np.array([[float(v) for v in row] for row in a(np.array(p.x))])
        return bool(np.linalg.eigvalsh(0.5 * (mat + mat.T)).min() > PD_TOL)

    return domain


def riemannian(dim: int = 2, a: Callable | None = None, name: str = "riemannian") -> FinslerMetric:
    """``L = sqrt(a_ij(x) y^i y^j)`` for a symmetric matrix field ``a``.

    The default field is :func:`generic_matrix_field`.  The domain is the
    unit ball intersected with the set where ``a`` is positive definite.
    """
    a = generic_matrix_field(dim) if a is None else a
    return FinslerMetric(
        name=name,
        dim=dim,
        L=lambda x, y: jets.sqrt(_quadratic(a(x), y, dim)),
        domain=_matrix_domain(a, dim),
        params={"a": a},
        quadratic=True,
    )


def _conformal(dim: int, scale: float, sign: float) -> Callable:
    def a(x):
        f = scale / (1.0 + sign * _norm2(x)) ** 2
        return [[f if i == j else 0.0 for j in range(dim)] for i in range(dim)]

    return a


def hyperbolic(dim: int = 2, scale: float = 16.0) -> FinslerMetric:
    """Conformal ball metric ``scale * |dx|^2 / (1 - |x|^2)^2``.

    The sectional curvature is ``-4 / scale``; the default is ``-1/4``.
    """
    a = _conformal(dim, scale, -1.0)

    def L(x, y):
        return jets.sqrt(_norm2(y) * scale) / (1.0 - _norm2(x))

    return FinslerMetric(
        name="hyperbolic",
        dim=dim,
        L=L,
        domain=lambda p: float(np.dot(p.x, p.x)) < 1.0,
        params={"scale": scale, "a": a},
        quadratic=True,
    )


def sphere(dim: int = 2, scale: float = 16.0) -> FinslerMetric:
    """Stereographic metric ``scale * |dx|^2 / (1 + |x|^2)^2`` of curvature ``4 / scale``."""
    a = _conformal(dim, scale, 1.0)

    def L(x, y):
        return jets.sqrt(_norm2(y) * scale) / (1.0 + _norm2(x))

    return FinslerMetric(
        name="sphere",
        dim=dim,
        L=L,
        params={"scale": scale, "a": a},
        quadratic=True,
    )


def randers_field(dim: int, b: float, s: float) -> Callable:
    """Drift one-form ``b(x)``: constant ``b e_1`` plus a non-closed part of size ``s``."""

    def field_(x):
        comps = [b + s * x[1], s * x[0] * x[0]]
        comps += [s * x[0] * x[1]] * (dim - 2)
        return comps

    return field_


def randers(
    dim: int = 2,
    b: float = 0.1,
    s: float = 0.0,
    a: Callable | None = None,
    bfield: Callable | None = None,
) -> FinslerMetric:
    """Randers metric ``sqrt(a_ij y^i y^j) + b_i(x) y^i`` with ``|b|_a < 1`` enforced.

    ``a`` defaults to the Euclidean field and ``b(x)`` to :func:`randers_field`.
    """
    eye = lambda x: [[1.0 if i == j else 0.0 for j in range(dim)] for i in range(dim)]  # noqa: E731
    a = eye if a is None else a
    bf = randers_field(dim, b, s) if bfield is None else bfield

    def L(x, y):
        bx = bf(x)
        return jets.sqrt(_quadratic(a(x), y, dim)) + sum(bx[i] * y[i] for i in range(dim))

    def domain(p: ChartPoint) -> bool:
        if np.dot(p.x, p.x) >= 1.0:
            return False
        x = np.array(p.x)
        mat = np.array([[float(v) for v in row] for row in a(x)])
        bv = np.array([float(v) for v in bf(x)])
        if np.linalg.eigvalsh(mat).min() <= PD_TOL:
            return False
        return float(bv @ np.linalg.solve(mat, bv)) < 1.0

    return FinslerMetric(
        name="randers",
        dim=dim,
        L=L,
        domain=domain,
        params={"b": b, "s": s, "a": a, "bfield": bf},
    )


CATALOG: dict[str, Callable[..., FinslerMetric]] = {
    "euclidean": euclidean,
    "riemannian": riemannian,
    "hyperbolic": hyperbolic,
    "sphere": sphere,
    "randers": randers,
}


def catalog_metric(name: str, dim: int = 2, **params) -> FinslerMetric:
    """Look up a catalog metric by name with numeric parameters."""
    try:
        factory = CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown catalog metric {name!r}; choose from {sorted(CATALOG)}") from None
    return factory(dim, **params)


# -- point evaluators ---------------------------------------------------------

def fundamental_tensor(m: FinslerMetric, p: ChartPoint) -> PiTensor:
    f = m.field(p, order=2)
    f.check_positive_definite()
    return PiTensor(p, ("d", "d"), f.g.value)


def cartan_tensor(m: FinslerMetric, p: ChartPoint) -> PiTensor:
    f = m.field(p, order=3)
    return PiTensor(p, ("d", "d", "d"), f.C.value)


def support_tensors(m: FinslerMetric, p: ChartPoint) -> tuple[PiTensor, PiTensor, PiTensor]:
    """The normalized support form, the angular metric and the projector phi."""
    f = m.field(p, order=2)
    return (
        PiTensor(p, ("d",), f.ell.value),
        PiTensor(p, ("d", "d"), f.hbar.value),
        PiTensor(p, ("u", "d"), f.phi.value),
    )
