"""Pointwise verification of the HRF identities, with suites and reports.

Every check evaluates a residual at sampled chart points; a check passes when
the largest residual over all points is at most its tolerance.  Residuals of
tensor identities use :func:`hrfinsler.curvature.tensor_residual`.

Randomness comes from a single integer seed.  Each (metric, point) pair gets
its own counter-based Philox stream keyed by a stable hash of the metric label
and the point index, so results do not depend on worker count or ordering.
"""

from __future__ import annotations

import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np

from . import dsl
from .connections import (
    HRFConnection,
    LocalGeometry,
    NonlinearConnection,
    ScalarPiForm,
    almost_tangent,
    berwald_from_cartan,
    horizontal_derivative,
    shifted_spray_nonlinear,
    support_form,
    zero_form,
)
from .curvature import (
    _draw,
    curvatures,
    nabla_along_new_horizontal,
    nabla_eta_S,
    hrf_curvature_terms,
    random_pi_vectors,
    special_phat_terms,
    special_rbar_terms,
    tensor_residual,
)
from .metrics import ChartPoint, FinslerMetric, catalog_metric

__all__ = [
    "SCHEMA_VERSION",
    "STATEMENTS",
    "SUITES",
    "MetricSpec",
    "FormSpec",
    "CheckRecord",
    "VerificationReport",
    "sample_points",
    "is_h_isotropic",
    "is_constant_curvature",
    "is_p_symmetric",
    "check_axioms",
    "check_theorems_48_to_410",
    "run_suite",
]

SCHEMA_VERSION = "1.0"
DEFAULT_POINTS = 50


# -- metric and form selectors -------------------------------------------------------

@dataclass(frozen=True)
class MetricSpec:
    """Reconstructible description of a metric: catalog entry or DSL source."""

    name: str
    dim: int
    params: tuple = ()
    expr: str | None = None

    @property
    def label(self) -> str:
        if self.expr is not None:
            return f"expr[{self.expr}]/{self.dim}"
        ps = ",".join(f"{k}={v}" for k, v in self.params)
        return f"{self.name}{self.dim}" + (f"({ps})" if ps else "")

    def build(self) -> FinslerMetric:
        if self.expr is not None:
            return dsl.metric_from_expr(self.expr, self.dim, name=self.label)
        return catalog_metric(self.name, self.dim, **dict(self.params))

    def to_dict(self) -> dict:
        d = {"name": self.name, "dim": self.dim, "params": dict(self.params)}
        if self.expr is not None:
            d["expr"] = self.expr
        return d


@dataclass(frozen=True)
class FormSpec:
    """h-recurrence form: ``zero``, ``ell`` or DSL component sources."""

    name: str
    components: tuple[str, ...] = ()

    def build(self, n: int) -> ScalarPiForm:
        if self.name == "zero":
            return zero_form()
        if self.name == "ell":
            return support_form()
        return dsl.form_from_exprs(list(self.components), n, name=self.name)

    def to_dict(self) -> dict:
        d = {"name": self.name}
        if self.components:
            d["components"] = list(self.components)
        return d


def _norm_y(n: int) -> str:
    return "sqrt(" + "+".join(f"y{i}^2" for i in range(1, n + 1)) + ")"


def example_form(n: int) -> FormSpec:
    """An inhomogeneous form: ``(x1 y2 / |y|, 0, ...)``."""
    comps = [f"x1*y2/{_norm_y(n)}"] + ["0"] * (n - 1)
    return FormSpec("dsl-example", tuple(comps))


def random_form(n: int, seed: int) -> FormSpec:
    """A reproducible random DSL form of mixed homogeneity built from ``seed``."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(0xF0,))))
    ny = _norm_y(n)
    templates = [
        "{c}",
        "{c}*x{a}",
        "{c}*y{a}/" + ny,
        "{c}*x{a}*y{b}",
        "{c}*sin(x{a})",
        "{c}*exp(x{a})*y{b}/" + ny,
    ]
    comps = []
    for _ in range(n):
        terms = []
        for t in rng.choice(len(templates), size=int(rng.integers(1, 4)), replace=False):
            c = round(float(rng.uniform(-0.5, 0.5)), 3)
            a, b = (int(v) for v in rng.integers(1, n + 1, size=2))
            terms.append(templates[t].format(c=f"({c})", a=a, b=b))
        comps.append("+".join(terms))
    return FormSpec("dsl-random", tuple(comps))


def default_metrics() -> list[MetricSpec]:
    return [
        MetricSpec("euclidean", 2),
        MetricSpec("euclidean", 3),
        MetricSpec("riemannian", 2),
        MetricSpec("riemannian", 3),
        MetricSpec("hyperbolic", 3),
        MetricSpec("sphere", 3),
        MetricSpec("randers", 2, (("b", 0.1), ("s", 0.2))),
        MetricSpec("randers", 3, (("b", 0.2), ("s", 0.3))),
    ]


def default_forms(n: int, seed: int) -> list[FormSpec]:
    return [FormSpec("zero"), FormSpec("ell"), example_form(n), random_form(n, seed)]


# -- sampling -------------------------------------------------------------

def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def _label_key(label: str) -> int:
    return zlib.crc32(label.encode("utf-8"))


def sample_points(m: FinslerMetric, count: int, rng: np.random.Generator) -> list[ChartPoint]:
    """Points with x uniform in the inner ball and y uniform on a sphere of radius in [0.5, 2]."""
    pts = []
    n = m.dim
    attempts = 0
    while len(pts) < count:
        attempts += 1
        if attempts > 100 * count:
            raise RuntimeError(f"could not sample {count} domain points for {m.name}")
        d = rng.normal(size=n)
        x = d / np.linalg.norm(d) * m.sample_radius * rng.uniform() ** (1.0 / n)
        u = rng.normal(size=n)
        y = u / np.linalg.norm(u) * rng.uniform(0.5, 2.0)
        p = ChartPoint(tuple(float(v) for v in x), tuple(float(v) for v in y))
        if m.domain(p):
            pts.append(p)
    return pts


# -- per-point context -------------------------------------------------------------

class Probe:
    """Shared lazily computed geometry at one chart point."""

    def __init__(self, metric: FinslerMetric, point: ChartPoint, rng: np.random.Generator):
        self.metric = metric
        self.point = point
        self.rng = rng
        self.vectors = _draw(rng, point.y)
        self._forms: dict[str, ScalarPiForm] = {}

    @cached_property
    def geom(self) -> LocalGeometry:
        return LocalGeometry(self.metric, self.point, order=4)

    @cached_property
    def geom5(self) -> LocalGeometry:
        return LocalGeometry(self.metric, self.point, order=5)

    def res(self, lhs, rhs) -> float:
        return tensor_residual(lhs, rhs, self.vectors)

    def hrf(self, form: ScalarPiForm) -> HRFConnection:
        return self.geom.hrf(form)


def _absdiff(*pairs) -> float:
    return max(float(np.max(np.abs(np.asarray(a) - np.asarray(b)))) for a, b in pairs)


def _rho(n: int) -> np.ndarray:
    return np.hstack([np.eye(n), np.zeros((n, n))])


def _gamma(n: int) -> np.ndarray:
    return np.vstack([np.zeros((n, n)), np.eye(n)])


# -- classical checks -------------------------------------------------------------

def _berwald_cartan(pr: Probe) -> float:
    geom = pr.geom
    direct = geom.berwald
    via = berwald_from_cartan(geom)
    return max(pr.res(direct.F.value, via["F"]), pr.res(direct.V.value, via["V"]))


def _berwald_metric(pr: Probe) -> float:
    geom = pr.geom
    f = geom.field
    bw = geom.berwald
    g = f.g.value
    Dv = bw.v_derivative(f.g, "dd").value  # [a, b, m]
    Dh = bw.h_derivative(f.g, "dd").value
    Phat = curvatures(geom.cartan).Phat  # [z, m, a]
    rhs_v = 2.0 * np.einsum("mab->abm", f.C.value)
    rhs_h = -2.0 * np.einsum("bz,zma->abm", g, Phat)
    return max(pr.res(Dv, rhs_v), pr.res(Dh, rhs_h))


def _spray_homogeneity(pr: Probe) -> float:
    G = pr.geom.spray
    y = np.asarray(pr.point.y)
    return pr.res(G.d_y().value @ y, 2.0 * G.value)


def _barthel_invariants(pr: Probe) -> float:
    geom = pr.geom
    N = geom.barthel
    y = np.asarray(pr.point.y)
    dN = N.d_y().value  # [i, j, k] = dN^i_j / dy^k
    dE = horizontal_derivative(geom.field.E, N).value
    E = geom.field.E.value
    return max(
        pr.res(dN @ y, N.value),
        pr.res(dN, dN.transpose(0, 2, 1)),
        float(np.max(np.abs(dE))) / (1.0 + E),
    )


# -- HRF connection checks-----------------------------------------------------------

def _own(pr: Probe, A: ScalarPiForm):
    return pr.hrf(A).connection


def _semispray_pair(pr: Probe, A: ScalarPiForm) -> float:
    D = _own(pr, A)
    n = D.n
    beta = D.nonlinear.horizontal_map()
    beta_K = D.horizontal_map_from_K()
    gam = 2.0 * beta @ _rho(n) - np.eye(2 * n)
    J = almost_tangent(pr.point).matrix
    spray = D.semispray()
    y = np.asarray(pr.point.y)
    semispray = beta @ y
    return _absdiff(
        (beta_K, beta),
        (gam, D.nonlinear.vector_form().matrix),
        (J @ gam, J),
        (gam @ J, -J),
        (semispray, spray.vector_field()),
    )


def _regular_form(pr: Probe, A: ScalarPiForm) -> float:
    D = _own(pr, A)
    n = D.n
    y = np.asarray(pr.point.y)
    beta = D.nonlinear.horizontal_map()
    K = D.connection_map()
    gam1 = beta @ _rho(n) - _gamma(n) @ K
    gam2 = 2.0 * beta @ _rho(n) - np.eye(2 * n)
    J = almost_tangent(pr.point).matrix
    Tet = np.einsum("ijk,k->ij", D.V.value, y)
    return max(
        _absdiff((gam1, gam2), (J @ gam1, J), (gam1 @ J, -J)),
        float(np.max(np.abs(Tet))) / (1.0 + float(np.max(np.abs(D.V.value)))),
    )


def _recurrence(pr: Probe, A: ScalarPiForm) -> float:
    """Recover the h-recurrence form from ``(D_{beta X} g)(Y, Y) / g(Y, Y)``."""
    h = pr.hrf(A)
    D = h.connection
    f = pr.geom.field
    Dg = D.h_derivative(f.g, "dd").value  # [a, b, m]
    g = f.g.value
    Aval = h.A.value
    worst = 0.0
    for Y in pr.vectors[:, 0]:
        rec = np.einsum("abm,a,b->m", Dg, Y, Y) / float(Y @ g @ Y)
        worst = max(worst, float(np.max(np.abs(rec - Aval))))
    return worst / (1.0 + float(np.max(np.abs(Aval))))


def _c1(pr: Probe, A: ScalarPiForm) -> float:
    h = pr.hrf(A)
    f = pr.geom.field
    Dg = h.connection.h_derivative(f.g, "dd").value
    return pr.res(Dg, np.einsum("m,ab->abm", h.A.value, f.g.value))


def _c2(pr: Probe, A: ScalarPiForm) -> float:
    f = pr.geom.field
    Dg = _own(pr, A).v_derivative(f.g, "dd").value
    return pr.res(Dg, np.zeros_like(Dg))


def _c3(pr: Probe, A: ScalarPiForm) -> float:
    Q = curvatures(_own(pr, A)).Q
    return pr.res(Q, np.zeros_like(Q))


def _c4(pr: Probe, A: ScalarPiForm) -> float:
    D = _own(pr, A)
    g = pr.geom.field.g.value
    y = np.asarray(pr.point.y)
    Tl = np.einsum("za,ajk->zjk", g, D.V.value)  # g(T(e_j, e_k), e_z)
    Tet = np.einsum("ijk,k->ij", D.V.value, y)
    return max(pr.res(Tl, Tl.transpose(2, 1, 0)), pr.res(Tet, np.zeros_like(Tet)))


def uniqueness_probe(h: HRFConnection) -> dict[str, np.ndarray]:
    """Coefficients rebuilt from the vertical, horizontal and shift identities of the uniqueness proof.

    Vertical part equals Cartan's; the horizontal map is shifted by ``X_t``;
    the horizontal coefficients come from the expanded formula written with
    Berwald vertical derivatives.
    """
    geom = h.geom
    f = geom.field
    n = geom.n
    eye = np.eye(n)
    y = np.asarray(geom.point.y)
    cart = geom.cartan
    Vo = geom.berwald.V.value
    L = f.L.value
    g = f.g.value
    gy = g @ y
    ell = f.ell.value
    T = cart.V.value
    Tl = f.C.value
    A = h.A.value
    abar = np.linalg.solve(g, A)
    A_eta = float(A @ y)
    Ta = np.einsum("iaj,a->ij", T, abar)
    Xt = 0.5 * (np.outer(y, A) + A_eta * eye - np.outer(abar, gy) + L**2 * Ta)
    braces = (
        A_eta * T
        - np.einsum("j,ik->ijk", A, eye)
        - np.einsum("k,ij->ijk", A, eye)
        + np.einsum("i,jk->ijk", abar, g)
        + np.einsum("j,imk,m->ijk", A, Vo, y)
        + A_eta * Vo
        - np.einsum("j,imk,m->ijk", gy, Vo, abar)
        + L**2 * np.einsum("imk,mj->ijk", Vo, Ta)
        - L * np.einsum("j,ik->ijk", ell, Ta)
        - L * np.einsum("k,ij->ijk", ell, Ta)
        + np.einsum("ajk,a,i->ijk", Tl, abar, y)
        + L**2
        * (
            np.einsum("imk,mj->ijk", T, Ta)
            + np.einsum("imj,mk->ijk", T, Ta)
            - np.einsum("im,mjk->ijk", Ta, T)
        )
    )
    return {"N": cart.N.value - Xt, "F": cart.F.value + 0.5 * braces, "V": T}


def _uniqueness(pr: Probe, A: ScalarPiForm) -> float:
    h = pr.hrf(A)
    probe = uniqueness_probe(h)
    D = h.connection.coefficients()
    return max(
        pr.res(D["N"], probe["N"]), pr.res(D["F"], probe["F"]), pr.res(D["V"], probe["V"])
    )


def _cartan_reduction(pr: Probe) -> float:
    D = pr.hrf(zero_form()).connection.coefficients()
    C = pr.geom.cartan.coefficients()
    return _absdiff(*((D[k], C[k]) for k in ("N", "F", "V")))


def _deformation(pr: Probe, A: ScalarPiForm) -> float:
    """Difference of the probe connection and Cartan's on the Barthel frame vs the deformation tensor."""
    h = pr.hrf(A)
    probe = uniqueness_probe(h)
    geom = pr.geom
    shift = probe["N"] - geom.cartan.N.value
    F_barthel = probe["F"] + np.einsum("mj,imk->ijk", shift, probe["V"])
    return pr.res(F_barthel - geom.cartan.F.value, h.deformation.value)


def _shifted_spray(pr: Probe, A: ScalarPiForm) -> float:
    h = pr.hrf(A)
    spray, _ = shifted_spray_nonlinear(h)
    return pr.res(h.connection.semispray().G, spray.G)


def _shift_homogeneity(pr: Probe, A: ScalarPiForm) -> dict[str, float]:
    """Degree defects of the shifted spray (2) and nonlinear connection (1) under y -> 2y.

    Nothing forces a general form to be homogeneous, so these are reported
    alongside the identity residuals rather than checked.
    """
    p = pr.point
    far = ChartPoint(p.x, tuple(2.0 * v for v in p.y))
    spray, nl = shifted_spray_nonlinear(pr.hrf(A))
    spray2, nl2 = shifted_spray_nonlinear(LocalGeometry(pr.metric, far, order=3).hrf(A))
    rel = lambda a, b: float(np.max(np.abs(a - b)) / (1.0 + np.max(np.abs(b))))  # noqa: E731
    return {"spray_degree2_defect": rel(spray2.G, 4.0 * spray.G), "nonlinear_degree1_defect": rel(nl2.N, 2.0 * nl.N)}


def _shifted_nonlinear(pr: Probe, A: ScalarPiForm) -> float:
    h = pr.hrf(A)
    _, nl = shifted_spray_nonlinear(h)
    own = h.connection.nonlinear
    return max(
        pr.res(own.N, nl.N),
        _absdiff((own.vector_form().matrix, nl.vector_form().matrix)),
    )


def _curvature_relation(key: str) -> Callable[[Probe, ScalarPiForm], float]:
    def check(pr: Probe, A: ScalarPiForm) -> float:
        memo = pr.__dict__.setdefault("_curv_terms", {})
        if A.name not in memo:
            memo[A.name] = hrf_curvature_terms(pr.geom, A)
        lhs, rhs = memo[A.name][key]
        return pr.res(lhs, rhs)

    return check


# -- special HRF checks -------------------------------------------------------------

def _special(pr: Probe) -> HRFConnection:
    return pr.geom.special


def _special_maps(part: str) -> Callable[[Probe], float]:
    def check(pr: Probe) -> float:
        geom = pr.geom
        n = geom.n
        L = geom.L.value
        D = _special(pr).connection
        base = NonlinearConnection(pr.point, geom.barthel.value)
        J = almost_tangent(pr.point).matrix
        if part == "gamma":
            return _absdiff((D.nonlinear.vector_form().matrix, base.vector_form().matrix + L * J))
        if part == "beta":
            return _absdiff((D.nonlinear.horizontal_map(), base.horizontal_map() + 0.5 * L * _gamma(n)))
        return _absdiff((D.connection_map(), geom.cartan.connection_map() - 0.5 * L * _rho(n)))

    return check


def _special_deformation(part: str) -> Callable[[Probe], float]:
    def check(pr: Probe) -> float:
        geom = pr.geom
        f = geom.field
        n = geom.n
        eye = np.eye(n)
        y = np.asarray(pr.point.y)
        L = f.L.value
        g = f.g.value
        ell = f.ell.value
        hbar = f.hbar.value
        phi = f.phi.value
        sp = _special(pr)
        Nj = sp.deformation
        # g(Y, Z) phi(X) - hbar(X, Y) Z - hbar(X, Z) Y  as [i, a, b, m]
        bracket = (
            np.einsum("ab,im->iabm", g, phi)
            - np.einsum("ma,ib->iabm", hbar, eye)
            - np.einsum("mb,ia->iabm", hbar, eye)
        )
        if part == "a":
            rhs = 0.5 * (
                np.einsum("jk,i->ijk", g, y) / L
                - np.einsum("j,ik->ijk", ell, eye)
                - np.einsum("k,ij->ijk", ell, eye)
            )
            return pr.res(Nj.value, rhs)
        if part == "b":
            return pr.res(np.einsum("ijk,k->ij", Nj.value, y), -0.5 * L * eye)
        if part == "c":
            hN = geom.cartan.h_derivative(Nj, "udd").value
            return pr.res(hN, np.zeros_like(hN))
        if part == "d":
            vN = geom.cartan.v_derivative(Nj, "udd").value
            return pr.res(vN, bracket / (2.0 * L))
        bN = nabla_along_new_horizontal(sp, Nj, "udd").value
        return pr.res(bN, 0.25 * bracket)

    return check


def _phat(key: str) -> Callable[[Probe], float]:
    def check(pr: Probe) -> float:
        memo = pr.__dict__.setdefault("_phat", None)
        if memo is None:
            memo = pr.__dict__["_phat"] = special_phat_terms(pr.geom)
        lhs, rhs = memo[key]
        return pr.res(lhs, rhs)

    return check


def _nonvanishing(pr: Probe) -> float:
    """``0.01 L / max|Phat_bar|``: at most 1 certifies the torsion is bounded away from zero."""
    Pb = curvatures(_special(pr).connection).Phat
    return 0.01 * pr.geom.L.value / float(np.max(np.abs(Pb)))


def _rbar(key: str, order5: bool = False) -> Callable[[Probe], float]:
    def check(pr: Probe) -> float:
        attr = "_rbar5" if order5 else "_rbar"
        memo = pr.__dict__.get(attr)
        if memo is None:
            memo = pr.__dict__[attr] = special_rbar_terms(pr.geom5 if order5 else pr.geom)
        lhs, rhs = memo[key]
        return pr.res(lhs, rhs)

    return check


def _contract(T: np.ndarray, triple: np.ndarray) -> np.ndarray:
    out = T
    for slot in range(T.ndim - 1, 0, -1):
        out = out @ triple[slot - 1]
    return out


def _wedge(g: np.ndarray) -> np.ndarray:
    """``g(X, Z) Y - g(Y, Z) X`` in the curvature layout ``[i, j(Z), k(X), l(Y)]``."""
    eye = np.eye(len(g))
    return np.einsum("kj,il->ijkl", g, eye) - np.einsum("lj,ik->ijkl", g, eye)


def _fit(pairs: Iterable[tuple[np.ndarray, np.ndarray]]) -> tuple[float, float]:
    """Least-squares scalar ``k`` with ``r = k w``; residual ``max|r - k w| / (1 + max|r|)``."""
    pairs = list(pairs)
    num = sum(float(r @ w) for r, w in pairs)
    den = sum(float(w @ w) for r, w in pairs)
    k = num / den if den > 0 else 0.0
    worst = max(float(np.max(np.abs(r - k * w))) for r, w in pairs)
    scale = max(float(np.max(np.abs(r))) for r, w in pairs)
    return k, worst / (1.0 + scale)


def _h_isotropy_pairs(pr: Probe):
    R = curvatures(pr.geom.cartan).R
    W = _wedge(pr.geom.field.g.value)
    return [(_contract(R, t), _contract(W, t)) for t in pr.vectors]


def _constant_curvature_pairs(pr: Probe, Rhat: np.ndarray | None = None):
    f = pr.geom.field
    y = np.asarray(pr.point.y)
    if Rhat is None:
        Rhat = curvatures(pr.geom.cartan).Rhat
    L = f.L.value
    lhs = np.einsum("ikl,k->il", Rhat, y)
    rhs = L**2 * f.phi.value
    return [(lhs @ t[0], rhs @ t[0]) for t in pr.vectors]


def _nabla_S_terms(pr: Probe) -> tuple[np.ndarray, np.ndarray]:
    geom = pr.geom5
    return nabla_eta_S(geom), curvatures(geom.cartan).S


def _norm_over_triples(pr: Probe, T: np.ndarray) -> float:
    return max(float(np.max(np.abs(_contract(T, t)))) for t in pr.vectors)


def _p_symmetry(pr: Probe) -> float:
    """Consistency of P-symmetry with the vanishing of ``nabla_{beta eta} S``."""
    P = curvatures(pr.geom5.cartan).P
    skew = _norm_over_triples(pr, P - P.transpose(0, 1, 3, 2))
    dS, _ = _nabla_S_terms(pr)
    return abs(skew - _norm_over_triples(pr, dS)) / (1.0 + skew)


# -- registry -------------------------------------------------------------

@dataclass(frozen=True)
class CheckSpec:
    id: str
    anchor: str
    tolerance: float
    fn: Callable
    uses_form: bool = False
    # "all", "dim3" (dim >= 3 only, otherwise not applicable)
    scope: str = "all"
    # forms excluded for this check (names)
    skip_forms: tuple[str, ...] = ()
    # extra per-point quantities, maxed over points into the record details
    diagnostic: Callable | None = None


CHECKS: list[CheckSpec] = [
    CheckSpec("classical.berwald-cartan", "Prop 2.1", 1e-8, _berwald_cartan),
    CheckSpec("classical.berwald-metric", "Prop 2.2", 1e-8, _berwald_metric),
    CheckSpec("classical.spray-homogeneity", "Prop 2.3", 1e-10, _spray_homogeneity),
    CheckSpec("classical.barthel", "Thm 2.4", 1e-9, _barthel_invariants),
    CheckSpec("hrf.semispray-nonlinear", "Def 3.1", 1e-10, _semispray_pair, uses_form=True),
    CheckSpec("hrf.regular-vector-form", "Lemma 3.2", 1e-10, _regular_form, uses_form=True),
    CheckSpec("hrf.recurrence-form", "Def 3.3", 1e-8, _recurrence, uses_form=True),
    CheckSpec("axioms.recurrent", "Thm 3.4 (C1)", 1e-8, _c1, uses_form=True),
    CheckSpec("axioms.vertical-parallel", "Thm 3.4 (C2)", 1e-9, _c2, uses_form=True),
    CheckSpec("axioms.hh-torsion", "Thm 3.4 (C3)", 1e-9, _c3, uses_form=True),
    CheckSpec("axioms.hhv-torsion", "Thm 3.4 (C4)", 1e-9, _c4, uses_form=True),
    CheckSpec("axioms.uniqueness", "Thm 3.4 uniqueness, Eqs. (11), (22), (B1), (33)", 1e-10, _uniqueness, uses_form=True),
    CheckSpec("axioms.cartan-reduction", "Remark 3.5", 1e-12, _cartan_reduction),
    CheckSpec("hrf.deformation", "Corollary 3.5", 1e-10, _deformation, uses_form=True),
    CheckSpec("hrf.spray", "Prop 3.6 (a)", 1e-10, _shifted_spray, uses_form=True, diagnostic=_shift_homogeneity),
    CheckSpec("hrf.nonlinear", "Prop 3.6 (b)", 1e-10, _shifted_nonlinear, uses_form=True),
    CheckSpec("curvature.v", "Prop 3.7 (a)", 1e-9, _curvature_relation("a"), uses_form=True, skip_forms=("zero",)),
    CheckSpec("curvature.hv", "Prop 3.7 (b)", 1e-8, _curvature_relation("b"), uses_form=True, skip_forms=("zero",)),
    CheckSpec("curvature.h", "Prop 3.7 (c)", 1e-8, _curvature_relation("c"), uses_form=True, skip_forms=("zero",)),
    CheckSpec("special.nonlinear", "Lemma 4.1 (Gamma)", 1e-9, _special_maps("gamma")),
    CheckSpec("special.horizontal-map", "Lemma 4.1 (beta)", 1e-9, _special_maps("beta")),
    CheckSpec("special.connection-map", "Lemma 4.1 (K)", 1e-9, _special_maps("K")),
    CheckSpec("special.deformation", "Lemma 4.2 (a)", 1e-10, _special_deformation("a")),
    CheckSpec("special.deformation-eta", "Lemma 4.2 (b)", 1e-10, _special_deformation("b")),
    CheckSpec("special.deformation-h", "Lemma 4.2 (c)", 1e-8, _special_deformation("c")),
    CheckSpec("special.deformation-v", "Lemma 4.2 (d)", 1e-8, _special_deformation("d")),
    CheckSpec("special.deformation-hbar", "Lemma 4.2 (e)", 1e-8, _special_deformation("e")),
    CheckSpec("special.hv-curvature", "Thm 4.3 (proof)", 1e-8, _phat("full")),
    CheckSpec("special.hv-torsion-nonvanishing", "Thm 4.3", 1.0, _nonvanishing),
    CheckSpec("special.hv-torsion", "Eq. (pp)", 1e-9, _phat("pp")),
    CheckSpec("special.hv-torsion-skew", "Corollary 4.4 (a)", 1e-9, _phat("skew")),
    CheckSpec("special.hv-torsion-vertical", "Corollary 4.4 (b)", 1e-9, _phat("vertical")),
    CheckSpec("special.h-curvature", "Prop 4.5", 1e-8, _rbar("rbar")),
    CheckSpec("special.hv-skew", "Eq. (pp2)", 1e-8, _rbar("pskew", order5=True)),
    CheckSpec("special.vh-torsion", "Thm 4.10 (proof)", 1e-8, _rbar("rhat")),
    CheckSpec("theorems.p-symmetry", "Def 4.7", 1e-8, _p_symmetry),
]

# metric-level checks (fit over all points) live in _metric_checks below
METRIC_CHECK_ANCHORS = {
    "theorems.h-isotropic": "Def 4.6 (a)",
    "theorems.constant-curvature": "Def 4.6 (b)",
    "theorems.rbar-vanishes-iff": "Thm 4.8",
    "theorems.rbar-vanishes-iff-s": "Thm 4.9",
    "theorems.constant-curvature-from-rhat": "Thm 4.10",
}

STATEMENTS: list[str] = [c.anchor for c in CHECKS] + list(METRIC_CHECK_ANCHORS.values())

SUITES: dict[str, list[str]] = {
    "classical": [c.id for c in CHECKS if c.id.startswith("classical.")],
    "axioms": [c.id for c in CHECKS if c.id.startswith(("axioms.", "hrf."))],
    "prop37": ["curvature.v", "curvature.hv", "curvature.h"],
    "special": [c.id for c in CHECKS if c.id.startswith("special.")],
    "theorems": ["theorems.p-symmetry"] + list(METRIC_CHECK_ANCHORS),
}
SUITES["all"] = [cid for s in ("classical", "axioms", "prop37", "special", "theorems") for cid in SUITES[s]]

_BY_ID = {c.id: c for c in CHECKS}


# -- records and reports -------------------------------------------------------------

@dataclass
class CheckRecord:
    id: str
    anchor: str
    metric: str
    form: str | None
    residual: float | None
    tolerance: float
    passed: bool | None
    points: int
    status: str = "executed"  # or "not-applicable"
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "anchor": self.anchor,
            "metric": self.metric,
            "form": self.form,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "points": self.points,
            "status": self.status,
            "details": self.details,
        }


@dataclass
class VerificationReport:
    suite: str
    seed: int
    records: list[CheckRecord]
    config: dict = field(default_factory=dict)
    missing_statements: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        ok = all(r.passed for r in self.records if r.status == "executed")
        return ok and not self.missing_statements

    def failures(self) -> list[CheckRecord]:
        return [r for r in self.records if r.status == "executed" and not r.passed]

    def to_dict(self) -> dict:
        executed = [r for r in self.records if r.status == "executed"]
        return {
            "schema_version": SCHEMA_VERSION,
            "config_echo": {"suite": self.suite, "seed": self.seed, **self.config},
            "checks": [r.to_dict() for r in self.records],
            "summary": {
                "total": len(self.records),
                "executed": len(executed),
                "passed": sum(1 for r in executed if r.passed),
                "failed": sum(1 for r in executed if not r.passed),
                "not_applicable": len(self.records) - len(executed),
                "missing_statements": list(self.missing_statements),
                "all_passed": self.passed,
            },
        }


def _record(spec_id: str, anchor: str, metric: str, form: str | None, residual: float, tol: float, points: int, **details) -> CheckRecord:
    residual = float(residual)
    return CheckRecord(spec_id, anchor, metric, form, residual, tol, bool(residual <= tol), points, details=details)


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("FINSLER_THREADS", "1")))
    except ValueError:
        return 1


# -- running -------------------------------------------------------------

def _point_residuals(
    metric: FinslerMetric,
    point: ChartPoint,
    rng: np.random.Generator,
    checks: Sequence[CheckSpec],
    forms: Sequence[tuple[FormSpec, ScalarPiForm]],
    tolerances: dict[str, float],
) -> tuple[dict, dict]:
    """Residuals per (check id, form name), and diagnostics under the same keys."""
    pr = Probe(metric, point, rng)
    out: dict[tuple[str, str | None], float] = {}
    diag: dict[tuple[str, str | None], dict[str, float]] = {}
    for c in checks:
        if c.uses_form:
            for fs, A in forms:
                if fs.name in c.skip_forms:
                    continue
                out[(c.id, fs.name)] = c.fn(pr, A)
                if c.diagnostic is not None:
                    diag[(c.id, fs.name)] = c.diagnostic(pr, A)
        else:
            out[(c.id, None)] = c.fn(pr)
            if c.diagnostic is not None:
                diag[(c.id, None)] = c.diagnostic(pr)
    return out, diag


def _map_points(fn: Callable[[int], dict], count: int) -> list[dict]:
    workers = _workers()
    if workers == 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(count)))


def run_checks(
    spec: MetricSpec,
    check_ids: Sequence[str],
    seed: int,
    points: int = DEFAULT_POINTS,
    forms: Sequence[FormSpec] | None = None,
    tolerances: dict[str, float] | None = None,
) -> list[CheckRecord]:
    """Run the pointwise checks ``check_ids`` on one metric."""
    tolerances = tolerances or {}
    metric = spec.build()
    label = spec.label
    key = _label_key(label)
    pts = sample_points(metric, points, _stream(seed, key, 0))
    specs = [_BY_ID[c] for c in check_ids if c in _BY_ID]
    applicable = [c for c in specs if not (c.scope == "dim3" and metric.dim < 3)]
    forms = list(forms) if forms is not None else default_forms(metric.dim, seed)
    built = [(fs, fs.build(metric.dim)) for fs in forms]

    def one(i: int) -> dict:
        return _point_residuals(metric, pts[i], _stream(seed, key, 1, i), applicable, built, tolerances)

    results = _map_points(one, len(pts))
    records = []
    for c in specs:
        tol = tolerances.get(c.id, c.tolerance)
        if c not in applicable:
            records.append(CheckRecord(c.id, c.anchor, label, None, None, tol, None, 0, status="not-applicable"))
            continue
        keys = [(c.id, fs.name) for fs in forms if fs.name not in c.skip_forms] if c.uses_form else [(c.id, None)]
        for k in keys:
            residual = max(r[k] for r, _ in results)
            details = {}
            if c.diagnostic is not None:
                for name in results[0][1][k]:
                    details[name] = max(d[k][name] for _, d in results)
            records.append(_record(c.id, c.anchor, label, k[1], residual, tol, len(pts), **details))
    return records


# -- metric-level predicates -------------------------------------------------------------

def _probes(m: FinslerMetric, points: Sequence[ChartPoint], seed: int) -> list[Probe]:
    key = _label_key(m.name)
    return [Probe(m, p, _stream(seed, key, 2, i)) for i, p in enumerate(points)]


def is_h_isotropic(m: FinslerMetric, points: Sequence[ChartPoint], seed: int = 0) -> tuple[float, float]:
    """Least-squares scalar ``k0`` with ``R = k0 {g(X, Z) Y - g(Y, Z) X}`` and the fit residual."""
    if m.dim < 3:
        raise ValueError("h-isotropy is defined for dimension >= 3")
    pairs = [pair for pr in _probes(m, points, seed) for pair in _h_isotropy_pairs(pr)]
    return _fit(pairs)


def is_constant_curvature(m: FinslerMetric, points: Sequence[ChartPoint], seed: int = 0) -> tuple[float, float]:
    """Least-squares ``k`` with ``Rhat(eta, X) = k L^2 phi(X)`` and the fit residual."""
    pairs = [pair for pr in _probes(m, points, seed) for pair in _constant_curvature_pairs(pr)]
    return _fit(pairs)


def is_p_symmetric(m: FinslerMetric, points: Sequence[ChartPoint], seed: int = 0) -> dict[str, float]:
    """Largest antisymmetric part of the Cartan hv-curvature, with ``|nabla_{beta eta} S|`` for comparison."""
    skew = 0.0
    dS = 0.0
    for pr in _probes(m, points, seed):
        P = curvatures(pr.geom5.cartan).P
        skew = max(skew, _norm_over_triples(pr, P - P.transpose(0, 1, 3, 2)))
        dS = max(dS, _norm_over_triples(pr, _nabla_S_terms(pr)[0]))
    return {"skew": skew, "nabla_eta_S": dS}


def _implication(r1: float, r2: float, tol: float) -> bool:
    """``r1 <= tol`` forces ``r2 <= 10 tol`` and vice versa."""
    return (r1 > tol or r2 <= 10 * tol) and (r2 > tol or r1 <= 10 * tol)


def _theorem_quantities(pr: Probe) -> dict[str, float]:
    """Sizes of both sides of each theorem, with the identities that link them.

    ``*_lhs`` and ``*_rhs`` are the two statements each equivalence relates,
    written relative to an h-isotropic metric with scalar -1/4 so that they
    reduce to the theorem's sides when the hypothesis holds; ``*_id`` is the
    residual of the exact identity connecting them.
    """
    geom = pr.geom5
    f = geom.field
    L = f.L.value
    y = np.asarray(pr.point.y)
    cb = curvatures(geom.cartan)
    sb = curvatures(geom.special.connection)
    dS, S = _nabla_S_terms(pr)
    W = _wedge(f.g.value)
    gap_r = sb.R - cb.R - 0.25 * W
    s_gap = dS - 0.5 * L * S
    gap_rs = gap_r - 0.5 * L * (cb.P - cb.P.transpose(0, 1, 3, 2))
    rhat_bar_eta = np.einsum("ikl,k->il", sb.Rhat, y)
    rhat_eta = np.einsum("ikl,k->il", cb.Rhat, y) + 0.25 * L**2 * f.phi.value
    nrm = lambda T: _norm_over_triples(pr, T)  # noqa: E731
    return {
        "rbar": nrm(sb.R),
        "rhat_bar": nrm(sb.Rhat),
        "s": nrm(S),
        "s_gap": nrm(s_gap),
        "eqv_r_lhs": nrm(gap_r),
        "eqv_r_rhs": nrm(s_gap),
        "eqv_r_id": pr.res(gap_r, -0.5 * L * s_gap),
        "eqv_rs_lhs": nrm(gap_rs),
        "eqv_rs_rhs": nrm(S),
        "eqv_rs_id": pr.res(gap_rs, 0.25 * L**2 * S),
        "eqv_rhat_lhs": nrm(rhat_bar_eta),
        "eqv_rhat_rhs": nrm(rhat_eta),
        "eqv_rhat_id": pr.res(rhat_bar_eta, rhat_eta),
    }


def check_theorems_48_to_410(
    spec: MetricSpec,
    seed: int,
    points: int = DEFAULT_POINTS,
    tolerances: dict[str, float] | None = None,
    expected_k0: float | None = -0.25,
) -> list[CheckRecord]:
    """h-isotropy, constant curvature and the vanishing of the special h-curvature on one metric.

    With ``expected_k0`` set, the metric is required to be h-isotropic with
    that scalar and the conclusions of the theorems are checked directly.
    Without it, the equivalences are checked as residual implications.
    """
    tolerances = tolerances or {}
    tol = lambda cid, default: tolerances.get(cid, default)  # noqa: E731
    metric = spec.build()
    label = spec.label
    anchors = METRIC_CHECK_ANCHORS
    if metric.dim < 3:
        return [
            CheckRecord(cid, anchors[cid], label, None, None, tol(cid, 1e-6), None, 0, status="not-applicable")
            for cid in anchors
        ]
    key = _label_key(label)
    pts = sample_points(metric, points, _stream(seed, key, 0))
    probes = [Probe(metric, p, _stream(seed, key, 3, i)) for i, p in enumerate(pts)]

    def quantities(i: int) -> dict:
        pr = probes[i]
        return {
            "iso": _h_isotropy_pairs(pr),
            "cc": _constant_curvature_pairs(pr),
            "cc_bar": _constant_curvature_pairs(pr, curvatures(pr.geom.special.connection).Rhat),
            "thm": _theorem_quantities(pr),
        }

    qs = _map_points(quantities, len(probes))
    k0, iso_res = _fit([p for q in qs for p in q["iso"]])
    k, cc_res = _fit([p for q in qs for p in q["cc"]])
    kbar, ccbar_res = _fit([p for q in qs for p in q["cc_bar"]])
    thm = {name: max(q["thm"][name] for q in qs) for name in qs[0]["thm"]}
    n = len(pts)
    recs = []
    t_iso = tol("theorems.h-isotropic", 1e-6)
    t_cc = tol("theorems.constant-curvature", 1e-6)
    eqv_r = tol("theorems.rbar-vanishes-iff", 1e-6)
    eqv_rs = tol("theorems.rbar-vanishes-iff-s", 1e-6)
    eqv_rhat = tol("theorems.constant-curvature-from-rhat", 1e-6)
    if expected_k0 is not None:
        recs.append(_record("theorems.h-isotropic", anchors["theorems.h-isotropic"], label, None,
                            max(abs(k0 - expected_k0), iso_res), t_iso, n, k0=k0, fit_residual=iso_res))
        recs.append(_record("theorems.constant-curvature", anchors["theorems.constant-curvature"], label, None,
                            max(abs(k - expected_k0), cc_res), t_cc, n, k=k, fit_residual=cc_res))
        recs.append(_record("theorems.rbar-vanishes-iff", anchors["theorems.rbar-vanishes-iff"], label, None,
                            max(thm["rbar"], thm["s_gap"]), eqv_r, n, rbar=thm["rbar"], s_gap=thm["s_gap"]))
        recs.append(_record("theorems.rbar-vanishes-iff-s", anchors["theorems.rbar-vanishes-iff-s"], label, None,
                            max(thm["rbar"], thm["s"]), eqv_rs, n, rbar=thm["rbar"], s=thm["s"]))
        recs.append(_record("theorems.constant-curvature-from-rhat",
                            anchors["theorems.constant-curvature-from-rhat"], label, None,
                            max(thm["rhat_bar"], abs(k - (-0.25)), cc_res), eqv_rhat, n,
                            rhat_bar=thm["rhat_bar"], k=k))
        return recs
    # generic metric: report the fits and test the equivalences as implications
    for cid, value, details in (
        ("theorems.h-isotropic", iso_res, {"k0": k0, "fit_residual": iso_res}),
        ("theorems.constant-curvature", cc_res, {"k": k, "fit_residual": cc_res}),
    ):
        recs.append(CheckRecord(cid, anchors[cid], label, None, None, tol(cid, 1e-6), None, n,
                                status="not-applicable", details=details))
    for cid, tag, t in (
        ("theorems.rbar-vanishes-iff", "eqv_r", eqv_r),
        ("theorems.rbar-vanishes-iff-s", "eqv_rs", eqv_rs),
        ("theorems.constant-curvature-from-rhat", "eqv_rhat", eqv_rhat),
    ):
        lhs, rhs, ident = thm[f"{tag}_lhs"], thm[f"{tag}_rhs"], thm[f"{tag}_id"]
        ok = _implication(lhs, rhs, t)
        residual = ident if ok else max(ident, lhs, rhs)
        recs.append(_record(cid, anchors[cid], label, None, residual, t, n,
                            mode="implication", lhs=lhs, rhs=rhs, identity=ident,
                            h_isotropy_k0=k0, h_isotropy_residual=iso_res))
    return recs


def calibrate(seed: int, points: int = 10) -> tuple[MetricSpec, float]:
    """Pick the dimension-3 metric whose measured h-isotropy scalar is -1/4.

    The scaled hyperbolic metric is measured first; if its scalar comes out
    as +1/4 under the implemented curvature sign, the sphere-type metric
    (scalar -1/4 under that sign) is used instead.
    """
    hyp = MetricSpec("hyperbolic", 3)
    m = hyp.build()
    k0, _ = is_h_isotropic(m, sample_points(m, points, _stream(seed, _label_key(hyp.label), 9)), seed)
    if abs(k0 + 0.25) <= abs(k0 - 0.25):
        return hyp, k0
    return MetricSpec("sphere", 3), k0


def check_axioms(m: FinslerMetric, A: ScalarPiForm, points: Sequence[ChartPoint], seed: int = 0) -> dict[str, float]:
    """Largest residual of each axiom check, the uniqueness probe and the Cartan reduction."""
    out: dict[str, float] = {}
    ids = ["axioms.recurrent", "axioms.vertical-parallel", "axioms.hh-torsion", "axioms.hhv-torsion", "axioms.uniqueness"]
    for pr in _probes(m, points, seed):
        for cid in ids:
            out[cid] = max(out.get(cid, 0.0), _BY_ID[cid].fn(pr, A))
        out["axioms.cartan-reduction"] = max(out.get("axioms.cartan-reduction", 0.0), _cartan_reduction(pr))
    return out


# -- suites -------------------------------------------------------------

def run_suite(
    suite: str,
    seed: int = 0,
    metrics: Sequence[MetricSpec] | None = None,
    forms: Sequence[FormSpec] | None = None,
    points: int = DEFAULT_POINTS,
    tolerances: dict[str, float] | None = None,
) -> VerificationReport:
    """Run a named suite; records are ordered by metric, then check id, then form."""
    if suite not in SUITES:
        raise KeyError(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    ids = SUITES[suite]
    pointwise = [c for c in ids if c in _BY_ID]
    metric_level = [c for c in ids if c in METRIC_CHECK_ANCHORS]
    metric_list = list(metrics) if metrics is not None else default_metrics()
    records: list[CheckRecord] = []
    config: dict = {
        "points": points,
        "metrics": [s.to_dict() for s in metric_list],
        "forms": [f.to_dict() for f in forms] if forms is not None else "default",
        "tolerances": dict(sorted((tolerances or {}).items())),
    }
    for spec in metric_list:
        if pointwise:
            records.extend(run_checks(spec, pointwise, seed, points, forms, tolerances))
    if metric_level:
        target, k0 = calibrate(seed)
        config["calibration"] = {"probe": "hyperbolic3", "k0": k0, "target": target.label}
        if metrics is None:
            records.extend(check_theorems_48_to_410(target, seed, points, tolerances))
            others = [s for s in metric_list if s.label != target.label]
        else:
            others = metric_list
        for spec in others:
            records.extend(check_theorems_48_to_410(spec, seed, points, tolerances, expected_k0=None))
    executed = {r.anchor for r in records if r.status == "executed"}
    required = [a for a in STATEMENTS if any(_anchor_suite(a, s) for s in [suite])]
    missing = [a for a in required if a not in executed] if metrics is None else []
    return VerificationReport(suite, seed, records, config, missing)


def _anchor_suite(anchor: str, suite: str) -> bool:
    ids = SUITES[suite]
    anchors = {_BY_ID[c].anchor for c in ids if c in _BY_ID} | {
        METRIC_CHECK_ANCHORS[c] for c in ids if c in METRIC_CHECK_ANCHORS
    }
    return anchor in anchors
