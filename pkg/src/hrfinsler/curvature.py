"""Torsion and curvature of pullback connections, and the HRF curvature identities.

Curvature tensors use the sign

    K(X, Y) Z = -D_X D_Y Z + D_Y D_X Z + D_[X, Y] Z

evaluated on the connection's own frame ``(delta_k, d/dy^k)``.  This is the
convention under which the Berwald connection satisfies
``D_{beta X} Y = nabla_{beta X} Y + Phat(X, Y)`` and under which the HRF
curvature identities hold; it is the negative of the
``[D_X, D_Y] - D_[X,Y]`` convention.  ``sign=+1`` selects the latter.

Storage layout: ``R[i, j, k, l]`` is the ``i``-th component of
``R(e_k, e_l) e_j`` (the acted-on slot second), and
``Rhat[i, k, l] = R[i, j, k, l] y^j``.  The same layout holds for P
(``k`` horizontal, ``l`` vertical) and S.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .connections import (
    HRFConnection,
    LocalGeometry,
    PullbackConnection,
    ScalarPiForm,
    horizontal_derivative,
)
from .jets import Jet, einsum

__all__ = [
    "CURVATURE_SIGN",
    "CurvatureBundle",
    "torsions",
    "curvatures",
    "random_pi_vectors",
    "tensor_residual",
    "check_hrf_curvature",
    "check_special_phat",
    "check_special_rbar",
]

CURVATURE_SIGN = -1.0


@dataclass
class CurvatureBundle:
    R: np.ndarray
    P: np.ndarray
    S: np.ndarray
    Rhat: np.ndarray
    Phat: np.ndarray
    Shat: np.ndarray
    Q: np.ndarray
    T: np.ndarray
    jets: dict[str, Jet] = field(default_factory=dict, repr=False)


def torsions(D: PullbackConnection) -> tuple[np.ndarray, np.ndarray]:
    """(h)h-torsion ``Q[i, j, k]`` and (h)hv-torsion ``T[i, j, k]``.

    Frame brackets ``[delta_j, delta_k]`` and ``[d/dy^j, delta_k]`` are
    vertical, so only the coefficient terms survive the projection rho.
    """
    F = D.F.value
    return F - F.transpose(0, 2, 1), D.V.value.copy()


def _curvature_jets(D: PullbackConnection) -> dict[str, Jet]:
    N, F, V = D.N, D.F, D.V
    dF_h = horizontal_derivative(F, N)  # [i, l, j, k] = delta_k F[i, l, j]
    dF_v = F.d_y()
    dV_h = horizontal_derivative(V, N)
    dV_v = V.d_y()
    dN_h = horizontal_derivative(N, N)  # [m, k, l] = delta_l N[m, k]
    dN_v = N.d_y()
    bracket_hh = dN_h - einsum("mlk->mkl", dN_h)

    R = (
        einsum("iljk->ijkl", dF_h)
        - einsum("ikjl->ijkl", dF_h)
        + einsum("mlj,ikm->ijkl", F, F)
        - einsum("mkj,ilm->ijkl", F, F)
        - einsum("mkl,imj->ijkl", bracket_hh, V)
    )
    P = (
        einsum("iljk->ijkl", dV_h)
        + einsum("mlj,ikm->ijkl", V, F)
        - einsum("ikjl->ijkl", dF_v)
        - einsum("mkj,ilm->ijkl", F, V)
        - einsum("mkl,imj->ijkl", dN_v, V)
    )
    S = (
        einsum("iljk->ijkl", dV_v)
        - einsum("ikjl->ijkl", dV_v)
        + einsum("mlj,ikm->ijkl", V, V)
        - einsum("mkj,ilm->ijkl", V, V)
    )
    return {"R": R, "P": P, "S": S}


def curvatures(D: PullbackConnection, sign: float = CURVATURE_SIGN) -> CurvatureBundle:
    """h-, hv- and v-curvature of ``D`` with their contractions by eta."""
    if D.order < 1:
        raise ValueError("curvature needs connection coefficients exact to order >= 1")
    cache = D.__dict__.setdefault("_curvature_cache", {})
    if sign in cache:
        return cache[sign]
    std = _curvature_jets(D)
    cj = {k: v * -1.0 if sign < 0 else v for k, v in std.items()}
    y = np.asarray(D.point.y)
    vals = {k: v.value for k, v in cj.items()}
    Q, T = torsions(D)
    cache[sign] = CurvatureBundle(
        R=vals["R"],
        P=vals["P"],
        S=vals["S"],
        Rhat=np.einsum("ijkl,j->ikl", vals["R"], y),
        Phat=np.einsum("ijkl,j->ikl", vals["P"], y),
        Shat=np.einsum("ijkl,j->ikl", vals["S"], y),
        Q=Q,
        T=T,
        jets=cj,
    )
    return cache[sign]


# -- residual machinery -------------------------------------------------------------

def random_pi_vectors(rng: np.random.Generator, y, count: int, min_angle: float = 1e-3) -> np.ndarray:
    """Draw ``count`` vectors uniformly from the cube, rejecting near-multiples of y."""
    y = np.asarray(y, dtype=float)
    yn = y / np.linalg.norm(y)
    out = []
    while len(out) < count:
        v = rng.uniform(-1.0, 1.0, size=y.shape)
        nv = np.linalg.norm(v)
        if nv == 0:
            continue
        cos = abs(float(v @ yn)) / nv
        if np.arccos(min(1.0, cos)) < min_angle:
            continue
        out.append(v)
    return np.array(out)


def tensor_residual(lhs, rhs, vectors: np.ndarray | None = None) -> float:
    """Max deviation over components and random argument triples, relative to ``1 + |lhs|``.

    Axis 0 of the tensors is the output index; the other axes are arguments.
    ``vectors`` has shape ``(triples, slots, n)``.
    """
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if lhs.shape != rhs.shape:
        raise ValueError(f"shape mismatch {lhs.shape} vs {rhs.shape}")
    diff = lhs - rhs
    if vectors is None or lhs.ndim <= 1:
        return float(np.max(np.abs(diff), initial=0.0) / (1.0 + np.max(np.abs(lhs), initial=0.0)))
    d = _contract_all(diff, vectors)
    l = _contract_all(lhs, vectors)
    return float(np.max(np.abs(d))) / (1.0 + float(np.max(np.abs(l))))


def _contract_all(T: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Contract tensor axis ``a >= 1`` with ``vectors[:, a - 1]`` for every triple at once."""
    r = T.ndim
    t = r  # label for the triple axis
    ops: list = [T, list(range(r))]
    for a in range(1, r):
        ops += [vectors[:, a - 1], [t, a]]
    return np.einsum(*ops, [t, 0])


def _draw(rng, y, triples: int = 20, slots: int = 3) -> np.ndarray:
    flat = random_pi_vectors(rng, y, triples * slots)
    return flat.reshape(triples, slots, len(y))


# -- HRF identities -------------------------------------------------------------

def nabla_along_new_horizontal(h: HRFConnection, T: Jet, signature: str) -> Jet:
    """Cartan covariant derivative along the HRF horizontal map ``beta + gamma X_t``."""
    cart = h.geom.cartan
    hT = cart.h_derivative(T, signature)
    vT = cart.v_derivative(T, signature)
    rank = len(signature)
    letters = "abcdefgh"[:rank]
    return hT + einsum(f"{letters}y,yz->{letters}z", vT, h.shift)


def hrf_curvature_terms(geom: LocalGeometry, A: ScalarPiForm) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Both sides of the v-, hv- and h-curvature relations between HRF and Cartan."""
    h = geom.hrf(A)
    cart = geom.cartan
    cb = curvatures(cart)
    hb = curvatures(h.connection)
    f = geom.field
    L = f.L.value
    ell = f.ell.value
    V = cart.V.value
    Nj = h.deformation
    N = Nj.value
    abar = h.abar.value
    A_eta = float(h.A_eta.value)
    Ta = h.T_abar.value
    Xt = h.shift.value
    P, S, R = cb.P, cb.S, cb.R

    vN = cart.v_derivative(Nj, "udd").value  # [i, a, b, m] = (nabla_{gamma e_m} N)(e_a, e_b)
    rhs_b = (
        P
        + np.einsum("ikjl->ijkl", vN)
        + np.einsum("clk,icj->ijkl", V, N)
        + 0.5
        * (
            A_eta * S
            - L * np.einsum("ijal,a,k->ijkl", S, abar, ell)
            + L**2 * np.einsum("ijcl,ck->ijkl", S, Ta)
        )
    )

    bN = nabla_along_new_horizontal(h, Nj, "udd").value
    B = (
        np.einsum("ikjl->ijkl", bN)
        + np.einsum("ilc,ckj->ijkl", N, N)
        + np.einsum("icj,cak,al->ijkl", N, V, Xt)
    )
    rhs_c = (
        R
        + np.einsum("ijkc,cl->ijkl", P, Xt)
        - np.einsum("ijlc,ck->ijkl", P, Xt)
        + np.einsum("ijab,ak,bl->ijkl", S, Xt, Xt)
        + (B - B.transpose(0, 1, 3, 2))
    )
    return {"a": (hb.S, S), "b": (hb.P, rhs_b), "c": (hb.R, rhs_c)}


def check_hrf_curvature(geom: LocalGeometry, A: ScalarPiForm, rng: np.random.Generator) -> dict[str, float]:
    vecs = _draw(rng, geom.point.y)
    return {k: tensor_residual(l, r, vecs) for k, (l, r) in hrf_curvature_terms(geom, A).items()}


def special_phat_terms(geom: LocalGeometry) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Both sides of the (v)hv-torsion relations of the special HRF-connection."""
    f = geom.field
    n = geom.n
    eye = np.eye(n)
    y = np.asarray(geom.point.y)
    L = f.L.value
    ell = f.ell.value
    g = f.g.value
    hbar = f.hbar.value
    phi = f.phi.value
    C = f.C.value
    cart = geom.cartan
    cb = curvatures(cart)
    sb = curvatures(geom.special.connection)
    V = cart.V.value
    Phat_bar = sb.Phat

    full_rhs = (
        cb.P
        + 0.5
        * (
            L * cb.S
            + np.einsum("klj,i->ijkl", C, y) / L
            - np.einsum("j,ikl->ijkl", ell, V)
        )
        - (0.5 / L)
        * (
            np.einsum("lj,ik->ijkl", hbar, eye)
            + np.einsum("lk,ij->ijkl", hbar, eye)
            - np.einsum("kj,il->ijkl", g, phi)
        )
    )
    pp_rhs = cb.Phat - 0.5 * (
        L * V - np.einsum("k,il->ikl", ell, eye) + np.einsum("kl,i->ikl", g, y) / L
    )
    skew_lhs = Phat_bar - Phat_bar.transpose(0, 2, 1)
    skew_rhs = 0.5 * (np.einsum("k,il->ikl", ell, eye) - np.einsum("l,ik->ikl", ell, eye))
    # single-output tensors: put a dummy output axis first
    vert_lhs = np.einsum("im,m,ikl->kl", g, y, Phat_bar)[None]
    # degree-consistent form of the vertical part; the unscaled -hbar/2 is kept
    # separately so the discrepancy stays visible
    vert_rhs = (-0.5 * L * hbar)[None]
    return {
        "full": (sb.P, full_rhs),
        "pp": (Phat_bar, pp_rhs),
        "skew": (skew_lhs, skew_rhs),
        "vertical": (vert_lhs, vert_rhs),
        "vertical_unscaled": (vert_lhs, (-0.5 * hbar)[None]),
    }


def check_special_phat(geom: LocalGeometry, rng: np.random.Generator) -> dict[str, float]:
    """Residuals of the special-HRF (v)hv-torsion identities plus the non-vanishing ratio.

    ``nonvanishing`` is ``max|Phat_bar| / L``; the torsion is certified
    non-zero when it is at least 0.01.
    """
    vecs = _draw(rng, geom.point.y)
    terms = special_phat_terms(geom)
    out = {k: tensor_residual(l, r, vecs) for k, (l, r) in terms.items()}
    Phat_bar = terms["pp"][0]
    out["nonvanishing"] = float(np.max(np.abs(Phat_bar)) / geom.L.value)
    return out


def nabla_eta_S(geom: LocalGeometry) -> np.ndarray:
    """``(nabla_{beta eta} S)`` of the Cartan connection in the curvature layout."""
    cart = geom.cartan
    S = curvatures(cart).jets["S"]
    if S.order < 1:
        raise ValueError("derivative of S needs a LocalGeometry of jet order >= 5")
    hS = cart.h_derivative(S, "uddd").value
    return np.einsum("ijklm,m->ijkl", hS, np.asarray(geom.point.y))


def special_rbar_terms(geom: LocalGeometry) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    f = geom.field
    eye = np.eye(geom.n)
    L = f.L.value
    g = f.g.value
    ell = f.ell.value
    cb = curvatures(geom.cartan)
    sb = curvatures(geom.special.connection)
    P_skew = cb.P - cb.P.transpose(0, 1, 3, 2)
    rbar_rhs = (
        cb.R
        + 0.25 * L**2 * cb.S
        + 0.5 * L * P_skew
        + 0.25 * (np.einsum("kj,il->ijkl", g, eye) - np.einsum("lj,ik->ijkl", g, eye))
    )
    rhat_rhs = cb.Rhat + 0.25 * L * (np.einsum("k,il->ikl", ell, eye) - np.einsum("l,ik->ikl", ell, eye))
    out = {"rbar": (sb.R, rbar_rhs), "rhat": (sb.Rhat, rhat_rhs)}
    if geom.field.ctx.order >= 5:
        out["pskew"] = (P_skew, -nabla_eta_S(geom))
    return out


def check_special_rbar(geom: LocalGeometry, rng: np.random.Generator) -> dict[str, float]:
    vecs = _draw(rng, geom.point.y)
    return {k: tensor_residual(l, r, vecs) for k, (l, r) in special_rbar_terms(geom).items()}
