"""Finite-difference oracles, independent of the jet machinery.

Mixed partials use tensor products of central difference stencils and
Richardson extrapolation in h^2.  Functions are evaluated on plain numpy
arrays, so nothing here touches :mod:`hrfinsler.jets`.  Sample points are
carried in ``np.longdouble``: fourth-order stencils lose about
``eps / h^4`` to cancellation, and the wider mantissa (x86 extended
precision) keeps that loss well below the tolerances checked against.
"""

from __future__ import annotations

import itertools
from math import comb

import numpy as np


def _stencil(k: int) -> list[tuple[float, float]]:
    """Offsets (in units of h) and weights of the k-th central difference."""
    return [(k / 2.0 - i, (-1) ** i * comb(k, i)) for i in range(k + 1)]


def central_partial(f, z: np.ndarray, alpha: tuple[int, ...], h: float) -> float:
    """Plain central difference for the mixed partial ``d^alpha f`` at ``z``."""
    axes = [i for i, k in enumerate(alpha) if k]
    stencils = [_stencil(alpha[i]) for i in axes]
    total = np.longdouble(0)
    for combo in itertools.product(*stencils):
        dz = np.zeros_like(z)
        w = 1.0
        for i, (off, wt) in zip(axes, combo):
            dz[i] = off * h
            w *= wt
        total += w * f(z + dz)
    return total / h ** sum(alpha)


def richardson_partial(f, z, alpha, h: float = 0.08, levels: int = 4) -> float:
    """Central differences at h, h/2, ... combined by Richardson extrapolation."""
    z = np.asarray(z, dtype=np.longdouble)
    if sum(alpha) == 0:
        return float(f(z))
    table = [central_partial(f, z, alpha, np.longdouble(h) / 2**j) for j in range(levels)]
    for m in range(1, levels):
        factor = 4.0**m
        table = [(factor * table[j + 1] - table[j]) / (factor - 1) for j in range(len(table) - 1)]
    return float(table[0])


def fd_jacobian(f, z, h: float = 1e-3) -> np.ndarray:
    """Jacobian of a vector function by Richardson-extrapolated central differences."""
    z = np.asarray(z, dtype=float)
    f0 = np.asarray(f(z), dtype=float)
    cols = []
    for i in range(len(z)):
        alpha = tuple(1 if j == i else 0 for j in range(len(z)))
        comp = [richardson_partial(lambda w, c=c: np.asarray(f(w), dtype=float).ravel()[c], z, alpha, h, 3)
                for c in range(f0.size)]
        cols.append(np.array(comp).reshape(f0.shape))
    return np.stack(cols, axis=-1)


def christoffel(a, x, h: float = 1e-2) -> np.ndarray:
    """``gamma[i, j, k]`` of the matrix field ``a(x)`` via FD of ``a``."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    amat = lambda w: np.array([[float(v) for v in row] for row in a(w)])  # noqa: E731
    da = fd_jacobian(amat, x, h)  # [l, k, j] = d a_lk / dx^j
    ainv = np.linalg.inv(amat(x))
    t = np.einsum("lkj->ljk", da) + np.einsum("jlk->ljk", da) - np.einsum("jkl->ljk", da)
    return 0.5 * np.einsum("il,ljk->ijk", ainv, t)


def riemann(a, x, h: float = 1e-2) -> np.ndarray:
    """``R[i, j, k, l]``: component i of ``(nabla_k nabla_l - nabla_l nabla_k) d_j`` from FD Christoffels."""
    x = np.asarray(x, dtype=float)
    G = christoffel(a, x, h)
    dG = fd_jacobian(lambda w: christoffel(a, w, h), x, h)  # [i, j, k, m] = d_m gamma^i_jk
    return (
        np.einsum("iljk->ijkl", dG)
        - np.einsum("ikjl->ijkl", dG)
        + np.einsum("ikm,mlj->ijkl", G, G)
        - np.einsum("ilm,mkj->ijkl", G, G)
    )


def multi_indices(nvars: int, max_order: int):
    for k in range(max_order + 1):
        for combo in itertools.combinations_with_replacement(range(nvars), k):
            alpha = [0] * nvars
            for c in combo:
                alpha[c] += 1
            yield tuple(alpha)


def scalar_of_L(metric, n: int, power: int = 2):
    """``z -> L(x, y)^power`` on a flat float vector ``z = (x, y)``."""

    def f(z):
        z = np.asarray(z, dtype=np.longdouble)
        return np.longdouble(metric.L(z[:n], z[n:])) ** power

    return f
