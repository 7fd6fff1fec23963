"""Truncated multivariate Taylor jets in the chart variables (x, y).

A jet stores the Taylor coefficients ``d^alpha f / alpha!`` of a function at
the expansion point for every multi-index ``|alpha| <= order`` over the
``2n`` variables ``x^1..x^n, y^1..y^n``.  Coefficients live densely along the
last axis in graded order, so the coefficients of degree ``<= k`` are always a
prefix of the array.  A jet may carry leading tensor axes; arithmetic is then
elementwise over those axes and :func:`einsum` contracts them.

Differentiating a jet of order ``k`` yields an exact jet of order ``k - 1``.
Every jet therefore carries its own truncation order, and binary operations
work at the smaller of the two orders.
"""

from __future__ import annotations

import itertools
import math
import string
from functools import lru_cache
from typing import Sequence

import numpy as np

__all__ = [
    "JetContext",
    "Jet",
    "JetDomainError",
    "get_context",
    "jet_variable",
    "jet_constant",
    "point_jets",
    "extract_partial",
    "einsum",
    "stack",
    "sqrt",
    "exp",
    "sin",
    "cos",
]


class JetDomainError(ArithmeticError):
    """Raised when a jet operation leaves the domain of the scalar function."""


class JetContext:
    """Shared multi-index bookkeeping for jets in ``2n`` variables."""

    def __init__(self, n: int, order: int = 4):
        if int(n) != n or n < 2:
            raise ValueError(f"chart dimension must be an integer >= 2, got {n}")
        if int(order) != order or order < 0:
            raise ValueError(f"jet order must be a non-negative integer, got {order}")
        self.n = int(n)
        self.order = int(order)
        self.nvars = 2 * self.n

        alphas = [np.zeros(self.nvars, dtype=np.int64)]
        for degree in range(1, self.order + 1):
            for combo in itertools.combinations_with_replacement(range(self.nvars), degree):
                alpha = np.zeros(self.nvars, dtype=np.int64)
                for v in combo:
                    alpha[v] += 1
                alphas.append(alpha)
        self.alphas = np.array(alphas, dtype=np.int64)
        self.degrees = self.alphas.sum(axis=1)
        self.sizes = [int(np.count_nonzero(self.degrees <= k)) for k in range(self.order + 1)]
        self.factorials = np.array(
            [math.prod(math.factorial(int(a)) for a in alpha) for alpha in self.alphas],
            dtype=float,
        )
        self._base = self.order + 1
        self._weights = self._base ** np.arange(self.nvars, dtype=np.int64)
        codes = self.alphas @ self._weights
        self._lookup = np.full(self._base**self.nvars, -1, dtype=np.int64)
        self._lookup[codes] = np.arange(len(self.alphas))
        self._mul_tables: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
        self._diff_tables: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}

    def __repr__(self) -> str:
        return f"JetContext(n={self.n}, order={self.order})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, JetContext) and (other.n, other.order) == (self.n, self.order)

    def __hash__(self) -> int:
        return hash((self.n, self.order))

    def index_of(self, alpha: Sequence[int]) -> int:
        alpha = np.asarray(alpha, dtype=np.int64)
        if alpha.shape != (self.nvars,) or np.any(alpha < 0):
            raise ValueError(f"multi-index must have {self.nvars} non-negative entries")
        if alpha.sum() > self.order:
            raise ValueError(f"|alpha| = {alpha.sum()} exceeds context order {self.order}")
        return int(self._lookup[alpha @ self._weights])

    def mul_table(self, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Index pairs ``(a, b)`` with ``|a| + |b| <= k``, sorted by product index.

        Returns ``(ia, ib, starts)`` where ``starts`` are the segment offsets for
        ``np.add.reduceat``.
        """
        if k not in self._mul_tables:
            m = self.sizes[k]
            ia, ib = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
            ia, ib = ia.ravel(), ib.ravel()
            keep = self.degrees[ia] + self.degrees[ib] <= k
            ia, ib = ia[keep], ib[keep]
            ic = self._lookup[(self.alphas[ia] + self.alphas[ib]) @ self._weights]
            perm = np.argsort(ic, kind="stable")
            ia, ib, ic = ia[perm], ib[perm], ic[perm]
            starts = np.searchsorted(ic, np.arange(m))
            self._mul_tables[k] = (ia, ib, starts)
        return self._mul_tables[k]

    def diff_table(self, k: int, var: int) -> tuple[np.ndarray, np.ndarray]:
        """Source indices and factors for differentiating an order-``k`` jet."""
        key = (k, var)
        if key not in self._diff_tables:
            m = self.sizes[k - 1]
            shifted = self.alphas[:m].copy()
            shifted[:, var] += 1
            src = self._lookup[shifted @ self._weights]
            factor = shifted[:, var].astype(float)
            self._diff_tables[key] = (src, factor)
        return self._diff_tables[key]


@lru_cache(maxsize=None)
def get_context(n: int, order: int = 4) -> JetContext:
    """Cached :class:`JetContext` for ``(n, order)``."""
    return JetContext(n, order)


def _as_float_array(value) -> np.ndarray:
    return np.asarray(value, dtype=float)


class Jet:
    """Truncated Taylor expansion, optionally tensor-valued."""

    __slots__ = ("ctx", "order", "coeffs")
    __array_ufunc__ = None

    def __init__(self, ctx: JetContext, coeffs: np.ndarray, order: int | None = None):
        order = ctx.order if order is None else int(order)
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape[-1] != ctx.sizes[order]:
            raise ValueError(
                f"coefficient axis has length {coeffs.shape[-1]}, expected {ctx.sizes[order]}"
            )
        self.ctx = ctx
        self.order = order
        self.coeffs = coeffs

    # -- structure ---------------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[:-1]

    @property
    def value(self):
        v = self.coeffs[..., 0]
        return float(v) if v.ndim == 0 else v.copy()

    def __repr__(self) -> str:
        return f"Jet(shape={self.shape}, order={self.order}, value={self.value!r})"

    def __len__(self) -> int:
        if not self.shape:
            raise TypeError("scalar jet has no length")
        return self.shape[0]

    def __getitem__(self, item) -> "Jet":
        if not isinstance(item, tuple):
            item = (item,)
        if Ellipsis in item:
            item = item + (slice(None),)
        return Jet(self.ctx, self.coeffs[item], self.order)

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def truncate(self, k: int) -> "Jet":
        if k > self.order:
            raise ValueError(f"cannot raise jet order from {self.order} to {k}")
        if k == self.order:
            return self
        return Jet(self.ctx, self.coeffs[..., : self.ctx.sizes[k]], k)

    def reshape(self, *shape) -> "Jet":
        return Jet(self.ctx, self.coeffs.reshape(*shape, self.coeffs.shape[-1]), self.order)

    def copy(self) -> "Jet":
        return Jet(self.ctx, self.coeffs.copy(), self.order)

    # -- arithmetic --------------------------------------------------------
    def _check(self, other: "Jet") -> None:
        if other.ctx != self.ctx:
            raise ValueError(f"jet context mismatch: {self.ctx} vs {other.ctx}")

    def _with_constant(self, c, sign: float = 1.0) -> "Jet":
        c = _as_float_array(c)
        shape = np.broadcast_shapes(self.shape, c.shape)
        out = np.broadcast_to(sign * self.coeffs, shape + self.coeffs.shape[-1:]).copy()
        out[..., 0] += c
        return Jet(self.ctx, out, self.order)

    def __add__(self, other):
        if isinstance(other, Jet):
            self._check(other)
            k = min(self.order, other.order)
            return Jet(self.ctx, self.truncate(k).coeffs + other.truncate(k).coeffs, k)
        return self._with_constant(other)

    __radd__ = __add__

    def __neg__(self) -> "Jet":
        return Jet(self.ctx, -self.coeffs, self.order)

    def __pos__(self) -> "Jet":
        return self

    def __sub__(self, other):
        if isinstance(other, Jet):
            return self + (-other)
        return self._with_constant(-_as_float_array(other))

    def __rsub__(self, other):
        return (-self)._with_constant(other)

    def __mul__(self, other):
        if isinstance(other, Jet):
            self._check(other)
            k = min(self.order, other.order)
            ia, ib, starts = self.ctx.mul_table(k)
            a = self.truncate(k).coeffs
            b = other.truncate(k).coeffs
            prod = a[..., ia] * b[..., ib]
            return Jet(self.ctx, np.add.reduceat(prod, starts, axis=-1), k)
        c = _as_float_array(other)
        return Jet(self.ctx, self.coeffs * c[..., None], self.order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        c = _as_float_array(other)
        if np.any(c == 0):
            raise JetDomainError("division by zero")
        return Jet(self.ctx, self.coeffs / c[..., None], self.order)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, r):
        if isinstance(r, Jet):
            raise TypeError("jet exponents must be real constants")
        return self.power(float(r))

    # -- univariate composition ----------------------------------------------
    def compose(self, taylor: Sequence[np.ndarray]) -> "Jet":
        """Compose with a univariate function given ``f^(m)(a0)/m!`` for m = 0..order."""
        h = self.copy()
        h.coeffs[..., 0] = 0.0
        k = self.order
        result = Jet(self.ctx, np.zeros(self.coeffs.shape), k)
        result.coeffs[..., 0] = taylor[k]
        for m in range(k - 1, -1, -1):
            result = result * h
            result.coeffs[..., 0] += taylor[m]
        return result

    def power(self, r: float) -> "Jet":
        a0 = self.coeffs[..., 0]
        integral = float(r).is_integer()
        if not integral and np.any(a0 <= 0):
            raise JetDomainError(f"non-integer power {r} of a jet with non-positive value")
        if integral and r < 0 and np.any(a0 == 0):
            raise JetDomainError("negative power of a jet with zero value")
        if integral and r >= 0:
            rr = int(r)
            if rr == 0:
                return Jet(self.ctx, np.zeros_like(self.coeffs), self.order)._with_constant(
                    np.ones(self.shape)
                )
            result = self
            for _ in range(rr - 1):
                result = result * self
            return result
        taylor = []
        coef = 1.0
        for m in range(self.order + 1):
            taylor.append(coef * a0 ** (r - m))
            coef *= (r - m) / (m + 1)
        return self.compose(taylor)

    def reciprocal(self) -> "Jet":
        if np.any(self.coeffs[..., 0] == 0):
            raise JetDomainError("division by a jet with zero value")
        return self.power(-1.0)

    def sqrt(self) -> "Jet":
        if np.any(self.coeffs[..., 0] <= 0):
            raise JetDomainError("sqrt of a jet with non-positive value")
        return self.power(0.5)

    def exp(self) -> "Jet":
        e = np.exp(self.coeffs[..., 0])
        return self.compose([e / math.factorial(m) for m in range(self.order + 1)])

    def sin(self) -> "Jet":
        a0 = self.coeffs[..., 0]
        cyc = [np.sin(a0), np.cos(a0), -np.sin(a0), -np.cos(a0)]
        return self.compose([cyc[m % 4] / math.factorial(m) for m in range(self.order + 1)])

    def cos(self) -> "Jet":
        a0 = self.coeffs[..., 0]
        cyc = [np.cos(a0), -np.sin(a0), -np.cos(a0), np.sin(a0)]
        return self.compose([cyc[m % 4] / math.factorial(m) for m in range(self.order + 1)])

    # -- differentiation -----------------------------------------------------
    def diff(self, var: int) -> "Jet":
        """Exact partial derivative along chart variable ``var`` (order drops by one)."""
        if not 0 <= var < self.ctx.nvars:
            raise IndexError(f"variable index {var} out of range 0..{self.ctx.nvars - 1}")
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        src, factor = self.ctx.diff_table(self.order, var)
        return Jet(self.ctx, self.coeffs[..., src] * factor, self.order - 1)

    def d_x(self) -> "Jet":
        """Gradient in x, appended as the last tensor axis."""
        return stack([self.diff(i) for i in range(self.ctx.n)], axis=-1)

    def d_y(self) -> "Jet":
        """Gradient in y, appended as the last tensor axis."""
        n = self.ctx.n
        return stack([self.diff(n + i) for i in range(n)], axis=-1)


def jet_constant(ctx: JetContext, value, order: int | None = None) -> Jet:
    value = _as_float_array(value)
    order = ctx.order if order is None else order
    coeffs = np.zeros(value.shape + (ctx.sizes[order],))
    coeffs[..., 0] = value
    return Jet(ctx, coeffs, order)


def jet_variable(ctx: JetContext, index: int, value: float) -> Jet:
    """Jet of the coordinate function ``index`` (x's first, then y's)."""
    if not 0 <= index < ctx.nvars:
        raise IndexError(f"variable index {index} out of range 0..{ctx.nvars - 1}")
    coeffs = np.zeros(ctx.sizes[ctx.order])
    coeffs[0] = float(value)
    if ctx.order >= 1:
        coeffs[1 + index] = 1.0
    return Jet(ctx, coeffs)


def point_jets(ctx: JetContext, x: Sequence[float], y: Sequence[float]) -> tuple[Jet, Jet]:
    """Vector jets of the coordinate functions x and y at a chart point."""
    n = ctx.n
    if len(x) != n or len(y) != n:
        raise ValueError(f"expected {n} base and {n} fiber coordinates")
    xs = stack([jet_variable(ctx, i, x[i]) for i in range(n)])
    ys = stack([jet_variable(ctx, n + i, y[i]) for i in range(n)])
    return xs, ys


def extract_partial(j: Jet, alpha: Sequence[int]):
    """Raw mixed partial ``d^alpha f`` at the expansion point."""
    if sum(alpha) > j.order:
        raise ValueError(f"|alpha| = {sum(alpha)} exceeds jet order {j.order}")
    idx = j.ctx.index_of(alpha)
    return j.coeffs[..., idx] * j.ctx.factorials[idx]


def stack(jets: Sequence[Jet], axis: int = 0) -> Jet:
    jets = list(jets)
    ctx = jets[0].ctx
    k = min(j.order for j in jets)
    for j in jets:
        if j.ctx != ctx:
            raise ValueError("jet context mismatch in stack")
    if axis < 0:
        axis = jets[0].coeffs.ndim - 1 + axis + 1
    return Jet(ctx, np.stack([j.truncate(k).coeffs for j in jets], axis=axis), k)


_JET_AXIS = "Z"


def _pair_einsum(sa: str, a, sb: str, b, sout: str):
    ja, jb = isinstance(a, Jet), isinstance(b, Jet)
    if ja and jb:
        a._check(b)
        k = min(a.order, b.order)
        ia, ib, starts = a.ctx.mul_table(k)
        pa = a.truncate(k).coeffs[..., ia]
        pb = b.truncate(k).coeffs[..., ib]
        prod = np.einsum(f"{sa}{_JET_AXIS},{sb}{_JET_AXIS}->{sout}{_JET_AXIS}", pa, pb, optimize=True)
        return Jet(a.ctx, np.add.reduceat(prod, starts, axis=-1), k)
    if ja:
        return Jet(a.ctx, np.einsum(f"{sa}{_JET_AXIS},{sb}->{sout}{_JET_AXIS}", a.coeffs, b), a.order)
    if jb:
        return Jet(b.ctx, np.einsum(f"{sa},{sb}{_JET_AXIS}->{sout}{_JET_AXIS}", a, b.coeffs), b.order)
    return np.einsum(f"{sa},{sb}->{sout}", a, b)


def einsum(subscripts: str, *operands):
    """Einstein summation over tensor axes of jets and constant arrays.

    Jet operands are multiplied as truncated series; the subscripts refer to
    tensor axes only and must use lowercase letters.
    """
    subscripts = subscripts.replace(" ", "")
    lhs, out = subscripts.split("->")
    terms = lhs.split(",")
    if len(terms) != len(operands):
        raise ValueError("number of subscripts does not match number of operands")
    for t in terms + [out]:
        if any(c not in string.ascii_lowercase for c in t):
            raise ValueError(f"jet einsum subscripts must be lowercase letters: {t!r}")
    ops = [o if isinstance(o, Jet) else _as_float_array(o) for o in operands]
    if len(ops) == 1:
        o = ops[0]
        if isinstance(o, Jet):
            return Jet(o.ctx, np.einsum(f"{terms[0]}{_JET_AXIS}->{out}{_JET_AXIS}", o.coeffs), o.order)
        return np.einsum(subscripts, o)
    cur, cur_s = ops[0], terms[0]
    for i in range(1, len(ops)):
        rest = "".join(terms[i + 1:]) + out
        nxt_s = terms[i]
        keep = []
        for c in cur_s + nxt_s:
            if c in rest and c not in keep:
                keep.append(c)
        inter = "".join(keep) if i < len(ops) - 1 else out
        cur = _pair_einsum(cur_s, cur, nxt_s, ops[i], inter)
        cur_s = inter
    return cur


def sqrt(v):
    return v.sqrt() if isinstance(v, Jet) else np.sqrt(v)


def exp(v):
    return v.exp() if isinstance(v, Jet) else np.exp(v)


def sin(v):
    return v.sin() if isinstance(v, Jet) else np.sin(v)


def cos(v):
    return v.cos() if isinstance(v, Jet) else np.cos(v)
