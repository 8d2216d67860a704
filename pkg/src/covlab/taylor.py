"""Truncated multivariate Taylor arithmetic (forward mode, exact to the truncation order).

A :class:`Taylor` value stores the coefficients of a polynomial

    sum_alpha  c[alpha] * (x - x0)^alpha,       |alpha| <= order,

so ``partial^alpha f (x0) = alpha! * c[alpha]``.  Propagating these through
+, -, *, /, integer powers and sin/cos/exp/sqrt yields *exact* derivatives of
the composite expression (no truncation error below the chosen order), which
is what every "partial with respect to a jet coordinate" in this package is
built from.  Only total derivatives along the base manifold use finite
differences, elsewhere in the package.

Coefficient layout is graded: index 0 is the constant term, indices
1..nvars are the first-order terms in variable order, then degree 2, etc.
This makes first-order spaces usable as plain dual numbers with the gradient
sitting in ``c[1:]``.

Coefficients may carry one trailing batch axis: a value with ``c`` of shape
(nterms, B) is B independent Taylor values sharing the same variable wiring,
propagated through every operation elementwise.  Mixing batched and unbatched
values broadcasts the unbatched one across the batch.  This is purely an
amortization of per-operation overhead; results are bit-identical to running
the points one by one.
"""

from __future__ import annotations

import math
from itertools import combinations_with_replacement

import numpy as np

from .errors import DomainError

_DIV_FLOOR = 1e-150  # constant terms below this magnitude are treated as 0 for 1/x


def _exponents(nvars: int, order: int) -> list[tuple[int, ...]]:
    """All exponent multi-indices with total degree <= order, graded order."""
    exps: list[tuple[int, ...]] = []
    for deg in range(order + 1):
        block = []
        for combo in combinations_with_replacement(range(nvars), deg):
            alpha = [0] * nvars
            for v in combo:
                alpha[v] += 1
            block.append(tuple(alpha))
        # within a degree, sort for a reproducible layout; degree 1 must come
        # out in plain variable order, which sorting descending provides
        block.sort(reverse=True)
        exps.extend(block)
    return exps


class TaylorSpace:
    """Shared immutable data for all Taylor values with the same (nvars, order)."""

    _cache: dict[tuple[int, int], "TaylorSpace"] = {}

    def __new__(cls, nvars: int, order: int):
        key = (nvars, order)
        space = cls._cache.get(key)
        if space is None:
            space = super().__new__(cls)
            space._init(nvars, order)
            cls._cache[key] = space
        return space

    def _init(self, nvars: int, order: int) -> None:
        if nvars < 1 or order < 0:
            raise ValueError("need nvars >= 1 and order >= 0")
        self.nvars = nvars
        self.order = order
        self.exponents = _exponents(nvars, order)
        self.nterms = len(self.exponents)
        self.index = {alpha: i for i, alpha in enumerate(self.exponents)}
        self.degree = np.array([sum(a) for a in self.exponents])
        self.factorial = np.array(
            [math.prod(math.factorial(k) for k in a) for a in self.exponents],
            dtype=float,
        )
        self._mul_table: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None

    def mul_table(self):
        """(i, j, k) index triples with exps[i] + exps[j] = exps[k]; built lazily."""
        if self._mul_table is None:
            ii, jj, kk = [], [], []
            exps = self.exponents
            for i, a in enumerate(exps):
                da = sum(a)
                for j, b in enumerate(exps):
                    if da + sum(b) > self.order:
                        continue
                    ii.append(i)
                    jj.append(j)
                    kk.append(self.index[tuple(x + y for x, y in zip(a, b))])
            self._mul_table = (np.array(ii), np.array(jj), np.array(kk))
        return self._mul_table

    # ---- constructors -------------------------------------------------

    def constant(self, value) -> "Taylor":
        """A constant; a 1-d ``value`` makes a batched constant."""
        value = np.asarray(value, dtype=float)
        c = np.zeros((self.nterms,) + value.shape)
        c[0] = value
        return Taylor(self, c)

    def variable(self, i: int, value) -> "Taylor":
        """The i-th coordinate centred at ``value`` (scalar or batch vector)."""
        value = np.asarray(value, dtype=float)
        c = np.zeros((self.nterms,) + value.shape)
        c[0] = value
        if self.order >= 1:
            c[1 + i] = 1.0
        return Taylor(self, c)

    def variables(self, values) -> list["Taylor"]:
        return [self.variable(i, v) for i, v in enumerate(values)]


def _align(a: np.ndarray, b: np.ndarray):
    """Give two coefficient arrays matching ranks (batched vs unbatched)."""
    if a.ndim == b.ndim:
        return a, b
    if a.ndim < b.ndim:
        return a[..., None], b
    return a, b[..., None]


class Taylor:
    """A truncated Taylor polynomial; supports arithmetic with floats and peers."""

    __slots__ = ("space", "c")

    # keep numpy from absorbing us into object arrays: ndarray <op> Taylor
    # must fall through to our reflected methods
    __array_ufunc__ = None

    def __init__(self, space: TaylorSpace, c: np.ndarray):
        self.space = space
        self.c = c

    # ---- extraction ----------------------------------------------------

    @property
    def value(self):
        """Constant term: float, or the batch vector for batched values."""
        v = self.c[0]
        return float(v) if v.ndim == 0 else v

    def gradient(self) -> np.ndarray:
        """First partials with respect to each variable (order >= 1)."""
        if self.space.order < 1:
            raise DomainError("order-0 value has no gradient")
        return self.c[1 : 1 + self.space.nvars].copy()

    def partial(self, alpha: tuple[int, ...]):
        """Exact partial derivative with multi-index alpha."""
        i = self.space.index[alpha]
        v = self.c[i] * self.space.factorial[i]
        return float(v) if v.ndim == 0 else v

    # ---- ring operations -------------------------------------------------

    def _lift(self, other):
        if isinstance(other, Taylor):
            if other.space is not self.space:
                raise ValueError("mixing Taylor values from different spaces")
            return other
        return None

    def _scalar_ready(self, other):
        """Coefficients shaped so a raw scalar/batch-vector combines right."""
        c = self.c
        if np.ndim(other) == 1 and c.ndim == 1:
            return np.repeat(c[:, None], len(other), axis=1)
        return c.copy()

    def __add__(self, other):
        o = self._lift(other)
        if o is None:
            c = self._scalar_ready(other)
            c[0] += other
            return Taylor(self.space, c)
        a, b = _align(self.c, o.c)
        return Taylor(self.space, a + b)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._lift(other)
        if o is None:
            c = self._scalar_ready(other)
            c[0] -= other
            return Taylor(self.space, c)
        a, b = _align(self.c, o.c)
        return Taylor(self.space, a - b)

    def __rsub__(self, other):
        c = -self._scalar_ready(other)
        c[0] += other
        return Taylor(self.space, c)

    def __neg__(self):
        return Taylor(self.space, -self.c)

    def __mul__(self, other):
        o = self._lift(other)
        if o is None:
            c = self.c
            if np.ndim(other) == 1 and c.ndim == 1:
                c = c[:, None]
            return Taylor(self.space, c * other)
        sp = self.space
        a, b = _align(self.c, o.c)
        if sp.order == 1:
            c = a * b[0] + b * a[0]
            c[0] -= a[0] * b[0]
            return Taylor(sp, c)
        ii, jj, kk = sp.mul_table()
        w = a[ii] * b[jj]
        if w.ndim == 1:
            c = np.bincount(kk, weights=w, minlength=sp.nterms)
        else:
            c = np.zeros((sp.nterms,) + w.shape[1:])
            np.add.at(c, kk, w)
        return Taylor(sp, c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._lift(other)
        if o is None:
            c = self.c
            if np.ndim(other) == 1 and c.ndim == 1:
                c = c[:, None]
            return Taylor(self.space, c / other)
        return self * o._reciprocal()

    def __rtruediv__(self, other):
        return self._reciprocal() * other

    def __pow__(self, k):
        if not isinstance(k, (int, np.integer)):
            raise DomainError("only integer exponents are supported")
        k = int(k)
        if k < 0:
            return self._reciprocal() ** (-k)
        out = self.space.constant(1.0)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base if k > 1 else base
            k >>= 1
        return out

    # ---- composition with univariate series ----------------------------

    def _compose(self, scaled_derivs) -> "Taylor":
        """Evaluate f(self) given scaled_derivs[j] = f^(j)(c0) / j!."""
        h = Taylor(self.space, self.c.copy())
        h.c[0] = 0.0
        out = self.space.constant(scaled_derivs[-1])
        for d in reversed(scaled_derivs[:-1]):
            out = out * h + d
        return out

    # The derivative ladders below build powers of c0 by repeated division
    # rather than ** because numpy's pow kernel rounds differently for scalars
    # and arrays, which would break the bit-identity of batched evaluation.

    def _reciprocal(self) -> "Taylor":
        c0 = self.c[0]
        if np.any(np.abs(c0) < _DIV_FLOOR):
            raise DomainError("division by (numerically) zero")
        cur = 1.0 / c0  # d_j = (-1)^j / c0^(j+1)
        derivs = [cur]
        for j in range(1, self.space.order + 1):
            cur = cur / c0
            derivs.append(-cur if j & 1 else cur)
        return self._compose(derivs)

    def sqrt(self) -> "Taylor":
        c0 = self.c[0]
        if np.any(c0 < 0.0) or (self.space.order >= 1 and np.any(c0 == 0.0)):
            raise DomainError("sqrt of non-positive value")
        cur = np.sqrt(c0)  # d_j = binom(1/2, j) * c0^(1/2 - j)
        derivs = [cur]
        coeff = 0.5
        for j in range(1, self.space.order + 1):
            cur = cur / c0
            derivs.append(coeff * cur)
            coeff *= (0.5 - j) / (j + 1)
        return self._compose(derivs)

    def exp(self) -> "Taylor":
        e0 = np.exp(self.c[0])
        derivs = [e0 / math.factorial(j) for j in range(self.space.order + 1)]
        return self._compose(derivs)

    def sin(self) -> "Taylor":
        c0 = self.c[0]
        s, c = np.sin(c0), np.cos(c0)
        cycle = (s, c, -s, -c)
        derivs = [cycle[j % 4] / math.factorial(j) for j in range(self.space.order + 1)]
        return self._compose(derivs)

    def cos(self) -> "Taylor":
        c0 = self.c[0]
        s, c = np.sin(c0), np.cos(c0)
        cycle = (c, -s, -c, s)
        derivs = [cycle[j % 4] / math.factorial(j) for j in range(self.space.order + 1)]
        return self._compose(derivs)

    def __repr__(self):
        return f"Taylor(nvars={self.space.nvars}, order={self.space.order}, c={self.c})"


# ---- scalar-generic helpers -------------------------------------------------
#
# The tensor algebra in this package is written against a generic scalar type:
# plain floats for ordinary evaluation, Taylor values when exact derivatives
# with respect to some slot are wanted.  These little dispatchers keep that
# code free of isinstance noise.


def gsqrt(x):
    if isinstance(x, Taylor):
        return x.sqrt()
    if isinstance(x, np.ndarray):
        if np.any(x < 0.0):
            raise DomainError("sqrt of negative value")
        return np.sqrt(x)
    if x < 0.0:
        raise DomainError("sqrt of negative value")
    return math.sqrt(x)


def gsin(x):
    if isinstance(x, Taylor):
        return x.sin()
    return np.sin(x) if isinstance(x, np.ndarray) else math.sin(x)


def gcos(x):
    if isinstance(x, Taylor):
        return x.cos()
    return np.cos(x) if isinstance(x, np.ndarray) else math.cos(x)


def gexp(x):
    if isinstance(x, Taylor):
        return x.exp()
    return np.exp(x) if isinstance(x, np.ndarray) else math.exp(x)


def scalar_of(x):
    """Constant part of a generic scalar (identity on numbers and batches)."""
    if isinstance(x, Taylor):
        return x.value
    return x if isinstance(x, np.ndarray) else float(x)
