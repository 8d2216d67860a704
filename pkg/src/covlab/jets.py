"""Jets of analytic maps between coordinate boxes.

A :class:`FieldMap` is a tuple of expressions over the domain coordinates.
:func:`eval_jet` turns it into a :class:`JetPoint`: the field values together
with all partial derivatives up to the requested order, computed exactly by
truncated Taylor arithmetic.  Mixed partials are symmetric bit-for-bit because
each symmetric slot is written from the single stored Taylor coefficient.

Total derivatives along the base (needed wherever an object is differentiated
*as a function of the base point*, not of a jet slot) are central finite
differences: :func:`total_derivative`, optionally Richardson-extrapolated.

:func:`newton_invert` inverts analytic maps pointwise; :class:`AnalyticDiffeo`
packages a map with an (explicit or Newton) inverse and provides inverse jets
up to order 2 via the inverse function theorem.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .errors import MissingJet, NoConvergence, SingularJacobian
from .expr import Expr, parse
from .taylor import TaylorSpace

Point = np.ndarray  # alias: a point is a 1-d coordinate array

MAX_ORDER = 4


@dataclass(frozen=True)
class FieldMap:
    """Analytic map between coordinate boxes, one expression per component."""

    components: tuple[Expr, ...]
    dim_domain: int

    @classmethod
    def from_prefix(cls, texts, dim_domain: int) -> "FieldMap":
        return cls(tuple(parse(t) for t in texts), dim_domain)

    @property
    def ncomp(self) -> int:
        return len(self.components)

    def __call__(self, p: Point) -> np.ndarray:
        coords = [float(v) for v in p]
        return np.array([e.ev(coords) for e in self.components])

    def jet(self, p: Point, order: int) -> "JetPoint":
        return eval_jet(self, p, order)

    def to_prefix(self, var: str = "x") -> list[str]:
        return [e.to_prefix(var) for e in self.components]

    def compose(self, inner: "FieldMap") -> "FieldMap":
        """Symbolic composition self o inner (substitution of expressions)."""
        repl = {i: e for i, e in enumerate(inner.components)}
        return FieldMap(
            tuple(e.subst(repl) for e in self.components), inner.dim_domain
        )


def identity_map(dim: int) -> FieldMap:
    from .expr import Var

    return FieldMap(tuple(Var(i) for i in range(dim)), dim)


@dataclass
class JetPoint:
    """Values and partial derivatives of a map at a single base point.

    ``d1[A, mu]`` is the first partial of component A along coordinate mu,
    ``d2[A, mu, nu]`` the second, and so on.  Arrays above ``order`` are None.
    """

    base: Point
    values: np.ndarray
    order: int
    d1: np.ndarray | None = None
    d2: np.ndarray | None = None
    d3: np.ndarray | None = None
    d4: np.ndarray | None = None

    @property
    def ncomp(self) -> int:
        return len(self.values)

    @property
    def dim(self) -> int:
        return len(self.base)

    def require(self, order: int) -> None:
        if self.order < order:
            raise MissingJet(f"need jet order {order}, have {self.order}")


def eval_jet(f: FieldMap, p: Point, order: int) -> JetPoint:
    """Exact jet of f at p up to the given order (0..4)."""
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"jet order must be in 0..{MAX_ORDER}")
    p = np.asarray(p, dtype=float)
    n = f.dim_domain
    if len(p) != n:
        raise ValueError("point dimension does not match the map domain")
    if order == 0:
        return JetPoint(base=p, values=f(p), order=0)

    space = TaylorSpace(n, order)
    coords = space.variables(p)
    derivs = [np.empty((f.ncomp,) + (n,) * deg) for deg in range(order + 1)]
    for a_idx, e in enumerate(f.components):
        t = e.ev(coords)
        if not hasattr(t, "c"):  # expression was constant
            t = space.constant(float(t))
        for i, alpha in enumerate(space.exponents):
            val = t.c[i] * space.factorial[i]
            deg = int(space.degree[i])
            pos = tuple(
                v for v, k in enumerate(alpha) for _ in range(k)
            )  # sorted index tuple, e.g. (0, 1, 1)
            if deg == 0:
                derivs[0][a_idx] = val
            else:
                for perm in set(permutations(pos)):
                    derivs[deg][(a_idx,) + perm] = val
    jp = JetPoint(base=p, values=derivs[0], order=order)
    for deg, name in ((1, "d1"), (2, "d2"), (3, "d3"), (4, "d4")):
        if deg <= order:
            setattr(jp, name, derivs[deg])
    return jp


def eval_jet_batch(f: FieldMap, pts: np.ndarray, order: int) -> JetPoint:
    """Jets of f at a batch of points in one arithmetic pass.

    Every array of the returned JetPoint carries one trailing batch axis:
    base is (n, B), values (ncomp, B), d1 (ncomp, n, B) and so on.  The
    numbers are identical to per-point :func:`eval_jet`; only the Python
    dispatch overhead is shared across the batch.
    """
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"jet order must be in 0..{MAX_ORDER}")
    pts = np.asarray(pts, dtype=float)
    if pts.ndim != 2:
        raise ValueError("expected a (batch, dim) array of points")
    nb, n = pts.shape
    if n != f.dim_domain:
        raise ValueError("point dimension does not match the map domain")

    space = TaylorSpace(n, max(order, 1))
    coords = [space.variable(i, pts[:, i]) for i in range(n)]
    derivs = [np.empty((f.ncomp,) + (n,) * deg + (nb,)) for deg in range(order + 1)]
    for a_idx, e in enumerate(f.components):
        t = e.ev(coords)
        if not hasattr(t, "c"):  # expression was constant (or batch-constant)
            t = space.constant(np.broadcast_to(np.asarray(t, dtype=float), (nb,)))
        for i, alpha in enumerate(space.exponents):
            if space.degree[i] > order:
                continue
            val = t.c[i] * space.factorial[i]
            deg = int(space.degree[i])
            pos = tuple(v for v, k in enumerate(alpha) for _ in range(k))
            if deg == 0:
                derivs[0][a_idx] = val
            else:
                for perm in set(permutations(pos)):
                    derivs[deg][(a_idx,) + perm] = val
    jp = JetPoint(base=pts.T.copy(), values=derivs[0], order=order)
    for deg, name in ((1, "d1"), (2, "d2"), (3, "d3"), (4, "d4")):
        if deg <= order:
            setattr(jp, name, derivs[deg])
    return jp


def stack_jets(jets: list[JetPoint]) -> JetPoint:
    """Bundle per-point jets into one batched jet (trailing batch axis)."""
    if not jets:
        raise ValueError("need at least one jet")
    order = min(j.order for j in jets)
    out = JetPoint(
        base=np.stack([j.base for j in jets], axis=-1),
        values=np.stack([j.values for j in jets], axis=-1),
        order=order,
    )
    for deg, name in ((1, "d1"), (2, "d2"), (3, "d3"), (4, "d4")):
        if deg <= order:
            setattr(out, name, np.stack([getattr(j, name) for j in jets], axis=-1))
    return out


def unstack_jet(jp: JetPoint, i: int) -> JetPoint:
    """The i-th entry of a batched jet as an ordinary single-point jet."""
    out = JetPoint(base=jp.base[:, i], values=jp.values[..., i], order=jp.order)
    for deg, name in ((1, "d1"), (2, "d2"), (3, "d3"), (4, "d4")):
        if deg <= jp.order:
            setattr(out, name, getattr(jp, name)[..., i])
    return out


# ---- total derivatives ------------------------------------------------------


def total_derivative(q, p: Point, mu: int, h: float = 1e-4):
    """Central-difference total derivative along coordinate mu.

    ``q`` maps a point to a float or ndarray and is expected to re-evaluate
    whatever jets it needs at the shifted points.
    """
    pp = np.array(p, dtype=float)
    pm = pp.copy()
    pp[mu] += h
    pm[mu] -= h
    return (q(pp) - q(pm)) / (2.0 * h)


def total_derivative_richardson(q, p: Point, mu: int, h: float = 1e-4):
    """Richardson-extrapolated central difference: (4 D(h/2) - D(h)) / 3."""
    d_h = total_derivative(q, p, mu, h)
    d_h2 = total_derivative(q, p, mu, h / 2.0)
    return (4.0 * d_h2 - d_h) / 3.0


# ---- map inversion ----------------------------------------------------------

_NEWTON_TOL = 1e-12
_NEWTON_MAXIT = 50


def newton_invert(f: FieldMap, y: Point, guess: Point) -> Point:
    """Solve f(x) = y by damped Newton iteration.

    Stops when the residual max-norm drops below 1e-12.  The step is halved
    (up to 10 times) whenever a full step fails to reduce the residual.
    """
    y = np.asarray(y, dtype=float)
    x = np.array(guess, dtype=float)
    res = f(x) - y
    err = np.max(np.abs(res))
    for _ in range(_NEWTON_MAXIT):
        if err < _NEWTON_TOL:
            return x
        jac = eval_jet(f, x, 1).d1
        if abs(np.linalg.det(jac)) < 1e-14:
            raise SingularJacobian("Jacobian singular during Newton inversion")
        try:
            step = np.linalg.solve(jac, res)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobian(str(exc)) from exc
        lam = 1.0
        for _ in range(10):
            x_new = x - lam * step
            res_new = f(x_new) - y
            err_new = np.max(np.abs(res_new))
            if err_new < err:
                break
            lam *= 0.5
        x, res, err = x_new, res_new, err_new
    if err < _NEWTON_TOL:
        return x
    raise NoConvergence(f"Newton inversion stalled at residual {err:.3e}")


def inverse_jet_from_jet(fwd: JetPoint, order: int) -> JetPoint:
    """Jet of the inverse map at y0 = fwd.values, from the jet of the map at x0.

    Inverse function theorem: D(inv) = (Df)^-1, and for order 2
    inv^a_{,mu nu} = -J^a_b f^b_{,cd} J^c_mu J^d_nu with J = (Df)^-1.
    """
    if order > 2:
        raise MissingJet("inverse jets are implemented up to order 2")
    fwd.require(order if order >= 1 else 1)
    jac = fwd.d1
    if abs(np.linalg.det(jac)) < 1e-14:
        raise SingularJacobian("map Jacobian is singular; no local inverse")
    J = np.linalg.inv(jac)
    out = JetPoint(base=fwd.values.copy(), values=np.array(fwd.base, dtype=float), order=order)
    if order >= 1:
        out.d1 = J
    if order >= 2:
        fwd.require(2)
        out.d2 = -np.einsum("ab,bcd,cm,dn->amn", J, fwd.d2, J, J)
    return out


def compose_jet(outer: JetPoint, inner: JetPoint, order: int) -> JetPoint:
    """Jet of (outer o inner) at inner.base, orders 0..2 (chain rule)."""
    if order > 2:
        raise MissingJet("jet composition is implemented up to order 2")
    out = JetPoint(base=inner.base, values=outer.values.copy(), order=order)
    if order >= 1:
        inner.require(1)
        outer.require(1)
        out.d1 = np.einsum("Aa,am->Am", outer.d1, inner.d1)
    if order >= 2:
        inner.require(2)
        outer.require(2)
        out.d2 = np.einsum("Aab,am,bn->Amn", outer.d2, inner.d1, inner.d1)
        out.d2 += np.einsum("Aa,amn->Amn", outer.d1, inner.d2)
    return out


class AnalyticDiffeo:
    """An analytic map with a usable inverse (explicit expressions or Newton).

    Covers both base diffeomorphisms and covariance fields: anything that must
    be invertible pointwise and whose inverse jets (up to order 2) are needed.
    """

    def __init__(self, mapping: FieldMap, inverse: FieldMap | None = None):
        if mapping.ncomp != mapping.dim_domain:
            raise ValueError("diffeomorphism must map a box to one of equal dimension")
        self.map = mapping
        self.inverse = inverse

    @property
    def dim(self) -> int:
        return self.map.dim_domain

    def __call__(self, p: Point) -> np.ndarray:
        return self.map(p)

    def jet(self, p: Point, order: int) -> JetPoint:
        return eval_jet(self.map, p, order)

    def inverse_point(self, y: Point, guess: Point | None = None) -> Point:
        if self.inverse is not None:
            return self.inverse(y)
        return newton_invert(self.map, y, y if guess is None else guess)

    def inverse_jet(self, y: Point, order: int, guess: Point | None = None) -> JetPoint:
        """Jet of the inverse map at y, exact given the exact forward jets."""
        if self.inverse is not None:
            return eval_jet(self.inverse, y, order)
        x = self.inverse_point(y, guess)
        fwd = eval_jet(self.map, x, max(order, 1))
        fwd.base = np.asarray(x, dtype=float)
        jp = inverse_jet_from_jet(fwd, order)
        jp.base = np.asarray(y, dtype=float)
        return jp

    def jacobian_det(self, p: Point) -> float:
        return float(np.linalg.det(eval_jet(self.map, p, 1).d1))
