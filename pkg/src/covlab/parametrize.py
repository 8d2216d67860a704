"""Covariance fields and parametrized Lagrangians.

A background theory L(j1 phi; G) on a box X is made generally covariant by
replacing the fixed metric with the pullback of a fibre metric g through a
dynamic diffeomorphism eta: X -> S (the *covariance field*):

    G_{mu nu}(x) = eta^a_{,mu} eta^b_{,nu} g_{ab}(eta(x)),
    Ltilde(j1 phi, j1 eta) = L(j1 phi; eta* g).

This module provides the pullback metric (with first derivatives), the
parametrized density, exact partials of the density with respect to every
covariance-field jet slot, the canonical momenta conjugate to eta computed by
two independent routes, and the push-forward of all fields by a base
diffeomorphism (the transformation whose pointwise invariance of the density
is the equivariance check).

Push-forward conventions for sigma: X -> X, with kap = sigma^{-1}:

    covector:  (sigma . A)(x') = A(kap(x')) Dkap(x')
    vector:    (sigma . phi)(x') = Dsigma(kap(x')) phi(kap(x'))
    cov field: eta |-> eta o kap
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError, WrongCouplingOrder
from .expr import Expr, add, mul
from .geometry import MetricJet, check_lorentzian
from .jets import (
    AnalyticDiffeo,
    FieldMap,
    JetPoint,
    Point,
    compose_jet,
    eval_jet,
)
from .taylor import TaylorSpace
from .theories import FieldTheory, LagrangianValue, density_core, lagrangian_value, sym_pairs


class FiberMetric:
    """Analytic Lorentzian metric on the target box, one expression per entry.

    Entries are stored for the upper triangle and mirrored, so evaluation is
    symmetric by construction.  First-derivative expressions are differentiated
    symbolically once and cached; evaluating those at Taylor-valued points is
    what makes second derivatives of g available exactly wherever needed.
    """

    def __init__(self, entries: list[list[Expr]]):
        self.dim = len(entries)
        self.entries = [
            [entries[min(a, b)][max(a, b)] for b in range(self.dim)]
            for a in range(self.dim)
        ]
        self._d1: list[list[list[Expr]]] | None = None

    @classmethod
    def from_prefix(cls, rows: list[list[str]]) -> "FiberMetric":
        from .expr import parse

        return cls([[parse(e) for e in row] for row in rows])

    @classmethod
    def minkowski(cls, dim: int) -> "FiberMetric":
        from .expr import Const

        return cls(
            [[Const(-1.0 if a == b == 0 else (1.0 if a == b else 0.0)) for b in range(dim)] for a in range(dim)]
        )

    def d1_exprs(self) -> list[list[list[Expr]]]:
        if self._d1 is None:
            self._d1 = [
                [[self.entries[a][b].diff(c) for c in range(self.dim)] for b in range(self.dim)]
                for a in range(self.dim)
            ]
        return self._d1

    def eval(self, coords) -> list[list]:
        """Entries at a (possibly Taylor-valued) point, exactly symmetric."""
        n = self.dim
        out = [[None] * n for _ in range(n)]
        for a in range(n):
            for b in range(a, n):
                v = self.entries[a][b].ev(coords)
                out[a][b] = out[b][a] = v
        return out

    def eval_d1(self, coords) -> list[list[list]]:
        n = self.dim
        d1 = self.d1_exprs()
        out = [[[None] * n for _ in range(n)] for _ in range(n)]
        for a in range(n):
            for b in range(a, n):
                for c in range(n):
                    v = d1[a][b][c].ev(coords)
                    out[a][b][c] = out[b][a][c] = v
        return out

    def jet(self, u: Point, order: int = 1):
        """Numeric (g, g_d1) arrays at u; g_d1 is None for order 0."""
        coords = [float(v) for v in u]
        g = np.array(self.eval(coords), dtype=float)
        gd = np.array(self.eval_d1(coords), dtype=float) if order >= 1 else None
        return g, gd

    def to_prefix(self) -> list[list[str]]:
        return [[e.to_prefix("u") for e in row] for row in self.entries]


class CovarianceField(AnalyticDiffeo):
    """The dynamic diffeomorphism eta: X -> S (orientation preserving)."""

    def validate_at(self, points) -> None:
        for p in points:
            det = self.jacobian_det(np.asarray(p, dtype=float))
            if det <= 0.0:
                raise ValidationError(
                    f"covariance field is not orientation preserving at {list(map(float, p))}: det = {det:.6g}"
                )


# ---- pullback metric ----------------------------------------------------------


def _pullback_G(e1, g):
    """G[mu][nu] = sum_ab e1[a][mu] e1[b][nu] g[a][b], generic scalars."""
    n = len(g)
    tmp = [[_gdot(g[a], [e1[b][nu] for b in range(n)]) for nu in range(n)] for a in range(n)]
    out = [[None] * n for _ in range(n)]
    for mu in range(n):
        for nu in range(mu, n):
            v = _gdot([e1[a][mu] for a in range(n)], [tmp[a][nu] for a in range(n)])
            out[mu][nu] = out[nu][mu] = v
    return out


def _pullback_Gd(e1, e2, g, gd1):
    """G_{mu nu, rho} of the pullback metric, generic scalars.

    e2[a][mu][rho] are the second partials of eta; gd1[a][b][c] = g_{ab,c}.
    """
    n = len(g)
    # tmp[a][nu] = sum_b g[a][b] e1[b][nu]
    tmp = [[_gdot(g[a], [e1[b][nu] for b in range(n)]) for nu in range(n)] for a in range(n)]
    out = [[[None] * n for _ in range(n)] for _ in range(n)]
    for rho in range(n):
        # w[mu][nu] = sum_ab e1[a][mu] e1[b][nu] (sum_c gd1[a][b][c] e1[c][rho])
        gslice = [
            [_gdot(gd1[a][b], [e1[c][rho] for c in range(n)]) for b in range(n)]
            for a in range(n)
        ]
        for mu in range(n):
            for nu in range(n):
                t1 = _gdot([e2[a][mu][rho] for a in range(n)], [tmp[a][nu] for a in range(n)])
                t2 = _gdot([e2[b][nu][rho] for b in range(n)], [tmp[b][mu] for b in range(n)])
                inner = [
                    _gdot(gslice[a], [e1[b][nu] for b in range(n)]) for a in range(n)
                ]
                t3 = _gdot([e1[a][mu] for a in range(n)], inner)
                out[mu][nu][rho] = t1 + t2 + t3
    return out


def _gdot(row, col):
    acc = None
    for a, b in zip(row, col):
        term = a * b
        acc = term if acc is None else acc + term
    return acc


def pullback_metric(eta_jet: JetPoint, g: FiberMetric) -> MetricJet:
    """Pullback metric value at a point (components only)."""
    eta_jet.require(1)
    gm, _ = g.jet(eta_jet.values, order=0)
    comp = np.einsum("am,bn,ab->mn", eta_jet.d1, eta_jet.d1, gm)
    comp = 0.5 * (comp + comp.T)
    m = MetricJet(comp)
    check_lorentzian(comp)
    return m


def pullback_metric_jet(eta_jet: JetPoint, g: FiberMetric) -> MetricJet:
    """Pullback metric with first derivatives (needs an order-2 eta jet)."""
    eta_jet.require(2)
    gm, gd1 = g.jet(eta_jet.values, order=1)
    e1, e2 = eta_jet.d1, eta_jet.d2
    comp = np.einsum("am,bn,ab->mn", e1, e1, gm)
    comp = 0.5 * (comp + comp.T)
    d1 = (
        np.einsum("amr,bn,ab->mnr", e2, e1, gm)
        + np.einsum("am,bnr,ab->mnr", e1, e2, gm)
        + np.einsum("am,bn,abc,cr->mnr", e1, e1, gd1, e1)
    )
    m = MetricJet(comp, d1=d1)
    check_lorentzian(comp)
    return m


def parametrized_lagrangian(
    theory: FieldTheory, p: Point, phi_jet: JetPoint, eta_jet: JetPoint, g: FiberMetric
) -> LagrangianValue:
    """Ltilde at one point: the background density at the pullback metric.

    Matter partials pass through unchanged; dG/dGd are taken at G = eta* g.
    """
    if theory.coupling_order >= 1:
        m = pullback_metric_jet(eta_jet, g)
    else:
        m = pullback_metric(eta_jet, g)
    return lagrangian_value(theory, p, phi_jet, m)


# ---- exact partials with respect to covariance-field slots ---------------------


@dataclass
class EtaPartials:
    """d Ltilde / d (eta jet slots) at one point.

    ``d_value[a]`` is the partial with respect to eta^a, ``d_d1[a, mu]`` with
    respect to eta^a_{,mu}, and ``d_d2[a, mu, nu]`` (coupling order 1 only)
    with respect to eta^a_{,mu nu} in the full-double-sum convention
    (symmetric, off-diagonal halved).  Batched inputs add a trailing batch
    axis to every array (and make ``density`` a vector).
    """

    density: float | np.ndarray
    d_value: np.ndarray
    d_d1: np.ndarray
    d_d2: np.ndarray | None = None


def eta_slot_partials(
    theory: FieldTheory,
    p: Point,
    phi_jet: JetPoint,
    eta_jet: JetPoint,
    g: FiberMetric,
    want_d2: bool = False,
) -> EtaPartials:
    """Exact partials of Ltilde with respect to the eta jet coordinates.

    Runs the full pullback + density computation once over first-order Taylor
    variables attached to the requested slots.  The fibre metric (and, for
    derivative coupling, its first derivatives) are evaluated at the
    Taylor-valued target point, so the dependence through g_{ab}(eta(x)) is
    captured exactly.

    Batched jets (trailing batch axis, from :func:`covlab.jets.eval_jet_batch`
    or :func:`covlab.jets.stack_jets`) evaluate all points in one pass; the
    output arrays then carry the same trailing axis.
    """
    n = eta_jet.dim
    need_e2 = theory.coupling_order >= 1 or want_d2
    if need_e2:
        eta_jet.require(2)
    pairs = sym_pairs(n)
    nvars = n + n * n + (n * len(pairs) if want_d2 else 0)
    space = TaylorSpace(nvars, 1)
    k = 0

    def nxt(value):
        nonlocal k
        v = space.variable(k, value)
        k += 1
        return v

    u = [nxt(eta_jet.values[a]) for a in range(n)]
    e1 = [[nxt(eta_jet.d1[a, mu]) for mu in range(n)] for a in range(n)]
    d1_off = n
    e2 = None
    d2_off = n + n * n
    if need_e2:
        if want_d2:
            e2 = [[[None] * n for _ in range(n)] for _ in range(n)]
            for a in range(n):
                for i, (mu, nu) in enumerate(pairs):
                    v = nxt(eta_jet.d2[a, mu, nu])
                    e2[a][mu][nu] = e2[a][nu][mu] = v
        else:
            e2 = [
                [[eta_jet.d2[a, mu, nu] for nu in range(n)] for mu in range(n)]
                for a in range(n)
            ]

    gm = g.eval(u)
    G = _pullback_G(e1, gm)
    Gd = None
    if theory.coupling_order >= 1:
        gd1 = g.eval_d1(u)
        Gd = _pullback_Gd(e1, e2, gm, gd1)
    y = [phi_jet.values[a] for a in range(n)]
    yd = [[phi_jet.d1[a, mu] for mu in range(n)] for a in range(n)]
    out = density_core(theory, y, yd, G, Gd)
    grad = out.gradient()
    tail = grad.shape[1:]

    d_value = grad[:n].copy()
    d_d1 = grad[d1_off : d1_off + n * n].reshape((n, n) + tail).copy()
    d_d2 = None
    if want_d2:
        d_d2 = np.zeros((n, n, n) + tail)
        for a in range(n):
            for i, (mu, nu) in enumerate(pairs):
                val = grad[d2_off + a * len(pairs) + i] * (1.0 if mu == nu else 0.5)
                d_d2[a, mu, nu] = d_d2[a, nu, mu] = val
    return EtaPartials(density=out.value, d_value=d_value, d_d1=d_d1, d_d2=d_d2)


# ---- canonical momenta conjugate to the covariance field -----------------------


@dataclass
class PiolaKirchhoff:
    """First (and, for derivative coupling, second) momenta conjugate to eta.

    ``rho[a, mu]`` is the formula route 2 dL/dG_{mu nu} u^b_nu g_{ab}
    (plus its dGd extension when the coupling is derivative), while
    ``rho_direct`` is the same object as a raw exact partial of Ltilde.
    The pair (p2, p2_direct) holds the momenta conjugate to eta^a_{,mu nu}.
    """

    rho: np.ndarray
    rho_direct: np.ndarray
    p2: np.ndarray | None = None
    p2_direct: np.ndarray | None = None


def piola_kirchhoff(
    theory: FieldTheory, p: Point, phi_jet: JetPoint, eta_jet: JetPoint, g: FiberMetric
) -> PiolaKirchhoff:
    """Momenta conjugate to the covariance field, by two independent routes."""
    order1 = theory.coupling_order >= 1
    lv = parametrized_lagrangian(theory, p, phi_jet, eta_jet, g)
    gm, gd1 = g.jet(eta_jet.values, order=1 if order1 else 0)
    e1 = eta_jet.d1
    # rho_a^mu = 2 dG[mu, nu] eta^b_{,nu} g_{ab}
    rho = 2.0 * np.einsum("mn,bn,ab->am", lv.dG, e1, gm)
    p2 = p2_direct = None
    if order1:
        eta_jet.require(2)
        e2 = eta_jet.d2
        dGd = lv.dGd
        # contributions of dL/dG_{al be, rho} through the slots of G_{al be, rho}
        W = np.einsum("car,cb->bar", e2, gm)  # sum_c e2[c,al,rho] g[c,b]
        rho += np.einsum("xmr,axr->am", dGd, W)  # delta on the second metric index
        rho += np.einsum("mxr,axr->am", dGd, W)  # delta on the first
        V = np.einsum("dB,ade,er->aBr", e1, gd1, e1)
        rho += np.einsum("mbr,abr->am", dGd, V)
        rho += np.einsum("xmr,axr->am", dGd, V)
        U = np.einsum("cA,dB,cda->aAB", e1, e1, gd1)
        rho += np.einsum("xym,axy->am", dGd, U)
        # second momenta: P_a^{mu nu} = (dGd[mu,be,nu] + dGd[nu,be,mu]) g_{a d} eta^d_{,be}
        S = gm @ e1  # S[a, be] = sum_d g[a,d] e1[d, be]
        p2 = np.einsum("mbn,ab->amn", dGd, S) + np.einsum("nbm,ab->amn", dGd, S)
    ep = eta_slot_partials(theory, p, phi_jet, eta_jet, g, want_d2=order1)
    if order1:
        p2_direct = ep.d_d2
    return PiolaKirchhoff(rho=rho, rho_direct=ep.d_d1, p2=p2, p2_direct=p2_direct)


# ---- transport of fields by base diffeomorphisms -------------------------------


class TransportedField:
    """Matter field pushed forward by a base diffeomorphism (numeric jets).

    Jets are assembled from exact jets of the map, its inverse (inverse
    function theorem) and the original field, so no finite differences enter.
    Supported to order 1, which is what first-order densities consume.
    """

    def __init__(self, field, sigma: AnalyticDiffeo, rank: str):
        if rank not in ("covector", "vector"):
            raise ValueError(f"unknown rank {rank!r}")
        self.field = field
        self.sigma = sigma
        self.rank = rank
        self.ncomp = sigma.dim

    def jet(self, xp: Point, order: int) -> JetPoint:
        if order > 1:
            raise WrongCouplingOrder("transported matter jets are provided to order 1")
        n = self.ncomp
        w_jet = self.sigma.inverse_jet(np.asarray(xp, dtype=float), order + 1)
        w = w_jet.values
        f_jet = self.field.jet(w, order)
        comp = compose_jet(f_jet, w_jet, order)  # jets of (field o kap)
        out = JetPoint(base=np.asarray(xp, dtype=float), values=np.empty(n), order=order)
        if self.rank == "covector":
            out.values = np.einsum("m,ml->l", f_jet.values, w_jet.d1)
            if order >= 1:
                out.d1 = np.einsum("mn,ml->ln", comp.d1, w_jet.d1) + np.einsum(
                    "m,mln->ln", f_jet.values, w_jet.d2
                )
        else:
            s_jet = eval_jet(self.sigma.map, w, order + 1)
            B = s_jet.d1
            out.values = np.einsum("lm,m->l", B, f_jet.values)
            if order >= 1:
                dB = np.einsum("lmc,cn->lmn", s_jet.d2, w_jet.d1)
                out.d1 = np.einsum("lmn,m->ln", dB, f_jet.values) + np.einsum(
                    "lm,mn->ln", B, comp.d1
                )
        return out


class ComposedCovField:
    """Covariance field eta o sigma^{-1} as a jet evaluator (order <= 2)."""

    def __init__(self, cov: AnalyticDiffeo, sigma: AnalyticDiffeo):
        self.cov = cov
        self.sigma = sigma
        self.ncomp = cov.dim

    def jet(self, xp: Point, order: int) -> JetPoint:
        w_jet = self.sigma.inverse_jet(np.asarray(xp, dtype=float), order)
        eta_jet = self.cov.jet(w_jet.values, order)
        return compose_jet(eta_jet, w_jet, order)


def symbolic_push_covector(field: FieldMap, sigma_inv: FieldMap) -> FieldMap:
    """Push-forward of a covector field by sigma, as expressions.

    Only the inverse map enters:  A'_lam = (A_mu o kap) * d kap^mu / d x^lam.
    """
    n = field.dim_domain
    repl = {i: e for i, e in enumerate(sigma_inv.components)}
    comps = []
    for lam in range(n):
        acc = None
        for mu in range(n):
            term = mul(field.components[mu].subst(repl), sigma_inv.components[mu].diff(lam))
            acc = term if acc is None else add(acc, term)
        comps.append(acc)
    return FieldMap(tuple(comps), n)


def symbolic_push_vector(field: FieldMap, sigma: FieldMap, sigma_inv: FieldMap) -> FieldMap:
    """Push-forward of a vector field by sigma, as expressions.

    phi'^lam = (d sigma^lam / d x^mu o kap) * (phi^mu o kap).
    """
    n = field.dim_domain
    repl = {i: e for i, e in enumerate(sigma_inv.components)}
    comps = []
    for lam in range(n):
        acc = None
        for mu in range(n):
            term = mul(
                sigma.components[lam].diff(mu).subst(repl),
                field.components[mu].subst(repl),
            )
            acc = term if acc is None else add(acc, term)
        comps.append(acc)
    return FieldMap(tuple(comps), n)


def apply_diffeo(sigma: AnalyticDiffeo, theory: FieldTheory, matter, cov: AnalyticDiffeo):
    """Transform (matter, covariance field) by a base diffeomorphism sigma.

    With explicit inverse expressions on sigma (and, for vector matter, on the
    map itself) the result is symbolic and exact to any jet order; otherwise
    numeric jet evaluators backed by Newton inversion are returned.
    """
    if sigma.inverse is not None and isinstance(matter, FieldMap):
        if theory.matter_rank == "covector":
            matter_t = symbolic_push_covector(matter, sigma.inverse)
        else:
            matter_t = symbolic_push_vector(matter, sigma.map, sigma.inverse)
        cov_t = cov.map.compose(sigma.inverse)
        return matter_t, cov_t
    return (
        TransportedField(matter, sigma, theory.matter_rank),
        ComposedCovField(cov, sigma),
    )


# ---- convenience bundle ---------------------------------------------------------


@dataclass
class ParametrizedSystem:
    """Everything needed to evaluate the parametrized theory at points."""

    theory: FieldTheory
    matter: object  # any jet evaluator: FieldMap or TransportedField
    cov_field: CovarianceField
    fiber_metric: FiberMetric

    def matter_jet(self, p: Point, order: int = 1) -> JetPoint:
        return self.matter.jet(p, order)

    def eta_jet(self, p: Point, order: int) -> JetPoint:
        return self.cov_field.jet(p, order)

    def metric_jet(self, p: Point, order: int = 1) -> MetricJet:
        ej = self.cov_field.jet(p, order + 1 if order >= 1 else 1)
        if order >= 1:
            return pullback_metric_jet(ej, self.fiber_metric)
        return pullback_metric(ej, self.fiber_metric)

    def lagrangian(self, p: Point) -> LagrangianValue:
        order = 2 if self.theory.coupling_order >= 1 else 1
        return parametrized_lagrangian(
            self.theory,
            p,
            self.matter_jet(p, 1),
            self.eta_jet(p, order),
            self.fiber_metric,
        )
