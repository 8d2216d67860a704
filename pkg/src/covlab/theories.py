"""Built-in first-order field theories on a metric background.

Two theories are provided:

* ``em`` — a covector field A with density
  L = -1/4 G^{mu al} G^{nu be} F_{al be} F_{mu nu} sqrt(-G),
  F_{mu nu} = A_{nu,mu} - A_{mu,nu}.  Metric coupling order 0 (no G
  derivatives enter).

* ``kg_vector`` — a vector field phi with density
  L = 1/2 G_{si rho} (G^{mu nu} phi^si_{;mu} phi^rho_{;nu}
                      - m^2 phi^si phi^rho) sqrt(-G),
  where ; is the Levi-Civita covariant derivative.  Metric coupling order 1
  (G derivatives enter through the connection).

:func:`lagrangian_value` evaluates a density together with its *exact*
partials with respect to every jet slot it depends on — matter values,
matter first derivatives, metric components and (order 1 only) metric first
derivatives — by running the density once over first-order Taylor variables.
Metric slots are perturbed symmetrically (G_{mu nu} and G_{nu mu} together,
off-diagonal halved) so the returned dG is symmetric and 2*dG is the familiar
variational stress tensor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedTheory, WrongCouplingOrder
from .geometry import MetricJet, g_christoffel, g_det, g_inverse
from .jets import JetPoint, Point
from .taylor import TaylorSpace, gsqrt


@dataclass(frozen=True)
class FieldTheory:
    """Catalogue entry: what the matter field is and how it couples to G."""

    name: str
    matter_rank: str  # "covector" or "vector": how the field pushes forward
    coupling_order: int  # highest metric derivative order in the density
    mass: float = 0.0
    lift_index: int = 1  # highest xi-derivative order in the field's lift

    def ncomp(self, dim: int) -> int:
        return dim


def make_theory(name: str, mass: float = 1.0) -> FieldTheory:
    if name == "em":
        return FieldTheory(name="em", matter_rank="covector", coupling_order=0)
    if name == "kg_vector":
        return FieldTheory(name="kg_vector", matter_rank="vector", coupling_order=1, mass=mass)
    raise UnsupportedTheory(f"no theory named {name!r}")


@dataclass
class LagrangianValue:
    """Density value plus exact partials with respect to the jet slots.

    dG[mu, nu] = dL/dG_{mu nu} (symmetric, off-diagonal convention as above);
    dGd[mu, nu, rho] = dL/dG_{mu nu, rho}; dy[A] = dL/dy^A;
    dyd[A, mu] = dL/dy^A_{,mu}.
    """

    density: float
    dG: np.ndarray
    dy: np.ndarray
    dyd: np.ndarray
    dGd: np.ndarray | None = None


@dataclass
class LiftCoefficients:
    """Vertical lift of base vector fields to the matter bundle.

    For a base field xi the induced fibre velocity at (x, y) is
    C0[A, nu] xi^nu + C1[A, mu, nu] xi^nu_{,mu}.  Both built-in matter types
    transform tensorially, so C0 = 0 and only C1 is populated.
    """

    C0: np.ndarray
    C1: np.ndarray


def lift_coefficients(theory: FieldTheory, values: np.ndarray) -> LiftCoefficients:
    values = np.asarray(values, dtype=float)
    n = len(values)
    c0 = np.zeros((n, n))
    c1 = np.zeros((n, n, n))
    if theory.matter_rank == "covector":
        # push-forward of a covector: fibre velocity -y_mu xi^mu_{,lam}
        for lam in range(n):
            for nu in range(n):
                c1[lam, lam, nu] = -values[nu]
    elif theory.matter_rank == "vector":
        # push-forward of a vector: fibre velocity +y^mu xi^lam_{,mu}
        for lam in range(n):
            for mu in range(n):
                c1[lam, mu, lam] = values[mu]
    else:
        raise UnsupportedTheory(f"unknown matter rank {theory.matter_rank!r}")
    return LiftCoefficients(C0=c0, C1=c1)


# ---- density cores over a generic scalar ring --------------------------------


def em_density_core(a_d1, G):
    """EM density from the matter Jacobian a_d1[A][mu] = A_{A,mu} and metric G."""
    n = len(G)
    F = [[a_d1[nu][mu] - a_d1[mu][nu] for nu in range(n)] for mu in range(n)]
    det = g_det(G)
    ginv = g_inverse(G, det)
    vol = gsqrt(-det)
    # F^{mu nu} = G^{mu a} G^{nu b} F_{a b}, via two half-contractions
    half = [
        [_dot(ginv[mu], [F[a][b] for a in range(n)]) for b in range(n)]
        for mu in range(n)
    ]
    scalar = None
    for mu in range(n):
        for nu in range(n):
            if mu == nu:
                continue  # F is antisymmetric; diagonal terms vanish identically
            fup = _dot(ginv[nu], half[mu])
            term = fup * F[mu][nu]
            scalar = term if scalar is None else scalar + term
    return -0.25 * scalar * vol


def kg_vector_density_core(phi, phi_d1, G, Gd, mass):
    """Derivative-coupled vector density; Gd[m][n][r] = G_{mn,r}."""
    n = len(G)
    det = g_det(G)
    ginv = g_inverse(G, det)
    vol = gsqrt(-det)
    gamma = g_christoffel(ginv, Gd)
    cov = [
        [
            phi_d1[sig][mu] + _dot(gamma[sig][mu], phi)
            for mu in range(n)
        ]
        for sig in range(n)
    ]
    # kinetic = G_{si rho} G^{mu nu} cov[si][mu] cov[rho][nu]
    w = [[_dot(ginv[nu], cov[sig]) for nu in range(n)] for sig in range(n)]
    kinetic = None
    for sig in range(n):
        for rho in range(n):
            term = G[sig][rho] * _dot(w[sig], cov[rho])
            kinetic = term if kinetic is None else kinetic + term
    mass2 = mass * mass
    massterm = None
    for sig in range(n):
        for rho in range(n):
            term = G[sig][rho] * (phi[sig] * phi[rho])
            massterm = term if massterm is None else massterm + term
    return 0.5 * (kinetic - mass2 * massterm) * vol


def _dot(row, col):
    acc = None
    for a, b in zip(row, col):
        term = a * b
        acc = term if acc is None else acc + term
    return acc


def density_core(theory: FieldTheory, y, y_d1, G, Gd):
    """Dispatch a density evaluation over a generic scalar ring."""
    if theory.name == "em":
        return em_density_core(y_d1, G)
    if theory.name == "kg_vector":
        if Gd is None:
            raise WrongCouplingOrder("kg_vector needs metric first derivatives")
        return kg_vector_density_core(y, y_d1, G, Gd, theory.mass)
    raise UnsupportedTheory(f"no density for theory {theory.name!r}")


# ---- exact jet-slot partials --------------------------------------------------


def sym_pairs(n: int) -> list[tuple[int, int]]:
    return [(mu, nu) for mu in range(n) for nu in range(mu, n)]


def lagrangian_value(theory: FieldTheory, p: Point, matter_jet: JetPoint, m: MetricJet) -> LagrangianValue:
    """Evaluate the density and all its jet-slot partials at one point."""
    matter_jet.require(1)
    n = m.dim
    ncomp = matter_jet.ncomp
    pairs = sym_pairs(n)
    need_gd = theory.coupling_order >= 1
    if need_gd and m.d1 is None:
        raise WrongCouplingOrder(
            f"{theory.name} has coupling order 1 but the metric jet has no d1"
        )

    nvars = ncomp + ncomp * n + len(pairs) + (len(pairs) * n if need_gd else 0)
    space = TaylorSpace(nvars, 1)
    k = 0

    def nxt(value: float):
        nonlocal k
        v = space.variable(k, float(value))
        k += 1
        return v

    y = [nxt(matter_jet.values[a]) for a in range(ncomp)]
    y_off = 0
    yd = [[nxt(matter_jet.d1[a, mu]) for mu in range(n)] for a in range(ncomp)]
    yd_off = ncomp
    G: list[list] = [[None] * n for _ in range(n)]
    g_off = ncomp + ncomp * n
    for mu, nu in pairs:
        v = nxt(m.components[mu, nu])
        G[mu][nu] = v
        G[nu][mu] = v
    Gd = None
    gd_off = g_off + len(pairs)
    if need_gd:
        Gd = [[[None] * n for _ in range(n)] for _ in range(n)]
        for mu, nu in pairs:
            for rho in range(n):
                v = nxt(m.d1[mu, nu, rho])
                Gd[mu][nu][rho] = v
                Gd[nu][mu][rho] = v

    out = density_core(theory, y, yd, G, Gd)
    grad = out.gradient()

    dy = grad[y_off : y_off + ncomp].copy()
    dyd = grad[yd_off : yd_off + ncomp * n].reshape(ncomp, n).copy()
    dG = np.zeros((n, n))
    for i, (mu, nu) in enumerate(pairs):
        val = grad[g_off + i] * (1.0 if mu == nu else 0.5)
        dG[mu, nu] = dG[nu, mu] = val
    dGd = None
    if need_gd:
        dGd = np.zeros((n, n, n))
        for i, (mu, nu) in enumerate(pairs):
            for rho in range(n):
                val = grad[gd_off + i * n + rho] * (1.0 if mu == nu else 0.5)
                dGd[mu, nu, rho] = dGd[nu, mu, rho] = val
    return LagrangianValue(density=out.value, dG=dG, dy=dy, dyd=dyd, dGd=dGd)


def em_lagrangian(p: Point, a_jet: JetPoint, m: MetricJet) -> LagrangianValue:
    return lagrangian_value(make_theory("em"), p, a_jet, m)


def kg_vector_lagrangian(p: Point, phi_jet: JetPoint, m: MetricJet, mass: float) -> LagrangianValue:
    return lagrangian_value(make_theory("kg_vector", mass=mass), p, phi_jet, m)
