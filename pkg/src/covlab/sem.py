"""Stress-energy-momentum tensor densities and their cross-checks.

Two independent computation routes are kept for every object:

* the Hilbert route, ``T^{mu nu} = 2 dL/dG_{mu nu}`` (for derivative coupling
  the variational derivative ``2[dL/dG - D_rho(dL/dG_{mu nu,rho})]``), and
* the closed flux formula

      T^mu_nu = L d^mu_nu - dL/dpsi^A_{,mu} psi^A_{,nu}
                + dL/dpsi^A_{,mu} C^A_nu + D_rho(dL/dpsi^A_{,rho} C^{A mu}_nu),

  where the sum runs over every field of the system (for the background
  theory that includes the metric itself; for the parametrized theory the
  metric is replaced by the covariance field, whose lift carries no
  C coefficients, and the derivative-coupled case picks up the second
  momenta conjugate to eta).

All outputs are weight-1 densities (the volume factor is inside).  Total
derivatives are central differences over exact jet evaluations; pass
``richardson=True`` to refine them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import IndexTooHigh, WrongCouplingOrder
from .geometry import MetricJet, SemDensity, christoffel, covariant_divergence_density
from .jets import Point, total_derivative, total_derivative_richardson
from .parametrize import ParametrizedSystem, piola_kirchhoff
from .theories import FieldTheory, lagrangian_value, lift_coefficients

MetricField = Callable[[Point], MetricJet]


@dataclass
class SemReport:
    """The SEM objects of one scenario point, bundled for reporting."""

    hilbert: SemDensity
    flux_mixed: np.ndarray
    relation_residual: np.ndarray
    conservation_residual: np.ndarray


def _D(q, p: Point, mu: int, step: float, richardson: bool):
    if richardson:
        return total_derivative_richardson(q, p, mu, h=step)
    return total_derivative(q, p, mu, h=step)


def hilbert_sem(theory: FieldTheory, p: Point, phi_jet, m: MetricJet) -> SemDensity:
    """T^{mu nu} = 2 dL/dG_{mu nu} for pointwise metric coupling."""
    if theory.coupling_order != 0:
        raise WrongCouplingOrder(
            f"{theory.name} couples to metric derivatives; use hilbert_sem_derivative_coupled"
        )
    lv = lagrangian_value(theory, p, phi_jet, m)
    contra = 2.0 * lv.dG
    return SemDensity(contravariant=contra, mixed=contra @ m.components)


def hilbert_sem_derivative_coupled(
    theory: FieldTheory,
    p: Point,
    matter,
    metric_field: MetricField,
    step: float = 1e-4,
    richardson: bool = False,
) -> SemDensity:
    """T^{mu nu} = 2[dL/dG_{mu nu} - D_rho(dL/dG_{mu nu,rho})].

    The total derivative needs the metric partials on a neighborhood, hence
    the field evaluators instead of single jets.
    """
    if theory.coupling_order != 1:
        raise WrongCouplingOrder(f"{theory.name} has no metric-derivative coupling")
    p = np.asarray(p, dtype=float)
    m = metric_field(p)
    lv = lagrangian_value(theory, p, matter.jet(p, 1), m)

    def dGd_at(x: Point) -> np.ndarray:
        return lagrangian_value(theory, x, matter.jet(x, 1), metric_field(x)).dGd

    corr = np.zeros_like(lv.dG)
    for rho in range(p.size):
        corr += _D(dGd_at, p, rho, step, richardson)[:, :, rho]
    contra = 2.0 * (lv.dG - corr)
    return SemDensity(contravariant=contra, mixed=contra @ m.components)


def variational_dG(
    theory: FieldTheory,
    p: Point,
    matter,
    metric_field: MetricField,
    step: float = 1e-4,
    richardson: bool = False,
) -> np.ndarray:
    """dL/dG_{mu nu} as a variational derivative: pointwise minus D_rho of dGd."""
    if theory.coupling_order == 0:
        p = np.asarray(p, dtype=float)
        return lagrangian_value(theory, p, matter.jet(p, 1), metric_field(p)).dG
    s = hilbert_sem_derivative_coupled(theory, p, matter, metric_field, step, richardson)
    return 0.5 * s.contravariant


def sem_with_derivatives(
    theory: FieldTheory,
    p: Point,
    matter,
    metric_field: MetricField,
    step: float = 1e-4,
    richardson: bool = False,
) -> SemDensity:
    """Hilbert SEM plus its coordinate partials d1[mu, nu, rho] = d_rho T^{mu nu}.

    For derivative coupling the outer differences use twice the inner step so
    the two levels of differencing stay decorrelated.
    """
    p = np.asarray(p, dtype=float)
    n = p.size

    if theory.coupling_order == 0:
        def T_at(x: Point) -> np.ndarray:
            return hilbert_sem(theory, x, matter.jet(x, 1), metric_field(x)).contravariant

        outer = step
    else:
        def T_at(x: Point) -> np.ndarray:
            return hilbert_sem_derivative_coupled(
                theory, x, matter, metric_field, step, richardson
            ).contravariant

        outer = 2.0 * step

    contra = T_at(p)
    d1 = np.stack([_D(T_at, p, rho, outer, richardson) for rho in range(n)], axis=-1)
    return SemDensity(contravariant=contra, mixed=contra @ metric_field(p).components, d1=d1)


def flux_formula_sem(
    theory: FieldTheory,
    p: Point,
    matter,
    metric_field: MetricField,
    step: float = 1e-4,
    richardson: bool = False,
) -> SemDensity:
    """Mixed SEM density of the background theory by the closed flux formula.

    The field sum covers the matter field and the background metric; the
    metric's contribution is nonzero only under derivative coupling, where its
    lift coefficients are C^{(al be) mu}_nu = -G_{nu be} d^mu_al - G_{al nu} d^mu_be.
    """
    if theory.lift_index > 1:
        raise IndexTooHigh(
            f"flux formula covers lift index <= 1, theory declares {theory.lift_index}"
        )
    p = np.asarray(p, dtype=float)
    n = p.size
    pj = matter.jet(p, 1)
    m = metric_field(p)
    lv = lagrangian_value(theory, p, pj, m)
    lift = lift_coefficients(theory, pj.values)

    mixed = lv.density * np.eye(n)
    mixed -= np.einsum("am,an->mn", lv.dyd, pj.d1)
    mixed += np.einsum("am,an->mn", lv.dyd, lift.C0)

    def matter_op(x: Point) -> np.ndarray:
        pjx = matter.jet(x, 1)
        lvx = lagrangian_value(theory, x, pjx, metric_field(x))
        liftx = lift_coefficients(theory, pjx.values)
        return np.einsum("ar,amn->rmn", lvx.dyd, liftx.C1)

    for rho in range(n):
        mixed += _D(matter_op, p, rho, step, richardson)[rho]

    if theory.coupling_order >= 1:
        mixed -= np.einsum("abm,abn->mn", lv.dGd, m.d1)

        def metric_op(x: Point) -> np.ndarray:
            mx = metric_field(x)
            lvx = lagrangian_value(theory, x, matter.jet(x, 1), mx)
            return -2.0 * np.einsum("mbr,bn->rmn", lvx.dGd, mx.components)

        for rho in range(n):
            mixed += _D(metric_op, p, rho, step, richardson)[rho]

    return SemDensity(mixed=mixed)


def flux_formula_sem_parametrized(
    system: ParametrizedSystem,
    p: Point,
    step: float = 1e-4,
    richardson: bool = False,
) -> SemDensity:
    """Mixed SEM density of the parametrized theory by the flux formula.

    The covariance field enters as a fibre-valued scalar (no C coefficients),
    so its whole contribution is algebraic in the momenta: the first momenta
    against eta^a_{,nu} plus, under derivative coupling, twice the second
    momenta against eta^a_{,rho nu} (the total-derivative cross terms of the
    second momenta cancel by their mu-rho symmetry).
    """
    theory = system.theory
    if theory.lift_index > 1:
        raise IndexTooHigh(
            f"flux formula covers lift index <= 1, theory declares {theory.lift_index}"
        )
    p = np.asarray(p, dtype=float)
    n = p.size
    order = 2 if theory.coupling_order >= 1 else 1
    pj = system.matter_jet(p, 1)
    ej = system.eta_jet(p, order)
    lv = system.lagrangian(p)
    lift = lift_coefficients(theory, pj.values)

    mixed = lv.density * np.eye(n)
    mixed -= np.einsum("am,an->mn", lv.dyd, pj.d1)
    mixed += np.einsum("am,an->mn", lv.dyd, lift.C0)

    def matter_op(x: Point) -> np.ndarray:
        pjx = system.matter_jet(x, 1)
        lvx = system.lagrangian(x)
        liftx = lift_coefficients(theory, pjx.values)
        return np.einsum("ar,amn->rmn", lvx.dyd, liftx.C1)

    for rho in range(n):
        mixed += _D(matter_op, p, rho, step, richardson)[rho]

    pk = piola_kirchhoff(theory, p, pj, ej, system.fiber_metric)
    mixed -= np.einsum("am,an->mn", pk.rho, ej.d1)
    if theory.coupling_order >= 1:
        mixed -= 2.0 * np.einsum("amr,arn->mn", pk.p2, ej.d2)

    return SemDensity(mixed=mixed)


def sem_relation_residual(
    tilde: SemDensity, orig: SemDensity, dG: np.ndarray, G: np.ndarray
) -> np.ndarray:
    """Residual of  Ttilde^mu_nu = T^mu_nu - 2 dL/dG_{mu rho} G_{rho nu}.

    Vanishes identically (to differencing noise) when both mixed densities
    come from the flux formula and dG is the matching (variational, under
    derivative coupling) metric partial.
    """
    return tilde.mixed - orig.mixed + 2.0 * dG @ G


def conservation_residual(
    theory: FieldTheory,
    p: Point,
    matter,
    metric_field: MetricField,
    step: float = 1e-4,
    richardson: bool = False,
) -> np.ndarray:
    """Covariant divergence of the Hilbert SEM; zero on shell."""
    p = np.asarray(p, dtype=float)
    s = sem_with_derivatives(theory, p, matter, metric_field, step, richardson)
    gamma = christoffel(metric_field(p))
    return covariant_divergence_density(s, gamma)
