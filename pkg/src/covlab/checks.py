"""Named verification checks executed over sampled scenario points.

Each check certifies one identity of the covariance-field construction and
reports aggregate residuals.  Checks are independent of each other: any
randomness is drawn from a per-check stream derived from the scenario seed,
so reordering or omitting checks never changes another check's numbers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .eleq import (
    el_residual_eta,
    el_residual_eta_first_order,
    el_residual_eta_second_order,
    el_residual_matter_batch,
    theorem2_contraction,
)
from .errors import ValidationError, WrongCouplingOrder
from .parametrize import (
    ComposedCovField,
    ParametrizedSystem,
    TransportedField,
    parametrized_lagrangian,
    piola_kirchhoff,
)
from .scenarios import random_diffeo
from .sem import (
    SemReport,
    conservation_residual,
    flux_formula_sem,
    flux_formula_sem_parametrized,
    hilbert_sem,
    hilbert_sem_derivative_coupled,
    sem_relation_residual,
    sem_with_derivatives,
)

# A scenario's matter field counts as on shell when its Euler-Lagrange
# residual stays below this at the probe points.
ON_SHELL_THRESHOLD = 1e-7
_PROBE_POINTS = 5


@dataclass
class RunContext:
    """Everything a check needs: the system, the points, steps, and seeds."""

    system: ParametrizedSystem
    points: np.ndarray
    seed: int = 0
    step: float = 1e-4
    richardson: bool = False
    _on_shell: bool | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)

    @property
    def theory(self):
        return self.system.theory

    def metric_field(self):
        return lambda q: self.system.metric_jet(q, 1)

    def check_rng(self, name: str) -> np.random.Generator:
        """A per-check random stream, independent of check order."""
        return np.random.default_rng([self.seed, _CHECK_ORDER[name]])

    def on_shell(self) -> bool:
        """Probe whether the scenario's matter field solves its equations."""
        if self._on_shell is None:
            res = el_residual_matter_batch(
                self.theory,
                self.points[:_PROBE_POINTS],
                self.system.matter,
                self.metric_field(),
                self.step,
                self.richardson,
            )
            self._on_shell = max(r.max_abs for r in res) < ON_SHELL_THRESHOLD
        return self._on_shell


@dataclass
class CheckResult:
    """Aggregate outcome of one named check over the sampled points."""

    name: str
    verifies: str
    status: str  # "pass" | "fail" | "n/a"
    points: int
    tolerance: float
    max_residual: float | None
    mean_residual: float | None
    note: str = ""
    details: list[dict] = field(default_factory=list)

    @property
    def failed(self) -> bool:
        return self.status == "fail"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "verifies": self.verifies,
            "status": self.status,
            "points": self.points,
            "tolerance": self.tolerance,
            "max_residual": self.max_residual,
            "mean_residual": self.mean_residual,
            "note": self.note,
            "details": self.details,
        }


def _pt(x) -> list[float]:
    return [float(v) for v in x]


def _mat(m) -> list[list[float]]:
    return [[float(v) for v in row] for row in np.asarray(m)]


# ---- the individual checks ------------------------------------------------------


def _check_equivariance(ctx: RunContext):
    """Transport everything by a random diffeomorphism; the density is scalar.

    For each sample point a fresh sigma is drawn and the residual
    |Ltilde'(sigma(x)) det Dsigma(x) - Ltilde(x)| / (1 + |Ltilde(x)|)
    is recorded.  The transported fields are evaluated through exact jets of
    sigma and its inverse rather than by expression substitution, which keeps
    the cost flat for scenarios with large matter expressions.
    """
    sys_ = ctx.system
    theory = sys_.theory
    g = sys_.fiber_metric
    eta_order = 2 if theory.coupling_order >= 1 else 1
    rng = ctx.check_rng("equivariance")
    residuals, details = [], []
    for x in ctx.points:
        sigma = random_diffeo(sys_.cov_field.dim, rng, amplitude=0.1)
        matter_t = TransportedField(sys_.matter, sigma, theory.matter_rank)
        cov_t = ComposedCovField(sys_.cov_field, sigma)
        base = sys_.lagrangian(x).density
        sx = sigma.map(x)
        det = float(np.linalg.det(sigma.jet(x, 1).d1))
        moved = parametrized_lagrangian(
            theory, sx, matter_t.jet(sx, 1), cov_t.jet(sx, eta_order), g
        ).density
        r = abs(moved * det - base) / (1.0 + abs(base))
        residuals.append(r)
        details.append({"point": _pt(x), "residual": r})
    return residuals, details


def _check_piola_kirchhoff(ctx: RunContext):
    """First (and second) momenta: chain-rule formula vs direct partials."""
    sys_ = ctx.system
    theory = sys_.theory
    order = 2 if theory.coupling_order >= 1 else 1
    residuals, details = [], []
    for x in ctx.points:
        pk = piola_kirchhoff(
            theory, x, sys_.matter_jet(x, 1), sys_.eta_jet(x, order), sys_.fiber_metric
        )
        rho_gap = float(np.max(np.abs(pk.rho - pk.rho_direct)))
        entry = {"point": _pt(x), "rho_gap": rho_gap}
        r = rho_gap
        if pk.p2 is not None:
            p2_gap = float(np.max(np.abs(pk.p2 - pk.p2_direct)))
            entry["p2_gap"] = p2_gap
            r = max(r, p2_gap)
        entry["residual"] = r
        residuals.append(r)
        details.append(entry)
    return residuals, details


def _theorem2_gap(ctx: RunContext, x, second_order: bool):
    sys_ = ctx.system
    if second_order:
        el = el_residual_eta_second_order(
            sys_, x, step=ctx.step, richardson=ctx.richardson
        )
    else:
        el = el_residual_eta_first_order(sys_, x, ctx.step, ctx.richardson)
    sem = sem_with_derivatives(
        sys_.theory, x, sys_.matter, ctx.metric_field(), ctx.step, ctx.richardson
    )
    t2 = theorem2_contraction(el, sys_.eta_jet(x, 2), sys_.fiber_metric, sem)
    gap = float(np.max(np.abs(t2.contracted - t2.divergence_form)))
    detail = {
        "point": _pt(x),
        "residual": gap,
        "contracted": _pt(t2.contracted),
        "divergence_form": _pt(t2.divergence_form),
    }
    return gap, detail


def _check_theorem2(ctx: RunContext):
    """Contracted covariance-field equations vs -2 div(SEM), pointwise coupling."""
    residuals, details = [], []
    for x in ctx.points:
        gap, detail = _theorem2_gap(ctx, x, second_order=False)
        residuals.append(gap)
        details.append(detail)
    return residuals, details


def _check_dcoupled_theorem2(ctx: RunContext):
    """Same two-route identity with the second-order equations and variational SEM."""
    residuals, details = [], []
    for x in ctx.points:
        gap, detail = _theorem2_gap(ctx, x, second_order=True)
        residuals.append(gap)
        details.append(detail)
    return residuals, details


def _check_corollary(ctx: RunContext):
    """On shell the covariance-field equations hold with no condition on eta."""
    residuals, details = [], []
    for x in ctx.points:
        r = el_residual_eta(ctx.system, x, ctx.step, ctx.richardson)
        residuals.append(r.max_abs)
        details.append({"point": _pt(x), "residual": r.max_abs, "values": _pt(r.values)})
    return residuals, details


def _check_sem_relation(ctx: RunContext):
    """Ttilde = T - 2 (dL/dG) G in mixed form, with the full SEM bundle reported."""
    sys_ = ctx.system
    theory = sys_.theory
    mf = ctx.metric_field()
    residuals, details = [], []
    for x in ctx.points:
        if theory.coupling_order == 0:
            hil = hilbert_sem(theory, x, sys_.matter_jet(x, 1), mf(x))
        else:
            hil = hilbert_sem_derivative_coupled(
                theory, x, sys_.matter, mf, ctx.step, ctx.richardson
            )
        dG = 0.5 * hil.contravariant
        tilde = flux_formula_sem_parametrized(sys_, x, ctx.step, ctx.richardson)
        orig = flux_formula_sem(theory, x, sys_.matter, mf, ctx.step, ctx.richardson)
        G = sys_.metric_jet(x, 0).components
        rel = sem_relation_residual(tilde, orig, dG, G)
        cons = conservation_residual(
            theory, x, sys_.matter, mf, ctx.step, ctx.richardson
        )
        rep = SemReport(
            hilbert=hil,
            flux_mixed=orig.mixed,
            relation_residual=rel,
            conservation_residual=cons,
        )
        r = float(np.max(np.abs(rel)))
        residuals.append(r)
        details.append(
            {
                "point": _pt(x),
                "residual": r,
                "hilbert_contravariant": _mat(rep.hilbert.contravariant),
                "hilbert_mixed": _mat(rep.hilbert.mixed),
                "flux_mixed": _mat(rep.flux_mixed),
                "flux_parametrized_mixed": _mat(tilde.mixed),
                "relation_residual": _mat(rep.relation_residual),
                "conservation_residual": _pt(rep.conservation_residual),
            }
        )
    return residuals, details


def _check_sem_vanishing(ctx: RunContext):
    """The parametrized theory's SEM density is identically zero on shell."""
    residuals, details = [], []
    for x in ctx.points:
        tilde = flux_formula_sem_parametrized(ctx.system, x, ctx.step, ctx.richardson)
        r = float(np.max(np.abs(tilde.mixed)))
        residuals.append(r)
        details.append(
            {"point": _pt(x), "residual": r, "flux_parametrized_mixed": _mat(tilde.mixed)}
        )
    return residuals, details


def _check_el_matter(ctx: RunContext):
    """Certify that the scenario's matter field solves its field equations."""
    res = el_residual_matter_batch(
        ctx.theory, ctx.points, ctx.system.matter, ctx.metric_field(), ctx.step, ctx.richardson
    )
    residuals, details = [], []
    for x, r in zip(ctx.points, res):
        residuals.append(r.max_abs)
        details.append({"point": _pt(x), "residual": r.max_abs, "values": _pt(r.values)})
    return residuals, details


# ---- catalog and runner ---------------------------------------------------------


@dataclass(frozen=True)
class CheckSpec:
    name: str
    verifies: str
    run: Callable[[RunContext], tuple[list[float], list[dict]]]
    tol: dict[int, float]  # by coupling order
    coupling: int | None = None  # required coupling order, None = any
    on_shell_only: bool = False

    def tolerance(self, coupling_order: int) -> float:
        return self.tol.get(coupling_order, next(iter(self.tol.values())))


_SPECS = [
    CheckSpec(
        name="equivariance",
        verifies=(
            "transporting matter, covariance field and base point by a common "
            "diffeomorphism leaves the parametrized Lagrangian density invariant "
            "as a scalar density"
        ),
        run=_check_equivariance,
        tol={0: 1e-7, 1: 1e-7},
    ),
    CheckSpec(
        name="piola_kirchhoff",
        verifies=(
            "the closed chain-rule formula for the momenta conjugate to the "
            "covariance field agrees with their direct definition as partial "
            "derivatives of the density"
        ),
        run=_check_piola_kirchhoff,
        tol={0: 1e-8, 1: 1e-8},
    ),
    CheckSpec(
        name="theorem2",
        verifies=(
            "the Euler-Lagrange equations for the covariance field, contracted "
            "back to base indices, equal minus twice the covariant divergence of "
            "the stress-energy-momentum tensor density (pointwise metric coupling)"
        ),
        run=_check_theorem2,
        tol={0: 1e-6},
        coupling=0,
    ),
    CheckSpec(
        name="corollary",
        verifies=(
            "on shell the covariance-field equations are vacuous: any solution "
            "of the matter field equations satisfies them for every covariance field"
        ),
        run=_check_corollary,
        tol={0: 1e-6, 1: 1e-5},
        on_shell_only=True,
    ),
    CheckSpec(
        name="sem_relation",
        verifies=(
            "the mixed stress-energy-momentum density of the parametrized theory "
            "equals the background one minus twice dL/dG contracted with the "
            "pullback metric"
        ),
        run=_check_sem_relation,
        tol={0: 1e-8, 1: 1e-8},
    ),
    CheckSpec(
        name="sem_vanishing",
        verifies=(
            "the stress-energy-momentum tensor density of the fully covariant "
            "parametrized theory vanishes on shell"
        ),
        run=_check_sem_vanishing,
        tol={0: 1e-6, 1: 1e-6},
        on_shell_only=True,
    ),
    CheckSpec(
        name="el_matter",
        verifies=(
            "the scenario's matter field solves its own Euler-Lagrange equations "
            "(certifies the on-shell construction)"
        ),
        run=_check_el_matter,
        tol={0: 1e-7, 1: 1e-6},
    ),
    CheckSpec(
        name="dcoupled_theorem2",
        verifies=(
            "under derivative coupling the second-order covariance-field "
            "equations, contracted back to base indices, equal minus twice the "
            "covariant divergence of the variational stress-energy-momentum density"
        ),
        run=_check_dcoupled_theorem2,
        tol={1: 1e-5},
        coupling=1,
    ),
]

CATALOG: dict[str, CheckSpec] = {s.name: s for s in _SPECS}
_CHECK_ORDER = {name: i for i, name in enumerate(CATALOG)}


def list_checks() -> list[tuple[str, str]]:
    """The stable catalog: (name, what the check verifies)."""
    return [(s.name, s.verifies) for s in _SPECS]


def run_check(name: str, ctx: RunContext) -> CheckResult:
    spec = CATALOG.get(name)
    if spec is None:
        known = ", ".join(CATALOG)
        raise ValidationError(f"unknown check {name!r}; known checks: {known}")
    coupling = ctx.theory.coupling_order
    if spec.coupling is not None and coupling != spec.coupling:
        raise WrongCouplingOrder(
            f"check {name!r} requires metric coupling order {spec.coupling}, "
            f"but theory {ctx.theory.name!r} has order {coupling}"
        )
    tol = spec.tolerance(coupling)
    if spec.on_shell_only and not ctx.on_shell():
        return CheckResult(
            name=name,
            verifies=spec.verifies,
            status="n/a",
            points=0,
            tolerance=tol,
            max_residual=None,
            mean_residual=None,
            note=(
                "matter field is off shell at the probe points; "
                "this identity only applies to solutions"
            ),
        )
    residuals, details = spec.run(ctx)
    worst = float(np.max(residuals))
    return CheckResult(
        name=name,
        verifies=spec.verifies,
        status="pass" if worst < tol else "fail",
        points=len(ctx.points),
        tolerance=tol,
        max_residual=worst,
        mean_residual=float(np.mean(residuals)),
        details=details,
    )


def run_checks(ctx: RunContext, names: list[str]) -> list[CheckResult]:
    """Run the named checks in the order given; unknown names fail fast."""
    unknown = [n for n in names if n not in CATALOG]
    if unknown:
        known = ", ".join(CATALOG)
        raise ValidationError(
            f"unknown checks {unknown!r}; known checks: {known}"
        )
    return [run_check(n, ctx) for n in names]
