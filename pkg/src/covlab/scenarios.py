"""On-shell solution constructors and the built-in scenario corpus.

On-shell configurations are built constructively: plane waves on the flat
fiber metric, transported through covariance fields by the exact symbolic
push-forward.  Nothing is ever obtained by numerically integrating the field
equations, so "on shell" is exact up to the residual tolerances quoted by the
checks.

The random generators (matter fields, covariance fields, base diffeomorphisms)
all draw from a caller-supplied ``numpy.random.Generator`` so that corpus
files and check runs are reproducible from a seed.  Shear-type diffeomorphism
generators carry exact symbolic inverses (triangular back-substitution), which
vector-field transport requires.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import BadDispersion, UnsupportedTheory, ValidationError
from .expr import Const, Cos, Expr, Sin, add, const, mul, sub, var
from .jets import AnalyticDiffeo, FieldMap, identity_map
from .parametrize import (
    CovarianceField,
    FiberMetric,
    symbolic_push_covector,
    symbolic_push_vector,
)
from .theories import FieldTheory, make_theory

_CONSTRAINT_TOL = 1e-12


def flat_dot(k, l) -> float:
    """Inner product of two covectors w.r.t. the flat fiber metric (-,+,...,+)."""
    k = np.asarray(k, dtype=float)
    l = np.asarray(l, dtype=float)
    return float(-k[0] * l[0] + k[1:] @ l[1:])


def linear_phase(k) -> Expr:
    """The expression sum_mu k_mu x^mu, skipping vanishing coefficients."""
    acc: Expr | None = None
    for mu, coeff in enumerate(k):
        if coeff == 0.0:
            continue
        term: Expr = var(mu) if coeff == 1.0 else mul(const(coeff), var(mu))
        acc = term if acc is None else add(acc, term)
    return acc if acc is not None else Const(0.0)


def em_plane_wave(k, eps, amplitude: float = 1.0) -> FieldMap:
    """Maxwell plane wave A_mu(x) = amplitude * eps_mu * cos(k.x).

    Solves the source-free field equations on the flat fiber metric exactly
    when the wave covector is null and the polarization transverse; both
    constraints are enforced here (to 1e-12) so the result is on shell by
    construction.
    """
    k = np.asarray(k, dtype=float)
    eps = np.asarray(eps, dtype=float)
    if k.shape != eps.shape or k.ndim != 1:
        raise ValueError("wave covector and polarization must share one shape")
    kk = flat_dot(k, k)
    if abs(kk) > _CONSTRAINT_TOL:
        raise BadDispersion(f"wave covector must be null: k.k = {kk:.3e}")
    ke = flat_dot(k, eps)
    if abs(ke) > _CONSTRAINT_TOL:
        raise BadDispersion(f"polarization must be transverse: k.eps = {ke:.3e}")
    phase = linear_phase(k)
    comps = tuple(
        mul(const(amplitude * e), Cos(phase)) if amplitude * e != 0.0 else Const(0.0)
        for e in eps
    )
    return FieldMap(comps, len(k))


def kg_plane_wave(k, eps, amplitude: float = 1.0, mass: float = 1.0) -> FieldMap:
    """Klein-Gordon vector plane wave phi^a(x) = amplitude * eps^a * cos(k.x).

    With signature (-,+,...,+) and density (kinetic - m^2 phi^2)/2, the wave
    solves the field equations iff the dispersion relation g^{ab} k_a k_b =
    +m^2 holds; e.g. k = (k0, sqrt(k0^2 + m^2), 0, ..., 0).  The polarization
    is unconstrained.  The dispersion is enforced here to 1e-12.
    """
    k = np.asarray(k, dtype=float)
    eps = np.asarray(eps, dtype=float)
    if k.shape != eps.shape or k.ndim != 1:
        raise ValueError("wave covector and polarization must share one shape")
    gap = flat_dot(k, k) - mass**2
    if abs(gap) > _CONSTRAINT_TOL:
        raise BadDispersion(f"dispersion violated: k.k - m^2 = {gap:.3e}")
    phase = linear_phase(k)
    comps = tuple(
        mul(const(amplitude * e), Cos(phase)) if amplitude * e != 0.0 else Const(0.0)
        for e in eps
    )
    return FieldMap(comps, len(k))


def pull_back_solution(flat_solution: FieldMap, eta: CovarianceField, rank: str) -> FieldMap:
    """Transport a flat-metric solution to one at covariance field eta.

    Applying the base diffeomorphism kappa = eta^{-1} to the trivially
    parametrized system (identity covariance field) carries the covariance
    field to eta and the matter field along with it, exactly as apply_diffeo
    does; solutions map to solutions by general covariance.  The covector
    transport needs only the forward expressions of eta; the vector transport
    additionally needs explicit inverse expressions.
    """
    if rank == "covector":
        return symbolic_push_covector(flat_solution, eta.map)
    if rank == "vector":
        if eta.inverse is None:
            raise ValidationError(
                "vector transport needs explicit inverse expressions "
                "on the covariance field"
            )
        return symbolic_push_vector(flat_solution, eta.inverse, eta.map)
    raise UnsupportedTheory(f"unknown matter rank {rank!r}")


@dataclass(frozen=True)
class OnShellFamily:
    """An exact solution family: wave data plus the realized field maps.

    ``matter`` solves the matter field equations for the covariance field
    ``cov`` (identity when ``cov`` is None, i.e. the flat background).
    """

    theory: FieldTheory
    k: tuple[float, ...]
    eps: tuple[float, ...]
    amplitude: float
    matter: FieldMap
    cov: CovarianceField | None = None

    @classmethod
    def em(cls, k, eps, amplitude: float = 1.0) -> "OnShellFamily":
        return cls(
            theory=make_theory("em"),
            k=tuple(float(v) for v in k),
            eps=tuple(float(v) for v in eps),
            amplitude=float(amplitude),
            matter=em_plane_wave(k, eps, amplitude),
        )

    @classmethod
    def kg(cls, k, eps, amplitude: float = 1.0, mass: float = 1.0) -> "OnShellFamily":
        return cls(
            theory=make_theory("kg_vector", mass=mass),
            k=tuple(float(v) for v in k),
            eps=tuple(float(v) for v in eps),
            amplitude=float(amplitude),
            matter=kg_plane_wave(k, eps, amplitude, mass),
        )

    def pulled_back(self, eta: CovarianceField) -> "OnShellFamily":
        """The same solution expressed at covariance field eta."""
        base = self.matter if self.cov is None else None
        if base is None:
            raise ValidationError("family is already parametrized; pull back the flat one")
        return replace(
            self,
            matter=pull_back_solution(base, eta, self.theory.matter_rank),
            cov=eta,
        )


# ---- seeded random draws -----------------------------------------------------


def random_points(box, count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform sample of `count` points from a per-coordinate [lo, hi] box."""
    box = np.asarray(box, dtype=float)
    if box.ndim != 2 or box.shape[1] != 2:
        raise ValueError("box must be a sequence of (lo, hi) pairs")
    return rng.uniform(box[:, 0], box[:, 1], size=(count, box.shape[0]))


def _random_affine(dim: int, rng: np.random.Generator, slope: float) -> Expr:
    """offset + sum_mu c_mu x^mu with |c_mu| <= slope."""
    coeffs = rng.uniform(-slope, slope, dim)
    acc: Expr = const(rng.uniform(-0.5, 0.5))
    for mu in range(dim):
        acc = add(acc, mul(const(coeffs[mu]), var(mu)))
    return acc


def random_matter_field(dim: int, rng: np.random.Generator, amplitude: float = 0.4) -> FieldMap:
    """A smooth generic (generally off-shell) field with `dim` components."""
    comps = tuple(
        mul(const(amplitude), Sin(_random_affine(dim, rng, 0.6))) for _ in range(dim)
    )
    return FieldMap(comps, dim)


def _shear_maps(dim: int, rng: np.random.Generator, amplitude: float, upper: bool):
    """A triangular shear x^a -> x^a + f_a(later coords) and its exact inverse.

    "Later" means higher index for an upper shear, lower index for a lower
    one; the last coordinate in that order is untouched, so the inverse is a
    finite back-substitution with closed-form expressions.
    """
    order = list(range(dim)) if upper else list(range(dim - 1, -1, -1))
    perturb: dict[int, Expr] = {}
    for pos, a in enumerate(order):
        later = order[pos + 1 :]
        if not later:
            continue
        coeffs = rng.uniform(-0.6, 0.6, len(later))
        acc: Expr = const(rng.uniform(-0.5, 0.5))
        for c, v in zip(coeffs, later):
            acc = add(acc, mul(const(c), var(v)))
        perturb[a] = mul(const(amplitude), Sin(acc))
    fwd = tuple(add(var(a), perturb[a]) if a in perturb else var(a) for a in range(dim))
    solved: dict[int, Expr] = {}
    for a in reversed(order):
        if a in perturb:
            solved[a] = sub(var(a), perturb[a].subst(solved))
        else:
            solved[a] = var(a)
    inv = tuple(solved[a] for a in range(dim))
    return FieldMap(fwd, dim), FieldMap(inv, dim)


def random_shear_maps(dim: int, rng: np.random.Generator, amplitude: float = 0.12):
    """A generic small diffeomorphism with exact inverse expressions.

    Composes an upper and a lower triangular shear, so every component ends
    up depending on every coordinate while the inverse stays closed-form.
    """
    up, up_inv = _shear_maps(dim, rng, amplitude, upper=True)
    lo, lo_inv = _shear_maps(dim, rng, amplitude, upper=False)
    return up.compose(lo), lo_inv.compose(up_inv)


def random_diffeo(dim: int, rng: np.random.Generator, amplitude: float = 0.12) -> AnalyticDiffeo:
    """A random base diffeomorphism with exact inverse expressions."""
    fwd, inv = random_shear_maps(dim, rng, amplitude)
    return AnalyticDiffeo(fwd, inverse=inv)


def random_covariance_field(
    dim: int,
    rng: np.random.Generator,
    amplitude: float = 0.12,
    exact_inverse: bool = True,
) -> CovarianceField:
    """A random covariance field close to the identity.

    With ``exact_inverse`` the draw is a composed triangular shear whose
    inverse is symbolic (needed for vector-field transport); otherwise each
    component is x^a + amplitude*sin(affine), inverted by Newton iteration
    when required.  Both stay orientation-preserving diffeomorphisms for the
    default amplitudes (the perturbation Jacobian stays well below 1).
    """
    if exact_inverse:
        fwd, inv = random_shear_maps(dim, rng, amplitude)
        return CovarianceField(fwd, inverse=inv)
    comps = tuple(
        add(var(a), mul(const(amplitude), Sin(_random_affine(dim, rng, 0.3))))
        for a in range(dim)
    )
    return CovarianceField(FieldMap(comps, dim))


# ---- the built-in corpus -------------------------------------------------------

SCENARIO_SCHEMA = "covlab/scenario-v1"

_EM_CHECKS = [
    "el_matter",
    "equivariance",
    "piola_kirchhoff",
    "theorem2",
    "corollary",
    "sem_relation",
    "sem_vanishing",
]
_KG_CHECKS = [
    "el_matter",
    "equivariance",
    "piola_kirchhoff",
    "dcoupled_theorem2",
    "corollary",
    "sem_relation",
    "sem_vanishing",
]


def _doc(name, dim, theory, g, matter, cov, box, count, seed, checks, richardson=True):
    cov_map, cov_inv = cov
    return {
        "schema": SCENARIO_SCHEMA,
        "name": name,
        "dimension": dim,
        "theory": theory,
        "fiber_metric": g.to_prefix(),
        "matter": matter.to_prefix(),
        "covariance_field": {
            "map": cov_map.to_prefix(),
            "inverse": cov_inv.to_prefix() if cov_inv is not None else None,
        },
        "sample": {"box": [list(b) for b in box], "count": count, "seed": seed},
        "steps": {"step": 1e-4, "richardson": richardson},
        "checks": list(checks),
    }


def builtin_scenarios() -> dict[str, dict]:
    """The shipped scenario documents, reconstructed deterministically."""
    docs = {}
    box4 = [(-0.5, 0.5)] * 4

    # Flagship: flat covariance field, Minkowski fiber metric, exact Maxwell
    # plane wave.  Everything is on shell, so every check applies.
    wave = OnShellFamily.em(k=(1.0, 1.0, 0.0, 0.0), eps=(0.0, 0.0, 1.0, 0.0))
    ident = identity_map(4)
    docs["em_minkowski_identity"] = _doc(
        "em_minkowski_identity",
        4,
        {"name": "em"},
        FiberMetric.minkowski(4),
        wave.matter,
        (ident, ident),
        box4,
        30,
        20260817,
        _EM_CHECKS,
    )

    # The same wave transported through a random covariance field: still on
    # shell, now with nontrivial eta, so the vacuousness checks bite.
    rng = np.random.default_rng(4021)
    eta = random_covariance_field(4, rng, amplitude=0.1)
    pulled = wave.pulled_back(eta)
    docs["em_random_eta"] = _doc(
        "em_random_eta",
        4,
        {"name": "em"},
        FiberMetric.minkowski(4),
        pulled.matter,
        (eta.map, eta.inverse),
        box4,
        20,
        20260818,
        _EM_CHECKS,
    )

    # Generic off-shell matter: the identity checks must still pass while the
    # on-shell-only checks report n/a.
    rng = np.random.default_rng(4022)
    matter_off = random_matter_field(4, rng)
    eta_off = random_covariance_field(4, rng, amplitude=0.1)
    docs["em_offshell_demo"] = _doc(
        "em_offshell_demo",
        4,
        {"name": "em"},
        FiberMetric.minkowski(4),
        matter_off,
        (eta_off.map, eta_off.inverse),
        box4,
        20,
        20260819,
        ["equivariance", "piola_kirchhoff", "theorem2", "corollary", "sem_relation", "sem_vanishing"],
    )

    # Derivative-coupled theory on the flat background.
    mass = 1.3
    k0 = 0.7
    k1 = float(np.sqrt(k0**2 + mass**2))
    kg_wave = OnShellFamily.kg(
        k=(k0, k1, 0.0, 0.0), eps=(0.3, -0.2, 0.5, 0.1), mass=mass
    )
    docs["kg_flat_planewave"] = _doc(
        "kg_flat_planewave",
        4,
        {"name": "kg_vector", "mass": mass},
        FiberMetric.minkowski(4),
        kg_wave.matter,
        (ident, ident),
        box4,
        5,
        20260820,
        _KG_CHECKS,
        richardson=False,
    )

    # Derivative-coupled theory at a nontrivial covariance field; the vector
    # transport consumes the exact inverse expressions.
    rng = np.random.default_rng(4023)
    eta_kg = random_covariance_field(4, rng, amplitude=0.08)
    kg_pulled = kg_wave.pulled_back(eta_kg)
    docs["kg_random_eta"] = _doc(
        "kg_random_eta",
        4,
        {"name": "kg_vector", "mass": mass},
        FiberMetric.minkowski(4),
        kg_pulled.matter,
        (eta_kg.map, eta_kg.inverse),
        box4,
        4,
        20260821,
        _KG_CHECKS,
        richardson=False,
    )

    # Two-dimensional fast path for CI: off-shell matter, identity checks only.
    rng = np.random.default_rng(4024)
    matter2 = random_matter_field(2, rng)
    eta2 = random_covariance_field(2, rng, amplitude=0.1)
    docs["dim2_smoke"] = _doc(
        "dim2_smoke",
        2,
        {"name": "em"},
        FiberMetric.minkowski(2),
        matter2,
        (eta2.map, eta2.inverse),
        [(-0.5, 0.5)] * 2,
        6,
        20260822,
        ["equivariance", "piola_kirchhoff", "theorem2", "sem_relation"],
    )
    return docs
