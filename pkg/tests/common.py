"""Shared constructors for the test suite."""

import numpy as np

from covlab.jets import identity_map
from covlab.parametrize import CovarianceField, FiberMetric, ParametrizedSystem
from covlab.scenarios import (
    OnShellFamily,
    random_covariance_field,
    random_matter_field,
    random_points,
)
from covlab.theories import make_theory

BOX4 = [(-0.5, 0.5)] * 4
BOX2 = [(-0.5, 0.5)] * 2

KG_MASS = 1.3
KG_K0 = 0.7
KG_K1 = float(np.sqrt(KG_K0**2 + KG_MASS**2))

# a genuinely curved (but Lorentzian-on-the-box) analytic fiber metric
CURVED_ROWS = [
    ["(+ -1 (* 0.1 (sin u1)))", "(* 0.05 (cos u0))", "0", "0"],
    ["(* 0.05 (cos u0))", "(+ 1 (* 0.1 (sin (* 2 u2))))", "(* 0.04 (sin u3))", "0"],
    ["0", "(* 0.04 (sin u3))", "(+ 1 (* 0.08 (cos u1)))", "0"],
    ["0", "0", "0", "(+ 1 (* 0.06 (sin u0)))"],
]


def mink(dim=4):
    return FiberMetric.minkowski(dim)


def curved_metric():
    return FiberMetric.from_prefix(CURVED_ROWS)


def em_wave():
    return OnShellFamily.em(k=(1.0, 1.0, 0.0, 0.0), eps=(0.0, 0.0, 1.0, 0.0))


def kg_wave():
    return OnShellFamily.kg(
        k=(KG_K0, KG_K1, 0.0, 0.0), eps=(0.3, -0.2, 0.5, 0.1), mass=KG_MASS
    )


def identity_cov(dim=4):
    ident = identity_map(dim)
    return CovarianceField(ident, ident)


def em_flat_system():
    return ParametrizedSystem(make_theory("em"), em_wave().matter, identity_cov(), mink())


def em_pulled_system(seed=4021, amplitude=0.1):
    rng = np.random.default_rng(seed)
    eta = random_covariance_field(4, rng, amplitude=amplitude)
    pulled = em_wave().pulled_back(eta)
    return ParametrizedSystem(make_theory("em"), pulled.matter, pulled.cov, mink())


def em_offshell_system(seed=4022, dim=4):
    rng = np.random.default_rng(seed)
    matter = random_matter_field(dim, rng)
    eta = random_covariance_field(dim, rng, amplitude=0.1)
    return ParametrizedSystem(make_theory("em"), matter, eta, mink(dim))


def kg_flat_system():
    return ParametrizedSystem(
        make_theory("kg_vector", mass=KG_MASS), kg_wave().matter, identity_cov(), mink()
    )


def kg_pulled_system(seed=4023, amplitude=0.08):
    rng = np.random.default_rng(seed)
    eta = random_covariance_field(4, rng, amplitude=amplitude)
    pulled = kg_wave().pulled_back(eta)
    return ParametrizedSystem(
        make_theory("kg_vector", mass=KG_MASS), pulled.matter, pulled.cov, mink()
    )


def metric_field_of(system):
    return lambda q: system.metric_jet(q, 1)


def pts4(count, seed=0):
    return random_points(BOX4, count, np.random.default_rng(seed))
