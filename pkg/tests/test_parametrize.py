"""Pullback metrics, covariance-field slot partials, momenta, push-forwards."""

import numpy as np
import pytest

from common import (
    BOX4,
    KG_MASS,
    curved_metric,
    em_offshell_system,
    identity_cov,
    kg_pulled_system,
    mink,
    pts4,
)
from covlab.errors import ValidationError, WrongCouplingOrder, WrongSignature
from covlab.jets import FieldMap, eval_jet, stack_jets
from covlab.parametrize import (
    ComposedCovField,
    CovarianceField,
    FiberMetric,
    ParametrizedSystem,
    TransportedField,
    apply_diffeo,
    eta_slot_partials,
    parametrized_lagrangian,
    piola_kirchhoff,
    pullback_metric,
    pullback_metric_jet,
)
from covlab.scenarios import random_covariance_field, random_matter_field
from covlab.theories import lagrangian_value, make_theory

from covlab.geometry import MetricJet
from covlab.jets import AnalyticDiffeo


def _mink_arr(n=4):
    g = np.eye(n)
    g[0, 0] = -1.0
    return g


# ---- FiberMetric ----------------------------------------------------------------


def test_minkowski_fiber_metric():
    g, gd = mink().jet(np.array([0.3, -0.1, 0.2, 0.0]), order=1)
    assert np.array_equal(g, _mink_arr())
    assert np.all(gd == 0.0)


def test_fiber_metric_prefix_round_trip():
    g = curved_metric()
    again = FiberMetric.from_prefix(g.to_prefix())
    u = np.array([0.2, -0.3, 0.4, 0.1])
    a, ad = g.jet(u)
    b, bd = again.jet(u)
    assert np.array_equal(a, b)
    assert np.array_equal(ad, bd)


def test_fiber_metric_upper_triangle_wins():
    rows = [["-1", "(* 2 u0)"], ["(* 99 u0)", "1"]]
    g, _ = FiberMetric.from_prefix(rows).jet(np.array([0.5, 0.0]), order=0)
    assert g[0, 1] == 1.0
    assert g[1, 0] == 1.0


def test_fiber_metric_derivatives_match_finite_differences():
    g = curved_metric()
    u = np.array([0.15, -0.25, 0.35, 0.05])
    _, gd = g.jet(u, order=1)
    h = 1e-6
    for c in range(4):
        up, dn = u.copy(), u.copy()
        up[c] += h
        dn[c] -= h
        fd = (g.jet(up, order=0)[0] - g.jet(dn, order=0)[0]) / (2 * h)
        assert np.allclose(gd[:, :, c], fd, atol=1e-9)


# ---- CovarianceField validation ----------------------------------------------------


def test_validate_at_accepts_identity():
    identity_cov().validate_at(pts4(5))


def test_validate_at_rejects_orientation_reversal():
    swap = CovarianceField(FieldMap.from_prefix(["x1", "x0", "x2", "x3"], 4))
    with pytest.raises(ValidationError, match="orientation"):
        swap.validate_at([np.zeros(4)])


def test_validate_at_rejects_degenerate_jacobian():
    fold = CovarianceField(FieldMap.from_prefix(["(pow x0 2)", "x1"], 2))
    with pytest.raises(ValidationError):
        fold.validate_at([np.zeros(2)])


# ---- pullback metric ------------------------------------------------------------------


def test_identity_pullback_is_the_fiber_metric():
    m = pullback_metric_jet(identity_cov().jet(np.zeros(4), 2), mink())
    assert np.array_equal(m.components, _mink_arr())
    assert np.all(m.d1 == 0.0)


def test_identity_pullback_of_curved_metric():
    g = curved_metric()
    p = np.array([0.1, 0.2, -0.3, 0.4])
    m = pullback_metric_jet(identity_cov().jet(p, 2), g)
    gm, gd = g.jet(p, order=1)
    assert np.allclose(m.components, gm, atol=1e-14)
    assert np.allclose(m.d1, gd.transpose(0, 1, 2), atol=1e-14)


def test_pullback_metric_derivatives_match_finite_differences():
    rng = np.random.default_rng(61)
    eta = random_covariance_field(4, rng, amplitude=0.15)
    g = curved_metric()
    for p in pts4(4, seed=62):
        m = pullback_metric_jet(eta.jet(p, 2), g)
        h = 1e-5
        for rho in range(4):
            up, dn = p.copy(), p.copy()
            up[rho] += h
            dn[rho] -= h
            fd = (
                pullback_metric(eta.jet(up, 1), g).components
                - pullback_metric(eta.jet(dn, 1), g).components
            ) / (2 * h)
            assert np.allclose(m.d1[:, :, rho], fd, atol=2e-9)


def test_pullback_rejects_non_lorentzian_fiber():
    euclid = FiberMetric.from_prefix([["1", "0"], ["0", "1"]])
    with pytest.raises(WrongSignature):
        pullback_metric(identity_cov(2).jet(np.zeros(2), 1), euclid)


# ---- parametrized density ----------------------------------------------------------


def test_identity_parametrization_reproduces_background():
    g = curved_metric()
    p = np.array([0.2, -0.1, 0.3, 0.05])
    rng = np.random.default_rng(63)
    matter = random_matter_field(4, rng)
    phi_jet = eval_jet(matter, p, 1)
    for name, mass in (("em", 0.0), ("kg_vector", 1.1)):
        theory = make_theory(name, mass=mass) if mass else make_theory(name)
        order = 2 if theory.coupling_order else 1
        tilde = parametrized_lagrangian(
            theory, p, phi_jet, identity_cov().jet(p, order), g
        )
        gm, gd = g.jet(p, order=1)
        back = lagrangian_value(theory, p, phi_jet, MetricJet(gm, d1=gd))
        assert tilde.density == pytest.approx(back.density, rel=1e-12)


@pytest.mark.parametrize("name,mass", [("em", 0.0), ("kg_vector", KG_MASS)])
def test_eta_slot_partials_are_directional_derivatives(name, mass):
    theory = make_theory(name, mass=mass) if mass else make_theory(name)
    want_d2 = theory.coupling_order >= 1
    rng = np.random.default_rng(64)
    g = curved_metric()
    matter = random_matter_field(4, rng)
    eta = random_covariance_field(4, rng, amplitude=0.15)
    p = np.array([0.1, -0.2, 0.25, 0.3])
    phi_jet = eval_jet(matter, p, 1)
    order = 2 if want_d2 else 1
    ej = eta.jet(p, order)
    ep = eta_slot_partials(theory, p, phi_jet, ej, g, want_d2=want_d2)

    dv = rng.uniform(-1, 1, size=4)
    dd1 = rng.uniform(-1, 1, size=(4, 4))
    dd2 = rng.uniform(-1, 1, size=(4, 4, 4))
    dd2 = 0.5 * (dd2 + dd2.transpose(0, 2, 1))

    from covlab.jets import JetPoint

    def density(eps):
        j = JetPoint(
            base=p,
            values=ej.values + eps * dv,
            order=order,
            d1=ej.d1 + eps * dd1,
            d2=None if ej.d2 is None else ej.d2 + eps * dd2,
        )
        return parametrized_lagrangian(theory, p, phi_jet, j, g).density

    h = 1e-6
    fd = (density(h) - density(-h)) / (2 * h)
    expect = float(np.sum(ep.d_value * dv) + np.sum(ep.d_d1 * dd1))
    if want_d2:
        expect += float(np.sum(ep.d_d2 * dd2))
    else:
        assert ep.d_d2 is None
    assert fd == pytest.approx(expect, rel=1e-6, abs=1e-9)


def test_eta_slot_partials_batched_matches_single():
    sys_ = em_offshell_system()
    g = curved_metric()
    theory = sys_.theory
    pts = pts4(6, seed=65)
    phis = [sys_.matter_jet(p, 1) for p in pts]
    etas = [sys_.eta_jet(p, 2) for p in pts]
    batch = eta_slot_partials(
        theory, pts[0], stack_jets(phis), stack_jets(etas), g, want_d2=True
    )
    for i, p in enumerate(pts):
        one = eta_slot_partials(theory, p, phis[i], etas[i], g, want_d2=True)
        assert np.array_equal(batch.density[i], one.density)
        assert np.array_equal(batch.d_value[:, i], one.d_value)
        assert np.array_equal(batch.d_d1[:, :, i], one.d_d1)
        assert np.array_equal(batch.d_d2[:, :, :, i], one.d_d2)


# ---- momenta conjugate to the covariance field ----------------------------------------


def test_piola_kirchhoff_two_routes_em():
    rng = np.random.default_rng(66)
    g = curved_metric()
    matter = random_matter_field(4, rng)
    eta = random_covariance_field(4, rng, amplitude=0.15)
    for p in pts4(5, seed=67):
        pk = piola_kirchhoff(make_theory("em"), p, eval_jet(matter, p, 1), eta.jet(p, 1), g)
        assert np.allclose(pk.rho, pk.rho_direct, atol=1e-10)
        assert pk.p2 is None and pk.p2_direct is None


def test_piola_kirchhoff_two_routes_kg():
    rng = np.random.default_rng(68)
    g = curved_metric()
    matter = random_matter_field(4, rng)
    eta = random_covariance_field(4, rng, amplitude=0.15)
    theory = make_theory("kg_vector", mass=KG_MASS)
    for p in pts4(3, seed=69):
        pk = piola_kirchhoff(theory, p, eval_jet(matter, p, 1), eta.jet(p, 2), g)
        assert np.allclose(pk.rho, pk.rho_direct, atol=1e-9)
        assert np.allclose(pk.p2, pk.p2_direct, atol=1e-9)


# ---- transport by base diffeomorphisms -------------------------------------------------


def _shear_sigma(dim=4):
    fwd = ["(+ x0 (* 0.2 (sin x1)))"] + [f"x{i}" for i in range(1, dim)]
    inv = ["(- x0 (* 0.2 (sin x1)))"] + [f"x{i}" for i in range(1, dim)]
    return AnalyticDiffeo(
        FieldMap.from_prefix(fwd, dim), FieldMap.from_prefix(inv, dim)
    )


@pytest.mark.parametrize("name,mass", [("em", 0.0), ("kg_vector", KG_MASS)])
def test_apply_diffeo_symbolic_and_numeric_routes_agree(name, mass):
    theory = make_theory(name, mass=mass) if mass else make_theory(name)
    rng = np.random.default_rng(70)
    matter = random_matter_field(4, rng)
    cov = random_covariance_field(4, rng, amplitude=0.1)
    sigma = _shear_sigma()
    sym_matter, sym_cov = apply_diffeo(sigma, theory, matter, cov)
    assert isinstance(sym_matter, FieldMap) and isinstance(sym_cov, FieldMap)

    blind = AnalyticDiffeo(sigma.map)  # no inverse expressions: numeric route
    num_matter, num_cov = apply_diffeo(blind, theory, matter, cov)
    assert isinstance(num_matter, TransportedField)
    assert isinstance(num_cov, ComposedCovField)

    for p in pts4(3, seed=71):
        a = eval_jet(sym_matter, p, 1)
        b = num_matter.jet(p, 1)
        assert np.allclose(a.values, b.values, atol=1e-10)
        assert np.allclose(a.d1, b.d1, atol=1e-9)
        ca = eval_jet(sym_cov, p, 2)
        cb = num_cov.jet(p, 2)
        assert np.allclose(ca.values, cb.values, atol=1e-10)
        assert np.allclose(ca.d1, cb.d1, atol=1e-9)
        assert np.allclose(ca.d2, cb.d2, atol=1e-8)


@pytest.mark.parametrize("name,mass", [("em", 0.0), ("kg_vector", KG_MASS)])
def test_density_transforms_as_scalar_density(name, mass):
    # Ltilde'(sigma(x)) det Dsigma(x) = Ltilde(x)
    theory = make_theory(name, mass=mass) if mass else make_theory(name)
    rng = np.random.default_rng(72)
    g = curved_metric()
    matter = random_matter_field(4, rng)
    cov = random_covariance_field(4, rng, amplitude=0.1)
    sigma = _shear_sigma()
    matter_t, cov_t = apply_diffeo(sigma, theory, matter, cov)
    order = 2 if theory.coupling_order else 1
    for x in pts4(3, seed=73):
        base = parametrized_lagrangian(
            theory, x, eval_jet(matter, x, 1), cov.jet(x, order), g
        ).density
        sx = sigma.map(x)
        det = float(np.linalg.det(eval_jet(sigma.map, x, 1).d1))
        moved = parametrized_lagrangian(
            theory, sx, eval_jet(matter_t, sx, 1), eval_jet(cov_t, sx, order), g
        ).density
        assert moved * det == pytest.approx(base, rel=1e-9, abs=1e-12)


def test_transported_field_order_cap_and_rank_check():
    sigma = _shear_sigma()
    rng = np.random.default_rng(74)
    matter = random_matter_field(4, rng)
    with pytest.raises(ValueError):
        TransportedField(matter, sigma, "spinor")
    tf = TransportedField(matter, sigma, "covector")
    with pytest.raises(WrongCouplingOrder):
        tf.jet(np.zeros(4), 2)


# ---- ParametrizedSystem convenience ----------------------------------------------------


def test_system_metric_jet_orders():
    sys_ = em_offshell_system()
    p = np.array([0.1, 0.1, -0.1, 0.2])
    m0 = sys_.metric_jet(p, 0)
    m1 = sys_.metric_jet(p, 1)
    assert m0.d1 is None
    assert m1.d1 is not None
    assert np.allclose(m0.components, m1.components, atol=1e-14)


def test_system_lagrangian_runs_both_theories():
    p = np.array([0.05, -0.1, 0.2, 0.15])
    em_lv = em_offshell_system().lagrangian(p)
    kg_lv = kg_pulled_system().lagrangian(p)
    assert em_lv.dGd is None
    assert kg_lv.dGd is not None
