"""Metric containers, connections, and the generic-scalar matrix algebra."""

import numpy as np
import pytest

from covlab.errors import (
    DomainError,
    MissingJet,
    SingularMetric,
    WrongSignature,
)
from covlab.geometry import (
    Christoffel,
    Dimension,
    MetricJet,
    SemDensity,
    check_lorentzian,
    christoffel,
    christoffel_pullback,
    covariant_divergence_density,
    g_christoffel,
    g_det,
    g_inverse,
    g_volume_factor,
    inverse_metric,
    volume_factor,
)
from covlab.taylor import TaylorSpace, scalar_of


def _mink(n):
    g = np.eye(n)
    g[0, 0] = -1.0
    return g


def _random_lorentzian(rng, n, amp=0.2):
    b = rng.uniform(-amp, amp, size=(n, n))
    return _mink(n) + 0.5 * (b + b.T)


# ---- Dimension and MetricJet ----------------------------------------------------


@pytest.mark.parametrize("n", [2, 3, 4])
def test_dimension_accepts_supported(n):
    assert Dimension(n).n_plus_1 == n


@pytest.mark.parametrize("n", [1, 5, 0])
def test_dimension_rejects_unsupported(n):
    with pytest.raises(ValueError):
        Dimension(n)


def test_metric_jet_validation():
    with pytest.raises(ValueError):
        MetricJet(np.zeros((2, 3)))
    bad = np.array([[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(ValueError):
        MetricJet(bad)
    m = MetricJet(_mink(3))
    assert m.dim == 3


def test_lorentzian_signature_check():
    check_lorentzian(_mink(4))
    MetricJet(_mink(2)).require_lorentzian()
    with pytest.raises(WrongSignature):
        check_lorentzian(np.eye(4))  # Euclidean
    with pytest.raises(WrongSignature):
        check_lorentzian(-np.eye(4) + 2 * np.diag([0.0, 1, 1, 1]) - np.diag([0, 2.0, 0, 0]))
    with pytest.raises(WrongSignature):
        check_lorentzian(np.diag([-1.0, 1e-15, 1.0, 1.0]))  # near-degenerate


# ---- numeric inverse and volume --------------------------------------------------


@pytest.mark.parametrize("n", [2, 3, 4])
def test_inverse_metric_matches_numpy(n):
    rng = np.random.default_rng(11)
    for _ in range(20):
        g = _random_lorentzian(rng, n)
        inv = inverse_metric(MetricJet(g))
        assert np.allclose(inv, np.linalg.inv(g), atol=1e-12)
        assert np.allclose(inv @ g, np.eye(n), atol=1e-12)


def test_inverse_metric_rejects_singular():
    g = np.diag([-1.0, 0.0, 1.0])
    with pytest.raises(SingularMetric):
        inverse_metric(MetricJet(g))


def test_volume_factor():
    assert volume_factor(MetricJet(_mink(4))) == pytest.approx(1.0)
    assert volume_factor(MetricJet(np.diag([-4.0, 1.0, 1.0, 9.0]))) == pytest.approx(6.0)
    with pytest.raises(WrongSignature):
        volume_factor(MetricJet(np.eye(3)))


# ---- Christoffel symbols ----------------------------------------------------------


def test_christoffel_requires_first_derivatives():
    with pytest.raises(SingularMetric):
        christoffel(MetricJet(_mink(2)))


def test_christoffel_known_closed_form():
    # ds^2 = -dt^2 + t^2 dx^2 at t = 2: Gamma^0_11 = t, Gamma^1_01 = 1/t
    t = 2.0
    g = np.diag([-1.0, t * t])
    d1 = np.zeros((2, 2, 2))
    d1[1, 1, 0] = 2.0 * t  # G_{11,0}
    gam = christoffel(MetricJet(g, d1=d1)).symbols
    expect = np.zeros((2, 2, 2))
    expect[0, 1, 1] = t
    expect[1, 0, 1] = expect[1, 1, 0] = 1.0 / t
    assert np.allclose(gam, expect, atol=1e-14)


def test_christoffel_symmetric_in_lower_indices():
    rng = np.random.default_rng(12)
    g = _random_lorentzian(rng, 4)
    d1 = rng.uniform(-0.3, 0.3, size=(4, 4, 4))
    d1 = 0.5 * (d1 + d1.transpose(1, 0, 2))
    gam = christoffel(MetricJet(g, d1=d1)).symbols
    assert np.allclose(gam, gam.transpose(0, 2, 1), atol=1e-14)


def test_christoffel_pullback_flat_fibre_quadratic_map():
    # eta = (x0 + 0.1 x1^2, x1), flat fibre: Gamma^rho_mn = eta^b_{,mn} kap^rho_b
    from covlab.jets import FieldMap, eval_jet

    eta = FieldMap.from_prefix(["(+ x0 (* 0.1 (pow x1 2)))", "x1"], 2)
    p = np.array([0.4, 1.5])
    ej = eval_jet(eta, p, 2)
    kap = np.linalg.inv(ej.d1)
    gam = christoffel_pullback(ej, kap, np.zeros((2, 2, 2))).symbols
    expect = np.zeros((2, 2, 2))
    expect[0, 1, 1] = 0.2  # kap^0_0 * eta^0_{,11}
    assert np.allclose(gam, expect, atol=1e-14)


def test_christoffel_pullback_needs_order_two():
    from covlab.jets import FieldMap, eval_jet

    eta = FieldMap.from_prefix(["x0", "x1"], 2)
    ej = eval_jet(eta, np.zeros(2), 1)
    with pytest.raises(MissingJet):
        christoffel_pullback(ej, np.eye(2), np.zeros((2, 2, 2)))


# ---- covariant divergence ----------------------------------------------------------


def test_covariant_divergence_matches_loop_formula():
    rng = np.random.default_rng(13)
    n = 3
    t = rng.uniform(-1, 1, size=(n, n))
    t = 0.5 * (t + t.T)
    d1 = rng.uniform(-1, 1, size=(n, n, n))
    d1 = 0.5 * (d1 + d1.transpose(1, 0, 2))
    gam = rng.uniform(-1, 1, size=(n, n, n))
    gam = 0.5 * (gam + gam.transpose(0, 2, 1))
    got = covariant_divergence_density(
        SemDensity(contravariant=t, d1=d1), Christoffel(gam)
    )
    expect = np.zeros(n)
    for rho in range(n):
        for mu in range(n):
            expect[rho] += d1[mu, rho, mu]
            for nu in range(n):
                expect[rho] += gam[rho, mu, nu] * t[mu, nu]
    assert np.allclose(got, expect, atol=1e-13)


def test_covariant_divergence_needs_partials():
    with pytest.raises(MissingJet):
        covariant_divergence_density(
            SemDensity(contravariant=np.eye(2)), Christoffel(np.zeros((2, 2, 2)))
        )


# ---- generic-scalar matrix algebra ---------------------------------------------------


@pytest.mark.parametrize("n", [2, 3, 4])
def test_generic_det_and_inverse_match_numpy(n):
    rng = np.random.default_rng(21)
    for _ in range(10):
        g = _random_lorentzian(rng, n)
        m = [[g[i, j] for j in range(n)] for i in range(n)]
        assert g_det(m) == pytest.approx(np.linalg.det(g), rel=1e-10)
        inv = np.array(g_inverse(m))
        assert np.allclose(inv, np.linalg.inv(g), atol=1e-11)


def test_generic_inverse_rejects_singular():
    with pytest.raises(SingularMetric):
        g_inverse([[1.0, 1.0], [1.0, 1.0]])


def test_generic_algebra_dimension_cap():
    m5 = [[float(i == j) for j in range(5)] for i in range(5)]
    with pytest.raises(ValueError):
        g_det(m5)
    with pytest.raises(ValueError):
        g_inverse(m5, det=1.0)


def test_generic_volume_factor():
    m = [[-4.0, 0.0], [0.0, 9.0]]
    assert g_volume_factor(m) == pytest.approx(6.0)
    with pytest.raises(DomainError):
        g_volume_factor([[1.0, 0.0], [0.0, 1.0]])


def test_generic_inverse_over_taylor_gives_derivative_identity():
    # d(G^-1) = -G^-1 dG G^-1, via exact first-order Taylor slots
    rng = np.random.default_rng(22)
    n = 3
    g0 = _random_lorentzian(rng, n)
    dg = rng.uniform(-0.5, 0.5, size=(n, n))
    dg = 0.5 * (dg + dg.T)
    sp = TaylorSpace(1, 1)
    s = sp.variable(0, 0.0)
    m = [[g0[i, j] + dg[i, j] * s for j in range(n)] for i in range(n)]
    inv = g_inverse(m)
    inv0 = np.array([[scalar_of(inv[i][j]) for j in range(n)] for i in range(n)])
    dinv = np.array([[inv[i][j].gradient()[0] for j in range(n)] for i in range(n)])
    ginv = np.linalg.inv(g0)
    assert np.allclose(inv0, ginv, atol=1e-12)
    assert np.allclose(dinv, -ginv @ dg @ ginv, atol=1e-11)


def test_generic_christoffel_matches_numeric():
    rng = np.random.default_rng(23)
    n = 4
    g = _random_lorentzian(rng, n)
    d1 = rng.uniform(-0.3, 0.3, size=(n, n, n))
    d1 = 0.5 * (d1 + d1.transpose(1, 0, 2))
    ref = christoffel(MetricJet(g, d1=d1)).symbols
    m = [[g[i, j] for j in range(n)] for i in range(n)]
    gd = [[[d1[i, j, k] for k in range(n)] for j in range(n)] for i in range(n)]
    got = np.array(g_christoffel(g_inverse(m), gd))
    assert np.allclose(got, ref, atol=1e-12)
