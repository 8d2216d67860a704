"""Truncated Taylor arithmetic: exactness, identities, batching, guard rails."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from covlab.errors import DomainError
from covlab.taylor import Taylor, TaylorSpace, gcos, gexp, gsin, gsqrt, scalar_of

SP = TaylorSpace(2, 3)


def _rand_taylor(draw_floats, lo=-2.0, hi=2.0, c0_min=None):
    c = np.array(draw_floats)
    if c0_min is not None and abs(c[0]) < c0_min:
        c[0] = c0_min
    return Taylor(SP, c)


coeffs = st.lists(
    st.floats(min_value=-2, max_value=2, allow_nan=False),
    min_size=SP.nterms,
    max_size=SP.nterms,
)


# ---- layout -------------------------------------------------------------------


def test_space_is_cached():
    assert TaylorSpace(3, 2) is TaylorSpace(3, 2)


def test_degree_one_block_is_in_variable_order():
    # gradient extraction reads c[1 : 1+nvars], so this layout is load-bearing
    sp = TaylorSpace(3, 2)
    assert sp.exponents[1:4] == [(1, 0, 0), (0, 1, 0), (0, 0, 1)]


def test_bad_space_arguments():
    with pytest.raises(ValueError):
        TaylorSpace(0, 2)
    with pytest.raises(ValueError):
        TaylorSpace(2, -1)


# ---- extraction ---------------------------------------------------------------


def test_partials_of_exp_sin():
    # f(x, y) = exp(x) sin(y): every partial is exp(x) times a sin/cos cycle
    x0, y0 = 0.4, 1.1
    sp = TaylorSpace(2, 3)
    x, y = sp.variables([x0, y0])
    f = x.exp() * y.sin()
    e = math.exp(x0)
    assert f.value == pytest.approx(e * math.sin(y0), rel=1e-14)
    assert f.partial((1, 0)) == pytest.approx(e * math.sin(y0), rel=1e-13)
    assert f.partial((0, 1)) == pytest.approx(e * math.cos(y0), rel=1e-13)
    assert f.partial((2, 1)) == pytest.approx(e * math.cos(y0), rel=1e-12)
    assert f.partial((1, 2)) == pytest.approx(-e * math.sin(y0), rel=1e-12)
    grad = f.gradient()
    assert grad[0] == pytest.approx(e * math.sin(y0), rel=1e-13)
    assert grad[1] == pytest.approx(e * math.cos(y0), rel=1e-13)


def test_gradient_needs_order_one():
    t = TaylorSpace(2, 0).constant(1.0)
    with pytest.raises(DomainError):
        t.gradient()


def test_sqrt_second_derivatives():
    # f = sqrt(1 + x^2 + y^2); closed-form second partials
    x0, y0 = 0.7, -0.3
    sp = TaylorSpace(2, 2)
    x, y = sp.variables([x0, y0])
    f = (1.0 + x * x + y * y).sqrt()
    r = math.sqrt(1 + x0**2 + y0**2)
    assert f.partial((1, 0)) == pytest.approx(x0 / r, rel=1e-13)
    assert f.partial((1, 1)) == pytest.approx(-x0 * y0 / r**3, rel=1e-12)
    assert f.partial((2, 0)) == pytest.approx((1 + y0**2) / r**3, rel=1e-12)


# ---- ring identities ----------------------------------------------------------


@given(coeffs, coeffs, coeffs)
def test_distributivity(ca, cb, cc):
    a, b, c = Taylor(SP, np.array(ca)), Taylor(SP, np.array(cb)), Taylor(SP, np.array(cc))
    lhs = a * (b + c)
    rhs = a * b + a * c
    assert np.allclose(lhs.c, rhs.c, rtol=1e-10, atol=1e-10)


@given(coeffs, coeffs)
def test_multiplication_commutes(ca, cb):
    a, b = Taylor(SP, np.array(ca)), Taylor(SP, np.array(cb))
    assert np.allclose((a * b).c, (b * a).c, rtol=1e-12, atol=1e-12)


@given(coeffs)
def test_sin_cos_pythagoras(ca):
    t = Taylor(SP, np.array(ca))
    one = t.sin() * t.sin() + t.cos() * t.cos()
    expect = SP.constant(1.0)
    assert np.allclose(one.c, expect.c, atol=1e-9)


@given(coeffs)
def test_sqrt_squares_back(ca):
    c = np.array(ca)
    c[0] = abs(c[0]) + 0.5
    t = Taylor(SP, c)
    back = t.sqrt() * t.sqrt()
    assert np.allclose(back.c, t.c, rtol=1e-9, atol=1e-9)


@given(coeffs)
def test_reciprocal_inverts(ca):
    c = np.array(ca)
    c[0] = abs(c[0]) + 0.5
    t = Taylor(SP, c)
    prod = t * (1.0 / t)
    assert np.allclose(prod.c, SP.constant(1.0).c, atol=1e-9)


def test_integer_powers():
    x, y = SP.variables([0.6, -1.2])
    t = 0.5 + x * y
    assert np.allclose((t**3).c, (t * t * t).c, rtol=1e-13, atol=1e-13)
    assert np.allclose((t**-2).c, (1.0 / (t * t)).c, rtol=1e-10, atol=1e-10)
    assert np.allclose((t**0).c, SP.constant(1.0).c)


def test_pow_rejects_non_integer():
    t = SP.constant(2.0)
    with pytest.raises(DomainError):
        t**0.5


def test_scalar_mixing():
    x, _ = SP.variables([0.3, 0.9])
    assert np.allclose((2.0 + x).c, (x + 2.0).c)
    assert np.allclose((3.0 * x).c, (x * 3.0).c)
    assert np.allclose((1.0 - x).c, (-(x - 1.0)).c)
    assert np.allclose((2.0 / (1.0 + x * x)).c, (SP.constant(2.0) / (1.0 + x * x)).c, atol=1e-12)


def test_numpy_scalar_does_not_absorb():
    x, _ = SP.variables([0.3, 0.9])
    out = np.float64(2.0) * x
    assert isinstance(out, Taylor)
    assert np.allclose(out.c, (x * 2.0).c)


def test_mixing_spaces_raises():
    a = TaylorSpace(2, 2).constant(1.0)
    b = TaylorSpace(2, 3).constant(1.0)
    with pytest.raises(ValueError):
        a + b


# ---- domain errors ------------------------------------------------------------


def test_reciprocal_of_zero_raises():
    t = SP.constant(0.0)
    with pytest.raises(DomainError):
        1.0 / t


def test_sqrt_domain():
    with pytest.raises(DomainError):
        SP.constant(-1.0).sqrt()
    # at order >= 1 the derivative of sqrt blows up at 0
    with pytest.raises(DomainError):
        SP.constant(0.0).sqrt()


# ---- batching -----------------------------------------------------------------


def _sample_expression(xs):
    x, y = xs
    return ((1.5 + x * y).sqrt() + x.sin() * y.exp()) / (2.0 + x.cos())


def test_batched_matches_per_point_bitwise():
    rng = np.random.default_rng(77)
    pts = rng.uniform(-0.8, 0.8, size=(7, 2))
    sp = TaylorSpace(2, 3)
    batched = _sample_expression([sp.variable(i, pts[:, i]) for i in range(2)])
    for k in range(7):
        single = _sample_expression(sp.variables(pts[k]))
        assert np.array_equal(batched.c[:, k], single.c)


def test_batched_value_and_partial_shapes():
    sp = TaylorSpace(2, 2)
    xb = sp.variable(0, np.array([0.1, 0.2, 0.3]))
    assert isinstance(xb.value, np.ndarray)
    assert xb.value.shape == (3,)
    assert xb.partial((1, 0)).shape == (3,)
    assert xb.gradient().shape == (2, 3)


def test_batched_broadcasts_against_unbatched():
    sp = TaylorSpace(2, 2)
    xb = sp.variable(0, np.array([0.1, 0.2]))
    y = sp.variable(1, 0.5)  # unbatched
    out = xb * y + y
    for k, xv in enumerate((0.1, 0.2)):
        single = sp.variable(0, xv) * sp.variable(1, 0.5) + sp.variable(1, 0.5)
        assert np.allclose(out.c[:, k], single.c, rtol=0, atol=0)


def test_batched_scalar_vector_combination():
    sp = TaylorSpace(1, 1)
    x = sp.variable(0, 0.5)  # unbatched
    vec = np.array([2.0, 3.0])
    out = x * vec  # should become a batch of two
    assert out.c.shape == (sp.nterms, 2)
    assert np.allclose(out.c[:, 0], (x * 2.0).c)
    assert np.allclose(out.c[:, 1], (x * 3.0).c)


def test_batched_reciprocal_guards_every_entry():
    sp = TaylorSpace(1, 1)
    bad = sp.constant(np.array([1.0, 0.0]))
    with pytest.raises(DomainError):
        1.0 / bad


# ---- generic dispatchers ------------------------------------------------------


def test_generic_helpers_on_floats_and_arrays():
    assert gsqrt(4.0) == 2.0
    assert gsin(0.0) == 0.0
    assert gcos(0.0) == 1.0
    assert gexp(0.0) == 1.0
    arr = np.array([0.0, math.pi / 2])
    assert np.allclose(gsin(arr), [0.0, 1.0])
    with pytest.raises(DomainError):
        gsqrt(-1.0)
    with pytest.raises(DomainError):
        gsqrt(np.array([1.0, -1.0]))


def test_generic_helpers_on_taylor():
    x, _ = SP.variables([0.25, 0.0])
    assert isinstance(gsqrt(1.0 + x), Taylor)
    assert gsqrt(1.0 + x).value == pytest.approx(math.sqrt(1.25))


def test_scalar_of():
    assert scalar_of(2) == 2.0
    assert scalar_of(SP.constant(3.5)) == 3.5
    v = scalar_of(np.array([1.0, 2.0]))
    assert isinstance(v, np.ndarray)
