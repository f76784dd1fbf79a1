import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from quadineq import transforms as T
from quadineq.errors import CapabilityError, DomainError


# --- evaluation and derivatives ---------------------------------------------


def test_huber_linear_branch():
    assert T.huber(1.0)(2.0) == pytest.approx(1.5)


def test_pseudo_huber_at_zero():
    assert T.pseudo_huber(1.0)(0.0) == 0.0


def test_square():
    assert T.power(2)(3.0) == pytest.approx(9.0)
    assert T.power(2).deriv(3.0, 1) == pytest.approx(6.0)


def test_huber_quadratic_branch_derivative():
    assert T.huber(1.0).deriv(0.5, 1) == pytest.approx(0.5)


def test_log_cosh_flat_at_zero():
    assert T.log_cosh().deriv(0.0, 1) == 0.0


def test_negative_input_rejected():
    with pytest.raises(DomainError):
        T.power(1.5)(-1e-3)
    with pytest.raises(DomainError):
        T.huber(1.0).deriv(np.array([1.0, -2.0]), 1)


def test_missing_order_is_capability_error():
    h = T.huber(1.0)
    with pytest.raises(CapabilityError):
        h.deriv(2.0, 2)
    # fallback differentiates the closed-form first derivative
    assert h.deriv(0.5, 2, fallback=True) == pytest.approx(1.0, abs=1e-6)
    assert h.deriv(2.0, 2, fallback=True) == pytest.approx(0.0, abs=1e-6)


def test_bad_order():
    with pytest.raises(DomainError):
        T.power(2).deriv(1.0, 4)


def test_vectorized_matches_scalar():
    t = T.log_cosh()
    x = np.array([0.0, 0.3, 2.0, 40.0])
    np.testing.assert_allclose(t(x), [t(float(v)) for v in x])
    assert isinstance(t(1.0), float)


def test_log_cosh_large_argument_finite():
    assert math.isfinite(T.log_cosh()(1e6))
    assert T.log_cosh()(1e6) == pytest.approx(1e6 - math.log(2))


@pytest.mark.parametrize("t", T.builtin_transforms(), ids=lambda t: t.name)
def test_finite_difference_matches_first_derivative(t, rng):
    x = rng.uniform(1e-2, 10.0, 100)
    if t.kinks:
        x = x[np.min(np.abs(x[:, None] - np.array(t.kinks)), axis=1) > 1e-3]
    fd = T.finite_difference(t, x, 1)
    d1 = t.deriv(x, 1)
    assert np.all(np.abs(fd - d1) <= 1e-6 * np.maximum(1.0, np.abs(d1)))


# --- membership -------------------------------------------------------------


@pytest.mark.parametrize("t", T.builtin_transforms(), ids=lambda t: t.name)
def test_builtins_are_members(t):
    rep = T.check_membership(t, T.default_grid())
    assert rep.ok, rep
    assert rep.worst_violation >= 0


def test_cube_fails_concave_derivative():
    rep = T.check_membership(T.power(3.0))
    assert rep.nondecreasing_ok and rep.convex_ok
    assert not rep.concave_deriv_ok
    assert not rep.ok


def test_power_below_one_is_not_convex():
    assert not T.check_membership(T.power(0.5)).convex_ok


def test_grid_validation():
    with pytest.raises(DomainError):
        T.check_membership(T.power(2), [1.0, 0.5])
    with pytest.raises(DomainError):
        T.check_membership(T.power(2), [])


# --- closure ----------------------------------------------------------------


def test_scale_and_add_zero_weights_is_constant_zero():
    t = T.scale_and_add(T.power(1), 0.0, T.power(2), 0.0)
    assert t(3.0) == 0.0
    assert t.quad_constant == 0.0


def test_scale_and_add_value():
    t = T.scale_and_add(T.power(1), 2.0, T.power(2), 1.0)
    assert t(3.0) == pytest.approx(15.0)
    assert t.deriv(3.0, 1) == pytest.approx(8.0)
    assert T.check_membership(t).ok


def test_scale_and_add_constant_combines_linearly():
    t = T.scale_and_add(T.power(1), 2.0, T.power(2), 3.0)
    assert t.quad_constant == pytest.approx(2 * 2.0 + 3 * 1.0)


def test_scale_and_add_rejects_negative_weight():
    with pytest.raises(DomainError):
        T.scale_and_add(T.power(1), -1.0, T.power(2), 1.0)


@given(st.lists(st.floats(0.0, 50.0), min_size=1, max_size=20))
def test_scale_and_add_unit_weight_reproduces_first(xs):
    t1 = T.pseudo_huber(0.7)
    t = T.scale_and_add(t1, 1.0, T.log_cosh(), 0.0)
    x = np.array(xs)
    np.testing.assert_array_equal(t(x), t1(x))


def test_spec_round_trip():
    for t in T.builtin_transforms():
        u = T.from_spec(t.to_spec())
        x = np.linspace(0, 5, 11)
        np.testing.assert_allclose(u(x), t(x), rtol=0, atol=0)
    s = T.from_spec({"kind": "sum", "terms": [{"kind": "power", "alpha": 1}, {"kind": "huber", "delta": 2}],
                     "weights": [1, 2]})
    assert s(3.0) == pytest.approx(3 + 2 * T.huber(2)(3.0))


@pytest.mark.parametrize("spec", [{}, {"kind": "nope"}, {"kind": "power"}, [1, 2]])
def test_bad_spec(spec):
    with pytest.raises(DomainError):
        T.from_spec(spec)


# --- extension to zero ------------------------------------------------------


@pytest.mark.parametrize(
    "t, expected",
    [(T.power(2), (0.0, 0.0)), (T.power(1), (0.0, 1.0)), (T.huber(1.0), (0.0, 0.0)), (T.linear(), (0.0, 1.0))],
    ids=["square", "identity", "huber", "linear"],
)
def test_extend_zero(t, expected):
    tau0, d0 = T.extend_zero(t)
    assert tau0 == pytest.approx(expected[0], abs=1e-10)
    assert d0 == pytest.approx(expected[1], abs=1e-10)


# --- mollifier ---------------------------------------------------------------


def test_mollified_linear_has_unit_derivative():
    m = T.mollify(T.linear(), 5)
    x = np.geomspace(1e-3, 1e3, 50)
    np.testing.assert_allclose(m.deriv(x, 1), 1.0, atol=1e-8)
    np.testing.assert_allclose(m.deriv(x, 2), 0.0, atol=1e-8)


def test_mollified_power_scale():
    c = T.mollifier_power_scale(10, 1.5)
    assert math.exp(-0.1) <= c <= math.exp(0.1)
    m = T.mollify(T.power(1.5), 10)
    x = np.geomspace(1e-2, 1e2, 20)
    np.testing.assert_allclose(m.deriv(x, 1), c * T.power(1.5).deriv(x, 1), rtol=1e-10)


@pytest.mark.parametrize("n", [1, 4, 16])
def test_mollified_power_is_member(n):
    m = T.mollify(T.power(1.5), n)
    assert m.smoothness_order == 3
    assert T.check_membership(m).ok


@pytest.mark.parametrize("t", T.builtin_transforms(), ids=lambda t: t.name)
def test_mollified_builtins_are_members(t):
    assert T.check_membership(T.mollify(t, 4)).ok


def test_mollified_value_agrees_with_nested_integral():
    t = T.huber(1.0)
    m = T.mollify(t, 3)
    for x in (0.2, 1.0, 2.7):
        assert m(x) == pytest.approx(T.mollified_value_adaptive(t, 3, x), rel=1e-8)


def test_mollifier_converges():
    t = T.huber(1.0)
    x = np.linspace(0.0, 4.0, 201)
    dists = [np.max(np.abs(T.mollify(t, n)(x) - t(x))) for n in (1, 2, 4, 8, 16)]
    assert all(b <= a for a, b in zip(dists, dists[1:]))


def test_mollify_rejects_non_member_and_bad_index():
    with pytest.raises(DomainError):
        T.mollify(T.power(3.0), 2)
    with pytest.raises(DomainError):
        T.mollify(T.power(1.5), 0)
