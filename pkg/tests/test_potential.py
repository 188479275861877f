import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from ecdlab.errors import AssumptionViolation, DomainError
from ecdlab.potential import (Landscape, build_maps, distance_I, eval_v, momentum_p,
                              tail_integral, truncation_bounds, validate_assumptions)
from oracles import I_WELLS, L_CLASSICAL, L_Y


def test_quartic_basic_values(quartic121):
    lnd = quartic121
    assert lnd(lnd.a_left) == pytest.approx(1.0)
    assert lnd(lnd.a_right) == pytest.approx(1.0)
    assert lnd.barrier == pytest.approx(1.5)
    assert lnd.beta == pytest.approx(0.5)
    assert lnd.symmetric


@given(st.floats(0.2, 3.0), st.floats(0.2, 5.0), st.floats(0.01, 10.0), st.floats(-4, 4))
def test_quartic_derivatives_match_finite_differences(a, w, v0, t):
    lnd = Landscape.quartic(a, w, v0)
    eps = 1e-6 * max(1.0, abs(t))
    d1 = (lnd.value(t + eps) - lnd.value(t - eps)) / (2 * eps)
    d2 = (lnd.deriv(t + eps) - lnd.deriv(t - eps)) / (2 * eps)
    scale = 1.0 + abs(float(lnd.deriv(t)))
    assert float(lnd.deriv(t)) == pytest.approx(float(d1), abs=1e-5 * scale)
    assert float(lnd.deriv2(t)) == pytest.approx(float(d2), abs=1e-5 * (1 + abs(float(lnd.deriv2(t)))))


def test_quartic_rejects_bad_parameters():
    with pytest.raises(DomainError):
        Landscape.quartic(1.0, 2.0, 0.0)
    with pytest.raises(DomainError):
        Landscape.quartic(-1.0, 2.0, 1.0)


def test_eval_v_and_momentum_guards():
    lnd = Landscape.custom(lambda t: np.asarray(t) ** 2 - 1.0, lambda t: 2 * np.asarray(t),
                           lambda t: 2.0 + 0 * np.asarray(t), -1.0, 1.0)
    with pytest.raises(AssumptionViolation):
        eval_v(lnd, 0.0)
    q = Landscape.quartic(1, 2, 1)
    with pytest.raises(DomainError):
        momentum_p(q, 0.0, 0.0)
    assert momentum_p(q, 4.0, 1.0) == pytest.approx(2.0)


def test_validation_accepts_quartic(quartic121):
    rep = validate_assumptions(quartic121)
    assert rep.ok
    assert set(rep.as_dict()) == {"positivity", "two_minima", "tail"}


def test_validation_rejects_single_well():
    lnd = Landscape.custom(lambda t: np.asarray(t) ** 2 + 1.0, lambda t: 2 * np.asarray(t),
                           lambda t: 2.0 + 0 * np.asarray(t), -1.0, 1.0)
    rep = validate_assumptions(lnd)
    assert not rep.two_minima.passed
    assert not rep.ok


def test_validation_rejects_slow_tail():
    # 1/sqrt(V) ~ 1/|t| is not integrable
    v = lambda t: (np.asarray(t) ** 2 - 1) ** 2 / (1 + np.asarray(t) ** 2) + 1
    dv = lambda t: (np.asarray(t) ** 2 - 1) * 2 * np.asarray(t) * (np.asarray(t) ** 2 + 3) \
        / (1 + np.asarray(t) ** 2) ** 2
    lnd = Landscape.custom(v, dv, lambda t: 0 * np.asarray(t), -1.0, 1.0)
    assert not validate_assumptions(lnd).tail.passed


def test_validation_rejects_nonpositive():
    lnd = Landscape.custom(lambda t: (np.asarray(t) ** 2 - 1) ** 2 - 0.5,
                           lambda t: 4 * np.asarray(t) * (np.asarray(t) ** 2 - 1),
                           lambda t: 12 * np.asarray(t) ** 2 - 4, -1.0, 1.0)
    assert not validate_assumptions(lnd).positivity.passed


def test_truncation_bounds_reach_factor(quartic121):
    lo, hi, reached = truncation_bounds(quartic121)
    assert reached
    assert quartic121.value(hi) >= 1e6 * quartic121.v1 * (1 - 1e-12)
    assert quartic121.value(lo) >= 1e6 * quartic121.v1 * (1 - 1e-12)


def test_tail_integral_known():
    # int_1^inf t^-2 = 1
    assert tail_integral(lambda t: 1.0 / t**2, 1.0, 1) == pytest.approx(1.0, rel=1e-10)
    assert tail_integral(lambda t: 1.0 / t**2, -1.0, -1) == pytest.approx(1.0, rel=1e-10)


def test_maps_frozen_lengths(maps121):
    assert maps121.L_classical == pytest.approx(L_CLASSICAL, rel=1e-10)
    assert maps121.L_y == pytest.approx(L_Y, rel=1e-8)
    assert distance_I(maps121, -1.0, 1.0) == pytest.approx(I_WELLS, rel=1e-9)
    assert distance_I(maps121, -math.inf, math.inf) == pytest.approx(L_Y, rel=1e-8)


def test_phi_anchors(maps121):
    assert maps121.phi(-1.0) == pytest.approx(0.0, abs=1e-10)
    assert maps121.phi(1.0) == pytest.approx(L_CLASSICAL, rel=1e-9)
    assert maps121.y(0.0) == pytest.approx(0.0, abs=1e-12)


@given(st.floats(-30.0, 30.0))
def test_phi_roundtrip(t):
    m = _maps()
    assert m.phi_inv(m.phi(t)) == pytest.approx(t, abs=1e-8 * max(1, abs(t)))


@given(st.floats(-35.0, 35.0))
def test_y_roundtrip(t):
    m = _maps()
    assert m.theta_of_y(m.y(t)) == pytest.approx(t, abs=1e-7 * max(1, abs(t)))


@given(st.floats(0.001, 0.9999))
def test_theta_of_y_in_tails_inverts(frac):
    m = _maps()
    yv = m.y_table[-1] + frac * (m.y_plus - m.y_table[-1])
    th = m.theta_of_y(yv)
    # t = th / u maps [th, inf) onto (0, 1]
    f = lambda u: th / (u * u * math.sqrt(m.landscape.value(th / u))) if u > 0 else 0.0
    rest = integrate.quad(f, 0.0, 1.0, epsabs=0, epsrel=1e-12)[0]
    assert rest == pytest.approx(m.y_plus - yv, rel=1e-6, abs=1e-10)


@given(st.floats(-20, 20), st.floats(1e-3, 5))
def test_maps_monotone(t, dt):
    m = _maps()
    assert m.phi(t + dt) > m.phi(t)
    assert m.y(t + dt) > m.y(t)


def test_phi_derivative_is_inverse_momentum(maps121, quartic121):
    t = np.linspace(-3, 3, 41)
    eps = 1e-5
    d = (maps121.phi(t + eps) - maps121.phi(t - eps)) / (2 * eps)
    np.testing.assert_allclose(d, 1.0 / momentum_p(quartic121, 1.0, t), rtol=1e-7)


def test_maps_domain_errors(maps121):
    with pytest.raises(DomainError):
        maps121.phi(1e9)
    with pytest.raises(DomainError):
        maps121.theta_of_y(maps121.y_plus)
    with pytest.raises(DomainError):
        build_maps(Landscape.quartic(1, 2, 1), 0.0)


@given(st.floats(0.1, 10.0))
def test_arc_length_scales_with_energy(E):
    # phi = int sqrt(V/E): L scales as E^-1/2
    m = build_maps(Landscape.quartic(1, 2, 1), E, n_nodes=513)
    assert m.L_classical * math.sqrt(E) == pytest.approx(L_CLASSICAL, rel=1e-9)


_CACHE = {}


def _maps():
    if "m" not in _CACHE:
        _CACHE["m"] = build_maps(Landscape.quartic(1.0, 2.0, 1.0), 1.0)
    return _CACHE["m"]
