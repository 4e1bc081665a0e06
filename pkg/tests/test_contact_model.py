import math

import mpmath
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from painleve.contact_model import (BodyParams, DegenerateSlidingError, NoParadoxError,
                                    RegimeLabel, RodCoefficients, BodyCoefficients,
                                    classical_coeffs, classify_regime,
                                    constraint_normal_force, mu_critical, sliding_coeffs,
                                    theta_range)

ROD = RodCoefficients(BodyParams(3.0, 1.4))
ROD3 = RodCoefficients(BodyParams(3.0, 3.0))


def mp_coeffs(alpha, mu, theta, phi):
    # independent evaluation at 50 digits
    mpmath.mp.dps = 50
    al, m, th, ph = (mpmath.mpf(x) for x in (alpha, mu, theta, phi))
    s, c = mpmath.sin(th), mpmath.cos(th)
    return {
        "b": -1 + ph ** 2 * s,
        "q_plus": al * s * c - m * (1 + al * s * s),
        "p_plus": 1 + al * c * c - m * al * s * c,
    }


def test_params_validation():
    with pytest.raises(ValueError):
        BodyParams(alpha=0.0)
    with pytest.raises(ValueError):
        BodyParams(mu=-0.1)


def test_grazing_point_values():
    cv = classical_coeffs(BodyParams(3.0, 3.0), 0.9463, 1.6654)
    assert abs(cv.b - 1.2500) < 1e-3
    assert abs(cv.p_plus - (-2.243)) < 1e-3
    ref = mp_coeffs(3, 3, 0.9463, 1.6654)
    assert cv.q_plus == pytest.approx(float(ref["q_plus"]), rel=1e-14)
    assert cv.q_plus == pytest.approx(-7.50025, abs=1e-5)


def test_vertical_rod():
    cv = classical_coeffs(BodyParams(3.0, 1.4), math.pi / 2, 0.0)
    assert cv.b == -1.0
    assert cv.p_plus == pytest.approx(1.0, abs=1e-15)
    assert cv.q_plus == pytest.approx(-5.6, abs=1e-14)


def test_theta_one_against_high_precision():
    cv = classical_coeffs(BodyParams(3.0, 1.4), 1.0, 0.0)
    ref = mp_coeffs(3, 1.4, 1.0, 0.0)
    assert cv.p_plus == pytest.approx(float(ref["p_plus"]), rel=1e-13)
    assert cv.q_plus == pytest.approx(float(ref["q_plus"]), rel=1e-14)
    assert cv.p_plus == pytest.approx(-0.03374485115464476, rel=1e-12)
    assert cv.q_plus == pytest.approx(-3.009962216510476, rel=1e-13)


@given(st.floats(0.1, 10), st.floats(0, 5), st.floats(-3, 3))
def test_branch_differences(alpha, mu, theta):
    co = RodCoefficients(BodyParams(alpha, mu))
    s, c = math.sin(theta), math.cos(theta)
    assert co.q_minus(theta) - co.q_plus(theta) == pytest.approx(
        2 * mu * (1 + alpha * s * s), abs=1e-12 * (1 + mu * alpha))
    assert co.p_minus(theta) - co.p_plus(theta) == pytest.approx(
        2 * mu * alpha * s * c, abs=1e-12 * (1 + mu * alpha))


def test_sliding_special_angles():
    assert sliding_coeffs(ROD, math.pi / 2, "closed") == pytest.approx((1.0, 0.0), abs=1e-15)
    assert sliding_coeffs(ROD, math.pi / 2) == pytest.approx((1.0, 0.0), abs=1e-14)
    assert sliding_coeffs(ROD, 0.0, "closed") == (4.0, -3.0)
    assert sliding_coeffs(ROD, 0.0) == pytest.approx((4.0, -3.0), rel=1e-14)


def test_sliding_at_grazing_angle():
    s_w, _ = sliding_coeffs(ROD, 0.9463)
    s_w_closed, _ = sliding_coeffs(ROD, 0.9463, "closed")
    assert s_w == pytest.approx(s_w_closed, rel=1e-13)
    assert s_w == pytest.approx(1.3448012, abs=1e-6)


@pytest.mark.parametrize("mu", [1.4, 2.0, 3.0])
@pytest.mark.parametrize("theta", [0.1, 0.5, 0.9463, 1.0, 1.2, 1.5])
def test_sliding_independent_of_mu(mu, theta):
    co = RodCoefficients(BodyParams(3.0, mu))
    general = sliding_coeffs(co, theta)
    closed = sliding_coeffs(co, theta, "closed")
    assert abs(general[0] - closed[0]) < 1e-12
    assert abs(general[1] - closed[1]) < 1e-12


def test_sliding_degenerate():
    with pytest.raises(DegenerateSlidingError):
        RodCoefficients(BodyParams(3.0, 0.0)).sliding(1.0)
    with pytest.raises(ValueError):
        sliding_coeffs(ROD, 1.0, "bogus")


def test_closed_form_needs_rod():
    class Scaled(BodyCoefficients):
        # the rod with every force response doubled: a generic body
        def __init__(self):
            self.r = ROD

        def a(self, th, ph): return self.r.a(th, ph)
        def b(self, th, ph): return self.r.b(th, ph)
        def q_plus(self, th): return 2 * self.r.q_plus(th)
        def q_minus(self, th): return 2 * self.r.q_minus(th)
        def p_plus(self, th): return 2 * self.r.p_plus(th)
        def p_minus(self, th): return 2 * self.r.p_minus(th)
        def c_plus(self, th): return 2 * self.r.c_plus(th)
        def c_minus(self, th): return 2 * self.r.c_minus(th)

    body = Scaled()
    with pytest.raises(TypeError):
        sliding_coeffs(body, 1.0, "closed")
    s_w, s_phi = sliding_coeffs(body, 1.0)
    ref = ROD.sliding_closed_form(1.0)
    assert s_w == pytest.approx(2 * ref[0], rel=1e-13)
    assert s_phi == pytest.approx(2 * ref[1], rel=1e-13)


def test_mu_critical():
    assert mu_critical(3.0) == 4.0 / 3.0
    assert mu_critical(8.0) == 0.75
    assert mu_critical(1.0) == pytest.approx(2 * math.sqrt(2), rel=1e-15)
    with pytest.raises(ValueError):
        mu_critical(0.0)


def test_theta_range_root_find():
    t1, t2 = theta_range(BodyParams(3.0, 1.4))
    r1 = brentq(ROD.p_plus, 0.5, 1.1, xtol=1e-15)
    r2 = brentq(ROD.p_plus, 1.1, 1.5, xtol=1e-15)
    assert t1 == pytest.approx(r1, abs=1e-12)
    assert t2 == pytest.approx(r2, abs=1e-12)
    assert t1 == pytest.approx(0.9701554159882794, abs=1e-12)
    assert t2 == pytest.approx(1.220890396789439, abs=1e-12)
    assert 0 < t1 < t2 < math.pi / 2


def test_theta_range_at_critical_mu():
    t1, t2 = theta_range(BodyParams(3.0, 4.0 / 3.0))
    assert t1 == pytest.approx(math.atan(2.0), abs=1e-12)
    assert t2 == pytest.approx(math.atan(2.0), abs=1e-12)


def test_theta_range_no_paradox():
    with pytest.raises(NoParadoxError):
        theta_range(BodyParams(3.0, 1.0))


@pytest.mark.parametrize("alpha", [0.5, 1.0, 3.0, 8.0])
def test_mu_critical_is_infimum(alpha):
    mp = mu_critical(alpha)
    theta_range(BodyParams(alpha, mp + 1e-6))
    with pytest.raises(NoParadoxError):
        theta_range(BodyParams(alpha, mp - 1e-6))


@settings(max_examples=60)
@given(st.floats(0.3, 10), st.floats(1.01, 3.0), st.floats(0.0, 1.0))
def test_negative_p_plus_iff_inside_range(alpha, mu_factor, u):
    params = BodyParams(alpha, mu_factor * mu_critical(alpha))
    co = RodCoefficients(params)
    t1, t2 = theta_range(params)
    theta = u * math.pi / 2
    if min(abs(theta - t1), abs(theta - t2)) < 1e-9:
        return
    assert (co.p_plus(theta) < 0) == (t1 < theta < t2)


def test_classify_examples():
    assert classify_regime(ROD, 1.0, 0.5) is RegimeLabel.INCONSISTENT
    assert classify_regime(ROD, 0.9463, 2.0) is RegimeLabel.LIFT_OFF
    assert classify_regime(ROD, 0.5, 0.1) is RegimeLabel.SLIPPING
    assert classify_regime(ROD3, 0.9463, 1.6654) is RegimeLabel.INDETERMINATE
    th = 0.7
    assert classify_regime(ROD, th, 1 / math.sqrt(math.sin(th))) is RegimeLabel.BOUNDARY
    t1, _ = theta_range(BodyParams(3.0, 1.4))
    assert classify_regime(ROD, t1, 0.3) is RegimeLabel.BOUNDARY


@given(st.floats(0.0, math.pi / 2), st.floats(-4, 4))
def test_classify_even_in_phi(theta, phi):
    assert classify_regime(ROD, theta, phi) is classify_regime(ROD, theta, -phi)


def test_constraint_normal_force():
    assert constraint_normal_force(ROD, math.pi / 2, 0.0) == pytest.approx(1.0, rel=1e-14)
    assert constraint_normal_force(ROD3, 0.9463, 1.6654) == pytest.approx(0.557217, abs=1e-6)
    assert constraint_normal_force(ROD, 1.0, 0.0) < 0
    t1, _ = theta_range(BodyParams(3.0, 1.4))
    with pytest.raises(ZeroDivisionError):
        constraint_normal_force(ROD, t1, 0.0)
