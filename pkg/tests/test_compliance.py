import math

import pytest
from hypothesis import assume, given, strategies as st

from painleve.compliance import (LAWS, LINEAR, ComplianceLaw, ComplianceParams, bracket,
                                 get_law, normal_force, scaled_normal_force)

finite = st.floats(-1e6, 1e6, allow_nan=False)


def test_params_validation():
    with pytest.raises(ValueError):
        ComplianceParams(epsilon=0.0)
    with pytest.raises(ValueError):
        ComplianceParams(delta=-1.0)


def test_bracket():
    assert bracket(1.5) == 1.5
    assert bracket(-2) == 0
    assert bracket(0.0) == 0


def test_normal_force_examples():
    p = ComplianceParams(1e-3, 1.0)
    assert normal_force(0.1, -5.0, p) == 0.0
    assert normal_force(-p.epsilon ** 2, 0.0, p) == pytest.approx(1.0, rel=1e-12)
    # -y/eps - delta w = 0 on the bracket boundary
    assert normal_force(-p.epsilon ** 2, p.epsilon / p.delta, p) == 0.0


def test_scaled_examples():
    assert scaled_normal_force(-1.0, 0.0, 1.0) == 1.0
    assert scaled_normal_force(1.0, 0.0, 1.0) == 0.0
    assert scaled_normal_force(-1.0, 2.0, 1.0) == 0.0


@given(finite, finite, st.floats(1e-6, 1.0), st.floats(0.0, 10.0))
def test_normal_force_nonnegative(y, w, eps, delta):
    assert normal_force(y, w, ComplianceParams(eps, delta)) >= 0.0
    assert normal_force(y, w, ComplianceParams(eps, delta), get_law("cubic")) >= 0.0


@pytest.mark.parametrize("eps", [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6])
@given(y_hat=st.floats(-100, 100), w=st.floats(-100, 100), delta=st.floats(0, 10))
def test_scaling_identity(eps, y_hat, w, delta):
    # y = eps * y_hat must keep the sign of y_hat (it can underflow to 0)
    assume((eps * y_hat > 0) == (y_hat > 0))
    lhs = eps * normal_force(eps * y_hat, w, ComplianceParams(eps, delta))
    rhs = scaled_normal_force(y_hat, w, delta)
    # absolute floor covers subnormal inputs, where relative precision is lost
    assert lhs == pytest.approx(rhs, rel=1e-13, abs=1e-13 * (abs(y_hat) + delta * abs(w)) + 1e-300)


@pytest.mark.parametrize("name", sorted(LAWS))
def test_registered_laws_linearize(name):
    law = get_law(name)
    for delta in (0.0, 0.5, 2.0):
        law.check_linearization(delta)
        # quadratic remainder on a shrinking grid
        ratios = []
        for r in (1e-1, 1e-2, 1e-3):
            worst = 0.0
            for k in range(16):
                a = 2 * math.pi * k / 16
                y, w = r * math.cos(a), r * math.sin(a)
                worst = max(worst, abs(law.h(y, w, delta) - LINEAR.h(y, w, delta)))
            ratios.append(worst / r ** 2)
        assert max(ratios) <= 1.0


def test_bad_law_rejected():
    with pytest.raises(ValueError):
        ComplianceLaw.from_function("stiff", lambda y, w, d: -2 * y - d * w)
    with pytest.raises(ValueError):
        ComplianceLaw.from_function("offset", lambda y, w, d: 0.1 - y - d * w)


def test_unknown_law():
    with pytest.raises(ValueError):
        get_law("hertz")


def test_cubic_law_flag():
    assert LINEAR.is_linear
    assert not get_law("cubic").is_linear
