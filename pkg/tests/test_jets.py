import numpy as np
from hypothesis import given, settings, strategies as st

from curvedblowup.jets import Jet, wave_residual


def _fd(f, t, r, h=1e-4):
    return ((f(t + h, r) - f(t - h, r)) / (2 * h), (f(t, r + h) - f(t, r - h)) / (2 * h),
            (f(t + h, r) - 2 * f(t, r) + f(t - h, r)) / h ** 2,
            (f(t, r + h) - 2 * f(t, r) + f(t, r - h)) / h ** 2)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.2, 2.0), st.floats(0.1, 2.0))
def test_chain_rule_against_differences(t, r):
    T, R = Jet.time(np.array(t)), Jet.radius(np.array(r))
    expr = (T ** 1.5 * R + R * R / T).log() + (T * R).sqrt() - (1.0 + R * T).reciprocal()
    fn = lambda tt, rr: (np.log(tt ** 1.5 * rr + rr * rr / tt) + np.sqrt(tt * rr)
                         - 1.0 / (1.0 + rr * tt))
    ft, fr, ftt, frr = _fd(fn, t, r)
    assert np.isclose(expr.v, fn(t, r), rtol=1e-13)
    assert np.isclose(expr.t, ft, rtol=1e-6, atol=1e-7)
    assert np.isclose(expr.r, fr, rtol=1e-6, atol=1e-7)
    assert np.isclose(expr.tt, ftt, rtol=1e-4, atol=1e-4)
    assert np.isclose(expr.rr, frr, rtol=1e-4, atol=1e-4)


def test_power_of_time_and_wave_residual():
    t = np.array([0.5, 1.0])
    j = Jet.power_of_time(t, -2.0)
    assert np.allclose(j.tt, 6 * t ** -4)
    # u = t - r solves -u_tt + u_rr = 0 and with power 1 the residual is u
    u = Jet.time(t) - Jet.radius(np.array([0.1, 0.2]))
    assert np.allclose(wave_residual(u, np.zeros(2), power=1), u.v)
