import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from curvedblowup import spectral as sp
from curvedblowup.soliton import DW

# frozen from the 4th-order finite-difference matrix with R_max = 60, n = 6000
MATRIX_XI = -1.210367906268402


def test_potential_values():
    assert sp.potential(0.0) == pytest.approx(-5.0, rel=1e-14)
    assert sp.potential(np.sqrt(3.0)) == pytest.approx(-1.25, rel=1e-14)
    assert sp.potential(100.0) == pytest.approx(-45.0 / 100.0 ** 4, rel=1e-3)


def test_eigenvalue_in_range_and_unique(ground_state):
    assert -5.0 < ground_state.xi_minus < 0.0
    assert ground_state.method["sign_changes"] == 1
    assert ground_state.method["nodes"] == 0


def test_shooting_matches_matrix(ground_state):
    assert ground_state.xi_minus == pytest.approx(sp.matrix_eigenvalue(), abs=1e-6)
    assert ground_state.xi_minus == pytest.approx(MATRIX_XI, abs=1e-6)


def test_matrix_second_order_converges_to_fourth():
    coarse = sp.matrix_eigenvalue(n=1500, order=2)
    fine = sp.matrix_eigenvalue(n=3000, order=2)
    ref = sp.matrix_eigenvalue()
    assert abs(fine - ref) < abs(coarse - ref) / 3.5


def test_bad_matrix_order():
    with pytest.raises(ValueError):
        sp.matrix_eigenvalue(order=3)


def test_ground_state_normalized_and_positive(ground_state):
    from scipy.integrate import simpson
    phi = ground_state.ground_state
    assert simpson(phi * phi, x=ground_state.R) == pytest.approx(1.0, abs=1e-10)
    assert phi[0] == 0.0
    assert np.all(phi[1:] > 0)


def test_decay_rate(ground_state):
    assert -sp.decay_fit(ground_state) == pytest.approx(ground_state.decay_rate, rel=0.01)


@pytest.mark.parametrize("R_max", [40.0, 80.0])
def test_eigenvalue_stable_in_box_size(ground_state, R_max):
    other = sp.negative_eigenvalue(R_max=R_max, n_scan=40)
    assert other.xi_minus == pytest.approx(ground_state.xi_minus, abs=1e-7)


def test_resonance_defect():
    assert sp.resonance_check() < 1e-10


def test_resonance_profile_bounded_not_decaying():
    f, _ = sp.resonance_profile(np.array([0.0, 50.0, 1e4]))
    assert f[0] == 0.0
    # R DW tends to -sqrt(3)/2: bounded, not L^2
    assert f[2] == pytest.approx(-np.sqrt(3.0) / 2.0, rel=1e-6)
    assert abs(f[1]) < 1.0


def test_resonance_vanishes_at_core_zero():
    assert DW(np.sqrt(3.0)) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("xi", [1.0, 4.0])
def test_oscillation_wavenumber(xi):
    fit = sp.oscillation_check(xi)
    assert fit.wavenumber == pytest.approx(np.sqrt(xi), rel=0.01)
    assert fit.crossings.size >= 6


def test_oscillation_window_too_short():
    with pytest.raises(sp.WindowTooShortError) as info:
        sp.oscillation_check(1e-3)
    assert info.value.crossings < 6


def test_oscillation_needs_positive_xi():
    with pytest.raises(ValueError):
        sp.oscillation_check(-1.0)


def test_zero_energy_nodes_counts_one_bound_state():
    assert sp.zero_energy_nodes() == 1


def test_count_nodes():
    assert sp.count_nodes([1.0, -1.0, 2.0, 0.0, 3.0]) == 2
    assert sp.count_nodes(np.ones(5)) == 0


def test_matching_wronskian_brackets_eigenvalue(ground_state):
    xi = ground_state.xi_minus
    lo, hi = sp.matching_wronskian(xi - 0.05), sp.matching_wronskian(xi + 0.05)
    assert np.sign(lo) != np.sign(hi)
    # the normalized Wronskian is steep here, so brentq precision leaves ~1e-7
    assert abs(sp.matching_wronskian(xi)) < 1e-5


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-1.0, 1.0), min_size=1, max_size=4),
       st.lists(st.floats(-1.0, 1.0), min_size=1, max_size=4))
def test_operator_symmetric(fc, gc):
    L = 10.0
    P = np.polynomial.Polynomial
    # x^2 (L - x)^2 makes both factors vanish to second order at each end
    w = P([0.0, 0.0, L * L, -2.0 * L, 1.0])
    f, g = w * P([1.0] + fc), w * P([1.0] + gc)
    assert sp.symmetry_defect(f, g, L) < 1e-9
