import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from panelflux.errors import NotPositiveDefiniteError
from panelflux.irf import (
    IRF_COLUMNS,
    bootstrap_bands,
    cholesky,
    impact_matrix,
    impulse_response,
    ma_coefficients,
    ma_coefficients_companion,
    write_irf_csv,
)
from panelflux.pvar import PvarModel, fit, simulate

GAMMA = np.array([[0.5, 0.2], [0.1, 0.4]])


def test_cholesky_example():
    np.testing.assert_allclose(cholesky([[4.0, 2.0], [2.0, 5.0]]), [[2.0, 0.0], [1.0, 2.0]], atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(0, 10_000))
def test_cholesky_matches_numpy(k, seed):
    A = np.random.default_rng(seed).normal(size=(k, k))
    S = A @ A.T + k * np.eye(k)
    L = cholesky(S)
    np.testing.assert_allclose(L, np.linalg.cholesky(S), atol=1e-10)
    assert np.allclose(np.triu(L, 1), 0)


def test_cholesky_not_positive_definite_names_pivot():
    with pytest.raises(NotPositiveDefiniteError) as err:
        cholesky([[1.0, 2.0], [2.0, 1.0]])
    assert err.value.pivot == 1
    with pytest.raises(ValueError, match="symmetric"):
        cholesky([[1.0, 0.5], [0.0, 1.0]])


def test_ma_hand_case():
    phi = ma_coefficients(GAMMA, 2)
    np.testing.assert_array_equal(phi[0], np.eye(2))
    np.testing.assert_allclose(phi[1], GAMMA, atol=1e-15)
    np.testing.assert_allclose(phi[2], GAMMA @ GAMMA, atol=1e-15)
    assert phi[1][0, 1] == pytest.approx(0.2, abs=1e-12)
    assert phi[2][0, 1] == pytest.approx(0.18, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.integers(0, 10_000))
def test_ma_recursion_equals_companion_powers(p, k, seed):
    g = np.random.default_rng(seed).uniform(-0.3, 0.3, size=(p, k, k))
    np.testing.assert_allclose(ma_coefficients(g, 12), ma_coefficients_companion(g, 12), atol=1e-12)


def test_impact_matrix_respects_ordering():
    S = np.array([[4.0, 2.0], [2.0, 5.0]])
    P = impact_matrix(S, [1, 0])
    np.testing.assert_allclose(P @ P.T, S, atol=1e-12)
    assert P[1, 0] == 0.0  # variable 1 is ordered first, so shock 0 cannot move it on impact


def test_impulse_response_identity_decay():
    m = PvarModel.from_coefficients(0.5 * np.eye(2), np.eye(2))
    r = impulse_response(m, 20)
    np.testing.assert_allclose(r.path("y1", "y1"), 0.5 ** np.arange(21), atol=1e-12)
    np.testing.assert_allclose(r.path("y1", "y2"), 0, atol=1e-15)


def test_ordering_changes_impact_only_through_covariance():
    S = np.array([[1.0, 0.5], [0.5, 1.0]])
    m = PvarModel.from_coefficients(GAMMA, S, ("F", "ICT"))
    a = impulse_response(m, 5, ("F", "ICT"))
    b = impulse_response(m, 5, ("ICT", "F"))
    assert a.responses[0][1, 0] != 0 and a.responses[0][0, 1] == 0
    assert b.responses[0][0, 1] != 0 and b.responses[0][1, 0] == 0
    assert b.ordering == ("ICT", "F")
    with pytest.raises(ValueError):
        impulse_response(m, 5, ("F", "GDP"))


def test_unstable_model_warns():
    m = PvarModel.from_coefficients(np.array([[1.1, 0.0], [0.0, 0.5]]), np.eye(2))
    with pytest.warns(RuntimeWarning, match="not stable"):
        impulse_response(m, 3)


def test_bootstrap_contains_point_and_is_seeded():
    cube = simulate(GAMMA, np.eye(2) * 0.1, 5, 80, seed=3)
    m = fit(cube, 1)
    a = bootstrap_bands(m, cube, reps=100, horizon=6, seed=4)
    b = bootstrap_bands(m, cube, reps=100, horizon=6, seed=4)
    np.testing.assert_array_equal(a.lower, b.lower)
    assert (a.lower <= a.responses + 1e-12).all() and (a.responses <= a.upper + 1e-12).all()
    assert a.level == 0.9 and a.dropped == 0
    with pytest.raises(ValueError):
        bootstrap_bands(m, cube, reps=50)


def test_irf_csv_layout(tmp_path):
    m = PvarModel.from_coefficients(GAMMA, np.eye(2), ("F", "ICT"))
    path = write_irf_csv(impulse_response(m, 3), tmp_path / "irf.csv")
    rows = list(csv.reader(path.open()))
    assert tuple(rows[0]) == IRF_COLUMNS
    assert len(rows) == 1 + 4 * 4
    assert rows[1][:3] == ["0", "F", "F"]
