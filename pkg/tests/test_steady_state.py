import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chiralchain import (
    ChainConfig,
    CriticalPointError,
    DomainError,
    build_coupling_matrix,
    condition_check,
    drive_vector,
    edge_population_analytic,
    solve_steady,
    steady_state,
)


def test_single_atom_closed_form():
    # -sigma/2 = i Omega  ->  sigma = -2 i Omega
    st_ = steady_state(ChainConfig(1, 0.0, rabi=0.01))
    assert st_.sigma[0] == pytest.approx(-0.02j, abs=1e-16)
    assert st_.normalized[0] == 1.0


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(2, 30),
    xi=st.floats(0.05, 2 * math.pi - 0.05),
    d=st.floats(-1, 1),
    rabi=st.floats(1e-4, 1.0),
)
def test_solution_satisfies_equation(n, xi, d, rabi):
    cfg = ChainConfig(n, xi, d, rabi=rabi)
    m = build_coupling_matrix(cfg)
    try:
        res = solve_steady(m, drive_vector(cfg), rabi)
    except CriticalPointError:
        return
    b = 1j * rabi * drive_vector(cfg)
    assert np.linalg.norm(m @ res.sigma - b) <= 1e-10 * (np.linalg.norm(m, 2) * np.linalg.norm(res.sigma) + np.linalg.norm(b))
    assert res.normalized.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(res.normalized >= 0)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(2, 20), xi=st.floats(0.2, 3.0), d=st.floats(-1, 1))
def test_normalized_profile_independent_of_rabi(n, xi, d):
    a = steady_state(ChainConfig(n, xi, d, rabi=1e-3))
    b = steady_state(ChainConfig(n, xi, d, rabi=0.3))
    np.testing.assert_allclose(a.normalized, b.normalized, rtol=1e-9, atol=1e-15)
    np.testing.assert_allclose(b.sigma, 300 * a.sigma, rtol=1e-9)


@pytest.mark.parametrize("n", [3, 4, 10, 51])
@pytest.mark.parametrize("xi", [0.3, 1.0, math.pi / 3, 2.0, 2.9])
def test_edge_matches_closed_form(n, xi):
    p = steady_state(ChainConfig(n, xi)).normalized
    assert p[0] == pytest.approx(edge_population_analytic(n, xi), rel=1e-9)
    assert p[-1] == pytest.approx(p[0], rel=1e-9)


def test_closed_form_frozen_values():
    # A = 1 at xi = pi/3, so P1 = 1 / N exactly
    for n in (3, 51, 101):
        assert edge_population_analytic(n, math.pi / 3) == pytest.approx(1 / n, rel=1e-14)
    # A = 4 at xi = pi: P1 = 4 / (8 + 16 (N - 2)) = 1 / (4N - 6)
    assert edge_population_analytic(101, math.pi) == pytest.approx(1 / 398, rel=1e-14)
    with pytest.raises(DomainError):
        edge_population_analytic(2, 1.0)
    with pytest.raises(CriticalPointError):
        edge_population_analytic(10, 0.0)


@pytest.mark.parametrize("xi", [0.0, math.pi, 2 * math.pi])
def test_critical_points_raise(xi):
    cfg = ChainConfig(20, xi, 0.0)
    with pytest.raises(CriticalPointError) as info:
        steady_state(cfg)
    assert info.value.condition > 1e12


def test_zero_rabi_rejected():
    cfg = ChainConfig(4, 1.0, rabi=0.0)
    with pytest.raises(DomainError):
        steady_state(cfg)


def test_condition_check():
    assert condition_check(np.eye(3)) == pytest.approx(1.0)
    assert condition_check(np.zeros((2, 2))) == math.inf


def test_rows_and_dict():
    res = steady_state(ChainConfig(3, 1.0, 0.2))
    rows = res.rows()
    assert [r[0] for r in rows] == [1, 2, 3]
    assert rows[1][3] == pytest.approx(abs(res.sigma[1]) ** 2)
    d = res.to_dict()
    assert len(d["sigma_re"]) == 3 and d["condition_estimate"] >= 1.0
