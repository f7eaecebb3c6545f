"""Exit criteria, each at its stated tolerance.

Run ``pytest tests/test_acceptance.py -v``; the terminal summary prints one
PASS/FAIL line per criterion.  Criteria with several parts check every part
and report all failing parts together.
"""

import math

import numpy as np
import pytest

from chiralchain import (
    ChainConfig,
    CriticalPointError,
    Detuning,
    build_coupling_matrix,
    cfd_dichotomy,
    decoherence_free_count,
    drive_vector,
    edge_population_analytic,
    eigen_spectrum,
    fit_pr_scaling,
    fit_structure_thermo,
    lindblad_oracle,
    participation_ratio,
    propagate,
    solve_steady,
    steady_state,
    structure_factor,
    subharmonic_metric,
    transport_imbalance,
    traversal_time,
)
from chiralchain.observables import max_structure_factor
from chiralchain.phases import bhe_peak_pr

from conftest import random_config

PI = math.pi


def check_all(parts):
    failed = [f"{name}: {detail}" for name, ok, detail in parts if not ok]
    print()
    for name, ok, detail in parts:
        print(f"  [{'ok' if ok else 'FAILED'}] {name}: {detail}")
    assert not failed, "; ".join(failed)


@pytest.mark.acceptance("1", title="critical spectrum {-N/2, 0 x (N-1)} at D=0, xi in {0, pi}")
def test_critical_spectrum():
    parts = []
    for xi in (0.0, PI):
        spec = eigen_spectrum(build_coupling_matrix(ChainConfig(100, xi, 0.0)))
        lam = spec.eigenvalues[spec.sort_order]
        expected = np.zeros(100, complex)
        expected[-1] = -50.0
        dev = np.max(np.abs(lam - expected))
        parts.append((f"xi={xi:.4f} eigenvalues", dev < 1e-10, f"max deviation {dev:.2e}"))
        count = decoherence_free_count(spec)
        parts.append((f"xi={xi:.4f} dark modes", count == 99, f"{count}"))
    check_all(parts)


@pytest.mark.acceptance("2", title="P1 = 1/N at xi = pi/3, D = 0")
def test_analytic_boundary():
    parts = []
    for n in (3, 51, 101):
        p1 = steady_state(ChainConfig(n, PI / 3)).normalized[0]
        exact = edge_population_analytic(n, PI / 3)
        parts.append((f"N={n} |P1-1/N|", abs(p1 - 1 / n) < 1e-8, f"{abs(p1 - 1 / n):.2e}"))
        parts.append((f"N={n} closed form", abs(p1 - exact) < 1e-8, f"{abs(p1 - exact):.2e}"))
    check_all(parts)


@pytest.mark.acceptance("3", title="P1 within 2% of 1/(4N) at D = 0, xi -> pi, N = 101")
def test_hole_edge_asymptote():
    n = 101
    target = 1 / (4 * n)
    # exactly at xi = pi the matrix is rank one; the edge is the limit xi -> pi
    with pytest.raises(CriticalPointError):
        steady_state(ChainConfig(n, PI, 0.0))
    parts = []
    for xi in (PI - 1e-4, PI - 1e-6):
        p1 = steady_state(ChainConfig(n, xi, 0.0)).normalized[0]
        rel = abs(p1 / target - 1)
        parts.append((f"xi=pi-{PI - xi:.0e}", rel < 0.02, f"4N P1 = {4 * n * p1:.5f}"))
    limit = edge_population_analytic(n, PI)
    parts.append(("closed form at pi", abs(limit / target - 1) < 0.02, f"4N P1 = {4 * n * limit:.5f}"))
    check_all(parts)


@pytest.mark.acceptance("4", title="S(k) table and sign of the thermodynamic intercept")
def test_structure_factor_table():
    def s_max(n, xi):
        return max_structure_factor(steady_state(ChainConfig(n, xi, 0.05)).normalized)

    parts = []
    for n, xi, ref in ((100, 0.001, 4.4e-4), (200, 0.002, 6.26e-4)):
        s = s_max(n, xi)
        parts.append((f"N={n} xi={xi}", abs(s / ref - 1) <= 0.05, f"{s:.4e} vs {ref:.3e}"))
    sizes = (100, 200, 300, 400)
    for xi, sign in ((0.001, -1), (0.002, 1)):
        b = fit_structure_thermo(sizes, [s_max(n, xi) for n in sizes]).b
        parts.append((f"sign(b) at xi={xi}", np.sign(b) == sign, f"b = {b:.3e}"))
    check_all(parts)


@pytest.mark.acceptance("5", title="bi-hole PR table and exponents")
def test_pr_table():
    sizes = (25, 50, 100)
    parts = []
    peaks = [bhe_peak_pr(0.37, n)[1] for n in sizes]
    for n, pr, ref in zip(sizes, peaks, (13.61, 20.89, 27.65)):
        parts.append((f"D=0.37 N={n}", abs(pr / ref - 1) <= 0.05, f"{pr:.3f} vs {ref}"))
    alpha = fit_pr_scaling(sizes, peaks).alpha
    parts.append(("alpha(0.37)", abs(alpha - 0.51) <= 0.03, f"{alpha:.4f}"))
    alpha = fit_pr_scaling(sizes, [bhe_peak_pr(0.68, n)[1] for n in sizes]).alpha
    parts.append(("alpha(0.68)", abs(alpha - 0.092) <= 0.02, f"{alpha:.4f}"))
    check_all(parts)


@pytest.mark.acceptance("6", title="dominant S(k != 0) peak at k = 2 pi / 8 for D=1, xi=pi/4, N=50")
def test_crystalline_peak():
    p = steady_state(ChainConfig(50, PI / 4, 1.0)).normalized
    k = np.linspace(1e-3, 2 * PI - 1e-3, 20001)
    s = structure_factor(p, k)
    k_peak = k[np.argmax(s)]
    # peaks at k and 2 pi - k are mirror images; compare on (0, pi]
    k_peak = min(k_peak, 2 * PI - k_peak)
    width = 2 * PI / 50
    check_all([(
        "peak position",
        abs(k_peak - 2 * PI / 8) < width / 2,
        f"peak at k = {k_peak / (2 * PI / 8):.3f} x 2pi/8, S = {s.max():.4f}, "
        f"S(2pi/8) = {structure_factor(p, 2 * PI / 8):.4f}",
    )])


def test_crystalline_order_has_period_eight():
    # companion check for criterion 6: the profile repeats every 8 sites
    p = steady_state(ChainConfig(50, PI / 4, 1.0)).normalized
    np.testing.assert_allclose(p[8:40], p[:32], rtol=1e-6)
    k = np.linspace(1e-3, PI, 20001)
    s = structure_factor(p, k)
    harmonic = k[np.argmax(s)] / (2 * PI / 8)
    assert abs(harmonic - round(harmonic)) < 0.05
    assert s.max() > 0.1


@pytest.mark.acceptance("7", title="CFD: PR(D) minimum near 0.28 at xi = pi; even/odd metric > 0.2")
def test_chiral_flow_dichotomy():
    ds = np.round(np.arange(0.01, 1.0001, 0.005), 6)
    pr = np.array([participation_ratio(steady_state(ChainConfig(51, PI, d)).normalized) for d in ds])
    i = int(np.argmin(pr))
    interior = 0 < i < ds.size - 1
    parts = [("PR minimum", interior and abs(ds[i] - 0.28) <= 0.02, f"D = {ds[i]:.3f}, PR = {pr[i]:.3f}")]
    metric = cfd_dichotomy(ChainConfig(50, PI, 0.02), 50, 51)
    parts.append(("dichotomy N=50/51 at D=0.02", metric > 0.2, f"{metric:.4f}"))
    check_all(parts)


@pytest.mark.acceptance("8", title="master-equation oracle matches the linear steady state (20 configs)")
def test_oracle_equivalence():
    rng = np.random.default_rng(8)
    parts = []
    for trial in range(20):
        cfg = random_config(rng, 4, 0.05, rabi=1e-3)
        slowest = eigen_spectrum(build_coupling_matrix(cfg)).decay_rates.min()
        oracle = lindblad_oracle(cfg, t_end=40.0 / slowest)
        sigma = steady_state(cfg).sigma
        rel = np.max(np.abs(oracle.expectations - sigma) / np.abs(sigma))
        parts.append((f"trial {trial} N={cfg.n_atoms}", rel < 0.01, f"max rel {rel:.2e}"))
    check_all(parts)


@pytest.mark.acceptance("9", title="propagation converges to steady state; log t_c vs log D linear")
def test_dynamics_consistency():
    rng = np.random.default_rng(9)
    parts = []
    for trial in range(20):
        cfg = random_config(rng, 10, 3e-3)
        m = build_coupling_matrix(cfg)
        sigma = solve_steady(m, drive_vector(cfg), cfg.rabi).sigma
        end = propagate(cfg, t_grid=[0.0, 1e4]).sigma_t[-1]
        err = np.max(np.abs(end - sigma)) / np.max(np.abs(sigma))
        parts.append((f"propagate trial {trial} N={cfg.n_atoms}", err < 1e-8, f"{err:.2e}"))
    ds = np.linspace(0.1, 1.0, 10)
    for n in (50, 100, 150):
        tc = np.array([traversal_time(ChainConfig(n, 0.0, d)) for d in ds])
        x, y = np.log(ds), np.log(tc)
        r2 = np.corrcoef(x, y)[0, 1] ** 2
        slope = np.polyfit(x, y, 1)[0]
        parts.append((f"t_c N={n}", r2 >= 0.99, f"R^2 = {r2:.4f}, slope {slope:.3f}"))
    check_all(parts)


@pytest.mark.acceptance("10", title="subharmonic persistence at D=0 versus D=1, xi = 0.8 pi, N = 50")
def test_subharmonic_persistence():
    t = np.arange(0.0, 400.25, 0.5)
    window = t >= 200.0
    parts = []
    for d, want_high in ((0.0, True), (1.0, False)):
        traj = propagate(ChainConfig(50, 0.8 * PI, d), t_grid=t)
        period, persistence = subharmonic_metric(traj.total_population_t[window], t[window])
        if want_high:
            ok = persistence > 0.2 and math.isfinite(period)
        else:
            ok = persistence < 0.05
        parts.append((f"D={d}", ok, f"period {period:.3f}, persistence {persistence:.3f}"))
    check_all(parts)


@pytest.mark.acceptance("11", title="T_p sign structure under a linear detuning, D = 0, N = 51")
def test_transport_sign_structure():
    def tp(xi, slope):
        cfg = ChainConfig(51, xi, 0.0, detuning=Detuning.linear(slope))
        return transport_imbalance(steady_state(cfg).normalized)

    parts = []
    for xi in (PI / 8, 3 * PI / 4):
        value = tp(xi, 0.0)
        parts.append((f"zero slope xi={xi:.4f}", abs(value) < 1e-10, f"{value:.2e}"))
    value = tp(PI / 4, 1.0)
    parts.append(("xi=pi/4 slope 1", value < 0, f"{value:.4f}"))
    value = tp(PI / 4, 50.0)
    parts.append(("xi=pi/4 slope 50", value > 0, f"{value:.4f}"))
    check_all(parts)
