"""Time evolution: linear dipole equations, traversal time, oscillation metric,
and a full master-equation oracle for small chains.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from chiralchain.errors import (
    CapabilityError,
    DomainError,
    InsufficientDataError,
    IntegrationError,
    TraversalTimeout,
)
from chiralchain.integrate import DormandPrince, LinearDormandPrince, solve_ivp
from chiralchain.model import build_coupling_matrix, drive_vector
from chiralchain.steady_state import solve_steady

ORACLE_MAX_ATOMS = 6


@dataclass(frozen=True)
class Trajectory:
    """Dipole amplitudes sampled on a time grid.

    Attributes
    ----------
    times : ndarray, shape (T,)
    sigma_t : ndarray of complex, shape (T, N)
    """

    times: np.ndarray
    sigma_t: np.ndarray

    @property
    def populations_t(self):
        return np.abs(self.sigma_t) ** 2

    @property
    def total_population_t(self):
        return self.populations_t.sum(axis=1)

    @property
    def normalized_t(self):
        """Per-time normalized populations (rows of zeros stay zero)."""
        pop = self.populations_t
        tot = pop.sum(axis=1, keepdims=True)
        return np.divide(pop, tot, out=np.zeros_like(pop), where=tot > 0)

    def rows(self, rescale=False):
        """Rows ``(t, P_t, P~_1 .. P~_N[, t/1000])``."""
        norm = self.normalized_t
        total = self.total_population_t
        out = []
        for i, t in enumerate(self.times):
            row = [t, total[i], *norm[i]]
            if rescale:
                row.append(t / 1000.0)
            out.append(tuple(row))
        return out


def _rhs(m, drive):
    def f(_t, y):
        return m @ y - drive

    return f


def propagate(config, sigma0=None, t_grid=None, rtol=1e-9, atol=1e-14):
    """Integrate ``d sigma/dt = M sigma - i Omega v``.

    Parameters
    ----------
    config : ChainConfig
    sigma0 : array_like, optional
        Initial amplitudes; the ground state (zeros) by default.
    t_grid : array_like
        Strictly increasing output times starting at 0.
    rtol, atol : float
        Local error tolerances.
    """
    if t_grid is None:
        raise DomainError("t_grid is required")
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0 or t_grid[0] != 0.0:
        raise DomainError("t_grid must be a 1-D array starting at 0")
    if np.any(np.diff(t_grid) <= 0):
        raise DomainError("t_grid must be strictly increasing")
    n = config.n_atoms
    y0 = np.zeros(n, complex) if sigma0 is None else np.asarray(sigma0, complex)
    if y0.shape != (n,):
        raise DomainError(f"sigma0 must have length {n}")
    f = _rhs(build_coupling_matrix(config), 1j * config.rabi * drive_vector(config))
    return Trajectory(t_grid, solve_ivp(f, y0, t_grid, rtol=rtol, atol=atol))


def traversal_time(
    config, threshold_fraction=0.5, t_max=1e6, rtol=1e-9, atol=1e-14, t_rel=1e-6
):
    """First time the far-end population reaches a fraction of its steady value.

    Starts from the ground state and watches ``|sigma_N(t)|**2`` against
    ``threshold_fraction * |sigma_N(inf)|**2``.  The crossing step is
    bisected (re-integrating from its start) down to relative width ``t_rel``.

    Raises
    ------
    CriticalPointError
        M is singular, so there is no steady value.
    TraversalTimeout
        The threshold is not reached before ``t_max``.
    """
    if not 0 < threshold_fraction < 1:
        raise DomainError(f"threshold_fraction must lie in (0, 1), got {threshold_fraction}")
    if config.directionality <= 0 and config.n_atoms > 1:
        raise DomainError("traversal time needs D > 0 so that site N is the far end")
    m = build_coupling_matrix(config)
    drive = 1j * config.rabi * drive_vector(config)
    target = threshold_fraction * abs(solve_steady(m, drive_vector(config), config.rabi).sigma[-1]) ** 2
    f = _rhs(m, drive)

    stepper = LinearDormandPrince(m, drive, 0.0, np.zeros(config.n_atoms, complex), rtol=rtol, atol=atol)
    t_a, y_a = 0.0, stepper.y.copy()
    while True:
        t_b = stepper.step(t_max)
        if abs(stepper.y[-1]) ** 2 >= target:
            break
        if t_b >= t_max:
            raise TraversalTimeout(
                f"far-end population below {threshold_fraction:g} of steady value at t_max={t_max:g}"
            )
        t_a, y_a = t_b, stepper.y.copy()

    while t_b - t_a > t_rel * t_b:
        t_mid = 0.5 * (t_a + t_b)
        sub = DormandPrince(f, t_a, y_a, rtol=rtol, atol=atol)
        y_mid = sub.advance_to(t_mid)
        if abs(y_mid[-1]) ** 2 >= target:
            t_b = t_mid
        else:
            t_a, y_a = t_mid, y_mid.copy()
    return t_b


def subharmonic_metric(p_t, times, equilibrium_tol=1e-3):
    """Dominant period and persistence of an oscillating series.

    The series is mean-subtracted and its (unbiased) autocorrelation
    normalized to 1 at lag 0.  The period is the lag of the first local
    maximum after the first negative value, refined by a parabola through the
    neighbouring lags; persistence is the autocorrelation at that maximum.
    Only lags up to a third of the window are searched, so at least three
    periods must fit in the window.

    A series whose standard deviation is below ``equilibrium_tol`` times its
    mean magnitude has settled; it returns ``(nan, 0.0)``.

    Raises
    ------
    InsufficientDataError
        No peak within the searchable lags.
    """
    p = np.asarray(p_t, dtype=float)
    t = np.asarray(times, dtype=float)
    if p.shape != t.shape or p.ndim != 1:
        raise DomainError("p_t and times must be 1-D arrays of equal length")
    if p.size < 9:
        raise InsufficientDataError("need at least 9 samples")
    dt = np.diff(t)
    if np.any(dt <= 0):
        raise DomainError("times must be strictly increasing")
    step = (t[-1] - t[0]) / (t.size - 1)
    if np.max(np.abs(dt - step)) > 1e-9 * step:
        uniform = t[0] + step * np.arange(t.size)
        p = np.interp(uniform, t, p)

    y = p - p.mean()
    scale = max(abs(p.mean()), np.max(np.abs(p)))
    if np.std(y) <= equilibrium_tol * scale:
        return math.nan, 0.0
    n = y.size
    max_lag = n // 3
    full = np.correlate(y, y, mode="full")[n - 1 : n + max_lag + 1]
    r = (full / (n - np.arange(full.size))) / (full[0] / n)

    negative = np.flatnonzero(r[: max_lag + 1] < 0)
    if negative.size == 0:
        raise InsufficientDataError("autocorrelation never turns negative within a third of the window")
    for j in range(negative[0] + 1, max_lag):
        if r[j - 1] < r[j] >= r[j + 1]:
            break
    else:
        raise InsufficientDataError("no autocorrelation peak within a third of the window")

    denom = r[j - 1] - 2 * r[j] + r[j + 1]
    shift = 0.5 * (r[j - 1] - r[j + 1]) / denom if denom < 0 else 0.0
    return (j + shift) * step, float(r[j])


# --- master-equation oracle -------------------------------------------------


@dataclass(frozen=True)
class OracleResult:
    """Final-time expectations from the full master equation."""

    expectations: np.ndarray
    populations: np.ndarray
    trace_error: float


def _site_operators(n):
    """Lowering operators with site 1 as the most significant qubit.

    Single-site basis index 0 is the ground state, 1 the excited state.
    """
    lower = np.array([[0.0, 1.0], [0.0, 0.0]])
    eye = np.eye(2)
    ops = []
    for mu in range(n):
        factors = [lower if nu == mu else eye for nu in range(n)]
        ops.append(reduce(np.kron, factors).astype(complex))
    return ops


def _oracle_generators(config):
    """Effective Hamiltonian and jump operators of the chiral master equation."""
    n = config.n_atoms
    xi = config.xi
    gamma_l, gamma_r = config.gamma_left, config.gamma_right
    sig = _site_operators(n)
    sig_dag = [s.conj().T for s in sig]
    dim = 2**n

    h = np.zeros((dim, dim), complex)
    drive = config.rabi * drive_vector(config)
    delta = config.detunings()
    for mu in range(n):
        h += drive[mu] * sig_dag[mu] + np.conj(drive[mu]) * sig[mu]
        h -= delta[mu] * sig_dag[mu] @ sig[mu]
    # coherent exchange mediated by left- and right-going photons
    for mu in range(n):
        for nu in range(n):
            if mu == nu:
                continue
            phase = np.exp(1j * xi * abs(mu - nu))
            rate = gamma_l if mu < nu else gamma_r
            hop = phase * sig_dag[mu] @ sig[nu]
            h += -0.5j * rate * (hop - hop.conj().T)

    phases = np.exp(1j * xi * np.arange(n))
    c_left = math.sqrt(gamma_l) * sum(phases[nu] * sig[nu] for nu in range(n))
    c_right = math.sqrt(gamma_r) * sum(np.conj(phases[nu]) * sig[nu] for nu in range(n))
    jumps = [c for c, g in ((c_left, gamma_l), (c_right, gamma_r)) if g > 0]
    h_eff = h - 0.5j * sum(c.conj().T @ c for c in jumps)
    return h_eff, jumps, sig


def lindblad_oracle(config, t_end, rtol=1e-10, atol=1e-13):
    """Integrate the full master equation from the ground state to ``t_end``.

    Restricted to ``N <= 6`` (Hilbert-space dimension ``2**N``).

    Raises
    ------
    CapabilityError
        ``N > 6``.
    IntegrationError
        Trace drifts by more than 1e-6.
    """
    n = config.n_atoms
    if n > ORACLE_MAX_ATOMS:
        raise CapabilityError(f"oracle supports N <= {ORACLE_MAX_ATOMS}, got {n}")
    if not t_end > 0:
        raise DomainError(f"t_end must be > 0, got {t_end}")
    h_eff, jumps, sig = _oracle_generators(config)
    h_eff_dag = h_eff.conj().T
    jumps_dag = [c.conj().T for c in jumps]
    dim = 2**n

    def f(_t, flat):
        rho = flat.reshape(dim, dim)
        out = -1j * (h_eff @ rho - rho @ h_eff_dag)
        for c, cd in zip(jumps, jumps_dag):
            out += c @ rho @ cd
        return out.ravel()

    rho0 = np.zeros((dim, dim), complex)
    rho0[0, 0] = 1.0
    stepper = DormandPrince(f, 0.0, rho0.ravel(), rtol=rtol, atol=atol)
    rho = stepper.advance_to(float(t_end)).reshape(dim, dim)

    trace_error = float(abs(np.trace(rho) - 1.0))
    if trace_error > 1e-6:
        raise IntegrationError(f"density-matrix trace drifted by {trace_error:.3e}", t_end)
    expect = np.array([np.trace(rho @ s) for s in sig])
    pops = np.array([np.trace(rho @ s.conj().T @ s).real for s in sig])
    return OracleResult(expect, pops, trace_error)
