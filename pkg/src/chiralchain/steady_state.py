"""Steady state of the driven linear dipole equations, ``M sigma = i Omega v``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from chiralchain.errors import CriticalPointError, DomainError
from chiralchain.model import build_coupling_matrix, drive_vector

#: condition numbers above this are treated as singular
CONDITION_THRESHOLD = 1e12


@dataclass(frozen=True)
class SteadyState:
    """Solution of the steady-state equation.

    Attributes
    ----------
    sigma : ndarray of complex
        Dipole amplitudes, site mu at index mu - 1.
    populations : ndarray
        ``|sigma|**2``.
    normalized : ndarray
        Populations divided by their sum.
    residual : float
        ``||M sigma - i Omega v|| / ||i Omega v||``.
    condition_estimate : float
        2-norm condition number of M.
    backward_error : float
        ``||M sigma - b|| / (||M|| ||sigma|| + ||b||)``, the quantity the
        solver tolerance applies to.
    """

    sigma: np.ndarray
    populations: np.ndarray
    normalized: np.ndarray
    residual: float
    condition_estimate: float
    backward_error: float = 0.0

    @property
    def n_atoms(self):
        return self.sigma.size

    def rows(self):
        """Rows ``(site, re_sigma, im_sigma, population, normalized)``."""
        return [
            (mu + 1, s.real, s.imag, p, q)
            for mu, (s, p, q) in enumerate(
                zip(self.sigma, self.populations, self.normalized)
            )
        ]

    def to_dict(self):
        return {
            "sigma_re": self.sigma.real.tolist(),
            "sigma_im": self.sigma.imag.tolist(),
            "populations": self.populations.tolist(),
            "normalized": self.normalized.tolist(),
            "residual": self.residual,
            "condition_estimate": self.condition_estimate,
            "backward_error": self.backward_error,
        }


def condition_check(m):
    """2-norm condition number of ``m`` (``inf`` for exactly singular input)."""
    m = np.asarray(m)
    with np.errstate(all="ignore"):
        cond = float(np.linalg.cond(m))
    return cond if math.isfinite(cond) else math.inf


def solve_steady(m, v, rabi, tol=1e-10, threshold=CONDITION_THRESHOLD):
    """Solve ``M sigma = i Omega v``.

    Parameters
    ----------
    m : (N, N) complex array
        Coupling matrix.
    v : (N,) complex array
        Drive phases.
    rabi : float
        Drive amplitude Omega > 0.
    tol : float
        Maximum accepted normwise backward error.  For well-conditioned M
        this bounds the relative residual as well; near critical points the
        residual of even the correctly rounded solution grows like
        ``eps * ||M|| ||sigma|| / ||b||``, so the residual is only recorded.
    threshold : float
        Condition numbers above this raise :class:`CriticalPointError`.
    """
    if not rabi > 0:
        raise DomainError(f"rabi must be > 0 for a normalized steady state, got {rabi}")
    m = np.asarray(m, dtype=complex)
    v = np.asarray(v, dtype=complex)
    cond = condition_check(m)
    if cond > threshold:
        raise CriticalPointError(
            f"coupling matrix is singular (condition estimate {cond:.3e})", cond
        )
    rhs = 1j * rabi * v
    norm_m = np.linalg.norm(m, 2)
    norm_b = np.linalg.norm(rhs)

    def errors(x):
        r = np.linalg.norm(m @ x - rhs)
        return float(r / norm_b), float(r / (norm_m * np.linalg.norm(x) + norm_b))

    lu = lu_factor(m, check_finite=False)
    sigma = lu_solve(lu, rhs, check_finite=False)
    residual, backward = errors(sigma)
    # a few rounds of iterative refinement help when M is ill-conditioned
    for _ in range(3):
        if residual <= 0.01 * tol:
            break
        refined = sigma + lu_solve(lu, rhs - m @ sigma, check_finite=False)
        new_residual, new_backward = errors(refined)
        if new_residual >= residual:
            break
        sigma, residual, backward = refined, new_residual, new_backward
    if backward > tol:
        raise CriticalPointError(
            f"steady-state backward error {backward:.3e} exceeds {tol:.1e}", cond
        )
    pop = np.abs(sigma) ** 2
    return SteadyState(sigma, pop, pop / pop.sum(), residual, cond, backward)


def steady_state(config, tol=1e-10):
    """Steady state of ``config``."""
    return solve_steady(
        build_coupling_matrix(config), drive_vector(config), config.rabi, tol
    )


def edge_population_analytic(n, xi):
    """Closed-form edge population at D = 0, zero detuning, uniform drive.

    ``P1 = A / (2A + (N - 2) A**2)`` with ``A = |1 - exp(i xi)|**2``.
    """
    if n < 3:
        raise DomainError(f"n must be >= 3, got {n}")
    a = abs(1.0 - np.exp(1j * xi)) ** 2
    if a < 1e-12:
        raise CriticalPointError(f"A = {a:.3e} vanishes at xi = {xi}")
    return a / (2.0 * a + (n - 2) * a * a)
