"""Population diagnostics: excess, participation ratio, S(k), imbalance."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from chiralchain.errors import DomainError


def excess_population(p_norm):
    """Above-uniform excess ``(P - 1/N) * Theta(P - 1/N)`` with Theta(0) = 0."""
    p = np.asarray(p_norm, dtype=float)
    diff = p - 1.0 / p.size
    return np.where(diff > 0, diff, 0.0)


def participation_ratio(p_norm):
    """``(sum dP)**2 / sum dP**2`` over the excess populations (0 if none)."""
    ex = excess_population(p_norm)
    sq = float(np.sum(ex * ex))
    if sq == 0.0:
        return 0.0
    return float(np.sum(ex)) ** 2 / sq


def structure_factor(p_norm, k):
    """``S(k) = |sum_j exp(i k j) P_j|**2`` with 1-based j.

    ``k`` may be a scalar or an array.
    """
    p = np.asarray(p_norm, dtype=float)
    j = np.arange(1, p.size + 1)
    k_arr = np.asarray(k, dtype=float)
    amp = np.exp(1j * np.multiply.outer(k_arr, j)) @ p
    s = amp.real ** 2 + amp.imag ** 2
    return float(s) if s.ndim == 0 else s


def k_grid(n, grid="closed"):
    """Momentum grid with ``n`` points.

    ``"closed"`` is ``linspace(0, 2 pi, n)`` (both ends included, spacing
    2 pi / (n - 1)); ``"fourier"`` is the DFT set ``2 pi m / n``.
    """
    if grid == "closed":
        return np.linspace(0.0, 2.0 * np.pi, n)
    if grid == "fourier":
        return 2.0 * np.pi * np.arange(n) / n
    raise DomainError(f"unknown k grid {grid!r} (expected 'closed' or 'fourier')")


@dataclass(frozen=True)
class StructureSpectrum:
    """S(k) on a grid, plus the maximiser over k not equivalent to 0."""

    k_values: np.ndarray
    s_values: np.ndarray
    max_nonzero_k: Optional[Tuple[float, float]]

    def rows(self):
        return [(m, k, s) for m, (k, s) in enumerate(zip(self.k_values, self.s_values))]


def structure_spectrum(p_norm, grid="closed"):
    """Evaluate S(k) on ``k_grid(N, grid)``.

    Grid points congruent to 0 mod 2 pi (where S = 1 identically) are left
    out of the maximum.  The closed grid is the default and the one used
    for the finite-size S(k) fits.
    """
    p = np.asarray(p_norm, dtype=float)
    k = k_grid(p.size, grid)
    s = np.atleast_1d(structure_factor(p, k))
    wrapped = np.abs(np.angle(np.exp(1j * k)))
    nonzero = np.flatnonzero(wrapped > 1e-9)
    best = None
    if nonzero.size:
        i = nonzero[np.argmax(s[nonzero])]
        best = (float(k[i]), float(s[i]))
    return StructureSpectrum(k, s, best)


def max_structure_factor(p_norm, grid="closed"):
    """``max_{k != 0} S(k)`` on the grid (0 for a single site)."""
    best = structure_spectrum(p_norm, grid).max_nonzero_k
    return 0.0 if best is None else best[1]


def transport_imbalance(p_norm):
    """Left-minus-right population ``T_p``.

    Odd N leaves the central site out; even N splits at N/2.
    """
    p = np.asarray(p_norm, dtype=float)
    n = p.size
    if n < 2:
        raise DomainError("transport imbalance needs at least two sites")
    half = n // 2
    return float(np.sum(p[:half]) - np.sum(p[n - half:]))
