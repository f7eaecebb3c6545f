"""Eigenvalues of the coupling matrix and the subradiant sector."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from chiralchain.errors import ChainError, DomainError


@dataclass(frozen=True)
class EigenSpectrum:
    """Eigenvalues ``lambda_n`` of M.

    ``sort_order`` lists indices into ``eigenvalues`` by ascending decay
    rate ``-Re(lambda)`` (stable, so ties keep solver order).
    """

    eigenvalues: np.ndarray
    sort_order: np.ndarray

    @property
    def decay_rates(self):
        return -self.eigenvalues.real

    @property
    def shifts(self):
        return self.eigenvalues.imag

    def sorted_decay_rates(self):
        return self.decay_rates[self.sort_order]

    def sorted_shifts(self):
        return self.shifts[self.sort_order]

    def rows(self):
        """Rows ``(n, decay_rate, shift)`` in sorted order."""
        return [
            (n, float(g), float(s))
            for n, (g, s) in enumerate(zip(self.sorted_decay_rates(), self.sorted_shifts()))
        ]


def eigen_spectrum(m):
    """Eigenvalues of ``m`` (no eigenvectors, so defective input is fine)."""
    m = np.asarray(m, dtype=complex)
    try:
        lam = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise ChainError(f"eigenvalue solver did not converge for N={m.shape[0]}: {exc}")
    order = np.argsort(-lam.real, kind="stable")
    return EigenSpectrum(lam, order)


def decoherence_free_count(spec, tol=1e-10):
    """Number of modes with decay rate below ``tol``."""
    if not tol > 0:
        raise DomainError(f"tol must be > 0, got {tol}")
    return int(np.count_nonzero(spec.decay_rates < tol))


def subradiant_sector(spec, cutoff=1.0):
    """Sorted indices with decay rate below ``cutoff`` and their shifts."""
    if not 0 < cutoff <= 1:
        raise DomainError(f"cutoff must lie in (0, 1], got {cutoff}")
    order = spec.sort_order
    keep = order[spec.decay_rates[order] < cutoff]
    return keep, spec.shifts[keep]


def max_shift_jump(spec, n_modes=20):
    """Largest gap between neighbouring shifts of the ``n_modes`` most subradiant modes.

    The shifts are put in ascending order first, so the result is the
    widest gap in that part of the frequency axis.
    """
    shifts = np.sort(spec.sorted_shifts()[:n_modes])
    if shifts.size < 2:
        return 0.0
    return float(np.max(np.diff(shifts)))
