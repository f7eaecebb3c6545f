"""Adaptive Dormand-Prince 5(4) integrator for complex-valued ODE systems.

Written out here rather than taken from scipy because the traversal-time
search needs step-by-step access to the state, and the same stepper also
drives the density-matrix oracle.
"""

from __future__ import annotations

import math

import numpy as np

from chiralchain.errors import IntegrationError

# Butcher tableau (Dormand & Prince 1980), FSAL
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B_LOW = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_E = _B - _B_LOW

_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 10.0


class DormandPrince:
    """Stepper for ``dy/dt = f(t, y)`` with complex or real ``y``.

    Parameters
    ----------
    f : callable
        Right-hand side ``f(t, y) -> array`` of the same shape as ``y``.
    t0 : float
    y0 : array_like
    rtol, atol : float
        Per-component tolerance ``atol + rtol * |y|`` on the local error,
        measured in the RMS norm.
    h0 : float, optional
        First trial step; estimated from ``f`` when omitted.
    h_min : float, optional
        Steps below this (relative to ``|t|``) raise :class:`IntegrationError`.
    """

    def __init__(self, f, t0, y0, rtol=1e-9, atol=1e-14, h0=None, h_min=1e-14):
        self.f = f
        self.t = float(t0)
        self.y = np.array(y0, dtype=complex if np.iscomplexobj(y0) else float)
        self.rtol = rtol
        self.atol = atol
        self.h_min = h_min
        self.k_first = f(self.t, self.y)
        self.h = h0 if h0 is not None else self._initial_step()
        self.n_steps = 0
        self.n_rejected = 0

    def _scale(self, y):
        return self.atol + self.rtol * np.abs(y)

    def _initial_step(self):
        # Hairer, Norsett & Wanner, Solving ODEs I, sec. II.4
        sc = self._scale(self.y)
        d0 = _rms(self.y / sc)
        d1 = _rms(self.k_first / sc)
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        y1 = self.y + h0 * self.k_first
        d2 = _rms((self.f(self.t + h0, y1) - self.k_first) / sc) / h0
        if max(d1, d2) <= 1e-15:
            h1 = max(1e-6, h0 * 1e-3)
        else:
            h1 = (0.01 / max(d1, d2)) ** (1 / 5)
        return min(100 * h0, h1)

    def _attempt(self, h):
        t, y = self.t, self.y
        k = [self.k_first]
        for i in range(1, 7):
            yi = y.copy()
            for j, a in enumerate(_A[i]):
                if a != 0.0:
                    yi += (h * a) * k[j]
            k.append(self.f(t + _C[i] * h, yi))
        # stage 7 is evaluated at the 5th-order solution (FSAL)
        y_new = yi
        err = h * sum(e * kk for e, kk in zip(_E, k) if e != 0.0)
        scale = self.atol + self.rtol * np.maximum(np.abs(y), np.abs(y_new))
        return y_new, k[6], _rms(err / scale)

    def step(self, t_stop=math.inf):
        """Take one accepted step, never passing ``t_stop``.

        Returns the new time.
        """
        while True:
            h = min(self.h, t_stop - self.t)
            if h <= self.h_min * max(1.0, abs(self.t)):
                if t_stop - self.t <= self.h_min * max(1.0, abs(self.t)):
                    # residual sliver before an output time
                    self.t = t_stop
                    return self.t
                raise IntegrationError(
                    f"step size underflow (h={h:.3e}) at t={self.t:.6g}", self.t
                )
            y_new, k_last, err = self._attempt(h)
            if not np.isfinite(err):
                self.h = h * _FAC_MIN
                self.n_rejected += 1
                continue
            if err <= 1.0:
                fac = _FAC_MAX if err == 0 else min(_FAC_MAX, _SAFETY * err ** -0.2)
                clipped = h < self.h
                self.t = t_stop if h == t_stop - self.t else self.t + h
                self.y = y_new
                self.k_first = k_last
                self.n_steps += 1
                if not clipped:
                    self.h = h * fac
                return self.t
            self.h = h * max(_FAC_MIN, _SAFETY * err ** -0.2)
            self.n_rejected += 1

    def advance_to(self, t_end):
        """Integrate up to exactly ``t_end``."""
        while self.t < t_end:
            self.step(t_end)
        return self.y


def _rms(x):
    x = np.abs(x)
    return float(math.sqrt(np.mean(x * x))) if x.size else 0.0


def solve_ivp(f, y0, t_grid, rtol=1e-9, atol=1e-14):
    """Integrate from ``t_grid[0]`` and return the states at every grid time.

    Returns an array of shape ``(len(t_grid),) + y0.shape``.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0:
        raise ValueError("t_grid must be a non-empty 1-D array")
    if np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    stepper = DormandPrince(f, t_grid[0], y0, rtol=rtol, atol=atol)
    out = np.empty((t_grid.size,) + stepper.y.shape, dtype=stepper.y.dtype)
    out[0] = stepper.y
    for i, t in enumerate(t_grid[1:], start=1):
        out[i] = stepper.advance_to(t)
    return out


class LinearDormandPrince:
    """Dormand-Prince 5(4) specialised to ``dy/dt = M y - b`` with constant M, b.

    For a linear autonomous system one step is a fixed matrix polynomial in
    ``h M``, so the stage recurrence is carried out once per step size on
    the augmented matrix ``[[M, -b], [0, 0]]`` and cached.  Accepted step
    sizes are rounded down to the grid ``h_ref * 2**(k / 4)`` so the cache
    stays small; every step then costs two matrix-vector products instead of
    six right-hand-side evaluations.  Step acceptance and size control are
    the same as in :class:`DormandPrince`.
    """

    _LEVELS = 4
    _HOLD = 50

    def __init__(self, m, b, t0, y0, rtol=1e-9, atol=1e-14, h_min=1e-14):
        m = np.asarray(m, dtype=complex)
        n = m.shape[0]
        a = np.zeros((n + 1, n + 1), complex)
        a[:n, :n] = m
        a[:n, n] = -np.asarray(b, dtype=complex)
        self.a = a
        self.n = n
        self.t = float(t0)
        self.y = np.asarray(y0, dtype=complex).copy()
        self.rtol = rtol
        self.atol = atol
        self.h_min = h_min
        self._cache = {}
        self.n_steps = 0
        self.n_rejected = 0
        self._hold = 0
        self._abs_y = np.abs(self.y)
        norm = np.linalg.norm(m, 1)
        self.h_ref = 1.0 / max(norm, 1e-300)
        self.level = self._level_below(0.01 * self.h_ref)

    def _level_below(self, h):
        return math.floor(self._LEVELS * math.log2(h / self.h_ref))

    def _h(self, level):
        return self.h_ref * 2.0 ** (level / self._LEVELS)

    def _operators(self, h):
        key = h
        ops = self._cache.get(key)
        if ops is None:
            eye = np.eye(self.n + 1, dtype=complex)
            k = []
            for i in range(7):
                yi = eye.copy()
                for j, c in enumerate(_A[i]):
                    if c != 0.0:
                        yi += (h * c) * k[j]
                k.append(self.a @ yi)
            prop = eye + h * sum(bb * kk for bb, kk in zip(_B, k) if bb != 0.0)
            err = h * sum(e * kk for e, kk in zip(_E, k) if e != 0.0)
            # one stacked product gives the new state and the error estimate
            ops = np.vstack([prop[: self.n], err[: self.n]])
            if len(self._cache) > 64:
                self._cache.clear()
            self._cache[key] = ops
        return ops

    def _apply(self, h):
        out = self._operators(h) @ np.append(self.y, 1.0)
        y_new, err = out[: self.n], out[self.n :]
        abs_new = np.abs(y_new)
        r = err / (self.atol + self.rtol * np.maximum(self._abs_y, abs_new))
        return y_new, abs_new, math.sqrt(np.vdot(r, r).real / self.n)

    def step(self, t_stop=math.inf):
        """Take one accepted step, never passing ``t_stop``; return the new time."""
        while True:
            h = self._h(self.level)
            clipped = h >= t_stop - self.t
            if clipped:
                h = t_stop - self.t
            if h <= self.h_min * max(1.0, abs(self.t)):
                if clipped:
                    self.t = t_stop
                    return self.t
                raise IntegrationError(
                    f"step size underflow (h={h:.3e}) at t={self.t:.6g}", self.t
                )
            y_new, abs_new, err = self._apply(h)
            if np.isfinite(err) and err <= 1.0:
                self.t = t_stop if clipped else self.t + h
                self.y = y_new
                self._abs_y = abs_new
                self.n_steps += 1
                # at the stability limit the size would otherwise bounce
                # between two grid levels; hold it for a while after a rejection
                if self._hold:
                    self._hold -= 1
                elif not clipped:
                    fac = _FAC_MAX if err == 0 else min(_FAC_MAX, _SAFETY * err ** -0.2)
                    self.level = max(self.level, self._level_below(h * fac))
                return self.t
            fac = _FAC_MIN if not np.isfinite(err) else max(_FAC_MIN, _SAFETY * err ** -0.2)
            self.level = min(self.level - 1, self._level_below(h * fac))
            self.n_rejected += 1
            self._hold = self._HOLD

    def advance_to(self, t_end):
        while self.t < t_end:
            self.step(t_end)
        return self.y
