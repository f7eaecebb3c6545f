"""Chain configuration, coupling matrix and drive vector.

Sites are labelled mu = 1..N in every formula; arrays store site mu at
index mu - 1.  Atoms sit at equal spacing, so the propagation phase between
sites mu and nu is ``xi * |mu - nu|``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from chiralchain.errors import DomainError

TWO_PI = 2.0 * math.pi

_DETUNING_KINDS = ("uniform", "linear", "harmonic")


def gamma_rates(directionality):
    """Split the unit decay rate into left- and right-propagating channels.

    Returns ``(gamma_L, gamma_R) = ((1 - D) / 2, (1 + D) / 2)``.
    """
    d = float(directionality)
    if not -1.0 <= d <= 1.0:
        raise DomainError(f"directionality must lie in [-1, 1], got {d}")
    return (1.0 - d) / 2.0, (1.0 + d) / 2.0


@dataclass(frozen=True)
class Detuning:
    """Site-dependent detuning profile delta_mu (units of gamma).

    ``kind`` is one of

    * ``"uniform"``:  delta_mu = value
    * ``"linear"``:   delta_mu = (value / N) * (mu - 1), value is the slope s
    * ``"harmonic"``: delta_mu = value * (mu - (N + 1) / 2)**2, value is h
    """

    kind: str = "uniform"
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in _DETUNING_KINDS:
            raise DomainError(
                f"detuning type must be one of {_DETUNING_KINDS}, got {self.kind!r}"
            )
        if not math.isfinite(self.value):
            raise DomainError(f"detuning value must be finite, got {self.value}")

    @classmethod
    def uniform(cls, delta0=0.0):
        return cls("uniform", float(delta0))

    @classmethod
    def linear(cls, slope):
        return cls("linear", float(slope))

    @classmethod
    def harmonic(cls, curvature):
        return cls("harmonic", float(curvature))

    def profile(self, n):
        """All N detunings as an array (index mu - 1)."""
        mu = np.arange(1, n + 1, dtype=float)
        if self.kind == "uniform":
            return np.full(n, self.value)
        if self.kind == "linear":
            return (self.value / n) * (mu - 1.0)
        return self.value * (mu - (n + 1) / 2.0) ** 2

    def to_dict(self):
        return {"type": self.kind, "params": {"value": self.value}}

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise DomainError("detuning: expected an object with 'type' and 'params'")
        unknown = set(data) - {"type", "params"}
        if unknown:
            raise DomainError(f"detuning: unknown key {sorted(unknown)[0]!r}")
        if "type" not in data:
            raise DomainError("detuning: missing key 'type'")
        params = data.get("params", {})
        if not isinstance(params, dict):
            raise DomainError("detuning.params: expected an object")
        extra = set(params) - {"value"}
        if extra:
            raise DomainError(f"detuning.params: unknown key {sorted(extra)[0]!r}")
        try:
            value = float(params.get("value", 0.0))
        except (TypeError, ValueError):
            raise DomainError("detuning.params.value: expected a number") from None
        return cls(str(data["type"]), value)


def detuning_at(profile, mu, n):
    """Detuning of site ``mu`` (1-based) in an ``n``-site chain."""
    if not 1 <= mu <= n:
        raise DomainError(f"site index {mu} outside 1..{n}")
    if profile.kind == "uniform":
        return profile.value
    if profile.kind == "linear":
        return (profile.value / n) * (mu - 1)
    return profile.value * (mu - (n + 1) / 2.0) ** 2


@dataclass(frozen=True)
class ChainConfig:
    """One point of parameter space.

    Parameters
    ----------
    n_atoms : int
        Number of emitters N >= 1.
    xi : float
        Inter-atomic phase k_s * spacing, in [0, 2 pi].
    directionality : float
        D = gamma_R - gamma_L in [-1, 1].
    rabi : float
        Drive amplitude Omega >= 0.
    theta_s : float
        Excitation angle to the chain axis; pi/2 drives all sites in phase.
    detuning : Detuning
        Site-dependent detuning profile.
    """

    n_atoms: int
    xi: float
    directionality: float = 0.0
    rabi: float = 0.01
    theta_s: float = math.pi / 2
    detuning: Detuning = field(default_factory=Detuning)

    def __post_init__(self):
        if isinstance(self.n_atoms, bool) or int(self.n_atoms) != self.n_atoms:
            raise DomainError(f"n_atoms must be an integer, got {self.n_atoms!r}")
        object.__setattr__(self, "n_atoms", int(self.n_atoms))
        for name in ("xi", "directionality", "rabi", "theta_s"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.n_atoms < 1:
            raise DomainError(f"n_atoms must be >= 1, got {self.n_atoms}")
        if not 0.0 <= self.xi <= TWO_PI:
            raise DomainError(f"xi must lie in [0, 2pi], got {self.xi}")
        if not -1.0 <= self.directionality <= 1.0:
            raise DomainError(
                f"directionality must lie in [-1, 1], got {self.directionality}"
            )
        if not self.rabi >= 0.0:
            raise DomainError(f"rabi must be >= 0, got {self.rabi}")
        if not math.isfinite(self.theta_s):
            raise DomainError(f"theta_s must be finite, got {self.theta_s}")
        if not isinstance(self.detuning, Detuning):
            raise DomainError("detuning must be a Detuning instance")

    @property
    def gamma_left(self):
        return gamma_rates(self.directionality)[0]

    @property
    def gamma_right(self):
        return gamma_rates(self.directionality)[1]

    def detunings(self):
        return self.detuning.profile(self.n_atoms)

    def with_(self, **changes):
        """Copy with some fields replaced (validated again)."""
        return replace(self, **changes)

    def to_dict(self):
        data = asdict(self)
        data["detuning"] = self.detuning.to_dict()
        return data

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise DomainError("config: expected a JSON object")
        known = {"n_atoms", "xi", "directionality", "rabi", "theta_s", "detuning"}
        unknown = set(data) - known
        if unknown:
            raise DomainError(f"config: unknown key {sorted(unknown)[0]!r}")
        for key in ("n_atoms", "xi"):
            if key not in data:
                raise DomainError(f"config: missing key {key!r}")
        kwargs = {}
        for key in known - {"detuning"}:
            if key not in data:
                continue
            value = data[key]
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise DomainError(f"config.{key}: expected a number, got {value!r}")
            kwargs[key] = value
        if "detuning" in data:
            kwargs["detuning"] = Detuning.from_dict(data["detuning"])
        try:
            return cls(**kwargs)
        except DomainError as exc:
            raise DomainError(f"config: {exc}") from None

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DomainError(f"config: invalid JSON ({exc.msg})") from None
        return cls.from_dict(data)


def coupling_matrix(n, xi, directionality, detunings=None):
    """Non-Hermitian coupling matrix for explicit per-site detunings.

    ``M[mu, nu] = -gamma_L exp(i xi |mu - nu|)`` above the diagonal,
    ``-gamma_R exp(i xi |mu - nu|)`` below it and ``i delta_mu - 1/2`` on it.
    """
    gamma_l, gamma_r = gamma_rates(directionality)
    idx = np.arange(n)
    sep = np.abs(idx[:, None] - idx[None, :])
    phase = np.exp(1j * xi * sep)
    m = np.where(idx[:, None] < idx[None, :], -gamma_l * phase, -gamma_r * phase)
    delta = np.zeros(n) if detunings is None else np.asarray(detunings, dtype=float)
    if delta.shape != (n,):
        raise DomainError(f"expected {n} detunings, got shape {delta.shape}")
    m[idx, idx] = 1j * delta - 0.5 * (gamma_l + gamma_r)
    return m


def build_coupling_matrix(config):
    """Coupling matrix M of ``config`` as an (N, N) complex array."""
    return coupling_matrix(
        config.n_atoms, config.xi, config.directionality, config.detunings()
    )


def drive_vector(config):
    """Unit-modulus drive phases ``exp(i cos(theta_s) xi (mu - 1))``."""
    mu = np.arange(config.n_atoms)
    phase = math.cos(config.theta_s) * config.xi * mu
    # cos(pi/2) is 6e-17, not 0; keep the perpendicular drive exactly uniform
    if abs(math.cos(config.theta_s)) < 1e-15:
        phase = np.zeros(config.n_atoms)
    return np.exp(1j * phase)
