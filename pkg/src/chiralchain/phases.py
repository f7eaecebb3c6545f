"""Phase classification and finite-size scaling fits."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar

from chiralchain.errors import CriticalPointError, DomainError
from chiralchain.model import ChainConfig, build_coupling_matrix, drive_vector
from chiralchain.observables import (
    max_structure_factor,
    participation_ratio,
    transport_imbalance,
)
from chiralchain.steady_state import CONDITION_THRESHOLD, condition_check, solve_steady

#: relative band around 1/N inside which an edge counts as neither above nor below
EDGE_BAND = 1e-6
#: thermodynamic S(k) intercept above which a point is crystalline
B_MIN = 1e-5
#: alpha cuts for the strong / moderate / weak bi-hole regimes
ALPHA_STRONG = 0.5
ALPHA_WEAK = 0.1
#: even/odd PR contrast that marks the chiral-flow dichotomy
CFD_THRESHOLD = 0.15
#: half-width (in units of pi) of the xi window around pi searched for CFD
CFD_WINDOW = 0.05
DEFAULT_SIZES = (50, 100, 150)


class PhaseLabel(enum.Enum):
    ETD = "ETD"
    CO = "CO"
    BEE = "BEE"
    BHE_S = "BHE_S"
    BHE_M = "BHE_M"
    BHE_W = "BHE_W"
    CFD = "CFD"
    CRIT = "CRIT"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares fit result.

    ``kind`` is ``"power"`` (``PR = beta * N**alpha``, fitted in log-log) or
    ``"thermo"`` (``S = a / N + b``).  ``residual`` is the 2-norm of the
    fit residual in the space where the fit was done.
    """

    kind: str
    params: dict = field(default_factory=dict)
    residual: float = 0.0

    def __getattr__(self, name):
        params = self.__dict__.get("params", {})
        if name in params:
            return params[name]
        raise AttributeError(name)


def fit_pr_scaling(sizes, pr_values):
    """Fit ``ln PR = ln beta + alpha ln N``."""
    n = np.asarray(sizes, dtype=float)
    pr = np.asarray(pr_values, dtype=float)
    if n.size != pr.size:
        raise DomainError("sizes and pr_values differ in length")
    if n.size < 3:
        raise DomainError(f"need at least 3 points, got {n.size}")
    if np.any(pr <= 0) or np.any(n <= 0):
        raise DomainError("sizes and PR values must be positive")
    a = np.column_stack([np.ones_like(n), np.log(n)])
    coef, _, rank, _ = np.linalg.lstsq(a, np.log(pr), rcond=None)
    if rank < 2:
        raise DomainError("sizes must not all be equal")
    res = float(np.linalg.norm(a @ coef - np.log(pr)))
    return ScalingFit("power", {"alpha": float(coef[1]), "beta": float(math.exp(coef[0]))}, res)


def fit_structure_thermo(sizes, s_max):
    """Fit ``S_max = a / N + b``; ``b > 0`` means order survives at large N."""
    n = np.asarray(sizes, dtype=float)
    s = np.asarray(s_max, dtype=float)
    if n.size != s.size:
        raise DomainError("sizes and s_max differ in length")
    if n.size < 2:
        raise DomainError(f"need at least 2 points, got {n.size}")
    if np.unique(n).size < 2:
        raise DomainError("sizes must not all be equal")
    a = np.column_stack([1.0 / n, np.ones_like(n)])
    coef, *_ = np.linalg.lstsq(a, s, rcond=None)
    res = float(np.linalg.norm(a @ coef - s))
    return ScalingFit("thermo", {"a": float(coef[0]), "b": float(coef[1])}, res)


def bee_bhe_boundary_analytic():
    """Edge/hole boundary at D = 0: ``A = |1 - exp(i xi)|**2 = 1``, so xi = pi/3."""
    return math.pi / 3


# --- steady-state profiles on the symmetric-edge branch ----------------------


def _profile(n, xi, d):
    cfg = ChainConfig(n, xi, d, rabi=1.0)
    return solve_steady(build_coupling_matrix(cfg), drive_vector(cfg), 1.0).normalized


def _edge_state(p_first, p_last, n):
    """+1 if both edges lie above 1/N, -1 if both lie below, else 0."""
    hi = (1 + EDGE_BAND) / n
    lo = (1 - EDGE_BAND) / n
    if p_first > hi and p_last > hi:
        return 1
    if p_first < lo and p_last < lo:
        return -1
    return 0


def _symmetric_edges(p, rtol=1e-6):
    return abs(p[0] - p[-1]) <= rtol * max(p[0], p[-1])


def bee_bhe_boundary(directionality, n, step=0.01, xtol=1e-12):
    """Locate the edge/hole boundary in xi (radians) for one chain length.

    Scans xi in units of ``step * pi`` for the first pair of neighbouring
    points that both have mirror-symmetric edges, the first above 1/N and
    the second below, then bisects ``P1 - 1/N`` between them.

    Raises
    ------
    DomainError
        No such crossing exists in (0, pi).
    """
    grid = np.arange(step, 1.0, step) * math.pi
    prev = None
    for xi in grid:
        try:
            p = _profile(n, xi, directionality)
        except CriticalPointError:
            prev = None
            continue
        cur = (xi, p) if _symmetric_edges(p) else None
        if prev is not None and cur is not None:
            if _edge_state(prev[1][0], prev[1][-1], n) == 1 and p[0] < 1.0 / n:
                return _bisect_edge(n, directionality, prev[0], xi, xtol)
        prev = cur
    raise DomainError(f"no edge/hole crossing found at D={directionality}, N={n}")


def _bisect_edge(n, d, lo, hi, xtol):
    f = lambda x: _profile(n, x, d)[0] - 1.0 / n
    for _ in range(200):
        if hi - lo <= xtol:
            break
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@lru_cache(maxsize=512)
def bhe_peak_pr(directionality, n, step=0.01):
    """Peak PR of the bi-hole branch for one D and N.

    Walks up in xi from the edge/hole boundary along the branch with
    mirror-symmetric edges below 1/N and returns ``(xi_peak, PR_peak)`` at
    the first interior local maximum of PR, refined by a bounded scalar
    search.  If PR has no interior maximum before the branch ends, the
    largest PR on the branch is returned.
    """
    d = abs(directionality)
    start = bee_bhe_boundary(d, n, step=step)
    xs, prs = [], []
    xi = start + step * math.pi
    while xi < math.pi:
        p = _profile(n, xi, d)
        if not (_symmetric_edges(p) and _edge_state(p[0], p[-1], n) == -1):
            break
        xs.append(xi)
        prs.append(participation_ratio(p))
        if len(prs) >= 3 and prs[-3] < prs[-2] > prs[-1]:
            lo, hi = xs[-3], xs[-1]
            res = minimize_scalar(
                lambda x: -participation_ratio(_profile(n, x, d)),
                bounds=(lo, hi),
                method="bounded",
                options={"xatol": 1e-7},
            )
            if -res.fun >= prs[-2]:
                return float(res.x), float(-res.fun)
            return xs[-2], prs[-2]
        xi = start + (len(xs) + 1) * step * math.pi
    if not prs:
        raise DomainError(f"empty bi-hole branch at D={directionality}, N={n}")
    i = int(np.argmax(prs))
    return xs[i], prs[i]


# --- classification ---------------------------------------------------------


def cfd_dichotomy(config, n_even, n_odd):
    """``|PR_even - PR_odd| / max(PR_even, PR_odd)`` for two chain lengths."""
    if n_even % 2 or not n_odd % 2 or abs(n_even - n_odd) != 1:
        raise DomainError(f"need an even and an adjacent odd size, got {n_even}, {n_odd}")
    pr = []
    for n in (n_even, n_odd):
        cfg = config.with_(n_atoms=n)
        st = solve_steady(build_coupling_matrix(cfg), drive_vector(cfg), cfg.rabi or 1.0)
        pr.append(participation_ratio(st.normalized))
    return dichotomy_metric(*pr)


def dichotomy_metric(pr_even, pr_odd):
    top = max(pr_even, pr_odd)
    return 0.0 if top == 0 else abs(pr_even - pr_odd) / top


@dataclass(frozen=True)
class SizeRecord:
    """Observables of one chain length at a fixed (D, xi)."""

    n_atoms: int
    pr: float
    s_max: float
    p_first: float
    p_last: float
    t_p: float
    condition_estimate: float


@dataclass(frozen=True)
class PointAnalysis:
    label: PhaseLabel
    records: tuple
    condition_estimate: float
    alpha: float = math.nan
    b: float = math.nan
    dichotomy: float = math.nan


def measure(config):
    """Steady-state observables of ``config`` as a :class:`SizeRecord`."""
    m = build_coupling_matrix(config)
    st = solve_steady(m, drive_vector(config), config.rabi or 1.0)
    p = st.normalized
    return SizeRecord(
        config.n_atoms,
        participation_ratio(p),
        max_structure_factor(p),
        float(p[0]),
        float(p[-1]),
        transport_imbalance(p) if p.size > 1 else 0.0,
        st.condition_estimate,
    )


def _bhe_strength(alpha):
    if alpha > ALPHA_STRONG:
        return PhaseLabel.BHE_S
    if alpha > ALPHA_WEAK:
        return PhaseLabel.BHE_M
    return PhaseLabel.BHE_W


def analyze_point(config, sizes=DEFAULT_SIZES):
    """Classify ``config`` across chain lengths and keep the evidence.

    Rules, first match wins:

    1. CRIT if M is singular at the largest size.
    2. BEE if both edges exceed 1/N at the largest size.
    3. CO if the S(k) intercept ``b`` of ``a/N + b`` exceeds ``B_MIN``.
    4. BHE if both edges lie below 1/N, sub-typed by the exponent of the
       bi-hole peak PR versus N.
    5. CFD if xi is near pi and the even/odd PR contrast exceeds
       ``CFD_THRESHOLD``.
    6. ETD otherwise.

    Edges within ``EDGE_BAND`` of 1/N count as neither; at D = 0 such points
    are assigned from the analytic boundary.
    """
    sizes = sorted(int(n) for n in sizes)
    if len(sizes) < 3:
        raise DomainError(f"need at least 3 sizes, got {len(sizes)}")
    n_max = sizes[-1]
    big = config.with_(n_atoms=n_max)
    cond = condition_check(build_coupling_matrix(big))
    if cond > CONDITION_THRESHOLD:
        return PointAnalysis(PhaseLabel.CRIT, (), cond)

    records = tuple(measure(config.with_(n_atoms=n)) for n in sizes)
    last = records[-1]
    edge = _edge_state(last.p_first, last.p_last, n_max)
    in_band = max(abs(last.p_first * n_max - 1), abs(last.p_last * n_max - 1)) <= EDGE_BAND
    if in_band and config.directionality == 0:
        xi = min(config.xi, 2 * math.pi - config.xi)
        edge = 1 if xi < bee_bhe_boundary_analytic() else -1

    if edge == 1:
        return PointAnalysis(PhaseLabel.BEE, records, cond)

    b = fit_structure_thermo(sizes, [r.s_max for r in records]).b
    if b > B_MIN:
        return PointAnalysis(PhaseLabel.CO, records, cond, b=b)

    if edge == -1:
        try:
            peaks = [bhe_peak_pr(abs(config.directionality), n)[1] for n in sizes]
        except DomainError:
            peaks = [r.pr for r in records]
        alpha = fit_pr_scaling(sizes, peaks).alpha
        return PointAnalysis(_bhe_strength(alpha), records, cond, alpha=alpha, b=b)

    metric = math.nan
    if abs(min(config.xi, 2 * math.pi - config.xi) - math.pi) <= CFD_WINDOW * math.pi:
        partner = n_max + 1 if n_max % 2 == 0 else n_max - 1
        even, odd = (n_max, partner) if n_max % 2 == 0 else (partner, n_max)
        metric = cfd_dichotomy(config, even, odd)
        if metric > CFD_THRESHOLD:
            return PointAnalysis(PhaseLabel.CFD, records, cond, b=b, dichotomy=metric)
    return PointAnalysis(PhaseLabel.ETD, records, cond, b=b, dichotomy=metric)


def classify_point(config, sizes=DEFAULT_SIZES):
    """Phase label of ``config`` (see :func:`analyze_point` for the rules)."""
    return analyze_point(config, sizes).label
