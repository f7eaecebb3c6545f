"""Parameter sweeps over (D, xi) and bundled figure-data recipes.

Cells are evaluated in a process pool and gathered in grid order, so the
output does not depend on the worker count or on completion order.  BLAS is
pinned to one thread inside each worker for the same reason.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from chiralchain import io as cio
from chiralchain.dynamics import propagate, traversal_time
from chiralchain.errors import CriticalPointError, DomainError
from chiralchain.model import ChainConfig, Detuning, build_coupling_matrix
from chiralchain.observables import (
    participation_ratio,
    structure_spectrum,
    transport_imbalance,
)
from chiralchain.phases import DEFAULT_SIZES, PhaseLabel, analyze_point
from chiralchain.spectrum import eigen_spectrum
from chiralchain.steady_state import steady_state

WORKERS_ENV = "CHIRAL_CHAIN_WORKERS"


def resolve_workers(workers=None):
    """Explicit value, else ``$CHIRAL_CHAIN_WORKERS``, else 1."""
    if workers is None:
        env = os.environ.get(WORKERS_ENV, "").strip()
        if env:
            try:
                workers = int(env)
            except ValueError:
                raise DomainError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
        else:
            workers = 1
    if workers < 1:
        raise DomainError(f"workers must be >= 1, got {workers}")
    return workers


def _init_worker():
    threadpool_limits(1)


def parallel_map(fn, items, workers=None):
    """``[fn(x) for x in items]`` evaluated in a process pool, in input order."""
    items = list(items)
    if not items:
        return []
    workers = min(resolve_workers(workers), len(items))
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker) as pool:
        return list(pool.map(fn, items, chunksize=chunk))


# --- phase diagram ----------------------------------------------------------


@dataclass(frozen=True)
class SweepSpec:
    """A rectangular (D, xi) grid evaluated at several chain lengths.

    ``base_config`` supplies rabi, theta_s and detuning; its n_atoms, xi and
    directionality are replaced per cell.
    """

    d_grid: tuple
    xi_grid: tuple
    sizes: tuple = DEFAULT_SIZES
    base_config: ChainConfig = field(default_factory=lambda: ChainConfig(DEFAULT_SIZES[-1], 0.0))
    out_dir: str | None = None
    fmt: str = "csv"

    def __post_init__(self):
        d = tuple(float(x) for x in np.atleast_1d(self.d_grid))
        xi = tuple(float(x) for x in np.atleast_1d(self.xi_grid))
        sizes = tuple(int(n) for n in self.sizes)
        object.__setattr__(self, "d_grid", d)
        object.__setattr__(self, "xi_grid", xi)
        object.__setattr__(self, "sizes", sizes)
        if not d:
            raise DomainError("d_grid is empty")
        if not xi:
            raise DomainError("xi_grid is empty")
        if len(sizes) < 3:
            raise DomainError(f"sizes needs at least 3 entries, got {len(sizes)}")
        if any(not -1 <= x <= 1 for x in d):
            raise DomainError("d_grid values must lie in [-1, 1]")
        if any(not 0 <= x <= 2 * math.pi for x in xi):
            raise DomainError("xi_grid values must lie in [0, 2pi]")
        if any(n < 2 for n in sizes):
            raise DomainError("sizes must be >= 2")
        if self.fmt not in cio.FORMATS:
            raise DomainError(f"format must be one of {cio.FORMATS}, got {self.fmt!r}")

    def cells(self):
        """Grid cells in row-major order (D outer, xi inner)."""
        return [(d, xi) for d in self.d_grid for xi in self.xi_grid]

    def to_dict(self):
        return {
            "d_grid": list(self.d_grid),
            "xi_grid": list(self.xi_grid),
            "sizes": list(self.sizes),
            "base_config": self.base_config.to_dict(),
        }


@dataclass(frozen=True)
class PhasePoint:
    """Everything recorded for one (D, xi) cell."""

    index: int
    d: float
    xi: float
    label: PhaseLabel
    condition_estimate: float
    records: tuple = ()
    alpha: float = math.nan
    b: float = math.nan
    dichotomy: float = math.nan


PHASE_COLUMNS = (
    "index", "d", "xi", "label", "condition_estimate", "alpha", "b", "dichotomy",
    "n", "pr", "s_max", "p_first", "p_last", "t_p",
)


def phase_rows(points):
    """One row per (cell, size); critical cells get a single row with n empty."""
    for pt in points:
        head = (pt.index, pt.d, pt.xi, pt.label.value, pt.condition_estimate,
                pt.alpha, pt.b, pt.dichotomy)
        if not pt.records:
            yield head + ("", "", "", "", "", "")
        for r in pt.records:
            yield head + (r.n_atoms, r.pr, r.s_max, r.p_first, r.p_last, r.t_p)


def evaluate_cell(args):
    """Classify one cell; singular points come back as CRIT."""
    index, d, xi, sizes, base = args
    config = ChainConfig.from_dict(base).with_(directionality=d, xi=xi)
    try:
        res = analyze_point(config, sizes)
    except CriticalPointError as exc:
        return PhasePoint(index, d, xi, PhaseLabel.CRIT, exc.condition)
    return PhasePoint(index, d, xi, res.label, res.condition_estimate, res.records,
                      res.alpha, res.b, res.dichotomy)


def run_phase_diagram(spec, workers=None):
    """Evaluate every cell of ``spec``; write ``phase_diagram.*`` if ``out_dir`` is set."""
    if spec.out_dir is not None:
        cio.ensure_writable_dir(spec.out_dir)
    base = spec.base_config.to_dict()
    jobs = [(i, d, xi, spec.sizes, base) for i, (d, xi) in enumerate(spec.cells())]
    points = parallel_map(evaluate_cell, jobs, workers)
    if spec.out_dir is not None:
        cio.write_table(
            os.path.join(spec.out_dir, "phase_diagram"),
            PHASE_COLUMNS,
            phase_rows(points),
            cio.metadata(sweep=spec.to_dict()),
            spec.fmt,
        )
    return points


def default_spec(resolution=41, **kwargs):
    """``resolution`` x ``resolution`` grid over D in [0, 1], xi in (0, pi]."""
    d = np.linspace(0.0, 1.0, resolution)
    xi = math.pi * np.arange(1, resolution + 1) / resolution
    return SweepSpec(tuple(d), tuple(xi), **kwargs)


# --- figure recipes ---------------------------------------------------------

PI = math.pi


def _profile_rows(p):
    return [(j + 1, float(x)) for j, x in enumerate(p)]


def _pr_cut(args):
    d, xi, n = args
    try:
        return participation_ratio(steady_state(ChainConfig(n, xi, d)).normalized)
    except CriticalPointError:
        return math.nan


def _tc_job(args):
    d, n = args
    return traversal_time(ChainConfig(n, 0.0, d))


def _tp_job(args):
    n, d, xi, slope = args
    cfg = ChainConfig(n, xi, d, detuning=Detuning.linear(slope))
    return transport_imbalance(steady_state(cfg).normalized)


def _table(name, columns, rows, meta):
    return name, columns, list(rows), cio.metadata(recipe=meta)


def _fig1b(workers):
    cuts = (0.1, 0.3, 0.5, 0.7, 0.9)
    xis = tuple(PI * np.arange(1, 101) / 100)
    sizes = (50, 100, 150)
    jobs = [(d, xi, n) for d in cuts for xi in xis for n in sizes]
    prs = parallel_map(_pr_cut, jobs, workers)
    rows = [(d, xi, n, pr) for (d, xi, n), pr in zip(jobs, prs)]
    return [_table("fig1b", ("d", "xi", "n", "pr"), rows,
                   {"name": "fig1b", "d_cuts": list(cuts), "xi": "pi*m/100, m=1..100", "sizes": list(sizes)})]


def _fig2a(workers):
    ds = tuple(np.linspace(0.1, 1.0, 10))
    sizes = (50, 100, 150)
    jobs = [(d, n) for n in sizes for d in ds]
    tcs = parallel_map(_tc_job, jobs, workers)
    rows = [(n, d, tc) for (d, n), tc in zip(jobs, tcs)]
    return [_table("fig2a", ("n", "d", "t_c"), rows,
                   {"name": "fig2a", "xi": 0.0, "threshold_fraction": 0.5, "d": list(ds), "sizes": list(sizes)})]


def _fig2b(workers):
    out = []
    for tag, cfg in (("co", ChainConfig(50, PI / 4, 1.0)), ("bee", ChainConfig(50, PI / 8, 0.0))):
        p = steady_state(cfg).normalized
        out.append(_table(f"fig2b_{tag}", ("site", "normalized"), _profile_rows(p),
                          {"name": "fig2b", "config": cfg.to_dict()}))
    return out


def _fig2c(workers):
    ds = tuple(np.round(np.linspace(0.01, 1.0, 100), 12))
    jobs = [(d, PI, n) for n in (50, 51) for d in ds]
    prs = parallel_map(_pr_cut, jobs, workers)
    rows = [(n, d, pr) for (d, _, n), pr in zip(jobs, prs)]
    out = [_table("fig2c_pr", ("n", "d", "pr"), rows, {"name": "fig2c", "xi": PI, "d": list(ds)})]
    for d, n in ((1.0, 50), (0.02, 50), (0.02, 51)):
        cfg = ChainConfig(n, PI, d)
        out.append(_table(f"fig2c_profile_d{d:g}_n{n}", ("site", "normalized"),
                          _profile_rows(steady_state(cfg).normalized),
                          {"name": "fig2c", "config": cfg.to_dict()}))
    return out


FIG3A_XI = (PI / 32, PI / 16, PI / 8, PI / 4, PI / 2, 3 * PI / 4, 7 * PI / 8)


def _fig3a(workers):
    slopes = tuple(np.linspace(0.0, 50.0, 101))
    jobs = [(51, 0.0, xi, s) for xi in FIG3A_XI for s in slopes]
    tps = parallel_map(_tp_job, jobs, workers)
    rows = [(xi, s, tp) for (_, _, xi, s), tp in zip(jobs, tps)]
    return [_table("fig3a", ("xi", "slope", "t_p"), rows,
                   {"name": "fig3a", "n_atoms": 51, "directionality": 0.0,
                    "xi": list(FIG3A_XI), "slopes": list(slopes)})]


def _correlation_table(name, cfg):
    p = steady_state(cfg).normalized
    corr = np.outer(p, p)
    rows = [(i + 1, j + 1, corr[i, j]) for i in range(p.size) for j in range(p.size)]
    return _table(name, ("i", "j", "p_i_p_j"), rows, {"name": name.split("_")[0], "config": cfg.to_dict()})


def _fig3b(workers):
    n = 51
    out = []
    for tag, xi in (("pi_4", PI / 4), ("pi_2", PI / 2), ("3.9pi_4", 3.9 * PI / 4)):
        cfg = ChainConfig(n, xi, 0.0, detuning=Detuning.harmonic(1.0 / n))
        out.append(_correlation_table(f"fig3b_{tag}", cfg))
    return out


def _fig3c(workers):
    n = 51
    h = Detuning.harmonic(0.01 / n)
    return [
        _correlation_table("fig3c_edge", ChainConfig(n, 3 * PI / 4, 1.0, detuning=h)),
        _correlation_table("fig3c_co", ChainConfig(n, PI, 0.01, detuning=h)),
    ]


def _fig3d(workers):
    rows = []
    thetas = tuple(PI * m / 8 for m in range(7, 1, -1))
    for theta in thetas:
        cfg = ChainConfig(101, PI / 4, 1.0, theta_s=theta)
        spec = structure_spectrum(steady_state(cfg).normalized)
        rows.extend((theta, k, s) for k, s in zip(spec.k_values, spec.s_values))
    out = [_table("fig3d_sk", ("theta_s", "k", "s"), rows,
                  {"name": "fig3d", "n_atoms": 101, "xi": PI / 4, "directionality": 1.0,
                   "theta_s": list(thetas)})]
    prof = []
    for theta in (7 * PI / 8, PI / 2, PI / 8):
        p = steady_state(ChainConfig(51, PI / 4, 0.3, theta_s=theta)).normalized
        prof.extend((theta, j, x) for j, x in _profile_rows(p))
    out.append(_table("fig3d_profiles", ("theta_s", "site", "normalized"), prof,
                      {"name": "fig3d", "n_atoms": 51, "xi": PI / 4, "directionality": 0.3}))
    return out


def trajectory_columns(n, rescale=False):
    cols = ["t", "P_t"] + [f"p{j}" for j in range(1, n + 1)]
    if rescale:
        cols.append("t_rescaled")
    return tuple(cols)


def _trajectory_table(name, cfg, t_end, dt, rescale):
    grid = np.linspace(0.0, t_end, int(round(t_end / dt)) + 1)
    traj = propagate(cfg, t_grid=grid)
    meta = {"name": name, "config": cfg.to_dict(), "t_end": t_end, "dt": dt,
            "sigma0": "ground", "rescale": "t/1000" if rescale else None}
    return _table(name, trajectory_columns(cfg.n_atoms, rescale), traj.rows(rescale), meta)


def _fig4a(workers):
    return [_trajectory_table("fig4a", ChainConfig(50, 0.8 * PI, 0.2), 2000.0, 1.0, False)]


def _fig4b(workers):
    return [_trajectory_table("fig4b", ChainConfig(50, 0.8 * PI, 0.0), 1000.0, 0.5, True)]


FIGS_XI = (0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5)


def _figS1(workers):
    rows = []
    for x in FIGS_XI:
        spec = eigen_spectrum(build_coupling_matrix(ChainConfig(100, x * PI, 0.0)))
        rows.extend((x * PI, n, g, s) for n, g, s in spec.rows())
    return [_table("figS1", ("xi", "n", "decay_rate", "shift"), rows,
                   {"name": "figS1", "n_atoms": 100, "directionality": 0.0,
                    "xi_over_pi": list(FIGS_XI)})]


def _figS2(workers):
    rows = []
    for x in FIGS_XI:
        spec = eigen_spectrum(build_coupling_matrix(ChainConfig(100, x * PI, 0.0)))
        rows.extend((x * PI, n, s) for n, s in enumerate(np.sort(spec.shifts)))
    return [_table("figS2", ("xi", "n", "shift"), rows,
                   {"name": "figS2", "n_atoms": 100, "directionality": 0.0,
                    "xi_over_pi": list(FIGS_XI)})]


RECIPES = {
    "fig1b": (_fig1b, "PR versus xi at D = 0.1 .. 0.9 for N = 50, 100, 150"),
    "fig2a": (_fig2a, "traversal time versus D at xi = 0 for N = 50, 100, 150"),
    "fig2b": (_fig2b, "N = 50 profiles: CO (D=1, xi=pi/4) and BEE (D=0, xi=pi/8)"),
    "fig2c": (_fig2c, "PR versus D at xi = pi for N = 50, 51, plus three profiles"),
    "fig3a": (_fig3a, "T_p versus linear-detuning slope for seven xi, D = 0, N = 51"),
    "fig3b": (_fig3b, "P_i P_j under harmonic detuning h = 1/N, D = 0, N = 51"),
    "fig3c": (_fig3c, "P_i P_j under harmonic detuning h = 0.01/N at (1, 3pi/4) and (0.01, pi)"),
    "fig3d": (_fig3d, "S(k) versus theta_s at D=1, xi=pi/4, N=101; edge profiles at D=0.3"),
    "fig4a": (_fig4a, "trajectory at D = 0.2, xi = 0.8 pi, N = 50"),
    "fig4b": (_fig4b, "trajectory at D = 0, xi = 0.8 pi, N = 50 with t/1000 column"),
    "figS1": (_figS1, "decay-sorted spectra at D = 0, N = 100"),
    "figS2": (_figS2, "ascending frequency shifts at D = 0, N = 100"),
}


def run_figure_recipe(name, out_dir, fmt="csv", workers=None):
    """Compute the data behind ``name`` and write it under ``out_dir``.

    Returns the list of written paths.
    """
    if name not in RECIPES:
        raise DomainError(f"unknown recipe {name!r}; valid: {', '.join(RECIPES)}")
    if fmt not in cio.FORMATS:
        raise DomainError(f"format must be one of {cio.FORMATS}, got {fmt!r}")
    cio.ensure_writable_dir(out_dir)
    paths = []
    for stem, columns, rows, meta in RECIPES[name][0](workers):
        paths.extend(cio.write_table(os.path.join(out_dir, stem), columns, rows, meta, fmt))
    return paths
