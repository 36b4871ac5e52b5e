"""Transverse-spread diagnostics: ball partition, alpha scans, slope fit.

The finite-n surrogates for the volume exponent come in two forms and the
module deliberately blesses neither: an alpha scan of containment masses
<1_{|S_n| <= n^alpha}> / <1_{max_k |S_k| <= n^alpha}> straight off the
exponent's definition, and a log-log regression of the quenched median
running-max spread against n, whose slope is the reported estimate.  For
d=1 the fit is annotated with the proved asymptotic band [3/5, 3/4]; no
pass/fail is attached since the asymptotics are out of reach at desk
scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .environment import EnvironmentHandle
from .gibbs import GibbsParams, gibbs_expect, hamiltonian
from .kernels import KernelSpec, _as_points
from .parallel import parallel_map
from .verify import suggested_halfwidth
from .walk import running_max_norm, sample_paths


@dataclass(frozen=True)
class BallIndex:
    """Even-integer index j of the max-norm ball B(j n^alpha, n^alpha)."""

    j: tuple
    alpha: float
    n: int

    @property
    def radius(self) -> float:
        return float(self.n) ** self.alpha

    @property
    def center(self) -> np.ndarray:
        return np.asarray(self.j, dtype=float) * self.radius


def ball_indices(points, n: int, alpha: float) -> np.ndarray:
    """Vectorized ball indices, one row of even integers per point.

    Coordinate convention is half-open at the upper face:
    j_i = 2 * floor((x_i + n^alpha) / (2 n^alpha)), so j = 0 exactly on
    the central ball and shared boundaries go to the larger index.
    """
    radius = float(n) ** alpha
    if not radius > 0:
        raise ValueError("n^alpha must be positive")
    pts = _as_points(points)
    return 2 * np.floor((pts + radius) / (2.0 * radius)).astype(int)


def ball_index_of(x, n: int, alpha: float) -> BallIndex:
    """Index of the unique partition ball containing the point x."""
    j = ball_indices(np.atleast_2d(np.asarray(x, dtype=float)), n, alpha)[0]
    return BallIndex(j=tuple(int(v) for v in j), alpha=alpha, n=n)


@dataclass(frozen=True)
class ScanRow:
    n: int
    alpha: float
    event: str
    mass_mean: float
    mass_stderr: float
    R: int
    M: int


def _cell_masses(seed: int, n: int, alphas, params: GibbsParams, event: str,
                 kernel: KernelSpec, d: int, backend: str,
                 h: float | None, L: float | None) -> np.ndarray:
    paths = sample_paths(seed, params.M, n, d)
    if params.beta > 0:
        env = EnvironmentHandle(seed, kernel, d=d, backend=backend, h=h, L=L)
        hv = hamiltonian(env, paths)
    else:
        hv = np.zeros(params.M)
        env = None
    if event == "endpoint":
        extent = np.abs(paths.endpoints).max(axis=1)
    else:
        extent = running_max_norm(paths)
    out = np.empty(len(alphas))
    for a_idx, alpha in enumerate(alphas):
        est = gibbs_expect(env, paths, params.beta, (extent <= float(n) ** alpha).astype(float),
                           hamiltonian_values=hv)
        out[a_idx] = est.value
    return out


def xi_scan(alphas, n_grid, params: GibbsParams, env_seeds, event: str = "endpoint",
            kernel: KernelSpec = KernelSpec(), d: int = 1, backend: str = "grid",
            h: float | None = None, L: float | None = None,
            threads: int = 1) -> list[ScanRow]:
    """Quenched containment masses per (n, alpha) on paired ensembles.

    Within one (n, environment) cell every alpha reuses the same weights,
    so masses are nondecreasing in alpha by construction.
    """
    if event not in ("endpoint", "running_max"):
        raise ValueError(f"unknown event {event!r}")
    alphas = sorted(float(a) for a in alphas)
    if not alphas or not list(n_grid):
        raise ValueError("alphas and n_grid must be nonempty")
    if d > 1 and backend == "grid":
        raise ValueError("d > 1 requires the exact backend")
    seeds = list(env_seeds)
    rows = []
    for n in n_grid:
        L_eff = L if L is not None else suggested_halfwidth(n)
        masses = np.array(parallel_map(
            lambda s: _cell_masses(s, n, alphas, params, event, kernel, d, backend, h, L_eff),
            seeds, threads))            # (R, n_alphas)
        for a_idx, alpha in enumerate(alphas):
            col = masses[:, a_idx]
            rows.append(ScanRow(n=int(n), alpha=alpha, event=event,
                                mass_mean=float(col.mean()),
                                mass_stderr=float(col.std(ddof=1) / math.sqrt(len(seeds))),
                                R=len(seeds), M=params.M))
    return rows


@dataclass(frozen=True)
class FluctuationFit:
    xi_hat: float
    ci_low: float
    ci_high: float
    n_grid: tuple
    beta: float
    lam: float
    d: int
    spreads_median: tuple
    spreads_mean: tuple
    reference_band: tuple | None    # proved asymptotic band for d=1, informational


def fluctuation_fit(n_grid, params: GibbsParams, env_seeds,
                    kernel: KernelSpec = KernelSpec(), backend: str = "grid",
                    h: float | None = None, L: float | None = None,
                    n_boot: int = 500, boot_seed: int = 0,
                    threads: int = 1) -> FluctuationFit:
    """Slope of log(quenched median spread) against log n, with bootstrap CI.

    The spread per (environment, n) is the Gibbs expectation of the
    running max-norm; medians across environments resist weight-degenerate
    replicas.  The bootstrap resamples environments (replicas are paired
    across n) and reports a percentile interval on the slope.
    """
    n_values = sorted(int(n) for n in n_grid)
    if len(set(n_values)) < 4:
        raise ValueError("fluctuation fit needs at least 4 distinct n values")
    seeds = list(env_seeds)
    d = 1

    def one(seed: int) -> np.ndarray:
        out = np.empty(len(n_values))
        for n_idx, n in enumerate(n_values):
            L_eff = L if L is not None else suggested_halfwidth(n)
            paths = sample_paths(seed, params.M, n, d)
            if params.beta > 0:
                env = EnvironmentHandle(seed, kernel, d=d, backend=backend, h=h, L=L_eff)
                hv = hamiltonian(env, paths)
            else:
                hv = np.zeros(params.M)
                env = None
            out[n_idx] = gibbs_expect(env, paths, params.beta, running_max_norm(paths),
                                      hamiltonian_values=hv).value
        return out

    values = np.array(parallel_map(one, seeds, threads))        # (R, len(n))
    medians = np.median(values, axis=0)
    means = values.mean(axis=0)

    def slope_of(spreads: np.ndarray) -> float:
        keep = spreads > 0
        if keep.sum() < 2:
            raise ValueError("fewer than 2 positive spreads; fit is degenerate")
        return float(np.polyfit(np.log(np.asarray(n_values, dtype=float)[keep]),
                                np.log(spreads[keep]), 1)[0])

    xi_hat = slope_of(medians)
    rng = np.random.default_rng(boot_seed)
    boot = np.empty(n_boot)
    for b in range(n_boot):
        take = rng.integers(0, len(seeds), len(seeds))
        boot[b] = slope_of(np.median(values[take], axis=0))
    ci_low, ci_high = np.percentile(boot, [2.5, 97.5])
    return FluctuationFit(
        xi_hat=xi_hat, ci_low=float(ci_low), ci_high=float(ci_high),
        n_grid=tuple(n_values), beta=params.beta, lam=kernel.lam, d=d,
        spreads_median=tuple(float(v) for v in medians),
        spreads_mean=tuple(float(v) for v in means),
        reference_band=(0.6, 0.75) if d == 1 else None)
