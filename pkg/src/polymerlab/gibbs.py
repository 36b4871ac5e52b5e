"""Quenched Gibbs functionals by self-normalized importance sampling.

For a fixed environment the polymer measure reweights the free path law
by exp(beta * H) with H the accumulated field along the path.  With the
free law as proposal, any path functional f is estimated by

    sum_m f_m exp(beta H_m) / sum_m exp(beta H_m),

computed in log space.  Standard errors use the normalized-weight delta
method; the effective sample size 1 / sum(normalized weights^2) is
reported and a degeneracy warning is emitted when it falls below 1% of
the ensemble size.  Environment averages of per-realization quantities
are plain replica means with a cross-replica standard error.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .environment import EnvironmentHandle
from .parallel import parallel_map
from .walk import PathEnsemble

ESS_WARN_FRACTION = 0.01


class WeightDegeneracyWarning(RuntimeWarning):
    """Importance weights have collapsed onto a few paths."""


class ReplicaError(RuntimeError):
    """An environment replica failed while averaging."""


@dataclass(frozen=True)
class GibbsParams:
    """Inverse temperature and ensemble sizes for one estimation cell."""

    beta: float
    n: int
    M: int
    R: int

    def __post_init__(self):
        if self.beta < 0 or not np.isfinite(self.beta):
            raise ValueError("beta must be a finite real >= 0")
        if self.n < 1 or self.M < 1 or self.R < 1:
            raise ValueError("n, M and R must all be >= 1")


@dataclass(frozen=True)
class GibbsEstimate:
    value: float
    stderr: float
    M: int
    ess: float

    def __post_init__(self):
        if self.stderr < 0:
            raise ValueError("stderr must be >= 0")
        if not (1.0 - 1e-9 <= self.ess <= self.M + 1e-9):
            raise ValueError(f"ess must lie in [1, M], got {self.ess}")


def hamiltonian(env: EnvironmentHandle, paths: PathEnsemble) -> np.ndarray:
    """H_m = sum_k g(k, S_k^m), querying the environment once per step."""
    out = np.zeros(paths.M)
    for k in range(1, paths.n + 1):
        out += env.sample_slice_at(k, paths.positions[:, k - 1, :])
    return out


def _normalized_log_weights(log_w: np.ndarray) -> tuple[np.ndarray, float]:
    log_total = logsumexp(log_w)
    if not np.isfinite(log_total):
        raise ValueError("all importance weights vanished")
    w_bar = np.exp(log_w - log_total)
    ess = 1.0 / float(w_bar @ w_bar)
    if ess < ESS_WARN_FRACTION * log_w.size:
        warnings.warn(
            f"effective sample size {ess:.1f} below {ESS_WARN_FRACTION:.0%} of M={log_w.size}",
            WeightDegeneracyWarning, stacklevel=3)
    return w_bar, ess


def log_partition(env: EnvironmentHandle, ensemble: PathEnsemble, beta: float,
                  hamiltonian_values: np.ndarray | None = None) -> GibbsEstimate:
    """Estimate of log Z_n = log E[exp(beta H)] over the path ensemble."""
    h = hamiltonian(env, ensemble) if hamiltonian_values is None else hamiltonian_values
    log_w = beta * h
    m = log_w.size
    w_bar, ess = _normalized_log_weights(log_w)
    value = float(logsumexp(log_w) - np.log(m))
    if m == 1:
        return GibbsEstimate(value=value, stderr=0.0, M=m, ess=ess)
    # delta method on u = w / max(w): Var(log mean w) ~ Var(u) / (M mean(u)^2)
    u = np.exp(log_w - log_w.max())
    stderr = float(np.sqrt(u.var(ddof=1) / m) / u.mean())
    return GibbsEstimate(value=value, stderr=stderr, M=m, ess=ess)


def gibbs_expect(env: EnvironmentHandle, ensemble: PathEnsemble, beta: float, f,
                 hamiltonian_values: np.ndarray | None = None) -> GibbsEstimate:
    """Self-normalized estimate of the Gibbs expectation of a path functional.

    ``f`` maps the (M, n, d) position array to an (M,) value array (or is
    already such an array).  Indicator-valued functionals are clipped to
    [0, 1] against floating-point drift.
    """
    h = hamiltonian(env, ensemble) if hamiltonian_values is None else hamiltonian_values
    f_vals = np.asarray(f(ensemble.positions) if callable(f) else f, dtype=float)
    if f_vals.shape != h.shape:
        raise ValueError(f"functional returned shape {f_vals.shape}, expected {h.shape}")
    w_bar, ess = _normalized_log_weights(beta * h)
    value = float(w_bar @ f_vals)
    resid = f_vals - value
    stderr = float(np.sqrt(np.sum((w_bar * resid) ** 2)))
    if np.all((f_vals == 0.0) | (f_vals == 1.0)):
        value = float(np.clip(value, 0.0, 1.0))
    return GibbsEstimate(value=value, stderr=stderr, M=f_vals.size, ess=ess)


@dataclass(frozen=True)
class QuenchedAverage:
    """Environment average of a per-realization quantity."""

    mean: float
    stderr: float
    values: np.ndarray          # one entry per environment replica

    @property
    def R(self) -> int:
        return self.values.size


def quenched_average(env_seeds, estimator, threads: int = 1) -> QuenchedAverage:
    """Average ``estimator(seed)`` over environment replicas.

    ``estimator`` maps an environment seed to a float (typically a
    quenched log-functional for the realization with that seed).
    Replicas may run on a thread pool; results reduce in replica order,
    and any replica failure aborts with the replica index attached.
    """
    seeds = list(env_seeds)
    if len(seeds) < 2:
        raise ValueError("need at least R=2 environment replicas")

    def guarded(item):
        r, seed = item
        try:
            return float(estimator(seed))
        except Exception as exc:
            raise ReplicaError(f"environment replica {r} (seed {seed}) failed: {exc}") from exc

    values = np.array(parallel_map(guarded, list(enumerate(seeds)), threads))
    return QuenchedAverage(mean=float(values.mean()),
                           stderr=float(values.std(ddof=1) / np.sqrt(len(seeds))),
                           values=values)


# -- CSV row format for estimates (consumed by the CLI and by analyses) --

ESTIMATE_CSV_HEADER = ("quantity", "n", "beta", "alpha_or_na", "value", "stderr", "ess", "M", "R", "seed")


def estimate_csv_row(quantity: str, n: int, beta: float, alpha, value: float,
                     stderr: float, ess: float, M: int, R: int, seed: int) -> tuple:
    """One row of the tabular estimate schema; alpha may be None for 'na'."""
    return (quantity, n, repr(float(beta)), "na" if alpha is None else repr(float(alpha)),
            repr(float(value)), repr(float(stderr)), repr(float(ess)), M, R, seed)
