"""Gaussian-increment path ensembles and the drift tilts used on them.

Paths live in R^d, start at the origin (S_0 = 0, not stored) and take
i.i.d. standard Gaussian increments per coordinate.  Tilting adds the
deterministic ramp drift ``lambda_tilde * min(p/k, 1)``; the matching
log density ratio against the base path law is available for exact
reweighting, which is how rare-event functionals are estimated.

Reproducibility: replicas are grouped in fixed blocks of
``REPLICA_BLOCK`` = 256; block b draws from the Philox stream keyed by
(seed, walk-domain, b) and fills its paths in replica-major order with
numpy's ziggurat normals.  Path m is therefore a pure function of
(seed, n, d, m) -- independent of the total ensemble size and of how
blocks are scheduled across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .environment import _DOMAIN_WALK, tagged_stream

REPLICA_BLOCK = 256


@dataclass(frozen=True)
class PathEnsemble:
    """M independent walks of length n in dimension d; positions S_1..S_n."""

    positions: np.ndarray       # (M, n, d)
    seed: int | None = None

    def __post_init__(self):
        if self.positions.ndim != 3:
            raise ValueError("positions must have shape (M, n, d)")
        if not np.all(np.isfinite(self.positions)):
            raise ValueError("positions must be finite")

    @property
    def M(self) -> int:
        return self.positions.shape[0]

    @property
    def n(self) -> int:
        return self.positions.shape[1]

    @property
    def d(self) -> int:
        return self.positions.shape[2]

    @property
    def endpoints(self) -> np.ndarray:
        return self.positions[:, -1, :]


def sample_paths(seed: int, M: int, n: int, d: int = 1) -> PathEnsemble:
    """Sample M walks of length n; deterministic in (seed, replica index)."""
    if M < 1 or n < 1 or d < 1:
        raise ValueError("M, n and d must all be >= 1")
    increments = np.empty((M, n, d))
    for start in range(0, M, REPLICA_BLOCK):
        stop = min(start + REPLICA_BLOCK, M)
        rng = tagged_stream(seed, _DOMAIN_WALK, start // REPLICA_BLOCK)
        increments[start:stop] = rng.standard_normal((stop - start, n, d))
    return PathEnsemble(positions=increments.cumsum(axis=1), seed=int(seed))


@dataclass(frozen=True)
class TiltSpec:
    """Ramp drift: total displacement lambda_tilde reached linearly by step k."""

    lambda_tilde: np.ndarray    # (d,) total drift
    k: int                      # pivot step

    def __post_init__(self):
        object.__setattr__(self, "lambda_tilde", np.atleast_1d(np.asarray(self.lambda_tilde, dtype=float)))
        if not np.all(np.isfinite(self.lambda_tilde)):
            raise ValueError("lambda_tilde must be finite")
        if self.k < 1:
            raise ValueError("pivot k must be >= 1")

    def ramp(self, n: int) -> np.ndarray:
        """min(p/k, 1) for p = 1..n."""
        return np.minimum(np.arange(1, n + 1) / self.k, 1.0)


def tilt_path(ensemble: PathEnsemble, tilt: TiltSpec) -> PathEnsemble:
    """Shifted ensemble S_p + lambda_tilde * min(p/k, 1); input unchanged."""
    if tilt.k > ensemble.n:
        raise ValueError(f"tilt pivot k={tilt.k} exceeds path length n={ensemble.n}")
    shift = tilt.ramp(ensemble.n)[None, :, None] * tilt.lambda_tilde[None, None, :]
    return replace(ensemble, positions=ensemble.positions + shift)


def tilt_log_weight(tilted: PathEnsemble, tilt: TiltSpec) -> np.ndarray:
    """log dP/dQ at tilted paths: -lam . S_k + k |lam|^2 / 2, lam = lambda_tilde / k.

    Multiplying a functional of the tilted paths by exp(this) recovers an
    unbiased estimate of its expectation under the base path law.
    """
    lam = tilt.lambda_tilde / tilt.k
    s_k = tilted.positions[:, tilt.k - 1, :]
    return -s_k @ lam + 0.5 * tilt.k * float(lam @ lam)


def running_max_norm(paths) -> np.ndarray | float:
    """max over steps of the coordinate max-norm |S_k|, per path."""
    pos = np.asarray(paths.positions if isinstance(paths, PathEnsemble) else paths, dtype=float)
    if pos.ndim == 2:                     # single path (n, d)
        return float(np.abs(pos).max()) if pos.size else 0.0
    return np.abs(pos).max(axis=(1, 2))
