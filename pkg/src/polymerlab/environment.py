"""Seeded realizations of the slicewise-independent stationary Gaussian field.

The field attaches one centred stationary Gaussian process to every time
slice k >= 1, independent across slices, with in-slice covariance given by
a :class:`~polymerlab.kernels.KernelSpec`.  A handle is a *fixed
realization*: re-querying the same (slice, position) returns the same
value, and everything is a deterministic function of the seed.

Two backends:

``exact``
    Any dimension.  Each slice keeps a cache of already-sampled points and
    draws new query points conditionally on the cache (sequential Gaussian
    conditioning with an incrementally updated Cholesky factor and a tiny
    diagonal jitter).  Exact in law for arbitrary positions; cost grows
    with the number of cached points, so it suits small query sets.
``grid``
    d = 1 only.  Synthesizes each slice on the uniform grid
    {-L, -L+h, ..., L} by circulant embedding of the covariance sequence
    (FFT), then snaps queries to the nearest node.  Cheap for large
    ensembles.

Randomness comes from counter-based Philox streams keyed by
(seed, domain-tag, index), so slice k's stream never depends on query
history of other slices or on thread scheduling.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

from .kernels import KernelSpec, _as_points, gamma_eval, gamma_matrix

BACKENDS = ("exact", "grid")

# Domain tags keep Philox streams for different purposes disjoint even when
# built from the same 64-bit seed.
_DOMAIN_SLICE = 1
_DOMAIN_WALK = 2

_JITTER = 1e-10
_CLIP_TOLERANCE = 1e-6


class GridDomainError(ValueError):
    """A query position fell outside the grid domain [-L, L]."""


class CovarianceConditioningError(RuntimeError):
    """The query covariance matrix was numerically non-positive-definite."""


class SpectralClippingError(RuntimeError):
    """Circulant embedding needed to clip more spectral mass than allowed."""


def tagged_stream(seed: int, domain: int, index: int) -> np.random.Generator:
    """Independent Philox stream for (seed, domain, index)."""
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64((domain << 48) | index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass
class _ExactSliceCache:
    points: np.ndarray          # (m, d) sampled positions
    values: np.ndarray          # (m,) field values
    chol: np.ndarray            # (m, m) lower Cholesky of the jittered covariance
    index: dict = field(default_factory=dict)   # position bytes -> row
    rng: np.random.Generator = None


class EnvironmentHandle:
    """One seeded realization of the random field g(k, x).

    Parameters
    ----------
    seed : int
        64-bit seed; the handle is a pure function of it.
    kernel : KernelSpec
        In-slice covariance.
    d : int
        Spatial dimension.
    backend : {"exact", "grid"}
    h, L : float
        Grid spacing and half-width (grid backend only).  ``h`` defaults
        to one tenth of the kernel length scale.

    The grid backend is safe for concurrent reads once a slice is built;
    slice construction is locked and happens exactly once per (seed, k).
    The exact backend mutates its cache on every new query point, so use
    one handle per thread of control.
    """

    def __init__(self, seed: int, kernel: KernelSpec, d: int = 1,
                 backend: str = "exact", h: float | None = None, L: float | None = None):
        if backend not in BACKENDS:
            raise ValueError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
        if d < 1:
            raise ValueError("dimension d must be >= 1")
        if d > 1 and kernel.kind == "exponential-petermann":
            raise ValueError("the max-norm exponential kernel is not certified positive-definite "
                             "for d > 1; use product-exponential (or squared-exponential)")
        self.seed = int(seed)
        self.kernel = kernel
        self.d = int(d)
        self.backend = backend
        self.sigma2 = kernel.sigma2(d)
        self.diagnostics: dict = {}
        self._lock = threading.Lock()
        self._slices: dict[int, object] = {}
        if backend == "grid":
            if d != 1:
                raise ValueError("grid backend supports d=1 only; use the exact backend for d>1")
            self.h = float(h) if h is not None else 0.1 / kernel.lam
            if L is None:
                raise ValueError("grid backend requires a half-width L")
            self.L = float(L)
            if self.h <= 0 or self.L < 0:
                raise ValueError("grid spacing h must be > 0 and half-width L >= 0")
            self.n_nodes = int(round(2 * self.L / self.h)) + 1
            self._sqrt_spectrum: np.ndarray | None = None
        else:
            self.h = None
            self.L = None

    # -- grid backend ----------------------------------------------------

    @property
    def grid_nodes(self) -> np.ndarray:
        if self.backend != "grid":
            raise ValueError("grid_nodes is only defined for the grid backend")
        return -self.L + self.h * np.arange(self.n_nodes)

    def _spectrum(self) -> np.ndarray:
        # sqrt of circulant eigenvalues, computed once; negative eigenvalues
        # are clipped to zero and the clipped fraction recorded.
        if self._sqrt_spectrum is not None:
            return self._sqrt_spectrum
        n = self.n_nodes
        cov_seq = gamma_eval(self.kernel, (self.h * np.arange(n))[:, None])
        cov_seq = np.atleast_1d(cov_seq)
        circ = cov_seq if n == 1 else np.concatenate([cov_seq, cov_seq[-2:0:-1]])
        eig = np.fft.fft(circ).real
        clipped = -eig[eig < 0].sum()
        total = np.abs(eig).sum()
        frac = float(clipped / total) if total > 0 else 0.0
        self.diagnostics["spectral_clipped_mass"] = frac
        if frac > _CLIP_TOLERANCE:
            raise SpectralClippingError(
                f"circulant embedding clipped {frac:.3e} of spectral mass (> {_CLIP_TOLERANCE}); "
                "enlarge L or shrink the kernel length scale")
        self._sqrt_spectrum = np.sqrt(np.clip(eig, 0.0, None))
        return self._sqrt_spectrum

    def build_grid_slice(self, k: int) -> np.ndarray:
        """Synthesize (or fetch) the field on the grid for slice k."""
        if self.backend != "grid":
            raise ValueError("build_grid_slice requires the grid backend")
        self._check_slice(k)
        got = self._slices.get(k)
        if got is not None:
            return got
        with self._lock:
            got = self._slices.get(k)
            if got is not None:
                return got
            sqrt_eig = self._spectrum()
            n_circ = sqrt_eig.size
            rng = tagged_stream(self.seed, _DOMAIN_SLICE, k)
            z = rng.standard_normal(n_circ) + 1j * rng.standard_normal(n_circ)
            values = np.fft.ifft(sqrt_eig * np.sqrt(n_circ) * z).real[:self.n_nodes]
            values.flags.writeable = False
            self._slices[k] = values
            return values

    def snap(self, positions) -> np.ndarray:
        """Indices of the grid nodes nearest to the given positions (d=1)."""
        pts = _as_points(positions, d=1)[:, 0]
        tol = 1e-9 * max(1.0, self.L)
        if np.any(np.abs(pts) > self.L + tol):
            worst = pts[np.argmax(np.abs(pts))]
            raise GridDomainError(
                f"position {worst:g} outside grid domain [-{self.L:g}, {self.L:g}]; enlarge L")
        return np.clip(np.rint((pts + self.L) / self.h).astype(np.intp), 0, self.n_nodes - 1)

    def snapped_positions(self, positions) -> np.ndarray:
        """Grid coordinates the given positions are rounded to."""
        return -self.L + self.h * self.snap(positions)

    # -- exact backend ---------------------------------------------------

    def _exact_cache(self, k: int) -> _ExactSliceCache:
        cache = self._slices.get(k)
        if cache is None:
            cache = _ExactSliceCache(
                points=np.empty((0, self.d)), values=np.empty(0),
                chol=np.empty((0, 0)), rng=tagged_stream(self.seed, _DOMAIN_SLICE, k))
            self._slices[k] = cache
        return cache

    def _exact_sample(self, k: int, pts: np.ndarray) -> np.ndarray:
        cache = self._exact_cache(k)
        rows = np.empty(len(pts), dtype=np.intp)
        new_pts: list[np.ndarray] = []
        m = len(cache.points)
        for i, p in enumerate(pts):
            key = p.tobytes()
            row = cache.index.get(key)
            if row is None:
                row = m + len(new_pts)
                cache.index[key] = row
                new_pts.append(p)
            rows[i] = row
        if new_pts:
            new = np.asarray(new_pts)
            c_nn = gamma_matrix(self.kernel, new) + _JITTER * self.sigma2 * np.eye(len(new))
            try:
                if m == 0:
                    l_new = np.linalg.cholesky(c_nn)
                    mean = np.zeros(len(new))
                    chol = l_new
                else:
                    c_no = gamma_matrix(self.kernel, new, cache.points)
                    # a = c_no L^{-T}; schur = c_nn - a a^T
                    half = np.linalg.solve(cache.chol, cache.values)
                    a = np.linalg.solve(cache.chol, c_no.T).T
                    mean = a @ half
                    l_new = np.linalg.cholesky(c_nn - a @ a.T)
                    chol = np.zeros((m + len(new),) * 2)
                    chol[:m, :m] = cache.chol
                    chol[m:, :m] = a
                    chol[m:, m:] = l_new
            except np.linalg.LinAlgError as exc:
                raise CovarianceConditioningError(
                    f"slice {k}: covariance of {m + len(new)} query points is numerically "
                    "non-positive-definite even after jitter") from exc
            vals = mean + l_new @ cache.rng.standard_normal(len(new))
            cache.points = np.vstack([cache.points, new])
            cache.values = np.concatenate([cache.values, vals])
            cache.chol = chol
        return cache.values[rows]

    # -- common ----------------------------------------------------------

    def _check_slice(self, k: int) -> None:
        if not isinstance(k, (int, np.integer)) or k < 1:
            raise ValueError(f"slice index must be an integer >= 1, got {k!r}")

    def sample_slice_at(self, k: int, positions) -> np.ndarray:
        """Field values of slice k at the given positions.

        Jointly with all previously returned values of the slice, the
        result is a draw from the centred Gaussian vector with covariance
        [gamma(x_a - x_b)]; repeated positions return cached values.
        """
        self._check_slice(k)
        pts = _as_points(positions, d=self.d)
        if pts.shape[1] != self.d:
            raise ValueError(f"positions have dimension {pts.shape[1]}, handle has d={self.d}")
        if self.backend == "grid":
            return self.build_grid_slice(k)[self.snap(pts)]
        return self._exact_sample(k, pts)


@dataclass(frozen=True)
class SelfTestRow:
    position_a: tuple      # (slice, coordinate...) of the first point
    position_b: tuple
    target_cov: float
    empirical_cov: float
    z: float
    stderr: float


def covariance_selftest(env: EnvironmentHandle, positions, n_seeds: int = 10_000) -> list[SelfTestRow]:
    """Empirical covariance over fresh seeds versus kernel targets.

    ``positions`` is a list of (slice k, position x) points; every
    unordered pair (including each point with itself) yields one row with
    a z-score based on the Gaussian standard error of a sample covariance.
    Replicate handles use seeds ``env.seed + i``.
    """
    if n_seeds < 100:
        raise ValueError("n_seeds must be >= 100 for a meaningful self-test")
    points = [(int(k), _as_points(x, d=env.d)[0]) for k, x in positions]
    by_slice: dict[int, list[int]] = {}
    for i, (k, _) in enumerate(points):
        by_slice.setdefault(k, []).append(i)

    values = np.empty((n_seeds, len(points)))
    for s in range(n_seeds):
        handle = EnvironmentHandle(env.seed + s, env.kernel, d=env.d, backend=env.backend,
                                   h=env.h, L=env.L)
        for k, idx in by_slice.items():
            values[s, idx] = handle.sample_slice_at(k, np.asarray([points[i][1] for i in idx]))

    # For the grid backend the achievable targets are those of the snapped
    # coordinates.
    if env.backend == "grid":
        coords = [np.asarray([float(env.snapped_positions(p)[0])]) for _, p in points]
    else:
        coords = [p for _, p in points]

    centered = values - values.mean(axis=0)
    var = (centered**2).sum(axis=0) / (n_seeds - 1)
    rows = []
    for a in range(len(points)):
        for b in range(a, len(points)):
            emp = float((centered[:, a] * centered[:, b]).sum() / (n_seeds - 1))
            ka, kb = points[a][0], points[b][0]
            target = gamma_eval(env.kernel, coords[a] - coords[b]) if ka == kb else 0.0
            se = float(np.sqrt((var[a] * var[b] + emp**2) / (n_seeds - 1)))
            rows.append(SelfTestRow(
                position_a=(ka, *(float(c) for c in coords[a])),
                position_b=(kb, *(float(c) for c in coords[b])),
                target_cov=float(target), empirical_cov=emp,
                z=(emp - float(target)) / se, stderr=se))
    return rows
