"""fBm covariance, path sampling and a generic joint-Gaussian sampler.

Paths are built from fractional Gaussian noise (fGn), the stationary
increment sequence of fBm. Long grids use the Davies-Harte circulant
embedding (one FFT per pair of paths); short grids or embeddings with a
negative eigenvalue use a dense factorization of the fBm covariance.

All randomness flows from a single 64-bit seed through
``numpy.random.SeedSequence``; paths are produced in fixed-size blocks with
spawned child seeds, so results do not depend on how blocks are scheduled.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError
from .frac_ops import HurstParam

__all__ = [
    "fbm_covariance",
    "fgn_autocovariance",
    "FbmPathBatch",
    "sample_fbm_paths",
    "JointGaussianSpec",
    "joint_gaussian_sample",
    "make_rng",
    "DENSE_MAX_STEPS",
    "BLOCK_PATHS",
]

DENSE_MAX_STEPS = 512
BLOCK_PATHS = 4096
_NEG_EIG_RTOL = 1e-8


def _check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed < 2 ** 64:
        raise PreconditionError("seed must be an unsigned 64-bit integer")
    return seed


def make_rng(seed) -> np.random.Generator:
    """Counter-based generator (Philox) for a 64-bit seed or a SeedSequence."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(_check_seed(seed))
    return np.random.Generator(np.random.Philox(ss))


def fbm_covariance(h, s, t):
    """E[B_H(s) B_H(t)] = (s^{2H} + t^{2H} - |t - s|^{2H}) / 2; accepts arrays."""
    h2 = 2.0 * HurstParam.of(h).h
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(s < 0) or np.any(t < 0):
        raise PreconditionError("fbm_covariance needs s, t >= 0")
    out = 0.5 * (s ** h2 + t ** h2 - np.abs(t - s) ** h2)
    return out if out.ndim else float(out)


def fgn_autocovariance(h, n: int, dt: float = 1.0) -> np.ndarray:
    """Autocovariance of increments B(k dt + dt) - B(k dt) at lags 0..n-1."""
    h2 = 2.0 * HurstParam.of(h).h
    k = np.arange(n, dtype=float)
    gamma = 0.5 * (np.abs(k + 1) ** h2 - 2.0 * k ** h2 + np.abs(k - 1) ** h2)
    return gamma * dt ** h2


@dataclass(frozen=True, eq=False)
class FbmPathBatch:
    """``paths[p, k, j]`` is component ``j`` of path ``p`` at ``times[k]``."""

    h: HurstParam
    T: float
    n_steps: int
    d: int
    paths: np.ndarray = field(repr=False)
    seed: int
    method: str = "dense"
    fallback: bool = False

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n_steps)

    @property
    def n_paths(self) -> int:
        return self.paths.shape[0]

    def rows(self):
        """(path_id, step, t, component, value) tuples in path/step/component order."""
        times = self.times
        for p in range(self.n_paths):
            for k in range(self.n_steps):
                for j in range(self.d):
                    yield p, k, float(times[k]), j + 1, float(self.paths[p, k, j])


def _circulant_eigs(gamma: np.ndarray) -> np.ndarray:
    """Eigenvalues of the circulant built from lags 0..n (length 2n)."""
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    return np.fft.fft(row).real


def _dense_factor(h, times: np.ndarray) -> np.ndarray:
    cov = fbm_covariance(h, times[:, None], times[None, :])
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(cov)
        return v * np.sqrt(np.clip(w, 0.0, None))


def _dense_block(factor, count, rng):
    z = rng.standard_normal((count, factor.shape[0]))
    return z @ factor.T


def _davies_harte_block(sqrt_eigs, n_inc, count, rng, dt_scale):
    m2 = sqrt_eigs.size
    pairs = (count + 1) // 2
    z = rng.standard_normal((pairs, m2)) + 1j * rng.standard_normal((pairs, m2))
    w = np.fft.fft(sqrt_eigs[None, :] * z, axis=1)[:, :n_inc]
    incs = np.concatenate([w.real, w.imag], axis=0)[:count]
    return np.cumsum(incs * dt_scale, axis=1)


def sample_fbm_paths(h, T: float, n_steps: int, n_paths: int, d: int = 1, seed: int = 0,
                     method: str | None = None) -> FbmPathBatch:
    """Sample ``n_paths`` d-dimensional fBm paths on ``linspace(0, T, n_steps)``.

    ``method`` may force ``"dense"`` or ``"circulant"``; by default grids with
    more than :data:`DENSE_MAX_STEPS` points use the circulant embedding.
    """
    h = HurstParam.of(h)
    seed = _check_seed(seed)
    if n_steps < 2:
        raise PreconditionError("n_steps must be >= 2")
    if not T > 0:
        raise PreconditionError("T must be > 0")
    if d < 1 or n_paths < 1:
        raise PreconditionError("d and n_paths must be >= 1")
    if method not in (None, "dense", "circulant"):
        raise PreconditionError("method must be 'dense' or 'circulant'")
    n_inc = n_steps - 1
    dt = T / n_inc
    times = np.linspace(0.0, T, n_steps)
    use = method or ("circulant" if n_steps > DENSE_MAX_STEPS else "dense")
    fallback = False
    if use == "circulant":
        # unit-step fGn, rescaled by dt^H afterwards (self-similarity)
        eigs = _circulant_eigs(fgn_autocovariance(h, n_inc + 1))
        if eigs.min() < -_NEG_EIG_RTOL * eigs.max():
            use, fallback = "dense", True
        else:
            sqrt_eigs = np.sqrt(np.clip(eigs, 0.0, None) / eigs.size)
    if use == "dense":
        factor = _dense_factor(h, times[1:])

    total = n_paths * d
    children = np.random.SeedSequence(seed).spawn((total + BLOCK_PATHS - 1) // BLOCK_PATHS)
    out = np.zeros((total, n_steps))
    for b, child in enumerate(children):
        lo = b * BLOCK_PATHS
        count = min(BLOCK_PATHS, total - lo)
        rng = make_rng(child)
        if use == "dense":
            out[lo:lo + count, 1:] = _dense_block(factor, count, rng)
        else:
            out[lo:lo + count, 1:] = _davies_harte_block(sqrt_eigs, n_inc, count, rng, dt ** h.h)
    paths = out.reshape(n_paths, d, n_steps).transpose(0, 2, 1)
    return FbmPathBatch(h, float(T), n_steps, d, np.ascontiguousarray(paths), seed, use, fallback)


@dataclass(frozen=True, eq=False)
class JointGaussianSpec:
    """Mean-zero Gaussian vector with the given covariance matrix."""

    covariance: np.ndarray = field(repr=False)

    def __post_init__(self):
        cov = np.array(self.covariance, dtype=float)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
            raise PreconditionError("covariance must be a square matrix")
        if not np.all(np.isfinite(cov)):
            raise PreconditionError("covariance must be finite")
        scale = max(1.0, float(np.max(np.abs(cov))))
        if np.max(np.abs(cov - cov.T)) > 1e-12 * scale:
            raise PreconditionError("covariance must be symmetric")
        w = np.linalg.eigvalsh(cov)
        if w.min() < -1e-10 * max(w.max(), 0.0):
            raise PreconditionError("covariance is not positive semidefinite (eigenvalue %.3g)" % w.min())
        cov.setflags(write=False)
        object.__setattr__(self, "covariance", cov)

    @property
    def dimension(self) -> int:
        return self.covariance.shape[0]

    def factor(self) -> np.ndarray:
        """L with L L^T = covariance, from the eigendecomposition with tiny
        eigenvalues clipped to zero (so rank-deficient inputs stay exact)."""
        w, v = np.linalg.eigh(self.covariance)
        w = np.where(w > 1e-12 * w.max(), w, 0.0)
        return v * np.sqrt(w)


def joint_gaussian_sample(spec: JointGaussianSpec, n: int, seed) -> np.ndarray:
    """``n`` draws of shape ``(n, m)``."""
    if n < 1:
        raise PreconditionError("n must be >= 1")
    rng = make_rng(seed)
    L = spec.factor()
    return rng.standard_normal((n, spec.dimension)) @ L.T
