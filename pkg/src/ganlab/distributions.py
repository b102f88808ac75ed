"""Synthetic distributions the experiments sample from and integrate over.

Histograms carry discrete mass on implicit unit-spaced integer bins
0..n-1.  The analytic families (1-D Gaussians, isotropic 2-D Gaussian
mixtures, vertical unit segments) expose pdf / log-pdf / sampling, and the
1-D ones a CDF.  Sampling is a pure function of (law, seed, n): replaying
a seed gives byte-identical arrays (see rng.Stream).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf, logsumexp

from .rng import Stream

QUADRATURE_POINTS = 100_000
QUADRATURE_SIGMAS = 8.0


@dataclass(frozen=True)
class Histogram:
    """Nonnegative mass per unit-spaced integer bin (arbitrary units)."""

    masses: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "masses", tuple(float(m) for m in self.masses))
        if len(self.masses) < 1:
            raise ValueError("histogram needs at least one bin")
        if any(m < 0 for m in self.masses):
            raise ValueError("histogram masses must be >= 0")
        if not all(math.isfinite(m) for m in self.masses):
            raise ValueError("histogram masses must be finite")

    def total(self) -> float:
        return float(sum(self.masses))

    def normalized(self) -> tuple[float, ...]:
        t = self.total()
        if t <= 0:
            raise ValueError("cannot normalize a zero-mass histogram")
        return tuple(m / t for m in self.masses)


@dataclass(frozen=True)
class Gaussian1D:
    mean: float
    std: float

    def __post_init__(self):
        if not self.std > 0:
            raise ValueError("std must be > 0")

    dimension = 1


@dataclass(frozen=True)
class GaussianMixture2D:
    """Isotropic Gaussian mixture on the plane.

    components: tuple of ((cx, cy), std); weights sum to 1 within 1e-12.
    """

    components: tuple[tuple[tuple[float, float], float], ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.components) < 1:
            raise ValueError("mixture needs at least one component")
        if len(self.weights) != len(self.components):
            raise ValueError("one weight per component required")
        if any(w < 0 for w in self.weights):
            raise ValueError("weights must be >= 0")
        if abs(sum(self.weights) - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1 within 1e-12")
        if any(std <= 0 for _, std in self.components):
            raise ValueError("component stds must be > 0")

    dimension = 2

    def centers(self) -> np.ndarray:
        return np.array([c for c, _ in self.components], dtype=np.float64)

    def stds(self) -> np.ndarray:
        return np.array([s for _, s in self.components], dtype=np.float64)


def ring_mixture(n_modes: int = 8, radius: float = 2.0, std: float = 0.05) -> GaussianMixture2D:
    """Equal-weight Gaussians on a circle; the standard mode-coverage target."""
    comps = []
    for k in range(n_modes):
        ang = 2.0 * math.pi * k / n_modes
        comps.append(((radius * math.cos(ang), radius * math.sin(ang)), std))
    return GaussianMixture2D(tuple(comps), tuple(1.0 / n_modes for _ in range(n_modes)))


@dataclass(frozen=True)
class SegmentDistribution:
    """Uniform mass on the vertical segment x = theta, y in [0, 1]."""

    theta: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")

    dimension = 2


@dataclass(frozen=True)
class NoiseSource:
    """Generator input noise: 'uniform' on [-1, 1]^dim or 'normal' N(0, I)."""

    law: str
    dimension: int
    seed: int

    def __post_init__(self):
        if self.law not in ("uniform", "normal"):
            raise ValueError(f"unknown noise law {self.law!r}")
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")


AnalyticDistribution = Gaussian1D | GaussianMixture2D | SegmentDistribution


def pdf(dist: AnalyticDistribution, x) -> np.ndarray | float:
    """Density at x (scalar/point or an array of them).

    For SegmentDistribution the density is taken with respect to arc
    length along its support line, so it is 1 on the segment and 0 off it.
    """
    if isinstance(dist, Gaussian1D):
        x = np.asarray(x, dtype=np.float64)
        z = (x - dist.mean) / dist.std
        out = np.exp(-0.5 * z * z) / (dist.std * math.sqrt(2.0 * math.pi))
        return float(out) if out.ndim == 0 else out
    if isinstance(dist, GaussianMixture2D):
        pts = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if pts.shape[-1] != 2:
            raise ValueError("mixture points must be 2-D")
        centers = dist.centers()
        stds = dist.stds()
        d2 = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=-1)
        comp = np.exp(-0.5 * d2 / stds[None, :] ** 2) / (2.0 * math.pi * stds[None, :] ** 2)
        out = comp @ np.asarray(dist.weights)
        return float(out[0]) if np.asarray(x).ndim == 1 else out
    if isinstance(dist, SegmentDistribution):
        pts = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if pts.shape[-1] != 2:
            raise ValueError("segment points must be 2-D")
        on = (pts[:, 0] == dist.theta) & (pts[:, 1] >= 0.0) & (pts[:, 1] <= 1.0)
        out = on.astype(np.float64)
        return float(out[0]) if np.asarray(x).ndim == 1 else out
    raise TypeError(f"no pdf for {type(dist).__name__}")


def log_pdf(dist: Gaussian1D | GaussianMixture2D, x) -> np.ndarray:
    """log pdf, computed without underflow (needed by the KL integrands)."""
    if isinstance(dist, Gaussian1D):
        x = np.asarray(x, dtype=np.float64)
        z = (x - dist.mean) / dist.std
        return -0.5 * z * z - math.log(dist.std) - 0.5 * math.log(2.0 * math.pi)
    if isinstance(dist, GaussianMixture2D):
        pts = np.atleast_2d(np.asarray(x, dtype=np.float64))
        centers = dist.centers()
        stds = dist.stds()
        d2 = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=-1)
        logcomp = -0.5 * d2 / stds[None, :] ** 2 - np.log(2.0 * math.pi * stds[None, :] ** 2)
        return logsumexp(logcomp, axis=1, b=np.asarray(dist.weights)[None, :])
    raise TypeError(f"no log_pdf for {type(dist).__name__}")


def sample(dist, seed: int, n: int) -> np.ndarray:
    """n points from dist; shape (n,) for 1-D laws, (n, dim) otherwise.

    Pure in (law, seed, n): the same call replays byte-identically.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    return _draw(dist, Stream(seed), n)


class SampleStream:
    """Sequential sampler for training loops: draw() advances the stream."""

    def __init__(self, dist, seed: int, stream: int = 0):
        self.dist = dist
        self._stream = Stream(seed, stream)

    def draw(self, n: int) -> np.ndarray:
        return _draw(self.dist, self._stream, n)


def _draw(dist, stream: Stream, n: int) -> np.ndarray:
    if isinstance(dist, Gaussian1D):
        return dist.mean + dist.std * stream.normals(n)
    if isinstance(dist, GaussianMixture2D):
        # component picks first, then all coordinates: fixed consumption order
        u = stream.uniforms(n)
        cum = np.cumsum(np.asarray(dist.weights))
        comp = np.searchsorted(cum, u, side="right")
        comp = np.minimum(comp, len(dist.weights) - 1)
        z = stream.normals(2 * n).reshape(n, 2)
        return dist.centers()[comp] + dist.stds()[comp, None] * z
    if isinstance(dist, SegmentDistribution):
        y = stream.uniforms(n)
        out = np.empty((n, 2), dtype=np.float64)
        out[:, 0] = dist.theta
        out[:, 1] = y
        return out
    if isinstance(dist, NoiseSource):
        if dist.law == "uniform":
            u = stream.uniforms(n * dist.dimension).reshape(n, dist.dimension)
            return 2.0 * u - 1.0
        return stream.normals(n * dist.dimension).reshape(n, dist.dimension)
    raise TypeError(f"cannot sample {type(dist).__name__}")


def cdf_1d(dist, x) -> np.ndarray | float:
    """CDF of a 1-D distribution; monotone with limits 0 and 1."""
    if not isinstance(dist, Gaussian1D):
        raise ValueError("cdf_1d requires a one-dimensional distribution")
    x = np.asarray(x, dtype=np.float64)
    out = 0.5 * (1.0 + erf((x - dist.mean) / (dist.std * math.sqrt(2.0))))
    return float(out) if out.ndim == 0 else out


def support_grid(*dists: Gaussian1D, points: int = QUADRATURE_POINTS) -> np.ndarray:
    """Uniform grid covering [mean - 8 std, mean + 8 std] of every input."""
    if not dists:
        raise ValueError("need at least one distribution")
    lo = min(d.mean - QUADRATURE_SIGMAS * d.std for d in dists)
    hi = max(d.mean + QUADRATURE_SIGMAS * d.std for d in dists)
    return np.linspace(lo, hi, points)
