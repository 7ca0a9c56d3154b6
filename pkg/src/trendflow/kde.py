"""Gaussian kernel density estimation with a rule-of-thumb bandwidth."""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator

from .validation import as_float_array


def silverman_bandwidth(samples) -> float:
    """0.9 * min(std, IQR/1.34) * n**(-1/5); falls back to std when IQR is 0."""
    x = as_float_array(samples)
    std = float(x.std(ddof=1))
    q75, q25 = np.percentile(x, [75, 25])
    iqr = float(q75 - q25)
    spread = min(std, iqr / 1.34) if iqr > 0 else std
    return 0.9 * spread * len(x) ** (-0.2)


class GaussianKDE(BaseEstimator):
    """Gaussian-kernel density estimate of a 1-D sample.

    Parameters
    ----------
    bandwidth : float or None
        Kernel bandwidth; None selects it by the Silverman rule above.
    grid_size : int
        Points in the evaluation grid.
    tail_bandwidths : float
        How many bandwidths the grid extends beyond the sample range. The
        default of 4 keeps the grid integral of the density within 1e-3 of 1.
    """

    def __init__(self, bandwidth=None, grid_size=512, tail_bandwidths=4.0):
        self.bandwidth = bandwidth
        self.grid_size = grid_size
        self.tail_bandwidths = tail_bandwidths

    def fit(self, samples, y=None):
        x = as_float_array(samples)
        if len(x) < 2:
            raise ValueError("need at least 2 samples")
        if x.std(ddof=1) == 0:
            raise ValueError("samples have zero variance")
        if self.bandwidth is not None:
            if self.bandwidth <= 0:
                raise ValueError("bandwidth must be positive")
            h = float(self.bandwidth)
        else:
            h = silverman_bandwidth(x)
        self.samples_ = x
        self.bandwidth_ = h
        pad = self.tail_bandwidths * h
        self.grid_ = np.linspace(x.min() - pad, x.max() + pad, self.grid_size)
        self.density_ = self.evaluate(self.grid_)
        return self

    def evaluate(self, points) -> np.ndarray:
        """Density at the given points (mean of the per-sample kernels)."""
        pts = np.asarray(points, dtype=float)
        z = (pts[..., np.newaxis] - self.samples_) / self.bandwidth_
        kernels = np.exp(-0.5 * z * z) / (self.bandwidth_ * math.sqrt(2 * math.pi))
        return kernels.mean(axis=-1)

    def grid_integral(self) -> float:
        return float(np.trapz(self.density_, self.grid_))


def kde(samples, bandwidth=None, grid_size=512) -> GaussianKDE:
    """Fit a Gaussian KDE; errors on fewer than 2 samples or zero variance."""
    return GaussianKDE(bandwidth=bandwidth, grid_size=grid_size).fit(samples)
