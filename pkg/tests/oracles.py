"""Independent reference computations for the test suite.

Everything here is deliberately written without importing the package under
test: plain quadrature sums, closed-form solutions, and textbook interval
formulas.  Tests compare package output against these, never the other way
around.
"""
from __future__ import annotations

import math

import numpy as np

# two-sided 97.5% standard-normal quantile, to full double precision
Z_95 = 1.959963984540054


def rms_norm_components(values: np.ndarray, grid_dim: int) -> float:
    """Root-mean-square over grid points, summed over leading component axes.

    `values` has shape (components..., M, ..., M) with `grid_dim` trailing grid
    axes.  Matches the discrete Plancherel normalization of the package's
    s = 0 Sobolev norm.
    """
    a = np.abs(np.asarray(values)) ** 2
    grid_axes = tuple(range(a.ndim - grid_dim, a.ndim))
    mean_sq = a.mean(axis=grid_axes)
    return float(np.sqrt(mean_sq.sum()))


def l2_inner_physical(f: np.ndarray, g: np.ndarray, grid_dim: int) -> float:
    """Physical-space L2 inner product with mean (not sum) quadrature."""
    prod = np.conj(np.asarray(f)) * np.asarray(g)
    grid_axes = tuple(range(prod.ndim - grid_dim, prod.ndim))
    return float(np.real(prod.mean(axis=grid_axes).sum()))


def stokes_discrete_factor(nu: float, dt: float, xi_sq: float, n_steps: int) -> float:
    """Exact per-mode amplification of the semi-implicit viscous solve."""
    return (1.0 + nu * dt * xi_sq) ** (-n_steps)


def geometric_bm_exact(x0: complex, c: float, w_total: float) -> complex:
    """Stratonovich solution of dx = c x dW: x(t) = x0 * exp(c * W(t))."""
    return x0 * math.exp(c * w_total)


def double_divergence_single_mode(xi: np.ndarray, tau_hat: np.ndarray) -> complex:
    """div(div tau) at one Fourier mode: -xi^T tau_hat xi."""
    xi = np.asarray(xi, dtype=float)
    return complex(-xi @ np.asarray(tau_hat) @ xi)


def wilson_interval(successes: int, n: int, z: float = Z_95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n == 0:
        return (0.0, 1.0)
    p = successes / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = (z / denom) * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    return (max(0.0, center - half), min(1.0, center + half))


def fit_loglog_slope(x, y) -> float:
    """Least-squares slope of log(y) against log(x)."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def sample_variance_se(n: int, sigma_sq: float) -> float:
    """Approximate standard error of the sample variance of n normals."""
    return sigma_sq * math.sqrt(2.0 / (n - 1))


def poisson_mean_se(lam: float, n: int) -> float:
    """Standard error of the mean of n Poisson(lam) counts."""
    return math.sqrt(lam / n)
