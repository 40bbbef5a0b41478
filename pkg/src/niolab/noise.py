"""Mod-2 additive noise kernels and their exact grid discretization.

A mother kernel rho is a density on [-1, 1]; the scaled kernel rho^xi(x) =
rho(x/xi)/xi has support [-xi, xi] and total variation Var(rho)/xi. Periodic
convolution on the circle (-1, 1] is discretized as a circulant whose weights
are exact double cell integrals of the scaled kernel, computed in closed form
from the second antiderivative of the mother density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .grid import GridDensity

KERNEL_KINDS = ("uniform", "quadratic_bump")


@dataclass(frozen=True)
class NoiseKernel:
    """Mother noise density on [-1, 1].

    cdf_antiderivative is D(z) = int_{-inf}^z CDF(u) du, the second
    antiderivative of the density; the exact circulant weights are second
    differences of its scaled version. D(z) = 0 for z <= -1 and D(z) = z for
    z >= 1 (mean-zero kernels).
    """

    kind: str
    density: Callable[[np.ndarray], np.ndarray]
    cdf: Callable[[np.ndarray], np.ndarray]
    inverse_cdf: Callable[[np.ndarray], np.ndarray]
    total_variation: float
    cdf_antiderivative: Callable[[np.ndarray], np.ndarray]


def _uniform_density(x):
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) <= 1.0, 0.5, 0.0)


def _uniform_cdf(x):
    x = np.asarray(x, dtype=float)
    return np.clip((x + 1.0) / 2.0, 0.0, 1.0)


def _uniform_inverse_cdf(u):
    u = np.asarray(u, dtype=float)
    _check_unit(u)
    return 2.0 * u - 1.0


def _uniform_cdf_antiderivative(z):
    z = np.asarray(z, dtype=float)
    zc = np.clip(z, -1.0, 1.0)
    inner = (zc + 1.0) ** 2 / 4.0
    return np.where(z >= 1.0, z, inner)


def _bump_density(x):
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) <= 1.0, 0.75 * (1.0 - x * x), 0.0)


def _bump_cdf(x):
    x = np.asarray(x, dtype=float)
    xc = np.clip(x, -1.0, 1.0)
    return 0.5 + 0.75 * xc - 0.25 * xc**3


def _bump_cdf_antiderivative(z):
    z = np.asarray(z, dtype=float)
    zc = np.clip(z, -1.0, 1.0)
    # int_{-1}^{z} (1/2 + (3/4)v - (1/4)v^3) dv, shifted so D(-1) = 0
    inner = 0.5 * zc + 0.375 * zc * zc - 0.0625 * zc**4 + 0.1875
    return np.where(z >= 1.0, z, inner)


def _check_unit(u) -> None:
    if np.any(u < 0.0) or np.any(u > 1.0):
        raise ValueError("u must lie in [0, 1]")


def _bump_inverse_cdf(u):
    """Safeguarded Newton (bisection fallback) for the quadratic bump CDF."""
    u = np.asarray(u, dtype=float)
    _check_unit(u)
    scalar = u.ndim == 0
    u = np.atleast_1d(u)
    lo = np.full_like(u, -1.0)
    hi = np.ones_like(u)
    x = 2.0 * u - 1.0
    for _ in range(200):
        f = 0.5 + 0.75 * x - 0.25 * x**3 - u
        lo = np.where(f < 0.0, x, lo)
        hi = np.where(f > 0.0, x, hi)
        df = 0.75 * (1.0 - x * x)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(df > 0.0, f / np.where(df > 0.0, df, 1.0), np.inf)
        x_new = x - step
        # fall back to bisection when Newton exits the bracket or stalls
        bad = ~np.isfinite(x_new) | (x_new <= lo) | (x_new >= hi)
        x_new = np.where(bad, 0.5 * (lo + hi), x_new)
        if np.all(np.abs(x_new - x) <= 1e-13):
            x = x_new
            break
        x = x_new
    x = np.clip(x, -1.0, 1.0)
    return float(x[0]) if scalar else x


def uniform_kernel() -> NoiseKernel:
    return NoiseKernel(
        kind="uniform",
        density=_uniform_density,
        cdf=_uniform_cdf,
        inverse_cdf=_uniform_inverse_cdf,
        total_variation=1.0,  # two jumps of 1/2
        cdf_antiderivative=_uniform_cdf_antiderivative,
    )


def quadratic_bump_kernel() -> NoiseKernel:
    return NoiseKernel(
        kind="quadratic_bump",
        density=_bump_density,
        cdf=_bump_cdf,
        inverse_cdf=_bump_inverse_cdf,
        total_variation=1.5,  # int |rho'| = int (3/2)|x| dx on [-1, 1]
        cdf_antiderivative=_bump_cdf_antiderivative,
    )


def mother_kernel(kind: str) -> NoiseKernel:
    if kind == "uniform":
        return uniform_kernel()
    if kind == "quadratic_bump":
        return quadratic_bump_kernel()
    raise ValueError(f"unknown kernel kind {kind!r}; expected one of {KERNEL_KINDS}")


@dataclass(frozen=True)
class ScaledKernel:
    """rho^xi(x) = rho(x/xi)/xi for a mother kernel rho and amplitude xi > 0."""

    mother: NoiseKernel
    xi: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.xi) and self.xi > 0.0):
            raise ValueError(f"xi must be finite and > 0, got {self.xi}")

    def density(self, x):
        return self.mother.density(np.asarray(x, dtype=float) / self.xi) / self.xi

    def cdf(self, x):
        return self.mother.cdf(np.asarray(x, dtype=float) / self.xi)

    @property
    def total_variation(self) -> float:
        return self.mother.total_variation / self.xi


def sample(k: ScaledKernel, u) -> float | np.ndarray:
    """Inverse-CDF sample: xi * InverseCDF_mother(u) for u in [0, 1]."""
    out = k.xi * k.mother.inverse_cdf(u)
    return out


@lru_cache(maxsize=64)
def _circulant_weights_cached(kind: str, xi: float, n_cells: int) -> np.ndarray:
    """Exact per-cell circulant weights w_d of the wrapped scaled kernel.

    w_d = (1/h) * sum_i [P(dh + 2i + h) - 2 P(dh + 2i) + P(dh + 2i - h)]
    where P is the second antiderivative of the scaled density (convex, so
    every term is >= 0) and h = 2/n_cells. sum_d w_d = 1 exactly.
    """
    mother = mother_kernel(kind)
    h = 2.0 / n_cells
    # signed circulant offsets d in [-N/2, N/2)
    d = np.arange(n_cells)
    d_signed = np.where(d < n_cells // 2, d, d - n_cells).astype(float)
    # wrap copies i with |dh + 2i| <= xi + h can contribute
    i_max = int(math.ceil((xi + h + 1.0) / 2.0)) + 1
    i = np.arange(-i_max, i_max + 1, dtype=float)
    c = d_signed[:, None] * h + 2.0 * i[None, :]

    def p2(t):
        return xi * mother.cdf_antiderivative(t / xi)

    second_diff = p2(c + h) - 2.0 * p2(c) + p2(c - h)
    w = second_diff.sum(axis=1) / h
    w = np.maximum(w, 0.0)  # convexity makes true terms nonnegative
    w.setflags(write=False)
    return w


def circulant_weights(k: ScaledKernel, n_cells: int) -> np.ndarray:
    return _circulant_weights_cached(k.mother.kind, k.xi, n_cells)


def _circular_apply(w: np.ndarray, v: np.ndarray) -> np.ndarray:
    """out_j = sum_d w_d v_{(j-d) mod N}, using a banded path when w is narrow."""
    n = v.shape[0]
    nz = np.nonzero(w)[0]
    if nz.size == 0:
        return np.zeros_like(v)
    nz_signed = np.where(nz < n // 2, nz, nz - n)
    half_band = int(np.max(np.abs(nz_signed)))
    if 2 * half_band + 1 >= n:
        padded = np.concatenate([v, v])
        return np.convolve(padded, w, mode="full")[n : 2 * n]
    d = half_band
    band = np.empty(2 * d + 1)
    for t in range(2 * d + 1):
        band[t] = w[(t - d) % n]
    padded = np.concatenate([v[n - 2 * d :], v, v[: 2 * d]])
    return np.convolve(padded, band, mode="full")[3 * d : 3 * d + n]


def periodic_convolve(k: ScaledKernel, f: GridDensity) -> GridDensity:
    """Convolve a grid density with the wrapped scaled kernel (mass-preserving)."""
    w = circulant_weights(k, f.n_cells)
    return GridDensity(f.n_cells, _circular_apply(w, f.values))


def discrete_variation(f: GridDensity, include_boundary: bool = True) -> float:
    """Sum of adjacent cell jumps; include_boundary adds the jumps from/to 0
    outside [-1, 1] (compactly-supported convention). With
    include_boundary=False this is the variation on the open interval, the
    quantity the annealed variance bound controls."""
    v = f.values
    total = float(np.sum(np.abs(np.diff(v))))
    if include_boundary:
        total += abs(float(v[0])) + abs(float(v[-1]))
    return total
