"""Annealed transfer operators: Ulam discretization and stationary densities.

The deterministic transfer operator of the base map is discretized by the
Ulam scheme: entry (i, j) is Leb(A_i intersect T^{-1} A_j) / Leb(A_i),
computed exactly from the two monotone branch inverses applied to cell
endpoints. The annealed operator follows with a periodic convolution against
the scaled noise kernel; its fixed density yields the base Lyapunov
functional via closed-form cell integrals of log |T'|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .dynamics import LorenzSkewProduct
from .grid import GridDensity, is_power_of_two, l1_distance, uniform_density
from .noise import ScaledKernel, periodic_convolve


class ConvergenceError(RuntimeError):
    """Power iteration failed to reach tolerance within max_iter."""

    def __init__(self, message: str, residual: float, iterations: int) -> None:
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class UlamOperator:
    """Row-stochastic Ulam matrix of the base map (rows = source cells)."""

    n_cells: int
    matrix: sp.csr_matrix

    def apply_density(self, f: GridDensity) -> GridDensity:
        """Push forward a cell-averaged density: v'_j = sum_i P_ij v_i."""
        if f.n_cells != self.n_cells:
            raise ValueError("grid sizes differ")
        return GridDensity(self.n_cells, self.matrix.T.dot(f.values))


@dataclass(frozen=True)
class StationaryResult:
    density: GridDensity
    iterations: int
    residual: float
    spectral_gap: float


def build_ulam(m: LorenzSkewProduct, n_cells: int) -> UlamOperator:
    """Assemble the Ulam matrix from exact branch inverses at cell endpoints.

    n_cells must be a power of two >= 64, so 0 is a cell edge and no cell
    straddles the singularity.
    """
    if not (is_power_of_two(n_cells) and n_cells >= 64):
        raise ValueError(f"n_cells must be a power of two >= 64, got {n_cells}")
    n = n_cells
    h = 2.0 / n
    a, s = m.a, m.s
    inv_s = 1.0 / s

    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []
    for i in range(n):
        left_branch = i < n // 2
        l = -1.0 + i * h
        r = l + h
        if left_branch:
            # T(x) = 1 - a*(-x)^s, increasing on [-1, 0)
            y0 = 1.0 - a * (-l) ** s
            y1 = 1.0 - a * (-r) ** s
        else:
            # T(x) = a*x^s - 1, increasing on (0, 1]
            y0 = a * l**s - 1.0
            y1 = a * r**s - 1.0
        j0 = min(max(int(math.floor((y0 + 1.0) / h)), 0), n - 1)
        j1 = min(max(int(math.floor((y1 + 1.0) / h)), 0), n - 1)
        edges = -1.0 + h * np.arange(j0 + 1, j1 + 1)
        if left_branch:
            x_inner = -(((1.0 - edges) / a) ** inv_s)
        else:
            x_inner = ((edges + 1.0) / a) ** inv_s
        x_break = np.empty(j1 - j0 + 2)
        x_break[0] = l
        x_break[-1] = r
        x_break[1:-1] = np.clip(x_inner, l, r)
        widths = np.diff(x_break)
        np.maximum(widths, 0.0, out=widths)
        keep = widths > 0.0
        j_idx = np.arange(j0, j1 + 1)[keep]
        rows.append(np.full(j_idx.shape, i))
        cols.append(j_idx)
        vals.append(widths[keep] / h)

    matrix = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )
    return UlamOperator(n_cells=n, matrix=matrix)


def annealed_apply(op: UlamOperator, k: ScaledKernel, f: GridDensity) -> GridDensity:
    """One step of the annealed operator: convolve the pushforward."""
    return periodic_convolve(k, op.apply_density(f))


def stationary_density(
    op: UlamOperator,
    k: ScaledKernel,
    tol: float = 1e-10,
    max_iter: int = 100_000,
) -> StationaryResult:
    """Power iteration from the uniform density to the annealed fixed point.

    Residual is the L1 distance between consecutive iterates; the spectral
    gap estimate comes from the geometric decay of the last <= 20 residuals.
    A stalling residual (oscillating second eigenvalue) triggers averaging of
    the last two iterates.
    """
    f = uniform_density(op.n_cells)
    residuals: list[float] = []
    for it in range(1, max_iter + 1):
        g = annealed_apply(op, k, f)
        g = GridDensity(g.n_cells, g.values / g.mass())
        res = l1_distance(g, f)
        residuals.append(res)
        if res < tol:
            return StationaryResult(
                density=g,
                iterations=it,
                residual=res,
                spectral_gap=_gap_from_residuals(residuals),
            )
        if len(residuals) >= 3 and res > 0.9999 * residuals[-3]:
            # period-2 oscillation: average the last two iterates
            avg = 0.5 * (f.values + g.values)
            f = GridDensity(op.n_cells, avg / (avg.sum() * f.cell_width))
        else:
            f = g
    raise ConvergenceError(
        f"stationary density did not converge below {tol:g} in {max_iter} iterations "
        f"(last residual {residuals[-1]:.3e})",
        residual=residuals[-1],
        iterations=max_iter,
    )


def _gap_from_residuals(residuals: list[float]) -> float:
    window = [r for r in residuals[-21:] if r > 0.0]
    if len(window) < 2:
        return 1.0
    ratio = (window[-1] / window[0]) ** (1.0 / (len(window) - 1))
    return float(min(max(1.0 - ratio, 1e-16), 1.0))


def base_lyapunov_from_density(m: LorenzSkewProduct, f: GridDensity) -> float:
    """integral of log |T'| against f, with exact per-cell integrals.

    log |T'(x)| = log(a*s) + (s-1) log |x| and the antiderivative of log |x|
    is x log |x| - x (extended by 0 at x = 0), so the log singularity at the
    cell edge 0 is integrated exactly.
    """
    edges = f.edges()
    phi = _log_abs_antiderivative(edges)
    cell_log_int = np.diff(phi)
    h = f.cell_width
    cell_integrals = h * math.log(m.a * m.s) + (m.s - 1.0) * cell_log_int
    return float(np.dot(f.values, cell_integrals))


def _log_abs_antiderivative(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    safe = np.where(t == 0.0, 1.0, np.abs(t))
    return np.where(t == 0.0, 0.0, t * np.log(safe) - t)


def large_noise_lyapunov(m: LorenzSkewProduct) -> float:
    """Closed-form limit log a + log s + 1 - s (uniform stationary density)."""
    return math.log(m.a) + math.log(m.s) + 1.0 - m.s


def density_continuity_probe(
    m: LorenzSkewProduct,
    mother,
    xi_grid,
    n_cells: int,
    tol: float = 1e-10,
    max_iter: int = 100_000,
) -> np.ndarray:
    """Consecutive L1 distances of stationary densities along a xi grid."""
    op = build_ulam(m, n_cells)
    densities = [
        stationary_density(op, ScaledKernel(mother, float(xi)), tol, max_iter).density
        for xi in xi_grid
    ]
    return np.array(
        [l1_distance(densities[i + 1], densities[i]) for i in range(len(densities) - 1)]
    )


def density_csv_rows(f: GridDensity) -> list[tuple[float, float, float]]:
    """(cell_left, cell_right, density) rows for serialization."""
    edges = f.edges()
    return [
        (float(edges[j]), float(edges[j + 1]), float(f.values[j]))
        for j in range(f.n_cells)
    ]
