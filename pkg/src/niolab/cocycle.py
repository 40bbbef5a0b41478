"""Monte Carlo cocycle estimators: Birkhoff averages and QR Lyapunov spectra.

One numba kernel advances the noisy skew product and feeds every accumulator
(log |dT|, log |dGdy|, log |x|, QR diagonals, optional 2-D histogram) from the
same orbit, so cross-estimator identities hold per run. Randomness is an
explicit splitmix64 stream, bit-reproducible for a given seed across worker
counts and platforms.

The 2x2 QR step tracks the expanding direction q1 (log R11 = log |J q1|) and
takes log R22 from the exact determinant identity log |det J| - log R11; the
textbook Gram-Schmidt subtraction would cancel catastrophically whenever the
orbit visits small |x|, where the per-step condition number dT/|dGdy| exceeds
1/eps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .dynamics import LorenzSkewProduct
from .noise import ScaledKernel

_MASK64 = (1 << 64) - 1

DEFAULT_BURNIN = 10_000
N_BATCHES = 100


def _mix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, *indices: int) -> int:
    """Stable substream seed for (master, index...) tuples."""
    z = _mix64(master & _MASK64)
    for ix in indices:
        z = _mix64(z ^ ((ix + 0x9E3779B97F4A7C15) & _MASK64))
    return z


def _u01_py(state: int) -> tuple[int, float]:
    """Python mirror of the kernel's splitmix64 uniform draw (for replay tests)."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    z = z ^ (z >> 31)
    return state, (z >> 11) * 2.0**-53


@njit(cache=True, nogil=True)
def _u01(state):
    state = state + np.uint64(0x9E3779B97F4A7C15)
    z = state
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z = z ^ (z >> np.uint64(31))
    return state, (z >> np.uint64(11)) * 2.0**-53


@njit(cache=True, nogil=True)
def _mod2_nb(v):
    if -1.0 < v <= 1.0:
        return v
    m = 1.0 - (1.0 - v) % 2.0
    if m <= -1.0:
        m += 2.0
    return m


@njit(cache=True, nogil=True)
def _invcdf_nb(kind, u):
    if kind == 0:
        return 2.0 * u - 1.0
    # quadratic bump CDF, safeguarded Newton with bisection fallback
    lo = -1.0
    hi = 1.0
    x = 2.0 * u - 1.0
    for _ in range(200):
        fx = 0.5 + 0.75 * x - 0.25 * x * x * x - u
        if fx < 0.0:
            lo = x
        elif fx > 0.0:
            hi = x
        else:
            return x
        df = 0.75 * (1.0 - x * x)
        if df > 0.0:
            xn = x - fx / df
            if xn <= lo or xn >= hi:
                xn = 0.5 * (lo + hi)
        else:
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= 1e-13:
            return xn
        x = xn
    return x


@njit(cache=True, nogil=True)
def _orbit_kernel(
    a,
    s,
    r,
    c_plus,
    c_minus,
    xi,
    kind,
    seed,
    n_burnin,
    n_steps,
    n_batches,
    want_qr,
    hist_bins,
    x0,
    y0,
    use_start,
):
    state = np.uint64(seed)
    if use_start:
        x = x0
        y = y0
    else:
        state, u = _u01(state)
        x = 1.0 - 2.0 * u
        state, u = _u01(state)
        y = 1.0 - 2.0 * u
    while x == 0.0 or x == 1.0 or x == -1.0:
        state, u = _u01(state)
        x = 1.0 - 2.0 * u

    batch_len = n_steps // n_batches
    sums = np.zeros((n_batches, 5))
    hist = np.zeros((hist_bins, hist_bins), dtype=np.int64)
    restarts = 0
    nudges = 0
    xmin = x
    xmax = x
    ymin = y
    ymax = y
    q1x = 1.0
    q1y = 0.0
    pow2mr = 2.0 ** (-r)
    las = math.log(a * s)
    ln2 = math.log(2.0)
    total = n_burnin + n_steps
    for step in range(total):
        ax = -x if x < 0.0 else x
        sgn = 1.0 if x > 0.0 else -1.0
        ps = ax ** (s - 1.0)
        pr = ax ** (r - 1.0)
        dT = a * s * ps
        dGdy_abs = pow2mr * ax * pr
        dGdx = pow2mr * y * r * pr
        Tx = sgn * (a * ax * ps - 1.0)
        Gxy = pow2mr * sgn * y * ax * pr + (c_plus if x > 0.0 else c_minus)

        in_sample = step >= n_burnin
        b = 0
        ldT = 0.0
        ldG = 0.0
        if in_sample:
            b = (step - n_burnin) // batch_len
            lax = math.log(ax)
            # direct logs of the jacobian entries; identity fallback only on underflow
            ldT = math.log(dT) if dT > 1e-300 else las + (s - 1.0) * lax
            ldG = math.log(dGdy_abs) if dGdy_abs > 1e-300 else -r * ln2 + r * lax
            sums[b, 0] += ldT
            sums[b, 1] += ldG
            sums[b, 2] += lax
        if want_qr:
            dGdy = sgn * dGdy_abs
            a1x = dT * q1x
            a1y = dGdx * q1x + dGdy * q1y
            r11 = math.hypot(a1x, a1y)
            if r11 > 0.0:
                q1x = a1x / r11
                q1y = a1y / r11
            if in_sample:
                lr11 = math.log(r11) if r11 > 0.0 else ldT
                sums[b, 3] += lr11
                sums[b, 4] += (ldT + ldG) - lr11
        if in_sample and hist_bins > 0:
            hx = int((x + 1.0) * 0.5 * hist_bins)
            hy = int((y + 1.0) * 0.5 * hist_bins)
            if hx >= hist_bins:
                hx = hist_bins - 1
            if hy >= hist_bins:
                hy = hist_bins - 1
            hist[hx, hy] += 1

        if xi > 0.0:
            state, u = _u01(state)
            xn = _mod2_nb(Tx + xi * _invcdf_nb(kind, u))
            while xn == 0.0:
                # resample the base noise component on an exact singular hit
                state, u = _u01(state)
                xn = _mod2_nb(Tx + xi * _invcdf_nb(kind, u))
            state, u = _u01(state)
            yn = _mod2_nb(Gxy + xi * _invcdf_nb(kind, u))
        else:
            xn = _mod2_nb(Tx)
            yn = _mod2_nb(Gxy)
            if xn == 0.0:
                # deterministic singular hit: restart from a fresh random point
                restarts += 1
                state, u = _u01(state)
                xn = 1.0 - 2.0 * u
                state, u = _u01(state)
                yn = 1.0 - 2.0 * u
                while xn == 0.0 or xn == 1.0 or xn == -1.0:
                    state, u = _u01(state)
                    xn = 1.0 - 2.0 * u
            elif xn == 1.0 or xn == -1.0:
                # rounding of a|x|^s - 1 can land exactly on the boundary fixed
                # points, which would trap the deterministic orbit; one ulp
                # inward reproduces the true escape along the repeller
                nudges += 1
                xn = math.nextafter(xn, 0.0)
        x = xn
        y = yn
        if x < xmin:
            xmin = x
        if x > xmax:
            xmax = x
        if y < ymin:
            ymin = y
        if y > ymax:
            ymax = y
    return sums, restarts, nudges, xmin, xmax, ymin, ymax, x, y, state, hist


@dataclass(frozen=True)
class OrbitState:
    x: float
    y: float
    step: int
    rng_state: int


@dataclass(frozen=True)
class OrbitAccumulators:
    """Batch sums of (log|dT|, log|dGdy|, log|x|, log R11, log R22) plus orbit metadata."""

    xi: float
    seed: int
    n_steps: int
    n_burnin: int
    n_batches: int
    batch_size: int
    batch_sums: np.ndarray
    restarts: int
    edge_nudges: int
    x_range: tuple[float, float]
    y_range: tuple[float, float]
    state: OrbitState
    r: float
    histogram: np.ndarray | None = None

    def column_stats(self, col: int) -> tuple[float, float]:
        """Batch-means value and standard error for one accumulator column."""
        means = self.batch_sums[:, col] / self.batch_size
        b = means.shape[0]
        if np.all(means == means[0]):
            # constant batch means carry no sampling spread; avoid the
            # rounding residue that dividing by b would introduce
            return float(means[0]), 0.0
        value = math.fsum(means) / b
        var = math.fsum((mu - value) ** 2 for mu in means) / (b - 1)
        stderr = math.sqrt(var / b)
        return value, stderr


@dataclass(frozen=True)
class LyapEstimate:
    value: float
    stderr: float
    n_steps: int
    n_burnin: int


@dataclass(frozen=True)
class FiberExponent:
    estimate: LyapEstimate
    identity_value: float  # -r log 2 + r * mean log |x|, from the same orbit


@dataclass(frozen=True)
class SpectrumEstimate:
    chi: tuple[float, float]  # descending
    stderr: tuple[float, float]
    n_steps: int


@dataclass(frozen=True)
class TopExponent:
    estimate: LyapEstimate
    ambiguous: bool
    base: LyapEstimate
    fiber: FiberExponent


@dataclass(frozen=True)
class ZeroNoiseResult:
    """Deterministic (xi = 0) exponents averaged over independent seeds;
    stderr fields carry the across-seed spread (sample std)."""

    base: LyapEstimate
    fiber: FiberExponent
    top: TopExponent
    per_seed_base: np.ndarray
    per_seed_fiber: np.ndarray
    restarts: int
    edge_nudges: int
    n_seeds: int


def simulate_orbit(
    m: LorenzSkewProduct,
    k: ScaledKernel | None,
    seed: int,
    n_steps: int,
    n_burnin: int = DEFAULT_BURNIN,
    n_batches: int = N_BATCHES,
    with_qr: bool = True,
    histogram_bins: int = 0,
    start: OrbitState | None = None,
) -> OrbitAccumulators:
    """Advance the noisy skew product, feeding all accumulators from one orbit.

    k=None (or xi=0) runs the deterministic skew product. n_steps is truncated
    to a multiple of n_batches. Bit-reproducible for a given seed.
    """
    if n_steps < n_batches:
        raise ValueError(f"n_steps must be >= n_batches ({n_batches})")
    if n_burnin < 0:
        raise ValueError("n_burnin must be >= 0")
    batch_size = n_steps // n_batches
    n_steps = batch_size * n_batches
    xi = 0.0 if k is None else k.xi
    kind = 0 if k is None else (0 if k.mother.kind == "uniform" else 1)
    if start is not None:
        x0, y0, rng0, use_start = start.x, start.y, start.rng_state, True
    else:
        x0, y0, rng0, use_start = 0.0, 0.0, seed, False
    sums, restarts, nudges, xmin, xmax, ymin, ymax, x, y, state, hist = _orbit_kernel(
        m.a,
        m.s,
        m.r,
        m.c_plus,
        m.c_minus,
        xi,
        kind,
        np.uint64(rng0 & _MASK64),
        n_burnin,
        n_steps,
        n_batches,
        with_qr,
        histogram_bins,
        x0,
        y0,
        use_start,
    )
    return OrbitAccumulators(
        xi=xi,
        seed=seed,
        n_steps=n_steps,
        n_burnin=n_burnin,
        n_batches=n_batches,
        batch_size=batch_size,
        batch_sums=sums,
        restarts=int(restarts),
        edge_nudges=int(nudges),
        x_range=(float(xmin), float(xmax)),
        y_range=(float(ymin), float(ymax)),
        state=OrbitState(x=float(x), y=float(y), step=n_burnin + n_steps, rng_state=int(state)),
        r=m.r,
        histogram=hist if histogram_bins > 0 else None,
    )


def base_estimate(acc: OrbitAccumulators) -> LyapEstimate:
    value, stderr = acc.column_stats(0)
    return LyapEstimate(value, stderr, acc.n_steps, acc.n_burnin)


def fiber_estimate(acc: OrbitAccumulators) -> FiberExponent:
    value, stderr = acc.column_stats(1)
    mean_log_x, _ = acc.column_stats(2)
    identity = -acc.r * math.log(2.0) + acc.r * mean_log_x
    return FiberExponent(
        estimate=LyapEstimate(value, stderr, acc.n_steps, acc.n_burnin),
        identity_value=identity,
    )


def spectrum_estimate(acc: OrbitAccumulators) -> SpectrumEstimate:
    v1, e1 = acc.column_stats(3)
    v2, e2 = acc.column_stats(4)
    pairs = sorted([(v1, e1), (v2, e2)], key=lambda p: -p[0])
    return SpectrumEstimate(
        chi=(pairs[0][0], pairs[1][0]),
        stderr=(pairs[0][1], pairs[1][1]),
        n_steps=acc.n_steps,
    )


def det_average(acc: OrbitAccumulators) -> float:
    """Birkhoff average of log |det DF| from the same orbit."""
    b, _ = acc.column_stats(0)
    f, _ = acc.column_stats(1)
    return b + f


def top_from_estimates(base: LyapEstimate, fiber: FiberExponent) -> TopExponent:
    """max{lambda_base, chi1_fiber} with an ambiguity flag when the two are
    within 3*(stderr_base + stderr_fiber) of each other."""
    fe = fiber.estimate
    ambiguous = abs(base.value - fe.value) < 3.0 * (base.stderr + fe.stderr)
    winner = base if base.value >= fe.value else fe
    return TopExponent(estimate=winner, ambiguous=ambiguous, base=base, fiber=fiber)


def base_exponent_mc(
    m: LorenzSkewProduct,
    k: ScaledKernel | None,
    seed: int,
    n_steps: int,
    n_burnin: int = DEFAULT_BURNIN,
) -> LyapEstimate:
    acc = simulate_orbit(m, k, seed, n_steps, n_burnin, with_qr=False)
    return base_estimate(acc)


def fiber_exponent_mc(
    m: LorenzSkewProduct,
    k: ScaledKernel | None,
    seed: int,
    n_steps: int,
    n_burnin: int = DEFAULT_BURNIN,
) -> FiberExponent:
    acc = simulate_orbit(m, k, seed, n_steps, n_burnin, with_qr=False)
    return fiber_estimate(acc)


def lyapunov_spectrum_qr(
    m: LorenzSkewProduct,
    k: ScaledKernel | None,
    seed: int,
    n_steps: int,
    n_burnin: int = DEFAULT_BURNIN,
) -> SpectrumEstimate:
    acc = simulate_orbit(m, k, seed, n_steps, n_burnin, with_qr=True)
    return spectrum_estimate(acc)


def top_exponent(
    m: LorenzSkewProduct,
    k: ScaledKernel | None,
    seed: int,
    n_steps: int,
    n_burnin: int = DEFAULT_BURNIN,
) -> TopExponent:
    acc = simulate_orbit(m, k, seed, n_steps, n_burnin, with_qr=False)
    return top_from_estimates(base_estimate(acc), fiber_estimate(acc))


def zero_noise_exponents(
    m: LorenzSkewProduct,
    master_seed: int,
    n_steps: int,
    n_burnin: int = DEFAULT_BURNIN,
    n_seeds: int = 8,
) -> ZeroNoiseResult:
    """Deterministic exponents from n_seeds independent random initial points.

    The across-seed sample std is the reported uncertainty; there is no
    annealed route at xi = 0.
    """
    if n_seeds < 2:
        raise ValueError("need at least 2 seeds for an across-seed spread")
    per_base = np.empty(n_seeds)
    per_fiber = np.empty(n_seeds)
    per_logx = np.empty(n_seeds)
    restarts = 0
    nudges = 0
    for i in range(n_seeds):
        acc = simulate_orbit(
            m, None, derive_seed(master_seed, i), n_steps, n_burnin, with_qr=False
        )
        per_base[i], _ = acc.column_stats(0)
        per_fiber[i], _ = acc.column_stats(1)
        per_logx[i], _ = acc.column_stats(2)
        restarts += acc.restarts
        nudges += acc.edge_nudges
    base = LyapEstimate(
        value=float(np.mean(per_base)),
        stderr=float(np.std(per_base, ddof=1)),
        n_steps=n_steps,
        n_burnin=n_burnin,
    )
    fiber = FiberExponent(
        estimate=LyapEstimate(
            value=float(np.mean(per_fiber)),
            stderr=float(np.std(per_fiber, ddof=1)),
            n_steps=n_steps,
            n_burnin=n_burnin,
        ),
        identity_value=-m.r * math.log(2.0) + m.r * float(np.mean(per_logx)),
    )
    return ZeroNoiseResult(
        base=base,
        fiber=fiber,
        top=top_from_estimates(base, fiber),
        per_seed_base=per_base,
        per_seed_fiber=per_fiber,
        restarts=restarts,
        edge_nudges=nudges,
        n_seeds=n_seeds,
    )
