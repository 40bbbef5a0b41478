"""Directed-rounding interval arithmetic and a validated Newton root enclosure.

Covers exactly the operations the large-noise exponent needs (+, -, *, /, log,
midpoint). Outward rounding is realized by nudging each result endpoint to the
adjacent representable float (``math.nextafter``) instead of switching the FPU
rounding mode: portable, thread-safe, and at most 2 ulp of extra width per
operation. ``log`` is evaluated round-to-nearest at the endpoints and widened
by 2 ulp, relying on the standard library's faithfully rounded (<= 1 ulp) log.

The closed-form large-noise exponent lambda(a, s) = log a + log s + 1 - s is
evaluated as an enclosure, and its zero in s (for fixed a) is enclosed by an
interval Newton iteration with certified sign checks at the endpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Interval",
    "ZeroEnclosure",
    "IntervalDomainError",
    "BracketError",
    "NoRootError",
    "NewtonError",
    "ZeroSweepError",
    "lambda_large_noise",
    "lambda_derivative",
    "interval_newton_root",
    "zero_set_sweep",
    "DEFAULT_SWEEP_BRACKET",
]


class IntervalDomainError(ValueError):
    """Operand outside an operation's domain (log/division by an interval with 0)."""


class BracketError(ValueError):
    """Initial bracket does not have rigorously opposite signs at its endpoints."""


class NoRootError(RuntimeError):
    """Newton intersection became empty: no root in the box."""


class NewtonError(RuntimeError):
    """Newton iteration failed to make progress within the bisection-depth budget."""


class ZeroSweepError(RuntimeError):
    """A sweep point failed; carries the offending slope value as .a_value."""

    def __init__(self, a_value: float, message: str):
        super().__init__(f"a={a_value!r}: {message}")
        self.a_value = a_value


def _down(v: float) -> float:
    return math.nextafter(v, -math.inf)


def _up(v: float) -> float:
    return math.nextafter(v, math.inf)


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi] of reals; all operations return enclosures."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        lo = float(self.lo)
        hi = float(self.hi)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValueError(f"interval endpoints must be finite, got [{lo}, {hi}]")
        if lo > hi:
            raise ValueError(f"interval endpoints out of order: [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @staticmethod
    def point(v: float) -> "Interval":
        return Interval(v, v)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        m = 0.5 * (self.lo + self.hi)
        return min(max(m, self.lo), self.hi)

    def contains(self, v: float) -> bool:
        return self.lo <= v <= self.hi

    @property
    def strictly_positive(self) -> bool:
        return self.lo > 0.0

    @property
    def strictly_negative(self) -> bool:
        return self.hi < 0.0

    def intersect(self, other: "Interval") -> "Interval | None":
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        if lo > hi:
            return None
        return Interval(lo, hi)

    def __add__(self, other: "Interval") -> "Interval":
        return Interval(_down(self.lo + other.lo), _up(self.hi + other.hi))

    def __sub__(self, other: "Interval") -> "Interval":
        return Interval(_down(self.lo - other.hi), _up(self.hi - other.lo))

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def __mul__(self, other: "Interval") -> "Interval":
        products = (
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        )
        return Interval(_down(min(products)), _up(max(products)))

    def __truediv__(self, other: "Interval") -> "Interval":
        if other.lo <= 0.0 <= other.hi:
            raise IntervalDomainError(f"division by interval containing 0: [{other.lo}, {other.hi}]")
        quotients = (
            self.lo / other.lo,
            self.lo / other.hi,
            self.hi / other.lo,
            self.hi / other.hi,
        )
        return Interval(_down(min(quotients)), _up(max(quotients)))

    def log(self) -> "Interval":
        if self.lo <= 0.0:
            raise IntervalDomainError(f"log of interval with nonpositive endpoint: [{self.lo}, {self.hi}]")
        # round-to-nearest endpoint logs widened by 2 ulp (libm log is <= 1 ulp off)
        return Interval(_down(_down(math.log(self.lo))), _up(_up(math.log(self.hi))))


_ONE = Interval.point(1.0)


def lambda_large_noise(a: Interval, s: Interval) -> Interval:
    """Enclosure of log a + log s + 1 - s (the large-noise base exponent)."""
    if a.lo <= 0.0 or s.lo <= 0.0:
        raise IntervalDomainError("lambda_large_noise requires a > 0 and s > 0")
    return a.log() + s.log() + _ONE - s


def lambda_derivative(s: Interval) -> Interval:
    """Enclosure of d/ds [log a + log s + 1 - s] = 1/s - 1."""
    if s.lo <= 0.0:
        raise IntervalDomainError("lambda_derivative requires s > 0")
    return _ONE / s - _ONE


@dataclass(frozen=True)
class ZeroEnclosure:
    """Certified enclosure of the zero in s of the large-noise exponent at slope a."""

    a: Interval
    s_star: Interval
    newton_steps: int
    certified: bool
    width_history: tuple[float, ...] = ()


def _rigorous_sign(a: Interval, s_value: float) -> int:
    """+1 / -1 when the enclosure of lambda(a, s_value) excludes 0, else 0."""
    f = lambda_large_noise(a, Interval.point(s_value))
    if f.strictly_positive:
        return 1
    if f.strictly_negative:
        return -1
    return 0


def _certify(a: Interval, s_star: Interval) -> bool:
    sign_lo = _rigorous_sign(a, s_star.lo)
    sign_hi = _rigorous_sign(a, s_star.hi)
    return sign_lo != 0 and sign_hi != 0 and sign_lo != sign_hi


def interval_newton_root(
    a: Interval,
    s_init: Interval,
    width_tol: float = 1e-6,
    max_steps: int = 64,
) -> ZeroEnclosure:
    """Enclose the zero of s -> lambda(a, s) inside s_init by interval Newton.

    Requires rigorously opposite signs at the endpoints of s_init. Each step
    intersects N(S) = mid(S) - f(mid)/f'(S) with S; when the derivative
    enclosure contains 0 or the step fails to contract, the bracket is
    bisected (keeping rigorous endpoint signs), up to 8 bisections.
    """
    if width_tol <= 0.0:
        raise ValueError("width_tol must be positive")
    sign_lo = _rigorous_sign(a, s_init.lo)
    sign_hi = _rigorous_sign(a, s_init.hi)
    if sign_lo == 0 or sign_hi == 0 or sign_lo == sign_hi:
        raise BracketError(
            f"endpoints of [{s_init.lo}, {s_init.hi}] do not have rigorously opposite signs "
            f"(signs {sign_lo:+d}, {sign_hi:+d})"
        )

    box = s_init
    steps = 0
    bisections = 0
    widths = [box.width]

    while box.width >= width_tol and steps < max_steps:
        need_bisect = False
        deriv = lambda_derivative(box)
        if deriv.lo <= 0.0 <= deriv.hi:
            need_bisect = True
        else:
            steps += 1
            m = box.mid
            if m <= box.lo or m >= box.hi:
                break  # box is at floating-point resolution
            fm = lambda_large_noise(a, Interval.point(m))
            candidate = Interval.point(m) - fm / deriv
            new_box = candidate.intersect(box)
            if new_box is None:
                raise NoRootError(
                    f"Newton intersection empty on [{box.lo}, {box.hi}] for a=[{a.lo}, {a.hi}]"
                )
            if new_box.width <= 0.95 * box.width:
                box = new_box
                widths.append(box.width)
            else:
                need_bisect = True

        if need_bisect:
            bisections += 1
            if bisections > 8:
                raise NewtonError(
                    f"no contraction after 8 bisections; box [{box.lo}, {box.hi}], "
                    f"width {box.width:.3e}"
                )
            box = _bisect_bracket(a, box, sign_lo, sign_hi)
            widths.append(box.width)

    return ZeroEnclosure(
        a=a,
        s_star=box,
        newton_steps=steps,
        certified=_certify(a, box),
        width_history=tuple(widths),
    )


def _bisect_bracket(a: Interval, box: Interval, sign_lo: int, sign_hi: int) -> Interval:
    """Halve the bracket, keeping rigorously opposite endpoint signs.

    Probes the midpoint first, then off-center points if the midpoint's sign
    cannot be resolved rigorously (it may sit too close to the root).
    """
    for frac in (0.5, 0.375, 0.625, 0.25, 0.75):
        m = box.lo + frac * box.width
        if m <= box.lo or m >= box.hi:
            continue
        sign_m = _rigorous_sign(a, m)
        if sign_m == sign_lo:
            return Interval(m, box.hi)
        if sign_m == sign_hi:
            return Interval(box.lo, m)
    raise NewtonError(
        f"could not resolve a rigorous sign anywhere inside [{box.lo}, {box.hi}]"
    )


# Valid for every slope in (1, 2]: lambda(a, 1+1e-6) ~ log a > 0 and
# lambda(a, 4) <= log 2 + log 4 - 3 < 0. The closed form has a second,
# spurious zero below s = 1 (it rises from -inf to log a on (0, 1]), so
# brackets are always clipped to the s > 1 branch.
DEFAULT_SWEEP_BRACKET = Interval(1.000001, 4.0)


def zero_set_sweep(
    a_lo: float,
    a_hi: float,
    n_points: int = 128,
    width_tol: float = 1e-6,
) -> list[ZeroEnclosure]:
    """Certified s*(a) enclosures on a uniform slope grid, warm-started left to right.

    Each point after the first is seeded from the previous enclosure widened by
    0.5 on each side, clipped to the s > 1 branch; the first point (or any
    point whose warm bracket fails) uses the full default bracket.
    """
    if not (1.0 < a_lo <= a_hi <= 2.0):
        raise ValueError(f"slope range must satisfy 1 < a_lo <= a_hi <= 2, got [{a_lo}, {a_hi}]")
    if a_lo == a_hi:
        grid = np.array([a_lo])
    else:
        if n_points < 2:
            raise ValueError("n_points must be >= 2 for a nondegenerate range")
        grid = np.linspace(a_lo, a_hi, n_points)

    results: list[ZeroEnclosure] = []
    prev: Interval | None = None
    for a_value in grid:
        a_iv = Interval.point(float(a_value))
        brackets: list[Interval] = []
        if prev is not None:
            lo = max(prev.lo - 0.5, DEFAULT_SWEEP_BRACKET.lo)
            hi = min(prev.hi + 0.5, DEFAULT_SWEEP_BRACKET.hi)
            if lo < hi:
                brackets.append(Interval(lo, hi))
        brackets.append(DEFAULT_SWEEP_BRACKET)
        enclosure: ZeroEnclosure | None = None
        last_error: Exception | None = None
        for bracket in brackets:
            try:
                enclosure = interval_newton_root(a_iv, bracket, width_tol=width_tol)
                break
            except (BracketError, NoRootError, NewtonError) as exc:
                last_error = exc
        if enclosure is None:
            raise ZeroSweepError(float(a_value), str(last_error)) from last_error
        results.append(enclosure)
        prev = enclosure.s_star
    return results


def zero_set_csv_rows(enclosures: list[ZeroEnclosure]) -> list[tuple[float, float, float, int, bool]]:
    """Rows (a, s_lo, s_hi, steps, certified) for the sweep CSV."""
    return [
        (e.a.mid, e.s_star.lo, e.s_star.hi, e.newton_steps, e.certified)
        for e in enclosures
    ]
