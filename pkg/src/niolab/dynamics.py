"""Skew products over contracting Lorenz maps, with additive mod-2 noise.

The base map T(x) = sgn(x) * (a*|x|^s - 1) acts on the circle (-1, 1]; the
fiber map G(x, y) = 2^-r * sgn(x) * y * |x|^r + c_branch contracts each fiber
by at most 2^-r. A random step adds a noise vector to both coordinates and
wraps mod 2 back into (-1, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple


class SingularPointError(ValueError):
    """Base map evaluated at its singular point x = 0."""


def mod2(value: float) -> float:
    """Reduce a real number mod 2 to the representative in (-1, 1].

    In-range inputs are returned unchanged (exact identity); out-of-range
    inputs are wrapped via 1 - ((1 - value) mod 2), which lands in (-1, 1].
    """
    if not math.isfinite(value):
        raise ValueError(f"mod2 requires a finite input, got {value!r}")
    if -1.0 < value <= 1.0:
        return value
    m = 1.0 - (1.0 - value) % 2.0
    if m <= -1.0:  # (1 - value) % 2.0 can round up to exactly 2.0
        m += 2.0
    return m


def circle_distance(u: float, v: float) -> float:
    """Distance between two points of the mod-2 circle."""
    d = abs(mod2(u) - mod2(v))
    return min(d, 2.0 - d)


class JacobianEntries(NamedTuple):
    dT: float
    dGdy: float
    dGdx: float


def _check_formula_arg(name: str, value: float) -> None:
    # The branch formulas accept the closed interval: x = -1 is the same circle
    # point as +1, but its left-branch value (e.g. T(-1) = 1-a) is what a graph
    # of the map displays. Chain states themselves always stay in (-1, 1].
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    if not (-1.0 <= value <= 1.0):
        raise ValueError(f"{name} must lie in [-1, 1], got {value!r}")


@dataclass(frozen=True)
class LorenzSkewProduct:
    """Parameters of the skew product.

    Constraints: 0 < a <= 2, s >= 1 (s = 1 is the degenerate piecewise-affine
    oracle instance; the generic regime is s > 1), r > s + 3, and the two
    fiber branch images [c +- 2^-r] must be disjoint on the circle. A single
    shared offset cannot separate the branch images, hence the per-branch
    c_plus/c_minus.
    """

    a: float = 2.0
    s: float = 4.0
    r: float = 7.5
    c_plus: float = 0.5
    c_minus: float = -0.5

    def __post_init__(self) -> None:
        for name in ("a", "s", "r", "c_plus", "c_minus"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not 0.0 < self.a <= 2.0:
            raise ValueError(f"a must satisfy 0 < a <= 2, got {self.a}")
        if self.s < 1.0:
            raise ValueError(f"s must satisfy s >= 1, got {self.s}")
        if self.r <= self.s + 3.0:
            raise ValueError(f"r must satisfy r > s + 3, got r={self.r}, s={self.s}")
        for name in ("c_plus", "c_minus"):
            c = getattr(self, name)
            if not (-1.0 < c <= 1.0):
                raise ValueError(f"{name} must lie in (-1, 1], got {c}")
        separation = circle_distance(self.c_plus, self.c_minus)
        if separation <= 2.0 ** (1.0 - self.r):
            raise ValueError(
                "fiber branch images overlap: need circle distance "
                f"|c_plus - c_minus| > 2^(1-r) = {2.0 ** (1.0 - self.r):.3g}, "
                f"got {separation:.3g}"
            )

    @property
    def fiber_contraction(self) -> float:
        return 2.0 ** -self.r

    def base_map(self, x: float) -> float:
        """T(x) = sgn(x) * (a*|x|^s - 1); undefined at x = 0."""
        _check_formula_arg("x", x)
        if x == 0.0:
            raise SingularPointError("base map is undefined at x = 0")
        sgn = 1.0 if x > 0.0 else -1.0
        return sgn * (self.a * abs(x) ** self.s - 1.0)

    def fiber_map(self, x: float, y: float) -> float:
        """G(x, y) = 2^-r * sgn(x) * y * |x|^r + c_branch; undefined at x = 0."""
        _check_formula_arg("x", x)
        _check_formula_arg("y", y)
        if x == 0.0:
            raise SingularPointError("fiber map is undefined at x = 0")
        sgn = 1.0 if x > 0.0 else -1.0
        offset = self.c_plus if x > 0.0 else self.c_minus
        return 2.0 ** -self.r * sgn * y * abs(x) ** self.r + offset

    def jacobian(self, x: float, y: float) -> JacobianEntries:
        """Entries of DF at (x, y): dT/dx, dG/dy, dG/dx."""
        _check_formula_arg("x", x)
        _check_formula_arg("y", y)
        if x == 0.0:
            raise SingularPointError("jacobian is undefined at x = 0")
        sgn = 1.0 if x > 0.0 else -1.0
        ax = abs(x)
        scale = 2.0 ** -self.r
        dT = self.a * self.s * ax ** (self.s - 1.0)
        dGdy = scale * sgn * ax ** self.r
        dGdx = scale * y * self.r * ax ** (self.r - 1.0)
        return JacobianEntries(dT=dT, dGdy=dGdy, dGdx=dGdx)

    def random_step(self, x: float, y: float, omega: tuple[float, float]) -> tuple[float, float]:
        """One noisy step: (mod2(T(x) + omega[0]), mod2(G(x, y) + omega[1]))."""
        w0, w1 = omega
        for name, w in (("omega[0]", w0), ("omega[1]", w1)):
            if not math.isfinite(w):
                raise ValueError(f"{name} must be finite, got {w!r}")
        return (
            mod2(self.base_map(x) + w0),
            mod2(self.fiber_map(x, y) + w1),
        )

    def base_range(self) -> tuple[tuple[float, float], tuple[float, float]]:
        """Closures of the two branch images: ((-1, a-1), (1-a, 1))."""
        return ((-1.0, self.a - 1.0), (1.0 - self.a, 1.0))
