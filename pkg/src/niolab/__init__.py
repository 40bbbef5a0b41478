"""Numerical laboratory for noise-induced order in fiber-contracting skew products.

The base dynamics is a piecewise-expanding circle map (a contracting-Lorenz
return map), the fiber contracts by 2^{-r} |x|^r, and both coordinates receive
additive mod-2 noise. The package estimates base/fiber/top Lyapunov exponents
by Monte Carlo orbit averages and by annealed-transfer-operator stationary
densities, verifies the structural identities tying them together, brackets
the noise amplitude where the top exponent changes sign, and rigorously
encloses the zero set of the closed-form large-noise exponent.
"""

from .cocycle import (
    FiberExponent,
    LyapEstimate,
    OrbitAccumulators,
    SpectrumEstimate,
    TopExponent,
    ZeroNoiseResult,
    base_exponent_mc,
    derive_seed,
    fiber_exponent_mc,
    lyapunov_spectrum_qr,
    simulate_orbit,
    top_exponent,
    zero_noise_exponents,
)
from .dynamics import JacobianEntries, LorenzSkewProduct, SingularPointError, circle_distance, mod2
from .grid import GridDensity, l1_distance, uniform_density
from .interval import (
    Interval,
    ZeroEnclosure,
    interval_newton_root,
    lambda_derivative,
    lambda_large_noise,
    zero_set_sweep,
)
from .noise import (
    KERNEL_KINDS,
    NoiseKernel,
    ScaledKernel,
    discrete_variation,
    mother_kernel,
    periodic_convolve,
)
from .scan import (
    ScanBudgets,
    ScanRow,
    TransitionReport,
    VerifyRow,
    bracket_transition,
    default_xi_grid,
    scan_xi,
    transition_from_rows,
    verify_max_formula,
)
from .transfer import (
    ConvergenceError,
    StationaryResult,
    UlamOperator,
    base_lyapunov_from_density,
    build_ulam,
    large_noise_lyapunov,
    stationary_density,
)

__version__ = "0.1.0"
