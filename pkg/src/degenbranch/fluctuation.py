"""Occupation-time fluctuation statistic of the simulated system.

The statistic integrates the centered test-function mass of the
population over rescaled time and divides by the regime-dependent
normalization.  Centering defaults to the truncated system's exact
mean, which keeps the Monte Carlo statistic exactly mean-zero for any
box; the idealized infinite-volume centering is available for
comparison.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .branching import (ModelParams, SimulationDomain, expected_population,
                        expected_population_integral)
from .exceptions import (NumericAccuracyError, ParameterDomainError,
                         UnsupportedRegimeError)
from .forest import occupation_grid, sweep_forest
from .stable_motion import Regime, StableIndexVector, _TAIL_EXPONENT

ACCURACY_FLAG_REFINEMENT = "grid-refinement"


class CenteringMode(enum.Enum):
    EXACT_INFINITE = "exact_infinite"
    TRUNCATION_CORRECTED = "truncation_corrected"


@dataclass(frozen=True)
class FluctuationSample:
    """One Monte Carlo draw of the normalized occupation fluctuation."""

    n: int
    t: float
    value: float
    replicate_id: int
    seed: tuple
    half_widths: tuple
    centering_mode: CenteringMode
    accuracy_flag: str | None = None
    refinement_delta: float | None = None

    def __post_init__(self):
        if not (0.0 < self.t <= 1.0):
            raise ParameterDomainError("rescaled time must lie in (0, 1]")
        if not math.isfinite(self.value):
            raise ParameterDomainError("sample value must be finite")


def scaling_Fn(params: ModelParams, indices: StableIndexVector) -> float:
    """Regime-dependent normalization of the occupation fluctuation."""
    regime = indices.regime
    if regime is Regime.CRITICAL:
        if params.n < 2:
            raise ParameterDomainError("critical normalization needs n >= 2")
        return math.sqrt(params.n**params.kappa * math.log(params.n))
    if regime is Regime.INTERMEDIATE:
        return float(params.n) ** ((3.0 - indices.bar_alpha) * params.kappa / 2.0)
    if regime is Regime.LARGE:
        return float(params.n) ** (params.kappa / 2.0)
    raise UnsupportedRegimeError(
        f"anisotropy index {indices.bar_alpha:.6g} <= 1 has no supported normalization")


def _box_mass_1d(center, width, alpha, s, half_width, abs_tol):
    """Integral over [-L, L] of the smoothed unit Gaussian factor at time s."""
    rt2 = math.sqrt(2.0)
    if s == 0.0 or alpha == 2.0:
        sig = math.sqrt(width**2 + 2.0 * s)
        lo = (half_width - center) / (sig * rt2)
        hi = (half_width + center) / (sig * rt2)
        return width * math.sqrt(math.pi / 2.0) * (math.erf(lo) + math.erf(hi))

    window = math.sqrt(2.0 * _TAIL_EXPONENT) / width

    def smooth(z):
        return math.exp(-0.5 * (width * z) ** 2 - s * z**alpha) * math.cos(center * z)

    split = min(1.0 / half_width, window)
    part1, err1 = quad(lambda z: smooth(z) * half_width * np.sinc(z * half_width / math.pi),
                       0.0, split, epsabs=abs_tol / 10.0, epsrel=1e-10)
    part2, err2 = 0.0, 0.0
    if split < window:
        part2, err2 = quad(lambda z: smooth(z) / z, split, window,
                           weight="sin", wvar=half_width,
                           epsabs=abs_tol / 10.0, epsrel=1e-10, limit=400)
    scale = 4.0 * width / math.sqrt(2.0 * math.pi)
    achieved = scale * (err1 + err2) + math.exp(-_TAIL_EXPONENT)
    if achieved > abs_tol:
        raise NumericAccuracyError(
            f"box-mass quadrature reached error {achieved:.3e} > {abs_tol:.3e}",
            achieved_error=achieved)
    return scale * (part1 + part2)


def box_semigroup_mass(phi, s, indices: StableIndexVector, domain: SimulationDomain,
                       *, abs_tol=1e-9):
    """Integral of the time-s smoothed test function over the truncation box.

    By the one-ancestor expectation identity, multiplying this by the
    mean population gives the exact mean test-function mass of the
    truncated system at time s.
    """
    if s < 0.0:
        raise ParameterDomainError("time must be nonnegative")
    if domain.d != indices.d:
        raise ParameterDomainError("domain and index dimensions differ")
    total = 0.0
    for term in phi.terms:
        value = term.amplitude
        for k, alpha in enumerate(indices.alphas):
            value *= _box_mass_1d(term.centers[k], term.widths[k], alpha, s,
                                  domain.half_widths[k], abs_tol)
        total += value
    return total


def centering_value(s, phi, params: ModelParams, indices: StableIndexVector,
                    domain: SimulationDomain, mode: CenteringMode):
    """Mean test-function mass subtracted from the population at time s."""
    f = expected_population(s, params.gamma, params.delta_n)
    if mode is CenteringMode.EXACT_INFINITE:
        return f * phi.integral()
    return f * box_semigroup_mass(phi, s, indices, domain)


def centering_integral(t_end, phi, params: ModelParams, indices: StableIndexVector,
                       domain: SimulationDomain, mode: CenteringMode,
                       *, t_start=0.0, abs_tol=1e-8):
    """Time integral of the centering over [t_start, t_end] (absolute time)."""
    if t_end < t_start:
        raise ParameterDomainError("integration interval is reversed")
    if mode is CenteringMode.EXACT_INFINITE:
        whole = expected_population_integral(t_end, params.gamma, params.delta_n)
        head = expected_population_integral(t_start, params.gamma, params.delta_n)
        return (whole - head) * phi.integral()

    def integrand(s):
        return (expected_population(s, params.gamma, params.delta_n)
                * box_semigroup_mass(phi, s, indices, domain))

    value, err = quad(integrand, t_start, t_end, epsabs=abs_tol / 10.0,
                      epsrel=1e-9, limit=300)
    if err > abs_tol * max(1.0, abs(value)):
        raise NumericAccuracyError(
            f"centering quadrature reached error {err:.3e}", achieved_error=err)
    return value


@dataclass
class GridReplicate:
    """One simulated system, reduced to its occupation accumulators.

    ``occupancy`` maps each snapshot time (absolute, = n * t) to the
    trapezoid integral of the population's test-function mass up to that
    time, at the working grid spacing.  When the replicate ran with a
    half-spacing refinement pass, ``occupancy_refined`` carries the
    fine-grid values for the same paths.
    """

    replicate_id: int
    seed: tuple
    half_widths: tuple
    grid_spacing: float
    horizon: float
    occupancy: dict
    occupancy_refined: dict | None
    n_initial: int


def simulate_replicate(roots, phi, t_grid, params: ModelParams,
                       indices: StableIndexVector, domain: SimulationDomain,
                       rng_motion, rng_branch, *, spacing=0.25, refine=False,
                       replicate_id=0, seed=(), population_cap=10_000_000) -> GridReplicate:
    """Simulate one truncated system and accumulate its occupation integrals.

    The sweep grid is the uniform spacing refined by each particle's own
    event times; snapshots are taken at n * t for every t in t_grid.
    With ``refine=True`` the sweep runs at half the spacing and also
    reports the value the full spacing would have produced on the same
    paths, which isolates pure grid error.
    """
    t_grid = tuple(sorted(float(t) for t in t_grid))
    if not t_grid or t_grid[0] <= 0.0 or t_grid[-1] > 1.0:
        raise ParameterDomainError("rescaled time grid must lie in (0, 1]")
    horizon = params.n * t_grid[-1]
    step = spacing / 2.0 if refine else spacing
    grid = occupation_grid(horizon, step)
    snap_idx = []
    for t in t_grid:
        j = int(round(params.n * t / step)) - 1
        if not (0 <= j < grid.size) or abs(grid[j] - params.n * t) > 1e-9 * horizon:
            raise ParameterDomainError(
                f"snapshot time {params.n * t} is not on the sweep grid")
        snap_idx.append(j)
    coarse_mask = None
    if refine:
        coarse_mask = (np.arange(1, grid.size + 1) % 2) == 0
    result = sweep_forest(roots, grid, params.gamma, params.delta_n, indices,
                          rng_motion, rng_branch, phi=phi,
                          snapshot_indices=snap_idx, coarse_mask=coarse_mask,
                          population_cap=population_cap)
    occupancy = result.snapshots
    refined = None
    if refine:
        refined = occupancy
        occupancy = result.snapshots_coarse
    return GridReplicate(
        replicate_id=replicate_id,
        seed=tuple(seed),
        half_widths=domain.half_widths,
        grid_spacing=spacing,
        horizon=horizon,
        occupancy=occupancy,
        occupancy_refined=refined,
        n_initial=int(np.asarray(roots).shape[0]),
    )


DEFAULT_REFINEMENT_TOL = 0.5


def occupation_fluctuation(replicate: GridReplicate, phi, t, params: ModelParams,
                           indices: StableIndexVector, domain: SimulationDomain,
                           mode: CenteringMode, *, refinement_tol=DEFAULT_REFINEMENT_TOL,
                           centering=None) -> FluctuationSample:
    """Normalized, centered occupation integral of one replicate at time t.

    ``centering`` optionally injects a precomputed centering integral for
    the window [0, n*t] (callers amortize the quadrature across
    replicates); when omitted it is computed here.
    """
    horizon_needed = params.n * t
    if replicate.horizon + 1e-9 < horizon_needed:
        raise ParameterDomainError(
            f"replicate covers [0, {replicate.horizon}], needs {horizon_needed}")
    key = None
    for recorded in replicate.occupancy:
        if abs(recorded - horizon_needed) <= 1e-9 * max(1.0, horizon_needed):
            key = recorded
            break
    if key is None:
        raise ParameterDomainError(f"no occupation snapshot at time {horizon_needed}")
    if centering is None:
        centering = centering_integral(horizon_needed, phi, params, indices, domain, mode)
    fn = scaling_Fn(params, indices)
    value = (replicate.occupancy[key] - centering) / fn
    flag = None
    delta = None
    if replicate.occupancy_refined is not None:
        delta = abs(replicate.occupancy_refined[key] - replicate.occupancy[key]) / fn
        if delta > refinement_tol:
            flag = ACCURACY_FLAG_REFINEMENT
    return FluctuationSample(
        n=params.n, t=float(t), value=float(value),
        replicate_id=replicate.replicate_id, seed=replicate.seed,
        half_widths=replicate.half_widths, centering_mode=mode,
        accuracy_flag=flag, refinement_delta=delta,
    )


def time_integrated_statistic(t_grid, samples, h_weights):
    """Trapezoid approximation of the time integral of sample * weight."""
    t_grid = np.asarray(t_grid, dtype=float)
    samples = np.asarray(samples, dtype=float)
    h_weights = np.asarray(h_weights, dtype=float)
    if not (t_grid.shape == samples.shape == h_weights.shape):
        raise ParameterDomainError("time grid, samples and weights must align")
    if t_grid.size < 2 or np.any(np.diff(t_grid) <= 0.0):
        raise ParameterDomainError("need at least two strictly increasing times")
    return float(np.trapezoid(samples * h_weights, t_grid))
