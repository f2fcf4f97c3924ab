"""Flat-array engine simulating many independent branching trees at once.

Per-particle state lives in numpy arrays holding only the currently
alive population.  The sweep advances through an increasing time grid;
death events falling inside a grid cell are processed first, in
generation waves, so every stable increment is sampled forward in time
from the particle's most recent recorded point.  Branch events and grid
queries therefore interleave in chronological order and the sampled
positions carry the exact joint law of the particle system.

The occupation accumulator collects, per particle, the trapezoid of the
test-function value over the particle's own knots (birth, grid times
while alive, death).  Summed over particles this equals the trapezoid of
the population's test-function mass on a grid augmented with each
particle's own event times.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import ParameterDomainError, PopulationExplosionError
from .stable_motion import StableIndexVector, sample_stable_increment

DEFAULT_POPULATION_CAP = 10_000_000


@dataclass
class SweepResult:
    snapshots: dict                 # grid time -> cumulative occupation integral
    snapshots_coarse: dict | None   # same, restricted to the coarse knots
    total_created: int
    peak_alive: int
    alive_per_root: np.ndarray | None = None
    phi_per_root: np.ndarray | None = None
    increment_times: np.ndarray | None = None
    increment_steps: np.ndarray | None = None


def occupation_grid(horizon: float, spacing: float) -> np.ndarray:
    """Uniform grid (0, horizon] with the given spacing; must tile exactly."""
    if horizon <= 0.0 or spacing <= 0.0:
        raise ParameterDomainError("horizon and spacing must be positive")
    steps = round(horizon / spacing)
    if abs(steps * spacing - horizon) > 1e-9 * max(1.0, horizon):
        raise ParameterDomainError(
            f"spacing {spacing} does not tile the horizon {horizon}")
    return np.arange(1, steps + 1) * spacing


def _increments(alphas, dt, rng):
    out = np.empty((dt.size, len(alphas)))
    for k, alpha in enumerate(alphas):
        out[:, k] = sample_stable_increment(alpha, dt, rng)
    return out


def sweep_forest(roots, grid, gamma, delta, indices: StableIndexVector,
                 rng_motion, rng_branch, *, phi=None, snapshot_indices=(),
                 coarse_mask=None, root_stats_index=None,
                 population_cap=DEFAULT_POPULATION_CAP,
                 increment_budget=0) -> SweepResult:
    """Run one forest from time 0 through the last grid time.

    roots            (R, d) initial positions, all born at time 0.
    grid             strictly increasing query times, first one > 0.
    phi              optional test function; enables occupation accumulation.
    snapshot_indices grid indices at which the cumulative occupation
                     integral is recorded.
    coarse_mask      optional bool-per-grid-index; when given, a second
                     accumulator restricted to the masked knots (plus all
                     birth/death events) is maintained, giving the value a
                     coarser grid would have produced on the same paths.
    root_stats_index optional grid index at which per-root alive counts
                     (and test-function sums, if phi is given) are taken.
    increment_budget harvest up to this many (dt, first-coordinate step)
                     pairs from grid advances, for distribution checks.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0 or grid[0] <= 0.0 or np.any(np.diff(grid) <= 0.0):
        raise ParameterDomainError("grid must be strictly increasing and start after 0")
    if gamma <= 0.0 or delta < 0.0:
        raise ParameterDomainError("need gamma > 0 and delta >= 0")

    roots = np.asarray(roots, dtype=float)
    if roots.ndim != 2:
        roots = roots.reshape(-1, indices.d)
    n_roots = roots.shape[0]
    alphas = indices.alphas
    track_phi = phi is not None
    coarse = coarse_mask is not None
    snapshot_set = set(int(i) for i in snapshot_indices)
    harvest_dt, harvest_dx = [], []
    harvested = 0

    pos = roots.copy()
    birth = np.zeros(n_roots)
    t_last = np.zeros(n_roots)
    death = rng_branch.exponential(1.0 / gamma, n_roots)
    root_of = np.arange(n_roots, dtype=np.int64)
    phi_last = phi.value(pos) if track_phi else None
    if track_phi and n_roots == 0:
        phi_last = np.zeros(0)
    if coarse:
        t_base = t_last.copy()
        phi_base = phi_last.copy() if track_phi else None

    acc = 0.0
    acc_coarse = 0.0
    total_created = n_roots
    peak_alive = n_roots
    snapshots = {}
    snapshots_coarse = {} if coarse else None
    alive_per_root = None
    phi_per_root = None

    for j, g in enumerate(grid):
        # process deaths scheduled up to g, one generation wave at a time
        while pos.shape[0] and (death <= g).any():
            dying = death <= g
            dt = death[dying] - t_last[dying]
            pos_d = pos[dying].copy()
            stepping = dt > 0.0  # dt = 0 only when a lifetime underflows an ulp
            if stepping.any():
                pos_d[stepping] += _increments(alphas, dt[stepping], rng_motion)
            if track_phi:
                phi_d = phi.value(pos_d)
                acc += 0.5 * float(np.dot(dt, phi_last[dying] + phi_d))
                if coarse:
                    dtc = death[dying] - t_base[dying]
                    acc_coarse += 0.5 * float(np.dot(dtc, phi_base[dying] + phi_d))
            age = death[dying] - birth[dying]
            two = rng_branch.random(age.size) < 0.5 * np.exp(-delta * age)
            parents = np.nonzero(two)[0]
            n_children = 2 * parents.size
            total_created += n_children
            if total_created > population_cap:
                raise PopulationExplosionError(
                    f"population exceeded the cap of {population_cap}")
            child_pos = np.repeat(pos_d[parents], 2, axis=0)
            child_birth = np.repeat(death[dying][parents], 2)
            child_death = child_birth + rng_branch.exponential(1.0 / gamma, n_children)
            child_root = np.repeat(root_of[dying][parents], 2)

            keep = ~dying
            pos = np.concatenate([pos[keep], child_pos])
            birth = np.concatenate([birth[keep], child_birth])
            t_last = np.concatenate([t_last[keep], child_birth])
            death = np.concatenate([death[keep], child_death])
            root_of = np.concatenate([root_of[keep], child_root])
            if track_phi:
                child_phi = np.repeat(phi_d[parents], 2)
                phi_last = np.concatenate([phi_last[keep], child_phi])
            if coarse:
                t_base = np.concatenate([t_base[keep], child_birth])
                if track_phi:
                    phi_base = np.concatenate([phi_base[keep], child_phi])
            peak_alive = max(peak_alive, pos.shape[0])

        # advance every live particle to the grid time
        dt = g - t_last
        moving = dt > 0.0
        if moving.any():
            steps = _increments(alphas, dt[moving], rng_motion)
            pos[moving] += steps
            if harvested < increment_budget:
                take = min(increment_budget - harvested, steps.shape[0])
                harvest_dt.append(dt[moving][:take].copy())
                harvest_dx.append(steps[:take, 0].copy())
                harvested += take
        if track_phi:
            phi_now = phi.value(pos) if pos.shape[0] else np.zeros(0)
            acc += 0.5 * float(np.dot(dt, phi_last + phi_now))
            phi_last = phi_now
        t_last = np.full(pos.shape[0], g)
        if coarse and coarse_mask[j]:
            if track_phi:
                acc_coarse += 0.5 * float(np.dot(g - t_base, phi_base + phi_last))
                phi_base = phi_last.copy()
            t_base = t_last.copy()

        if j in snapshot_set:
            snapshots[float(g)] = acc
            if coarse:
                snapshots_coarse[float(g)] = acc_coarse
        if root_stats_index is not None and j == root_stats_index:
            alive_per_root = np.bincount(root_of, minlength=n_roots)
            if track_phi:
                phi_per_root = np.bincount(root_of, weights=phi_last, minlength=n_roots)

    result = SweepResult(
        snapshots=snapshots,
        snapshots_coarse=snapshots_coarse,
        total_created=total_created,
        peak_alive=peak_alive,
        alive_per_root=alive_per_root,
        phi_per_root=phi_per_root,
    )
    if harvested:
        result.increment_times = np.concatenate(harvest_dt)
        result.increment_steps = np.concatenate(harvest_dx)
    return result
