"""Event-driven simulation of the degenerate branching particle system.

Particles carry exponential lifetimes with a fixed splitting rate; at
death a particle leaves either two children (probability decaying
exponentially in its age) or none.  Children restart at age zero from
the parent's death position.  Motion between recorded times is sampled
exactly from the stable law, one increment per queried interval.

This module holds the per-particle object representation used at desk
scale and in tests.  The bulk Monte Carlo pipeline runs on the flat
array engine in ``forest`` instead, which implements the same process.
"""

import bisect
import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ParameterDomainError, PopulationExplosionError
from .stable_motion import StableIndexVector, sample_stable_increment

DEFAULT_POPULATION_CAP = 10_000_000


@dataclass(frozen=True)
class ModelParams:
    """One experiment scale: splitting rate, degeneration schedule, scale n."""

    gamma: float
    theta: float
    kappa: float
    n: int

    def __post_init__(self):
        if self.gamma <= 0.0:
            raise ParameterDomainError("gamma must be positive")
        if self.theta <= 0.0:
            raise ParameterDomainError("theta must be positive")
        if not (0.0 < self.kappa < 1.0):
            raise ParameterDomainError("kappa must lie in (0, 1)")
        if self.n < 1:
            raise ParameterDomainError("scale n must be >= 1")
        if self.delta_n >= self.gamma:
            raise ParameterDomainError(
                f"degeneration rate {self.delta_n:.6g} must stay below gamma {self.gamma:.6g}")

    @property
    def delta_n(self) -> float:
        """theta * n**(-kappa); tends to zero along the scale schedule."""
        return self.theta * float(self.n) ** (-self.kappa)


@dataclass(frozen=True)
class OffspringLaw:
    """Offspring count at a split: 2 with probability exp(-delta*age)/2, else 0."""

    delta: float

    def __post_init__(self):
        if self.delta < 0.0:
            raise ParameterDomainError("delta must be nonnegative")

    def p_two(self, age):
        age = np.asarray(age, dtype=float)
        if np.any(age < 0.0):
            raise ParameterDomainError("age must be nonnegative")
        return 0.5 * np.exp(-self.delta * age)

    def mean_offspring(self, age):
        return 2.0 * self.p_two(age)

    def pgf(self, s, age):
        """Generating function of the offspring count at the given age."""
        p2 = self.p_two(age)
        return (1.0 - p2) + p2 * np.asarray(s, dtype=float) ** 2

    def sample(self, age, rng):
        return 2 if rng.random() < float(self.p_two(age)) else 0


def sample_offspring_count(age, delta, rng):
    """Offspring count drawn at a split happening at the given age."""
    return OffspringLaw(delta).sample(age, rng)


@dataclass
class Particle:
    id: int
    parent: int | None
    birth_time: float
    birth_position: np.ndarray
    death_time: float | None = None       # None = alive at the horizon
    n_offspring: int | None = None        # set at death: 0 or 2
    path_times: list = field(default_factory=list)
    path_positions: list = field(default_factory=list)

    def __post_init__(self):
        self.birth_position = np.asarray(self.birth_position, dtype=float)
        if not self.path_times:
            self.path_times = [self.birth_time]
            self.path_positions = [self.birth_position.copy()]

    @property
    def recorded_path(self):
        return list(zip(self.path_times, self.path_positions))

    def alive_at(self, s: float) -> bool:
        if s < self.birth_time:
            return False
        return self.death_time is None or s < self.death_time


@dataclass
class TreeRealization:
    """One sampled genealogy (possibly several roots) up to a horizon."""

    particles: list
    horizon: float
    indices: StableIndexVector | None = None
    seed: object = None

    def roots(self):
        return [p for p in self.particles if p.parent is None]

    def alive_ids(self, s: float):
        return [p.id for p in self.particles if p.alive_at(s)]

    def population_at(self, s: float) -> int:
        return len(self.alive_ids(s))


@dataclass(frozen=True)
class SimulationDomain:
    """Axis-aligned truncation box for the initial Poisson field."""

    half_widths: tuple
    intensity: float = 1.0

    def __post_init__(self):
        hw = tuple(float(x) for x in self.half_widths)
        if len(hw) < 1 or any(x <= 0.0 for x in hw):
            raise ParameterDomainError("box half-widths must be positive")
        if self.intensity <= 0.0:
            raise ParameterDomainError("intensity must be positive")
        object.__setattr__(self, "half_widths", hw)

    @property
    def d(self) -> int:
        return len(self.half_widths)

    @property
    def volume(self) -> float:
        return math.prod(2.0 * x for x in self.half_widths)


def expected_population(s, gamma, delta):
    """Mean number of descendants of one age-zero ancestor alive at time s.

    Solves the renewal equation for exponential lifetimes at rate gamma
    and age-dependent mean offspring exp(-delta*age); equivalently
    gamma/(gamma-delta) e^{-delta s} - delta/(gamma-delta) e^{-gamma s}.
    """
    if delta < 0.0 or delta >= gamma:
        raise ParameterDomainError("need 0 <= delta < gamma")
    s = np.asarray(s, dtype=float)
    if np.any(s < 0.0):
        raise ParameterDomainError("time must be nonnegative")
    bracket = 1.0 - (delta / (gamma - delta)) * np.expm1(-(gamma - delta) * s)
    out = bracket * np.exp(-delta * s)
    return float(out) if out.ndim == 0 else out


def expected_population_integral(T, gamma, delta):
    """Closed form of the time integral of expected_population over [0, T]."""
    if delta < 0.0 or delta >= gamma:
        raise ParameterDomainError("need 0 <= delta < gamma")
    if T < 0.0:
        raise ParameterDomainError("time must be nonnegative")
    if delta == 0.0:
        return float(T)
    a = gamma / (gamma - delta)
    b = -delta / (gamma - delta)
    return float(a * (-np.expm1(-delta * T)) / delta + b * (-np.expm1(-gamma * T)) / gamma)


def sample_initial_field(domain: SimulationDomain, rng):
    """Poisson number of uniform initial positions in the box (birth time 0)."""
    count = rng.poisson(domain.intensity * domain.volume)
    lo = -np.asarray(domain.half_widths)
    hi = np.asarray(domain.half_widths)
    return rng.uniform(lo, hi, size=(count, domain.d))


def simulate_tree(root_birth, horizon, params: ModelParams, indices: StableIndexVector,
                  rng, population_cap=DEFAULT_POPULATION_CAP) -> TreeRealization:
    """Simulate one genealogy from a single ancestor up to the horizon.

    Death events are processed in chronological order; at each death the
    dying particle's position is advanced by exact stable increments
    from its last recorded point, and surviving children restart there
    at age zero.  ``root_birth`` is a (time, position) pair.
    """
    birth_time, birth_position = root_birth
    birth_time = float(birth_time)
    if horizon <= birth_time:
        raise ParameterDomainError("horizon must exceed the root birth time")
    delta = params.delta_n
    law = OffspringLaw(delta)

    particles: list[Particle] = []
    events: list[tuple[float, int]] = []

    def create(parent_id, t0, x0):
        pid = len(particles)
        if pid >= population_cap:
            raise PopulationExplosionError(
                f"live population exceeded the cap of {population_cap}")
        particles.append(Particle(pid, parent_id, t0, np.asarray(x0, dtype=float)))
        lifetime = rng.exponential(1.0 / params.gamma)
        heapq.heappush(events, (t0 + lifetime, pid))
        return pid

    create(None, birth_time, birth_position)
    while events:
        death, pid = heapq.heappop(events)
        if death > horizon:
            continue  # alive at the horizon; death stays open
        p = particles[pid]
        dt = death - p.path_times[-1]
        if dt > 0.0:
            step = np.array([
                sample_stable_increment(a, dt, rng, size=()) for a in indices.alphas
            ])
            pos = p.path_positions[-1] + step
            p.path_times.append(death)
            p.path_positions.append(pos)
        else:  # lifetime underflowed an ulp: keep the path strictly increasing
            pos = p.path_positions[-1]
        p.death_time = death
        p.n_offspring = law.sample(death - p.birth_time, rng)
        for _ in range(p.n_offspring):
            create(pid, death, pos)
    return TreeRealization(particles, float(horizon), indices)


def positions_at(tree: TreeRealization, s: float, rng):
    """Positions of all particles alive at time s, extending paths as needed.

    New positions are sampled by one exact stable increment from the
    nearest earlier recorded time and cached on the particle, so
    repeated queries at the same time return the stored value
    bit-for-bit and never resample.  Querying strictly increasing times
    keeps the sampled path jointly exact; out-of-order refinement keeps
    only the single-time marginals exact.
    """
    if not (0.0 <= s <= tree.horizon):
        raise ParameterDomainError(f"query time {s} outside [0, {tree.horizon}]")
    if tree.indices is None:
        raise ParameterDomainError("tree has no attached index vector")
    alphas = tree.indices.alphas
    out = []
    for p in tree.particles:
        if not p.alive_at(s):
            continue
        i = bisect.bisect_right(p.path_times, s) - 1
        if i >= 0 and p.path_times[i] == s:
            out.append((p.id, p.path_positions[i].copy()))
            continue
        t0 = p.path_times[i]
        x0 = p.path_positions[i]
        step = np.array([sample_stable_increment(a, s - t0, rng, size=()) for a in alphas])
        pos = x0 + step
        p.path_times.insert(i + 1, s)
        p.path_positions.insert(i + 1, pos)
        out.append((p.id, pos.copy()))
    return out
