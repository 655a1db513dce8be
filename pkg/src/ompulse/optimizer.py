"""Genetic-algorithm search for drive parameters that maximize the
cycle-averaged form factor of the input-output loop."""
from __future__ import annotations

import functools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import analysis, drives, integrator
from .model import OmParams


@dataclass(frozen=True)
class SearchSpace:
    """Box bounds for the drive parameter vector.

    names/lower/upper are parallel; d = 2 for (square-)sinusoidal drives
    (e0, omega) and d = 3 for the Gaussian train (e0, t_s, sigma).
    """

    names: tuple
    lower: tuple
    upper: tuple

    def __post_init__(self):
        if not (len(self.names) == len(self.lower) == len(self.upper)):
            raise ValueError("names/lower/upper must have equal length")
        for lo, hi in zip(self.lower, self.upper):
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValueError("bounds must be finite with lower < upper")

    @property
    def dim(self) -> int:
        return len(self.names)

    def clip(self, theta: np.ndarray) -> np.ndarray:
        return np.clip(theta, self.lower, self.upper)

    def contains(self, theta) -> bool:
        return bool(np.all(theta >= self.lower) and np.all(theta <= self.upper))

    @classmethod
    def for_drive(cls, kind: str, lower, upper) -> "SearchSpace":
        names = {
            "gaussian_train": ("e0", "t_s", "sigma"),
            "sinusoidal": ("e0", "omega"),
            "square_sinusoidal": ("e0", "omega"),
        }.get(kind)
        if names is None:
            raise ValueError("no built-in search space for drive %r" % kind)
        return cls(names=names, lower=tuple(lower), upper=tuple(upper))


@dataclass(frozen=True)
class GaConfig:
    """Knobs of the real-coded genetic algorithm.

    The population defaults to 50 + 10 d; mutation is per-gene Gaussian
    with standard deviation mutation_sigma times the bound range. cycles
    is the number of drive periods averaged by the cost function.
    """

    population: int | None = None
    generations: int = 100
    mutation_sigma: float = 0.1
    crossover_rate: float = 0.8
    elitism: int = 2
    seed: int = 0
    cycles: int = 5
    skip_cycles: int = 0
    tournament: int = 3
    blend_alpha: float = 0.5
    target_cost: float | None = None  # stop early once reached

    def __post_init__(self):
        if self.population is not None and self.population < 4:
            raise ValueError("population must be at least 4")
        if self.generations < 1:
            raise ValueError("generations must be at least 1")
        if not (0.0 < self.mutation_sigma < 1.0):
            raise ValueError("mutation_sigma must be in (0, 1)")

    def population_for(self, dim: int) -> int:
        return self.population if self.population is not None else 50 + 10 * dim


@dataclass
class OptResult:
    theta_star: np.ndarray
    best_cost: float
    cost_history: list
    theta_history: list
    cycle_form_factors: list
    evaluations: int


def drive_from_theta(kind: str, theta) -> drives.DriveSpec:
    if kind == "gaussian_train":
        return drives.DriveSpec(kind=kind, e0=float(theta[0]),
                                t_s=float(theta[1]), sigma=float(theta[2]))
    if kind in ("sinusoidal", "square_sinusoidal"):
        return drives.DriveSpec(kind=kind, e0=float(theta[0]),
                                omega=float(theta[1]))
    raise ValueError("no theta mapping for drive %r" % kind)


def cycle_form_factors(theta, kind: str, params: OmParams,
                       cfg: GaConfig, output: str = "photon",
                       int_cfg: integrator.IntegratorConfig | None = None) -> list:
    """Per-cycle form factors of the drive built from theta."""
    spec = drive_from_theta(kind, theta)
    T = drives.period(spec)
    horizon = (cfg.cycles + cfg.skip_cycles) * T
    traj = integrator.integrate(params, spec, horizon=horizon, cfg=int_cfg)
    curves = analysis.normalize(traj, output, skip_cycles=cfg.skip_cycles)
    return [analysis.form_factor(c) for c in curves]


def cost(theta, kind: str, params: OmParams, cfg: GaConfig,
         output: str = "photon",
         int_cfg: integrator.IntegratorConfig | None = None) -> float:
    """Negative cycle-averaged form factor; failed runs score 0.

    A failed integration (stiff corner of parameter space) is treated as
    a memoryless response rather than aborting the search.
    """
    try:
        fs = cycle_form_factors(theta, kind, params, cfg, output, int_cfg)
    except (integrator.IntegrationError, analysis.DegenerateSignalError):
        return 0.0
    return -float(np.mean(fs))


def _serial_map(fn, seq):
    return [fn(x) for x in seq]


def ga_optimize(space: SearchSpace, objective, cfg: GaConfig,
                eval_map=_serial_map) -> OptResult:
    """Generational GA: tournament selection, blend crossover, per-gene
    Gaussian mutation, elitism. Deterministic for a fixed seed.

    objective maps a parameter vector (within bounds) to a scalar cost to
    be minimized. eval_map may fan candidate evaluations out to a worker
    pool; all randomness for a generation is drawn before evaluation, so
    the result is identical under any worker count.
    """
    rng = np.random.default_rng(cfg.seed)
    d = space.dim
    pop_size = cfg.population_for(d)
    lower = np.asarray(space.lower, dtype=float)
    upper = np.asarray(space.upper, dtype=float)
    span = upper - lower

    pop = lower + rng.random((pop_size, d)) * span
    costs = np.array(eval_map(objective, list(pop)))
    evaluations = pop_size

    history = []
    theta_history = []
    for _ in range(cfg.generations):
        order = np.argsort(costs)
        best = float(costs[order[0]])
        history.append(best)
        theta_history.append(pop[order[0]].copy())
        if cfg.target_cost is not None and best <= cfg.target_cost:
            break
        # mutation/crossover randomness for the whole generation is drawn
        # up front, so candidate evaluation order cannot perturb the run
        n_children = pop_size - cfg.elitism
        pick = rng.integers(0, pop_size, size=(n_children, 2, cfg.tournament))
        do_cross = rng.random(n_children) < cfg.crossover_rate
        blend = rng.uniform(-cfg.blend_alpha, 1.0 + cfg.blend_alpha,
                            size=(n_children, d))
        noise = rng.normal(0.0, cfg.mutation_sigma, size=(n_children, d)) * span

        children = np.empty((n_children, d))
        for c in range(n_children):
            p1 = pick[c, 0][np.argmin(costs[pick[c, 0]])]
            p2 = pick[c, 1][np.argmin(costs[pick[c, 1]])]
            if do_cross[c]:
                child = blend[c] * pop[p1] + (1.0 - blend[c]) * pop[p2]
            else:
                child = pop[p1].copy()
            children[c] = np.clip(child + noise[c], lower, upper)

        elite_idx = order[:cfg.elitism]
        new_pop = np.vstack([pop[elite_idx], children])
        new_costs = np.concatenate([
            costs[elite_idx], eval_map(objective, list(children))])
        evaluations += n_children
        pop, costs = new_pop, new_costs

    order = np.argsort(costs)
    best_theta = pop[order[0]].copy()
    best = float(costs[order[0]])
    if not history or best < history[-1]:
        history.append(best)
        theta_history.append(best_theta.copy())
    return OptResult(theta_star=best_theta, best_cost=best,
                     cost_history=history, theta_history=theta_history,
                     cycle_form_factors=[], evaluations=evaluations)


def optimize_drive(kind: str, space: SearchSpace, params: OmParams,
                   cfg: GaConfig, output: str = "photon",
                   int_cfg: integrator.IntegratorConfig | None = None,
                   jobs: int = 1) -> OptResult:
    """Run the GA against the simulator cost for one drive family.

    With jobs > 1, candidate evaluations fan out to a process pool; the
    search result is independent of the worker count.
    """
    objective = functools.partial(cost, kind=kind, params=params, cfg=cfg,
                                  output=output, int_cfg=int_cfg)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            result = ga_optimize(space, objective, cfg,
                                 eval_map=lambda fn, seq: list(pool.map(fn, seq)))
    else:
        result = ga_optimize(space, objective, cfg)
    result.cycle_form_factors = cycle_form_factors(
        result.theta_star, kind, params, cfg, output, int_cfg)
    return result
