"""Evolutionary selection of real/synthetic subset pairs.

For each sub-metric and each of ``n`` equally spaced target values, a
population of disjoint subset pairs drawn from the joint embedding pool
evolves toward the target: fitness is the distance to the target plus a
penalty for subset sizes outside the configured bounds, and a run stops
early once any individual's fitness drops below the stopping threshold.
The winning subset pairs (with provenance) become training inputs for
the score-fusion regressor.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .dataio import EmbeddingSet
from .errors import ValidationError

logger = logging.getLogger(__name__)

STOP_THRESHOLD = 0.005
TOURNAMENT_SIZE = 3


@dataclass
class Individual:
    """A disjoint pair of index sets into the joint embedding pool."""

    d1: frozenset
    d2: frozenset
    fitness: float | None = None

    def __post_init__(self) -> None:
        if self.d1 & self.d2:
            raise ValidationError("subset pair must be disjoint")
        if not self.d1 or not self.d2:
            raise ValidationError("subsets must be nonempty")


@dataclass(frozen=True)
class EvolutionConfig:
    k_lower: int
    k_upper: int
    generations: int = 200
    n_targets: int = 11
    population: int = 50
    mutation_prob: float = 0.2
    crossover_prob: float = 0.8
    stop_threshold: float = STOP_THRESHOLD
    seed: int = 0

    def __post_init__(self) -> None:
        if not 1 <= self.k_lower <= self.k_upper:
            raise ValidationError("need 1 <= k_lower <= k_upper")
        for name in ("mutation_prob", "crossover_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name}={v} outside [0, 1]")
        if self.stop_threshold <= 0:
            raise ValidationError("stop_threshold must be positive")
        if self.population < 2 or self.generations < 1 or self.n_targets < 1:
            raise ValidationError("population, generations, n_targets must be positive")


@dataclass(frozen=True)
class MetricSpec:
    """A sub-metric evaluator over (subset-1 rows, subset-2 rows)."""

    name: str
    fn: Callable[[np.ndarray, np.ndarray], float]
    range_lo: float = 0.0
    range_hi: float = 1.0

    @property
    def value_range(self) -> float:
        return self.range_hi - self.range_lo


@dataclass
class SweepResult:
    metric: str
    target: float
    achieved: float
    fitness: float
    generations: int
    converged: bool
    d1_ids: tuple[str, ...] = field(default_factory=tuple)
    d2_ids: tuple[str, ...] = field(default_factory=tuple)


def dist(a: float, b: float, c: float) -> float:
    """How far c lies outside [a, b]; zero inside.

    Returned as a magnitude on both sides so the size penalty can never
    be negative.
    """
    if a > b:
        raise ValidationError(f"invalid interval [{a}, {b}]")
    if c < a:
        return a - c
    if c > b:
        return c - b
    return 0.0


def _rows(pool: np.ndarray, indices: frozenset) -> np.ndarray:
    # sorted so float reduction order never depends on set iteration order
    return pool[np.array(sorted(indices), dtype=np.intp)]


def fitness(
    ind: Individual,
    metric: MetricSpec,
    target: float,
    cfg: EvolutionConfig,
    pool: np.ndarray,
) -> float:
    """Distance to the target value plus the scaled size penalty."""
    achieved = metric.fn(_rows(pool, ind.d1), _rows(pool, ind.d2))
    penalty = (
        (dist(cfg.k_lower, cfg.k_upper, len(ind.d1))
         + dist(cfg.k_lower, cfg.k_upper, len(ind.d2)))
        / max(cfg.k_upper - cfg.k_lower, 1)
        * metric.value_range
    )
    return abs(target - achieved) + penalty


def _evaluate(ind: Individual, metric: MetricSpec, target: float,
              cfg: EvolutionConfig, pool: np.ndarray) -> float:
    if ind.fitness is None:
        ind.fitness = fitness(ind, metric, target, cfg, pool)
    return ind.fitness


def _random_individual(pool_size: int, cfg: EvolutionConfig,
                       rng: np.random.Generator) -> Individual:
    s1 = min(int(rng.integers(cfg.k_lower, cfg.k_upper + 1)), pool_size - 1)
    s2 = min(int(rng.integers(cfg.k_lower, cfg.k_upper + 1)), pool_size - s1)
    perm = rng.permutation(pool_size)
    return Individual(d1=frozenset(perm[:s1].tolist()),
                      d2=frozenset(perm[s1:s1 + s2].tolist()))


def _tournament(population: list[Individual], rng: np.random.Generator) -> Individual:
    picks = rng.integers(0, len(population), size=TOURNAMENT_SIZE)
    return min((population[i] for i in picks), key=lambda ind: ind.fitness)


def _crossover(a: Individual, b: Individual, rng: np.random.Generator) -> Individual:
    """Uniform membership exchange with disjointness repair.

    An index claimed by both child subsets stays on the side whose donor
    parent was fitter (lower fitness); the other side drops it.
    """
    sides: list[dict[int, float]] = []
    for getter in (lambda ind: ind.d1, lambda ind: ind.d2):
        chosen: dict[int, float] = {}
        for idx in sorted(getter(a) | getter(b)):
            donors = [p.fitness for p in (a, b) if idx in getter(p)]
            if len(donors) == 2 or rng.random() < 0.5:
                chosen[idx] = min(donors)
        sides.append(chosen)
    d1, d2 = sides
    for idx in sorted(set(d1) & set(d2)):
        if d1[idx] <= d2[idx]:
            del d2[idx]
        else:
            del d1[idx]
    if not d1 or not d2:
        # degenerate exchange: fall back to the fitter parent's pair
        parent = a if a.fitness <= b.fitness else b
        return Individual(d1=parent.d1, d2=parent.d2)
    return Individual(d1=frozenset(d1), d2=frozenset(d2))


def _mutate(ind: Individual, pool_size: int, rng: np.random.Generator) -> Individual:
    d1, d2 = set(ind.d1), set(ind.d2)
    target = d1 if rng.integers(2) == 0 else d2
    op = rng.integers(3)
    used = d1 | d2
    free = np.setdiff1d(np.arange(pool_size), np.fromiter(used, dtype=np.intp),
                        assume_unique=False)
    if op == 0 and free.size:  # add
        target.add(int(free[rng.integers(free.size)]))
    elif op == 1 and len(target) > 1:  # remove
        members = sorted(target)
        target.remove(members[rng.integers(len(members))])
    elif op == 2 and free.size:  # swap one member for an unused index
        members = sorted(target)
        target.remove(members[rng.integers(len(members))])
        target.add(int(free[rng.integers(free.size)]))
    return Individual(d1=frozenset(d1), d2=frozenset(d2))


def _evolve_one(
    pool: np.ndarray,
    metric: MetricSpec,
    target: float,
    cfg: EvolutionConfig,
    rng: np.random.Generator,
) -> tuple[Individual, int, bool]:
    population = [_random_individual(pool.shape[0], cfg, rng)
                  for _ in range(cfg.population)]
    for ind in population:
        _evaluate(ind, metric, target, cfg, pool)

    generation = 0
    for generation in range(cfg.generations):
        best = min(population, key=lambda ind: ind.fitness)
        logger.debug(
            "%s target=%.4f generation=%d best_fitness=%.6f",
            metric.name, target, generation, best.fitness,
        )
        if best.fitness < cfg.stop_threshold:
            logger.info(
                "%s target=%.4f converged at generation %d (fitness %.6f)",
                metric.name, target, generation, best.fitness,
            )
            return best, generation, True
        offspring = [Individual(d1=best.d1, d2=best.d2, fitness=best.fitness)]
        while len(offspring) < cfg.population:
            p1 = _tournament(population, rng)
            p2 = _tournament(population, rng)
            if rng.random() < cfg.crossover_prob:
                child = _crossover(p1, p2, rng)
            else:
                child = Individual(d1=p1.d1, d2=p1.d2, fitness=p1.fitness)
            if rng.random() < cfg.mutation_prob:
                child = _mutate(child, pool.shape[0], rng)
            _evaluate(child, metric, target, cfg, pool)
            offspring.append(child)
        population = offspring

    best = min(population, key=lambda ind: ind.fitness)
    logger.info(
        "%s target=%.4f exhausted %d generations (best fitness %.6f)",
        metric.name, target, cfg.generations, best.fitness,
    )
    return best, cfg.generations, best.fitness < cfg.stop_threshold


def run_sweep(
    real: EmbeddingSet,
    synth: EmbeddingSet,
    metrics: Sequence[MetricSpec],
    cfg: EvolutionConfig,
) -> list[SweepResult]:
    """Run the target sweep for every metric over the joint pool.

    Pool indices 0..len(real)-1 are real rows, the rest synthetic; result
    provenance ids carry an R:/S: prefix accordingly. Deterministic for a
    given config seed.
    """
    if real.dim != synth.dim:
        raise ValidationError("embedding sets must share dimensionality")
    pool = np.vstack([real.rows, synth.rows]).astype(np.float64)
    if 2 * cfg.k_lower > pool.shape[0]:
        raise ValidationError(
            f"k_lower={cfg.k_lower} infeasible for pool of {pool.shape[0]}"
        )
    pool_ids = [f"R:{i}" for i in real.ids] + [f"S:{i}" for i in synth.ids]

    seed_seq = np.random.SeedSequence(cfg.seed)
    children = seed_seq.spawn(len(metrics) * cfg.n_targets)
    results = []
    task = 0
    for metric in metrics:
        targets = np.linspace(metric.range_lo, metric.range_hi, cfg.n_targets)
        for target in targets:
            rng = np.random.default_rng(children[task])
            task += 1
            best, generations, converged = _evolve_one(pool, metric, float(target), cfg, rng)
            achieved = metric.fn(_rows(pool, best.d1), _rows(pool, best.d2))
            results.append(
                SweepResult(
                    metric=metric.name,
                    target=float(target),
                    achieved=float(achieved),
                    fitness=float(best.fitness),
                    generations=generations,
                    converged=converged,
                    d1_ids=tuple(pool_ids[i] for i in sorted(best.d1)),
                    d2_ids=tuple(pool_ids[i] for i in sorted(best.d2)),
                )
            )
    return results


def save_sweep_results(results: Sequence[SweepResult], path: str | Path) -> None:
    """One JSON object per line, floats at full precision."""
    lines = []
    for r in results:
        lines.append(json.dumps({
            "metric": r.metric,
            "target": r.target,
            "achieved": r.achieved,
            "fitness": r.fitness,
            "generations": r.generations,
            "converged": r.converged,
            "d1": list(r.d1_ids),
            "d2": list(r.d2_ids),
        }, separators=(",", ":")))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
