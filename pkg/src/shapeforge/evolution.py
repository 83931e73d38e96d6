"""Elitist multi-objective genetic algorithm over real-valued genomes:
fast non-dominated sorting, crowding distance, binary tournaments,
simulated binary crossover, polynomial mutation, and the (mu+lambda)
generational loop with a full audit trail."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleDesignError
from .latent import SearchBounds

__all__ = [
    "Individual",
    "GaConfig",
    "GaResult",
    "dominates",
    "constrained_dominates",
    "fast_nondominated_sort",
    "crowding_distance",
    "tournament_select",
    "sbx_crossover",
    "polynomial_mutation",
    "run_nsga2",
    "hypervolume_2d",
    "write_generation_csv",
]


@dataclass
class Individual:
    """One candidate: genome plus evaluation results (minimization
    convention for every objective) and the sort bookkeeping."""

    genome: np.ndarray
    objectives: np.ndarray | None = None
    feasible: bool = True
    rank: int = -1
    crowding: float = 0.0

    def __post_init__(self):
        self.genome = np.asarray(self.genome, dtype=np.float64).reshape(-1)
        if self.objectives is not None:
            self.objectives = np.asarray(self.objectives, dtype=np.float64).reshape(-1)

    def copy(self) -> "Individual":
        return Individual(
            genome=self.genome.copy(),
            objectives=None if self.objectives is None else self.objectives.copy(),
            feasible=self.feasible,
            rank=self.rank,
            crowding=self.crowding,
        )


@dataclass
class GaConfig:
    population_size: int = 10
    generations: int = 20
    p_crossover: float = 0.9
    p_mutation: float | None = None  # None -> 1 / genome dimension
    eta_crossover: float = 15.0
    eta_mutation: float = 20.0
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 4 or self.population_size % 2 != 0:
            raise ValueError(
                f"population_size must be even and >= 4, got {self.population_size}"
            )
        if self.generations < 1:
            raise ValueError(f"generations must be >= 1, got {self.generations}")
        for name in ("p_crossover", "p_mutation"):
            p = getattr(self, name)
            if p is not None and not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")
        for name in ("eta_crossover", "eta_mutation"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")

    def mutation_rate(self, dim: int) -> float:
        return self.p_mutation if self.p_mutation is not None else 1.0 / dim


@dataclass
class GaResult:
    """Archive of the run: one population snapshot per generation (index 0
    is the evaluated initial population) and the non-dominated set over
    every individual evaluated anywhere in the run."""

    generations: list
    final_front: list

    @property
    def n_generations(self) -> int:
        return len(self.generations)


def dominates(a, b) -> bool:
    """True iff objective vector ``a`` is no worse than ``b`` everywhere
    and strictly better somewhere (minimization)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"objective lengths differ: {a.shape} vs {b.shape}")
    return bool(np.all(a <= b) and np.any(a < b))


def constrained_dominates(ind_a: Individual, ind_b: Individual) -> bool:
    """Feasible individuals always dominate infeasible ones; two infeasible
    individuals never dominate each other; two feasible ones compare by
    plain objective dominance."""
    if ind_a.feasible and not ind_b.feasible:
        return True
    if not ind_a.feasible:
        return False
    return dominates(ind_a.objectives, ind_b.objectives)


def fast_nondominated_sort(population: list) -> list:
    """Deb's fast non-dominated sort.  Returns fronts as lists of indices
    into ``population`` and writes ``rank`` back onto each individual.
    Feasible individuals must carry finite objective vectors."""
    n = len(population)
    for ind in population:
        if ind.feasible:
            if ind.objectives is None:
                raise ValueError("unevaluated individual in sort")
            if not np.all(np.isfinite(ind.objectives)):
                raise ValueError("non-finite objectives on a feasible individual")

    dominated_by = [[] for _ in range(n)]
    n_dominators = [0] * n
    for i in range(n):
        for j in range(i + 1, n):
            if constrained_dominates(population[i], population[j]):
                dominated_by[i].append(j)
                n_dominators[j] += 1
            elif constrained_dominates(population[j], population[i]):
                dominated_by[j].append(i)
                n_dominators[i] += 1

    fronts = []
    current = [i for i in range(n) if n_dominators[i] == 0]
    while current:
        fronts.append(current)
        nxt = []
        for i in current:
            for j in dominated_by[i]:
                n_dominators[j] -= 1
                if n_dominators[j] == 0:
                    nxt.append(j)
        current = sorted(nxt)
    for rank, front in enumerate(fronts):
        for i in front:
            population[i].rank = rank
    return fronts


def crowding_distance(objectives: np.ndarray) -> np.ndarray:
    """Per-individual crowding for one front, given its (n, m) objective
    matrix.  Boundary individuals of every objective get inf; interior
    ones accumulate (next - prev) / (max - min); objectives with zero
    range contribute nothing."""
    objectives = np.asarray(objectives, dtype=np.float64)
    n, m = objectives.shape
    dist = np.zeros(n, dtype=np.float64)
    if n <= 2:
        dist[:] = np.inf
        return dist
    for j in range(m):
        order = np.argsort(objectives[:, j], kind="stable")
        vals = objectives[order, j]
        span = vals[-1] - vals[0]
        dist[order[0]] = np.inf
        dist[order[-1]] = np.inf
        if span > 0:
            gaps = (vals[2:] - vals[:-2]) / span
            interior = order[1:-1]
            finite = np.isfinite(dist[interior])
            dist[interior[finite]] += gaps[finite]
    return dist


def assign_crowding(population: list, fronts: list) -> None:
    """Write crowding distances per front.  Infeasible fronts (no usable
    objectives) get zero crowding."""
    for front in fronts:
        members = [population[i] for i in front]
        if not all(m.feasible for m in members):
            for m in members:
                m.crowding = 0.0
            continue
        dist = crowding_distance(np.stack([m.objectives for m in members]))
        for m, d in zip(members, dist):
            m.crowding = float(d)


def _crowded_better(population: list, i: int, j: int, rng) -> int:
    """Crowded-comparison winner of indices i, j: lower rank, then larger
    crowding, then a coin flip."""
    a, b = population[i], population[j]
    if a.rank != b.rank:
        return i if a.rank < b.rank else j
    if a.crowding != b.crowding:
        return i if a.crowding > b.crowding else j
    return i if rng.random() < 0.5 else j


def tournament_select(population: list, rng: np.random.Generator) -> int:
    """Binary tournament between two uniformly drawn members: lower rank
    wins, ties go to larger crowding, remaining ties to a coin flip.
    Returns an index."""
    n = len(population)
    i, j = rng.integers(0, n, 2)
    return int(_crowded_better(population, int(i), int(j), rng))


def sbx_crossover(
    p1: np.ndarray,
    p2: np.ndarray,
    bounds: SearchBounds,
    eta_c: float,
    p_c: float,
    rng: np.random.Generator,
):
    """Simulated binary crossover.  With probability 1 - p_c (one draw per
    pair) the children are copies of the parents.  Otherwise every gene
    mixes through a spread factor beta drawn from the SBX density with
    index eta_c, and the two child values swap sides with probability 0.5
    so genes actually recombine across parents instead of each child
    shadowing one parent.  The per-gene child sum equals the parent sum
    exactly before both children are clamped into bounds."""
    p1 = np.asarray(p1, dtype=np.float64)
    p2 = np.asarray(p2, dtype=np.float64)
    if rng.random() >= p_c:
        return p1.copy(), p2.copy()
    u = rng.random(p1.shape[0])
    exponent = 1.0 / (eta_c + 1.0)
    beta = np.where(
        u <= 0.5,
        (2.0 * u) ** exponent,
        (1.0 / (2.0 * (1.0 - u))) ** exponent,
    )
    c1 = 0.5 * ((1.0 + beta) * p1 + (1.0 - beta) * p2)
    c2 = 0.5 * ((1.0 - beta) * p1 + (1.0 + beta) * p2)
    swap = rng.random(p1.shape[0]) < 0.5
    c1, c2 = np.where(swap, c2, c1), np.where(swap, c1, c2)
    return bounds.clip(c1), bounds.clip(c2)


def polynomial_mutation(
    genome: np.ndarray,
    bounds: SearchBounds,
    eta_m: float,
    p_m: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Bounded polynomial mutation (index eta_m).  Each gene mutates with
    probability p_m; the perturbation magnitude shrinks to zero as eta_m
    grows and the result always stays inside bounds."""
    genome = np.asarray(genome, dtype=np.float64).copy()
    span = bounds.upper - bounds.lower
    exponent = 1.0 / (eta_m + 1.0)
    for g in range(genome.shape[0]):
        if rng.random() >= p_m:
            continue
        u = rng.random()
        x = genome[g]
        lo, hi = bounds.lower[g], bounds.upper[g]
        d1 = (x - lo) / span[g]
        d2 = (hi - x) / span[g]
        if u <= 0.5:
            xy = 1.0 - d1
            val = 2.0 * u + (1.0 - 2.0 * u) * xy ** (eta_m + 1.0)
            dq = val**exponent - 1.0
        else:
            xy = 1.0 - d2
            val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * xy ** (eta_m + 1.0)
            dq = 1.0 - val**exponent
        genome[g] = min(max(x + dq * span[g], lo), hi)
    return genome


def _evaluate(genome: np.ndarray, evaluate_fn, cache: dict):
    """Memoized evaluation keyed by the genome's exact bytes."""
    key = genome.tobytes()
    hit = cache.get(key)
    if hit is None:
        hit = evaluate_fn(genome)
        objectives, feasible = hit
        if feasible:
            objectives = np.asarray(objectives, dtype=np.float64).reshape(-1)
            if not np.all(np.isfinite(objectives)):
                raise ValueError("evaluator returned non-finite objectives "
                                 "for a feasible genome")
            hit = (objectives, True)
        else:
            hit = (None, False)
        cache[key] = hit
    return hit


def _make_individual(genome, evaluate_fn, cache) -> Individual:
    objectives, feasible = _evaluate(genome, evaluate_fn, cache)
    return Individual(
        genome=genome,
        objectives=None if objectives is None else objectives.copy(),
        feasible=feasible,
    )


def _environmental_selection(combined: list, mu: int) -> list:
    """Standard (mu+lambda) truncation: fill by whole fronts, break the
    straddling front by descending crowding (stable order)."""
    fronts = fast_nondominated_sort(combined)
    assign_crowding(combined, fronts)
    survivors = []
    for front in fronts:
        if len(survivors) + len(front) <= mu:
            survivors.extend(front)
            continue
        remaining = mu - len(survivors)
        if remaining > 0:
            members = sorted(
                front, key=lambda i: -combined[i].crowding
            )  # Python sort is stable: equal crowding keeps front order
            survivors.extend(members[:remaining])
        break
    return [combined[i] for i in survivors]


def nondominated_subset(population: list) -> list:
    """Feasible, mutually non-dominated members, deduplicated by genome."""
    seen = set()
    unique = []
    for ind in population:
        if not ind.feasible:
            continue
        key = ind.genome.tobytes()
        if key in seen:
            continue
        seen.add(key)
        unique.append(ind)
    front = []
    for ind in unique:
        if not any(
            dominates(other.objectives, ind.objectives)
            for other in unique
            if other is not ind
        ):
            front.append(ind)
    return front


def run_nsga2(
    evaluate_fn,
    bounds: SearchBounds,
    cfg: GaConfig,
    seed_genomes=None,
) -> GaResult:
    """Run the full generational loop.

    ``evaluate_fn(genome) -> (objectives, feasible)`` must be a pure,
    deterministic function returning minimization objectives.  The
    initial population injects ``seed_genomes`` (clamped into bounds)
    first and fills the rest uniformly inside ``bounds``.  Snapshot 0 of
    the returned archive is the evaluated initial population; each later
    snapshot is the survivor set of one (mu+lambda) step, for
    ``cfg.generations`` snapshots in total.  The final front is the
    non-dominated set over every individual evaluated during the run.

    Raises InfeasibleDesignError if generation 0 contains no feasible
    individual.
    """
    rng = np.random.default_rng(cfg.seed)
    mu = cfg.population_size
    cache: dict = {}

    genomes = []
    if seed_genomes is not None:
        for g in seed_genomes:
            genomes.append(bounds.clip(g))
    if len(genomes) > mu:
        genomes = genomes[:mu]
    if len(genomes) < mu:
        fill = bounds.sample_uniform(rng, mu - len(genomes))
        genomes.extend(fill)

    population = [_make_individual(g, evaluate_fn, cache) for g in genomes]
    if not any(ind.feasible for ind in population):
        raise InfeasibleDesignError(
            "every individual in generation 0 is infeasible; "
            "widen the bounds or lower the extraction resolution"
        )
    fronts = fast_nondominated_sort(population)
    assign_crowding(population, fronts)

    archive = [[ind.copy() for ind in population]]
    evaluated = list(population)
    p_m = cfg.mutation_rate(bounds.dim)

    for _ in range(cfg.generations - 1):
        # mating selection over two shuffles: every member enters exactly
        # two binary tournaments, consecutive winners pair up
        winners = []
        for _shuffle in range(2):
            order = rng.permutation(mu)
            for t in range(0, mu, 2):
                winners.append(
                    _crowded_better(population, int(order[t]), int(order[t + 1]), rng)
                )
        offspring = []
        for t in range(0, len(winners), 2):
            c1, c2 = sbx_crossover(
                population[winners[t]].genome,
                population[winners[t + 1]].genome,
                bounds,
                cfg.eta_crossover,
                cfg.p_crossover,
                rng,
            )
            c1 = polynomial_mutation(c1, bounds, cfg.eta_mutation, p_m, rng)
            c2 = polynomial_mutation(c2, bounds, cfg.eta_mutation, p_m, rng)
            offspring.append(_make_individual(c1, evaluate_fn, cache))
            offspring.append(_make_individual(c2, evaluate_fn, cache))
        evaluated.extend(offspring)
        population = _environmental_selection(population + offspring, mu)
        archive.append([ind.copy() for ind in population])

    return GaResult(
        generations=archive, final_front=nondominated_subset(evaluated)
    )


def hypervolume_2d(points, reference) -> float:
    """Dominated hypervolume of a 2-objective minimization set against a
    reference point, by the sorted-staircase rule.  Points not strictly
    below the reference in both coordinates contribute nothing."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    ref = np.asarray(reference, dtype=np.float64).reshape(2)
    pts = pts[np.all(pts < ref, axis=1)]
    if pts.shape[0] == 0:
        return 0.0
    keep = []
    for i in range(pts.shape[0]):
        if not any(
            dominates(pts[j], pts[i]) for j in range(pts.shape[0]) if j != i
        ):
            keep.append(i)
    pts = np.unique(pts[keep], axis=0)  # sorts by x then y, drops duplicates
    hv = 0.0
    prev_y = ref[1]
    for x, y in pts:
        hv += (ref[0] - x) * (prev_y - y)
        prev_y = y
    return float(hv)


def write_generation_csv(path, result: GaResult) -> None:
    """Audit trail: one row per individual per generation.  Floats are
    written with repr so identical runs produce identical bytes."""
    first = result.generations[0][0]
    dim = first.genome.shape[0]
    n_obj = 0
    for snapshot in result.generations:
        for ind in snapshot:
            if ind.objectives is not None:
                n_obj = ind.objectives.shape[0]
                break
        if n_obj:
            break
    header = (
        ["generation", "individual"]
        + [f"genome_{g}" for g in range(dim)]
        + [f"objective_{m}" for m in range(n_obj)]
        + ["rank", "crowding", "feasible"]
    )
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for gen, snapshot in enumerate(result.generations):
            for idx, ind in enumerate(snapshot):
                objectives = (
                    [repr(float(v)) for v in ind.objectives]
                    if ind.objectives is not None
                    else [""] * n_obj
                )
                writer.writerow(
                    [gen, idx]
                    + [repr(float(v)) for v in ind.genome]
                    + objectives
                    + [ind.rank, repr(float(ind.crowding)), int(ind.feasible)]
                )
