"""Evolution loops: standard EA, NSGA-II, and MAP-Elites over a shared
create-children / evaluate / select-survivors structure.

All randomness derives from the run seed: children draw their mutation
noise from per-child seeded substreams, so results are identical for any
worker count, and evaluation is pure, so workers only ever compute.
"""
from __future__ import annotations

import logging
import multiprocessing
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .aurora import AuroraConfig, Autoencoder, aurora_schedule, path_to_vector
from .descriptors import (GridSpec, bin_index, default_grid, descriptor_lis,
                          descriptor_st, descriptor_wh)
from .fitness import (TargetPointSet, angle_error, default_target_points,
                      lift, nearest_point_distances, objective_scores,
                      scalar_score, step_length)
from .genome import EncodingConfig, Genome, decode, mutate, random_genome
from .kinematics import path_metrics, solve

log = logging.getLogger(__name__)

WORKERS_ENV_VAR = "LINKSYNTH_WORKERS"

ALGORITHMS = ("ea", "nsga2", "me")

# seed-stream tags so init, mutation, selection and training never collide
_STREAM_CHILD = 1
_STREAM_RUN = 2
_STREAM_AE_INIT = 3
_STREAM_AE_TRAIN = 4


def workers_from_env(default: int = 1) -> int:
    value = os.environ.get(WORKERS_ENV_VAR, "")
    return int(value) if value.strip() else default


@dataclass
class Evaluation:
    """One evaluated genome: fitness, optional descriptor, and a small
    summary of the foot path for archives and UIs."""

    genome: Genome
    fitness: float
    objectives: tuple
    descriptor: Optional[tuple]
    error_count: int
    summary: dict
    path_vector: Optional[np.ndarray] = None


@dataclass(frozen=True)
class Evaluator:
    """Pure genome -> Evaluation mapping; safe to ship to worker processes."""

    encoding: EncodingConfig
    steps: int
    targets: TargetPointSet
    fitness_id: str
    space: Optional[str] = None
    keep_path_vectors: bool = False

    def evaluate(self, genome: Genome) -> Evaluation:
        linkage = decode(genome, self.encoding)
        trace = solve(linkage, self.steps)
        err = trace.error_count
        metrics = path_metrics(trace)
        f_s = step_length(trace)
        f_l = lift(trace)
        f_ae = angle_error(trace)
        if self.fitness_id == "fp":
            d_step = float(nearest_point_distances(self.targets.step_points,
                                                   trace.foot_path).sum())
            d_lift = float(nearest_point_distances(self.targets.lift_points,
                                                   trace.foot_path).sum())
            fitness = -(d_step + d_lift) - err
            objectives = (-d_step - err, -d_lift - err)
        else:
            fitness = -0.8 * f_s - 0.2 * f_l + f_ae + err
            objectives = (-f_s + f_ae + err, -f_l + f_ae + err)

        descriptor = None
        if self.space == "wh":
            descriptor = descriptor_wh(trace)
        elif self.space == "lis":
            descriptor = descriptor_lis(linkage, trace)
        elif self.space == "st":
            descriptor = descriptor_st(linkage, trace)

        vector = None
        if self.keep_path_vectors and err == 0 and len(trace.foot_path) > 0:
            vector = path_to_vector(trace)

        summary = {"width": metrics.width, "height": metrics.height,
                   "min_y": metrics.min_y, "step_length": f_s, "lift": f_l,
                   "angle_error": float(f_ae)}
        return Evaluation(genome, float(fitness),
                          tuple(float(v) for v in objectives),
                          descriptor, err, summary, vector)


_WORKER_EVALUATOR: Optional[Evaluator] = None


def _init_worker(evaluator: Evaluator):  # pragma: no cover - subprocess
    global _WORKER_EVALUATOR
    _WORKER_EVALUATOR = evaluator


def _eval_in_worker(genome: Genome) -> Evaluation:  # pragma: no cover - subprocess
    return _WORKER_EVALUATOR.evaluate(genome)


def make_pool(workers: int, evaluator: Evaluator):
    if workers <= 1:
        return None
    ctx = multiprocessing.get_context("fork")
    return ctx.Pool(workers, initializer=_init_worker, initargs=(evaluator,))


def evaluate_batch(evaluator: Evaluator, genomes: list, pool=None) -> list:
    """Evaluate genomes, preserving input order regardless of worker count."""
    if pool is None:
        return [evaluator.evaluate(g) for g in genomes]
    chunk = max(1, len(genomes) // (pool._processes * 8))
    return pool.map(_eval_in_worker, genomes, chunksize=chunk)


def _child_rng(seed: int, iteration: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, _STREAM_CHILD, iteration, index])


@dataclass
class RunConfig:
    algorithm: str = "me"
    fitness_id: str = "fp"
    space: Optional[str] = "lis"
    population: int = 5000
    iterations: int = 9
    seed: int = 0
    steps: int = 72
    encoding: EncodingConfig = field(default_factory=EncodingConfig)
    targets: TargetPointSet = field(default_factory=default_target_points)
    grid: Optional[GridSpec] = None
    workers: int = 1
    qd_offset: float = 1e4
    survivor_pool: str = "union"  # union | children
    aurora: AuroraConfig = field(default_factory=AuroraConfig)

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.algorithm == "me" and self.space is None:
            raise ValueError("MAP-Elites needs a descriptor space")
        if self.survivor_pool not in ("union", "children"):
            raise ValueError("survivor_pool must be 'union' or 'children'")

    @staticmethod
    def iterations_for_budget(budget: int, population: int) -> int:
        """Iterations so that population * (1 + iterations) <= budget."""
        return max(budget // population - 1, 0)

    def resolved_grid(self) -> Optional[GridSpec]:
        if self.algorithm != "me":
            return None
        return self.grid or default_grid(self.space, self.encoding)

    def evaluator(self) -> Evaluator:
        return Evaluator(self.encoding, self.steps, self.targets, self.fitness_id,
                         space=None if self.space == "au" or self.algorithm != "me" else self.space,
                         keep_path_vectors=self.algorithm == "me" and self.space == "au")

    def to_dict(self) -> dict:
        return {"algorithm": self.algorithm, "fitness": self.fitness_id,
                "space": self.space if self.algorithm == "me" else None,
                "population": self.population, "iterations": self.iterations,
                "seed": self.seed, "steps": self.steps,
                "encoding": self.encoding.to_dict(),
                "targets": self.targets.to_dict(),
                "qd_offset": self.qd_offset, "survivor_pool": self.survivor_pool}

    @classmethod
    def from_dict(cls, d: dict, **overrides) -> "RunConfig":
        kwargs = {
            "algorithm": d.get("algorithm", "me"),
            "fitness_id": d.get("fitness", "fp"),
            "space": d.get("space"),
            "population": int(d.get("population", 5000)),
            "iterations": int(d.get("iterations", 9)),
            "seed": int(d.get("seed", 0)),
            "steps": int(d.get("steps", 72)),
            "qd_offset": float(d.get("qd_offset", 1e4)),
            "survivor_pool": d.get("survivor_pool", "union"),
        }
        if "encoding" in d:
            kwargs["encoding"] = EncodingConfig.from_dict(d["encoding"])
        if "targets" in d:
            kwargs["targets"] = TargetPointSet.from_dict(d["targets"])
        if "grid" in d and d["grid"] is not None:
            kwargs["grid"] = GridSpec.from_dict(d["grid"])
        kwargs.update(overrides)
        return cls(**kwargs)


@dataclass
class Repertoire:
    """Sparse MAP-Elites archive: at most one elite per grid cell, replaced
    only by strictly better fitness (ties keep the incumbent)."""

    grid: GridSpec
    fitness_id: str
    cells: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def offer(self, evaluation: Evaluation, cell: Optional[tuple] = None) -> bool:
        if cell is None:
            if evaluation.descriptor is None:
                return False
            cell = bin_index(evaluation.descriptor, self.grid)
        incumbent = self.cells.get(cell)
        if incumbent is not None:
            better = (scalar_score(self.fitness_id, evaluation.fitness)
                      > scalar_score(self.fitness_id, incumbent.fitness))
            if not better:
                return False
        self.cells[cell] = evaluation
        return True

    def elites(self) -> list:
        return [self.cells[c] for c in sorted(self.cells)]

    def coverage(self) -> float:
        return len(self.cells) / self.grid.total_cells

    def qd_score(self, offset: float = 1e4) -> float:
        return float(sum(max(0.0, offset + scalar_score(self.fitness_id, e.fitness))
                         for e in self.cells.values()))

    def best(self) -> Optional[Evaluation]:
        if not self.cells:
            return None
        return max(self.elites(),
                   key=lambda e: scalar_score(self.fitness_id, e.fitness))


def insert_elite(repertoire: Repertoire, evaluation: Evaluation) -> bool:
    return repertoire.offer(evaluation)


def nondominated_sort(points) -> list:
    """Fast non-dominated sorting (maximization on every objective).
    Returns fronts as lists of input indices; fronts partition the input."""
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    if n == 0:
        return []
    dom = np.zeros((n, n), dtype=bool)
    block = 2048
    for start in range(0, n, block):
        end = min(start + block, n)
        ge = (pts[start:end, None, :] >= pts[None, :, :]).all(axis=2)
        gt = (pts[start:end, None, :] > pts[None, :, :]).any(axis=2)
        dom[start:end] = ge & gt
    counts = dom.sum(axis=0).astype(np.int64)
    fronts = []
    assigned = np.zeros(n, dtype=bool)
    current = np.flatnonzero(counts == 0)
    while current.size:
        fronts.append(current.tolist())
        assigned[current] = True
        counts -= dom[current].sum(axis=0)
        counts[assigned] = -1
        current = np.flatnonzero(counts == 0)
    return fronts


def crowding_distance(points) -> np.ndarray:
    """Crowding distance within one front; boundary members get +inf and
    fronts of size <= 2 are all +inf. Ties resolve by stable sort order."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    m = len(pts)
    if m <= 2:
        return np.full(m, np.inf)
    dist = np.zeros(m)
    for k in range(pts.shape[1]):
        vals = pts[:, k]
        order = np.argsort(vals, kind="stable")
        dist[order[0]] = dist[order[-1]] = np.inf
        span = vals[order[-1]] - vals[order[0]]
        if span > 0:
            dist[order[1:-1]] += (vals[order[2:]] - vals[order[:-2]]) / span
    return dist


def nsga2_survivors(evaluations: list, fitness_id: str, mu: int) -> list:
    """First mu by (front rank asc, crowding desc) over oriented objectives."""
    pts = np.array([objective_scores(fitness_id, e.objectives) for e in evaluations])
    survivors = []
    for front in nondominated_sort(pts):
        if len(survivors) + len(front) <= mu:
            survivors.extend(front)
        else:
            crowd = crowding_distance(pts[front])
            order = np.argsort(-crowd, kind="stable")
            survivors.extend(front[i] for i in order[:mu - len(survivors)])
            break
    return [evaluations[i] for i in survivors]


@dataclass
class RunResult:
    config: RunConfig
    log: list
    best: Optional[Evaluation]
    population: Optional[list] = None
    repertoire: Optional[Repertoire] = None
    autoencoder: Optional[Autoencoder] = None
    front: Optional[list] = None


def _orient(fitness_id: str, evaluations: list) -> np.ndarray:
    scores = np.array([e.fitness for e in evaluations])
    return scores if fitness_id == "fp" else -scores


def _better(fitness_id: str, a: Optional[Evaluation], b: Evaluation) -> Evaluation:
    if a is None:
        return b
    return b if (scalar_score(fitness_id, b.fitness)
                 > scalar_score(fitness_id, a.fitness)) else a


def _best_of(fitness_id: str, evaluations: list) -> Evaluation:
    idx = int(np.argmax(_orient(fitness_id, evaluations)))
    return evaluations[idx]


def _init_population(cfg: RunConfig, evaluator: Evaluator, pool) -> list:
    genomes = [random_genome(_child_rng(cfg.seed, 0, i), cfg.encoding)
               for i in range(cfg.population)]
    return evaluate_batch(evaluator, genomes, pool)


def _log_record(iteration: int, evaluations: int, best: Evaluation,
                iteration_best: Evaluation, repertoire: Optional[Repertoire],
                qd_offset: float) -> dict:
    record = {"iteration": iteration, "evaluations": evaluations,
              "best_fitness": iteration_best.fitness,
              "best_so_far": best.fitness,
              "coverage": None, "qd_score": None}
    if repertoire is not None:
        record["coverage"] = repertoire.coverage()
        record["qd_score"] = repertoire.qd_score(qd_offset)
    return record


def run_ea(cfg: RunConfig, on_iteration=None) -> RunResult:
    """Standard EA: mutate everyone, then size-3 tournaments (with
    replacement) over the survivor pool pick the next population."""
    evaluator = cfg.evaluator()
    pool = make_pool(cfg.workers, evaluator)
    run_rng = np.random.default_rng([cfg.seed, _STREAM_RUN])
    try:
        population = _init_population(cfg, evaluator, pool)
        best = _best_of(cfg.fitness_id, population)
        records = [_log_record(0, cfg.population, best, best, None, cfg.qd_offset)]
        for t in range(1, cfg.iterations + 1):
            children = [mutate(population[i].genome, _child_rng(cfg.seed, t, i), cfg.encoding)
                        for i in range(cfg.population)]
            child_evals = evaluate_batch(evaluator, children, pool)
            candidates = (population + child_evals if cfg.survivor_pool == "union"
                          else child_evals)
            scores = _orient(cfg.fitness_id, candidates)
            picks = run_rng.integers(0, len(candidates), (cfg.population, 3))
            winners = picks[np.arange(cfg.population), np.argmax(scores[picks], axis=1)]
            population = [candidates[w] for w in winners]
            best = _better(cfg.fitness_id, best, _best_of(cfg.fitness_id, child_evals))
            records.append(_log_record(t, cfg.population * (1 + t), best,
                                       _best_of(cfg.fitness_id, population),
                                       None, cfg.qd_offset))
            if on_iteration:
                on_iteration(records[-1])
        return RunResult(cfg, records, best, population=population)
    finally:
        if pool is not None:
            pool.close()
            pool.join()


def run_nsga2(cfg: RunConfig, on_iteration=None) -> RunResult:
    """NSGA-II: survivors are the first mu of parents+children by
    non-domination rank, then crowding distance."""
    evaluator = cfg.evaluator()
    pool = make_pool(cfg.workers, evaluator)
    try:
        population = _init_population(cfg, evaluator, pool)
        best = _best_of(cfg.fitness_id, population)
        records = [_log_record(0, cfg.population, best, best, None, cfg.qd_offset)]
        for t in range(1, cfg.iterations + 1):
            children = [mutate(population[i].genome, _child_rng(cfg.seed, t, i), cfg.encoding)
                        for i in range(cfg.population)]
            child_evals = evaluate_batch(evaluator, children, pool)
            candidates = (population + child_evals if cfg.survivor_pool == "union"
                          else child_evals)
            population = nsga2_survivors(candidates, cfg.fitness_id, cfg.population)
            best = _better(cfg.fitness_id, best, _best_of(cfg.fitness_id, child_evals))
            records.append(_log_record(t, cfg.population * (1 + t), best,
                                       _best_of(cfg.fitness_id, population),
                                       None, cfg.qd_offset))
            if on_iteration:
                on_iteration(records[-1])
        pts = np.array([objective_scores(cfg.fitness_id, e.objectives) for e in population])
        front = [population[i] for i in nondominated_sort(pts)[0]]
        return RunResult(cfg, records, best, population=population, front=front)
    finally:
        if pool is not None:
            pool.close()
            pool.join()


def _assign_latents(evaluations: list, autoencoder: Autoencoder):
    """Batch-encode the valid path vectors into 4-D descriptors."""
    pending = [e for e in evaluations if e.path_vector is not None]
    if not pending:
        return
    latents = autoencoder.encode(np.array([e.path_vector for e in pending]))
    for e, latent in zip(pending, latents):
        e.descriptor = tuple(float(v) for v in latent)


def run_map_elites(cfg: RunConfig, on_iteration=None) -> RunResult:
    """MAP-Elites: bootstrap with random genomes, then mutate uniformly
    selected elites and insert children elitist-per-cell. With the learned
    descriptor space, the autoencoder trains on valid paths per schedule
    and the archive is re-binned after each retraining."""
    evaluator = cfg.evaluator()
    pool = make_pool(cfg.workers, evaluator)
    run_rng = np.random.default_rng([cfg.seed, _STREAM_RUN])
    use_au = cfg.space == "au"
    repertoire = Repertoire(cfg.resolved_grid(), cfg.fitness_id,
                            meta=cfg.to_dict())
    autoencoder = None
    train_rng = None
    if use_au:
        autoencoder = Autoencoder.initialize(np.random.default_rng([cfg.seed, _STREAM_AE_INIT]))
        train_rng = np.random.default_rng([cfg.seed, _STREAM_AE_TRAIN])
    try:
        evaluations = _init_population(cfg, evaluator, pool)
        if use_au:
            vectors = [e.path_vector for e in evaluations if e.path_vector is not None]
            aurora_schedule(repertoire, autoencoder, 0, train_rng, cfg.aurora,
                            bootstrap_vectors=np.array(vectors) if vectors else None)
            _assign_latents(evaluations, autoencoder)
        for e in evaluations:
            repertoire.offer(e)
        best = _best_of(cfg.fitness_id, evaluations)
        records = [_log_record(0, cfg.population, best, best, repertoire, cfg.qd_offset)]
        for t in range(1, cfg.iterations + 1):
            elites = repertoire.elites()
            if elites:
                picks = run_rng.integers(0, len(elites), cfg.population)
                children = [mutate(elites[s].genome, _child_rng(cfg.seed, t, i), cfg.encoding)
                            for i, s in enumerate(picks)]
            else:
                log.warning("iteration %d: empty archive, re-bootstrapping", t)
                children = [random_genome(_child_rng(cfg.seed, t, i), cfg.encoding)
                            for i in range(cfg.population)]
            evaluations = evaluate_batch(evaluator, children, pool)
            if use_au:
                _assign_latents(evaluations, autoencoder)
            for e in evaluations:
                repertoire.offer(e)
            if use_au:
                aurora_schedule(repertoire, autoencoder, t, train_rng, cfg.aurora)
            best = _better(cfg.fitness_id, best, _best_of(cfg.fitness_id, evaluations))
            archive_best = repertoire.best() or best
            records.append(_log_record(t, cfg.population * (1 + t), best,
                                       archive_best, repertoire, cfg.qd_offset))
            if on_iteration:
                on_iteration(records[-1])
        return RunResult(cfg, records, best, repertoire=repertoire,
                         autoencoder=autoencoder)
    finally:
        if pool is not None:
            pool.close()
            pool.join()


def run(cfg: RunConfig, on_iteration=None) -> RunResult:
    if cfg.algorithm == "ea":
        return run_ea(cfg, on_iteration)
    if cfg.algorithm == "nsga2":
        return run_nsga2(cfg, on_iteration)
    return run_map_elites(cfg, on_iteration)
