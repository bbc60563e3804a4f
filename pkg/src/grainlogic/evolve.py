"""Age-Fitness Pareto Optimization over material genomes.

A genome is the per-particle stiffness vector plus two input-port indices
(source and output ports stay fixed unless explicitly opened up).  Each
generation the population doubles with mutated offspring plus exactly one
random newcomer of age zero, then dominated individuals (over the
(age, objectives...) vector, all minimized) are deleted at random until the
population is back at size.

Single-objective runs minimize the NAND fitness at one frequency;
polycomputation runs minimize it at two frequencies simultaneously.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .dynamics import DriveSpec, SimParams
from .gate import RUN_FAILURES, MaterialDesign, evaluate_gate
from .interactions import InteractionLaw
from .packing import LatticeSpec, Packing, build_lattice, relax_fire

STIFF_LOW = 1.0
STIFF_HIGH = 10.0


@dataclass(eq=False)
class Genome:
    """Per-particle stiffness in [1, 10] plus the two input-port indices."""

    stiffness: np.ndarray
    input_ports: tuple
    source_port: int | None = None     # set only when port co-evolution is on
    output_port: int | None = None

    def __post_init__(self):
        self.stiffness = np.asarray(self.stiffness, dtype=np.float64)
        self.input_ports = tuple(int(p) for p in self.input_ports)

    def copy(self) -> "Genome":
        return Genome(self.stiffness.copy(), self.input_ports,
                      self.source_port, self.output_port)

    def to_dict(self) -> dict:
        return {
            "stiffness": self.stiffness.tolist(),
            "input_ports": list(self.input_ports),
            "source_port": self.source_port,
            "output_port": self.output_port,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Genome":
        return cls(np.asarray(d["stiffness"], dtype=np.float64),
                   tuple(d["input_ports"]),
                   d.get("source_port"), d.get("output_port"))


@dataclass(eq=False)
class Individual:
    """A genome with its age, objective values and founding-lineage id."""

    genome: Genome
    age: int = 0
    objectives: tuple | None = None
    lineage_id: int = 0

    def to_dict(self) -> dict:
        return {
            "genome": self.genome.to_dict(),
            "age": self.age,
            "objectives": list(self.objectives) if self.objectives is not None else None,
            "lineage_id": self.lineage_id,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Individual":
        objs = d.get("objectives")
        return cls(genome=Genome.from_dict(d["genome"]), age=d["age"],
                   objectives=tuple(objs) if objs is not None else None,
                   lineage_id=d["lineage_id"])


@dataclass(frozen=True)
class EvolutionConfig:
    """Everything a run needs: lattice, physics, drive template and EA knobs."""

    population_size: int = 50
    generations: int = 500
    mutation_sigma: float = 0.1
    per_gene_rate: float | None = None      # default: one expected gene per event
    frequencies: tuple = (10.0,)
    rng_seed: int = 0
    lattice: LatticeSpec = field(default_factory=LatticeSpec)
    law: InteractionLaw | None = None
    sim: SimParams = field(default_factory=SimParams)
    drive: DriveSpec | None = None
    checkpoint_every: int = 10
    relax_with_stiffness: bool = False
    evolve_source_port: bool = False
    evolve_output_port: bool = False

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be at least 2")
        if self.generations < 1:
            raise ValueError("generations must be at least 1")
        freqs = tuple(float(f) for f in self.frequencies)
        if len(freqs) not in (1, 2):
            raise ValueError("one or two drive frequencies required")
        if len(freqs) == 2 and freqs[0] == freqs[1]:
            raise ValueError("the two drive frequencies must be distinct")
        object.__setattr__(self, "frequencies", freqs)
        if self.law is None:
            object.__setattr__(self, "law",
                               InteractionLaw(cutoff=self.lattice.diameter))
        if self.drive is None:
            object.__setattr__(self, "drive", default_drive(self.lattice,
                                                            freqs[0]))

    @property
    def n_genes(self) -> int:
        return self.lattice.particle_count

    @property
    def gene_rate(self) -> float:
        return self.per_gene_rate if self.per_gene_rate is not None \
            else 1.0 / self.n_genes

    def reserved_ports(self, genome: Genome | None = None) -> tuple:
        src = self.drive.source_port
        out = self.drive.output_port
        if genome is not None:
            src = genome.source_port if genome.source_port is not None else src
            out = genome.output_port if genome.output_port is not None else out
        return (src, out)

    def to_dict(self) -> dict:
        return {
            "population_size": self.population_size,
            "generations": self.generations,
            "mutation_sigma": self.mutation_sigma,
            "per_gene_rate": self.per_gene_rate,
            "frequencies": list(self.frequencies),
            "rng_seed": self.rng_seed,
            "lattice": self.lattice.to_dict(),
            "law": self.law.to_dict(),
            "sim": self.sim.to_dict(),
            "drive": self.drive.to_dict(),
            "checkpoint_every": self.checkpoint_every,
            "relax_with_stiffness": self.relax_with_stiffness,
            "evolve_source_port": self.evolve_source_port,
            "evolve_output_port": self.evolve_output_port,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvolutionConfig":
        d = dict(d)
        d["frequencies"] = tuple(d["frequencies"])
        d["lattice"] = LatticeSpec.from_dict(d["lattice"])
        d["law"] = InteractionLaw.from_dict(d["law"]) if d.get("law") else None
        d["sim"] = SimParams.from_dict(d["sim"])
        d["drive"] = DriveSpec.from_dict(d["drive"]) if d.get("drive") else None
        return cls(**d)


def default_drive(lattice: LatticeSpec, frequency: float) -> DriveSpec:
    """Source on the bottom row, output on the top row, inputs mid-lattice.

    The input pair mirrors about the source/output column, so the default
    port set is mirror-symmetric on any lattice wide enough to allow it.
    """
    cols = lattice.cols
    source = 0
    output = (lattice.rows - 1) * cols
    mid = (lattice.rows // 2) * cols
    c = max(1, cols // 3)
    in1, in2 = mid + c, mid + (cols - c) % cols
    if in1 == in2:
        in2 = mid + (c + 1) % cols
    return DriveSpec(input_ports=(in1, in2), source_port=source,
                     output_port=output, frequency=frequency)


def random_genome(cfg: EvolutionConfig, rng: np.random.Generator) -> Genome:
    stiffness = rng.uniform(STIFF_LOW, STIFF_HIGH, cfg.n_genes)
    n_extra = int(cfg.evolve_source_port) + int(cfg.evolve_output_port)
    reserved = cfg.reserved_ports()
    sites = [i for i in range(cfg.n_genes) if i not in reserved]
    picks = rng.choice(len(sites), size=2 + n_extra, replace=False)
    genome = Genome(stiffness, (sites[picks[0]], sites[picks[1]]))
    nxt = 2
    if cfg.evolve_source_port:
        genome.source_port = sites[picks[nxt]]
        nxt += 1
    if cfg.evolve_output_port:
        genome.output_port = sites[picks[nxt]]
    return genome


def _movable_ports(cfg: EvolutionConfig):
    slots = ["input1", "input2"]
    if cfg.evolve_source_port:
        slots.append("source")
    if cfg.evolve_output_port:
        slots.append("output")
    return slots


def _port_of(genome: Genome, cfg: EvolutionConfig, slot: str) -> int:
    if slot == "input1":
        return genome.input_ports[0]
    if slot == "input2":
        return genome.input_ports[1]
    if slot == "source":
        return genome.source_port if genome.source_port is not None \
            else cfg.drive.source_port
    return genome.output_port if genome.output_port is not None \
        else cfg.drive.output_port


def mutate(genome: Genome, cfg: EvolutionConfig, rng: np.random.Generator) -> Genome:
    """Apply exactly one mutation operator, chosen uniformly.

    (a) Gaussian perturbation of each stiffness gene independently with the
    per-gene probability, clamped to the bounds; (b) reassign one movable
    port (an input, plus source/output when their co-evolution is enabled)
    uniformly among free lattice sites, distinctness enforced.
    """
    child = genome.copy()
    if rng.random() < 0.5:
        mask = rng.random(cfg.n_genes) < cfg.gene_rate
        noise = rng.normal(0.0, cfg.mutation_sigma, cfg.n_genes)
        child.stiffness[mask] += noise[mask]
        np.clip(child.stiffness, STIFF_LOW, STIFF_HIGH, out=child.stiffness)
    else:
        slots = _movable_ports(cfg)
        slot = slots[int(rng.integers(len(slots)))]
        taken = {_port_of(child, cfg, s) for s in ("input1", "input2",
                                                   "source", "output")
                 if s != slot}
        fixed = set()
        if not cfg.evolve_source_port:
            fixed.add(cfg.drive.source_port)
        if not cfg.evolve_output_port:
            fixed.add(cfg.drive.output_port)
        sites = [i for i in range(cfg.n_genes) if i not in taken | fixed]
        new_port = sites[int(rng.integers(len(sites)))]
        if slot == "input1":
            child.input_ports = (new_port, child.input_ports[1])
        elif slot == "input2":
            child.input_ports = (child.input_ports[0], new_port)
        elif slot == "source":
            child.source_port = new_port
        else:
            child.output_port = new_port
    return child


def dominates(a, b) -> bool:
    """True iff objective vector a is no worse everywhere and better somewhere."""
    if len(a) != len(b):
        raise ValueError("objective vectors must have equal length")
    not_worse = all(x <= y for x, y in zip(a, b))
    better = any(x < y for x, y in zip(a, b))
    return not_worse and better


def _afpo_vector(ind: Individual) -> tuple:
    return (ind.age, *ind.objectives)


def pareto_front(population, exclude_age: bool = True):
    """Mutually non-dominated individuals (by objectives alone by default)."""
    key = (lambda ind: ind.objectives) if exclude_age else _afpo_vector
    front = []
    for ind in population:
        if not any(dominates(key(other), key(ind)) for other in population
                   if other is not ind):
            front.append(ind)
    return front


def expand_population(population, cfg: EvolutionConfig,
                      rng: np.random.Generator, newcomer_lineage_id: int):
    """Ages everyone, then fills to twice the population size.

    Offspring are mutations of uniformly chosen parents and inherit the
    parent's (already incremented) age; exactly one brand-new random
    individual with age zero is always included.
    """
    for ind in population:
        ind.age += 1
    expanded = list(population)
    n_offspring = 2 * cfg.population_size - len(population) - 1
    for _ in range(max(n_offspring, 0)):
        parent = population[int(rng.integers(len(population)))]
        expanded.append(Individual(genome=mutate(parent.genome, cfg, rng),
                                   age=parent.age,
                                   lineage_id=parent.lineage_id))
    expanded.append(Individual(genome=random_genome(cfg, rng), age=0,
                               lineage_id=newcomer_lineage_id))
    return expanded


def truncate_population(population, cap: int, rng: np.random.Generator,
                        deletion_log: list | None = None):
    """Delete randomly chosen dominated individuals until the cap is met.

    If only non-dominated individuals remain, deletes the oldest (worst
    first objective breaking ties), never the current best-first-objective
    holder, so the best fitness found is always retained.
    """
    pop = list(population)
    while len(pop) > cap:
        dominated = [i for i, ind in enumerate(pop)
                     if any(dominates(_afpo_vector(o), _afpo_vector(ind))
                            for o in pop if o is not ind)]
        if dominated:
            victim = dominated[int(rng.integers(len(dominated)))]
            if deletion_log is not None:
                deletion_log.append((pop[victim], True))
            pop.pop(victim)
            continue
        best_first = min(ind.objectives[0] for ind in pop)
        candidates = [i for i, ind in enumerate(pop)
                      if ind.objectives[0] > best_first]
        if not candidates:
            candidates = list(range(1, len(pop)))
        victim = max(candidates,
                     key=lambda i: (pop[i].age, pop[i].objectives[0]))
        if deletion_log is not None:
            deletion_log.append((pop[victim], False))
        pop.pop(victim)
    return pop


def _evaluate_missing(population, evaluate, batch_eval=None, n_objectives=None):
    """Fill in missing objective tuples; failures get +inf sentinels."""
    missing = [ind for ind in population if ind.objectives is None]
    failures = 0
    if not missing:
        return 0, 0
    if batch_eval is not None:
        results = batch_eval([ind.genome for ind in missing])
    else:
        results = []
        for ind in missing:
            try:
                results.append(tuple(evaluate(ind.genome)))
            except RUN_FAILURES:
                results.append(None)
    for res in results:
        if res is not None:
            n_objectives = len(res)
            break
    for ind, res in zip(missing, results):
        if res is None:
            failures += 1
            ind.objectives = (math.inf,) * (n_objectives or 1)
        else:
            ind.objectives = tuple(float(v) for v in res)
    return len(missing), failures


def afpo_generation(population, evaluate, cfg: EvolutionConfig,
                    rng: np.random.Generator, *, batch_eval=None,
                    newcomer_lineage_id: int | None = None):
    """One AFPO step: age, expand, evaluate newcomers, Pareto-truncate."""
    if newcomer_lineage_id is None:
        newcomer_lineage_id = max(ind.lineage_id for ind in population) + 1
    expanded = expand_population(population, cfg, rng, newcomer_lineage_id)
    _evaluate_missing(expanded, evaluate, batch_eval,
                      n_objectives=len(cfg.frequencies))
    return truncate_population(expanded, cfg.population_size, rng)


class GateEvaluator:
    """Maps a genome to its NAND fitness at each configured frequency.

    Picklable so population evaluation can fan out over processes.
    """

    def __init__(self, cfg: EvolutionConfig, packing: Packing):
        self.cfg = cfg
        self.packing = packing

    def sims_per_eval(self) -> int:
        return 4 * len(self.cfg.frequencies)

    def __call__(self, genome: Genome):
        cfg = self.cfg
        drive = cfg.drive
        source = genome.source_port if genome.source_port is not None else drive.source_port
        output = genome.output_port if genome.output_port is not None else drive.output_port
        design = MaterialDesign(packing=self.packing, stiffness=genome.stiffness,
                                ports=(*genome.input_ports, source, output))
        objectives = []
        for f in cfg.frequencies:
            res = evaluate_gate(design, drive, cfg.sim, cfg.law, frequency=f,
                                relax_with_stiffness=cfg.relax_with_stiffness)
            objectives.append(res.fitness)
        return tuple(objectives)


def _safe_eval(args):
    evaluate, genome = args
    try:
        return tuple(evaluate(genome))
    except RUN_FAILURES:
        return None


@dataclass
class EvolutionResult:
    config: EvolutionConfig
    population: list
    history: list
    front: list
    packing: Packing | None = None

    @property
    def best(self) -> Individual:
        return min(self.population, key=lambda ind: ind.objectives[0])


def _history_record(generation, population, evaluations, sim_runs, failures,
                    prev_lineages):
    objs = np.asarray([ind.objectives for ind in population], dtype=np.float64)
    finite = np.isfinite(objs).all(axis=1)
    best_idx = int(np.lexsort(objs.T[::-1])[0])
    lineages = sorted({ind.lineage_id for ind in population})
    front = pareto_front(population)
    record = {
        "generation": generation,
        "best": [float(v) for v in population[best_idx].objectives],
        "best_genome": population[best_idx].genome.to_dict(),
        "min": [float(v) for v in objs.min(axis=0)],
        "mean": [float(v) for v in objs[finite].mean(axis=0)] if finite.any() else None,
        "front_size": len(front),
        "front_objectives": sorted([float(v) for v in ind.objectives]
                                   for ind in front),
        "lineages": lineages,
        "new_lineages": sorted(set(lineages) - prev_lineages),
        "extinct_lineages": sorted(prev_lineages - set(lineages)),
        "evaluations": evaluations,
        "sim_runs": sim_runs,
        "failures": failures,
    }
    return record


def save_checkpoint(path, cfg, population, generation, rng, next_lineage_id,
                    evaluations, sim_runs, packing):
    state = {
        "generation": generation,
        "config": cfg.to_dict(),
        "population": [ind.to_dict() for ind in population],
        "rng_state": rng.bit_generator.state,
        "next_lineage_id": next_lineage_id,
        "evaluations": evaluations,
        "sim_runs": sim_runs,
        "packing": packing.to_dict() if packing is not None else None,
    }
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(state, fh)
    os.replace(tmp, path)


def load_checkpoint(path):
    with open(path) as fh:
        state = json.load(fh)
    cfg = EvolutionConfig.from_dict(state["config"])
    population = [Individual.from_dict(d) for d in state["population"]]
    packing = Packing.from_dict(state["packing"]) if state.get("packing") else None
    return state, cfg, population, packing


def run_evolution(cfg: EvolutionConfig, evaluate=None, *, out_dir=None,
                  workers: int = 1, resume_from: str | None = None,
                  history_sink=None, progress=None) -> EvolutionResult:
    """Run AFPO to completion; deterministic for a fixed seed.

    ``evaluate`` defaults to the gate evaluator over the config's lattice
    (relaxed once with uniform stiffness).  With ``workers`` > 1 population
    evaluation fans out over a process pool; results are order-stable so
    scheduling cannot change the outcome.  ``resume_from`` restarts from a
    checkpoint file and continues the original schedule.
    """
    packing = None
    if resume_from is not None:
        state, cfg, population, packing = load_checkpoint(resume_from)
        rng = np.random.default_rng()
        rng.bit_generator.state = state["rng_state"]
        start_gen = state["generation"] + 1
        next_lineage = state["next_lineage_id"]
        evaluations = state["evaluations"]
        sim_runs = state["sim_runs"]
    else:
        rng = np.random.default_rng(cfg.rng_seed)
        start_gen = 0
        evaluations = 0
        sim_runs = 0

    if evaluate is None:
        if packing is None:
            packing = relax_fire(build_lattice(cfg.lattice), law=cfg.law)
        evaluate = GateEvaluator(cfg, packing)
    sims_per_eval = evaluate.sims_per_eval() if hasattr(evaluate, "sims_per_eval") \
        else len(cfg.frequencies) * 4

    pool = None
    batch_eval = None
    if workers > 1:
        import multiprocessing

        pool = multiprocessing.get_context("fork").Pool(workers)

        def batch_eval(genomes):
            return pool.map(_safe_eval, [(evaluate, g) for g in genomes])

    history = []
    try:
        if resume_from is None:
            population = [Individual(genome=random_genome(cfg, rng), age=0,
                                     lineage_id=i)
                          for i in range(cfg.population_size)]
            next_lineage = cfg.population_size
            n_eval, n_fail = _evaluate_missing(
                population, evaluate, batch_eval, len(cfg.frequencies))
            evaluations += n_eval
            sim_runs += n_eval * sims_per_eval
            record = _history_record(0, population, evaluations, sim_runs,
                                     n_fail, set())
            history.append(record)
            if history_sink:
                history_sink(record)
            if progress:
                progress(record)

        prev_lineages = {ind.lineage_id for ind in population}
        for gen in range(max(start_gen, 1), cfg.generations + 1):
            expanded = expand_population(population, cfg, rng, next_lineage)
            next_lineage += 1
            n_eval, n_fail = _evaluate_missing(
                expanded, evaluate, batch_eval, len(cfg.frequencies))
            evaluations += n_eval
            sim_runs += n_eval * sims_per_eval
            population = truncate_population(expanded, cfg.population_size, rng)
            record = _history_record(gen, population, evaluations, sim_runs,
                                     n_fail, prev_lineages)
            prev_lineages = {ind.lineage_id for ind in population}
            history.append(record)
            if history_sink:
                history_sink(record)
            if progress:
                progress(record)
            if out_dir is not None and (gen % cfg.checkpoint_every == 0
                                        or gen == cfg.generations):
                path = os.path.join(out_dir, f"checkpoint_gen{gen:05d}.json")
                save_checkpoint(path, cfg, population, gen, rng, next_lineage,
                                evaluations, sim_runs,
                                packing if isinstance(evaluate, GateEvaluator) else None)
    finally:
        if pool is not None:
            pool.close()
            pool.join()

    front = pareto_front(population)
    return EvolutionResult(config=cfg, population=population, history=history,
                           front=front, packing=packing)


def knee_index(objectives) -> int:
    """Index of the point closest to the utopia point after min-max scaling."""
    objs = np.asarray(objectives, dtype=np.float64)
    if objs.ndim != 2 or objs.shape[1] != 2:
        raise ValueError("knee selection expects two fitness objectives")
    lo = objs.min(axis=0)
    span = objs.max(axis=0) - lo
    span[span == 0.0] = 1.0
    norm = (objs - lo) / span
    dist = np.hypot(norm[:, 0], norm[:, 1])
    return int(np.argmin(dist))


def knee_point(front) -> Individual:
    """Front member closest to the utopia point after min-max normalization.

    The front must carry two fitness objectives (age excluded).  A
    single-point front is its own knee.
    """
    if not front:
        raise ValueError("empty front has no knee")
    if len(front) == 1:
        return front[0]
    return front[knee_index([ind.objectives for ind in front])]
