"""Experiment orchestration: config-driven runs with reproducible artifacts.

Subcommands: relax, evaluate, modes, sweep, heatmap, noise, evolve,
evolve-poly.  Each reads a JSON config (unknown keys rejected), writes into
an output directory (refusing to clobber existing results without
--overwrite) and leaves a verbatim config copy plus a manifest with the tool
version, seed and config hash, so identical manifests imply identical
outputs.

Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 non-convergence.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import shutil
import sys

import numpy as np

from . import __version__
from .dynamics import (
    DriveSpec,
    SimParams,
    SimulationBlowUp,
    UnstablePackingError,
    normal_modes,
)
from .evolve import (
    EvolutionConfig,
    default_drive,
    knee_point,
    pareto_front,
    run_evolution,
)
from .gate import (
    CASE_LABELS,
    MaterialDesign,
    dual_frequency_map,
    evaluate_gate,
    nandness_sweep,
    noise_robustness,
    per_particle_map,
    read_bit,
)
from .interactions import InteractionLaw
from .packing import (
    FireNonConvergence,
    LatticeSpec,
    build_lattice,
    packing_fraction,
    relax_fire,
)
from .spectral import full_spectrum
from .svgfig import lattice_heatmap_svg, line_plot_svg

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_NONCONVERGENCE = 3

OUTPUT_ROOT_ENV = "GRAINLOGIC_OUTPUT_ROOT"

VALID_BITS = ("00", "01", "10", "11")


class UsageError(Exception):
    """Bad command line or config; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# config handling

_SECTION_KEYS = {
    "lattice": {"rows", "cols", "diameter", "mass", "packing_fraction",
                "boundary_x", "boundary_y"},
    "interaction": {"kind", "cutoff", "energy_scale", "stiffness_mixing"},
    "sim": {"dt", "total_steps", "damping", "transient_fraction"},
    "drive": {"input_ports", "source_port", "output_port", "a1", "a2",
              "a_source", "frequency", "phase1", "phase2"},
    "design": {"file", "stiffness", "input_ports"},
    "relax": {"force_tol", "max_iters"},
    "sweep": {"f_low", "f_high", "f_step", "peak_median_factor"},
    "heatmap": {"frequencies"},
    "noise": {"snr_db", "trials"},
    "evolution": {"population_size", "generations", "mutation_sigma",
                  "per_gene_rate", "frequencies", "checkpoint_every",
                  "relax_with_stiffness", "evolve_source_port",
                  "evolve_output_port"},
}

# physics sections are legal everywhere so one experiment config can be
# shared across subcommands; command-specific sections stay exclusive
_COMMON_SECTIONS = {"lattice", "interaction", "sim", "drive", "design", "relax"}
_COMMAND_SECTIONS = {
    "relax": _COMMON_SECTIONS,
    "evaluate": _COMMON_SECTIONS,
    "modes": _COMMON_SECTIONS,
    "sweep": _COMMON_SECTIONS | {"sweep"},
    "heatmap": _COMMON_SECTIONS | {"heatmap"},
    "noise": _COMMON_SECTIONS | {"noise"},
    "evolve": _COMMON_SECTIONS | {"evolution"},
    "evolve-poly": _COMMON_SECTIONS | {"evolution"},
}

_TOP_KEYS = {"output_dir", "seed", "seeds", "bits", "workers"}


def _load_config(path: str, command: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise UsageError(f"config is not valid JSON: {exc}")
    if not isinstance(cfg, dict):
        raise UsageError("config root must be a JSON object")
    allowed = _COMMAND_SECTIONS[command] | _TOP_KEYS
    unknown = set(cfg) - allowed
    if unknown:
        raise UsageError(f"unknown config keys for {command}: {sorted(unknown)}")
    for section, keys in _SECTION_KEYS.items():
        if section in cfg:
            if not isinstance(cfg[section], dict):
                raise UsageError(f"config section {section!r} must be an object")
            bad = set(cfg[section]) - keys
            if bad:
                raise UsageError(f"unknown keys in {section!r}: {sorted(bad)}")
    if "output_dir" not in cfg:
        raise UsageError("config must set output_dir")
    return cfg


def _build(cls, section: dict, what: str):
    try:
        return cls(**section)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid {what}: {exc}")


def _lattice(cfg) -> LatticeSpec:
    return _build(LatticeSpec, cfg.get("lattice", {}), "lattice spec")


def _law(cfg, lattice: LatticeSpec) -> InteractionLaw:
    section = dict(cfg.get("interaction", {}))
    section.setdefault("cutoff", lattice.diameter)
    return _build(InteractionLaw, section, "interaction law")


def _sim(cfg) -> SimParams:
    return _build(SimParams, cfg.get("sim", {}), "sim params")


def _drive(cfg, lattice: LatticeSpec) -> DriveSpec:
    base = default_drive(lattice, 10.0).to_dict()
    base.pop("bits")
    base.update(cfg.get("drive", {}))
    return _build(DriveSpec, base, "drive spec")


def _relax_kwargs(cfg) -> dict:
    section = cfg.get("relax", {})
    return {"force_tol": float(section.get("force_tol", 1e-10)),
            "max_iters": int(section.get("max_iters", 200_000))}


def _resolve_design(cfg, lattice: LatticeSpec, law: InteractionLaw,
                    drive: DriveSpec) -> MaterialDesign:
    """Design from a saved file, or from inline stiffness over a fresh packing."""
    section = cfg.get("design", {})
    if "file" in section:
        if len(section) > 1:
            raise UsageError("design: give either a file or inline fields, not both")
        try:
            with open(section["file"]) as fh:
                return MaterialDesign.from_dict(json.load(fh))
        except FileNotFoundError:
            raise UsageError(f"design file not found: {section['file']}")
        except (KeyError, ValueError) as exc:
            raise UsageError(f"bad design file: {exc}")
    packing = relax_fire(build_lattice(lattice), law=law, **_relax_kwargs(cfg))
    stiffness = section.get("stiffness", 1.0)
    if np.isscalar(stiffness):
        stiffness = np.full(lattice.particle_count, float(stiffness))
    else:
        stiffness = np.asarray(stiffness, dtype=np.float64)
    input_ports = tuple(section.get("input_ports", drive.input_ports))
    try:
        return MaterialDesign(
            packing=packing, stiffness=stiffness,
            ports=(*input_ports, drive.source_port, drive.output_port))
    except ValueError as exc:
        raise UsageError(f"invalid design: {exc}")


# ---------------------------------------------------------------------------
# artifact plumbing

def _prepare_out_dir(cfg, config_path: str, command: str, args) -> str:
    out = cfg["output_dir"]
    if not os.path.isabs(out):
        out = os.path.join(os.environ.get(OUTPUT_ROOT_ENV, os.getcwd()), out)
    resume = getattr(args, "resume", False)
    if os.path.isdir(out) and os.listdir(out):
        if not (args.overwrite or resume):
            raise UsageError(
                f"output directory {out} already has results; pass --overwrite "
                f"to replace them")
        if args.overwrite and not resume:
            shutil.rmtree(out)
    os.makedirs(out, exist_ok=True)
    shutil.copyfile(config_path, os.path.join(out, "config.json"))
    with open(config_path, "rb") as fh:
        digest = hashlib.sha256(fh.read()).hexdigest()
    manifest = {
        "tool": "grainlogic",
        "version": __version__,
        "command": command,
        "config_sha256": digest,
        "seed": cfg.get("seed", 0),
        "seeds": cfg.get("seeds"),
    }
    _write_json(os.path.join(out, "manifest.json"), manifest)
    return out


def _write_json(path: str, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path: str, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating))
                             else v for v in row])


def _fmt(value: float) -> str:
    if math.isinf(value):
        return "inf"
    if math.isnan(value):
        return "nan"
    return f"{value:.6g}"


# ---------------------------------------------------------------------------
# commands

def cmd_relax(args) -> int:
    cfg = _load_config(args.config, "relax")
    lattice = _lattice(cfg)
    law = _law(cfg, lattice)
    kwargs = _relax_kwargs(cfg)
    if args.force_tol is not None:
        kwargs["force_tol"] = args.force_tol
    out = _prepare_out_dir(cfg, args.config, "relax", args)
    packing = relax_fire(build_lattice(lattice), law=law, **kwargs)
    _write_json(os.path.join(out, "packing.json"), packing.to_dict())
    report = {
        "residual_force": packing.residual_force,
        "force_tol": kwargs["force_tol"],
        "fire_iterations": packing.fire_iterations,
        "packing_fraction": packing_fraction(packing),
        "particles": packing.n_particles,
    }
    _write_json(os.path.join(out, "relax_report.json"), report)
    print(f"relaxed {packing.n_particles} particles in "
          f"{packing.fire_iterations} iterations; residual force "
          f"{packing.residual_force:.3e}; phi={report['packing_fraction']:.6f}")
    return EXIT_OK


def _parse_bits(cfg, args) -> str:
    bits = args.bits if args.bits is not None else cfg.get("bits", "11")
    if bits not in VALID_BITS:
        raise UsageError(f"bits must be one of {VALID_BITS}, got {bits!r}")
    return bits


def cmd_evaluate(args) -> int:
    cfg = _load_config(args.config, "evaluate")
    lattice = _lattice(cfg)
    law = _law(cfg, lattice)
    sim = _sim(cfg)
    drive = _drive(cfg, lattice)
    bits_label = _parse_bits(cfg, args)
    design = _resolve_design(cfg, lattice, law, drive)
    out = _prepare_out_dir(cfg, args.config, "evaluate", args)

    result, cases = evaluate_gate(design, drive, sim, law, return_cases=True)
    _write_json(os.path.join(out, "gate_result.json"), result.to_dict())

    case_idx = VALID_BITS.index(bits_label)
    case = cases[case_idx]
    # a silent input's credited amplitude is the source baseline
    silent = [a for b, a in zip(case.bits, case.input_amplitudes) if b == 0]
    reference = silent[0] if silent else case.input_amplitudes[0]
    readout = {
        "bits": bits_label,
        "output_amplitude": result.output_amplitudes[case_idx],
        "reference_amplitude": reference,
        "bit": read_bit(result.output_amplitudes[case_idx], reference),
    }
    _write_json(os.path.join(out, "bit_readout.json"), readout)

    series = case.trajectory.window(design.output_port, 0)
    freqs, mags = full_spectrum(series, case.trajectory.dt)
    _write_csv(os.path.join(out, f"spectrum_{bits_label}.csv"),
               ["frequency", "magnitude"], zip(freqs, mags))

    if args.emit_trajectories:
        for label, c in zip(CASE_LABELS, cases):
            path = os.path.join(out, f"trajectory_{label}.csv")
            disp = c.trajectory.displacements
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["t", "particle", "dx", "dy"])
                for step in range(disp.shape[0]):
                    t = repr(step * c.trajectory.dt)
                    for p in range(disp.shape[1]):
                        writer.writerow([t, p, repr(disp[step, p, 0]),
                                         repr(disp[step, p, 1])])
    gains = ", ".join(f"G{label}={_fmt(g)}"
                      for label, g in zip(CASE_LABELS, result.gains))
    print(f"{gains}; F={_fmt(result.fitness)}; M={_fmt(result.nandness)}")
    return EXIT_OK


def cmd_modes(args) -> int:
    cfg = _load_config(args.config, "modes")
    lattice = _lattice(cfg)
    law = _law(cfg, lattice)
    drive = default_drive(lattice, 10.0)
    design = _resolve_design(cfg, lattice, law, drive)
    out = _prepare_out_dir(cfg, args.config, "modes", args)
    freqs, shapes = normal_modes(design.packing, design.stiffness, law)
    _write_csv(os.path.join(out, "modes.csv"), ["mode", "frequency"],
               [(i, f) for i, f in enumerate(freqs)])
    if args.shapes:
        header = ["mode"] + [f"{axis}{p}"
                             for p in range(design.packing.n_particles)
                             for axis in ("dx", "dy")]
        with open(os.path.join(out, "mode_shapes.csv"), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for i in range(len(freqs)):
                writer.writerow([i] + [repr(v) for v in shapes[:, i]])
    nonzero = [f for f in freqs if f > 0]
    print(f"{len(freqs)} modes; lowest nonzero "
          f"{_fmt(nonzero[0]) if nonzero else 'none'}, highest {_fmt(freqs[-1])}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load_config(args.config, "sweep")
    lattice = _lattice(cfg)
    law = _law(cfg, lattice)
    sim = _sim(cfg)
    drive = _drive(cfg, lattice)
    section = cfg.get("sweep", {})
    f_low = float(section.get("f_low", 2.0))
    f_high = float(section.get("f_high", 40.0))
    f_step = float(section.get("f_step", 1.0))
    if f_low <= 0 or f_high <= f_low or f_step <= 0:
        raise UsageError("sweep needs 0 < f_low < f_high and f_step > 0")
    factor = float(section.get("peak_median_factor", 1.5))
    design = _resolve_design(cfg, lattice, law, drive)
    out = _prepare_out_dir(cfg, args.config, "sweep", args)

    freqs = np.arange(f_low, f_high + 0.5 * f_step, f_step)
    result = nandness_sweep(design, freqs, sim, law, drive_base=drive,
                            peak_median_factor=factor)
    rows = [(f, *g, m) for f, g, m in
            zip(result.frequencies, result.gains, result.nandness)]
    _write_csv(os.path.join(out, "sweep.csv"),
               ["f", "G00", "G01", "G10", "G11", "M"], rows)
    _write_json(os.path.join(out, "sweep_peaks.json"), {
        "peaks": [{"frequency": float(result.frequencies[i]),
                   "nandness": float(result.nandness[i])}
                  for i in result.peaks],
        "failures": [{"frequency": f, "error": msg}
                     for f, msg in result.failures],
    })
    svg = line_plot_svg(result.frequencies,
                        {"M": result.nandness,
                         "G00": result.gains[:, 0], "G01": result.gains[:, 1],
                         "G10": result.gains[:, 2], "G11": result.gains[:, 3]},
                        title="NAND-ness across the spectrum",
                        x_label="frequency", y_label="gain / NAND-ness")
    with open(os.path.join(out, "sweep.svg"), "w") as fh:
        fh.write(svg)
    finite = [i for i in range(len(freqs)) if np.isfinite(result.nandness[i])]
    if finite:
        top = max(finite, key=lambda i: result.nandness[i])
        print(f"swept {len(freqs)} frequencies; max NAND-ness "
              f"{_fmt(result.nandness[top])} at f={result.frequencies[top]:.4g}; "
              f"{len(result.failures)} failures")
    return EXIT_OK


def cmd_heatmap(args) -> int:
    cfg = _load_config(args.config, "heatmap")
    lattice = _lattice(cfg)
    law = _law(cfg, lattice)
    sim = _sim(cfg)
    drive = _drive(cfg, lattice)
    freqs = cfg.get("heatmap", {}).get("frequencies", [drive.frequency])
    if not isinstance(freqs, list) or not 1 <= len(freqs) <= 2:
        raise UsageError("heatmap.frequencies must list one or two frequencies")
    design = _resolve_design(cfg, lattice, law, drive)
    out = _prepare_out_dir(cfg, args.config, "heatmap", args)

    if len(freqs) == 2:
        map1, map2 = dual_frequency_map(design, drive, sim, freqs, law)
    else:
        map1 = per_particle_map(design, drive, sim, law, frequency=freqs[0])
        map2 = None
    header = ["particle", "role", "G00", "G01", "G10", "G11", "M_f1"]
    rows = []
    for i in range(design.packing.n_particles):
        rows.append([i, map1.roles[i], *map1.gains[i], map1.nandness[i]])
    if map2 is not None:
        header.append("M_f2")
        for i, row in enumerate(rows):
            row.append(map2.nandness[i])
    _write_csv(os.path.join(out, "particle_map.csv"), header, rows)
    svg = lattice_heatmap_svg(
        design.packing, map1.nandness,
        map2.nandness if map2 is not None else None,
        roles=map1.roles,
        title=f"NAND-ness at f={freqs[0]:g}"
              + (f" (fill) and f={freqs[1]:g} (stroke)" if map2 else ""))
    with open(os.path.join(out, "heatmap.svg"), "w") as fh:
        fh.write(svg)
    m = np.where(np.isfinite(map1.nandness), map1.nandness, -np.inf)
    best = int(np.argmax(m))
    print(f"heatmap over {design.packing.n_particles} particles; "
          f"best NAND-ness {_fmt(map1.nandness[best])} at particle {best} "
          f"(designated output: {design.output_port})")
    return EXIT_OK


def cmd_noise(args) -> int:
    cfg = _load_config(args.config, "noise")
    lattice = _lattice(cfg)
    law = _law(cfg, lattice)
    sim = _sim(cfg)
    drive = _drive(cfg, lattice)
    section = cfg.get("noise", {})
    snr_list = section.get("snr_db", [40.0, 20.0, 0.0, -20.0, -40.0])
    trials = int(section.get("trials", 20))
    design = _resolve_design(cfg, lattice, law, drive)
    out = _prepare_out_dir(cfg, args.config, "noise", args)

    rng = np.random.default_rng(cfg.get("seed", 0))
    rows = noise_robustness(design, drive, sim, snr_list, trials, rng, law)
    _write_csv(os.path.join(out, "noise.csv"),
               ["snr_db", "G00_mean", "G01_mean", "G10_mean", "G11_mean",
                "M_mean", "M_std", "trials", "dropouts"],
               [(r["snr_db"], *r["mean_gains"], r["mean_nandness"],
                 r["std_nandness"], r["trials"], r["dropouts"]) for r in rows])
    svg = line_plot_svg([r["snr_db"] for r in rows],
                        {"mean M": [r["mean_nandness"] for r in rows]},
                        title="NAND-ness under input noise",
                        x_label="SNR (dB)", y_label="NAND-ness")
    with open(os.path.join(out, "noise.svg"), "w") as fh:
        fh.write(svg)
    for r in rows:
        print(f"SNR {r['snr_db']:+.0f} dB: mean M {_fmt(r['mean_nandness'])} "
              f"(std {_fmt(r['std_nandness'])}, "
              f"dropouts {r['dropouts']}/{r['trials']})")
    return EXIT_OK


def _evolution_config(cfg, command: str) -> EvolutionConfig:
    lattice = _lattice(cfg)
    law = _law(cfg, lattice)
    sim = _sim(cfg)
    drive = _drive(cfg, lattice)
    section = dict(cfg.get("evolution", {}))
    if command == "evolve-poly":
        section.setdefault("frequencies", [10.0, 20.0])
        section.setdefault("population_size", 100)
        if len(section["frequencies"]) != 2:
            raise UsageError("evolve-poly needs exactly two frequencies")
    else:
        section.setdefault("frequencies", [drive.frequency])
        section.setdefault("population_size", 50)
        if len(section["frequencies"]) != 1:
            raise UsageError("evolve optimizes one frequency; use evolve-poly for two")
    section.setdefault("generations", 500)
    section["frequencies"] = tuple(float(f) for f in section["frequencies"])
    return _build(EvolutionConfig, dict(
        section, rng_seed=int(cfg.get("seed", 0)), lattice=lattice, law=law,
        sim=sim, drive=drive), "evolution config")


def _latest_checkpoint(out: str) -> str | None:
    names = [n for n in os.listdir(out)
             if n.startswith("checkpoint_gen") and n.endswith(".json")]
    if not names:
        return None
    return os.path.join(out, max(names))


def _run_evolve(args, command: str) -> int:
    cfg = _load_config(args.config, command)
    evo_cfg = _evolution_config(cfg, command)
    workers = args.workers or int(cfg.get("workers", 0)) or os.cpu_count() or 1
    out = _prepare_out_dir(cfg, args.config, command, args)
    history_path = os.path.join(out, "history.jsonl")

    resume_from = None
    if args.resume:
        resume_from = _latest_checkpoint(out)
        if resume_from is None:
            raise UsageError(f"--resume: no checkpoint found in {out}")
        with open(resume_from) as fh:
            done_gen = json.load(fh)["generation"]
        if os.path.exists(history_path):   # drop records past the checkpoint
            with open(history_path) as fh:
                lines = [ln for ln in fh
                         if json.loads(ln)["generation"] <= done_gen]
            with open(history_path, "w") as fh:
                fh.writelines(lines)
    elif os.path.exists(history_path):
        os.remove(history_path)

    history_file = open(history_path, "a")

    def sink(record):
        history_file.write(json.dumps(record, sort_keys=True) + "\n")
        history_file.flush()

    def progress(record):
        best = ", ".join(_fmt(v) for v in record["best"])
        print(f"gen {record['generation']:4d}/{evo_cfg.generations}: "
              f"best F [{best}]  front {record['front_size']}  "
              f"sims {record['sim_runs']}", flush=True)

    try:
        result = run_evolution(evo_cfg, out_dir=out, workers=workers,
                               resume_from=resume_from, history_sink=sink,
                               progress=progress)
    finally:
        history_file.close()

    best = result.best
    genome = best.genome
    run_cfg = result.config          # on resume this is the checkpoint's config
    design = MaterialDesign(
        packing=result.packing,
        stiffness=genome.stiffness,
        ports=(*genome.input_ports,
               genome.source_port if genome.source_port is not None
               else run_cfg.drive.source_port,
               genome.output_port if genome.output_port is not None
               else run_cfg.drive.output_port))
    doc = design.to_dict()
    doc["objectives"] = list(best.objectives)
    doc["frequencies"] = list(run_cfg.frequencies)
    _write_json(os.path.join(out, "best_design.json"), doc)

    if len(run_cfg.frequencies) == 2:
        front = pareto_front(result.population)
        knee = knee_point(front)
        _write_json(os.path.join(out, "pareto_front.json"), {
            "front": [ind.to_dict() for ind in front],
            "knee": knee.to_dict(),
        })
    print(f"finished: best objectives "
          f"[{', '.join(_fmt(v) for v in best.objectives)}] after "
          f"{result.history[-1]['evaluations']} evaluations")
    return EXIT_OK


def cmd_evolve(args) -> int:
    return _run_evolve(args, "evolve")


def cmd_evolve_poly(args) -> int:
    return _run_evolve(args, "evolve-poly")


# ---------------------------------------------------------------------------
# entry point

def build_parser() -> _Parser:
    parser = _Parser(prog="grainlogic",
                     description="Granular NAND-gate design toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--overwrite", action="store_true",
                       help="replace an existing output directory")
        p.set_defaults(func=func)
        return p

    add("relax", cmd_relax).add_argument("--force-tol", type=float, default=None)
    p = add("evaluate", cmd_evaluate)
    p.add_argument("--bits", default=None, help="truth-table case to feature")
    p.add_argument("--emit-trajectories", action="store_true")
    add("modes", cmd_modes).add_argument("--shapes", action="store_true")
    add("sweep", cmd_sweep)
    add("heatmap", cmd_heatmap)
    add("noise", cmd_noise)
    for name, func in (("evolve", cmd_evolve), ("evolve-poly", cmd_evolve_poly)):
        p = add(name, func)
        p.add_argument("--resume", action="store_true",
                       help="continue from the latest checkpoint")
        p.add_argument("--workers", type=int, default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FireNonConvergence as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (SimulationBlowUp, UnstablePackingError, FloatingPointError,
            np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def run() -> None:
    sys.exit(main())
