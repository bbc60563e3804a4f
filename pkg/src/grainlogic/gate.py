"""Evaluate a material as a NAND gate.

Runs the four truth-table cases 00, 01, 10, 11 and reads the output port's
x-displacement amplitude at the drive frequency.  Gains divide that output
amplitude by the summed input spectral amplitudes, where an inactive (bit 0)
input contributes the source drive's amplitude as the baseline; with equal
drive amplitudes all four denominators coincide.

Fitness is the worst-case deviation from the ideal NAND gain pattern
(1, 1, 1, 0); NAND-ness is the ratio G00*G01*G10 / G11 (bigger is better,
+inf when G11 vanishes with a nonzero numerator, nan when everything is 0).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .dynamics import (
    DriveSpec,
    SimParams,
    SimulationBlowUp,
    Timing,
    Trajectory,
    UnstablePackingError,
    drive_signals,
    max_angular_frequency,
    resolve_timing,
    simulate,
)
from .interactions import InteractionLaw
from .packing import FireNonConvergence, Packing, relax_fire
from .spectral import add_awgn, amplitude_at

# failure modes of one evaluation that callers aggregate instead of aborting on
RUN_FAILURES = (SimulationBlowUp, UnstablePackingError, FireNonConvergence,
                FloatingPointError, np.linalg.LinAlgError)

BIT_CASES = ((0, 0), (0, 1), (1, 0), (1, 1))
CASE_LABELS = ("00", "01", "10", "11")


@dataclass(frozen=True)
class MaterialDesign:
    """A packing plus per-particle stiffness and the four port assignments."""

    packing: Packing
    stiffness: np.ndarray
    ports: tuple          # (input1, input2, source, output)

    def __post_init__(self):
        stiff = np.asarray(self.stiffness, dtype=np.float64)
        if stiff.shape != (self.packing.n_particles,):
            raise ValueError("stiffness length must equal the particle count")
        object.__setattr__(self, "stiffness", stiff)
        ports = tuple(int(p) for p in self.ports)
        if len(ports) != 4 or len(set(ports)) != 4:
            raise ValueError("need four pairwise distinct ports")
        if any(not 0 <= p < self.packing.n_particles for p in ports):
            raise ValueError("port index out of range")
        object.__setattr__(self, "ports", ports)

    @property
    def input_ports(self) -> tuple:
        return self.ports[:2]

    @property
    def source_port(self) -> int:
        return self.ports[2]

    @property
    def output_port(self) -> int:
        return self.ports[3]

    def to_dict(self) -> dict:
        return {
            "stiffness": self.stiffness.tolist(),
            "input_ports": list(self.ports[:2]),
            "source_port": self.ports[2],
            "output_port": self.ports[3],
            "packing": self.packing.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MaterialDesign":
        return cls(
            packing=Packing.from_dict(d["packing"]),
            stiffness=np.asarray(d["stiffness"], dtype=np.float64),
            ports=(*d["input_ports"], d["source_port"], d["output_port"]),
        )


@dataclass(frozen=True)
class GateResult:
    """Spectral output amplitudes, gains, fitness and NAND-ness at one frequency."""

    frequency: float
    output_amplitudes: tuple    # (O00, O01, O10, O11)
    gains: tuple                # (G00, G01, G10, G11)
    fitness: float
    nandness: float
    dt: float
    window_periods: int

    def to_dict(self) -> dict:
        return {
            "frequency": self.frequency,
            "output_amplitudes": dict(zip(CASE_LABELS, self.output_amplitudes)),
            "gains": dict(zip(CASE_LABELS, self.gains)),
            "fitness": self.fitness,
            "nandness": self.nandness,
            "dt": self.dt,
            "window_periods": self.window_periods,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GateResult":
        return cls(
            frequency=d["frequency"],
            output_amplitudes=tuple(d["output_amplitudes"][c] for c in CASE_LABELS),
            gains=tuple(d["gains"][c] for c in CASE_LABELS),
            fitness=d["fitness"],
            nandness=d["nandness"],
            dt=d["dt"],
            window_periods=d["window_periods"],
        )


def nand_fitness(gains) -> float:
    """Worst-case deviation from the ideal NAND gain pattern (1, 1, 1, 0)."""
    g00, g01, g10, g11 = gains
    return max(abs(1.0 - g00), abs(1.0 - g01), abs(1.0 - g10), abs(g11))


def nandness(gains) -> float:
    """G00*G01*G10 / G11 with +inf / nan sentinels for a vanishing G11."""
    g00, g01, g10, g11 = gains
    num = g00 * g01 * g10
    if g11 > 0.0:
        return num / g11
    return math.inf if num > 0.0 else math.nan


def read_bit(output_amplitude: float, reference_amplitude: float,
             threshold: float = 0.5) -> int:
    """1 iff output/reference >= threshold (ties read as 1)."""
    if reference_amplitude <= 0:
        raise ValueError("reference amplitude must be positive")
    return 1 if output_amplitude / reference_amplitude >= threshold else 0


@dataclass(frozen=True)
class CaseRun:
    """One truth-table case: its trajectory, drive series and denominator."""

    bits: tuple
    trajectory: Trajectory
    signals: np.ndarray        # (3, S+1) prescribed displacement series
    input_amplitudes: tuple    # spectral amplitude credited to each input
    denominator: float


def _resolve(design: MaterialDesign, params: SimParams, frequency: float,
             law: InteractionLaw | None, relax_with_stiffness: bool):
    packing = design.packing
    if law is None:
        law = InteractionLaw(cutoff=packing.diameter)
    if relax_with_stiffness:
        packing = relax_fire(packing, design.stiffness, law=law)
    omega = max_angular_frequency(packing, design.stiffness, law)
    timing = resolve_timing(params, frequency, omega)
    return packing, law, timing


def _run_cases(design: MaterialDesign, drive_base: DriveSpec, params: SimParams,
               law: InteractionLaw | None = None,
               input_noise_snr_db: float | None = None,
               rng: np.random.Generator | None = None,
               relax_with_stiffness: bool = False,
               frequency: float | None = None):
    """Simulate the four bit cases; returns (cases, packing, law, timing)."""
    if frequency is None:
        frequency = drive_base.frequency
    drive_base = replace(
        drive_base,
        input_ports=design.input_ports,
        source_port=design.source_port,
        output_port=design.output_port,
        frequency=frequency,
    )
    packing, law, timing = _resolve(design, params, frequency, law,
                                    relax_with_stiffness)
    noisy = input_noise_snr_db is not None and not (
        math.isinf(input_noise_snr_db) and input_noise_snr_db > 0)
    if noisy and rng is None:
        raise ValueError("noise injection requires a random generator")

    cases = []
    for bits in BIT_CASES:
        drive = drive_base.with_bits(*bits)
        _, signals = drive_signals(drive, timing.total_steps, timing.dt)
        if noisy:
            for k in range(2):              # AWGN rides on active input signals only
                if bits[k]:
                    signals[k] = add_awgn(signals[k], input_noise_snr_db, rng)
        traj = simulate(packing, design.stiffness, drive, params, law,
                        drive_series=signals, timing=timing)
        start = timing.analysis_start
        source_amp = amplitude_at(signals[2, start:], timing.dt, frequency).magnitude
        in_amps = tuple(
            amplitude_at(signals[k, start:], timing.dt, frequency).magnitude
            if bits[k] else source_amp
            for k in range(2)
        )
        cases.append(CaseRun(bits=bits, trajectory=traj, signals=signals,
                             input_amplitudes=in_amps,
                             denominator=in_amps[0] + in_amps[1]))
    return cases, packing, law, timing


def _gain(output_amplitude: float, denominator: float) -> float:
    if denominator == 0.0:
        return math.inf if output_amplitude > 0.0 else 0.0
    return output_amplitude / denominator


def evaluate_gate(design: MaterialDesign, drive_base: DriveSpec,
                  params: SimParams, law: InteractionLaw | None = None, *,
                  frequency: float | None = None,
                  input_noise_snr_db: float | None = None,
                  rng: np.random.Generator | None = None,
                  relax_with_stiffness: bool = False,
                  output_reading: str = "x",
                  return_cases: bool = False):
    """Run the four truth-table cases and score the material as a NAND gate.

    Deterministic for identical inputs (and generator state when noise is
    on).  Simulation blow-ups propagate as SimulationBlowUp.  The output is
    read along the drive axis by default; ``output_reading="xy"`` combines
    both displacement components instead.
    """
    if output_reading not in ("x", "xy"):
        raise ValueError("output_reading must be 'x' or 'xy'")
    cases, packing, law, timing = _run_cases(
        design, drive_base, params, law, input_noise_snr_db, rng,
        relax_with_stiffness, frequency)
    f = frequency if frequency is not None else drive_base.frequency
    out = design.output_port

    def output_amp(case):
        ax = amplitude_at(case.trajectory.window(out, 0), timing.dt, f).magnitude
        if output_reading == "x":
            return ax
        ay = amplitude_at(case.trajectory.window(out, 1), timing.dt, f).magnitude
        return math.hypot(ax, ay)

    amps = tuple(output_amp(case) for case in cases)
    gains = tuple(_gain(a, case.denominator) for a, case in zip(amps, cases))
    result = GateResult(
        frequency=f,
        output_amplitudes=amps,
        gains=gains,
        fitness=nand_fitness(gains),
        nandness=nandness(gains),
        dt=timing.dt,
        window_periods=timing.window_periods,
    )
    if return_cases:
        return result, cases
    return result


@dataclass(frozen=True)
class ParticleMap:
    """Gate metrics with every particle read as a candidate output."""

    frequency: float
    gains: np.ndarray        # (N, 4)
    nandness: np.ndarray     # (N,)
    roles: tuple             # per particle: free/input1/input2/source/output

    def row(self, particle: int) -> dict:
        return {
            "particle": particle,
            "gains": tuple(self.gains[particle]),
            "nandness": float(self.nandness[particle]),
            "role": self.roles[particle],
        }


def per_particle_map(design: MaterialDesign, drive_base: DriveSpec,
                     params: SimParams, law: InteractionLaw | None = None, *,
                     frequency: float | None = None) -> ParticleMap:
    """One four-case run, metrics computed at every particle's x-displacement.

    Driven ports are included but flagged by role (their numbers describe
    prescribed motion, not a free response).
    """
    cases, packing, law, timing = _run_cases(design, drive_base, params, law,
                                             frequency=frequency)
    f = frequency if frequency is not None else drive_base.frequency
    n = packing.n_particles
    gains = np.empty((n, 4))
    for c, case in enumerate(cases):
        win = case.trajectory.displacements[timing.analysis_start:, :, 0]
        t = np.arange(win.shape[0]) * timing.dt
        phases = np.exp(-2j * math.pi * f * t)
        coeffs = (2.0 / win.shape[0]) * (phases @ win)
        amps = np.abs(coeffs)
        denom = case.denominator
        gains[:, c] = amps / denom if denom > 0 else np.where(amps > 0, np.inf, 0.0)
    m = np.empty(n)
    for i in range(n):
        m[i] = nandness(tuple(gains[i]))
    roles = ["free"] * n
    roles[design.input_ports[0]] = "input1"
    roles[design.input_ports[1]] = "input2"
    roles[design.source_port] = "source"
    roles[design.output_port] = "output"
    return ParticleMap(frequency=f, gains=gains, nandness=m, roles=tuple(roles))


def dual_frequency_map(design: MaterialDesign, drive_base: DriveSpec,
                       params: SimParams, frequencies,
                       law: InteractionLaw | None = None):
    """Per-particle NAND-ness maps at two frequencies (heatmap fill/stroke)."""
    f1, f2 = frequencies
    return (per_particle_map(design, drive_base, params, law, frequency=f1),
            per_particle_map(design, drive_base, params, law, frequency=f2))


@dataclass(frozen=True)
class SweepResult:
    """NAND-ness and gains across a frequency grid, plus detected peaks."""

    frequencies: np.ndarray
    gains: np.ndarray        # (F, 4); nan rows for failed frequencies
    nandness: np.ndarray     # (F,)
    peaks: tuple             # indices of local maxima above the threshold
    failures: tuple          # (frequency, message) pairs


def nandness_sweep(design: MaterialDesign, frequencies, params: SimParams,
                   law: InteractionLaw | None = None, drive_base: DriveSpec | None = None,
                   peak_median_factor: float = 1.5) -> SweepResult:
    """Evaluate the gate at each frequency of a sweep grid.

    Per-frequency failures are recorded and the sweep continues.  Peaks are
    local maxima strictly above both neighbors with NAND-ness at least
    ``peak_median_factor`` times the sweep median; +inf outranks all finite
    values.
    """
    freqs = np.asarray(list(frequencies), dtype=np.float64)
    if freqs.size == 0 or np.any(freqs <= 0):
        raise ValueError("sweep frequencies must be positive")
    if drive_base is None:
        drive_base = DriveSpec(input_ports=design.input_ports,
                               source_port=design.source_port,
                               output_port=design.output_port,
                               frequency=float(freqs[0]))
    gains = np.full((freqs.size, 4), np.nan)
    m = np.full(freqs.size, np.nan)
    failures = []
    for i, f in enumerate(freqs):
        try:
            res = evaluate_gate(design, drive_base, params, law, frequency=float(f))
        except (*RUN_FAILURES, ValueError) as exc:
            failures.append((float(f), f"{type(exc).__name__}: {exc}"))
            continue
        gains[i] = res.gains
        m[i] = res.nandness
    finite = m[np.isfinite(m)]
    threshold = peak_median_factor * float(np.median(finite)) if finite.size else math.inf
    peaks = []
    for i in range(1, freqs.size - 1):
        left, mid, right = m[i - 1], m[i], m[i + 1]
        if np.isnan(mid):
            continue
        higher_left = np.isnan(left) or (mid > left)
        higher_right = np.isnan(right) or (mid > right)
        if higher_left and higher_right and (mid >= threshold or math.isinf(mid)):
            peaks.append(i)
    peaks.sort(key=lambda i: -m[i] if np.isfinite(m[i]) else -math.inf)
    return SweepResult(frequencies=freqs, gains=gains, nandness=m,
                       peaks=tuple(peaks), failures=tuple(failures))


def noise_robustness(design: MaterialDesign, drive_base: DriveSpec,
                     params: SimParams, snr_list, trials: int,
                     rng: np.random.Generator,
                     law: InteractionLaw | None = None):
    """Gate metrics under input-signal AWGN, aggregated over seeded trials.

    Returns one row per SNR: mean gains, mean/std NAND-ness over successful
    trials, and the number of per-trial failures (dropouts).
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    snr_list = list(snr_list)
    seeds = rng.integers(0, 2 ** 63 - 1, size=(len(snr_list), trials))
    rows = []
    for s, snr in enumerate(snr_list):
        gains = []
        ms = []
        dropouts = 0
        for t in range(trials):
            trial_rng = np.random.default_rng(int(seeds[s, t]))
            try:
                res = evaluate_gate(design, drive_base, params, law,
                                    input_noise_snr_db=float(snr),
                                    rng=trial_rng)
            except RUN_FAILURES:
                dropouts += 1
                continue
            gains.append(res.gains)
            ms.append(res.nandness)
        if gains:
            garr = np.asarray(gains)
            marr = np.asarray(ms)
            finite = marr[np.isfinite(marr)]
            mean_m = float(np.mean(finite)) if finite.size else math.nan
            std_m = float(np.std(finite)) if finite.size else math.nan
            mean_gains = tuple(float(v) for v in garr.mean(axis=0))
        else:
            mean_m = math.nan
            std_m = math.nan
            mean_gains = (math.nan,) * 4
        rows.append({
            "snr_db": float(snr),
            "mean_gains": mean_gains,
            "mean_nandness": mean_m,
            "std_nandness": std_m,
            "trials": trials,
            "dropouts": dropouts,
        })
    return rows
