"""Driven, damped DEM time integration and vibrational normal modes.

Driving is kinematic: input ports with bit 1 and the source port follow a
prescribed x(t) = x0 + A sin(2 pi f t + phase) exactly (y clamped at y0);
input ports with bit 0 are held at their equilibrium position; every other
particle integrates pair forces, wall forces and linear velocity damping
with velocity Verlet.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numba import njit

from .interactions import InteractionLaw, compute_forces, pair_prefactors, scalar_derivatives
from .packing import Packing

STABILITY_MARGIN = 0.1       # enforce dt * omega_max < this
MIN_SAMPLES_PER_PERIOD = 20
ZERO_MODE_TOL = 1e-8
BLOWUP_FACTOR = 5.0          # abort when any displacement exceeds 5 diameters


class SimulationBlowUp(RuntimeError):
    """Integration diverged; carries the step at which it was detected."""

    def __init__(self, step: int):
        super().__init__(f"simulation blew up at step {step} "
                         f"(displacement beyond {BLOWUP_FACTOR} diameters)")
        self.step = step


class UnstablePackingError(RuntimeError):
    """The Hessian has a negative eigenvalue beyond tolerance."""


@dataclass(frozen=True)
class SimParams:
    """Integration parameters.

    ``dt`` is a request: it is refined downward until dt * omega_max stays
    under the stability margin and, for driven runs, until the drive period
    is an integer number of steps.  ``total_steps`` counts integration steps
    (the trajectory holds total_steps + 1 samples).
    """

    # damping 1.0 gives a ring-down time of ~2 time units: transients are
    # gone well inside the default run while 10 Hz modes keep Q ~ 60, sharp
    # enough for resonant gating
    dt: float = 1e-2
    total_steps: int = 10_000
    damping: float = 1.0
    transient_fraction: float = 0.5

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.total_steps < 1:
            raise ValueError("total_steps must be at least 1")
        if self.damping < 0:
            raise ValueError("damping must be non-negative")
        if not 0.0 <= self.transient_fraction < 1.0:
            raise ValueError("transient_fraction must lie in [0, 1)")

    def to_dict(self) -> dict:
        return {
            "dt": self.dt,
            "total_steps": self.total_steps,
            "damping": self.damping,
            "transient_fraction": self.transient_fraction,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimParams":
        return cls(**d)


@dataclass(frozen=True)
class DriveSpec:
    """Port roles, drive amplitudes, frequency, phase offsets and bit pair."""

    # 0.002 is 0.02 diameters: contacts still open and close against the
    # ~0.002-diameter lattice overlaps (the gate's nonlinearity) but
    # particles stay caged; at 0.1 diameters the weakly jammed packing
    # rearranges plastically and trips the blow-up detector
    input_ports: tuple
    source_port: int
    output_port: int
    a1: float = 0.002
    a2: float = 0.002
    a_source: float = 0.002
    frequency: float = 10.0
    phase1: float = 0.0
    phase2: float = 0.0
    bits: tuple = (1, 1)

    def __post_init__(self):
        object.__setattr__(self, "input_ports", tuple(int(p) for p in self.input_ports))
        object.__setattr__(self, "bits", tuple(int(b) for b in self.bits))
        if len(self.input_ports) != 2:
            raise ValueError("exactly two input ports required")
        ports = (*self.input_ports, self.source_port, self.output_port)
        if len(set(ports)) != 4:
            raise ValueError("input, source and output ports must be pairwise distinct")
        if any(p < 0 for p in ports):
            raise ValueError("port indices must be non-negative")
        if min(self.a1, self.a2, self.a_source) < 0:
            raise ValueError("amplitudes must be non-negative")
        if self.frequency <= 0:
            raise ValueError("frequency must be positive")
        if len(self.bits) != 2 or any(b not in (0, 1) for b in self.bits):
            raise ValueError("bits must be a pair of 0/1 values")

    @property
    def ports(self) -> tuple:
        return (*self.input_ports, self.source_port, self.output_port)

    def with_bits(self, b1: int, b2: int) -> "DriveSpec":
        return replace(self, bits=(b1, b2))

    def to_dict(self) -> dict:
        return {
            "input_ports": list(self.input_ports),
            "source_port": self.source_port,
            "output_port": self.output_port,
            "a1": self.a1,
            "a2": self.a2,
            "a_source": self.a_source,
            "frequency": self.frequency,
            "phase1": self.phase1,
            "phase2": self.phase2,
            "bits": list(self.bits),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DriveSpec":
        d = dict(d)
        d["input_ports"] = tuple(d["input_ports"])
        d["bits"] = tuple(d.get("bits", (1, 1)))
        return cls(**d)


@dataclass(frozen=True)
class Trajectory:
    """Per-particle displacement time series (x - x0, y - y0)."""

    displacements: np.ndarray    # (total_steps + 1, N, 2)
    dt: float
    analysis_start: int
    final_velocities: np.ndarray | None = None

    @property
    def n_samples(self) -> int:
        return self.displacements.shape[0]

    @property
    def n_particles(self) -> int:
        return self.displacements.shape[1]

    def window(self, particle: int, axis: int = 0) -> np.ndarray:
        """Analysis-window samples of one particle's displacement component."""
        return self.displacements[self.analysis_start:, particle, axis]


@njit(cache=True)
def _verlet_loop(pos0, kpair, kwall, width, height, cutoff, sigma6, kind,
                 wall_on, mass, damping, dt, n_steps, driven_idx, driven_disp,
                 clamped_idx, vel, blow_limit, disp_out):
    n = pos0.shape[0]
    pos = pos0.copy()
    mobile = np.ones(n, dtype=np.bool_)
    for t in range(driven_idx.size):
        mobile[driven_idx[t]] = False
    for t in range(clamped_idx.size):
        mobile[clamped_idx[t]] = False
    forces = np.zeros((n, 2))
    for m in range(driven_idx.size):
        i = driven_idx[m]
        pos[i, 0] = pos0[i, 0] + driven_disp[m, 0]
    compute_forces(pos, kpair, kwall, width, height, cutoff, sigma6, kind,
                   wall_on, forces)
    for i in range(n):
        disp_out[0, i, 0] = pos[i, 0] - pos0[i, 0]
        disp_out[0, i, 1] = pos[i, 1] - pos0[i, 1]
    half_damp = 0.5 * dt * damping / mass
    for step in range(1, n_steps + 1):
        for i in range(n):
            if mobile[i]:
                vel[i, 0] += 0.5 * dt * (forces[i, 0] - damping * vel[i, 0]) / mass
                vel[i, 1] += 0.5 * dt * (forces[i, 1] - damping * vel[i, 1]) / mass
                pos[i, 0] += dt * vel[i, 0]
                pos[i, 1] += dt * vel[i, 1]
        for m in range(driven_idx.size):
            i = driven_idx[m]
            pos[i, 0] = pos0[i, 0] + driven_disp[m, step]
        compute_forces(pos, kpair, kwall, width, height, cutoff, sigma6, kind,
                       wall_on, forces)
        for i in range(n):
            if mobile[i]:
                vel[i, 0] = (vel[i, 0] + 0.5 * dt * forces[i, 0] / mass) / (1.0 + half_damp)
                vel[i, 1] = (vel[i, 1] + 0.5 * dt * forces[i, 1] / mass) / (1.0 + half_damp)
        bad = False
        for i in range(n):
            ddx = pos[i, 0] - pos0[i, 0]
            ddy = pos[i, 1] - pos0[i, 1]
            disp_out[step, i, 0] = ddx
            disp_out[step, i, 1] = ddy
            if not (abs(ddx) <= blow_limit and abs(ddy) <= blow_limit):
                bad = True
        if bad:
            return step
    return 0


def hessian(packing: Packing, stiffness, law: InteractionLaw | None = None) -> np.ndarray:
    """Mass-normalized 2N x 2N Hessian of the total potential (analytic)."""
    if law is None:
        law = InteractionLaw(cutoff=packing.diameter)
    pos = packing.positions
    n = packing.n_particles
    width, height = packing.box
    kpair, kwall = pair_prefactors(stiffness, law)
    H = np.zeros((2 * n, 2 * n))
    eye2 = np.eye(2)
    for i in range(n):
        for j in range(i + 1, n):
            dx = pos[i, 0] - pos[j, 0]
            dx -= width * round(dx / width)
            dy = pos[i, 1] - pos[j, 1]
            if not packing.wall_on:
                dy -= height * round(dy / height)
            r = math.hypot(dx, dy)
            if r >= law.cutoff or r == 0.0:
                continue
            u = np.array([dx / r, dy / r])
            _, dv, d2v = scalar_derivatives(r, kpair[i, j], law)
            block = d2v * np.outer(u, u) + (dv / r) * (eye2 - np.outer(u, u))
            si, sj = 2 * i, 2 * j
            H[si:si + 2, si:si + 2] += block
            H[sj:sj + 2, sj:sj + 2] += block
            H[si:si + 2, sj:sj + 2] -= block
            H[sj:sj + 2, si:si + 2] -= block
    if packing.wall_on:
        half = 0.5 * law.cutoff
        for i in range(n):
            for d in (pos[i, 1], height - pos[i, 1]):
                if d < half:
                    _, _, d2v = scalar_derivatives(d + half, kwall[i], law)
                    H[2 * i + 1, 2 * i + 1] += d2v
    H /= packing.mass
    return 0.5 * (H + H.T)


def normal_modes(packing: Packing, stiffness, law: InteractionLaw | None = None):
    """Eigenfrequencies (cycles per time, ascending) and mode shapes (columns).

    Near-zero eigenvalues (|lambda| < 1e-8) are reported as zero modes;
    negative eigenvalues beyond -1e-8 raise UnstablePackingError.
    """
    H = hessian(packing, stiffness, law)
    evals, evecs = np.linalg.eigh(H)
    if evals[0] < -ZERO_MODE_TOL:
        raise UnstablePackingError(
            f"negative Hessian eigenvalue {evals[0]:.3e}: packing is not a "
            f"stable equilibrium for this stiffness"
        )
    evals = np.where(np.abs(evals) < ZERO_MODE_TOL, 0.0, evals)
    freqs = np.sqrt(np.maximum(evals, 0.0)) / (2.0 * math.pi)
    return freqs, evecs


def max_angular_frequency(packing: Packing, stiffness, law: InteractionLaw | None = None) -> float:
    """sqrt of the largest Hessian eigenvalue magnitude (rad per time)."""
    H = hessian(packing, stiffness, law)
    evals = np.linalg.eigvalsh(H)
    lam = max(abs(evals[0]), abs(evals[-1]))
    return math.sqrt(lam) if lam > 0 else 0.0


@dataclass(frozen=True)
class Timing:
    """Resolved integration timing for a driven run."""

    dt: float
    steps_per_period: int
    total_steps: int
    analysis_start: int

    @property
    def window_samples(self) -> int:
        return self.total_steps + 1 - self.analysis_start

    @property
    def window_periods(self) -> int:
        return self.window_samples // self.steps_per_period


def resolve_timing(params: SimParams, frequency: float, omega_max: float) -> Timing:
    """Pick dt so the run is stable and the drive period is whole in steps.

    The analysis window is the largest whole number of periods that fits in
    the last (1 - transient_fraction) of the run; at least two periods must
    fit or the parameters are rejected.
    """
    dt_stable = params.dt
    if omega_max > 0:
        dt_stable = min(dt_stable, STABILITY_MARGIN / omega_max)
    spp = max(MIN_SAMPLES_PER_PERIOD, math.ceil(1.0 / (frequency * dt_stable) - 1e-9))
    dt = 1.0 / (frequency * spp)
    budget = int(math.floor((1.0 - params.transient_fraction) * params.total_steps))
    periods = budget // spp
    if periods < 2:
        raise ValueError(
            f"analysis window holds {periods} full periods of f={frequency}; "
            f"need at least 2 (increase total_steps or transient_fraction budget)"
        )
    window = periods * spp
    return Timing(dt=dt, steps_per_period=spp,
                  total_steps=params.total_steps,
                  analysis_start=params.total_steps + 1 - window)


def drive_signals(drive: DriveSpec, n_steps: int, dt: float):
    """Prescribed x-displacement series for (input1, input2, source).

    A bit of 0 clamps that input: its series is identically zero.
    """
    t = np.arange(n_steps + 1) * dt
    omega = 2.0 * math.pi * drive.frequency
    sig = np.zeros((3, n_steps + 1))
    if drive.bits[0]:
        sig[0] = drive.a1 * np.sin(omega * t + drive.phase1)
    if drive.bits[1]:
        sig[1] = drive.a2 * np.sin(omega * t + drive.phase2)
    sig[2] = drive.a_source * np.sin(omega * t)
    indices = np.array([drive.input_ports[0], drive.input_ports[1],
                        drive.source_port], dtype=np.int64)
    return indices, sig


def run_dynamics(packing: Packing, stiffness, params: SimParams,
                 law: InteractionLaw | None = None, *, dt: float | None = None,
                 analysis_start: int | None = None,
                 driven: tuple | None = None, clamped=(),
                 initial_velocities: np.ndarray | None = None) -> Trajectory:
    """Low-level integrator entry point.

    ``driven`` is an optional (indices, displacement series) pair of shapes
    (M,) and (M, total_steps+1).  ``dt`` bypasses timing resolution (it is
    still validated against the stability margin elsewhere by callers that
    care).  Raises SimulationBlowUp on divergence.
    """
    if law is None:
        law = InteractionLaw(cutoff=packing.diameter)
    n = packing.n_particles
    stiffness = np.asarray(stiffness, dtype=np.float64)
    if stiffness.shape != (n,):
        raise ValueError("stiffness vector length must match particle count")
    if packing.box[0] < 2.0 * law.cutoff:
        raise ValueError("box width must be at least two cutoffs for the "
                         "single-image convention")
    if dt is None:
        omega = max_angular_frequency(packing, stiffness, law)
        dt = params.dt if omega == 0 else min(params.dt, STABILITY_MARGIN / omega)
    if driven is None:
        driven_idx = np.empty(0, dtype=np.int64)
        driven_disp = np.empty((0, params.total_steps + 1))
    else:
        driven_idx = np.asarray(driven[0], dtype=np.int64)
        driven_disp = np.ascontiguousarray(driven[1], dtype=np.float64)
        if driven_disp.shape != (driven_idx.size, params.total_steps + 1):
            raise ValueError("driven displacement series shape mismatch")
    clamped_idx = np.asarray(list(clamped), dtype=np.int64)
    vel = np.zeros((n, 2)) if initial_velocities is None \
        else np.ascontiguousarray(initial_velocities, dtype=np.float64).copy()
    kpair, kwall = pair_prefactors(stiffness, law)
    disp = np.empty((params.total_steps + 1, n, 2))
    bad_step = _verlet_loop(
        packing.positions, kpair, kwall, packing.box[0], packing.box[1],
        law.cutoff, law.sigma ** 6, law.kind_code, packing.wall_on,
        packing.mass, params.damping, dt, params.total_steps,
        driven_idx, driven_disp, clamped_idx, vel,
        BLOWUP_FACTOR * packing.diameter, disp,
    )
    if bad_step:
        raise SimulationBlowUp(bad_step)
    if analysis_start is None:
        analysis_start = int(math.ceil(params.transient_fraction * params.total_steps))
    return Trajectory(displacements=disp, dt=dt, analysis_start=analysis_start,
                      final_velocities=vel)


def simulate(packing: Packing, stiffness, drive: DriveSpec, params: SimParams,
             law: InteractionLaw | None = None, *,
             drive_series: np.ndarray | None = None,
             timing: Timing | None = None) -> Trajectory:
    """Integrate one truth-table case of the driven assembly.

    ``drive_series`` optionally overrides the clean sinusoids (same (3, S+1)
    layout as ``drive_signals``); this is how calibrated noise is injected.
    """
    if law is None:
        law = InteractionLaw(cutoff=packing.diameter)
    if timing is None:
        omega = max_angular_frequency(packing, stiffness, law)
        timing = resolve_timing(params, drive.frequency, omega)
    indices, signals = drive_signals(drive, timing.total_steps, timing.dt)
    if drive_series is not None:
        if drive_series.shape != signals.shape:
            raise ValueError("drive_series must have shape (3, total_steps + 1)")
        signals = drive_series
    return run_dynamics(
        packing, stiffness, params, law,
        dt=timing.dt, analysis_start=timing.analysis_start,
        driven=(indices, signals),
    )


def kinetic_energy(velocities: np.ndarray, mass: float) -> float:
    return 0.5 * mass * float(np.sum(velocities ** 2))
