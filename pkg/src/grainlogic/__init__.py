"""Evolving granular materials whose vibrations compute NAND gates."""

__version__ = "0.1.0"

from .interactions import InteractionLaw, pair_force, pair_potential
from .packing import (
    FireNonConvergence,
    LatticeSpec,
    Packing,
    build_lattice,
    packing_fraction,
    relax_fire,
)
from .dynamics import (
    DriveSpec,
    SimParams,
    SimulationBlowUp,
    Trajectory,
    UnstablePackingError,
    normal_modes,
    simulate,
)
from .spectral import Spectrum, add_awgn, amplitude_at, measured_snr
from .gate import (
    GateResult,
    MaterialDesign,
    evaluate_gate,
    nand_fitness,
    nandness,
    nandness_sweep,
    noise_robustness,
    per_particle_map,
    read_bit,
)
from .evolve import (
    EvolutionConfig,
    Genome,
    Individual,
    afpo_generation,
    dominates,
    knee_point,
    mutate,
    run_evolution,
)
