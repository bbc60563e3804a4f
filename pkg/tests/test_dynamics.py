import math
from dataclasses import replace

import numpy as np
import pytest

from conftest import make_packing
from grainlogic.dynamics import (
    DriveSpec,
    SimParams,
    SimulationBlowUp,
    UnstablePackingError,
    drive_signals,
    hessian,
    max_angular_frequency,
    normal_modes,
    resolve_timing,
    run_dynamics,
    simulate,
)
from grainlogic.interactions import (
    HARMONIC,
    InteractionLaw,
    pair_prefactors,
    system_forces,
)
from grainlogic.spectral import amplitude_at


def total_energy(packing, stiffness, law, displacement, velocities):
    kpair, kwall = pair_prefactors(stiffness, law)
    pos = packing.positions + displacement
    _, pe = system_forces(pos, kpair, kwall, packing.box, law, packing.wall_on)
    return pe + 0.5 * packing.mass * float(np.sum(velocities ** 2))


def test_drive_spec_validation():
    with pytest.raises(ValueError):
        DriveSpec(input_ports=(1, 1), source_port=2, output_port=3)
    with pytest.raises(ValueError):
        DriveSpec(input_ports=(0, 1), source_port=1, output_port=3)
    with pytest.raises(ValueError):
        DriveSpec(input_ports=(0, 1), source_port=2, output_port=3, a1=-0.1)
    with pytest.raises(ValueError):
        DriveSpec(input_ports=(0, 1), source_port=2, output_port=3, frequency=0.0)
    with pytest.raises(ValueError):
        DriveSpec(input_ports=(0, 1), source_port=2, output_port=3, bits=(2, 0))


def test_bit_zero_input_signal_is_clamped(base_drive):
    drive = base_drive.with_bits(0, 1)
    _, signals = drive_signals(drive, 100, 1e-3)
    assert np.all(signals[0] == 0.0)
    assert np.any(signals[1] != 0.0)
    assert np.any(signals[2] != 0.0)


def test_zero_amplitude_drive_is_fixed_point(relaxed_packing, base_drive, law):
    drive = replace(base_drive, a1=0.0, a2=0.0, a_source=0.0)
    stiffness = np.ones(relaxed_packing.n_particles)
    traj = simulate(relaxed_packing, stiffness, drive, SimParams(), law)
    assert np.abs(traj.displacements).max() < 1e-8


def test_energy_conservation_undriven_undamped(relaxed_packing, law):
    stiffness = np.ones(relaxed_packing.n_particles)
    params = SimParams(damping=0.0, total_steps=10_000)
    rng = np.random.default_rng(42)
    v0 = rng.normal(0.0, 1e-3, (relaxed_packing.n_particles, 2))
    omega = max_angular_frequency(relaxed_packing, stiffness, law)
    traj = run_dynamics(relaxed_packing, stiffness, params, law,
                        dt=0.1 / omega, initial_velocities=v0)
    e0 = total_energy(relaxed_packing, stiffness, law,
                      traj.displacements[0], v0)
    e1 = total_energy(relaxed_packing, stiffness, law,
                      traj.displacements[-1], traj.final_velocities)
    assert abs(e1 - e0) / abs(e0) < 1e-6


def test_trajectory_shape_and_finiteness(relaxed_packing, base_drive, law):
    stiffness = np.ones(relaxed_packing.n_particles)
    params = SimParams(total_steps=2000)
    traj = simulate(relaxed_packing, stiffness, base_drive, params, law)
    assert traj.n_samples == params.total_steps + 1
    assert traj.n_particles == relaxed_packing.n_particles
    assert np.all(np.isfinite(traj.displacements))
    assert 0 < traj.analysis_start < traj.n_samples


def test_simulate_deterministic(relaxed_packing, base_drive, law):
    stiffness = np.ones(relaxed_packing.n_particles)
    params = SimParams(total_steps=2000)
    t1 = simulate(relaxed_packing, stiffness, base_drive, params, law)
    t2 = simulate(relaxed_packing, stiffness, base_drive, params, law)
    assert np.array_equal(t1.displacements, t2.displacements)


def test_bounce_frequency_matches_analytic():
    """Contact dwell of a bounce off a pinned disk is half the spring period."""
    cutoff = 0.1
    law = InteractionLaw(kind=HARMONIC, cutoff=cutoff)
    gap = 0.001
    p = make_packing([[1.0, 1.0], [1.0 + cutoff + gap, 1.0]], (4.0, 2.0),
                     diameter=cutoff)
    k = np.array([1.0, 1.0])       # series mix of (1, 1) is 1
    dt = 1e-3
    v = -0.01
    params = SimParams(dt=dt, total_steps=8000, damping=0.0)
    traj = run_dynamics(p, k, params, law, dt=dt, clamped=(0,),
                        initial_velocities=np.array([[0.0, 0.0], [v, 0.0]]))
    sep = (p.positions[1, 0] + traj.displacements[:, 1, 0]) - p.positions[0, 0]
    overlap = cutoff - sep
    inside = np.where(overlap > 0)[0]
    assert inside.size > 100
    first, last = inside[0], inside[-1]
    # linear interpolation of the contact entry/exit instants
    t_in = (first - 1 + (0.0 - overlap[first - 1])
            / (overlap[first] - overlap[first - 1])) * dt
    t_out = (last + (0.0 - overlap[last])
             / (overlap[last + 1] - overlap[last])) * dt
    dwell = t_out - t_in
    f_measured = 1.0 / (2.0 * dwell)
    f_expected = math.sqrt(1.0 / p.mass) / (2.0 * math.pi)
    assert f_measured == pytest.approx(f_expected, rel=1e-3)


def test_two_body_normal_mode_harmonic():
    cutoff = 1.0
    law = InteractionLaw(kind=HARMONIC, cutoff=cutoff)
    r = cutoff * (1.0 - 1e-9)
    p = make_packing([[2.0, 2.0], [2.0 + r, 2.0]], (8.0, 4.0), diameter=cutoff)
    k = np.array([1.0, 1.0])
    freqs, _ = normal_modes(p, k, law)
    nonzero = freqs[freqs > 0]
    assert nonzero.size == 1
    expected = math.sqrt(2.0 * 1.0 / p.mass) / (2.0 * math.pi)
    assert nonzero[0] == pytest.approx(expected, rel=1e-3)
    assert np.sum(freqs == 0.0) == 3


def test_periodic_lattice_has_translation_zero_mode(relaxed_packing, law):
    freqs, _ = normal_modes(relaxed_packing, np.ones(30), law)
    assert freqs[0] == 0.0
    assert np.sum(freqs == 0.0) >= 1
    assert np.all(freqs[1:] > 0.0)


def test_hessian_matches_finite_difference(relaxed_packing, law):
    """Central finite differences of the analytic forces as the oracle."""
    rng = np.random.default_rng(17)
    stiffness = rng.uniform(1.0, 10.0, relaxed_packing.n_particles)
    H = hessian(relaxed_packing, stiffness, law)
    n = relaxed_packing.n_particles
    kpair, kwall = pair_prefactors(stiffness, law)
    h = 1e-7
    H_fd = np.zeros_like(H)
    base = relaxed_packing.positions
    for dof in range(2 * n):
        dx = np.zeros_like(base)
        dx[dof // 2, dof % 2] = h
        f_plus = system_forces(base + dx, kpair, kwall, relaxed_packing.box,
                               law, True)[0]
        f_minus = system_forces(base - dx, kpair, kwall, relaxed_packing.box,
                                law, True)[0]
        H_fd[:, dof] = -(f_plus - f_minus).ravel() / (2.0 * h)
    H_fd = 0.5 * (H_fd + H_fd.T) / relaxed_packing.mass
    evals = np.linalg.eigvalsh(H)
    evals_fd = np.linalg.eigvalsh(H_fd)
    scale = np.abs(evals).max()
    assert np.allclose(evals, evals_fd, atol=1e-6 * scale)


def test_unstable_packing_raises():
    cutoff = 1.0
    law = InteractionLaw(kind=HARMONIC, cutoff=cutoff)
    p = make_packing([[2.0, 2.0], [2.5, 2.0]], (8.0, 4.0), diameter=cutoff)
    with pytest.raises(UnstablePackingError):
        normal_modes(p, np.array([1.0, 1.0]), law)


def test_blowup_detected_with_step(relaxed_packing, base_drive, law):
    drive = replace(base_drive, a1=0.8, a2=0.8, a_source=0.8)
    stiffness = np.ones(relaxed_packing.n_particles)
    with pytest.raises(SimulationBlowUp) as exc_info:
        simulate(relaxed_packing, stiffness, drive, SimParams(), law)
    assert exc_info.value.step >= 1


def test_resolve_timing_alignment_and_stability():
    params = SimParams(dt=1e-2, total_steps=10_000, transient_fraction=0.5)
    timing = resolve_timing(params, frequency=10.0, omega_max=200.0)
    assert timing.dt * 200.0 < 0.1 + 1e-12
    assert timing.steps_per_period * timing.dt == pytest.approx(0.1, rel=1e-12)
    assert timing.window_samples % timing.steps_per_period == 0
    assert timing.window_periods >= 2
    with pytest.raises(ValueError, match="at least 2"):
        resolve_timing(SimParams(total_steps=100), 10.0, 500.0)


def test_linear_regime_halving(relaxed_packing, base_drive, law):
    """At small amplitude, halving the drives halves every response."""
    stiffness = np.ones(relaxed_packing.n_particles)
    params = SimParams()
    amps = {}
    for a in (2e-5, 1e-5):
        drive = replace(base_drive, a1=a, a2=a, a_source=a)
        traj = simulate(relaxed_packing, stiffness, drive, params, law)
        win = traj.displacements[traj.analysis_start:, :, 0]
        t = np.arange(win.shape[0]) * traj.dt
        coeffs = np.exp(-2j * math.pi * 10.0 * t) @ win * (2.0 / win.shape[0])
        amps[a] = np.abs(coeffs)
    driven = list(base_drive.ports[:3])
    free = [i for i in range(30) if i not in driven]
    ratio = amps[2e-5][free] / amps[1e-5][free]
    assert np.all(np.abs(ratio - 2.0) < 0.02)


def test_superposition_of_single_input_responses(relaxed_packing, base_drive, law):
    """With a silent source the 11 response is the sum of 01 and 10."""
    stiffness = np.ones(relaxed_packing.n_particles)
    a = 2e-5
    drive = replace(base_drive, a1=a, a2=a, a_source=0.0)
    params = SimParams()
    out = base_drive.output_port
    amps = {}
    for bits in ((0, 1), (1, 0), (1, 1)):
        traj = simulate(relaxed_packing, stiffness, drive.with_bits(*bits),
                        params, law)
        amps[bits] = amplitude_at(traj.window(out, 0), traj.dt,
                                  10.0).complex_amplitude
    lhs = amps[(1, 1)]
    rhs = amps[(0, 1)] + amps[(1, 0)]
    assert abs(lhs - rhs) / abs(lhs) < 0.05


def test_reciprocity_of_symmetric_packing(relaxed_packing, base_drive, law):
    """Swapping the input drives leaves the output magnitude unchanged."""
    stiffness = np.ones(relaxed_packing.n_particles)
    a = 5e-5
    params = SimParams()
    out = base_drive.output_port
    mags = []
    for bits in ((0, 1), (1, 0)):
        drive = replace(base_drive, a1=a, a2=a, a_source=a, bits=bits)
        traj = simulate(relaxed_packing, stiffness, drive, params, law)
        mags.append(amplitude_at(traj.window(out, 0), traj.dt, 10.0).magnitude)
    assert abs(mags[0] - mags[1]) / mags[0] < 1e-3
