"""Contact laws and the force/energy kernels shared by relaxation and dynamics.

Particles are frictionless disks.  Two purely repulsive laws are supported:

* ``repulsive_wca`` -- truncated-and-shifted Lennard-Jones, cut at the
  potential minimum so force and potential both vanish continuously at the
  cutoff (the cutoff equals the disk diameter by default).
* ``harmonic`` -- one-sided overlap spring V = 1/2 k (c - r)^2 for r < c.

Per-particle stiffness values combine with the series rule
k_ij = 2 k_i k_j / (k_i + k_j).  Flat horizontal walls use the same scalar
law at the equivalent overlap: a wall contact at center-to-wall distance d
behaves like a pair contact at separation d + cutoff/2, so the wall engages
exactly when the disk surface reaches it.  The wall prefactor is 2 k_i
(series limit of an infinitely stiff wall).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

WCA = "repulsive_wca"
HARMONIC = "harmonic"
_KIND_CODES = {WCA: 0, HARMONIC: 1}

# Sets the vibrational band of the standard lattice.  With disks of diameter
# 0.1 and unit mass at packing fraction 0.91, a prefactor of 0.2 centers the
# packing's normal modes on the gate drive frequencies: stiffness 1..10
# spans roughly 3..57 cycles per time unit, so both 10 and 20 sit inside
# the band of a typical mixed-stiffness material.
DEFAULT_WCA_ENERGY = 0.2

_SIGMA_FACTOR = 2.0 ** (-1.0 / 6.0)


@dataclass(frozen=True)
class InteractionLaw:
    """Pairwise contact law: kind, cutoff length and stiffness mixing rule."""

    kind: str = WCA
    cutoff: float = 0.1
    energy_scale: float | None = None
    stiffness_mixing: str = "series"

    def __post_init__(self):
        if self.kind not in _KIND_CODES:
            raise ValueError(f"unknown interaction kind {self.kind!r}")
        if self.cutoff <= 0:
            raise ValueError("cutoff must be positive")
        if self.stiffness_mixing != "series":
            raise ValueError("only the series stiffness mixing rule is supported")
        if self.energy_scale is None:
            scale = DEFAULT_WCA_ENERGY if self.kind == WCA else 1.0
            object.__setattr__(self, "energy_scale", scale)
        elif self.energy_scale <= 0:
            raise ValueError("energy_scale must be positive")

    @property
    def kind_code(self) -> int:
        return _KIND_CODES[self.kind]

    @property
    def sigma(self) -> float:
        """Lennard-Jones length so the potential minimum sits at the cutoff."""
        return self.cutoff * _SIGMA_FACTOR

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "cutoff": self.cutoff,
            "energy_scale": self.energy_scale,
            "stiffness_mixing": self.stiffness_mixing,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InteractionLaw":
        return cls(**d)


def mix_stiffness(k_i: float, k_j: float) -> float:
    """Series combination of two per-particle stiffness values."""
    return 2.0 * k_i * k_j / (k_i + k_j)


def pair_prefactors(stiffness, law: InteractionLaw):
    """Dense pair prefactor matrix and wall prefactor vector for a stiffness set."""
    k = np.asarray(stiffness, dtype=np.float64)
    if np.any(k <= 0):
        raise ValueError("stiffness values must be positive")
    kpair = law.energy_scale * 2.0 * np.outer(k, k) / (k[:, None] + k[None, :])
    kwall = law.energy_scale * 2.0 * k
    return kpair, kwall


def scalar_derivatives(r: float, prefactor: float, law: InteractionLaw):
    """(V, dV/dr, d2V/dr2) of the scalar contact law at separation r."""
    if r >= law.cutoff:
        return 0.0, 0.0, 0.0
    if law.kind == WCA:
        inv6 = (law.sigma / r) ** 6
        v = prefactor * (4.0 * (inv6 * inv6 - inv6) + 1.0)
        dv = -24.0 * prefactor * (2.0 * inv6 * inv6 - inv6) / r
        d2v = 24.0 * prefactor * (26.0 * inv6 * inv6 - 7.0 * inv6) / (r * r)
        return v, dv, d2v
    gap = law.cutoff - r
    return 0.5 * prefactor * gap * gap, -prefactor * gap, prefactor


def pair_potential(r: float, k_i: float, k_j: float, law: InteractionLaw) -> float:
    """Pair potential energy at center distance r."""
    if r <= 0:
        raise ValueError("coincident or inverted particle centers")
    pref = law.energy_scale * mix_stiffness(k_i, k_j)
    return scalar_derivatives(r, pref, law)[0]


def pair_force(r_vec, k_i: float, k_j: float, law: InteractionLaw) -> np.ndarray:
    """Force on the particle displaced by ``r_vec`` from its partner.

    Central and purely repulsive: directed along +r_vec, zero at or beyond
    the cutoff.  Raises on coincident centers.
    """
    r_vec = np.asarray(r_vec, dtype=np.float64)
    r = float(np.hypot(r_vec[0], r_vec[1]))
    if r == 0.0:
        raise ValueError("coincident particle centers have no defined force direction")
    pref = law.energy_scale * mix_stiffness(k_i, k_j)
    _, dv, _ = scalar_derivatives(r, pref, law)
    return (-dv / r) * r_vec


@njit(cache=True)
def _scalar_vf(r, pref, cutoff, sigma6, kind):
    """Scalar law inside the kernels: returns (V, dV/dr), zero from the cutoff on."""
    if r >= cutoff:
        return 0.0, 0.0
    if kind == 0:
        r6 = r ** 6
        inv6 = sigma6 / r6
        v = pref * (4.0 * (inv6 * inv6 - inv6) + 1.0)
        dv = -24.0 * pref * (2.0 * inv6 * inv6 - inv6) / r
        return v, dv
    gap = cutoff - r
    return 0.5 * pref * gap * gap, -pref * gap


@njit(cache=True)
def compute_forces(pos, kpair, kwall, width, height, cutoff, sigma6, kind,
                   wall_on, forces):
    """Accumulate pair and wall forces into ``forces``; returns potential energy.

    Minimum image in x always; in y only when walls are off (periodic y).
    The box must be at least two cutoffs wide so a single image suffices.
    """
    n = pos.shape[0]
    forces[:] = 0.0
    pe = 0.0
    c2 = cutoff * cutoff
    for i in range(n):
        for j in range(i + 1, n):
            dx = pos[i, 0] - pos[j, 0]
            dx -= width * np.round(dx / width)
            dy = pos[i, 1] - pos[j, 1]
            if not wall_on:
                dy -= height * np.round(dy / height)
            r2 = dx * dx + dy * dy
            if r2 < c2:
                r = np.sqrt(r2)
                v, dv = _scalar_vf(r, kpair[i, j], cutoff, sigma6, kind)
                pe += v
                f = -dv / r
                forces[i, 0] += f * dx
                forces[i, 1] += f * dy
                forces[j, 0] -= f * dx
                forces[j, 1] -= f * dy
    if wall_on:
        half = 0.5 * cutoff
        for i in range(n):
            d = pos[i, 1]
            if d < half:
                v, dv = _scalar_vf(d + half, kwall[i], cutoff, sigma6, kind)
                pe += v
                forces[i, 1] -= dv
            d = height - pos[i, 1]
            if d < half:
                v, dv = _scalar_vf(d + half, kwall[i], cutoff, sigma6, kind)
                pe += v
                forces[i, 1] += dv
    return pe


@njit(cache=True)
def max_force_norm(forces):
    n = forces.shape[0]
    fmax2 = 0.0
    for i in range(n):
        f2 = forces[i, 0] * forces[i, 0] + forces[i, 1] * forces[i, 1]
        if f2 > fmax2:
            fmax2 = f2
    return np.sqrt(fmax2)


def system_forces(positions, kpair, kwall, box, law: InteractionLaw, wall_on: bool):
    """Python-friendly wrapper around the force kernel: (forces, potential energy)."""
    pos = np.ascontiguousarray(positions, dtype=np.float64)
    forces = np.zeros_like(pos)
    pe = compute_forces(pos, kpair, kwall, box[0], box[1], law.cutoff,
                        law.sigma ** 6, law.kind_code, wall_on, forces)
    return forces, pe


def potential_energy(positions, stiffness, box, law: InteractionLaw, wall_on: bool) -> float:
    kpair, kwall = pair_prefactors(stiffness, law)
    return system_forces(positions, kpair, kwall, box, law, wall_on)[1]
