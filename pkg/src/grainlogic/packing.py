"""Triangular-lattice disk packings and FIRE relaxation to mechanical equilibrium.

The box is periodic in x.  In y it is bounded either by rigid flat walls
(default) or periodically.  Box dimensions are fixed by the packing fraction:
total disk area / box area = phi, with an isotropic lattice scale (row height
= sqrt(3)/2 times the in-row spacing).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .interactions import (
    InteractionLaw,
    compute_forces,
    pair_prefactors,
    system_forces,
)

RIGID_WALL = "rigid_wall"
PERIODIC = "periodic"


class FireNonConvergence(RuntimeError):
    """FIRE failed to reach the force tolerance within the iteration budget."""

    def __init__(self, residual_force: float, iterations: int):
        super().__init__(
            f"FIRE did not converge after {iterations} iterations "
            f"(residual force {residual_force:.3e})"
        )
        self.residual_force = residual_force
        self.iterations = iterations


@dataclass(frozen=True)
class LatticeSpec:
    """Geometry and material parameters of the triangular lattice."""

    rows: int = 5
    cols: int = 6
    diameter: float = 0.1
    mass: float = 1.0
    packing_fraction: float = 0.91
    boundary_x: str = PERIODIC
    boundary_y: str = RIGID_WALL

    def __post_init__(self):
        if self.rows < 2 or self.cols < 2:
            raise ValueError("lattice needs rows >= 2 and cols >= 2")
        if self.diameter <= 0:
            raise ValueError("diameter must be positive")
        if self.mass <= 0:
            raise ValueError("mass must be positive")
        if not 0.0 < self.packing_fraction < 1.0:
            raise ValueError("packing fraction must lie in (0, 1)")
        if self.boundary_x != PERIODIC:
            raise ValueError("x boundary is always periodic")
        if self.boundary_y not in (RIGID_WALL, PERIODIC):
            raise ValueError(f"unknown y boundary {self.boundary_y!r}")

    @property
    def particle_count(self) -> int:
        return self.rows * self.cols

    def to_dict(self) -> dict:
        return {
            "rows": self.rows,
            "cols": self.cols,
            "diameter": self.diameter,
            "mass": self.mass,
            "packing_fraction": self.packing_fraction,
            "boundary_x": self.boundary_x,
            "boundary_y": self.boundary_y,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LatticeSpec":
        return cls(**d)


@dataclass(frozen=True)
class Packing:
    """Disk centers in a box, plus the spec that generated them (if any)."""

    positions: np.ndarray          # (N, 2), wrapped to [0, width) in x
    box: tuple                     # (width, height)
    diameter: float
    mass: float = 1.0
    boundary_y: str = RIGID_WALL
    lattice: LatticeSpec | None = None
    residual_force: float = math.inf
    fire_iterations: int = 0

    def __post_init__(self):
        pos = np.ascontiguousarray(self.positions, dtype=np.float64)
        if pos.ndim != 2 or pos.shape[1] != 2:
            raise ValueError("positions must be an (N, 2) array")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "box", (float(self.box[0]), float(self.box[1])))

    @property
    def n_particles(self) -> int:
        return self.positions.shape[0]

    @property
    def wall_on(self) -> bool:
        return self.boundary_y == RIGID_WALL

    def wrapped_x(self, positions: np.ndarray) -> np.ndarray:
        out = positions.copy()
        out[:, 0] %= self.box[0]
        return out

    def to_dict(self) -> dict:
        return {
            "positions": self.positions.tolist(),
            "box": list(self.box),
            "diameter": self.diameter,
            "mass": self.mass,
            "boundary_y": self.boundary_y,
            "lattice": self.lattice.to_dict() if self.lattice else None,
            "residual_force": self.residual_force,
            "fire_iterations": self.fire_iterations,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Packing":
        lattice = LatticeSpec.from_dict(d["lattice"]) if d.get("lattice") else None
        return cls(
            positions=np.asarray(d["positions"], dtype=np.float64),
            box=tuple(d["box"]),
            diameter=d["diameter"],
            mass=d.get("mass", 1.0),
            boundary_y=d.get("boundary_y", RIGID_WALL),
            lattice=lattice,
            residual_force=d.get("residual_force", math.inf),
            fire_iterations=d.get("fire_iterations", 0),
        )


def lattice_spacing(spec: LatticeSpec) -> float:
    """In-row center spacing fixed by the packing fraction and diameter."""
    a = math.sqrt(math.pi * spec.diameter ** 2
                  / (2.0 * math.sqrt(3.0) * spec.packing_fraction))
    if a < spec.diameter / 2.0:
        raise ValueError(
            "packing fraction so high that lattice disks would overlap "
            "beyond half a diameter"
        )
    return a


def build_lattice(spec: LatticeSpec) -> Packing:
    """Place rows*cols disk centers on a triangular lattice.

    Odd rows are offset by half the lattice spacing in x; rows sit at
    half-spacing margins from the y boundaries so both wall and periodic
    boundaries see a uniform vertical period.
    """
    a = lattice_spacing(spec)
    h = a * math.sqrt(3.0) / 2.0
    width = spec.cols * a
    height = spec.rows * h
    positions = np.empty((spec.particle_count, 2), dtype=np.float64)
    idx = 0
    for row in range(spec.rows):
        x_off = 0.5 * a if row % 2 else 0.0
        y = (row + 0.5) * h
        for col in range(spec.cols):
            positions[idx, 0] = (col * a + x_off) % width
            positions[idx, 1] = y
            idx += 1
    return Packing(
        positions=positions,
        box=(width, height),
        diameter=spec.diameter,
        mass=spec.mass,
        boundary_y=spec.boundary_y,
        lattice=spec,
    )


def packing_fraction(packing: Packing) -> float:
    """Total disk area over box area."""
    disk_area = packing.n_particles * math.pi * packing.diameter ** 2 / 4.0
    return disk_area / (packing.box[0] * packing.box[1])


@njit(cache=True)
def _fire_loop(pos, kpair, kwall, width, height, cutoff, sigma6, kind, wall_on,
               mass, force_tol, max_iters, dt0, dt_max, dmax):
    n = pos.shape[0]
    vel = np.zeros((n, 2))
    forces = np.zeros((n, 2))
    f_inc = 1.1
    f_dec = 0.5
    alpha_start = 0.1
    f_alpha = 0.99
    n_min = 5
    dt = dt0
    alpha = alpha_start
    good = 0
    compute_forces(pos, kpair, kwall, width, height, cutoff, sigma6, kind,
                   wall_on, forces)
    tol2 = force_tol * force_tol
    for it in range(max_iters):
        fmax2 = 0.0
        for i in range(n):
            f2 = forces[i, 0] ** 2 + forces[i, 1] ** 2
            if f2 > fmax2:
                fmax2 = f2
        if fmax2 <= tol2:
            return it, np.sqrt(fmax2), 1
        power = 0.0
        v2 = 0.0
        f2s = 0.0
        for i in range(n):
            power += vel[i, 0] * forces[i, 0] + vel[i, 1] * forces[i, 1]
            v2 += vel[i, 0] ** 2 + vel[i, 1] ** 2
            f2s += forces[i, 0] ** 2 + forces[i, 1] ** 2
        if power > 0.0:
            good += 1
            if f2s > 0.0:
                mix = alpha * np.sqrt(v2 / f2s)
                for i in range(n):
                    vel[i, 0] = (1.0 - alpha) * vel[i, 0] + mix * forces[i, 0]
                    vel[i, 1] = (1.0 - alpha) * vel[i, 1] + mix * forces[i, 1]
            if good > n_min:
                dt = min(dt * f_inc, dt_max)
                alpha *= f_alpha
        else:
            vel[:] = 0.0
            good = 0
            dt *= f_dec
            alpha = alpha_start
        vmax2 = 0.0
        for i in range(n):
            vel[i, 0] += dt * forces[i, 0] / mass
            vel[i, 1] += dt * forces[i, 1] / mass
            v2i = vel[i, 0] ** 2 + vel[i, 1] ** 2
            if v2i > vmax2:
                vmax2 = v2i
        # cap the per-step displacement so steep contacts cannot eject particles
        vmax = np.sqrt(vmax2)
        if vmax * dt > dmax:
            scale = dmax / (vmax * dt)
            for i in range(n):
                vel[i, 0] *= scale
                vel[i, 1] *= scale
        for i in range(n):
            pos[i, 0] = (pos[i, 0] + dt * vel[i, 0]) % width
            pos[i, 1] += dt * vel[i, 1]
            if not wall_on:
                pos[i, 1] %= height
        compute_forces(pos, kpair, kwall, width, height, cutoff, sigma6, kind,
                       wall_on, forces)
    fmax2 = 0.0
    for i in range(n):
        f2 = forces[i, 0] ** 2 + forces[i, 1] ** 2
        if f2 > fmax2:
            fmax2 = f2
    return max_iters, np.sqrt(fmax2), 0


def relax_fire(packing: Packing, stiffness=None, force_tol: float = 1e-10,
               max_iters: int = 200_000, law: InteractionLaw | None = None,
               dt_initial: float = 1e-3, dt_max: float = 1e-2) -> Packing:
    """Quench the packing to mechanical equilibrium with FIRE.

    Returns a new Packing whose maximum per-particle net force is at most
    ``force_tol``.  Raises FireNonConvergence (carrying the last residual)
    if the budget runs out first.
    """
    if law is None:
        law = InteractionLaw(cutoff=packing.diameter)
    n = packing.n_particles
    if stiffness is None:
        stiffness = np.ones(n)
    stiffness = np.asarray(stiffness, dtype=np.float64)
    if stiffness.shape != (n,):
        raise ValueError("stiffness vector length must match particle count")

    kpair, kwall = pair_prefactors(stiffness, law)
    e_initial = system_forces(packing.positions, kpair, kwall, packing.box,
                              law, packing.wall_on)[1]
    pos = packing.positions.copy()
    iters, residual, converged = _fire_loop(
        pos, kpair, kwall, packing.box[0], packing.box[1], law.cutoff,
        law.sigma ** 6, law.kind_code, packing.wall_on, packing.mass,
        force_tol, max_iters, dt_initial, dt_max, 0.05 * law.cutoff,
    )
    if not converged:
        raise FireNonConvergence(residual_force=residual, iterations=iters)
    e_final = system_forces(pos, kpair, kwall, packing.box, law,
                            packing.wall_on)[1]
    if e_final > e_initial + 1e-12 * abs(e_initial):
        raise RuntimeError(
            f"relaxation raised the potential energy ({e_initial} -> {e_final})"
        )
    return replace(packing, positions=pos, residual_force=residual,
                   fire_iterations=iters)
