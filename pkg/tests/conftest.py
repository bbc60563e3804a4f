import numpy as np
import pytest

from grainlogic.evolve import default_drive
from grainlogic.gate import MaterialDesign
from grainlogic.interactions import InteractionLaw
from grainlogic.packing import LatticeSpec, Packing, build_lattice, relax_fire


@pytest.fixture(scope="session")
def lattice_spec():
    return LatticeSpec()


@pytest.fixture(scope="session")
def law(lattice_spec):
    return InteractionLaw(cutoff=lattice_spec.diameter)


@pytest.fixture(scope="session")
def relaxed_packing(lattice_spec, law):
    return relax_fire(build_lattice(lattice_spec), force_tol=1e-10, law=law)


@pytest.fixture(scope="session")
def base_drive(lattice_spec):
    return default_drive(lattice_spec, 10.0)


@pytest.fixture(scope="session")
def uniform_design(relaxed_packing, base_drive):
    return MaterialDesign(
        packing=relaxed_packing,
        stiffness=np.ones(relaxed_packing.n_particles),
        ports=(*base_drive.input_ports, base_drive.source_port,
               base_drive.output_port),
    )


def make_packing(positions, box, diameter, boundary_y="rigid_wall", mass=1.0):
    """Ad-hoc packing for small test systems (no generating lattice spec)."""
    return Packing(positions=np.asarray(positions, dtype=np.float64),
                   box=box, diameter=diameter, mass=mass,
                   boundary_y=boundary_y)
