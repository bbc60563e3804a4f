import numpy as np
import pytest

from grainlogic.interactions import (
    HARMONIC,
    WCA,
    InteractionLaw,
    mix_stiffness,
    pair_force,
    pair_potential,
)

D = 0.1


def wca_potential_independent(r, k_i, k_j, scale):
    """Literal restatement of the truncated-shifted LJ pair energy.

    Written for complex r so the force oracle can use complex-step
    differentiation (exact to machine precision for analytic functions).
    """
    sigma = D * 2.0 ** (-1.0 / 6.0)
    pref = scale * 2.0 * k_i * k_j / (k_i + k_j)
    inv6 = (sigma / r) ** 6
    return pref * (4.0 * (inv6 * inv6 - inv6) + 1.0)


@pytest.mark.parametrize("kind", [WCA, HARMONIC])
def test_force_zero_at_and_beyond_cutoff(kind):
    law = InteractionLaw(kind=kind, cutoff=D)
    for r in (D, 1.0001 * D, 2 * D):
        f = pair_force(np.array([r, 0.0]), 1.0, 1.0, law)
        assert np.all(f == 0.0)
        assert pair_potential(r, 1.0, 1.0, law) == 0.0


@pytest.mark.parametrize("kind", [WCA, HARMONIC])
def test_force_continuous_at_cutoff(kind):
    law = InteractionLaw(kind=kind, cutoff=D)
    eps = 1e-8 * D
    f_inside = pair_force(np.array([D - eps, 0.0]), 1.0, 1.0, law)
    assert np.linalg.norm(f_inside) < 1e-4


def test_doubling_stiffness_doubles_force():
    law = InteractionLaw(cutoff=D)
    r_vec = np.array([0.9 * D, 0.0])
    f1 = pair_force(r_vec, 1.0, 3.0, law)
    f2 = pair_force(r_vec, 2.0, 6.0, law)
    assert np.allclose(f2, 2.0 * f1, rtol=1e-14)


def test_wca_force_matches_complex_step_oracle():
    law = InteractionLaw(kind=WCA, cutoff=D)
    r = 0.9 * D
    h = 1e-20
    dv = wca_potential_independent(r + 1j * h, 1.0, 1.0, law.energy_scale).imag / h
    force = pair_force(np.array([r, 0.0]), 1.0, 1.0, law)
    assert force[1] == 0.0
    assert abs(force[0] - (-dv)) <= 1e-12 * abs(dv)


def test_wca_potential_matches_independent_formula():
    law = InteractionLaw(kind=WCA, cutoff=D)
    for r in (0.85 * D, 0.9 * D, 0.99 * D):
        expected = wca_potential_independent(r, 2.0, 5.0, law.energy_scale).real
        assert pair_potential(r, 2.0, 5.0, law) == pytest.approx(expected, rel=1e-14)


def test_harmonic_force_value():
    law = InteractionLaw(kind=HARMONIC, cutoff=D)
    r = 0.8 * D
    f = pair_force(np.array([0.0, r]), 4.0, 4.0, law)
    # prefactor = mix(4, 4) = 4; overlap = 0.2 D
    assert f[0] == 0.0
    assert f[1] == pytest.approx(4.0 * (D - r), rel=1e-14)


def test_force_is_central_and_repulsive():
    rng = np.random.default_rng(0)
    for kind in (WCA, HARMONIC):
        law = InteractionLaw(kind=kind, cutoff=D)
        for _ in range(50):
            vec = rng.normal(size=2)
            vec *= rng.uniform(0.5, 0.999) * D / np.linalg.norm(vec)
            f = pair_force(vec, rng.uniform(1, 10), rng.uniform(1, 10), law)
            radial = np.dot(f, vec) / np.linalg.norm(vec)
            assert radial >= 0.0
            cross = f[0] * vec[1] - f[1] * vec[0]
            assert abs(cross) < 1e-12 * np.linalg.norm(f) * np.linalg.norm(vec) + 1e-300


def test_coincident_centers_error():
    law = InteractionLaw(cutoff=D)
    with pytest.raises(ValueError):
        pair_force(np.array([0.0, 0.0]), 1.0, 1.0, law)


def test_mixing_rule():
    assert mix_stiffness(2.0, 2.0) == 2.0
    assert mix_stiffness(1.0, 10.0) == pytest.approx(20.0 / 11.0)
    assert mix_stiffness(3.0, 6.0) == 4.0


def test_law_validation():
    with pytest.raises(ValueError):
        InteractionLaw(kind="lennard_jones")
    with pytest.raises(ValueError):
        InteractionLaw(cutoff=-1.0)
    with pytest.raises(ValueError):
        InteractionLaw(stiffness_mixing="arithmetic")
    assert InteractionLaw(kind=HARMONIC).energy_scale == 1.0