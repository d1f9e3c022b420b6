import numpy as np
import pytest

from katodisp import propagator as prop
from katodisp.errors import InvalidInputError, WindowError
from katodisp.potential import Potential
from katodisp.propagator import BoxSpec

from oracles import free_box_modes, n_bound_states, regularised_K_check, s_wave_ground_state

DEEP = Potential.square_well(-8.0, 1.0)
SHALLOW = Potential.square_well(-1.0, 1.0)
SMALL = BoxSpec(6.0, 12)
RADIAL = BoxSpec(100.0, 1000, geometry="radial")


@pytest.fixture(scope="module")
def deep_radial():
    return prop.discretize_H(DEEP, BoxSpec(400.0, 4000, geometry="radial"))


# --- kernels -------------------------------------------------------------------

@pytest.mark.parametrize("t", [0.5, 1.0, 5.0])
def test_free_kernel_modulus(t):
    rng = np.random.default_rng(int(10 * t))
    for x, y in rng.standard_normal((5, 2, 3)):
        assert abs(prop.free_propagator_kernel(t, x, y)) == pytest.approx((4 * np.pi * t) ** -1.5, rel=1e-13)
        assert prop.free_propagator_kernel(-t, x, y) == pytest.approx(np.conj(prop.free_propagator_kernel(t, x, y)))


def test_free_kernel_on_diagonal():
    assert prop.free_propagator_kernel(2.0, [1, 1, 1], [1, 1, 1]) == pytest.approx((-4j * np.pi * 2.0) ** -1.5)


@pytest.mark.parametrize("rho", [0.0, 1.0, 2.0])
@pytest.mark.parametrize("t", [1.0, -0.7])
def test_K_check_matches_gaussian_limit(t, rho):
    assert prop.K_check_kernel(t, rho, 1.0) == pytest.approx(regularised_K_check(t, rho, 1.0, 0.0), rel=1e-12)
    assert abs(prop.K_check_kernel(t, rho, 1.0)) == pytest.approx(prop.K_check_modulus(t), rel=1e-14)


def test_K_check_translation_covariance():
    a = prop.K_check_kernel(1.3, 0.4, 1.1)
    assert prop.K_check_kernel(1.3, 0.9, 0.6) == pytest.approx(a, rel=1e-14)


def test_K_pair_numerical_inverse_ft():
    out = prop.k_kernel_pair_check(1.0, [(r, 1.0) for r in (0.0, 1.0, 2.0)])
    assert out["max_relative_deviation"] < 0.01
    assert out["modulus_error"] < 1e-12


# --- spectral split -------------------------------------------------------------

def test_free_box_spectrum():
    split = prop.discretize_H(Potential.zero(), SMALL)
    assert len(split.pp_indices) == 0
    assert split.eigenvalues.min() >= 0
    np.testing.assert_allclose(np.sort(split.eigenvalues)[:10], free_box_modes(6.0, 12, 10), rtol=1e-10)


def test_deep_well_single_bound_state(deep_radial):
    assert n_bound_states(-8.0) == 1
    assert deep_radial.projector_rank == 1
    assert deep_radial.pp_eigenvalues[0] == pytest.approx(s_wave_ground_state(-8.0), rel=0.01)


def test_shallow_well_has_no_bound_state():
    assert n_bound_states(-1.0) == 0
    assert len(prop.discretize_H(SHALLOW, RADIAL).pp_indices) == 0


def test_dense_cartesian_bound_state():
    split = prop.discretize_H(DEEP, BoxSpec(6.0, 14))
    assert split.projector_rank == 1
    assert split.pp_eigenvalues[0] == pytest.approx(s_wave_ground_state(-8.0), rel=0.15)


def test_projection_idempotent():
    split = prop.discretize_H(DEEP, SMALL)
    f = prop.initial_bump(split, 0.6)
    once = split.project_out(f)
    twice = split.project_out(once)
    assert np.abs(twice - once).max() <= 1e-12 * np.abs(once).max()


def test_time_reversal():
    split = prop.discretize_H(DEEP, SMALL)
    f = prop.initial_bump(split, 0.6)
    ts = np.array([0.05, 0.3, 1.0])
    fw = np.abs(split.evolve(f, ts)).max(axis=1)
    bw = np.abs(split.evolve(f, -ts)).max(axis=1)
    np.testing.assert_allclose(fw, bw, rtol=1e-10)


def test_scaling_covariance():
    r = 2.0
    s1 = prop.discretize_H(DEEP, SMALL)
    s2 = prop.discretize_H(DEEP.rescaled(r), SMALL.scaled(1 / r))
    ts = np.array([0.1, 0.2, 0.4])
    a = np.abs(s1.evolve(prop.initial_bump(s1, 0.6), ts)).max(axis=1)
    b = np.abs(s2.evolve(prop.initial_bump(s2, 0.6 / r), ts / r**2)).max(axis=1)
    np.testing.assert_allclose(b, r**3 * a, rtol=0.05)


def test_l2_unitarity(deep_radial):
    f = prop.initial_bump(deep_radial)
    g = deep_radial.project_out(f)
    u = deep_radial.evolve(f, np.geomspace(4, 25, 6))
    norms = np.sqrt([deep_radial.inner(x, x).real for x in u])
    ref = np.sqrt(deep_radial.inner(g, g).real)
    np.testing.assert_allclose(norms, ref, rtol=1e-10)


# --- decay fits -------------------------------------------------------------------

def test_free_decay_calibration_gate():
    rep = prop.evolve_and_fit(prop.discretize_H(Potential.zero(), BoxSpec(16.0, 64)))
    assert abs(rep.fitted_slope + 1.5) <= 0.1
    assert abs(rep.prefactor / prop.FREE_PREFACTOR - 1) <= 0.25
    assert rep.pp_rank == 0 and len(rep.csv_rows()) == len(rep.times)


def test_shallow_well_decay(deep_radial):
    split = prop.discretize_H(SHALLOW, BoxSpec(400.0, 4000, geometry="radial"))
    rep = prop.evolve_and_fit(split, support_radius=1.0)
    assert -1.7 <= rep.fitted_slope <= -1.3


def test_bound_state_plateau_and_projection(deep_radial):
    proj = prop.evolve_and_fit(deep_radial, support_radius=1.0)
    raw = prop.evolve_and_fit(deep_radial, project=False, support_radius=1.0)
    assert -1.7 <= proj.fitted_slope <= -1.3
    assert raw.fitted_slope > -0.5
    assert set(proj.summary()) >= {"fitted_slope", "fit_window", "residual", "pp_rank"}


def test_small_cartesian_box_window_empty():
    split = prop.discretize_H(DEEP, SMALL)
    with pytest.raises(WindowError):
        prop.evolve_and_fit(split, support_radius=1.0)


def test_bad_box_rejected():
    with pytest.raises(InvalidInputError):
        BoxSpec(-1.0, 10)
    with pytest.raises(InvalidInputError):
        BoxSpec(10.0, 10, dirichlet=False)


def test_resolvent_identity_reexport():
    from katodisp.resolvent import nystrom_grid
    assert prop.resolvent_identity_offaxis(DEEP, nystrom_grid(DEEP, 0.4), -4.0) < 1e-8
