import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from katodisp import tfamily as tf
from katodisp.errors import InvalidInputError, ResolutionError
from katodisp.grids import cartesian_grid, radial_grid
from katodisp.potential import Potential

WELL = Potential.square_well(1.0, 1.0)
HALF = 0.5  # ||unit well||_K / (4 pi)


@pytest.fixture(scope="module")
def grid():
    return cartesian_grid(1.2, 0.1)


@pytest.fixture(scope="module")
def origin(grid):
    return tf.delta_probe(grid, (0, 0, 0))


def gaussian_sphere_integral(b, rho, s):
    """int over |x - y| = rho of the unit-mass Gaussian of width s, |x| = b (closed form)."""
    b = np.maximum(b, 1e-12)
    return rho / (b * s * np.sqrt(2 * np.pi)) * (
        np.exp(-(rho - b) ** 2 / (2 * s * s)) - np.exp(-(rho + b) ** 2 / (2 * s * s)))


def test_zero_field_gives_zero_slice(grid):
    assert not np.any(tf.apply_T(WELL, grid, 0.4, np.zeros(len(grid))).image)


@pytest.mark.parametrize("rho", [0.3, 0.5, 0.9])
def test_bump_image_matches_closed_form(grid, rho):
    s = 0.3
    f = tf.bump_probe(grid, width=s)
    img = tf.apply_T(WELL, grid, rho, f).image.real
    b = np.linalg.norm(grid.nodes, axis=1)
    ref = WELL.sample(grid) / (4 * np.pi * rho) * gaussian_sphere_integral(b, rho, s)
    assert tf.l1(grid, img - ref) / tf.l1(grid, ref) < 0.02


def test_total_mass_bound(grid, origin):
    tot = sum(n for _, n in tf.slice_norms(WELL, grid, tf.RhoGrid(0.05, 2.4), origin)) * 0.05
    assert tot <= HALF * 1.02


def test_wiener_norm_examples(grid, origin):
    assert tf.wiener_norm(Potential.zero(), grid, tf.RhoGrid(0.05, 2.4), [origin]) == 0.0
    w = tf.wiener_norm(WELL, grid, tf.RhoGrid(0.05, 2.4), [origin])
    assert 0.9 * HALF <= w <= HALF


def test_wiener_norm_scaling(grid, origin):
    r = 2.0
    w = tf.wiener_norm(WELL, grid, tf.RhoGrid(0.05, 2.4), [origin])
    g2 = cartesian_grid(1.2 / r, 0.1 / r)
    w2 = tf.wiener_norm(WELL.rescaled(r), g2, tf.RhoGrid(0.05 / r, 2.4 / r), [tf.delta_probe(g2, (0, 0, 0))])
    assert w2 == pytest.approx(w, rel=0.02)


@pytest.mark.slow
def test_refinement_convergence(grid, origin):
    a = tf.wiener_norm(WELL, grid, tf.RhoGrid(0.05, 2.4), [origin])
    b = tf.wiener_norm(WELL, grid, tf.RhoGrid(0.025, 2.4), [origin], order_factor=24)
    assert abs(a - b) / a < 0.01


@settings(max_examples=5, deadline=None)
@given(a=st.floats(-3, 3), b=st.floats(-3, 3), rho=st.floats(0.15, 2.0), seed=st.integers(0, 2**32 - 1))
def test_linearity(a, b, rho, seed):
    g = cartesian_grid(1.0, 0.2)
    rng = np.random.default_rng(seed)
    f1, f2 = rng.standard_normal((2, len(g)))
    lhs = tf.apply_T(WELL, g, rho, a * f1 + b * f2).image
    rhs = a * tf.apply_T(WELL, g, rho, f1).image + b * tf.apply_T(WELL, g, rho, f2).image
    np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-12 * (1 + np.abs(rhs).max()))


def test_sign_symmetry(grid, origin):
    bump = tf.bump_probe(grid, width=0.3)
    rg = tf.RhoGrid(0.05, 2.4)
    for lam in (0.5, 3.0):
        np.testing.assert_allclose(tf.fourier_sum(WELL, grid, rg, lam, bump),
                                   np.conj(tf.fourier_sum(WELL, grid, rg, -lam, bump)), rtol=1e-13, atol=1e-15)


def test_fourier_consistency_bump(grid):
    f = tf.bump_probe(grid, width=0.3)
    assert tf.fourier_consistency(Potential.zero(), grid, tf.RhoGrid(0.05, 3.3), 1.0, f) == 0.0
    for lam in (0.0, 1.0):
        assert tf.fourier_consistency(WELL, grid, tf.RhoGrid(0.05, 3.3), lam, f) < 0.03


def test_fourier_consistency_guards(grid, origin):
    with pytest.raises(ResolutionError):
        tf.fourier_consistency(WELL, grid, tf.RhoGrid(0.05, 1.0), 1.0, origin)
    with pytest.raises(ResolutionError):
        tf.fourier_consistency(WELL, grid, tf.RhoGrid(0.1, 3.0), 3.0, origin)


def test_locality_tail(grid, origin):
    assert tf.locality_tail(WELL, grid, tf.RhoGrid(0.05, 4.0), 3.0, [origin]) == 0.0
    assert tf.locality_tail(Potential.zero(), grid, tf.RhoGrid(0.05, 4.0), 1.0, [origin]) == 0.0


@pytest.mark.slow
def test_gaussian_locality_tail_decays():
    G = Potential.gaussian(1.0, 1.0)
    g = cartesian_grid(6.5, 0.25)
    probe = [tf.delta_probe(g, (0, 0, 0))]
    rg = tf.RhoGrid(0.25, 13.0)
    t5 = tf.locality_tail(G, g, rg, 5.0, probe)
    t10 = tf.locality_tail(G, g, rg, 10.0, probe)
    assert t5 > 0
    assert t10 <= t5 / 2 + 1e-12


def test_as_wiener_element_bounded():
    g = cartesian_grid(1.2, 0.2)
    T = tf.as_wiener_element(WELL, g, 0.1, 2.6)
    assert T.d == int(np.count_nonzero(WELL.sample(g)))
    assert 0.4 < T.wnorm() <= HALF * 1.02


def test_requires_lattice():
    with pytest.raises(InvalidInputError):
        tf.apply_T(WELL, radial_grid(1.0, n_shells=8), 0.5, np.ones(8 * 50))
    with pytest.raises(InvalidInputError):
        tf.RhoGrid(0.0, 1.0)
