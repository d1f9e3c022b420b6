import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from katodisp import potential as pot
from katodisp import resolvent as res
from katodisp.errors import InvalidInputError, SingularPointError
from katodisp.grids import radial_line
from katodisp.potential import Potential

from oracles import zero_energy_threshold_depth

WELL = Potential.square_well(1.0, 1.0)


@pytest.fixture(scope="module")
def coarse():
    return res.nystrom_grid(WELL, 0.3)


def test_kernel_examples():
    assert res.free_resolvent_kernel([0, 0, 0], [1, 0, 0], z=-1) == pytest.approx(np.exp(-1) / (4 * np.pi), abs=1e-15)
    assert abs(res.free_resolvent_kernel([0, 0, 0], [1, 0, 0], z=-1) - 0.029270) < 1e-5
    assert res.free_resolvent_kernel([0, 0, 0], [0, 2, 0], lam=0.0) == pytest.approx(1 / (8 * np.pi))


@settings(max_examples=30, deadline=None)
@given(lam=st.floats(-30, 30), d=st.floats(0.01, 10))
def test_kernel_branches_conjugate(lam, d):
    x, y = np.zeros(3), np.array([d, 0.0, 0.0])
    a = res.free_resolvent_kernel(x, y, lam=lam, sign="minus")
    b = res.free_resolvent_kernel(x, y, lam=lam, sign="plus")
    assert a == np.conj(b)


def test_kernel_refuses_diagonal():
    with pytest.raises(SingularPointError):
        res.free_resolvent_kernel([1, 2, 3], [1, 2, 3], z=-1)
    with pytest.raises(InvalidInputError):
        res.free_resolvent_kernel([0, 0, 0], [1, 0, 0], z=4.0)


def test_zero_potential_operator_vanishes(coarse):
    A = res.birman_schwinger(Potential.zero(), coarse, 3.0)
    assert not np.any(A.matrix)
    scan = res.resonance_scan(Potential.zero(), coarse, [0.0, 1.0, 2.0])
    assert scan.min_singular == [1.0, 1.0, 1.0] and not scan.flagged


def test_norm_bound_for_small_potential(coarse):
    V = WELL.scaled(1.0 / np.pi)  # Kato norm 2
    bound = 2.0 / (4 * np.pi)
    for lam in (0.0, 0.5, 3.0, 10.0, 20.0):
        assert res.birman_schwinger(V, coarse, lam).norm() <= bound * 1.02


def test_conjugation_symmetry(coarse):
    for lam in (0.7, 5.0):
        A = res.birman_schwinger(WELL, coarse, lam, "minus").matrix
        B = res.birman_schwinger(WELL, coarse, lam, "plus").matrix
        np.testing.assert_array_equal(A, np.conj(B))


def test_scan_even_symmetry(coarse):
    lams = np.array([0.5, 1.5, 4.0])
    plus = res.resonance_scan(WELL, coarse, lams, sign="plus", refine=False)
    minus = res.resonance_scan(WELL, coarse, -lams[::-1], sign="minus", refine=False)
    np.testing.assert_allclose(plus.min_singular, minus.min_singular[::-1], rtol=1e-12)


def test_riemann_lebesgue_trend(coarse):
    f = np.exp(-np.sum(coarse.nodes**2, axis=1))
    m0 = np.abs(res.birman_schwinger(WELL, coarse, 0.0).apply(f)).max()
    m40 = np.abs(res.birman_schwinger(WELL, coarse, 40.0).apply(f)).max()
    assert m40 < 0.5 * m0


def test_small_potential_never_flagged(coarse):
    scan = res.resonance_scan(WELL.scaled(1.0 / np.pi), coarse, np.linspace(0, 20, 41))
    assert not scan.flagged


def test_threshold_flag_pattern(coarse):
    sweep = res.depth_sweep(WELL, coarse, np.linspace(-3.0, -2.0, 11))
    c = sweep.threshold_depth
    assert abs(-c - zero_energy_threshold_depth()) / zero_energy_threshold_depth() < 0.05
    lams = np.linspace(0, 1, 11)
    below = res.resonance_scan(WELL.scaled(0.9 * c), coarse, lams)
    at = res.resonance_scan(WELL.scaled(c), coarse, lams, refine=False)
    deeper = res.resonance_scan(WELL.scaled(1.5 * c), coarse, lams)
    assert not below.flagged and not deeper.flagged
    assert at.flags[0] and not any(at.flags[2:])


def test_scan_csv_shape(coarse):
    scan = res.resonance_scan(WELL, coarse, [0.0, 1.0])
    rows = scan.csv_rows()
    assert len(rows[0]) == 4 and rows[0][0] == 0.0 and rows[0][3] in (0, 1)
    assert set(scan.summary()) >= {"flagged_intervals", "threshold"}


def test_weighted_decay_examples():
    prof = res.weighted_resolvent_decay(lambdas=[0.0, 1.0, 2.0, 5.0, 10.0, 20.0])
    vals = dict(prof)
    assert 0 < vals[0.0] < np.inf
    comp = dict(res.compensated_ratio(prof))
    assert max(v for l, v in comp.items() if l >= 1) <= 2 * comp[1.0]


@pytest.mark.slow
def test_weighted_decay_self_convergence():
    a = dict(res.weighted_resolvent_decay(radial_line(15, 256), lambdas=[5.0]))[5.0]
    b = dict(res.weighted_resolvent_decay(radial_line(15, 512), lambdas=[5.0]))[5.0]
    assert abs(a - b) / b < 0.05


def test_weighted_decay_rejects_small_alpha():
    with pytest.raises(InvalidInputError):
        res.weighted_resolvent_decay(alpha=0.5)


@pytest.mark.parametrize("V", [Potential.zero(), WELL, Potential.square_well(-2.0)], ids=["zero", "d1", "d-2"])
def test_resolvent_identity(coarse, V):
    r = res.resolvent_identity_residual(V, coarse, -4.0)
    assert r < 1e-8
    if V.is_zero:
        assert r == 0.0


def test_norm_tracks_kato_bound_on_fine_grid():
    grid = res.nystrom_grid(WELL, 0.25)
    bound = pot.kato_norm(WELL) / (4 * np.pi)
    ratio = res.birman_schwinger(WELL, grid, 2.0).norm() / bound
    assert 0.95 < ratio <= 1.02
