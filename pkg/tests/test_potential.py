import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from katodisp import potential as pot
from katodisp.errors import InvalidInputError
from katodisp.grids import cartesian_grid, load_grid, radial_grid, save_grid
from katodisp.potential import Potential

from oracles import ball_newton, distal_kato_at_origin, local_kato_at_origin, well_kato_at_origin

WELL = Potential.square_well(1.0, 1.0)
GAUSS = Potential.gaussian(1.0, 1.0)


@pytest.fixture(scope="module")
def well_norm():
    return pot.kato_norm(WELL)


def test_zero_potential_has_zero_norm():
    Z = Potential.zero()
    assert pot.kato_norm(Z) == 0.0
    assert pot.local_kato_profile(Z, [0.5, 1.0]) == [(0.5, 0.0), (1.0, 0.0)]
    assert all(v == 0.0 for _, v in pot.distal_kato_profile(Z, [1.0, 3.0]))


def test_unit_well_matches_radial_oracle(well_norm):
    assert abs(well_norm - well_kato_at_origin()) < 1e-3


@pytest.mark.parametrize("b", [0.0, 0.3, 0.8, 1.0, 1.7, 4.0])
def test_radial_integral_matches_ball_potential(b):
    assert pot.radial_kato_integral(WELL, b) == pytest.approx(ball_newton(b), rel=1e-10)


def test_rescaled_well_keeps_norm(well_norm):
    assert abs(pot.kato_norm(WELL.rescaled(2.0)) - 2 * np.pi) < 1e-3
    assert abs(pot.kato_norm(WELL.rescaled(2.0)) - well_norm) < 1e-3


def test_gaussian_norm_close_to_closed_form():
    # 4 pi int r exp(-r^2/2) dr = 4 pi
    assert pot.kato_norm(GAUSS) == pytest.approx(4 * np.pi, rel=1e-3)


@pytest.mark.parametrize("V", [WELL, GAUSS], ids=["well", "gaussian"])
@pytest.mark.parametrize("r", [0.5, 2.0, 4.0])
def test_scaling_invariance(V, r):
    assert abs(pot.kato_norm(V.rescaled(r)) - pot.kato_norm(V)) <= 2e-3


def test_homogeneity(well_norm):
    for c in (-3.7, 0.25, 11.0):
        assert pot.kato_norm(WELL.scaled(c)) == pytest.approx(abs(c) * well_norm, rel=1e-10)


def test_triangle_inequality(well_norm):
    shifted = Potential.radial_table([(0.0, -1.0), (0.7, 0.5), (1.2, 0.0)])
    total = pot.kato_norm(WELL + shifted)
    assert total <= well_norm + pot.kato_norm(shifted) + 1e-3


def test_local_profile_examples():
    prof = dict(pot.local_kato_profile(WELL, [2.0, 0.1]))
    assert abs(prof[2.0] - 2 * np.pi) < 1e-3
    assert abs(prof[0.1] - 0.02 * np.pi) < 1e-4
    assert prof[0.1] == pytest.approx(local_kato_at_origin(lambda r: 1.0 * (r <= 1), 0.1), abs=1e-10)


def test_distal_profile_examples():
    assert pot.distal_kato_profile(WELL, [3.0], centers=[[0, 0, 0], [0.5, 0.5, 0], [0, 0, 1]])[0][1] == 0.0
    ys = [[0, 0, 0], [0.5, 0, 0], [0, 0.7, 0.7]]
    tail = pot.distal_kato_profile(GAUSS, [5.0], centers=ys)[0][1]
    assert tail < 1e-3
    assert tail >= distal_kato_at_origin(lambda r: np.exp(-r * r / 2), 5.0) * (1 - 1e-6)


def test_distal_reconstruction():
    rep = pot.kato_report(WELL, deltas=(0.5,), radii=(0.5,))
    b = np.linalg.norm(rep.argmax_center)
    near = pot.radial_kato_integral(WELL, b, 0.0, 0.5)
    assert near + rep.distal_profile[0][1] == pytest.approx(rep.global_norm, abs=1e-3)


def test_report_serialisation():
    rep = pot.kato_report(WELL, deltas=(1.0, 0.1), radii=(0.5,))
    d = rep.to_dict()
    assert set(d) == {"global_norm", "local_profile", "distal_profile", "argmax_center"}
    assert d["argmax_center"] == [0.0, 0.0, 0.0]
    assert [r[0] for r in rep.csv_rows()] == [1.0, 0.1, 0.5]


def test_table_potential_grid_matches_semianalytic():
    T = Potential.radial_table([(0.0, -2.0), (0.5, -1.0), (1.5, 0.0)])
    assert pot.kato_norm(T) == pytest.approx(pot.radial_kato_integral(T, 0.0), rel=1e-3)


@settings(max_examples=25, deadline=None)
@given(depth=st.floats(-10, 10).filter(lambda x: abs(x) > 1e-3), radius=st.floats(0.2, 5.0))
def test_well_origin_integral_closed_form(depth, radius):
    V = Potential.square_well(depth, radius)
    assert pot.radial_kato_integral(V, 0.0) == pytest.approx(2 * np.pi * abs(depth) * radius**2, rel=1e-9)


@settings(max_examples=20, deadline=None)
@given(r=st.floats(0.1, 10.0), b=st.floats(0.0, 3.0))
def test_rescaling_law_pointwise(r, b):
    # kato integrand of V_r at y equals that of V at r y
    assert pot.radial_kato_integral(GAUSS.rescaled(r), b / r) == pytest.approx(
        pot.radial_kato_integral(GAUSS, b), rel=1e-7, abs=1e-12)


def test_potential_dict_round_trip():
    for V in (WELL, GAUSS, Potential.radial_table([(0, 1), (1, 0)]), WELL + GAUSS):
        assert Potential.from_dict(V.to_dict()) == V


@pytest.mark.parametrize("bad", [
    {"kind": "square-well"},
    {"kind": "square-well", "depth": 1.0, "radius": -1.0},
    {"kind": "gaussian", "amplitude": 1.0, "width": 1.0, "extra": 2},
    {"kind": "triangle"},
    {"kind": "radial-table", "samples": [[0, 1], [0, 0]]},
    {"kind": "radial-table", "table": [[0, 1], [1, 0]]},
])
def test_invalid_potentials_rejected(bad):
    with pytest.raises(InvalidInputError):
        Potential.from_dict(bad)


def test_grid_volume_and_round_trip(tmp_path):
    g = radial_grid(1.0, n_shells=64)
    assert g.volume == pytest.approx(4 / 3 * np.pi * 1.5**3, rel=1e-10)
    c = cartesian_grid(1.0, 0.25)
    save_grid(c, tmp_path / "g.json")
    back = load_grid(tmp_path / "g.json")
    np.testing.assert_array_equal(back.nodes, c.nodes)
    np.testing.assert_array_equal(back.weights, c.weights)
