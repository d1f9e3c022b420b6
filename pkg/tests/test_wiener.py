import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from katodisp import wiener as wn
from katodisp.acceptance import gaussian_element, neumann_oracle, noncontractive_element, symbol_inverse_oracle
from katodisp.errors import InvalidInputError, ResolutionError, SpectralObstructionError
from katodisp.wiener import WienerElement

from oracles import gaussian_symbol

H = 0.05


def gauss(sigma=0.5, mass=1.0, center=0.0, h=H):
    g = lambda r: np.exp(-0.5 * ((r - center) / sigma) ** 2) / (np.sqrt(2 * np.pi) * sigma) * mass  # noqa: E731
    return WienerElement.from_function(g, h, center - 10 * sigma, center + 10 * sigma, d=1)


@st.composite
def elements(draw, d=None):
    d = d or draw(st.integers(1, 3))
    n = draw(st.integers(1, 12))
    k0 = draw(st.integers(-15, 15))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    s = rng.standard_normal((n, d, d)) + 1j * rng.standard_normal((n, d, d))
    s[rng.random((n, d, d)) < 0.5] = 0  # sparse
    return WienerElement(complex(draw(st.floats(-2, 2))), k0, 0.1, s)


def spike_family(n=12, h=H):
    """Two-point 'spheres' splatted onto a lattice incommensurate with the rho grid."""
    ratio = (1 + 5**0.5) / 2
    d = 2 * int(4 * n / ratio + 4) + 1
    mats = np.zeros((n, d, d))
    for k in range(1, n + 1):
        p = k / ratio
        i, w = int(p), p - int(p)
        for j in range(d):
            for s in (1, -1):
                for off, ww in ((i, 1 - w), (i + 1, w)):
                    t = j + s * off
                    if 0 <= t < d:
                        mats[k - 1, t, j] += 0.5 * ww
    return WienerElement(0.0, 1, h, mats / (n * h))


# --- algebra -------------------------------------------------------------------

def test_identity_is_neutral():
    T = gauss()
    one = WienerElement.identity(1, H)
    P = wn.convolve(one, T)
    assert P.k0 == T.k0 and np.array_equal(P.samples, T.samples) and P.identity_coeff == 0


def test_gaussian_pair_symbol():
    T = gauss(0.4)
    lam = np.linspace(-30, 30, 121)
    np.testing.assert_allclose(wn.fourier(wn.convolve(T, T), lam)[:, 0, 0], gaussian_symbol(lam, 0.4) ** 2, atol=1e-6)


@settings(max_examples=40, deadline=None)
@given(S=elements(d=2), T=elements(d=2), lam=st.floats(-30, 30))
def test_intertwining(S, T, lam):
    lhs = wn.fourier(wn.convolve(S, T), lam)
    rhs = wn.fourier(S, lam) @ wn.fourier(T, lam)
    assert np.abs(lhs - rhs).max() <= 1e-6 * (1 + S.norm() * T.norm())


@settings(max_examples=40, deadline=None)
@given(S=elements(d=2), T=elements(d=2))
def test_submultiplicative(S, T):
    assert wn.convolve(S, T).norm() <= S.norm() * T.norm() * (1 + 1e-3)


@settings(max_examples=40, deadline=None)
@given(S=elements(d=3), T=elements(d=3), c=st.complex_numbers(max_magnitude=10))
def test_norm_axioms(S, T, c):
    assert (S + T).norm() <= S.norm() + T.norm() + 1e-12
    assert (S * c).norm() == pytest.approx(abs(c) * S.norm(), rel=1e-12, abs=1e-300)


def test_symbol_bounded_by_norm():
    rng = np.random.default_rng(7)
    lam = np.linspace(-31, 31, 64)
    for _ in range(100):
        d, n = rng.integers(1, 4), rng.integers(1, 20)
        T = WienerElement(0.0, int(rng.integers(-10, 10)), 0.1, rng.standard_normal((n, d, d)))
        sym = wn.fourier(T, lam)
        assert np.linalg.norm(sym, ord=1, axis=(1, 2)).max() <= T.wnorm() * (1 + 1e-12)


def test_fourier_examples():
    assert not np.any(wn.fourier(WienerElement.zero(2, H), 3.0))
    T = gauss(0.3)
    lam_max = 0.9 * np.pi / H
    assert abs(wn.fourier(T, lam_max)[0, 0]) < 0.1 * abs(wn.fourier(T, 0.0)[0, 0])
    with pytest.raises(ResolutionError):
        wn.fourier(T, np.pi / H)


# --- continuity and tails --------------------------------------------------------

def test_C1_gaussian_mean_value_bound():
    sigma = 0.5
    T = gauss(sigma)
    slope = 2 / (np.sqrt(2 * np.pi) * sigma)  # int |g'| = 2 g(0)
    for dlt, m in wn.check_C1(T, [H, 2 * H, 5 * H]):
        assert m <= slope * dlt * 1.01
    assert wn.check_C1(T, [0.0]) == [(0.0, 0.0)]


def test_C1_spike_has_no_continuity():
    T = WienerElement(0.0, 3, H, np.array([[[1.0 / H]]]))
    assert wn.check_C1(T, [H])[0][1] == pytest.approx(2 * T.wnorm())


def test_C2_tails():
    T = gauss(0.5)
    t = dict(wn.check_C2(T, [0.5, 1.0, 6.0]))
    assert t[1.0] / t[0.5] < 0.3
    assert t[6.0] == 0.0
    assert all(v == 0.0 for _, v in wn.check_C2(WienerElement.zero(1, H), [0.0, 1.0]))


def test_power_examples():
    T = gauss(0.5)
    P1 = wn.power(T, 1)
    assert np.array_equal(P1.samples, T.samples)
    P2 = wn.power(T, 2)
    C = wn.convolve(T, T)
    assert P2.k0 == C.k0 and np.array_equal(P2.samples, C.samples)


def test_fourth_power_of_spike_family_is_continuous():
    T = spike_family()
    ds = [H, 2 * H, 4 * H, 8 * H]
    assert wn.check_C1(T, [4 * H])[0][1] == pytest.approx(2 * T.wnorm())
    T4 = wn.power(T, 4)
    rates = [m / d for d, m in wn.check_C1(T4, ds)]
    assert max(rates) <= 2 * min(rates)
    assert wn.check_C1(T4, [H])[0][1] < 0.25 * T4.wnorm()


# --- inversion -------------------------------------------------------------------

def test_invert_zero():
    S = wn.invert(WienerElement.zero(2, H))
    assert S.norm() == 0.0


def test_invert_contractive():
    T = gaussian_element(mass=0.5)
    S = wn.invert(T, tol=1e-6)
    assert max(wn.residual(S, T)) < 1e-6
    D = S - neumann_oracle(T)
    assert np.abs(D.samples).max() < 1e-6
    lam = np.linspace(-40, 40, 81)
    want = 1 / (1 + wn.fourier(T, lam)[:, 0, 0]) - 1
    np.testing.assert_allclose(wn.fourier(S, lam)[:, 0, 0], want, atol=1e-6)


def test_invert_noncontractive_two_sided_and_symbol():
    T = noncontractive_element()
    S, info = wn.invert(T, tol=1e-6, return_log=True)
    assert T.wnorm() == pytest.approx(3.0)
    assert len(info["windows"]) > 1
    assert max(wn.residual(S, T)) < 1e-3
    lam = np.linspace(-60, 60, 121)
    prod = (np.eye(2) + wn.fourier(T, lam)) @ (np.eye(2) + wn.fourier(S, lam)) - np.eye(2)
    assert np.abs(prod).max() <= 10 * 1e-6
    assert (S - symbol_inverse_oracle(T, S.rho_values)).wnorm() < 1e-2


def test_invert_uses_power_fallback_for_spike():
    T = WienerElement(0.0, 3, H, np.array([[[0.6 / H]]]))
    S = wn.invert(T)
    assert max(wn.residual(S, T)) < 1e-6


def test_invert_detects_spectral_obstruction():
    T = gauss(0.5, mass=-1.0)  # 1 + T^(0) = 0
    with pytest.raises(SpectralObstructionError) as exc:
        wn.invert(T)
    assert exc.value.lam is not None and abs(exc.value.lam) < 1.0


def test_serialisation_round_trip(tmp_path):
    T = noncontractive_element() * (1 - 0.5j)
    T.save(tmp_path / "t.json")
    B = WienerElement.load(tmp_path / "t.json")
    assert B.k0 == T.k0 and B.h == T.h
    np.testing.assert_array_equal(B.samples, T.samples)


def test_mismatched_grids_rejected():
    with pytest.raises(InvalidInputError):
        wn.convolve(WienerElement.zero(1, 0.1), WienerElement.zero(1, 0.2))
    with pytest.raises(InvalidInputError):
        wn.convolve(WienerElement.zero(1, 0.1), WienerElement.zero(2, 0.1))
