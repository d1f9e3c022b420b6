"""The twelve acceptance checks, shared by ``katodisp verify-all`` and the test suite.

Each check returns a :class:`CriterionResult`; none of them raises on a
numerical miss, so a full run always produces a complete table.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import potential as pot
from . import propagator as prop
from . import resolvent as res
from . import tfamily as tf
from . import wiener as wn
from .grids import cartesian_grid
from .potential import Potential

log = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
THRESHOLD_DEPTH = (np.pi / 2.0) ** 2


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0
    values: dict = field(default_factory=dict)

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.number:2d} {self.name}: {self.detail} ({self.seconds:.1f}s)"


def presets() -> dict[str, Potential]:
    """The three presets used by the norm-bound checks."""
    return {
        "unit-well": Potential.square_well(1.0, 1.0),
        "gaussian": Potential.gaussian(1.0, 0.5),
        "radial-table": Potential.radial_table([(0.0, -2.0), (0.5, -1.0), (1.5, 0.0)]),
    }


def _timed(number, name, fn):
    t0 = time.perf_counter()
    try:
        passed, detail, values = fn()
    except Exception as exc:  # a crash is a failed criterion, not a crashed suite
        log.exception("criterion %d raised", number)
        passed, detail, values = False, f"raised {type(exc).__name__}: {exc}", {}
    return CriterionResult(number, name, bool(passed), detail, time.perf_counter() - t0, values)


# --- 1 ----------------------------------------------------------------------
def criterion_1() -> CriterionResult:
    def run():
        t0 = time.perf_counter()
        k = pot.kato_norm(Potential.square_well(1.0, 1.0))
        dt = time.perf_counter() - t0
        err = abs(k - TWO_PI)
        return err < 1e-3 and dt < 10.0, f"||V||_K={k:.6f}, |err|={err:.2e}, {dt:.1f}s", {"kato": k, "err": err}
    return _timed(1, "Kato norm of the unit well", run)


# --- 2 ----------------------------------------------------------------------
def criterion_2() -> CriterionResult:
    def run():
        worst = 0.0
        for V in (Potential.square_well(1.0, 1.0), Potential.gaussian(1.0, 1.0)):
            k = pot.kato_norm(V)
            for r in (0.5, 2.0, 4.0):
                worst = max(worst, abs(pot.kato_norm(V.rescaled(r)) - k) / k)
        return worst < 1e-3, f"max relative change {worst:.2e}", {"max_rel": worst}
    return _timed(2, "Scaling invariance", run)


# --- 3 ----------------------------------------------------------------------
def criterion_3(h: float = 0.25) -> CriterionResult:
    def run():
        lams = np.linspace(0.0, 20.0, 32)
        worst, vals = 0.0, {}
        for name, V in presets().items():
            bound = pot.kato_norm(V) / (4.0 * np.pi)
            grid = res.nystrom_grid(V, h)
            ratio = max(res.birman_schwinger(V, grid, l, "minus").norm() for l in lams) / bound
            vals[name] = ratio
            worst = max(worst, ratio)
        return worst <= 1.02, "max norm/(||V||_K/4pi): " + ", ".join(f"{k}={v:.4f}" for k, v in vals.items()), vals
    return _timed(3, "Birman-Schwinger norm bound", run)


# --- 4 ----------------------------------------------------------------------
def criterion_4(h: float = 0.2) -> CriterionResult:
    def run():
        t0 = time.perf_counter()
        grid = res.nystrom_grid(Potential.square_well(1.0, 1.0), h)
        sweep = res.depth_sweep(Potential.square_well(1.0, 1.0), grid, np.linspace(-3.0, -2.0, 21))
        c = -sweep.threshold_depth
        dt = time.perf_counter() - t0
        rel = abs(c - THRESHOLD_DEPTH) / THRESHOLD_DEPTH
        return rel < 0.02 and dt < 120.0, f"c*={c:.4f} vs (pi/2)^2={THRESHOLD_DEPTH:.4f} ({rel:.2%}), {dt:.1f}s", \
            {"c": c, "rel": rel, "min_singular": sweep.threshold_min_singular}
    return _timed(4, "Zero-energy resonance threshold", run)


# --- 5 ----------------------------------------------------------------------
def tmop_grid(V: Potential, h: float) -> tuple:
    a = V.truncation_radius()
    grid = cartesian_grid(a + h, h)
    return grid, tf.RhoGrid(0.05, 2.0 * a + 3.0 * h)


def criterion_5(h: float = 0.1) -> CriterionResult:
    def run():
        vals, ok = {}, True
        for name, V in presets().items():
            grid, rg = tmop_grid(V, h)
            rep = pot.kato_report(V, deltas=(1.0,), radii=(1.0,))
            probes = tf.default_probes(V, grid, rep.argmax_center)
            wnorm = tf.wiener_norm(V, grid, rg, probes)
            ratio = wnorm / (rep.global_norm / (4.0 * np.pi))
            vals[name] = ratio
            ok &= ratio <= 1.02
        return ok, "wiener_norm/(||V||_K/4pi): " + ", ".join(f"{k}={v:.4f}" for k, v in vals.items()), vals
    return _timed(5, "Wiener-norm bound of T(rho)", run)


# --- 6 ----------------------------------------------------------------------
def criterion_6(h: float = 0.05, h_rho: float = 0.03) -> CriterionResult:
    def run():
        V = Potential.square_well(1.0, 1.0)
        grid = cartesian_grid(1.0 + 2 * h, h)
        f = tf.delta_probe(grid, (0.3, 0.1, -0.2))
        reach = tf.interaction_reach(V, grid, f)
        coarse, fine = tf.RhoGrid(h_rho, reach), tf.RhoGrid(h_rho / 2.0, reach)
        out, ok = {}, True
        for lam in (0.0, 1.0, 4.0):
            r1 = tf.fourier_consistency(V, grid, coarse, lam, f)
            r2 = tf.fourier_consistency(V, grid, fine, lam, f)
            out[lam] = (r1, r2)
            ok &= r1 < 0.03 and r1 / max(r2, 1e-300) >= 2.0
        detail = ", ".join(f"lam={l:g}: {a:.2%}->{b:.2%} (x{a / b:.2f})" for l, (a, b) in out.items())
        return ok, detail, {str(k): v for k, v in out.items()}
    return _timed(6, "Fourier consistency of T(rho)", run)


# --- 7 ----------------------------------------------------------------------
def gaussian_element(h=0.05, sigma=0.5, center=0.0, mass=1.0, M=None):
    M = np.eye(1) if M is None else np.asarray(M, dtype=float)
    T = wn.WienerElement.from_function(
        lambda r: np.exp(-0.5 * ((r - center) / sigma) ** 2) * M, h, center - 8 * sigma, center + 8 * sigma)
    return T * (mass / T.wnorm())


def neumann_oracle(T: wn.WienerElement, terms: int = 30) -> wn.WienerElement:
    one = wn.WienerElement.identity(T.d, T.h)
    acc, term = wn.WienerElement.zero(T.d, T.h), one
    for _ in range(terms):
        term = wn.convolve(term, -T)
        acc = acc + term
    return acc


def entrywise_gap(A: wn.WienerElement, B: wn.WienerElement) -> float:
    D = (A.without_identity() - B.without_identity())
    return float(np.abs(D.samples).max()) + abs(A.identity_coeff - B.identity_coeff)


def criterion_7() -> CriterionResult:
    def run():
        T = gaussian_element(mass=0.5)
        S, info = wn.invert(T, tol=1e-6, return_log=True)
        r1, r2 = wn.residual(S, T)
        gap = entrywise_gap(S, neumann_oracle(T))
        ok = max(r1, r2) < 1e-6 and gap < 1e-6
        return ok, f"residual {max(r1, r2):.2e}, max entry gap vs Neumann oracle {gap:.2e}", \
            {"residual": max(r1, r2), "gap": gap}
    return _timed(7, "Wiener inversion, contractive", run)


# --- 8 ----------------------------------------------------------------------
def noncontractive_element(h: float = 0.05) -> wn.WienerElement:
    """d = 2, W-norm 3; symbol min singular value ~0.58 (Gaussian of width 0.7 at rho = 1)."""
    return gaussian_element(h=h, sigma=0.7, center=1.0, mass=3.0, M=[[2.0, 1.0], [1.0, 2.0]])


def symbol_inverse_oracle(T: wn.WienerElement, rho, n_lambda: int = 8192) -> wn.WienerElement:
    """Pointwise inverse of ``I + T^`` on a dense lambda grid, transformed back by the trapezoid rule."""
    h = T.h
    lam = np.linspace(-np.pi / h, np.pi / h, n_lambda + 1)[:-1]  # periodic: trapezoid = plain sum
    dl = lam[1] - lam[0]
    sym = np.linalg.inv(np.eye(T.d) + wn.fourier(T, lam * (1 - 1e-12))) - np.eye(T.d)
    ph = np.exp(1j * np.outer(rho, lam)) * dl / (2.0 * np.pi)
    samples = np.einsum("kl,lij->kij", ph, sym)
    k0 = int(round(rho[0] / h))
    return wn.WienerElement(0.0, k0, h, samples)


def criterion_8() -> CriterionResult:
    def run():
        T = noncontractive_element()
        lam = np.linspace(-np.pi / T.h, np.pi / T.h, 4001)[1:-1]
        min_sv = float(np.linalg.svd(np.eye(2) + wn.fourier(T, lam), compute_uv=False)[:, -1].min())
        S, info = wn.invert(T, tol=1e-6, return_log=True)
        r = max(wn.residual(S, T))
        oracle = symbol_inverse_oracle(T, S.rho_values)
        gap = (S - oracle).wnorm()
        used_local = len(info.get("windows", [])) > 1
        ok = T.wnorm() >= 2.999 and min_sv >= 0.4 and r < 1e-3 and gap < 1e-2 and used_local
        return ok, (f"W(T)={T.wnorm():.3f}, min sv={min_sv:.3f}, residual {r:.2e}, "
                    f"W-gap vs symbol oracle {gap:.2e}, {len(info['windows'])} windows"), \
            {"residual": r, "gap": gap, "min_sv": min_sv, "windows": len(info["windows"])}
    return _timed(8, "Wiener inversion, non-contractive", run)


# --- 9 ----------------------------------------------------------------------
def criterion_9() -> CriterionResult:
    def run():
        samples = [(r, d) for r in (0.0, 1.0, 2.0) for d in (0.5, 1.0, 2.0)]
        out = prop.k_kernel_pair_check(1.0, samples)
        ok = out["modulus_error"] < 1e-12 and out["max_relative_deviation"] < 0.01 and len(samples) == 9
        return ok, f"modulus err {out['modulus_error']:.1e}, max deviation {out['max_relative_deviation']:.2e}", out
    return _timed(9, "K / K-check kernel pair", run)


# --- 10 ---------------------------------------------------------------------
def criterion_10() -> CriterionResult:
    def run():
        t0 = time.perf_counter()
        split = prop.discretize_H(Potential.zero(), prop.BoxSpec(16.0, 64))
        rep = prop.evolve_and_fit(split)
        dt = time.perf_counter() - t0
        pf = rep.prefactor / prop.FREE_PREFACTOR
        ok = abs(rep.fitted_slope + 1.5) <= 0.1 and abs(pf - 1.0) <= 0.25 and dt < 300
        return ok, f"slope {rep.fitted_slope:.3f}, prefactor/(4pi)^-3/2 {pf:.3f}, window {rep.fit_window[0]:.3g}..{rep.fit_window[1]:.3g}, {dt:.1f}s", \
            {"slope": rep.fitted_slope, "prefactor_ratio": pf}
    return _timed(10, "Free dispersive decay (64^3)", run)


# --- 11 ---------------------------------------------------------------------
RADIAL_BOX = prop.BoxSpec(400.0, 4000, geometry="radial")


def criterion_11() -> CriterionResult:
    def run():
        shallow = Potential.square_well(-1.0, 1.0)
        scan = res.resonance_scan(shallow, res.nystrom_grid(shallow, 0.25), np.linspace(0.0, 5.0, 11))
        s1 = prop.evolve_and_fit(prop.discretize_H(shallow, RADIAL_BOX), support_radius=1.0)
        deep = prop.discretize_H(Potential.square_well(-8.0, 1.0), RADIAL_BOX)
        s8 = prop.evolve_and_fit(deep, support_radius=1.0)
        raw = prop.evolve_and_fit(deep, project=False, support_radius=1.0)
        ok = (not scan.flagged and -1.7 <= s1.fitted_slope <= -1.3 and deep.projector_rank == 1
              and -1.7 <= s8.fitted_slope <= -1.3 and raw.fitted_slope > -0.5)
        detail = (f"depth -1: slope {s1.fitted_slope:.3f} (scan flags {len(scan.flagged)}); "
                  f"depth -8: projected {s8.fitted_slope:.3f}, raw {raw.fitted_slope:.3f}, "
                  f"E_b={deep.pp_eigenvalues.tolist()}")
        return ok, detail, {"shallow": s1.fitted_slope, "deep_projected": s8.fitted_slope,
                            "deep_raw": raw.fitted_slope}
    return _timed(11, "Perturbed decay and bound-state plateau", run)


# --- 12 ---------------------------------------------------------------------
def invariant_battery(seed: int = 0) -> dict[str, bool]:
    """Fast versions of every module's invariants; the full suites live in tests/."""
    rng = np.random.default_rng(seed)
    out = {}
    W, G = Potential.square_well(1.0), Potential.gaussian(1.0, 0.5)
    kW, kG = pot.kato_norm(W), pot.kato_norm(G)
    out["potential.homogeneity"] = abs(pot.kato_norm(W.scaled(-3.7)) - 3.7 * kW) <= 1e-10 * 3.7 * kW
    out["potential.triangle"] = pot.kato_norm(W + G) <= kW + kG + 1e-3
    rep = pot.kato_report(W, deltas=(0.5,), radii=(0.5,))
    near = pot.radial_kato_integral(W, np.linalg.norm(rep.argmax_center), 0.0, 0.5)
    out["potential.distal_reconstruction"] = abs(near + rep.distal_profile[0][1] - rep.global_norm) < 1e-3

    grid = res.nystrom_grid(W, 0.3)
    A, B = res.birman_schwinger(W, grid, 2.0, "minus"), res.birman_schwinger(W, grid, 2.0, "plus")
    out["resolvent.conjugation"] = np.allclose(A.matrix, np.conj(B.matrix), atol=0, rtol=1e-14)
    s1 = res.resonance_scan(W, grid, [1.0, 2.0, 3.0], sign="plus")
    s2 = res.resonance_scan(W, grid, [-3.0, -2.0, -1.0], sign="minus")
    out["resolvent.even_symmetry"] = np.allclose(s1.min_singular, s2.min_singular[::-1], rtol=1e-12)
    f = np.exp(-np.sum(grid.nodes**2, axis=1))
    m0 = np.abs(res.birman_schwinger(W, grid, 0.0).apply(f)).max()
    m40 = np.abs(res.birman_schwinger(W, grid, 40.0).apply(f)).max()
    out["resolvent.riemann_lebesgue"] = m40 < 0.5 * m0

    tg = cartesian_grid(1.2, 0.2)
    f1, f2 = rng.standard_normal(len(tg)), rng.standard_normal(len(tg))
    a, b = 0.7, -1.3
    lhs = tf.apply_T(W, tg, 0.55, a * f1 + b * f2).image
    rhs = a * tf.apply_T(W, tg, 0.55, f1).image + b * tf.apply_T(W, tg, 0.55, f2).image
    out["tfamily.linearity"] = np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12 * np.abs(rhs).max())
    rg = tf.RhoGrid(0.05, 2.4)
    p, m = tf.fourier_sum(W, tg, rg, 1.5, f1), tf.fourier_sum(W, tg, rg, -1.5, f1)
    out["tfamily.sign_symmetry"] = np.allclose(p, np.conj(m), rtol=1e-12, atol=1e-13)

    S = wn.WienerElement(0.3, -3, 0.1, rng.standard_normal((7, 2, 2)))
    T = wn.WienerElement(0.0, 2, 0.1, rng.standard_normal((5, 2, 2)))
    ST = wn.convolve(S, T)
    lam = 2.3
    out["wiener.intertwining"] = np.allclose(wn.fourier(ST, lam), wn.fourier(S, lam) @ wn.fourier(T, lam), atol=1e-12)
    out["wiener.submultiplicative"] = ST.norm() <= S.norm() * T.norm() * (1 + 1e-12)
    out["wiener.triangle"] = (S + T).norm() <= S.norm() + T.norm() + 1e-12
    Tc = gaussian_element(mass=0.5)
    Sc = wn.invert(Tc)
    out["wiener.two_sided"] = max(wn.residual(Sc, Tc)) <= 1e-6
    ls = np.linspace(-20, 20, 41)
    prod = (np.eye(1) + wn.fourier(Tc, ls)) @ (np.eye(1) + wn.fourier(Sc, ls)) - np.eye(1)
    out["wiener.symbol_consistency"] = float(np.abs(prod).max()) <= 1e-5

    small = prop.BoxSpec(6.0, 12)
    sp = prop.discretize_H(Potential.square_well(-8.0, 1.0), small)
    g = prop.initial_bump(sp, 0.6)
    once = sp.project_out(g)
    out["propagator.idempotence"] = np.allclose(sp.project_out(once), once, atol=1e-12 * np.abs(once).max())
    ts = np.array([0.1, 0.2, 0.4])
    fw = np.abs(sp.evolve(g, ts)).max(axis=1)
    bw = np.abs(sp.evolve(g, -ts)).max(axis=1)
    out["propagator.time_reversal"] = np.allclose(fw, bw, rtol=1e-10)
    r = 2.0
    sr = prop.discretize_H(Potential.square_well(-8.0, 1.0).rescaled(r), small.scaled(1.0 / r))
    gr = prop.initial_bump(sr, 0.6 / r)
    sup = np.abs(sp.evolve(g, ts)).max(axis=1)
    supr = np.abs(sr.evolve(gr, ts / r**2)).max(axis=1)
    out["propagator.scaling_covariance"] = np.allclose(supr, r**3 * sup, rtol=0.05)
    return out


def criterion_12(seed: int = 0, elapsed_so_far: float = 0.0) -> CriterionResult:
    def run():
        checks = invariant_battery(seed)
        failed = [k for k, v in checks.items() if not v]
        return not failed, f"{len(checks) - len(failed)}/{len(checks)} invariants hold" + \
            (f"; failed: {failed}" if failed else ""), checks
    r = _timed(12, "Invariant suites", run)
    total = elapsed_so_far + r.seconds
    r.values["suite_seconds"] = total
    if total >= 900.0:
        r.passed = False
        r.detail += f"; suite took {total:.0f}s >= 900s"
    return r


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11]


def run_all(seed: int = 0, only=None, echo=print) -> list[CriterionResult]:
    results = []
    t0 = time.perf_counter()
    for i, fn in enumerate(CRITERIA, start=1):
        if only and i not in only:
            continue
        results.append(fn())
        if echo:
            echo(results[-1].line())
    if not only or 12 in only:
        results.append(criterion_12(seed, time.perf_counter() - t0))
        if echo:
            echo(results[-1].line())
    return results
