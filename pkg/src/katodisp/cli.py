"""``katodisp`` command line: one subcommand per pipeline, all driven by a JSON run config."""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import acceptance
from . import potential as pot
from . import propagator as prop
from . import resolvent as res
from . import tfamily as tf
from . import wiener as wn
from .config import RunConfig
from .errors import ConfigError, KatoDispError
from .grids import cartesian_grid, radial_grid
from .io import write_csv, write_json

log = logging.getLogger("katodisp")


# --- subcommands --------------------------------------------------------------
# Each returns (summary line, exit status) and writes its artifacts into ``out``.

def cmd_kato(cfg: RunConfig, out: Path, args):
    V = cfg.build_potential()
    g = cfg.grid
    grid = radial_grid(V.support_radius, g.n_shells, g.extent, g.degree, breakpoints=V.breakpoints)
    rep = pot.kato_report(V, grid, deltas=cfg.kato.deltas, radii=cfg.kato.radii, threads=cfg.threads)
    write_json(out / "kato_report.json", rep.to_dict())
    write_csv(out / "kato_profile.csv", ["delta_or_R", "sup_value"], rep.csv_rows())
    c = ", ".join(f"{x:.3g}" for x in rep.argmax_center)
    return f"kato: ||V||_K = {rep.global_norm:.6f} at ({c})", 0


def cmd_scan(cfg: RunConfig, out: Path, args):
    V = cfg.build_potential()
    s, tol = cfg.scan, cfg.tolerances
    grid = res.nystrom_grid(V, cfg.grid.cartesian_h, cfg.grid.max_nodes)
    lams = np.linspace(0.0, s.lambda_max, s.n_lambda)
    rep = res.resonance_scan(V, grid, lams, tol.scan_threshold, s.sign, s.refine, cfg.threads)
    write_csv(out / "scan.csv", ["lambda", "min_singular", "det_modulus", "flag"], rep.csv_rows())
    summary = rep.summary()
    summary["nodes"] = len(grid)
    summary["spacing"] = grid.spacing

    decay = res.weighted_resolvent_decay(alpha=s.alpha, lambdas=s.decay_lambdas)
    write_csv(out / "weighted_decay.csv", ["lambda", "weighted_norm"], decay)
    summary["weighted_decay"] = [list(p) for p in decay]
    summary["compensated_ratio"] = [list(p) for p in res.compensated_ratio(decay)]

    if s.depth_sweep is not None:
        a, b, n = s.depth_sweep
        sweep = res.depth_sweep(V, grid, np.linspace(a, b, int(n)), sign=s.sign)
        write_csv(out / "depth_sweep.csv", ["depth_multiplier", "min_singular"],
                  zip(sweep.depths.tolist(), sweep.min_singular.tolist()))
        summary["threshold_multiplier"] = sweep.threshold_depth
        summary["threshold_min_singular"] = sweep.threshold_min_singular
    write_json(out / "scan_summary.json", summary)
    line = f"scan: {len(rep.lambdas)} lambdas, min sv {summary['min_of_min_singular']:.4g}, " \
           f"{len(rep.flagged)} flagged interval(s)"
    if s.depth_sweep is not None:
        line += f", threshold multiplier {summary['threshold_multiplier']:.5g}"
    return line, 0


def cmd_tmop(cfg: RunConfig, out: Path, args):
    V = cfg.build_potential()
    r = cfg.rho_grid
    h = r.spatial_h
    grid = cartesian_grid(V.truncation_radius() + h, h)
    rep = pot.kato_report(V, deltas=cfg.kato.deltas, radii=cfg.kato.radii, threads=cfg.threads)
    probes = tf.default_probes(V, grid, rep.argmax_center)
    rho_max = r.rho_max if r.rho_max is not None else 2.0 * V.truncation_radius() + 3.0 * h
    rg = tf.RhoGrid(r.h_rho, rho_max)

    slices = tf.slice_norms(V, grid, rg, probes[0], r.order_factor, cfg.threads)
    mass = tf.l1(grid, probes[0])
    write_csv(out / "tmop_slices.csv", ["rho", "l1_norm"], [(p, n / mass) for p, n in slices])
    wnorm = tf.wiener_norm(V, grid, rg, probes, r.order_factor, cfg.threads)
    bound = rep.global_norm / (4.0 * np.pi)

    records = []
    for lam in r.lambdas:
        need = tf.interaction_reach(V, grid, probes[0])
        if V.kind == "gaussian" and lam != 0:
            need += 2.0 * np.pi / abs(lam)
        fr = tf.RhoGrid(r.h_rho, max(rho_max, need))
        resid = tf.fourier_consistency(V, grid, fr, lam, probes[0], r.order_factor, cfg.threads)
        records.append({"lambda": lam, "residual": resid, "h_rho": r.h_rho, "rho_max": fr.rho_max})
    write_json(out / "tmop_fourier.json", records)
    write_json(out / "tmop_summary.json", {
        "wiener_norm": wnorm, "kato_bound": bound, "ratio": wnorm / bound if bound else None,
        "spatial_h": h, "h_rho": r.h_rho, "rho_max": rho_max, "probes": len(probes)})
    worst = max((x["residual"] for x in records), default=0.0)
    return f"tmop: wiener norm {wnorm:.5f} (bound {bound:.5f}), max Fourier residual {worst:.3%}", 0


def _random_element(rng, d, h):
    n = int(rng.integers(1, 16))
    k0 = int(rng.integers(-10, 10))
    samples = rng.standard_normal((n, d, d)) + 1j * rng.standard_normal((n, d, d))
    return wn.WienerElement(complex(rng.standard_normal()), k0, h, samples / n)


def wiener_selftest(seed: int, n_random: int, n_lambda: int) -> dict:
    """Algebra laws on seeded random elements; returns worst violations."""
    rng = np.random.default_rng(seed)
    lam = np.linspace(-20.0, 20.0, n_lambda)
    worst = {"intertwining": 0.0, "submultiplicativity": 0.0, "triangle": 0.0, "associativity": 0.0}
    for _ in range(n_random):
        d = int(rng.integers(1, 4))
        S, T, U = (_random_element(rng, d, 0.1) for _ in range(3))
        ST = wn.convolve(S, T)
        err = np.abs(wn.fourier(ST, lam) - wn.fourier(S, lam) @ wn.fourier(T, lam)).max()
        worst["intertwining"] = max(worst["intertwining"], float(err))
        worst["submultiplicativity"] = max(worst["submultiplicativity"], ST.norm() - S.norm() * T.norm())
        worst["triangle"] = max(worst["triangle"], (S + T).norm() - S.norm() - T.norm())
        a = wn.convolve(ST, U) - wn.convolve(S, wn.convolve(T, U))
        worst["associativity"] = max(worst["associativity"], a.norm())
    ok = (worst["intertwining"] < 1e-10 and worst["submultiplicativity"] < 1e-10
          and worst["triangle"] < 1e-10 and worst["associativity"] < 1e-10)
    return {"passed": ok, "n_random": n_random, "n_lambda": n_lambda, "worst": worst}


def cmd_wiener(cfg: RunConfig, out: Path, args):
    st = wiener_selftest(cfg.seed, cfg.wiener.n_random, cfg.wiener.n_lambda)
    write_json(out / "wiener_selftest.json", st)
    line = f"wiener: self-tests {'passed' if st['passed'] else 'FAILED'} on {st['n_random']} random elements"
    status = 0 if st["passed"] else 1
    path = args.element or cfg.wiener.element
    if path:
        T = wn.WienerElement.load(path)
        S, info = wn.invert(T, tol=cfg.tolerances.wiener_eps, sv_floor=cfg.tolerances.sv_floor, return_log=True)
        r = max(wn.residual(S, T))
        S.save(out / "wiener_inverse.json")
        write_csv(out / "wiener_inverse.csv", ["rho", "l1_norm"],
                  [(float(p), wn.l1_operator_norm(m)) for p, m in zip(S.rho_values, S.samples)])
        write_json(out / "wiener_log.json", {**info, "residual": r, "wnorm_T": T.wnorm(), "wnorm_S": S.wnorm()})
        line += f"; inverse W-norm {S.wnorm():.5g}, residual {r:.2e}, {len(info['windows'])} window(s)"
    return line, status


def cmd_evolve(cfg: RunConfig, out: Path, args):
    V = cfg.build_potential()
    b, e = cfg.box, cfg.evolve
    box = prop.BoxSpec(b.side, b.points_per_axis, b.dirichlet, b.geometry)
    split = prop.discretize_H(V, box, seed=cfg.seed)
    rep = prop.evolve_and_fit(split, project=e.project, width=e.bump_width,
                              support_radius=0.0 if V.is_zero else V.support_radius, n_times=e.n_times)
    write_csv(out / "decay.csv", ["t", "sup_norm"], rep.csv_rows())
    summary = rep.summary()
    summary["bound_state_energies"] = split.pp_eigenvalues.tolist()
    summary["method"] = split.method
    write_json(out / "decay.json", summary)
    return (f"evolve: slope {rep.fitted_slope:.3f} on t in [{rep.fit_window[0]:.3g}, {rep.fit_window[1]:.3g}], "
            f"pp rank {rep.pp_rank}"), 0


def cmd_verify_all(cfg: RunConfig, out: Path, args):
    results = acceptance.run_all(seed=cfg.seed)
    write_csv(out / "acceptance.csv", ["criterion", "name", "passed", "seconds"],
              [(r.number, r.name, int(r.passed), r.seconds) for r in results])
    write_json(out / "acceptance.json", [dataclasses.asdict(r) for r in results])
    n = sum(r.passed for r in results)
    return f"verify-all: {n}/{len(results)} criteria passed", 0 if n == len(results) else 1


COMMANDS = {
    "kato": cmd_kato,
    "scan": cmd_scan,
    "tmop": cmd_tmop,
    "wiener": cmd_wiener,
    "evolve": cmd_evolve,
    "verify-all": cmd_verify_all,
}


# --- argument handling ----------------------------------------------------------

def _depth_sweep(text: str):
    try:
        a, b, n = text.split(":")
        return [float(a), float(b), int(n)]
    except ValueError:
        raise argparse.ArgumentTypeError("expected a:b:n, e.g. -3:-2:21") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="run configuration (JSON); defaults are used if omitted")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides output_dir)")
    common.add_argument("--seed", type=int, metavar="N")
    common.add_argument("--threads", type=int, metavar="N")
    common.add_argument("--tol", type=float, metavar="X",
                        help="scan: flag threshold; wiener: inversion tolerance")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="katodisp", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("kato", parents=[common], help="Kato norm and profiles")
    s = sub.add_parser("scan", parents=[common], help="resonance scan and weighted resolvent decay")
    s.add_argument("--lambda-max", type=float, metavar="X")
    s.add_argument("--depth-sweep", type=_depth_sweep, metavar="a:b:n")
    t = sub.add_parser("tmop", parents=[common], help="spherical-means family norms and Fourier check")
    t.add_argument("--rho-max", type=float, metavar="X")
    w = sub.add_parser("wiener", parents=[common], help="algebra self-tests and inversion of an element file")
    w.add_argument("--element", metavar="PATH")
    sub.add_parser("evolve", parents=[common], help="box evolution and decay fit")
    sub.add_parser("verify-all", parents=[common], help="run the acceptance suite")
    return p


def effective_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    doc = cfg.to_dict()
    if args.out is not None:
        doc["output_dir"] = args.out
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.threads is not None:
        doc["threads"] = args.threads
    if args.tol is not None:
        key = {"scan": "scan_threshold", "wiener": "wiener_eps"}.get(args.command)
        if key is None:
            raise ConfigError(f"cli: --tol has no meaning for {args.command!r}")
        doc["tolerances"][key] = args.tol
    if getattr(args, "lambda_max", None) is not None:
        doc["scan"]["lambda_max"] = args.lambda_max
    if getattr(args, "depth_sweep", None) is not None:
        doc["scan"]["depth_sweep"] = args.depth_sweep
    if getattr(args, "rho_max", None) is not None:
        doc["rho_grid"]["rho_max"] = args.rho_max
    return RunConfig.from_dict(doc)


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = effective_config(args)
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "effective_config.json").write_text(cfg.dumps())
        with threadpool_limits(cfg.threads):
            line, status = COMMANDS[args.command](cfg, out, args)
    except KatoDispError as exc:
        print(f"katodisp {args.command}: error: {exc}", file=sys.stderr)
        return exc.exit_code
    print(line)
    return status


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
