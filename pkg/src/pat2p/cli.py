"""Command-line front end: ``pat2p {phantom,forward,convergence,synthesize,reconstruct}``.

Data go to files (or stdout for the convergence table); diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import io as fio
from .adjoint import ReconProblem
from .config import ConfigError, RunConfig
from .forward import PicardError, convergence_study, picard_solve, pressure_field, semilinear_residual
from .grid import Grid2D, ScalarField, relative_l2_error
from .phantoms import PHANTOMS, derive_optics, make_phantom
from .synth import synthesize
from .vip import vip_reconstruct

log = logging.getLogger("pat2p")


class CliError(Exception):
    pass


def _grid(cfg: RunConfig, n: int) -> Grid2D:
    return Grid2D(cfg["x_min"], cfg["x_max"], cfg["x_min"], cfg["x_max"], n)


def _prefix(p: str) -> str:
    if p.endswith(("/", "\\")):
        Path(p).mkdir(parents=True, exist_ok=True)
    elif Path(p).parent != Path("."):
        Path(p).parent.mkdir(parents=True, exist_ok=True)
    return p


def _save(cfg: RunConfig, path: str, field: ScalarField) -> None:
    fio.write_tpf(path, field)
    if cfg["write_csv"]:
        fio.write_csv(str(Path(path).with_suffix(".csv")), field)


def _load(path) -> ScalarField:
    try:
        return fio.read_tpf(path)
    except FileNotFoundError as exc:
        raise CliError(str(exc)) from None


def cmd_phantom(args, cfg: RunConfig) -> None:
    grid = _grid(cfg, args.n)
    sb, mb = cfg.backgrounds()
    sigma, mu = make_phantom(cfg["phantom"], grid, sb, mb)
    D, gamma = derive_optics(sigma)
    pre = _prefix(args.out_prefix)
    for name, values in (("sigma", sigma), ("mu", mu), ("D", D), ("gamma", gamma)):
        _save(cfg, f"{pre}{name}.tpf", ScalarField(grid, values))
    log.info("wrote %s phantom on %dx%d grid to %s*.tpf", cfg["phantom"], grid.n, grid.n, pre)


def cmd_forward(args, cfg: RunConfig) -> None:
    if args.sigma:
        sigma_f = _load(args.sigma)
        grid = sigma_f.grid
        sigma = sigma_f.values
        mu = _load(args.mu).values if args.mu else 0.1 * sigma
    else:
        grid = _grid(cfg, args.n)
        sb, mb = cfg.backgrounds()
        sigma, mu = make_phantom(cfg["phantom"], grid, sb, mb)
    D_default, gamma_default = derive_optics(sigma)
    D = _load(args.D).values if args.D else D_default
    gamma = _load(args.gamma).values if args.gamma else gamma_default
    pre = _prefix(args.out_prefix)
    illum = args.g or [cfg["g1"], cfg["g2"]]
    for j, g in enumerate(illum, 1):
        u, rep = picard_solve(grid, D, sigma, mu, g, tol=cfg["picard_tol"], max_iter=cfg["picard_max_iter"])
        if not rep.converged:
            raise PicardError(f"Picard did not converge for g={g} after {rep.iterations} iterations")
        res = semilinear_residual(grid, D, sigma, mu, u)
        log.info(
            "g=%g: %d Picard iterations, update %.2e, residual %.2e, ratios %s",
            g, rep.iterations, rep.final_update_norm, res, ", ".join(f"{r:.3f}" for r in rep.contraction_ratios),
        )
        _save(cfg, f"{pre}u{j}.tpf", ScalarField(grid, u))
        _save(cfg, f"{pre}H{j}.tpf", ScalarField(grid, pressure_field(gamma, sigma, mu, u)))


def cmd_convergence(args, cfg: RunConfig) -> None:
    levels = [int(t) for t in args.levels.split(",") if t.strip()]
    if not levels:
        raise CliError("no levels given")
    rows = convergence_study(levels, tol=cfg["picard_tol"], max_iter=cfg["picard_max_iter"])
    lines = ["N,err,order"]
    for r in rows:
        lines.append(f"{r.n},{r.err:.6e},{'' if r.order is None else f'{r.order:.4f}'}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    orders = [r.order for r in rows if r.order is not None]
    if orders:
        log.info("observed orders: %s", ", ".join(f"{o:.3f}" for o in orders))


def cmd_synthesize(args, cfg: RunConfig) -> None:
    spec = cfg.synth()
    fine = _grid(cfg, spec.n_fine)
    coarse = _grid(cfg, spec.n_coarse)
    sb, mb = cfg.backgrounds()
    sigma, mu = make_phantom(cfg["phantom"], fine, sb, mb)
    result = synthesize(sigma, mu, fine, spec, coarse, cfg["picard_tol"], cfg["picard_max_iter"])
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for j, G in enumerate(result.G, 1):
        _save(cfg, str(out / f"G{j}.tpf"), G)
    # Known optics and ground truth on the reconstruction grid.
    sigma_c, mu_c = make_phantom(cfg["phantom"], coarse, sb, mb)
    D_c, gamma_c = derive_optics(sigma_c)
    for name, values in (("D", D_c), ("gamma", gamma_c), ("sigma_true", sigma_c), ("mu_true", mu_c)):
        _save(cfg, str(out / f"{name}.tpf"), ScalarField(coarse, values))
    meta = spec.metadata()
    meta.update(phantom=cfg["phantom"], sigma_b=sb, mu_b=mb, negative_nodes=result.negative_nodes)
    fio.write_metadata(out / "metadata.txt", meta)
    cfg.write(out / "config.txt")
    log.info("wrote data for %s phantom to %s (%d negative noisy samples)", cfg["phantom"], out, result.negative_nodes)


def cmd_reconstruct(args, cfg: RunConfig) -> None:
    data_dir = Path(args.data_dir) if args.data_dir else None

    def resolve(explicit, name, required=True):
        if explicit:
            return Path(explicit)
        if data_dir is not None and (data_dir / name).exists():
            return data_dir / name
        if required:
            where = data_dir / name if data_dir is not None else name
            raise CliError(f"missing input file: {where}")
        return None

    G1 = _load(resolve(args.data1, "G1.tpf"))
    G2 = _load(resolve(args.data2, "G2.tpf"))
    grid = G1.grid
    if G2.grid != grid:
        raise CliError("the two data files live on different grids")
    D_path = resolve(args.D, "D.tpf", required=False)
    gamma_path = resolve(args.gamma, "gamma.tpf", required=False)
    sb, mb = cfg.backgrounds()
    D = _load(D_path).values if D_path else np.full(grid.shape, 0.1 * sb)
    gamma = _load(gamma_path).values if gamma_path else np.ones(grid.shape)

    weights = cfg.weights()
    problem = ReconProblem(
        grid, (G1.values, G2.values), (cfg["g1"], cfg["g2"]), D, gamma, sb, mb, weights,
        picard_tol=cfg["picard_tol"], picard_max_iter=cfg["picard_max_iter"],
        adjoint_form=cfg["adjoint_form"], misfit_norm=cfg["misfit_norm"],
    )
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg.write(out / "config.txt")
    t0 = time.perf_counter()
    result = vip_reconstruct(problem, cfg.bounds(), cfg.vip())
    wall = time.perf_counter() - t0
    _save(cfg, str(out / "sigma.tpf"), ScalarField(grid, result.sigma))
    _save(cfg, str(out / "mu.tpf"), ScalarField(grid, result.mu))
    result.trace.to_csv(out / "trace.csv")

    first, last = result.trace[0], result.trace[-1]
    summary = {
        "iterations": result.iterations,
        "converged": result.converged,
        "J": last.J,
        "misfit": last.misfit,
        "misfit_initial": first.misfit,
        "misfit_reduction": (first.misfit / last.misfit) if last.misfit > 0 else float("inf"),
        "E1": last.E1,
        "E2": last.E2,
        "wall_time_s": round(wall, 3),
    }
    truth_s = resolve(args.truth_sigma, "sigma_true.tpf", required=False)
    truth_m = resolve(args.truth_mu, "mu_true.tpf", required=False)
    if truth_s:
        summary["rel_error_sigma"] = relative_l2_error(result.sigma, _load(truth_s).values)
    if truth_m:
        summary["rel_error_mu"] = relative_l2_error(result.mu, _load(truth_m).values)
    fio.write_metadata(out / "summary.txt", summary)
    if not result.converged:
        log.warning("stopped at the iteration cap (%d) with ||E1||+||E2|| = %.3e", result.iterations, last.E1 + last.E2)
    log.info(
        "reconstruction done: %d iterations, misfit %.3e -> %.3e (x%.1f), %.1fs",
        result.iterations, first.misfit, last.misfit, summary["misfit_reduction"], wall,
    )


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value configuration file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override one config key")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="pat2p", description=__doc__.splitlines()[0])
    p.add_argument("--dump-defaults", action="store_true", help="print the default configuration and exit")
    sub = p.add_subparsers(dest="command")

    sp = sub.add_parser("phantom", parents=[common], help="write sigma, mu, D, gamma for a test phantom")
    sp.add_argument("--name", dest="phantom", help="|".join(sorted(PHANTOMS)))
    sp.add_argument("--n", type=int, default=150, help="nodes per axis")
    sp.add_argument("--out-prefix", default="./")
    sp.set_defaults(func=cmd_phantom)

    sp = sub.add_parser("forward", parents=[common], help="solve the photon density and pressure")
    sp.add_argument("--name", dest="phantom")
    sp.add_argument("--n", type=int, default=150)
    sp.add_argument("--sigma", help="sigma TPF file (overrides --name)")
    sp.add_argument("--mu", help="mu TPF file (default 0.1*sigma)")
    sp.add_argument("--D", help="diffusion TPF file (default 0.1*sigma)")
    sp.add_argument("--gamma", help="Grueneisen TPF file (default 1)")
    sp.add_argument("--g", type=float, action="append", help="boundary illumination (repeatable; default g1 and g2 from the config)")
    sp.add_argument("--out-prefix", default="./")
    sp.set_defaults(func=cmd_forward)

    sp = sub.add_parser("convergence", parents=[common], help="manufactured-solution convergence table")
    sp.add_argument("--levels", default="25,50,100,200", help="comma-separated interval counts")
    sp.add_argument("--out", help="CSV file (default stdout)")
    sp.set_defaults(func=cmd_convergence)

    sp = sub.add_parser("synthesize", parents=[common], help="generate noisy interior pressure data")
    sp.add_argument("--name", dest="phantom")
    sp.add_argument("--n-fine", dest="n_fine", type=int)
    sp.add_argument("--n-coarse", dest="n_coarse", type=int)
    sp.add_argument("--noise", type=float)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out-dir", default="data")
    sp.set_defaults(func=cmd_synthesize)

    sp = sub.add_parser("reconstruct", parents=[common], help="run the VIP reconstruction")
    sp.add_argument("--data-dir", help="directory written by 'synthesize'")
    sp.add_argument("--data1", help="G1 TPF file")
    sp.add_argument("--data2", help="G2 TPF file")
    sp.add_argument("--D", help="known diffusion TPF file")
    sp.add_argument("--gamma", help="Grueneisen TPF file")
    sp.add_argument("--truth-sigma", dest="truth_sigma")
    sp.add_argument("--truth-mu", dest="truth_mu")
    sp.add_argument("--max-iter", dest="max_iter", type=int)
    sp.add_argument("--out-dir", default="recon")
    sp.set_defaults(func=cmd_reconstruct)
    return p


# Flags that double as configuration keys.
_CONFIG_FLAGS = ("phantom", "n_fine", "n_coarse", "noise", "seed", "max_iter")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.dump_defaults:
        sys.stdout.write(RunConfig().dump())
        return 0
    if not args.command:
        parser.print_usage(sys.stderr)
        return 2
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    pkg_log = logging.getLogger("pat2p")
    pkg_log.addHandler(handler)
    pkg_log.setLevel(logging.WARNING - 10 * min(args.verbose + 1, 2))
    try:
        overrides = RunConfig.parse_assignments(args.set)
        for key in _CONFIG_FLAGS:
            value = getattr(args, key, None)
            if value is not None:
                overrides[key] = value
        cfg = RunConfig.layered(args.config, overrides)
        args.func(args, cfg)
    except (CliError, ConfigError, ValueError, RuntimeError, OSError) as exc:
        log.error("%s", exc)
        return 1
    finally:
        pkg_log.removeHandler(handler)
    return 0


if __name__ == "__main__":
    sys.exit(main())
