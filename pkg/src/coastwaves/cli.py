"""Command line entry point: ``coastwaves <stage> --config CFG``."""
from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .config import RunConfig, fixture_names, load_config, parse_grid, parse_pair
from .errors import CoastwavesError, ConfigError, NumericalError
from .export import dump_json, write_binary, write_csv, write_sidecar
from .pipeline import Pipeline, study
from .png import heatmap, physical_heatmap, write_png
from .transport import resonance_report

log = logging.getLogger("coastwaves")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_CHECK = 4
STAGES = ("run", "quantize", "field", "verify", "study", "resonances")
SLOPE_TARGET = 1.7


class Artifacts:
    """Files written by one invocation; removed again if the run fails."""

    def __init__(self, root: Path):
        self.root = root
        self.created_root = False
        self.paths: list[Path] = []

    def open(self) -> None:
        if not self.root.exists():
            self.root.mkdir(parents=True)
            self.created_root = True

    def path(self, name: str) -> Path:
        p = self.root / name
        self.paths.append(p)
        return p

    def discard(self) -> None:
        for p in self.paths:
            p.unlink(missing_ok=True)
        if self.created_root:
            try:
                self.root.rmdir()
            except OSError:
                pass


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="config file, or the name of a shipped fixture (e.g. example1)")
    common.add_argument("--out", help="output directory (overrides [output] directory)")
    common.add_argument("--grid", help="field grid as NxM")
    common.add_argument("--no-plots", action="store_true", help="skip PNG heatmaps")
    common.add_argument("--window-band", type=float, help="alpha^1 band excluded from the residual window")
    common.add_argument("--fourier-order", type=int, help="transport truncation order N")
    common.add_argument("--divisor-floor", type=float, help="smallest admissible |<omega, k>|")
    common.add_argument("--check", action="store_true", help="exit with status 4 if an acceptance check fails")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="coastwaves", description="Semiclassical coastal-trapped wave modes on a cylinder.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--list-fixtures", action="store_true", help="print the shipped fixture names and exit")
    sub = p.add_subparsers(dest="stage")
    sub.add_parser("run", parents=[common], help="full pipeline with exports and residual")
    sub.add_parser("quantize", parents=[common], help="torus, actions, frequencies and action defect")
    sub.add_parser("field", parents=[common], help="construct and export the field")
    sub.add_parser("verify", parents=[common], help="construct the field and measure its residual")
    sp = sub.add_parser("study", parents=[common], help="residual convergence along a nu-ray")
    sp.add_argument("--ray", default=None, help='ray direction "a,b" (default: the config nu)')
    sp.add_argument("--ray-count", type=int, default=3)
    sp.add_argument("--ray-start", type=int, default=1)
    rp = sub.add_parser("resonances", parents=[common], help="smallest small divisors <omega, k>")
    rp.add_argument("--omega", help='frequency vector "w1,w2" instead of a config')
    rp.add_argument("--order", type=int, default=None, help="lattice size |k|_inf <= order")
    return p


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    f, t, o = cfg.field, cfg.transport, cfg.output
    if args.grid:
        f = replace(f, grid=parse_grid(args.grid))
    if args.window_band is not None:
        if not 0 < args.window_band < np.pi / 2:
            raise ConfigError("--window-band must lie in (0, pi/2)")
        f = replace(f, window_band=args.window_band)
    if args.fourier_order is not None:
        if args.fourier_order < 1:
            raise ConfigError("--fourier-order must be at least 1")
        t = replace(t, N=args.fourier_order, grid=None if t.grid is None or t.grid <= 2 * args.fourier_order else t.grid)
    if args.divisor_floor is not None:
        t = replace(t, divisor_floor=args.divisor_floor)
    if args.no_plots:
        o = replace(o, plots=False)
    if args.out:
        o = replace(o, directory=args.out)
    return cfg.with_overrides(field=f, transport=t, output=o)


def _export_field(pipe: Pipeline, art: Artifacts, report: dict) -> None:
    cfg = pipe.cfg
    wf = pipe.wave_field()
    files = {}
    if "csv" in cfg.output.formats:
        files["csv"] = write_csv(wf, art.path("field.csv")).name
    if "bin" in cfg.output.formats:
        files["binary"] = write_binary(wf, art.path("field.bin")).name
    if cfg.output.plots:
        files["png"] = write_png(heatmap(wf.values.real), art.path("field_re.png")).name
        if cfg.output.physical:
            img = physical_heatmap(wf.us, wf.vs, wf.values.real)
            files["png_physical"] = write_png(img, art.path("field_physical.png")).name
    write_sidecar(wf, art.path("field.json"), files)
    report["field"] = {"grid": [int(wf.us.size), int(wf.vs.size)], "l2_norm": wf.l2_norm(), "max_abs": float(np.max(np.abs(wf.values)))}


def _stage(args, cfg: RunConfig, art: Artifacts) -> tuple[dict, bool]:
    """Run the requested stage; returns (report, checks_passed)."""
    pipe = Pipeline(cfg)
    report: dict = {"config": cfg.name, "stage": args.stage, "model": cfg.model.describe()}
    ok = True
    report["torus"] = pipe.torus_section()
    report["mode"] = pipe.mode_section()
    print(f"kappa = {pipe.torus.kappa!r}")
    print(f"1/h = {1.0 / pipe.h!r}")
    print(f"omega = ({pipe.chart.omega[0]:.6g}, {pipe.chart.omega[1]:.6g})")
    print(f"q/h = ({pipe.mode.q_over_h[0]:.6g}, {pipe.mode.q_over_h[1]:.6g})")
    if args.stage == "quantize":
        return report, ok
    report["transport"] = pipe.transport_section()
    tol = max(1e-7, 10 * pipe.transport.residual_bound)
    report["transport"]["check_passed"] = bool(pipe.transport_check <= tol)
    ok &= report["transport"]["check_passed"]
    print(f"lambda = {pipe.lam:.10g}")
    _export_field(pipe, art, report)
    if args.stage == "field":
        return report, ok
    rep = pipe.residual()
    report["residual"] = rep.as_dict()
    ok &= not rep.grid_limited
    print(f"relative residual = {rep.relative_residual:.6g} (h^2 = {pipe.h ** 2:.3g})")
    return report, ok


def _study(args, cfg: RunConfig) -> tuple[dict, bool]:
    direction = parse_pair(args.ray, "--ray") if args.ray else cfg.mode.nu
    slope, reports, excluded = study(cfg, direction, args.ray_count, start=args.ray_start)
    members = [{"nu": list(nu), **rep.as_dict()} for nu, rep in reports]
    for nu, rep in reports:
        print(f"nu = {nu}: h = {rep.h:.6g}, relative residual = {rep.relative_residual:.6g}")
    print(f"slope = {slope:.4f}")
    report = {
        "config": cfg.name,
        "stage": "study",
        "direction": list(direction),
        "members": members,
        "excluded_grid_limited": [list(nu) for nu in excluded],
        "slope": slope,
        "target": SLOPE_TARGET,
        "passed": bool(slope >= SLOPE_TARGET),
    }
    return report, report["passed"]


def _resonances(args, cfg: Optional[RunConfig]) -> tuple[dict, bool]:
    if args.omega:
        try:
            w = tuple(float(x) for x in args.omega.split(","))
        except ValueError:
            raise ConfigError(f"--omega needs two numbers (got {args.omega!r})") from None
        if len(w) != 2:
            raise ConfigError("--omega needs two numbers")
        N = args.order or (cfg.transport.N if cfg else 16)
    else:
        pipe = Pipeline(cfg)
        w = pipe.chart.omega
        N = args.order or cfg.transport.N
    rep = resonance_report(w, N)
    for k, d in rep.entries:
        print(f"k = ({k[0]:+d}, {k[1]:+d})  |<omega,k>| = {d:.6e}")
    print("RESONANT" if rep.resonant else f"C1 = {rep.C1:.4g}, C2 = {rep.C2:.4g}")
    report = {"stage": "resonances", "omega": list(w), "N": N, **rep.as_dict()}
    return report, not rep.resonant


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.list_fixtures:
        print("\n".join(fixture_names()))
        return EXIT_OK
    if not args.stage:
        parser.print_help()
        return EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    art: Optional[Artifacts] = None
    try:
        cfg = None
        if args.config:
            cfg = _apply_overrides(load_config(args.config), args)
        elif not (args.stage == "resonances" and args.omega):
            raise ConfigError("--config is required")
        out = Path(args.out or (cfg.output.directory if cfg else "out"))
        art = Artifacts(out)
        art.open()
        started = time.perf_counter()
        if args.stage == "study":
            report, ok = _study(args, cfg)
        elif args.stage == "resonances":
            report, ok = _resonances(args, cfg)
        else:
            report, ok = _stage(args, cfg, art)
        report["checks_passed"] = bool(ok)
        dump_json(report, art.path("report.json"))
        dump_json({"elapsed_seconds": time.perf_counter() - started, "finished": time.strftime("%Y-%m-%dT%H:%M:%S%z")}, art.path("timing.json"))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        if art:
            art.discard()
        return EXIT_CONFIG
    except (NumericalError, CoastwavesError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        if art:
            art.discard()
        return EXIT_NUMERICAL
    except BaseException:
        if art:
            art.discard()
        raise
    print(f"artifacts in {art.root}")
    if args.check and not ok:
        print("acceptance check failed", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
