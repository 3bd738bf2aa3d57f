"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
``WTE_REACH_OUT`` overrides the output directory of ``solve``.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

from . import kernels
from .errors import ConfigError, FieldFormatError, NumericalInstabilityError, WteReachError
from .grid import GridSpec
from .io import export_csv, load_field, save_field
from .model import (Adversarial, Constant, DisturbanceProfile, PeriodicJumps, Stepwise, WteParams,
                    profile_from_dict, profile_to_dict, scenario)
from .reach import brs_volume, compare_fields, extract_slice
from .solver import SolveConfig, default_threads, solve
from .synth import SnapshotSeries, simulate

log = logging.getLogger("wte_reach")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
DEFAULT_GRID = 51
BIG_GRID = 101
OUT_ENV = "WTE_REACH_OUT"


@dataclass
class RunConfig:
    params: WteParams
    grid: GridSpec
    solve: SolveConfig
    scenario: Optional[int] = None
    profiles: tuple = ()
    initial_states: tuple = ()
    output_dir: str = "runs/latest"

    def to_dict(self) -> dict:
        s = asdict(self.solve)
        return {
            "scenario": self.scenario,
            "params": self.params.to_dict(),
            "grid": {"counts": list(self.grid.counts)},
            "solve": s,
            "profiles": [profile_to_dict(p) for p in self.profiles],
            "initial_states": [list(z) for z in self.initial_states],
            "output_dir": self.output_dir,
        }


_SOLVE_KEYS = {"horizon", "cfl_safety", "max_steps", "snapshot_stride", "steady_tol", "threads",
               "backend", "auto_snapshots"}
_TOP_KEYS = {"scenario", "target", "params", "grid", "solve", "profiles", "initial_states", "output_dir"}


def build_run_config(data: dict, *, scenario_id: Optional[int] = None, grid_n: Optional[int] = None,
                     target: Optional[str] = None, threads: Optional[int] = None,
                     output_dir: Optional[str] = None) -> RunConfig:
    """Merge preset, config-file data and flag values (later sources win)."""
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    sid = scenario_id if scenario_id is not None else data.get("scenario")
    tgt = target or data.get("target", "wide")
    base = WteParams()
    profiles: tuple = ()
    states: tuple = ()
    if sid is not None:
        sc = scenario(int(sid), base, target=tgt)
        base, profiles, states = sc.params, sc.profiles, sc.initial_states
    pdict = base.to_dict()
    pdict.update(data.get("params", {}))
    params = WteParams.from_dict(pdict)

    g = data.get("grid", {})
    if grid_n is not None:
        counts = (grid_n,) * 3
    elif "counts" in g:
        counts = tuple(g["counts"])
    else:
        counts = (g.get("n", DEFAULT_GRID),) * 3
    try:
        grid = GridSpec(params.domain_lo, params.domain_hi, counts)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    sdict = dict(data.get("solve", {}))
    bad = set(sdict) - _SOLVE_KEYS
    if bad:
        raise ConfigError(f"unknown solve keys: {sorted(bad)}")
    sdict.setdefault("horizon", params.horizon)
    if threads is not None:
        sdict["threads"] = threads
    solve_cfg = SolveConfig(**sdict)

    if "profiles" in data:
        profiles = tuple(profile_from_dict(p) for p in data["profiles"])
    if "initial_states" in data:
        states = tuple(tuple(float(v) for v in z) for z in data["initial_states"])
    out = os.environ.get(OUT_ENV) or output_dir or data.get("output_dir") or "runs/latest"
    return RunConfig(params, grid, solve_cfg, None if sid is None else int(sid), profiles, states, out)


def load_run(run_dir: Path) -> tuple[RunConfig, SnapshotSeries]:
    meta = json.loads((run_dir / "run.json").read_text())
    data = {k: meta[k] for k in ("params", "grid", "solve", "profiles", "initial_states") if k in meta}
    cfg = build_run_config(data, output_dir=str(run_dir))
    snaps = []
    snap_dir = run_dir / "snapshots"
    for f in sorted(snap_dir.glob("*.hjvf")):
        fld = load_field(f)
        snaps.append((fld.time_label, fld))
    if not snaps:
        snaps = [(0.0, load_field(run_dir / "value.hjvf"))]
    return cfg, SnapshotSeries(snaps)


def parse_profile(text: str) -> DisturbanceProfile:
    """``constant:25``, ``stepwise:27.5,25,22.5``, ``periodic`` or ``adversarial``."""
    kind, _, rest = text.partition(":")
    try:
        if kind == "constant":
            return Constant(float(rest))
        if kind == "stepwise":
            return Stepwise.equal_intervals([float(v) for v in rest.split(",")], 30.0)
        if kind == "periodic":
            return scenario(3).profiles[0]
        if kind == "adversarial":
            return Adversarial()
    except ValueError as exc:
        raise ConfigError(f"bad profile {text!r}: {exc}") from exc
    raise ConfigError(f"unknown profile {text!r}")


# --- subcommands ------------------------------------------------------------

def _progress_printer(every: int):
    def hook(s, n, change):
        if s % every == 0 or s == n:
            print(f"\rstep {s}/{n}  max|dV|={change:.3e}", end="" if s < n else "\n",
                  file=sys.stderr, flush=True)
    return hook


def cmd_solve(args) -> int:
    data = json.loads(Path(args.config).read_text()) if args.config else {}
    cfg = build_run_config(data, scenario_id=args.scenario, grid_n=args.grid, target=args.target,
                           threads=args.threads, output_dir=args.out)
    if args.horizon is not None:
        cfg.solve = replace(cfg.solve, horizon=args.horizon)
        cfg.params = replace(cfg.params, horizon=args.horizon)
    if max(cfg.grid.counts) >= BIG_GRID:
        log.warning("grid %s is large: expect a long solve (the reference run took ~1.8 h at 100^3)",
                    cfg.grid.counts)
    out = Path(cfg.output_dir)
    (out / "snapshots").mkdir(parents=True, exist_ok=True)
    hook = None if args.quiet else _progress_printer(500)
    t0 = time.perf_counter()
    result = solve(cfg.params, cfg.grid, cfg.solve, progress=hook)
    runtime = time.perf_counter() - t0
    save_field(result.final_field, out / "value.hjvf")
    for old in (out / "snapshots").glob("*.hjvf"):
        old.unlink()
    for i, (_, fld) in enumerate(result.snapshots):
        save_field(fld, out / "snapshots" / f"snap_{i:05d}.hjvf")
    (out / "run.json").write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")
    vol, total = brs_volume(result.final_field)
    summary = {
        "grid": "x".join(str(n) for n in cfg.grid.counts),
        "eta_min": cfg.params.eta_min,
        "eta_max": cfg.params.eta_max,
        "horizon": cfg.solve.horizon,
        "dt": result.dt_used,
        "steps": result.steps_taken,
        "runtime_s": round(runtime, 3),
        "brs_volume": vol,
        "domain_volume": total,
        "brs_fraction": vol / total,
        "backend": kernels.BACKEND,
    }
    lines = [f"{k}: {v}" for k, v in summary.items()]
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK


def cmd_slice(args) -> int:
    fld = load_field(args.field)
    sl = extract_slice(fld, args.axis, args.level)
    export_csv(sl, args.out)
    print(f"wrote {sl.values.size} rows to {args.out}; members: {int(sl.mask.sum())}")
    return EXIT_OK


def cmd_volume(args) -> int:
    vol, total = brs_volume(load_field(args.field))
    print(f"brs_volume: {vol:.9g}\ndomain_volume: {total:.9g}\nfraction: {vol / total:.9g}")
    return EXIT_OK


def cmd_compare(args) -> int:
    rep = compare_fields(load_field(args.a), load_field(args.b))
    if args.out:
        export_csv(rep, args.out)
    print(f"dominance(a<=b): {rep.dominance:.9g}\nvolume_a: {rep.volume_a:.9g}\n"
          f"volume_b: {rep.volume_b:.9g}\nvolume_ratio(b/a): {rep.volume_ratio:.9g}")
    return EXIT_OK


def _profiles_for(cfg: RunConfig, args) -> list[DisturbanceProfile]:
    if args.profile:
        return [parse_profile(args.profile)]
    if cfg.profiles:
        return list(cfg.profiles)
    return [Constant(0.5 * (cfg.params.eta_min + cfg.params.eta_max))]


def cmd_simulate(args) -> int:
    cfg, series = load_run(Path(args.run))
    profiles = _profiles_for(cfg, args)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    for i, prof in enumerate(profiles):
        traj = simulate(cfg.params, series, args.z0, prof, dt_sim=args.dt, stop_on_entry=not args.full)
        path = out if len(profiles) == 1 else out.with_name(f"{out.stem}_{i + 1}{out.suffix}")
        export_csv(traj, path)
        et = "none" if traj.entry_time is None else f"{traj.entry_time:.4g}"
        print(f"profile {i + 1}: entry_time={et} feasible={traj.feasible} -> {path}")
    return EXIT_OK


def cmd_entry_times(args) -> int:
    cfg, series = load_run(Path(args.run))
    states = [tuple(z) for z in args.state] if args.state else list(cfg.initial_states)
    if not states:
        raise ConfigError("no initial states given (use --state x K E)")
    prof = _profiles_for(cfg, args)[0]
    rows = []
    for z in states:
        traj = simulate(cfg.params, series, z, prof, dt_sim=args.dt)
        rows.append((z, traj.entry_time, traj.feasible))
        et = "none" if traj.entry_time is None else f"{traj.entry_time:.4g}"
        print(f"z0={z}: entry_time={et} feasible={'Yes' if traj.feasible else 'No'}")
    if args.out:
        import csv

        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x0_tons", "K0_capacity", "E0_energy", "entry_time_years", "feasible"])
            for z, et, ok in rows:
                w.writerow([*(f"{v:.9g}" for v in z), "" if et is None else f"{et:.9g}", int(ok)])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wte-reach", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="compute the value function and write HJVF files")
    s.add_argument("--scenario", type=int, choices=(1, 2, 3))
    s.add_argument("--config", help="JSON run configuration")
    s.add_argument("--grid", type=int, help=f"nodes per axis (default {DEFAULT_GRID})")
    s.add_argument("--target", choices=("wide", "strict"),
                   help="target preset: waste threshold 15 (wide, default) or 5 (strict)")
    s.add_argument("--horizon", type=float)
    s.add_argument("--threads", type=int, default=None, help="default: available cores")
    s.add_argument("--out", help="output directory")
    s.add_argument("--quiet", action="store_true")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("slice", help="export a planar slice of a field as CSV")
    s.add_argument("--field", required=True)
    s.add_argument("--axis", default="E", choices=("x", "K", "E"))
    s.add_argument("--level", type=float, required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_slice)

    s = sub.add_parser("volume", help="volume of the zero sublevel set")
    s.add_argument("--field", required=True)
    s.set_defaults(func=cmd_volume)

    s = sub.add_parser("compare", help="node-wise dominance and volume ratio of two fields")
    s.add_argument("--a", required=True)
    s.add_argument("--b", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_compare)

    for name, func in (("simulate", cmd_simulate), ("entry-times", cmd_entry_times)):
        s = sub.add_parser(name, help="closed-loop simulation from a solved run directory")
        s.add_argument("--run", required=True, help="directory written by `solve`")
        s.add_argument("--profile", help="constant:V | stepwise:a,b,c | periodic | adversarial")
        s.add_argument("--dt", type=float, default=None, help="integration step (default T/3000)")
        if name == "simulate":
            s.add_argument("--z0", type=float, nargs=3, required=True, metavar=("X", "K", "E"))
            s.add_argument("--full", action="store_true", help="keep integrating after target entry")
            s.add_argument("--out", required=True)
        else:
            s.add_argument("--state", type=float, nargs=3, action="append", metavar=("X", "K", "E"))
            s.add_argument("--out")
        s.set_defaults(func=func)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except NumericalInstabilityError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, FieldFormatError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (WteReachError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
