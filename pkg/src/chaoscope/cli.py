"""Command-line front door: catalog listing, Lyapunov runs, chaotic-regime
sampling, bifurcation scans, trajectory export, and the HTTP service.

Every file-producing command writes a manifest next to its output with the
fully resolved configuration and seed; re-running from the manifest
reproduces the output byte for byte. Exit codes: 0 success, 2 usage error,
3 indeterminate result, 4 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .integrate import IntegrationConfig
from .jobs import JobValidationError
from .lyapunov import LyapunovConfig, spectrum_with_doubling
from .models import load_quadratic3_coeffs, make_quadratic3
from .sampler import MHConfig, batch_csv, batch_jsonl, sample_batch
from .scan import BifurcationConfig, bifurcation_scan, scan_csv, scan_json, export_trajectory
from .systems import (
    BoxCoord,
    SamplePoint,
    SearchBox,
    catalog,
    divergence_at,
    get_system,
    list_systems,
)

USAGE_ERROR = 2
INDETERMINATE_EXIT = 3
RUNTIME_ERROR = 4


class UsageError(Exception):
    pass


def _system_from_args(args) -> "SystemDefinition":
    try:
        system = get_system(args.system)
    except KeyError as exc:
        raise UsageError(str(exc)) from None
    coeffs_file = getattr(args, "coeffs_file", None)
    if coeffs_file:
        if system.id != "quadratic3":
            raise UsageError("--coeffs-file applies only to the quadratic3 system")
        system = make_quadratic3(load_quadratic3_coeffs(coeffs_file))
    return system


def _apply_sets(system, sets: list[str]):
    params = system.default_params()
    state = system.default_initial_state()
    for item in sets or []:
        if "=" not in item:
            raise UsageError(f"--set expects name=value, got {item!r}")
        name, _, raw = item.partition("=")
        try:
            value = float(raw)
        except ValueError:
            raise UsageError(f"value for {name!r} is not a number: {raw!r}") from None
        try:
            if name.startswith("ic."):
                state[system.state_index(name[3:])] = value
            else:
                params[system.param_index(name)] = value
        except KeyError as exc:
            raise UsageError(str(exc)) from None
    return params, state


def _parse_box(system, specs: list[str]) -> SearchBox:
    if not specs:
        raise UsageError("at least one --box name=lo:hi coordinate is required")
    coords = []
    for item in specs:
        if "=" not in item or ":" not in item.split("=", 1)[1]:
            raise UsageError(f"--box expects name=lo:hi, got {item!r}")
        name, _, rng = item.partition("=")
        lo_s, _, hi_s = rng.partition(":")
        try:
            lo, hi = float(lo_s), float(hi_s)
        except ValueError:
            raise UsageError(f"box bounds must be numbers: {item!r}") from None
        kind = "parameter"
        if name.startswith("ic."):
            name, kind = name[3:], "initial_condition"
        try:
            coords.append(BoxCoord(name, lo, hi, kind))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    try:
        box = SearchBox(tuple(coords))
        box.validate_for(system)
    except (ValueError, KeyError) as exc:
        raise UsageError(str(exc)) from None
    return box


def _pick(value, manifest_cfg, key, fallback):
    """Resolution order: explicit flag, manifest entry, built-in default."""
    if value is not None:
        return value
    if manifest_cfg and key in manifest_cfg:
        return manifest_cfg[key]
    return fallback


def _load_manifest(path) -> dict:
    if path is None:
        return {}
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return doc.get("config", {})


def _write_manifest(out_path: str, command: str, config: dict, seed, timings: dict) -> None:
    doc = {
        "tool": "chaoscope",
        "version": __version__,
        "command": command,
        "config": config,
        "seed": seed,
        "timings": timings,
    }
    Path(str(out_path) + ".manifest.json").write_text(
        json.dumps(doc, indent=2) + "\n", encoding="utf-8"
    )


# -- commands ---------------------------------------------------------------

def cmd_systems(args) -> int:
    rows = catalog(include_hidden=args.all)
    if args.json:
        print(json.dumps(rows, indent=2))
        return 0
    for row in rows:
        print(f"{row['id']}  (dim {row['dim']}, states: {', '.join(row['state_names'])}"
              f"{', time-dependent' if row['time_dependent'] else ''})")
        for p in row["params"]:
            print(f"    {p['name']} = {p['default']} [{p['units']}]")
    return 0


def cmd_lyapunov(args) -> int:
    system = _system_from_args(args)
    params, state = _apply_sets(system, args.set)
    sample = SamplePoint.of(system, params, state)
    result = spectrum_with_doubling(
        system,
        sample,
        args.T0,
        IntegrationConfig(dt=args.dt, t0=args.t0),
        renorm_every=args.renorm_every,
        max_doublings=args.max_doublings,
        eps_zero=args.eps_zero,
        transient_frac=args.transient,
    )
    print(result.to_json())
    return 0 if result.converged else INDETERMINATE_EXIT


def cmd_sample(args) -> int:
    mcfg = _load_manifest(args.from_manifest)
    system_id = _pick(args.system, mcfg, "system", None)
    if system_id is None:
        raise UsageError("--system is required")
    args.system = system_id
    system = _system_from_args(args)
    box_specs = args.box or mcfg.get("box_specs")
    box = _parse_box(system, box_specs)
    k = int(_pick(args.k, mcfg, "k", 0))
    if k < 1:
        raise UsageError(f"--k must be a positive integer, got {k}")
    cfg = MHConfig(
        steps=int(_pick(args.steps, mcfg, "steps", 1000)),
        alpha_max=float(_pick(args.alpha_max, mcfg, "alpha_max", 20.0)),
        proposal_scale=float(_pick(args.proposal_scale, mcfg, "proposal_scale", 0.08)),
        seed=int(_pick(args.seed, mcfg, "seed", 0)),
        phase1_steps=int(_pick(args.phase1_steps, mcfg, "phase1_steps", 300)),
    )
    lcfg = LyapunovConfig(
        t0_horizon=float(_pick(args.T0, mcfg, "T0", 50.0)),
        dt=float(_pick(args.dt, mcfg, "dt", 0.02)),
        renorm_every=int(_pick(args.renorm_every, mcfg, "renorm_every", 10)),
        max_doublings=int(_pick(args.max_doublings, mcfg, "max_doublings", 3)),
        eps_zero=float(_pick(args.eps_zero, mcfg, "eps_zero", 1e-3)),
        transient_frac=float(_pick(args.transient, mcfg, "transient", 0.1)),
    )
    workers = int(args.workers)
    t_start = time.monotonic()
    records = sample_batch(system, box, k, cfg, lcfg, workers=workers)
    elapsed = time.monotonic() - t_start
    out = Path(args.out)
    out.write_text(batch_csv(box, records), encoding="utf-8")
    if args.jsonl:
        Path(str(out) + ".jsonl").write_text(batch_jsonl(box, records), encoding="utf-8")
    config = {
        "system": system.id,
        "box_specs": box_specs,
        "k": k,
        "steps": cfg.steps,
        "alpha_max": cfg.alpha_max,
        "proposal_scale": cfg.proposal_scale,
        "seed": cfg.seed,
        "phase1_steps": cfg.phase1_steps,
        "T0": lcfg.t0_horizon,
        "dt": lcfg.dt,
        "renorm_every": lcfg.renorm_every,
        "max_doublings": lcfg.max_doublings,
        "eps_zero": lcfg.eps_zero,
        "transient": lcfg.transient_frac,
    }
    _write_manifest(args.out, "sample", config, cfg.seed, {"seconds": elapsed})
    counts = {"success": 0, "phase1_failed": 0, "phase2_failed": 0}
    for rec in records:
        counts[rec.phase] += 1
    print(f"wrote {args.out}: k={k} success={counts['success']} "
          f"phase1_failed={counts['phase1_failed']} phase2_failed={counts['phase2_failed']}")
    return 0


def cmd_bifurcate(args) -> int:
    mcfg = _load_manifest(args.from_manifest)
    system_id = _pick(args.system, mcfg, "system", None)
    if system_id is None:
        raise UsageError("--system is required")
    args.system = system_id
    system = _system_from_args(args)
    param = _pick(args.param, mcfg, "param", None)
    if param is None:
        raise UsageError("--param is required")
    rng_spec = _pick(args.range, mcfg, "range", None)
    if rng_spec is None:
        raise UsageError("--range lo:hi is required")
    lo_s, _, hi_s = str(rng_spec).partition(":")
    try:
        lo, hi = float(lo_s), float(hi_s)
    except ValueError:
        raise UsageError(f"--range expects lo:hi, got {rng_spec!r}") from None
    try:
        system.param_index(param)
    except KeyError as exc:
        raise UsageError(str(exc)) from None
    sets = args.set or mcfg.get("set") or []
    params, state = _apply_sets(system, sets)
    base = SamplePoint.of(system, params, state)
    observables = tuple(args.observables.split(",")) if args.observables else ()
    try:
        cfg = BifurcationConfig(
            param_name=param,
            lo=lo,
            hi=hi,
            n_param_points=int(_pick(args.points, mcfg, "points", 100)),
            t_total=float(_pick(args.t_total, mcfg, "t_total", 7500.0)),
            window_start=float(_pick(args.window, mcfg, "window", 7000.0)),
            window_samples=int(_pick(args.window_samples, mcfg, "window_samples", 500)),
            observables=observables or tuple(mcfg.get("observables", ())),
        )
        for name in cfg.observables:
            system.state_index(name)
    except (ValueError, KeyError) as exc:
        raise UsageError(str(exc)) from None
    int_cfg = IntegrationConfig(dt=float(_pick(args.dt, mcfg, "dt", 0.001)))
    t_start = time.monotonic()
    result = bifurcation_scan(system, base, cfg, int_cfg, workers=int(args.workers))
    elapsed = time.monotonic() - t_start
    text = scan_json(result) if args.json else scan_csv(result)
    Path(args.out).write_text(text, encoding="utf-8")
    config = {
        "system": system.id, "param": param, "range": f"{lo}:{hi}",
        "points": cfg.n_param_points, "t_total": cfg.t_total, "window": cfg.window_start,
        "window_samples": cfg.window_samples, "observables": list(cfg.observables),
        "dt": int_cfg.dt, "set": list(sets),
    }
    _write_manifest(args.out, "bifurcate", config, None, {"seconds": elapsed})
    print(f"wrote {args.out}: {cfg.n_param_points} parameter values x {len(result.observables)} observables")
    return 0


def cmd_trajectory(args) -> int:
    system = _system_from_args(args)
    params, state = _apply_sets(system, args.set)
    sample = SamplePoint.of(system, params, state)
    int_cfg = IntegrationConfig(dt=args.dt, blowup_cap=args.blowup_cap)
    t_start = time.monotonic()
    text = export_trajectory(system, sample, args.t_end, int_cfg, stride=args.stride)
    elapsed = time.monotonic() - t_start
    Path(args.out).write_text(text, encoding="utf-8")
    config = {
        "system": system.id, "t_end": args.t_end, "dt": args.dt,
        "stride": args.stride, "set": list(args.set or []),
    }
    _write_manifest(args.out, "trajectory", config, None, {"seconds": elapsed})
    print(f"wrote {args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    data_dir = Path(args.data_dir)
    try:
        data_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot use data dir {args.data_dir}: {exc}", file=sys.stderr)
        return RUNTIME_ERROR
    app = create_app(str(data_dir), workers=args.workers, ui_dist=args.ui_dist)
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    except (OSError, SystemExit) as exc:
        print(f"error: server failed to start: {exc}", file=sys.stderr)
        return RUNTIME_ERROR
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chaoscope",
        description="Locate and characterize chaotic regimes of ODE systems.",
    )
    parser.add_argument("--version", action="version", version=f"chaoscope {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("systems", help="list built-in systems")
    p.add_argument("--json", action="store_true")
    p.add_argument("--all", action="store_true", help="include hidden validation systems")
    p.set_defaults(fn=cmd_systems)

    p = sub.add_parser("lyapunov", help="Lyapunov spectrum with horizon doubling")
    p.add_argument("--system", required=True)
    p.add_argument("--set", action="append", metavar="NAME=VALUE",
                   help="override a parameter, or an initial condition via ic.<state>")
    p.add_argument("--coeffs-file", help="quadratic3 coefficient JSON (array of 30)")
    p.add_argument("--t0", type=float, default=0.0, help="integration start time")
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--T0", type=float, default=100.0, help="first horizon length")
    p.add_argument("--max-doublings", type=int, default=6)
    p.add_argument("--renorm-every", type=int, default=10)
    p.add_argument("--eps-zero", type=float, default=1e-3)
    p.add_argument("--transient", type=float, default=0.1)
    p.set_defaults(fn=cmd_lyapunov)

    p = sub.add_parser("sample", help="sample the chaotic regime over a search box")
    p.add_argument("--system")
    p.add_argument("--box", action="append", metavar="NAME=LO:HI",
                   help="search range; ic.<state> for initial conditions")
    p.add_argument("--coeffs-file")
    p.add_argument("--k", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--phase1-steps", type=int)
    p.add_argument("--alpha-max", type=float)
    p.add_argument("--proposal-scale", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--T0", type=float, help="Lyapunov first horizon")
    p.add_argument("--dt", type=float)
    p.add_argument("--max-doublings", type=int)
    p.add_argument("--renorm-every", type=int)
    p.add_argument("--eps-zero", type=float)
    p.add_argument("--transient", type=float)
    p.add_argument("--jsonl", action="store_true", help="also write a JSON lines file")
    p.add_argument("--from-manifest", help="replay configuration from a manifest file")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_sample)

    p = sub.add_parser("bifurcate", help="one-parameter bifurcation scan")
    p.add_argument("--system")
    p.add_argument("--param")
    p.add_argument("--range", metavar="LO:HI")
    p.add_argument("--points", type=int)
    p.add_argument("--t-total", type=float)
    p.add_argument("--window", type=float, help="window start time")
    p.add_argument("--window-samples", type=int)
    p.add_argument("--observables", help="comma-separated state names")
    p.add_argument("--set", action="append", metavar="NAME=VALUE")
    p.add_argument("--coeffs-file")
    p.add_argument("--dt", type=float)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--json", action="store_true", help="write JSON instead of CSV")
    p.add_argument("--from-manifest")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_bifurcate)

    p = sub.add_parser("trajectory", help="export one trajectory as CSV")
    p.add_argument("--system", required=True)
    p.add_argument("--set", action="append", metavar="NAME=VALUE")
    p.add_argument("--coeffs-file")
    p.add_argument("--t-end", type=float, required=True)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--blowup-cap", type=float, default=1e8)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_trajectory)

    p = sub.add_parser("serve", help="run the HTTP job service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8321)
    p.add_argument("--data-dir", default="./chaoscope-data")
    p.add_argument("--workers", type=int, default=2)
    p.add_argument("--ui-dist", help="directory of built front-end assets to serve at /")
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except JobValidationError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (ValueError, KeyError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
