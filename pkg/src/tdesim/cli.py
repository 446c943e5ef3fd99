"""Command-line experiment runner.

One subcommand per experiment: ``step`` (single-pair response), ``sweep``
(charge and spike count vs delta t), ``montecarlo`` (mismatch comparison of
the two circuit variants), ``optical-flow`` (direction-selectivity task on a
synthetic moving texture) and ``gen-events`` (stimulus file generation).
Every run is reproducible: all randomness flows from one seed through named
substreams, and output data files are byte-identical across reruns and
thread counts. Data is written as CSV/JSON with matplotlib figures rendered
alongside.

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Any, Sequence

from .config import (ConfigError, apply_overrides, load_config,
                     mismatch_specs, nominal_params, texture_config,
                     variant_from_name)
from .core import TdeVariant, charge, process_events, sample_trace
from .events import add_jitter, generate_texture_events, read_events, write_events
from .mismatch import mc_charge_sweep, validate_spec_pair, write_mc_csv, write_summary_json
from .network import (build_random_network, network_to_json,
                      orientation_fractions, run_network, write_raster_csv)
from .rng import derive_seed

__all__ = ["main"]


def _parse_dotted_overrides(tokens: Sequence[str]) -> list[tuple[str, str]]:
    """Leftover ``--a.b value`` / ``--a.b=value`` tokens as override pairs.

    Any config leaf is addressable: nested fields by their dotted path,
    top-level fields by their plain name.
    """
    pairs: list[tuple[str, str]] = []
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--"):
            raise ConfigError(f"unrecognized argument {tok!r}")
        body = tok[2:]
        if "=" in body:
            name, raw = body.split("=", 1)
            i += 1
        else:
            name = body
            if i + 1 >= len(tokens):
                raise ConfigError(f"missing value for override {tok!r}")
            raw = tokens[i + 1]
            i += 2
        pairs.append((name, raw))
    return pairs


def _resolve_threads(cfg: dict[str, Any]) -> int:
    n = int(cfg["threads"])
    if n < 0:
        raise ConfigError("threads must be >= 0")
    return n if n > 0 else (os.cpu_count() or 1)


def _fwrite_csv(path: Path, header: str, rows) -> None:
    # repr() round-trips floats exactly, so re-parsed output equals memory
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(repr(v) if isinstance(v, float) else str(v)
                              for v in row) + "\n")


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_step(cfg: dict[str, Any], out: Path) -> None:
    params = nominal_params(cfg)
    variant = variant_from_name(cfg["variant"])
    delta_t = float(cfg["step"]["delta_t_ms"]) * 1e-3
    if delta_t <= 0:
        raise ConfigError("step.delta_t_ms must be > 0")
    t_end = max(float(cfg["step"]["t_end_ms"]) * 1e-3,
                delta_t + 20 * params.tau_trg)
    sample_dt = params.tau_trg / 100.0
    times, fac, epsc, v_mem, spikes = sample_trace(
        params, variant, [0.0], [delta_t], t_end, sample_dt)
    _fwrite_csv(out / "step_trace.csv", "t_s,fac,epsc,v_mem",
                zip(times.tolist(), fac.tolist(), epsc.tolist(),
                    v_mem.tolist()))
    _fwrite_csv(out / "step_spikes.csv", "spike_time_s",
                ((t,) for t in spikes))
    if cfg["figures"]:
        from . import plots
        plots.save_step_figure(out / "step.png", times, fac, epsc, v_mem,
                               list(spikes), delta_t)
    print(f"step: delta_t={delta_t * 1e3:g} ms, {len(spikes)} output spikes")


def cmd_sweep(cfg: dict[str, Any], out: Path) -> None:
    params = nominal_params(cfg)
    delta_ts = [d * 1e-3 for d in cfg["delta_ts_ms"]]
    if not delta_ts or any(d <= 0 for d in delta_ts):
        raise ConfigError("delta_ts_ms must be non-empty and all > 0")
    rows = []
    by_variant: dict[str, tuple[list[float], list[int]]] = {}
    for variant in (TdeVariant.OLD_SINGLE_BRANCH, TdeVariant.NEW_DUAL_DPI):
        charges, counts = [], []
        for dt in delta_ts:
            q = charge(params, variant, dt)
            n = len(process_events(params, variant, [0.0], [dt],
                                   dt + 20 * params.tau_trg))
            charges.append(q)
            counts.append(n)
            rows.append((variant.value, dt, q, n))
        by_variant[variant.value] = (charges, counts)
    _fwrite_csv(out / "sweep.csv", "variant,delta_t_s,charge,spike_count", rows)
    if cfg["figures"]:
        from . import plots
        plots.save_sweep_figure(out / "sweep.png", delta_ts, by_variant)
    print(f"sweep: {len(delta_ts)} delta_t points, both variants")


def cmd_montecarlo(cfg: dict[str, Any], out: Path) -> None:
    params = nominal_params(cfg)
    old_spec, new_spec = mismatch_specs(cfg)
    validate_spec_pair(old_spec, new_spec)
    delta_ts = [d * 1e-3 for d in cfg["delta_ts_ms"]]
    n_trials = int(cfg["n_trials"])
    seed = int(cfg["seed"])
    old = mc_charge_sweep(params, old_spec, delta_ts, n_trials,
                          derive_seed(seed, "mismatch-old"))
    new = mc_charge_sweep(params, new_spec, delta_ts, n_trials,
                          derive_seed(seed, "mismatch-new"))
    write_mc_csv(old, out / "mc_old.csv")
    write_mc_csv(new, out / "mc_new.csv")
    write_summary_json(old, new, out / "mc_summary.json")
    if cfg["figures"]:
        from . import plots
        plots.save_mc_figures(out / "montecarlo_hist.png",
                              out / "montecarlo_errorbar.png", old, new)
    from .mismatch import cv_reduction
    print(f"montecarlo: {n_trials} trials/variant, "
          f"cv reduction {cv_reduction(old, new):.1f}%")


def _stimulus(cfg: dict[str, Any]):
    seed = int(cfg["seed"])
    tex = texture_config(cfg, derive_seed(seed, "stimulus"))
    events = generate_texture_events(tex)
    events = add_jitter(events, tex.jitter_sigma, derive_seed(seed, "jitter"))
    return tex, events


def cmd_optical_flow(cfg: dict[str, Any], out: Path,
                     events_path: str | None) -> None:
    params = nominal_params(cfg)
    variant = variant_from_name(cfg["variant"])
    seed = int(cfg["seed"])
    tex = texture_config(cfg, derive_seed(seed, "stimulus"))
    if events_path is not None:
        events = read_events(events_path)
    else:
        events = generate_texture_events(tex)
        events = add_jitter(events, tex.jitter_sigma,
                            derive_seed(seed, "jitter"))
    network = build_random_network((tex.width, tex.height),
                                   int(cfg["network"]["n_units"]), params,
                                   derive_seed(seed, "network"))
    raster = run_network(network, events, variant,
                         n_threads=_resolve_threads(cfg))
    fractions = orientation_fractions(raster)
    network_to_json(network, out / "network.json")
    write_raster_csv(raster, out / "raster.csv")
    _write_json(out / "fractions.json", {
        "fractions": {o.value: fractions[o] for o in fractions},
        "total_spikes": raster.total_spikes(),
        "seed": seed,
        "variant": variant.value,
    })
    if cfg["figures"]:
        from . import plots
        plots.save_optical_flow_figures(out / "raster.png",
                                        out / "fractions.png",
                                        raster, fractions)
    ordered = ", ".join(f"{o.value}={fractions[o]:.3f}" for o in fractions)
    print(f"optical-flow: {raster.total_spikes()} spikes; {ordered}")


def cmd_gen_events(cfg: dict[str, Any], out: Path) -> None:
    fmt = cfg["gen_events"]["format"]
    if fmt not in ("csv", "evt"):
        raise ConfigError(f"gen_events.format must be 'csv' or 'evt', got {fmt!r}")
    tex, events = _stimulus(cfg)
    path = out / f"events.{fmt}"
    write_events(events, path, fmt=fmt)
    if cfg["figures"]:
        from . import plots
        plots.save_events_figure(out / "events.png", events,
                                 (tex.width, tex.height))
    print(f"gen-events: {len(events)} events -> {path}")


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="JSON config file overlaid on the defaults")
    common.add_argument("--seed", type=int, help="top-level RNG seed")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--threads", type=int,
                        help="worker threads (0 = all cores); never affects output bytes")
    common.add_argument("--variant", choices=["old", "new"],
                        help="circuit variant for single-variant experiments")
    common.add_argument("--no-figures", action="store_true",
                        help="skip figure rendering")

    parser = argparse.ArgumentParser(
        prog="tdesim",
        description="Event-driven TDE simulator: step response, mismatch "
                    "Monte Carlo, and optical-flow experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("step", parents=[common],
                   help="single FAC/TRG pair response traces")
    sub.add_parser("sweep", parents=[common],
                   help="charge and spike count vs delta t, both variants")
    sub.add_parser("montecarlo", parents=[common],
                   help="Monte Carlo mismatch comparison of both variants")
    p_flow = sub.add_parser("optical-flow", parents=[common],
                            help="direction-selectivity task on a moving texture")
    p_flow.add_argument("--events", metavar="PATH",
                        help="load a stimulus event file instead of generating")
    p_gen = sub.add_parser("gen-events", parents=[common],
                           help="write a synthetic stimulus event file")
    p_gen.add_argument("--format", choices=["csv", "evt"],
                       help="output event file format")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    args, extra = parser.parse_known_args(argv)
    try:
        cfg = load_config(args.config)
        cfg = apply_overrides(cfg, _parse_dotted_overrides(extra))
        if args.seed is not None:
            cfg["seed"] = args.seed
        if args.out is not None:
            cfg["out"] = args.out
        if args.threads is not None:
            cfg["threads"] = args.threads
        if args.variant is not None:
            cfg["variant"] = args.variant
        if args.no_figures:
            cfg["figures"] = False
        if args.command == "gen-events" and args.format is not None:
            cfg["gen_events"]["format"] = args.format
        _resolve_threads(cfg)  # validate early
        out = Path(cfg["out"])
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "step":
            cmd_step(cfg, out)
        elif args.command == "sweep":
            cmd_sweep(cfg, out)
        elif args.command == "montecarlo":
            cmd_montecarlo(cfg, out)
        elif args.command == "optical-flow":
            cmd_optical_flow(cfg, out, args.events)
        elif args.command == "gen-events":
            cmd_gen_events(cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error ({args.command}): {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
