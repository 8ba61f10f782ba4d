"""Command-line front end.

Subcommands: generate, simulate, sweep, diagnose, render.  Exit codes:
0 success, 2 configuration error, 3 runtime error.  The default
parallelism honors the CHASESCAPE_PARALLELISM environment variable and is
overridden by --parallelism.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from . import __version__
from .config import echo_config, parse_config
from .contact import geo_degree_bound
from .epidemic import TimerTable, simulate_dynamic, survival_verdict
from .errors import ChasescapeError, ConfigError, InvalidParameterError
from .experiments import (
    STREAMS,
    Scenario,
    percolation_diagnostics,
    realize_with_retry,
    sweep,
)
from .geometry import Window
from .points import ROLE_KNIGHT
from .render import render_svg
from .staticgraph import StaticScenario, simulate_static
from .streets import save_segments

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _default_parallelism() -> int:
    raw = os.environ.get("CHASESCAPE_PARALLELISM", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chasescape",
        description="Chase-escape malware simulation on random street systems",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, default=None,
                       help="scenario JSON (defaults apply when omitted)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the master seed")
        p.add_argument("--out-dir", type=Path, default=Path("."),
                       help="output directory")

    p_gen = sub.add_parser("generate", help="street system + device positions")
    common(p_gen)
    p_gen.add_argument("--replica", type=int, default=0)
    p_gen.add_argument("--svg", action="store_true", help="also write an SVG")

    p_sim = sub.add_parser("simulate", help="one replica, trace out")
    common(p_sim)
    p_sim.add_argument("--replica", type=int, default=0)

    p_sweep = sub.add_parser("sweep", help="replicated parameter sweep")
    common(p_sweep)
    p_sweep.add_argument("--axis", required=True)
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated axis values")
    p_sweep.add_argument("--replicas", type=int, default=20)
    p_sweep.add_argument("--parallelism", type=int, default=None)

    p_diag = sub.add_parser("diagnose", help="percolation and degree diagnostics")
    common(p_diag)
    p_diag.add_argument("--replica", type=int, default=0)

    p_render = sub.add_parser("render", help="SVG frames of one replica")
    common(p_render)
    p_render.add_argument("--replica", type=int, default=0)
    p_render.add_argument("--times", required=True,
                          help="comma-separated frame times")
    return parser


def _load_scenario(args) -> Scenario:
    scenario = parse_config(args.config) if args.config else Scenario()
    if args.seed is not None:
        scenario = dataclasses.replace(scenario, master_seed=args.seed)
    return scenario


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)


def _realize_with_system(scenario, replica):
    """Replica realization plus the raw segment system (regenerated with
    the replica's street stream so files match the simulation exactly)."""
    from .streets import generate_manhattan, generate_pdt, generate_pvt
    from .experiments import substream

    real, attempt = realize_with_retry(scenario, replica)
    window = Window.centered(scenario.window_side)
    rng = substream(scenario.master_seed, "streets", replica, attempt)
    if scenario.generator == "pvt":
        system = generate_pvt(scenario.gamma, window, rng, scenario.resolved_buffer())
    elif scenario.generator == "pdt":
        system = generate_pdt(scenario.gamma, window, rng, scenario.resolved_buffer())
    else:
        system = generate_manhattan(scenario.gamma, window)
    return real, attempt, system


def cmd_generate(args) -> int:
    scenario = _load_scenario(args)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    real, _, system = _realize_with_system(scenario, args.replica)
    system.seed = scenario.master_seed
    save_segments(system, args.out_dir / "segments.txt")
    real.config.dump_csv(args.out_dir / "points.csv")
    if args.svg:
        devices = [
            (*real.positions[d.id], d.role) for d in real.config.devices
        ]
        svg = render_svg(real.config.graph, devices, t=0.0,
                         scenario_hash=scenario.hash())
        (args.out_dir / "realization.svg").write_text(svg, encoding="utf-8")
    print(json.dumps(echo_config(scenario), indent=1, sort_keys=True))
    return EXIT_OK


def cmd_simulate(args) -> int:
    scenario = _load_scenario(args)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    real, attempt = realize_with_retry(scenario, args.replica)
    if scenario.engine == "dynamic":
        timers = TimerTable(
            scenario.dist_infect, scenario.dist_patch,
            seed_key=(scenario.master_seed, STREAMS["timers_infect"],
                      args.replica, attempt),
        )
        trace = simulate_dynamic(real.config, real.store, timers,
                                 scenario.resolved_horizon())
        verdict = survival_verdict(trace, scenario.resolved_reach_radius(),
                                   trajectories=real.trajectories)
    else:
        knights = {d.id for d in real.config.devices if d.role == ROLE_KNIGHT}
        static = StaticScenario(real.graph_rho, real.config.root_id, knights,
                                scenario.dist_infect, scenario.dist_patch,
                                scenario.b)
        trace = simulate_static(
            static, seed_key=(scenario.master_seed, STREAMS["static_timers"],
                              args.replica, attempt)
        )
        verdict = survival_verdict(trace, scenario.resolved_reach_radius(),
                                   positions=real.positions)
    payload = trace.to_json_dict()
    payload["verdict"] = verdict
    payload["scenario_hash"] = scenario.hash()
    payload["version"] = __version__
    payload["seed"] = scenario.master_seed
    payload["replica"] = args.replica
    payload["parameters"] = scenario.to_json_dict()
    _write_json(args.out_dir / "trace.json", payload)
    print(f"verdict={verdict} events={len(trace.events)} "
          f"scenario={scenario.hash()}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    scenario = _load_scenario(args)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    values = [float(v) for v in args.values.split(",") if v.strip() != ""]
    parallelism = args.parallelism
    if parallelism is None:
        parallelism = _default_parallelism()
    result = sweep(scenario, args.axis, values, args.replicas, parallelism)
    result.write_csv(args.out_dir / "sweep.csv")
    result.write_json(args.out_dir / "sweep.json")
    for row in result.rows:
        print(f"{args.axis}={row.value:g} freq={row.frequency:.3f} "
              f"[{row.wilson_lower:.3f}, {row.wilson_upper:.3f}] "
              f"counts={row.counts}")
    flagged = result.nonmonotone_interior()
    if flagged:
        print(f"non-monotone interior points at indices {flagged}")
    return EXIT_OK


def cmd_diagnose(args) -> int:
    scenario = _load_scenario(args)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    real, _ = realize_with_retry(scenario, args.replica)
    window = Window.centered(scenario.window_side)
    diag = percolation_diagnostics(real.graph_rho, real.config.root_id,
                                   window, scenario.r)
    geo = geo_degree_bound(
        real.config.graph,
        {d.id: d.point for d in real.config.devices},
        scenario.kernel_radius,
        scenario.r,
    )
    graph_degrees = real.graph_rho.degrees()
    payload = {
        "version": __version__,
        "scenario_hash": scenario.hash(),
        "n_devices": len(real.trajectories),
        "n_edges": real.graph_rho.n_edges(),
        "component_sizes": diag.component_sizes[:50],
        "largest_fraction": diag.largest_fraction,
        "root_reaches_boundary_band": diag.boundary_flag,
        "degree_histogram": {str(k): v for k, v in sorted(diag.degree_histogram.items())},
        "geo_degree_max": max(geo.values(), default=0),
        "geo_degree_mean": (sum(geo.values()) / len(geo)) if geo else 0.0,
        "degree_bound_violations": sum(
            1 for i, d in graph_degrees.items() if d > geo.get(i, 0)
        ),
    }
    _write_json(args.out_dir / "diagnostics.json", payload)
    print(json.dumps(payload, indent=1, sort_keys=True))
    return EXIT_OK


def cmd_render(args) -> int:
    scenario = _load_scenario(args)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    times = [float(v) for v in args.times.split(",") if v.strip() != ""]
    real, attempt = realize_with_retry(scenario, args.replica)
    horizon = scenario.resolved_horizon()
    if scenario.engine == "dynamic":
        timers = TimerTable(
            scenario.dist_infect, scenario.dist_patch,
            seed_key=(scenario.master_seed, STREAMS["timers_infect"],
                      args.replica, attempt),
        )
        trace = simulate_dynamic(real.config, real.store, timers, horizon)
    else:
        knights = {d.id for d in real.config.devices if d.role == ROLE_KNIGHT}
        static = StaticScenario(real.graph_rho, real.config.root_id, knights,
                                scenario.dist_infect, scenario.dist_patch,
                                scenario.b)
        trace = simulate_static(
            static, seed_key=(scenario.master_seed, STREAMS["static_timers"],
                              args.replica, attempt)
        )
        horizon = trace.horizon
    for t in times:
        if not (0.0 <= t <= horizon):
            raise InvalidParameterError(
                f"frame time {t} outside [0, {horizon}]"
            )
        roles = trace.roles_at(t)
        devices = []
        for d in real.config.devices:
            if scenario.engine == "dynamic":
                (x, y), _, _ = real.trajectories[d.id].position_at(t)
            else:
                x, y = real.positions[d.id]
            devices.append((x, y, roles[d.id]))
        svg = render_svg(real.config.graph, devices, t=t,
                         scenario_hash=scenario.hash(), horizon=horizon)
        out = args.out_dir / ("frame_t%s.svg" % ("%g" % t).replace(".", "p"))
        out.write_text(svg, encoding="utf-8")
        print(f"wrote {out}")
    return EXIT_OK


_COMMANDS = {
    "generate": cmd_generate,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "diagnose": cmd_diagnose,
    "render": cmd_render,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ChasescapeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # pragma: no cover - unexpected failure surface
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
