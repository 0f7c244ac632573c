"""Command-line interface.

Exit codes: 0 on success, 1 when the work itself fails, 2 for usage errors
(bad flags, missing input files, invalid flag combinations).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from mapfkit import evaluation, render
from mapfkit.attention import AgentNetwork, encode_with_attention, attention_dump
from mapfkit.env import DEFAULT_TAU, EVAL_MAX_STEPS, reset
from mapfkit.errors import InvalidArgumentError, MapParseError, UnreachableError
from mapfkit.grid import RoomGenParams, generate_random_map, generate_room_map, load_map, serialize_map
from mapfkit.intent import DEFAULT_HORIZON, build_intent_graph, gaussian_heatmap
from mapfkit.local_obs import DEFAULT_FOV, local_observation
from mapfkit.observation import observe
from mapfkit.skeleton import extract_graph
from mapfkit.static_features import build_static_graph


class UsageError(Exception):
    pass


METHODS = {"mat": "medial_axis", "zs": "zhang_suen"}


def _dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _write(path: str | None, data: str | bytes) -> None:
    if path is None or path == "-":
        if isinstance(data, bytes):
            sys.stdout.buffer.write(data)
        else:
            sys.stdout.write(data)
        return
    out = Path(path)
    if out.parent and not out.parent.exists():
        raise UsageError(f"output directory {out.parent} does not exist")
    if isinstance(data, bytes):
        out.write_bytes(data)
    else:
        out.write_text(data)


def _existing(path: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"no such file: {path}")
    return p


def _load_scenario(path: str) -> evaluation.Scenario:
    p = _existing(path)
    return evaluation.Scenario.from_json(json.loads(p.read_text()), p.stem)


# -- subcommands -----------------------------------------------------------------

def cmd_gen_map(args) -> None:
    w, h = args.size
    if args.kind == "room":
        if args.density is not None:
            raise UsageError("--density only applies to --kind random")
        grid = generate_room_map(w, h, RoomGenParams(seed=args.seed))
    else:
        density = 0.2 if args.density is None else args.density
        grid = generate_random_map(w, h, density, args.seed)
    if args.output and args.output.endswith(".json"):
        _write(args.output, _dump_json(grid.to_json()))
    else:
        _write(args.output, serialize_map(grid))


def cmd_gen_scenarios(args) -> None:
    out = Path(args.output)
    if not out.is_dir():
        raise UsageError(f"output directory {out} does not exist")
    w, h = args.size
    for k in range(args.count):
        seed = args.seed + k
        if args.kind == "room":
            grid = generate_room_map(w, h, RoomGenParams(seed=seed))
        else:
            grid = generate_random_map(w, h, args.density, seed)
        sc = evaluation.random_scenario(grid, args.agents, seed, args.max_steps, f"scenario_{k:04d}")
        (out / f"{sc.scenario_id}.json").write_text(_dump_json(sc.to_json()))


def cmd_extract_graph(args) -> None:
    grid = load_map(_existing(args.map))
    graph = extract_graph(grid, METHODS[args.method])
    _write(args.output, _dump_json(graph.to_json()))


def cmd_features(args) -> None:
    sc = _load_scenario(args.scenario)
    if not 0 <= args.agent < sc.n_agents:
        raise UsageError(f"--agent {args.agent} outside 0..{sc.n_agents - 1}")
    grid = sc.grid
    if args.all:
        state = reset(grid, sc.starts, sc.goals, sc.max_steps)
        nodes = extract_graph(grid, METHODS[args.method]).nodes
        payload = observe(state, nodes, args.agent, args.horizon, args.fov).to_json()
    elif args.static:
        nodes = extract_graph(grid, METHODS[args.method]).nodes
        payload = build_static_graph(grid, nodes, sc.starts[args.agent], sc.goals[args.agent]).to_json()
    elif args.intent:
        payload = build_intent_graph(grid, sc.starts, sc.goals, args.horizon).to_json()
    else:
        payload = local_observation(grid, sc.starts, sc.goals, args.agent, args.fov).to_json()
    _write(args.output, _dump_json(payload))


def cmd_eval(args) -> None:
    src = Path(args.scenarios)
    if not src.is_dir():
        raise UsageError(f"no such scenario directory: {args.scenarios}")
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    scenarios = evaluation.load_scenarios(src)
    if not scenarios:
        raise InvalidArgumentError(f"no scenario files in {src}")

    if args.policy == "replay":
        missing = [s.scenario_id for s in scenarios if s.plan is None]
        if missing:
            raise InvalidArgumentError(f"replay needs stored plans; missing in {missing[0]}")

        def make_policy(sc):
            return evaluation.replay_policy(sc.plan)
    elif args.policy == "idle":
        def make_policy(sc):
            return evaluation.idle_policy
    else:
        def make_policy(sc):
            return evaluation.prioritized_policy(sc)[0]

    threads = args.threads
    if threads is None and os.environ.get(evaluation.THREADS_ENV):
        threads = int(os.environ[evaluation.THREADS_ENV])
    records = evaluation.run_batch(
        scenarios, make_policy, threads=threads, max_steps=args.max_steps,
        tau=args.tau, blocking=not args.no_blocking, keep_log=False,
    )
    (out / "results.csv").write_text(evaluation.results_csv(records))
    (out / "aggregate.json").write_text(_dump_json(evaluation.aggregate(records)))


def cmd_attn_dump(args) -> None:
    sc = _load_scenario(args.scenario)
    if not 0 <= args.agent < sc.n_agents:
        raise UsageError(f"--agent {args.agent} outside 0..{sc.n_agents - 1}")
    if args.d % args.heads:
        raise UsageError("--d must be divisible by --heads")
    state = reset(sc.grid, sc.starts, sc.goals, sc.max_steps)
    nodes = extract_graph(sc.grid, METHODS[args.method]).nodes
    bundle = observe(state, nodes, args.agent, args.horizon, DEFAULT_FOV)
    net = AgentNetwork(d=args.d, heads=args.heads, seed=args.seed)
    static = encode_with_attention(bundle.static_graph.rows, bundle.static_graph.ego_index,
                                   net.static_params, net.static_cfg)
    intent = encode_with_attention(bundle.intent_graph.rows, args.agent, net.intent_params, net.intent_cfg)
    payload = {
        "agent": args.agent,
        "seed": args.seed,
        "static": attention_dump(static),
        "intent": attention_dump(intent),
    }
    _write(args.output, _dump_json(payload))


def cmd_render(args) -> None:
    if args.layer == "heatmap":
        if not args.scenario:
            raise UsageError("--layer heatmap needs --scenario")
        sc = _load_scenario(args.scenario)
        obs = build_intent_graph(sc.grid, sc.starts, sc.goals, args.horizon)
        data = render.render_heatmap(sc.grid, gaussian_heatmap(obs, sc.grid.width, sc.grid.height), args.scale)
    else:
        if args.scenario:
            grid = _load_scenario(args.scenario).grid
        elif args.map:
            grid = load_map(_existing(args.map))
        else:
            raise UsageError("--map or --scenario is required")
        if args.layer == "map":
            data = render.render_map(grid, args.scale)
        else:
            graph = extract_graph(grid, METHODS[args.method])
            data = render.render_skeleton(grid, graph.skeleton.mask, graph.nodes, args.scale)
    _write(args.output, data)


# -- parser ------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mapfkit", description="Grid MAPF maps, skeleton graphs, observations and evaluation.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-map", help="generate a room or random map")
    g.add_argument("--kind", choices=["room", "random"], required=True)
    g.add_argument("--size", type=int, nargs=2, metavar=("W", "H"), required=True)
    g.add_argument("--density", type=float)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen_map)

    s = sub.add_parser("gen-scenarios", help="write random scenario files for eval")
    s.add_argument("--kind", choices=["room", "random"], default="random")
    s.add_argument("--size", type=int, nargs=2, metavar=("W", "H"), default=[20, 20])
    s.add_argument("--density", type=float, default=0.2)
    s.add_argument("--agents", type=int, default=8)
    s.add_argument("--count", type=int, default=10)
    s.add_argument("--max-steps", type=int, default=EVAL_MAX_STEPS)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_gen_scenarios)

    e = sub.add_parser("extract-graph", help="skeleton graph of a map")
    e.add_argument("--map", required=True)
    e.add_argument("--method", choices=sorted(METHODS), default="mat")
    e.add_argument("-o", "--output")
    e.set_defaults(func=cmd_extract_graph)

    f = sub.add_parser("features", help="observation features of one scenario")
    which = f.add_mutually_exclusive_group(required=True)
    for name in ("static", "intent", "local", "all"):
        which.add_argument(f"--{name}", action="store_true")
    f.add_argument("--scenario", required=True)
    f.add_argument("--agent", type=int, default=0)
    f.add_argument("--method", choices=sorted(METHODS), default="mat")
    f.add_argument("--horizon", type=int, default=DEFAULT_HORIZON)
    f.add_argument("--fov", type=int, default=DEFAULT_FOV)
    f.add_argument("-o", "--output")
    f.set_defaults(func=cmd_features)

    v = sub.add_parser("eval", help="run a policy over a scenario directory")
    v.add_argument("--scenarios", required=True)
    v.add_argument("--policy", choices=["prioritized", "idle", "replay"], required=True)
    v.add_argument("--max-steps", type=int)
    v.add_argument("--tau", type=int, default=DEFAULT_TAU)
    v.add_argument("--no-blocking", action="store_true")
    v.add_argument("--threads", type=int)
    v.add_argument("-o", "--output", required=True)
    v.set_defaults(func=cmd_eval)

    a = sub.add_parser("attn-dump", help="attention weights of a randomly initialised encoder")
    a.add_argument("--scenario", required=True)
    a.add_argument("--agent", type=int, default=0)
    a.add_argument("--method", choices=sorted(METHODS), default="mat")
    a.add_argument("--horizon", type=int, default=DEFAULT_HORIZON)
    a.add_argument("--d", type=int, default=8)
    a.add_argument("--heads", type=int, default=2)
    a.add_argument("--seed", type=int, required=True)
    a.add_argument("-o", "--output")
    a.set_defaults(func=cmd_attn_dump)

    r = sub.add_parser("render", help="PGM/PPM raster of a map, skeleton or intent heatmap")
    r.add_argument("--layer", choices=["map", "skeleton", "heatmap"], default="map")
    r.add_argument("--map")
    r.add_argument("--scenario")
    r.add_argument("--method", choices=sorted(METHODS), default="mat")
    r.add_argument("--horizon", type=int, default=DEFAULT_HORIZON)
    r.add_argument("--scale", type=int, default=4)
    r.add_argument("-o", "--output", required=True)
    r.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except UsageError as exc:
        print(f"mapfkit: usage error: {exc}", file=sys.stderr)
        return 2
    except (InvalidArgumentError, MapParseError, UnreachableError, ValueError, RuntimeError, OSError) as exc:
        print(f"mapfkit: error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    return 0


if __name__ == "__main__":
    sys.exit(main())
