"""Command-line harness: clustering, skill building, learning runs, scans.

Every subcommand writes plain-text artifacts (CSV, JSON, DOT) into the
--out directory and is deterministic for a given command line, so
re-running a command reproduces its artifacts byte for byte.  Rendering
plots is deliberately out of scope; the CSVs feed external tools.

Exit codes: 0 on success, 2 for configuration errors (bad flags, bad
config file, invalid agent or environment), 3 for runtime failures.
"""

from __future__ import annotations

import argparse
import colorsys
import json
import math
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .environments import ENV_NAMES, make_env
from .environments.pinball import load_pinball_geometry, sample_pinball_states
from .graph import WeightedDigraph, extract_transition_graph, graph_to_json, knn_graph
from .incremental import Schedule, incremental_run
from .learning import TabularModel, TrainParams, run_training
from .louvain import ClusterHierarchy, hierarchy_to_json, prune, run_louvain
from .skills import (
    OfflineParams,
    build_option_hierarchy,
    flatten_hierarchy,
    options_to_json,
    select_level,
    train_option_policies,
)

__all__ = [
    "ExperimentConfig",
    "run_experiment",
    "resolution_scan",
    "depth_scan",
    "export_dot",
    "main",
]

# decision stages per epoch, by environment family
EPOCH_LEN = {
    "rooms": 100,
    "hanoi": 100,
    "taxi": 300,
    "maze": 750,
    "grid": 750,
    "office": 1000,
    "office-multi": 1000,
}

AGENT_KINDS = ("primitive", "louvain", "louvain-flat", "level", "incremental")

GRID_ENVS = ("rooms", "grid", "maze", "office")


class ConfigError(ValueError):
    """Invalid configuration: reported on stderr, exit code 2."""


def epoch_len_for(env_name: str) -> int:
    family = env_name.split(":", 1)[0]
    try:
        return EPOCH_LEN[family]
    except KeyError:
        raise ConfigError(f"no epoch length known for environment {env_name!r}")


def parse_agent(spec: str) -> tuple[str, str | int | None]:
    """Split an agent spec into (kind, argument).

    Accepted: primitive, louvain, louvain-flat, level:<k>,
    incremental:<replace|update>.
    """
    kind, _, arg = spec.partition(":")
    if kind == "level":
        try:
            k = int(arg)
        except ValueError:
            raise ConfigError(f"bad level spec {spec!r}; want level:<k>")
        if k < 1:
            raise ConfigError("level index must be >= 1")
        return kind, k
    if kind == "incremental":
        if arg not in ("replace", "update"):
            raise ConfigError(
                f"bad incremental spec {spec!r}; want incremental:replace or "
                "incremental:update"
            )
        return kind, arg
    if kind in ("primitive", "louvain", "louvain-flat") and not arg:
        return kind, None
    raise ConfigError(f"unknown agent {spec!r}; kinds: {', '.join(AGENT_KINDS)}")


@dataclass
class ExperimentConfig:
    env: str
    agent: str
    rho: float = 0.05
    runs: int = 40
    epochs: int = 40
    epoch_len: int | None = None
    seed: int = 0
    schedule: str = "100,500,1000,3000,5000"
    out: Path = field(default_factory=lambda: Path("."))

    def __post_init__(self):
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.rho <= 0:
            raise ConfigError("rho must be positive")
        parse_agent(self.agent)
        self.out = Path(self.out)
        if self.epoch_len is None:
            self.epoch_len = epoch_len_for(self.env)


def _fmt(x: float) -> str:
    return repr(float(x))


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def write_curves(path: Path, curves: list[list[float]]) -> None:
    lines = ["run,epoch,return"]
    for run, curve in enumerate(curves):
        for epoch, value in enumerate(curve):
            lines.append(f"{run},{epoch},{_fmt(value)}")
    _write(path, "\n".join(lines) + "\n")


def write_summary(path: Path, curves: list[list[float]]) -> None:
    arr = np.asarray(curves, dtype=float)
    runs = arr.shape[0]
    lines = ["epoch,mean,stderr"]
    for epoch in range(arr.shape[1]):
        col = arr[:, epoch]
        stderr = col.std(ddof=1) / math.sqrt(runs) if runs > 1 else 0.0
        lines.append(f"{epoch},{_fmt(col.mean())},{_fmt(stderr)}")
    _write(path, "\n".join(lines) + "\n")


def _base_world(env_name: str, rho: float, seed: int):
    """Shared per-experiment structures: reference env, canonical state
    list, transition graph, and the pruned cluster hierarchy."""
    env0 = make_env(env_name)
    model0 = TabularModel(env0)
    g, _ = extract_transition_graph(env0)
    raw = run_louvain(g, rho, seed=seed)
    kept = prune(raw)
    return env0, model0, g, raw, kept


def _trained_options(kept, model0, seed: int):
    oh = build_option_hierarchy(kept, model0)
    train_option_policies(oh, model0, seed=seed)
    return oh


def _run_env(env_name: str, env0, canon, run_seed: int):
    """Environment and model for one run.  Gridworld tasks redraw start
    and goal cells per run; other domains vary via the trainer's rng."""
    if env_name in GRID_ENVS:
        env_r = make_env(env_name, rng=np.random.default_rng(run_seed))
        return env_r, TabularModel(env_r, states=canon)
    return env0, None


def run_experiment(cfg: ExperimentConfig) -> dict[str, Path]:
    """Run one agent/env experiment and write curves.csv + summary.csv
    (plus hierarchy artifacts where the agent has one).  Returns the
    artifact paths.  Run i uses seed cfg.seed + i."""
    kind, arg = parse_agent(cfg.agent)
    out = cfg.out
    artifacts: dict[str, Path] = {}
    curves: list[list[float]] = []

    if kind == "incremental":
        schedule = Schedule.parse(cfg.schedule)
        snapshots: list[tuple[int, object]] = []
        for i in range(cfg.runs):
            s = cfg.seed + i
            env_r = make_env(cfg.env, rng=np.random.default_rng(s))
            hook = None
            if i == 0:
                def hook(rev, _sink=snapshots):
                    _sink.append((rev.stage, rev.hierarchy))
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                curve, _ = incremental_run(
                    env_r, arg, schedule, seed=s, rho=cfg.rho,
                    epochs=cfg.epochs, epoch_len=cfg.epoch_len,
                    on_revision=hook,
                )
            curves.append(curve)
        for idx, (stage, h) in enumerate(snapshots):
            p = out / f"revision-{idx}-stage-{stage}.json"
            _write(p, hierarchy_to_json(h))
            artifacts[f"revision-{idx}"] = p
    else:
        env0, model0, g, raw, kept = _base_world(cfg.env, cfg.rho, cfg.seed)
        canon = model0.states()
        inventory: list = []
        if kind != "primitive":
            if kind == "level" and not 1 <= arg <= len(kept.levels):
                raise ConfigError(
                    f"level {arg} out of range; hierarchy keeps "
                    f"{len(kept.levels)} level(s)"
                )
            oh = _trained_options(kept, model0, cfg.seed)
            if kind == "louvain":
                inventory = oh.options
            elif kind == "louvain-flat":
                inventory = flatten_hierarchy(oh, model0, seed=cfg.seed)
            else:
                inventory = select_level(oh, arg, model0, seed=cfg.seed)
            p = out / "hierarchy.json"
            _write(p, hierarchy_to_json(kept))
            artifacts["hierarchy"] = p
        for i in range(cfg.runs):
            s = cfg.seed + i
            env_r, model_r = _run_env(cfg.env, env0, canon, s)
            _, curve = run_training(
                env_r, inventory, params=TrainParams(), epochs=cfg.epochs,
                epoch_len=cfg.epoch_len, seed=s,
                model=model_r if model_r is not None else model0,
            )
            curves.append(curve)

    p = out / "curves.csv"
    write_curves(p, curves)
    artifacts["curves"] = p
    p = out / "summary.csv"
    write_summary(p, curves)
    artifacts["summary"] = p
    return artifacts


def resolution_scan(env_name: str, rhos: list[float], seed: int = 0):
    """Cluster one environment's graph at each resolution.  Returns rows
    of (rho, raw level count, pruned level count, raw cluster counts)."""
    env = make_env(env_name)
    g, _ = extract_transition_graph(env)
    rows = []
    for rho in rhos:
        raw = run_louvain(g, rho, seed=seed)
        kept = prune(raw)
        rows.append((rho, raw.level_count, kept.level_count, raw.cluster_counts()))
    return rows


def depth_scan(floor_counts: list[int], rho: float = 0.05, seed: int = 0):
    """Cluster multi-floor office buildings of growing size.  Returns
    rows of (floors, states, raw depth, pruned depth)."""
    rows = []
    for floors in floor_counts:
        env = make_env(f"office-multi:{floors}")
        g, _ = extract_transition_graph(env)
        raw = run_louvain(g, rho, seed=seed)
        kept = prune(raw)
        rows.append((floors, g.n, raw.level_count, kept.level_count))
    return rows


def _palette(n: int) -> list[str]:
    # evenly spaced hues; fixed saturation/value keeps labels readable
    colors = []
    for i in range(n):
        r, g, b = colorsys.hsv_to_rgb(i / max(n, 1), 0.45, 0.93)
        colors.append(f"#{int(r*255):02x}{int(g*255):02x}{int(b*255):02x}")
    return colors


def export_dot(h: ClusterHierarchy, g: WeightedDigraph, level: int) -> str:
    """DOT text for `g` with nodes filled by their cluster at the given
    hierarchy level (1-based).  Output is stable: nodes in id order,
    edges in lexicographic order."""
    if not 1 <= level <= h.level_count:
        raise ValueError(
            f"level {level} out of range; hierarchy has {h.level_count} level(s)"
        )
    base = h.levels[level - 1].base
    colors = _palette(h.levels[level - 1].cluster_count)
    lines = ["digraph clusters {", "  node [style=filled];"]
    for u in range(g.n):
        label = str(g.node_labels[u]) if g.node_labels else str(u)
        lines.append(f'  n{u} [label="{label}", fillcolor="{colors[base[u]]}"];')
    for u, v, _w in g.edges():
        lines.append(f"  n{u} -> n{v};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _parse_list(text: str, cast):
    try:
        return [cast(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"bad list {text!r}")


def _cmd_cluster(args) -> int:
    env = make_env(args.env)
    g, _ = extract_transition_graph(env)
    raw = run_louvain(g, args.rho, seed=args.seed)
    kept = prune(raw)
    out = Path(args.out)
    _write(out / "graph.json", graph_to_json(g))
    _write(out / "hierarchy.json", hierarchy_to_json(raw))
    _write(out / "hierarchy-pruned.json", hierarchy_to_json(kept))
    print(f"{args.env}: {g.n} states, raw levels {raw.cluster_counts()}, "
          f"kept {kept.cluster_counts()}")
    return 0


def _cmd_skills(args) -> int:
    env = make_env(args.env)
    model = TabularModel(env)
    g, _ = extract_transition_graph(env)
    kept = prune(run_louvain(g, args.rho, seed=args.seed))
    oh = _trained_options(kept, model, args.seed)
    out = Path(args.out)
    _write(out / "hierarchy.json", hierarchy_to_json(kept))
    _write(out / "options.json", options_to_json(oh))
    per_level = [len(lvl) for lvl in oh.levels]
    print(f"{args.env}: {len(oh.options)} skills across levels {per_level}")
    return 0


def _cmd_train(args) -> int:
    cfg = ExperimentConfig(
        env=args.env, agent=args.agent, rho=args.rho, runs=args.runs,
        epochs=args.epochs, epoch_len=args.epoch_len, seed=args.seed,
        schedule=args.schedule, out=Path(args.out),
    )
    artifacts = run_experiment(cfg)
    for name in sorted(artifacts):
        print(f"{name}: {artifacts[name]}")
    return 0


def _cmd_incremental(args) -> int:
    args.agent = f"incremental:{args.variant}"
    return _cmd_train(args)


def _cmd_res_scan(args) -> int:
    rhos = _parse_list(args.rhos, float)
    if any(r <= 0 for r in rhos):
        raise ConfigError("resolutions must be positive")
    rows = resolution_scan(args.env, rhos, seed=args.seed)
    lines = ["rho,raw_levels,pruned_levels,raw_cluster_counts"]
    for rho, raw_n, kept_n, counts in rows:
        joined = ";".join(str(c) for c in counts)
        lines.append(f"{_fmt(rho)},{raw_n},{kept_n},{joined}")
        print(f"rho {rho:g}: raw {counts} kept {kept_n} level(s)")
    _write(Path(args.out) / "res-scan.csv", "\n".join(lines) + "\n")
    return 0


def _cmd_depth_scan(args) -> int:
    floors = _parse_list(args.floors, int)
    if any(f < 1 for f in floors):
        raise ConfigError("floor counts must be >= 1")
    rows = depth_scan(floors, rho=args.rho, seed=args.seed)
    lines = ["floors,states,raw_depth,pruned_depth"]
    for f, n, raw_d, kept_d in rows:
        lines.append(f"{f},{n},{raw_d},{kept_d}")
        print(f"{f} floor(s): {n} states, raw depth {raw_d}, pruned {kept_d}")
    _write(Path(args.out) / "depth-scan.csv", "\n".join(lines) + "\n")
    return 0


def _cmd_pinball_graph(args) -> int:
    geom = load_pinball_geometry()
    points = sample_pinball_states(geom, args.samples, seed=args.seed)
    g = knn_graph(points, args.k, scale=args.scale)
    raw = run_louvain(g, args.rho, seed=args.seed)
    out = Path(args.out)
    _write(out / "pinball-graph.json", graph_to_json(g))
    _write(out / "pinball-hierarchy.json", hierarchy_to_json(raw))
    pts = "\n".join(f"{_fmt(x)},{_fmt(y)}" for x, y in points)
    _write(out / "pinball-points.csv", "x,y\n" + pts + "\n")
    print(f"pinball: {g.n} nodes, raw levels {raw.cluster_counts()}")
    return 0


def _cmd_export_dot(args) -> int:
    env = make_env(args.env)
    g, _ = extract_transition_graph(env)
    h = prune(run_louvain(g, args.rho, seed=args.seed))
    text = export_dot(h, g, args.level)
    if args.dot_out == "-":
        sys.stdout.write(text)
    else:
        _write(Path(args.dot_out), text)
        print(f"wrote {args.dot_out}")
    return 0


def _add_common(p: argparse.ArgumentParser, *, env=True) -> None:
    p.add_argument("--config", help="JSON file of flag defaults")
    p.add_argument("--seed", type=int, default=0, help="base random seed")
    p.add_argument("--rho", type=float, default=0.05,
                   help="clustering resolution (default 0.05)")
    p.add_argument("--out", default=".", help="output directory")
    if env:
        p.add_argument("--env", required=True,
                       help=f"environment: {', '.join(ENV_NAMES)}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="louvain-skills",
        description="Skill discovery via multi-level graph clustering: "
                    "experiment and export harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cluster", help="cluster an environment's graph")
    _add_common(p)
    p.set_defaults(func=_cmd_cluster)

    p = sub.add_parser("skills", help="build and train a skill hierarchy")
    _add_common(p)
    p.set_defaults(func=_cmd_skills)

    p = sub.add_parser("train", help="learning-curve experiment")
    _add_common(p)
    p.add_argument("--agent", default="louvain",
                   help="primitive, louvain, louvain-flat, level:<k>, "
                        "incremental:<replace|update>")
    p.add_argument("--runs", type=int, default=40)
    p.add_argument("--epochs", type=int, default=40)
    p.add_argument("--epoch-len", type=int, default=None,
                   help="decision stages per epoch (default: per-environment)")
    p.add_argument("--schedule", default="100,500,1000,3000,5000",
                   help="revision stages for incremental agents")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("incremental",
                       help="online skill discovery experiment")
    _add_common(p)
    p.add_argument("--variant", required=True, choices=("replace", "update"))
    p.add_argument("--schedule", default="100,500,1000,3000,5000")
    p.add_argument("--runs", type=int, default=40)
    p.add_argument("--epochs", type=int, default=61)
    p.add_argument("--epoch-len", type=int, default=None)
    p.set_defaults(func=_cmd_incremental)

    p = sub.add_parser("res-scan", help="cluster at several resolutions")
    _add_common(p)
    p.add_argument("--rhos", default="10,5,3.3,1,0.05",
                   help="comma-separated resolutions")
    p.set_defaults(func=_cmd_res_scan)

    p = sub.add_parser("depth-scan",
                       help="hierarchy depth vs environment size")
    _add_common(p, env=False)
    p.add_argument("--floors", default="1,2,5,10,20,50,100",
                   help="comma-separated office floor counts")
    p.set_defaults(func=_cmd_depth_scan)

    p = sub.add_parser("pinball-graph",
                       help="sampled graph for the continuous domain")
    _add_common(p, env=False)
    p.add_argument("--samples", type=int, default=4000)
    p.add_argument("--k", type=int, default=10, help="neighbours per node")
    p.add_argument("--scale", type=float, default=4.0,
                   help="edge weight = exp(-scale * distance^2)")
    p.set_defaults(func=_cmd_pinball_graph)

    p = sub.add_parser("export-dot", help="DOT render of clustered graph")
    _add_common(p)
    p.add_argument("--level", type=int, default=1,
                   help="1-based pruned-hierarchy level to color by")
    p.add_argument("--dot-out", default="-",
                   help="output file, or - for stdout")
    p.set_defaults(func=_cmd_export_dot)

    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]):
    """Let a --config JSON file supply defaults; explicit flags win."""
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config")
    known, _ = probe.parse_known_args(argv)
    if not known.config:
        return parser.parse_args(argv)
    try:
        data = json.loads(Path(known.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {known.config!r}: {exc}")
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    defaults = {k.replace("-", "_"): v for k, v in data.items()}
    command = argv[0] if argv and not argv[0].startswith("-") else None
    for action in parser._subparsers._group_actions:
        if command in action.choices:
            subparser = action.choices[command]
            valid = {a.dest for a in subparser._actions}
            unknown = set(defaults) - valid
            if unknown:
                raise ConfigError(
                    f"config keys not recognised by {command!r}: "
                    f"{', '.join(sorted(unknown))}"
                )
            subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - report and signal via exit code
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
