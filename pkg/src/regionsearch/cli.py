"""Command-line entry point: ``regionsearch {search,bench,gen,export-dot}``.

Exit codes: 0 success, 1 input error, 2 config error, 3 provider/engine error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import config as cfgmod
from .harness import (GeneratorError, GeneratorSpec, SampleError, generate_synthetic,
                      load_samples, run_benchmark, write_corpus)
from .harness.grounders import GrounderError
from .harness.samples import scene_from_dict
from .perceptor import ConfigError, Instruction, ProviderError, ScoringError, score_scene
from .planner import SearchError, run_search
from .trace import SearchTrace, to_dot

EXIT_OK, EXIT_INPUT, EXIT_CONFIG, EXIT_ENGINE = 0, 1, 2, 3

log = logging.getLogger("regionsearch")


class InputError(Exception):
    pass


# flag -> (section, key, type); type None means store_true
CONFIG_FLAGS = [
    ("--budget", "search", "rollout_budget", int),
    ("--depth", "search", "max_depth", int),
    ("--uct-c", "search", "uct_c", float),
    ("--exhaustive", "search", "exhaustive", None),
    ("--actions", "search", "actions", str),
    ("--seeded-tiebreak", "search", "seeded_tiebreak", int),
    ("--rescore-per-region", "search", "rescore_per_region", None),
    ("--focus-top", "action_params", "focus_top_fraction", float),
    ("--focus-shrink", "action_params", "focus_shrink_ratio", float),
    ("--focus-outlier-k", "action_params", "focus_outlier_k", float),
    ("--scatter-top", "action_params", "scatter_top_fraction", float),
    ("--scatter-max-expand", "action_params", "scatter_max_expand", float),
    ("--shift-top", "action_params", "shift_top_fraction", float),
    ("--shift-max-iou", "action_params", "shift_max_iou", float),
    ("--padding", "action_params", "padding_px", float),
    ("--alpha", "reward_weights", "alpha", float),
    ("--beta", "reward_weights", "beta", float),
    ("--gamma", "reward_weights", "gamma", float),
    ("--lambda", "reward_weights", "lambda_noninteractive", float),
    ("--tau", "reward_weights", "tau", float),
    ("--epsilon", "reward_weights", "epsilon", float),
    ("--provider", "provider", "kind", str),
    ("--embeddings", "provider", "embeddings", str),
    ("--embedder-url", "provider", "url", str),
    ("--embedder-timeout", "provider", "timeout", float),
    ("--mock-dim", "provider", "dim", int),
    ("--template", "provider", "template", str),
    ("--grounder", "grounder", "kind", str),
    ("--base-success", "grounder", "base_success", float),
    ("--clutter-penalty", "grounder", "clutter_penalty", float),
    ("--resolution-penalty", "grounder", "resolution_penalty", float),
    ("--grounder-seed", "grounder", "seed", int),
    ("--grounder-url", "grounder", "url", str),
    ("--grounder-timeout", "grounder", "timeout", float),
    ("--grounder-retries", "grounder", "retries", int),
    ("--parallelism", None, "parallelism", int),
]
TERM_FLAGS = {"--no-rel": "rel", "--no-cov": "cov", "--no-con": "con"}


def _dest(flag: str) -> str:
    return "cfg_" + flag.lstrip("-").replace("-", "_")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("configuration (flags override --config)")
    g.add_argument("--config", help="JSON config file")
    g.add_argument("--print-config", action="store_true",
                   help="print the fully resolved config as JSON and exit")
    for flag, section, key, typ in CONFIG_FLAGS:
        where = f"{section}.{key}" if section else key
        if typ is None:
            g.add_argument(flag, dest=_dest(flag), action="store_true", default=None, help=where)
        else:
            g.add_argument(flag, dest=_dest(flag), type=typ, default=None, help=where)
    for flag, term in TERM_FLAGS.items():
        g.add_argument(flag, dest=_dest(flag), action="store_true",
                       help=f"drop the {term} reward term (reward_terms)")


def _overrides(args) -> dict:
    out: dict = {}
    for flag, section, key, _ in CONFIG_FLAGS:
        value = getattr(args, _dest(flag))
        if value is None:
            continue
        if section is None:
            out[key] = value
        else:
            out.setdefault(section, {})[key] = value
    dropped = [t for f, t in TERM_FLAGS.items() if getattr(args, _dest(f))]
    if dropped:
        out["reward_terms"] = [t for t in ("rel", "cov", "con") if t not in dropped]
    return out


def _resolve(args) -> cfgmod.Config:
    return cfgmod.resolve(args.config, _overrides(args))


def _load_json(path: str):
    p = Path(path)
    if not p.is_file():
        raise InputError(f"no such file: {path}")
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: JSON parse error at line {exc.lineno}: {exc.msg}") from None


def cmd_search(args) -> int:
    config = _resolve(args)
    if args.print_config:
        print(json.dumps(config.to_dict(), indent=1, sort_keys=True))
        return EXIT_OK
    data = _load_json(args.scene)
    if isinstance(data, list):
        if not 0 <= args.index < len(data):
            raise InputError(f"{args.scene}: index {args.index} out of range ({len(data)} records)")
        data = data[args.index]
    if not isinstance(data, dict):
        raise InputError(f"{args.scene}: expected a scene object")
    try:
        scene = scene_from_dict(data)
        text = args.instruction or data.get("instruction")
        if not text:
            raise InputError("no instruction given and the scene file has none")
        instruction = Instruction(str(text))
    except InputError:
        raise
    except (ValueError, TypeError, KeyError, SampleError) as exc:
        raise InputError(f"{args.scene}: {exc}") from None

    search_cfg = config.effective_search()
    scored = score_scene(scene, instruction, config.make_provider(), config.provider.template)
    result = run_search(scored, search_cfg)

    if args.trace:
        Path(args.trace).write_text(result.trace.to_json(indent=1) + "\n", encoding="utf-8")
    if args.dot:
        Path(args.dot).write_text(to_dot(result.trace, result.best_node_id), encoding="utf-8")
    r = result.best_reward
    if args.json:
        print(json.dumps({"best_region": result.best_region.as_list(),
                          "best_node_id": result.best_node_id,
                          "reward": r.to_dict(), "node_count": result.node_count},
                         sort_keys=True))
    else:
        print("best region: " + " ".join(f"{v:.2f}" for v in result.best_region.as_list()))
        print(f"reward: total={r.total:.6f} rel={r.r_rel:.6f} cov={r.r_cov:.6f} "
              f"con={r.r_con:.6f} elements={r.element_count}")
        print(f"nodes: {result.node_count} (best #{result.best_node_id})")
    return EXIT_OK


def cmd_bench(args) -> int:
    config = _resolve(args)
    if args.print_config:
        print(json.dumps(config.to_dict(), indent=1, sort_keys=True))
        return EXIT_OK
    if not Path(args.samples).is_file():
        raise InputError(f"no such file: {args.samples}")
    samples = load_samples(args.samples)
    if not samples:
        raise InputError(f"{args.samples}: no samples")
    policy = args.baseline or "drs"
    label = args.label or (policy if policy != "drs" else
                           "drs[" + "+".join(a.label for a in config.search.actions) + "]"
                           + ("" if len(config.reward_terms) == 3 else
                              "{" + "+".join(config.reward_terms) + "}"))
    provider = config.make_provider()
    grounder = config.make_grounder(samples)
    report = run_benchmark(samples, provider, grounder, config.effective_search(),
                           config.parallelism, policy=policy,
                           template=config.provider.template, label=label,
                           keep_trace=args.keep_traces)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = args.name or "report"
    (out / f"{stem}.json").write_text(
        json.dumps({"config": config.to_dict(), "policy": policy,
                    "report": report.to_dict()}, indent=1, sort_keys=True) + "\n",
        encoding="utf-8")
    if args.keep_traces:
        (out / f"{stem}.traces.json").write_text(
            json.dumps({r.sample_id: r.trace for r in report.records}, sort_keys=True) + "\n",
            encoding="utf-8")
    table = report.to_text()
    (out / f"{stem}.txt").write_text(table, encoding="utf-8")
    print(table, end="")
    if report.n_failed == report.n_samples:
        first = next(r.error for r in report.records if r.error)
        print(f"error: every sample failed; first failure: {first}", file=sys.stderr)
        return EXIT_ENGINE
    return EXIT_OK


def cmd_gen(args) -> int:
    spec = GeneratorSpec(
        n_scenes=args.scenes, min_elements=args.min_elements, max_elements=args.max_elements,
        width=args.width, height=args.height, grid_cols=args.grid_cols, grid_rows=args.grid_rows,
        jitter=args.jitter, profile=args.profile, margin=args.margin, mock_dim=args.mock_dim,
    )
    try:
        samples = generate_synthetic(spec, args.seed)
    except GeneratorError as exc:
        raise InputError(f"generator: {exc}") from None
    try:
        paths = write_corpus(samples, args.out, spec, args.seed)
    except OSError as exc:
        raise InputError(f"cannot write to {args.out}: {exc.strerror or exc}") from None
    print(f"wrote {len(samples)} samples to {paths['samples']} and embeddings to {paths['embeddings']}")
    return EXIT_OK


def cmd_export_dot(args) -> int:
    data = _load_json(args.trace)
    try:
        trace = SearchTrace.from_dict(data)
        dot = to_dot(trace)
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"{args.trace}: not a search trace ({exc})") from None
    if args.output:
        Path(args.output).write_text(dot, encoding="utf-8")
    else:
        sys.stdout.write(dot)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="regionsearch", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("search", help="search one scene for the best region")
    s.add_argument("scene", help="scene/sample JSON file (object, or array with --index)")
    s.add_argument("instruction", nargs="?", help="instruction text (default: the file's)")
    s.add_argument("--index", type=int, default=0, help="record index when the file is an array")
    s.add_argument("--trace", help="write the search trace JSON here")
    s.add_argument("--dot", help="write the search tree as Graphviz DOT here")
    s.add_argument("--json", action="store_true", help="print the result as JSON")
    _add_config_flags(s)
    s.set_defaults(func=cmd_search)

    b = sub.add_parser("bench", help="evaluate a sample file and write a report")
    b.add_argument("samples", help="samples JSON file")
    b.add_argument("--out", default="bench_out", help="report directory")
    b.add_argument("--name", help="report file stem (default: report)")
    b.add_argument("--label", help="label printed in the report header")
    b.add_argument("--baseline", choices=("full", "forward"),
                   help="run a comparison policy instead of the search")
    b.add_argument("--keep-traces", action="store_true", help="also write per-sample traces")
    _add_config_flags(b)
    b.set_defaults(func=cmd_bench)

    d = GeneratorSpec()
    g = sub.add_parser("gen", help="generate a seeded synthetic corpus")
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--scenes", type=int, default=d.n_scenes)
    g.add_argument("--profile", choices=("easy", "hard"), default=d.profile)
    g.add_argument("--min-elements", type=int, default=d.min_elements)
    g.add_argument("--max-elements", type=int, default=d.max_elements)
    g.add_argument("--width", type=int, default=d.width)
    g.add_argument("--height", type=int, default=d.height)
    g.add_argument("--grid-cols", type=int, default=d.grid_cols)
    g.add_argument("--grid-rows", type=int, default=d.grid_rows)
    g.add_argument("--jitter", type=float, default=d.jitter)
    g.add_argument("--margin", type=float, default=d.margin)
    g.add_argument("--mock-dim", type=int, default=d.mock_dim)
    g.set_defaults(func=cmd_gen)

    e = sub.add_parser("export-dot", help="convert a trace JSON into Graphviz DOT")
    e.add_argument("trace", help="trace JSON written by `search --trace`")
    e.add_argument("-o", "--output", help="DOT file (default: stdout)")
    e.set_defaults(func=cmd_export_dot)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, SampleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ProviderError, ScoringError, SearchError, GrounderError) as exc:
        print(f"engine error: {exc}", file=sys.stderr)
        return EXIT_ENGINE


if __name__ == "__main__":
    sys.exit(main())
