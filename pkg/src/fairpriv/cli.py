"""Command-line interface.

Subcommands:
    gen-data        materialize the synthetic dataset splits
    grid            run a (framework, eps, fairness, replicate) sweep
    frontier        print the Pareto-optimal records of a results file
    frontier query  best feasible record under (max-eps, max-gamma) ceilings
    export-ui       stage a results file for the static explorer page

Exit codes: 0 success, 1 infeasible query, 2 bad input. Errors go to stderr.
All randomness descends from --seed.
"""

from __future__ import annotations

import argparse
import json
import shutil
import sys
from dataclasses import fields as dataclass_fields
from pathlib import Path

import numpy as np

from .accounting import export_ledger_csv
from .aggregation import AggregatorParams
from .core import ExperimentRecord
from .harness import (
    GridSpec,
    HarnessConfig,
    SCHEMA_VERSION,
    SyntheticSpec,
    generate,
    load,
    persist,
    persist_csv,
    run_grid,
)
from .learners import DpSgdParams, StudentParams
from .pareto import frontier, frontier_query


class CliError(Exception):
    """Bad input: malformed config, unknown keys, unreadable files."""


# Allowed configuration keys, by section. Values are dataclass targets or,
# for scalar sections, tuples of field names.
_CONFIG_SECTIONS = {
    "dataset": SyntheticSpec,
    "grid": GridSpec,
    "aggregator": AggregatorParams,
    "teachers": StudentParams,
    "student": StudentParams,
    "dpsgd": DpSgdParams,
    "run": (
        "num_teachers",
        "num_queries",
        "delta",
        "min_count",
        "charge_fairness_rejected",
        "fair_t_soft",
        "gamma_post",
        "lambda_inproc",
    ),
}


def _check_keys(section: str, given: dict, allowed) -> None:
    if not isinstance(given, dict):
        raise CliError(f"config section {section!r} must be an object")
    if isinstance(allowed, tuple):
        names = set(allowed)
    else:
        names = {f.name for f in dataclass_fields(allowed)}
    for key in given:
        if key not in names:
            raise CliError(f"unknown config key {section}.{key}")


def _tupled(value):
    if isinstance(value, list):
        return tuple(_tupled(v) for v in value)
    return value


def _build_dataclass(cls, given: dict, **overrides):
    kwargs = {k: _tupled(v) for k, v in given.items()}
    kwargs.update(overrides)
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as e:
        raise CliError(f"invalid {cls.__name__} configuration: {e}") from e


def read_config(path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as e:
        raise CliError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise CliError(
            f"{path}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}"
        ) from e
    if not isinstance(doc, dict):
        raise CliError(f"{path}: config must be a JSON object")
    for section, content in doc.items():
        if section not in _CONFIG_SECTIONS:
            raise CliError(f"unknown config key {section}")
        _check_keys(section, content, _CONFIG_SECTIONS[section])
    return doc


def config_to_objects(doc: dict):
    """Materialize (SyntheticSpec, GridSpec, HarnessConfig) from a config."""
    spec = _build_dataclass(SyntheticSpec, doc.get("dataset", {}))
    grid = _build_dataclass(GridSpec, doc.get("grid", {}))
    run = doc.get("run", {})
    harness_kwargs = dict(run)
    if "aggregator" in doc:
        harness_kwargs["aggregator"] = _build_dataclass(
            AggregatorParams, doc["aggregator"]
        )
    if "teachers" in doc:
        harness_kwargs["teacher_params"] = _build_dataclass(
            StudentParams, doc["teachers"]
        )
    if "student" in doc:
        harness_kwargs["student_params"] = _build_dataclass(
            StudentParams, doc["student"]
        )
    if "dpsgd" in doc:
        harness_kwargs["dpsgd"] = _build_dataclass(DpSgdParams, doc["dpsgd"])
    config = _build_dataclass(HarnessConfig, harness_kwargs)
    return spec, grid, config


def _cmd_gen_data(args) -> int:
    doc = read_config(args.config) if args.config else {}
    spec = _build_dataclass(SyntheticSpec, doc.get("dataset", {}))
    splits = generate(spec, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    np.savez(
        out / "splits.npz",
        train_X=splits.train.X, train_groups=splits.train.groups,
        train_labels=splits.train.labels,
        public_X=splits.public.X, public_groups=splits.public.groups,
        public_labels=splits.public.labels,
        test_X=splits.test.X, test_groups=splits.test.groups,
        test_labels=splits.test.labels,
    )
    meta = {
        "dataset": splits.name,
        "num_groups": splits.num_groups,
        "num_classes": splits.num_classes,
        "d": spec.d,
        "seed": args.seed,
        "sizes": {
            "train": len(splits.train),
            "public": len(splits.public),
            "test": len(splits.test),
        },
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out / 'splits.npz'} ({len(splits.train)}/{len(splits.public)}/"
          f"{len(splits.test)} examples)")
    return 0


def _cmd_grid(args) -> int:
    doc = read_config(args.config) if args.config else {}
    spec, grid, config = config_to_objects(doc)
    results = run_grid(spec, grid, config, master_seed=args.seed, jobs=args.jobs)
    records = [r.record for r in results]
    out = Path(args.out)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    persist(records, out, dataset=spec.name, master_seed=args.seed)
    if args.csv:
        persist_csv(records, args.csv)
    if args.ledger_dir:
        ledger_dir = Path(args.ledger_dir)
        ledger_dir.mkdir(parents=True, exist_ok=True)
        for i, result in enumerate(results):
            if result.tracker is not None:
                r = result.record
                name = (f"ledger_{r.framework}_eps{r.eps_spec:g}_"
                        f"fair{r.fairness_spec:g}_seed{r.seed}.csv")
                export_ledger_csv(result.tracker, ledger_dir / name)
    print(f"wrote {len(records)} records to {out}")
    return 0


def _load_or_die(path):
    try:
        return load(path)
    except (OSError, ValueError) as e:
        raise CliError(str(e)) from e


def _print_records(records, fmt: str) -> None:
    names = ExperimentRecord.FIELD_NAMES
    if fmt == "json":
        print(json.dumps([r.to_dict() for r in records], indent=2, sort_keys=True))
        return
    if fmt == "csv":
        print(",".join(names))
        for r in records:
            print(",".join(str(getattr(r, n)) for n in names))
        return
    widths = [max(len(n), 12) for n in names]
    print("  ".join(n.ljust(w) for n, w in zip(names, widths)))
    for r in records:
        print("  ".join(str(getattr(r, n)).ljust(w) for n, w in zip(names, widths)))


def _apply_filters(records, filters):
    for expr in filters or []:
        if "=" not in expr:
            raise CliError(f"bad --filter expression {expr!r}; expected key=value")
        key, _, value = expr.partition("=")
        if key not in ExperimentRecord.FIELD_NAMES:
            raise CliError(f"unknown filter field {key!r}")
        if key == "framework":
            records = [r for r in records if r.framework == value]
        else:
            try:
                num = float(value)
            except ValueError as e:
                raise CliError(f"filter {key} needs a numeric value, got {value!r}") from e
            records = [r for r in records if getattr(r, key) == num]
    return records


def _cmd_frontier(args) -> int:
    records, _ = _load_or_die(args.infile)
    records = _apply_filters(records, args.filter)
    _print_records(frontier(records), args.format)
    return 0


def _cmd_frontier_query(args) -> int:
    records, _ = _load_or_die(args.infile)
    best = frontier_query(records, max_eps=args.max_eps, max_gamma=args.max_gamma,
                          objective=args.objective)
    if best is None:
        print(
            f"no record satisfies eps_achieved <= {args.max_eps} and "
            f"max_disparity <= {args.max_gamma}",
            file=sys.stderr,
        )
        return 1
    if args.format == "json":
        print(json.dumps(best.to_dict(), indent=2, sort_keys=True))
    else:
        _print_records([best], args.format)
    return 0


def _cmd_export_ui(args) -> int:
    records, meta = _load_or_die(args.infile)
    out = Path(args.out)
    (out / "data").mkdir(parents=True, exist_ok=True)
    target = out / "data" / "frontier.json"
    shutil.copyfile(args.infile, target)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "datasets": [
            {
                "name": meta.get("dataset", "unknown"),
                "path": "data/frontier.json",
                "records": len(records),
            }
        ],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"staged {len(records)} records under {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairpriv",
        description="Fairness/privacy/utility trade-off experiments and queries.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen-data", help="write synthetic dataset splits")
    p_gen.add_argument("--config", help="JSON config file (dataset section)")
    p_gen.add_argument("--seed", type=int, default=0, help="master seed")
    p_gen.add_argument("--out", required=True, help="output directory")
    p_gen.set_defaults(func=_cmd_gen_data)

    p_grid = sub.add_parser("grid", help="run an experiment sweep")
    p_grid.add_argument("--config", help="JSON config file")
    p_grid.add_argument("--seed", type=int, default=0, help="master seed")
    p_grid.add_argument("--out", required=True, help="output records JSON path")
    p_grid.add_argument("--csv", help="also write a CSV mirror here")
    p_grid.add_argument("--ledger-dir", help="write per-run accounting ledgers here")
    p_grid.add_argument("--jobs", type=int, default=1,
                        help="parallel worker processes for grid cells")
    p_grid.set_defaults(func=_cmd_grid)

    p_front = sub.add_parser("frontier", help="Pareto-optimal records of a results file")
    front_sub = p_front.add_subparsers(dest="frontier_command")
    p_front.add_argument("--in", dest="infile", required=False, help="records JSON path")
    p_front.add_argument("--filter", action="append",
                         help="keep records with field=value (repeatable)")
    p_front.add_argument("--format", choices=("table", "csv", "json"), default="table")
    p_front.set_defaults(func=_cmd_frontier)

    p_query = front_sub.add_parser(
        "query", help="best feasible record under constraint ceilings"
    )
    p_query.add_argument("--in", dest="infile", required=True, help="records JSON path")
    p_query.add_argument("--max-eps", type=float, required=True,
                         help="privacy ceiling on eps_achieved")
    p_query.add_argument("--max-gamma", type=float, required=True,
                         help="fairness ceiling on max_disparity")
    p_query.add_argument("--objective", choices=("accuracy", "coverage"),
                         default="coverage")
    p_query.add_argument("--format", choices=("table", "csv", "json"), default="json")
    p_query.set_defaults(func=_cmd_frontier_query)

    p_ui = sub.add_parser("export-ui", help="stage records for the explorer page")
    p_ui.add_argument("--in", dest="infile", required=True, help="records JSON path")
    p_ui.add_argument("--out", required=True, help="UI data directory")
    p_ui.set_defaults(func=_cmd_export_ui)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "frontier" and getattr(args, "frontier_command", None) is None:
        if not args.infile:
            print("frontier: --in is required", file=sys.stderr)
            return 2
    try:
        return args.func(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
