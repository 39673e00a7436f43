"""Command-line surface for the detection pipeline.

Stage subcommands (fit-bins, build-vocab, train-embeddings, train-ae,
score, evaluate) run the pipeline up to and including that stage, reusing
any artifacts already on disk; `pipeline` runs everything and `experiment`
runs the configured poisoning scenarios. Exit codes: 0 success, 1 usage or
config error, 2 data error, 3 training divergence.
"""

import argparse
import dataclasses
import sys

from .config import PipelineConfig, apply_seed, load_config
from .errors import FlowaeError
from .experiment import run_experiment
from .ingest import (
    DEFAULT_UNSW_SCHEMA,
    ParseStats,
    filter_tcp,
    load_schema,
    parse_csv_stream,
    write_flows,
)
from .pipeline import run_pipeline

STAGE_COMMANDS = (
    "fit-bins",
    "build-vocab",
    "train-embeddings",
    "train-ae",
    "score",
    "evaluate",
)


def _effective_config(args):
    config = load_config(args.config) if args.config else PipelineConfig()
    if args.out:
        config = dataclasses.replace(
            config, paths=dataclasses.replace(config.paths, out=args.out)
        )
    if args.seed is not None:
        config = apply_seed(config, args.seed)
    return config


def cmd_ingest(args):
    schema = load_schema(args.schema) if args.schema else DEFAULT_UNSW_SCHEMA
    stats = ParseStats()
    records = list(parse_csv_stream(args.input, schema, stats))
    if args.protocol != "all":
        kept = filter_tcp(records, protocol_token=args.protocol)
    else:
        kept = records
    write_flows(args.out, kept)
    print(
        f"total={stats.rows} {args.protocol}={len(kept)} skipped={stats.skipped} "
        f"-> {args.out}"
    )
    return 0


def cmd_stage(args):
    config = _effective_config(args)
    run_pipeline(config, force=args.force, stop_after=args.stage, log=print)
    return 0


def cmd_pipeline(args):
    config = _effective_config(args)
    result = run_pipeline(config, force=args.force, log=print)
    report = result["report"]
    for cls, entry in report["classes"].items():
        best = entry["optimal"]
        print(
            f"{cls}: f1={best['f1']:.4f} tpr={best['tpr']:.4f} "
            f"tnr={best['tnr']:.4f} cutoff={best['cutoff']:.6g}"
        )
    return 0


def cmd_experiment(args):
    config = _effective_config(args)
    summary = run_experiment(config, force=args.force, log=print)
    failed = [s for s in summary["scenarios"] if s["status"] != "ok"]
    for s in failed:
        print(f"scenario {s['name']} failed: {s['error']}", file=sys.stderr)
    if failed:
        return failed[0].get("exit_code", 1)
    return 0


class _Parser(argparse.ArgumentParser):
    # usage problems are exit code 1; argparse's default of 2 is taken
    # by data errors
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_common(sub):
    sub.add_argument("--config", help="pipeline config JSON")
    sub.add_argument("--out", help="output directory override")
    sub.add_argument("--seed", type=int, help="master seed override for all stages")
    sub.add_argument("--force", action="store_true",
                     help="re-run stages even when their artifacts exist")


def build_parser():
    parser = _Parser(prog="flowae", description=__doc__)
    commands = parser.add_subparsers(dest="command", required=True,
                                     parser_class=_Parser)

    ingest = commands.add_parser("ingest", help="raw capture CSV -> canonical flow file")
    ingest.add_argument("--input", required=True, help="raw CSV path")
    ingest.add_argument("--schema", help="column-role schema JSON (default: UNSW-NB15 layout)")
    ingest.add_argument("--out", required=True, help="output flow file (JSONL)")
    ingest.add_argument("--protocol", default="tcp",
                        help="protocol to keep, or 'all' (default: tcp)")
    ingest.set_defaults(func=cmd_ingest)

    for stage in STAGE_COMMANDS:
        sub = commands.add_parser(stage, help=f"run the pipeline through '{stage}'")
        _add_common(sub)
        sub.set_defaults(func=cmd_stage, stage=stage)

    pipe = commands.add_parser("pipeline", help="run every stage end to end")
    _add_common(pipe)
    pipe.set_defaults(func=cmd_pipeline)

    exp = commands.add_parser("experiment", help="run the poisoning scenarios")
    _add_common(exp)
    exp.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FlowaeError as err:
        print(f"error: {err}", file=sys.stderr)
        return err.exit_code


if __name__ == "__main__":
    sys.exit(main())
