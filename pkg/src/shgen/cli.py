"""Command-line entry point: ``shgen campaign|generate|reduce|triage``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .campaign import (
    CampaignConfig,
    apply_settings,
    derive_seed,
    execution_oracle,
    generate,
    load_config_file,
    load_grammars,
    run_campaign,
    script_name,
)
from .executor import PoolAborted, ScratchSetupError, ShellTarget, SpawnError, execute, harden_environment
from .generators import GeneratorKind, GuaranteeUnreachableError
from .grammar import GrammarError, load_grammar
from .oracle import error_patterns, oracle_for
from .reducer import FlakyOracleError, NotFailingError, failing_line, reduce
from .triage import group, read_alert_log

EXIT_OK = 0
EXIT_ALERTS = 1
EXIT_SETUP = 2

class UsageError(Exception):
    pass


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _kind(text: str) -> GeneratorKind:
    try:
        return GeneratorKind.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shgen", description="Grammar-based fuzzing of POSIX shells.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("campaign", help="run a fuzzing campaign")
    c.add_argument("--shell", help="shell binary (path or name on PATH); default dash")
    c.add_argument("--config", type=Path, help="JSON or key = value settings file")
    budget = c.add_mutually_exclusive_group()
    budget.add_argument("--time", type=float, help="total time budget in seconds, split 4:6:2 by default")
    budget.add_argument("--count", type=int, help="scripts per generator instead of a time budget")
    c.add_argument("--procs-v", type=_positive)
    c.add_argument("--procs-i", type=_positive)
    c.add_argument("--procs-mi", type=_positive)
    c.add_argument("--size-v", type=_positive)
    c.add_argument("--size-mi", type=_positive)
    c.add_argument("--seed", type=_seed)
    c.add_argument("--out", type=Path)
    c.add_argument("--timeout-ms", type=_positive)
    c.add_argument("--no-reduce", action="store_true")
    c.add_argument("--generators", help="comma-separated subset of v,i,mi")
    c.add_argument("--sanitizer", action="store_true", help="parse sanitizer reports (instrumented shells)")

    g = sub.add_parser("generate", help="print generated scripts for inspection")
    g.add_argument("kind", type=_kind)
    g.add_argument("-n", "--count", type=_positive, default=1)
    g.add_argument("--size", type=_positive)
    g.add_argument("--seed", type=_seed, default=0)
    g.add_argument("--grammar", type=Path, help="grammar file overriding the shipped one")
    g.add_argument("--out", type=Path, help="write one file per script into this directory")

    r = sub.add_parser("reduce", help="reduce one failing script")
    r.add_argument("--script", type=Path, required=True)
    r.add_argument("--shell", required=True)
    r.add_argument("--expect-kind", type=_kind, required=True)
    r.add_argument("--out", type=Path, help="where to write the reduced script (default: stdout)")
    r.add_argument("--timeout-ms", type=_positive, default=5000)
    r.add_argument("--budget", type=_positive, default=2000)

    t = sub.add_parser("triage", help="regroup an existing alert log")
    t.add_argument("log", type=Path)
    t.add_argument("--json", action="store_true", help="print groups as JSON")
    return parser


def _campaign_config(args) -> CampaignConfig:
    config = load_config_file(args.config) if args.config else CampaignConfig()
    settings = {
        "shell": args.shell,
        "procs_v": args.procs_v,
        "procs_i": args.procs_i,
        "procs_mi": args.procs_mi,
        "size_v": args.size_v,
        "size_mi": args.size_mi,
        "seed": args.seed,
        "out": args.out,
        "timeout_ms": args.timeout_ms,
        "generators": args.generators,
    }
    apply_settings(config, settings)
    if args.time is not None:
        if args.time <= 0:
            raise UsageError("--time must be positive")
        config.count = None
        config.set_total_time(args.time)
    if args.count is not None:
        config.count = args.count
    if args.no_reduce:
        config.reduce = False
    if args.sanitizer:
        config.sanitizer = True
    try:
        config.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return config


def cmd_campaign(args) -> int:
    config = _campaign_config(args)
    report = run_campaign(config)
    sys.stdout.write(report.render_text())
    print(f"report: {Path(config.output_dir) / 'report.txt'}")
    return EXIT_ALERTS if report.overall.unique else EXIT_OK


def cmd_generate(args) -> int:
    kind = args.kind
    grammar = load_grammar(args.grammar) if args.grammar else load_grammars(CampaignConfig())[kind]
    size = None if kind is GeneratorKind.I else (args.size or {GeneratorKind.V: 500, GeneratorKind.MI: 50}[kind])
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
    for ordinal in range(args.count):
        script = generate(kind, grammar, size, derive_seed(args.seed, kind, ordinal), script_name(kind, ordinal))
        if args.out:
            (args.out / f"{script.id}.sh").write_text(script.text, encoding="utf-8")
        else:
            sys.stdout.write(f"# {script.id} seed={script.seed} loc={script.loc}\n{script.text}")
            if not script.text.endswith("\n"):
                sys.stdout.write("\n")
    return EXIT_OK


def cmd_reduce(args) -> int:
    kind = args.expect_kind
    target = ShellTarget.resolve(args.shell)
    target.check()
    text = args.script.read_text(encoding="utf-8")
    expectation = oracle_for(kind, error_patterns(target.error_pattern_profile))
    sandbox = harden_environment()
    oracle = execution_oracle(kind, target, expectation, args.timeout_ms, sandbox)
    protected = []
    if kind is GeneratorKind.V:
        first = execute(text, target, args.timeout_ms, sandbox)
        line = failing_line(first.stderr)
        if line:
            protected.append((line, line))
    try:
        outcome = reduce(text, oracle, protected_spans=protected, budget=args.budget)
    except (NotFailingError, FlakyOracleError) as exc:
        print(f"shgen reduce: {exc}", file=sys.stderr)
        return EXIT_SETUP
    if args.out:
        args.out.write_text(outcome.reduced_text, encoding="utf-8")
    else:
        sys.stdout.write(outcome.reduced_text)
        if not outcome.reduced_text.endswith("\n"):
            sys.stdout.write("\n")
    print(
        f"reduced {outcome.original_loc} -> {outcome.reduced_loc} lines "
        f"in {outcome.oracle_evaluations} runs; signature {outcome.signature}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_triage(args) -> int:
    groups = group(read_alert_log(args.log))
    if args.json:
        out = [
            {
                "fingerprint": g.fingerprint.to_dict(),
                "digest": g.fingerprint.digest(),
                "members": g.members,
                "representative": g.representative,
                "representative_path": g.representative_path,
                "representative_loc": g.representative_loc,
            }
            for g in groups
        ]
        print(json.dumps(out, indent=1))
    else:
        for g in groups:
            fp = g.fingerprint
            print(
                f"[{fp.digest()}] {fp.kind.value} {fp.failure_class.value} exit={fp.exit_code} "
                f"members={len(g.members)} representative={g.representative} ({g.representative_loc} LOC)"
            )
            print(f"    message: {fp.normalized_message or '(none)'}")
        print(f"{len(groups)} unique alerts")
    return EXIT_ALERTS if groups else EXIT_OK


COMMANDS = {"campaign": cmd_campaign, "generate": cmd_generate, "reduce": cmd_reduce, "triage": cmd_triage}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses 2 for usage errors already
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ValueError, GrammarError, GuaranteeUnreachableError) as exc:
        print(f"shgen {args.command}: {exc}", file=sys.stderr)
        return EXIT_SETUP
    except (SpawnError, ScratchSetupError, PoolAborted, OSError) as exc:
        print(f"shgen {args.command}: {exc}", file=sys.stderr)
        return EXIT_SETUP
