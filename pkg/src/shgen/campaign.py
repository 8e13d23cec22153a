"""End-to-end fuzzing campaigns: generate, execute, classify, group, reduce, report."""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
import logging
import os
import shlex
import subprocess
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

from .executor import (
    DEFAULT_TIMEOUT_MS,
    PoolStats,
    Sandbox,
    ShellTarget,
    execute,
    harden_environment,
    run_pool,
)
from .generators import GeneratedScript, GeneratorKind, generate_i, generate_mi, generate_v
from .grammar import MASK64, Grammar, load_grammar, load_shipped, mix64
from .oracle import Category, FailureClass, classify, error_patterns, oracle_for
from .reducer import PASS, FlakyOracleError, NotFailingError, failing_line, reduce
from .triage import Alert, AlertGroup, append_alert, fingerprint, group, read_alert_log

log = logging.getLogger(__name__)

ORDER = (GeneratorKind.V, GeneratorKind.I, GeneratorKind.MI)
KIND_INDEX = {GeneratorKind.V: 0, GeneratorKind.I: 1, GeneratorKind.MI: 2}
HOUR = 3600.0


@dataclass
class GeneratorConfig:
    enabled: bool = True
    size: int | None = None
    procs: int = 1
    time_slice: float = 0.0  # seconds


def _default_generators() -> dict[GeneratorKind, GeneratorConfig]:
    return {
        GeneratorKind.V: GeneratorConfig(True, 500, 100, 4 * HOUR),
        GeneratorKind.I: GeneratorConfig(True, None, 1000, 6 * HOUR),
        GeneratorKind.MI: GeneratorConfig(True, 50, 1000, 2 * HOUR),
    }


@dataclass
class CampaignConfig:
    shell: str = "dash"
    shell_args: tuple[str, ...] = ()
    generators: dict[GeneratorKind, GeneratorConfig] = field(default_factory=_default_generators)
    master_seed: int = 0
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    output_dir: Path = Path("shgen-out")
    reduce: bool = True
    error_pattern_profile: str = ""  # empty: guessed from the shell name
    sanitizer: bool = False
    sanitize_mi: bool = False
    sanitizer_options: dict[str, str] = field(default_factory=dict)
    eval_budget: int = 2000
    count: int | None = None  # smoke mode: scripts per generator instead of time
    grammar_paths: dict[GeneratorKind, Path] = field(default_factory=dict)
    coverage_command: str = ""
    max_spawn_failures: int = 10
    scratch_root: Path | None = None
    keep_all_scripts: bool = False
    reduce_timeouts: bool = False

    @property
    def total_time(self) -> float:
        return sum(g.time_slice for g in self.generators.values() if g.enabled)

    def set_total_time(self, seconds: float) -> None:
        """Rescale the enabled slices so they add up to ``seconds``."""
        enabled = [g for g in self.generators.values() if g.enabled]
        total = sum(g.time_slice for g in enabled)
        for g in enabled:
            g.time_slice = seconds * (g.time_slice / total if total else 1 / len(enabled))

    def validate(self) -> None:
        if not any(g.enabled for g in self.generators.values()):
            raise ValueError("no generator enabled")
        for kind, g in self.generators.items():
            if not g.enabled:
                continue
            if g.procs < 1:
                raise ValueError(f"procs for {kind.value} must be >= 1")
            if kind is GeneratorKind.I and g.size is not None:
                raise ValueError("generator I takes no size")
            if kind is not GeneratorKind.I and (g.size is None or g.size < 1):
                raise ValueError(f"generator {kind.value} needs a size >= 1")
            if self.count is None and g.time_slice <= 0:
                raise ValueError(f"generator {kind.value} has no time slice")
        if self.count is not None and self.count < 0:
            raise ValueError("count must be >= 0")
        if self.timeout_ms <= 0:
            raise ValueError("timeout must be positive")
        if self.master_seed < 0 or self.master_seed > MASK64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def to_dict(self) -> dict:
        return {
            "shell": self.shell,
            "shell_args": list(self.shell_args),
            "generators": {
                k.value: dataclasses.asdict(g) for k, g in self.generators.items()
            },
            "master_seed": self.master_seed,
            "timeout_ms": self.timeout_ms,
            "output_dir": str(self.output_dir),
            "reduce": self.reduce,
            "error_pattern_profile": self.error_pattern_profile,
            "sanitizer": self.sanitizer,
            "sanitize_mi": self.sanitize_mi,
            "eval_budget": self.eval_budget,
            "count": self.count,
            "grammar_paths": {k.value: str(p) for k, p in self.grammar_paths.items()},
            "coverage_command": self.coverage_command,
        }


# -- config files ------------------------------------------------------------------

_BOOL = {"1": True, "true": True, "yes": True, "on": True, "0": False, "false": False, "no": False, "off": False}


def _to_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    try:
        return _BOOL[str(value).strip().lower()]
    except KeyError:
        raise ValueError(f"not a boolean: {value!r}") from None


def apply_settings(config: CampaignConfig, settings: dict) -> CampaignConfig:
    """Override defaults from a flat key/value mapping."""
    gens = config.generators
    for key, value in settings.items():
        key = key.strip().lower().replace("-", "_")
        if value is None:
            continue
        if key == "shell":
            config.shell = str(value)
        elif key == "shell_args":
            config.shell_args = tuple(shlex.split(value) if isinstance(value, str) else value)
        elif key in ("seed", "master_seed"):
            config.master_seed = int(value, 0) if isinstance(value, str) else int(value)
        elif key == "timeout_ms":
            config.timeout_ms = int(value)
        elif key in ("out", "output_dir"):
            config.output_dir = Path(value)
        elif key == "reduce":
            config.reduce = _to_bool(value)
        elif key in ("error_profile", "error_pattern_profile"):
            config.error_pattern_profile = str(value)
        elif key == "sanitizer":
            config.sanitizer = _to_bool(value)
        elif key == "sanitize_mi":
            config.sanitize_mi = _to_bool(value)
        elif key.startswith("sanitizer_option_"):
            config.sanitizer_options[key[len("sanitizer_option_"):].upper()] = str(value)
        elif key == "eval_budget":
            config.eval_budget = int(value)
        elif key == "count":
            config.count = int(value)
        elif key == "time":
            config.set_total_time(float(value))
        elif key == "generators":
            names = value if isinstance(value, list) else str(value).split(",")
            wanted = {GeneratorKind.parse(n) for n in names if n.strip()}
            for kind, g in gens.items():
                g.enabled = kind in wanted
        elif key == "coverage_command":
            config.coverage_command = str(value)
        elif key == "max_spawn_failures":
            config.max_spawn_failures = int(value)
        elif key == "scratch":
            config.scratch_root = Path(value)
        elif key == "keep_all_scripts":
            config.keep_all_scripts = _to_bool(value)
        elif key == "reduce_timeouts":
            config.reduce_timeouts = _to_bool(value)
        else:
            field_name, _, gen = key.rpartition("_")
            if gen not in ("v", "i", "mi"):
                raise ValueError(f"unknown setting {key!r}")
            kind = GeneratorKind.parse(gen)
            g = gens[kind]
            if field_name == "procs":
                g.procs = int(value)
            elif field_name == "size":
                g.size = int(value)
            elif field_name == "time":
                g.time_slice = float(value)
            elif field_name == "enabled":
                g.enabled = _to_bool(value)
            elif field_name == "grammar":
                config.grammar_paths[kind] = Path(value)
            else:
                raise ValueError(f"unknown setting {key!r}")
    return config


def load_config_file(path: Path | str, config: CampaignConfig | None = None) -> CampaignConfig:
    """Read a flat JSON object or ``key = value`` lines."""
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        settings = json.loads(text)
    else:
        parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
        parser.optionxform = str
        parser.read_string("[campaign]\n" + text)
        settings = dict(parser["campaign"])
    return apply_settings(config or CampaignConfig(), settings)


# -- scheduling and seeds -------------------------------------------------------------


def schedule(config: CampaignConfig) -> list[tuple[GeneratorKind, float]]:
    """Enabled generators in V, I, MI order with their slices.

    In smoke mode the slice is the script count.
    """
    out = []
    for kind in ORDER:
        g = config.generators.get(kind)
        if g and g.enabled:
            out.append((kind, float(config.count) if config.count is not None else g.time_slice))
    return out


def derive_seed(master_seed: int, kind: GeneratorKind, ordinal: int) -> int:
    """Per-script seed; injective in (kind, ordinal) for ordinals below 2**60."""
    if not 0 <= ordinal < 1 << 60:
        raise ValueError("ordinal out of range")
    key = (KIND_INDEX[GeneratorKind(kind)] << 60) | ordinal
    return mix64((mix64(master_seed) + key) & MASK64)


def load_grammars(config: CampaignConfig) -> dict[GeneratorKind, Grammar]:
    grammars = {}
    for kind in ORDER:
        path = config.grammar_paths.get(kind)
        grammars[kind] = load_grammar(Path(path)) if path else load_shipped(kind.value)
    return grammars


def generate(kind: GeneratorKind, grammar: Grammar, size: int | None, seed: int, sid: str | None = None) -> GeneratedScript:
    if kind is GeneratorKind.V:
        return generate_v(grammar, size, seed, sid)
    if kind is GeneratorKind.I:
        return generate_i(grammar, seed, sid)
    return generate_mi(grammar, size, seed, sid)


def script_name(kind: GeneratorKind, ordinal: int) -> str:
    return f"{kind.value.lower()}-{ordinal:07d}"


# -- reporting ---------------------------------------------------------------------


@dataclass
class Counts:
    executed: int = 0
    alerts: int = 0
    unique: int = 0
    logic: int = 0
    memory: int = 0
    spawn_failures: int = 0


@dataclass
class Report:
    per_generator: dict[str, Counts]
    overall: Counts
    groups: list[dict]
    timing: dict[str, float]
    master_seed: int
    config: dict
    scripts_digest: dict[str, str]
    coverage: str | None = None

    def to_dict(self) -> dict:
        return {
            "per_generator": {k: dataclasses.asdict(v) for k, v in self.per_generator.items()},
            "overall": dataclasses.asdict(self.overall),
            "groups": self.groups,
            "timing": self.timing,
            "master_seed": self.master_seed,
            "config": self.config,
            "scripts_digest": self.scripts_digest,
            "coverage": self.coverage,
        }

    def fingerprints(self) -> list[dict]:
        return [g["fingerprint"] for g in self.groups]

    def render_text(self) -> str:
        lines = [f"master seed: {self.master_seed}", ""]
        header = f"{'generator':<10}{'executed':>10}{'alerts':>10}{'unique':>8}{'logic':>8}{'memory':>8}"
        lines.append(header)
        rows = list(self.per_generator.items()) + [("total", self.overall)]
        for name, c in rows:
            lines.append(f"{name:<10}{c.executed:>10}{c.alerts:>10}{c.unique:>8}{c.logic:>8}{c.memory:>8}")
        lines.append("")
        for g in self.groups:
            fp = g["fingerprint"]
            lines.append(
                f"[{g['digest']}] {fp['kind']} {fp['failure_class']} exit={fp['exit_code']} "
                f"members={g['members']} representative={g['representative']} ({g['representative_loc']} LOC)"
            )
            lines.append(f"    message: {fp['normalized_message'] or '(none)'}")
            if g.get("reduced_path"):
                lines.append(f"    reduced: {g['reduced_path']} ({g['reduced_loc']} LOC)")
        for name, seconds in self.timing.items():
            lines.append(f"time {name}: {seconds:.1f}s")
        if self.coverage is not None:
            lines.append(f"coverage: {self.coverage}")
        return "\n".join(lines) + "\n"


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def execution_oracle(kind, target, expectation, timeout_ms, sandbox, identifiers=()):
    """Reduction oracle: run a candidate and return its fingerprint, or PASS."""

    def oracle(text: str):
        result = execute(text, target, timeout_ms, sandbox)
        verdict = classify(result, expectation, identifiers)
        if not verdict.is_alert:
            return PASS
        return fingerprint(Alert("candidate", kind, verdict, result.exit_code, verdict.message, 0))

    return oracle


# -- the campaign ----------------------------------------------------------------------


class Campaign:
    def __init__(self, config: CampaignConfig, sandbox: Sandbox | None = None):
        config.validate()
        self.config = config
        self.out = Path(config.output_dir)
        self.grammars = load_grammars(config)
        self.target = ShellTarget.resolve(
            config.shell,
            extra_args=config.shell_args,
            error_pattern_profile=config.error_pattern_profile,
        )
        self.target.check()
        self.patterns = error_patterns(self.target.error_pattern_profile)
        max_procs = max(g.procs for g in config.generators.values() if g.enabled)
        self.sandbox = sandbox or harden_environment(config.scratch_root, max_parallel=max_procs)
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / "alerts").mkdir(exist_ok=True)
        self.alert_log = self.out / "alerts.jsonl"
        self.alert_log.write_text("")
        self.counts = {kind.value: Counts() for kind in ORDER}
        self.digests: dict[str, str] = {}
        self.timing: dict[str, float] = {}

    def target_for(self, kind: GeneratorKind) -> ShellTarget:
        sanitize = self.config.sanitizer and (kind is not GeneratorKind.MI or self.config.sanitize_mi)
        env = dict(self.target.sanitizer_env)
        env.update(self.config.sanitizer_options)
        return dataclasses.replace(self.target, sanitizer_enabled=sanitize, sanitizer_env=env)

    def _scripts(self, kind: GeneratorKind, budget: float, live: dict, digest) -> Iterator[GeneratedScript]:
        g = self.config.generators[kind]
        grammar = self.grammars[kind]
        deadline = time.monotonic() + budget
        ordinal = 0
        while True:
            if self.config.count is not None:
                if ordinal >= self.config.count:
                    return
            elif time.monotonic() >= deadline:
                return
            seed = derive_seed(self.config.master_seed, kind, ordinal)
            script = generate(kind, grammar, g.size, seed, script_name(kind, ordinal))
            digest.update(script.id.encode() + b"\0" + script.text.encode() + b"\0")
            if self.config.keep_all_scripts:
                scripts_dir = self.out / "scripts"
                scripts_dir.mkdir(exist_ok=True)
                (scripts_dir / f"{script.id}.sh").write_text(script.text, encoding="utf-8")
            live[script.id] = script
            ordinal += 1
            yield script

    def run_slice(self, kind: GeneratorKind, budget: float) -> None:
        g = self.config.generators[kind]
        counts = self.counts[kind.value]
        target = self.target_for(kind)
        expectation = oracle_for(kind, self.patterns)
        live: dict[str, GeneratedScript] = {}
        digest = hashlib.sha256()
        stats = PoolStats()
        started = time.monotonic()
        for sid, result in run_pool(
            self._scripts(kind, budget, live, digest),
            target,
            g.procs,
            self.config.timeout_ms,
            self.sandbox,
            self.config.max_spawn_failures,
            stats,
        ):
            script = live.pop(sid)
            if result is None:
                counts.spawn_failures += 1
                continue
            counts.executed += 1
            verdict = classify(result, expectation, script.identifiers)
            if not verdict.is_alert:
                continue
            self._record_alert(kind, script, result, verdict)
        self.timing[kind.value] = time.monotonic() - started
        self.digests[kind.value] = digest.hexdigest()

    def _record_alert(self, kind, script: GeneratedScript, result, verdict) -> None:
        path = self.out / "alerts" / f"{script.id}.sh"
        path.write_text(script.text, encoding="utf-8")
        stderr = result.stderr.decode("utf-8", errors="replace")
        sidecar = {
            "id": script.id,
            "kind": kind.value,
            "seed": script.seed,
            "statement_spans": [list(s) for s in script.trace.statement_spans],
            "invalid_spans": [list(s) for s in script.trace.invalid_spans],
            "mutations": [m.to_dict() for m in script.mutations],
            "identifiers": list(script.identifiers),
            "failing_line": failing_line(stderr) if not result.timed_out else None,
            "exit_code": result.exit_code,
            "stderr": stderr[:4096],
        }
        path.with_suffix(".json").write_text(json.dumps(sidecar, indent=1), encoding="utf-8")
        alert = Alert(
            script_id=script.id,
            kind=kind,
            verdict=verdict,
            exit_code=result.exit_code,
            normalized_message=verdict.message,
            loc=script.loc,
            script_path=str(path),
        )
        append_alert(self.alert_log, alert, ts=time.time(), slice=kind.value)

    def make_oracle(self, kind: GeneratorKind, identifiers=()):
        return execution_oracle(
            kind, self.target_for(kind), oracle_for(kind, self.patterns),
            self.config.timeout_ms, self.sandbox, identifiers,
        )

    def reduce_group(self, grp: AlertGroup) -> None:
        fp = grp.fingerprint
        script_path = Path(grp.representative_path)
        sidecar = json.loads(script_path.with_suffix(".json").read_text(encoding="utf-8"))
        text = script_path.read_text(encoding="utf-8")
        protected = [tuple(s) for s in sidecar["invalid_spans"]]
        protected += [tuple(m["target_span"]) for m in sidecar["mutations"]]
        if fp.kind is GeneratorKind.V and sidecar.get("failing_line"):
            protected.append((sidecar["failing_line"], sidecar["failing_line"]))
        oracle = self.make_oracle(fp.kind, tuple(sidecar.get("identifiers", ())))
        try:
            outcome = reduce(
                text,
                oracle,
                statement_spans=[tuple(s) for s in sidecar["statement_spans"]],
                protected_spans=protected,
                budget=self.config.eval_budget,
            )
        except (FlakyOracleError, NotFailingError) as exc:  # keep the original
            log.warning("reduction of %s skipped: %s", grp.representative, exc)
            grp.extra["reduction_error"] = str(exc)
            return
        if outcome.signature != fp:
            grp.extra["reduction_error"] = "signature differs from the logged fingerprint"
            return
        reduced_path = self.out / f"{fp.digest()}.reduced.sh"
        reduced_path.write_text(outcome.reduced_text, encoding="utf-8")
        grp.reduced = outcome.reduced_text
        grp.reduced_path = str(reduced_path)
        grp.extra.update(
            reduced_loc=outcome.reduced_loc,
            oracle_evaluations=outcome.oracle_evaluations,
            budget_exceeded=outcome.budget_exceeded,
            reduction_steps=len(outcome.steps),
        )

    def run(self) -> Report:
        for kind, budget in schedule(self.config):
            log.info("running generator %s for %s", kind.value, budget)
            self.run_slice(kind, budget)
        alerts = read_alert_log(self.alert_log)
        groups = group(alerts)
        if self.config.reduce:
            started = time.monotonic()
            for grp in groups:
                if grp.fingerprint.failure_class is FailureClass.TIMEOUT and not self.config.reduce_timeouts:
                    continue
                self.reduce_group(grp)
            self.timing["reduction"] = time.monotonic() - started
        return self.report(alerts, groups)

    def report(self, alerts: list[Alert], groups: list[AlertGroup]) -> Report:
        for a in alerts:
            c = self.counts[a.kind.value]
            c.alerts += 1
            if a.verdict.category is Category.MEMORY:
                c.memory += 1
            else:
                c.logic += 1
        for grp in groups:
            self.counts[grp.fingerprint.kind.value].unique += 1
        overall = Counts()
        for c in self.counts.values():
            for f in dataclasses.fields(Counts):
                setattr(overall, f.name, getattr(overall, f.name) + getattr(c, f.name))
        group_dicts = []
        for grp in groups:
            entry = {
                "fingerprint": grp.fingerprint.to_dict(),
                "digest": grp.fingerprint.digest(),
                "members": len(grp.members),
                "member_ids": grp.members,
                "representative": grp.representative,
                "representative_path": grp.representative_path,
                "representative_loc": grp.representative_loc,
                "reduced_path": grp.reduced_path,
                "reduced_loc": grp.extra.get("reduced_loc"),
            }
            entry.update({k: v for k, v in grp.extra.items() if k != "reduced_loc"})
            group_dicts.append(entry)
        enabled = [k.value for k, _ in schedule(self.config)]
        report = Report(
            per_generator={k: v for k, v in self.counts.items() if k in enabled},
            overall=overall,
            groups=group_dicts,
            timing=self.timing,
            master_seed=self.config.master_seed,
            config=self.config.to_dict(),
            scripts_digest=self.digests,
            coverage=run_coverage_hook(self.config.coverage_command),
        )
        _atomic_write(self.out / "report.json", json.dumps(report.to_dict(), indent=1, sort_keys=True))
        _atomic_write(self.out / "report.txt", report.render_text())
        return report


def run_coverage_hook(command: str) -> str | None:
    """Run the operator's coverage command; keep its first output line."""
    if not command:
        return None
    try:
        proc = subprocess.run(command, shell=True, capture_output=True, text=True, timeout=600)
    except subprocess.TimeoutExpired:
        return "coverage command timed out"
    first = proc.stdout.strip().splitlines()
    return first[0] if first else ""


def run_campaign(config: CampaignConfig, sandbox: Sandbox | None = None) -> Report:
    return Campaign(config, sandbox).run()
