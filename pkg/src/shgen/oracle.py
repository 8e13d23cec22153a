"""Pass/alert classification, sanitizer report parsing and message normalization."""

from __future__ import annotations

import enum
import os
import re
from dataclasses import dataclass

from .generators import GeneratorKind

ERROR_PATTERNS = (
    "syntax error",
    "unexpected",
    "not found",
    "bad substitution",
    "cannot",
    "parse error",
    "arithmetic",
)

# Extra indicators per shell family, added to the defaults.
SHELL_PROFILES: dict[str, tuple[str, ...]] = {
    "default": ERROR_PATTERNS,
    "dash": ERROR_PATTERNS + ("illegal number", "illegal option", "missing", "can't"),
    "bash": ERROR_PATTERNS + ("invalid", "operand expected", "division by", "error token"),
    "ksh": ERROR_PATTERNS + ("bad number", "missing", "can't", "unknown"),
}


def profile_for_shell(binary: str | os.PathLike) -> str:
    """Guess the error-pattern profile from the shell binary's name."""
    name = os.path.basename(os.fspath(binary)).lower()
    for profile in ("dash", "bash", "ksh"):
        if profile in name:
            return profile
    return "default"


def error_patterns(profile: str) -> tuple[str, ...]:
    try:
        return SHELL_PROFILES[profile]
    except KeyError:
        raise ValueError(
            f"unknown error-pattern profile {profile!r} (known: {', '.join(SHELL_PROFILES)})"
        ) from None


class ExitClass(str, enum.Enum):
    ZERO = "ZERO"
    NONZERO = "NONZERO"


class StderrMode(str, enum.Enum):
    MUST_MATCH_ERROR = "MustMatchError"
    MUST_NOT_MATCH_ERROR = "MustNotMatchError"


class Outcome(str, enum.Enum):
    PASS = "Pass"
    ALERT = "Alert"


class Category(str, enum.Enum):
    LOGIC = "Logic"
    MEMORY = "Memory"
    NONE = "None"


class FailureClass(str, enum.Enum):
    EXIT_MISMATCH = "OracleExitMismatch"
    MESSAGE_MISMATCH = "OracleMessageMismatch"
    SANITIZER_ADDRESS = "SanitizerAddress"
    SANITIZER_LEAK = "SanitizerLeak"
    TIMEOUT = "Timeout"


class SanitizerTool(str, enum.Enum):
    ADDRESS = "Address"
    LEAK = "Leak"


@dataclass(frozen=True)
class OracleExpectation:
    exit_class: ExitClass
    stderr_mode: StderrMode
    error_patterns: tuple[str, ...] = ERROR_PATTERNS

    def __post_init__(self):
        if not self.error_patterns:
            raise ValueError("error_patterns must be non-empty")


@dataclass(frozen=True)
class SanitizerFinding:
    tool: SanitizerTool
    kind: str
    top_frame: str = "unknown"

    @property
    def id(self) -> str:
        return f"{self.tool.value.lower()}:{self.kind}@{self.top_frame}"


@dataclass(frozen=True)
class Verdict:
    outcome: Outcome
    category: Category
    detail: str = ""
    failure_class: FailureClass | None = None
    message: str = ""

    @property
    def is_alert(self) -> bool:
        return self.outcome is Outcome.ALERT


PASS = Verdict(Outcome.PASS, Category.NONE)

ACCEPTS_INVALID = "shell accepts invalid program"
REJECTS_VALID = "shell rejects syntactically valid program"
SILENT_REJECTION = "shell rejects invalid program without an error message"
TIMEOUT = "timeout"


def oracle_for(kind: GeneratorKind, patterns: tuple[str, ...] = ERROR_PATTERNS) -> OracleExpectation:
    """The oracle paired with each generator."""
    if GeneratorKind(kind) is GeneratorKind.V:
        return OracleExpectation(ExitClass.ZERO, StderrMode.MUST_NOT_MATCH_ERROR, tuple(patterns))
    return OracleExpectation(ExitClass.NONZERO, StderrMode.MUST_MATCH_ERROR, tuple(patterns))


# -- sanitizer reports ---------------------------------------------------------

_REPORT_RE = re.compile(r"ERROR: (AddressSanitizer|LeakSanitizer)\b:?[ \t]*([^\n]*)")
_FRAME_RE = re.compile(r"^\s*#(\d+)\s+0x[0-9a-fA-F]+\s+in\s+(\S+)", re.M)
_INTERNAL_FRAMES = re.compile(
    r"^(__interceptor_|__asan_|__lsan_|__sanitizer|__interceptor|_?_?wrap_|"
    r"malloc$|calloc$|realloc$|free$|strdup$|strndup$|reallocarray$|"
    r"operator$|posix_memalign$|aligned_alloc$|memalign$|valloc$|"
    r"mem(cpy|move|set|cmp)$|str(cpy|ncpy|cat|ncat|len|cmp)$)"
)


def _as_text(data: bytes | str) -> str:
    if isinstance(data, bytes):
        return data.decode("utf-8", errors="replace")
    return data


def _top_frame(block: str) -> str:
    for m in _FRAME_RE.finditer(block):
        name = m.group(2)
        if not _INTERNAL_FRAMES.match(name):
            return name.split("(")[0]
    return "unknown"


def parse_sanitizer(stderr: bytes | str) -> list[SanitizerFinding]:
    """One finding per AddressSanitizer/LeakSanitizer ``ERROR:`` block."""
    text = _as_text(stderr)
    markers = list(_REPORT_RE.finditer(text))
    findings = []
    for i, m in enumerate(markers):
        block_end = markers[i + 1].start() if i + 1 < len(markers) else len(text)
        block = text[m.end():block_end]
        tool = SanitizerTool.ADDRESS if m.group(1) == "AddressSanitizer" else SanitizerTool.LEAK
        headline = m.group(2).strip()
        if tool is SanitizerTool.LEAK:
            kind = "detected-memory-leaks" if "detected memory leaks" in headline else ""
        else:
            word = re.match(r"([A-Za-z][\w-]*)", headline)
            kind = word.group(1).lower() if word else ""
        if not kind:
            findings.append(SanitizerFinding(tool, "unparsed-sanitizer-report", "unknown"))
            continue
        findings.append(SanitizerFinding(tool, kind, _top_frame(block)))
    return findings


# -- message normalization --------------------------------------------------------

_SEPARATOR_RE = re.compile(r"^[\s=\-_*#~]*$")
_QUOTED_WORD_RE = re.compile(r"""(['"`])([A-Za-z_][A-Za-z0-9_]*)(['"])""")


def normalize_message(
    stderr: bytes | str,
    script_path: str | os.PathLike | None = None,
    identifiers: tuple[str, ...] | list[str] = (),
) -> str:
    """Stable, comparable form of the first error line of a shell's stderr."""
    text = _as_text(stderr)
    line = next(
        (ln.strip() for ln in text.splitlines() if ln.strip() and not _SEPARATOR_RE.match(ln)),
        "",
    )
    if not line:
        return ""
    if script_path is not None:
        path = os.fspath(script_path)
        for form in sorted({path, os.path.basename(path)}, key=len, reverse=True):
            if form:
                line = line.replace(form, "\0")
    line = line.lower().replace("\0", "<script>")
    line = re.sub(r"\bline \d+", "line <n>", line)
    line = re.sub(r"(<script>:?\s*)\d+(?=:)", r"\1<n>", line)
    line = re.sub(r"(<script>\[)\d+(\])", r"\1<n>\2", line)
    line = re.sub(r"(<script>:<n>):\d+", r"\1:<n>", line)
    line = _QUOTED_WORD_RE.sub(lambda m: f"{m.group(1)}<id>{m.group(3)}", line)
    for ident in sorted({i.lower() for i in identifiers if i}, key=len, reverse=True):
        line = re.sub(rf"(?<![\w<]){re.escape(ident)}(?![\w>])", "<id>", line)
    line = re.sub(r"\d+", "<num>", line)
    return line


def _matches_error(stderr: str, patterns: tuple[str, ...]) -> bool:
    low = stderr.lower()
    return any(p.lower() in low for p in patterns)


def exit_class_of(exit_code) -> ExitClass:
    return ExitClass.ZERO if exit_code == 0 else ExitClass.NONZERO


def classify(result, expectation: OracleExpectation, identifiers=()) -> Verdict:
    """Verdict for one execution result.

    Sanitizer findings dominate, then timeouts, then the exit-class check,
    then the stderr check.
    """
    stderr = _as_text(getattr(result, "stderr", b"") or b"")
    findings = list(getattr(result, "sanitizer_findings", ()) or ())
    script_path = getattr(result, "script_path", None)
    if findings:
        first = findings[0]
        fc = FailureClass.SANITIZER_ADDRESS if first.tool is SanitizerTool.ADDRESS else FailureClass.SANITIZER_LEAK
        return Verdict(
            Outcome.ALERT, Category.MEMORY, first.id, fc, f"{first.kind} in {first.top_frame}"
        )
    if getattr(result, "timed_out", False):
        return Verdict(Outcome.ALERT, Category.LOGIC, TIMEOUT, FailureClass.TIMEOUT, TIMEOUT)

    message = normalize_message(stderr, script_path, identifiers)
    expect_zero = expectation.exit_class is ExitClass.ZERO
    violation = REJECTS_VALID if expect_zero else ACCEPTS_INVALID
    if exit_class_of(result.exit_code) is not expectation.exit_class:
        return Verdict(Outcome.ALERT, Category.LOGIC, violation, FailureClass.EXIT_MISMATCH, message)
    has_error = _matches_error(stderr, expectation.error_patterns)
    if expectation.stderr_mode is StderrMode.MUST_NOT_MATCH_ERROR and has_error:
        return Verdict(Outcome.ALERT, Category.LOGIC, violation, FailureClass.MESSAGE_MISMATCH, message)
    if expectation.stderr_mode is StderrMode.MUST_MATCH_ERROR and not has_error:
        detail = SILENT_REJECTION if not expect_zero else violation
        return Verdict(Outcome.ALERT, Category.LOGIC, detail, FailureClass.MESSAGE_MISMATCH, message)
    return PASS
