import shutil
import subprocess
from dataclasses import dataclass, field

import pytest
from hypothesis import given, settings, strategies as st

from conftest import DATA, needs_dash
from shgen.generators import GeneratorKind
from shgen.oracle import (
    ACCEPTS_INVALID,
    ERROR_PATTERNS,
    REJECTS_VALID,
    SILENT_REJECTION,
    TIMEOUT,
    Category,
    ExitClass,
    FailureClass,
    OracleExpectation,
    Outcome,
    SanitizerFinding,
    SanitizerTool,
    StderrMode,
    Verdict,
    classify,
    error_patterns,
    exit_class_of,
    normalize_message,
    oracle_for,
    parse_sanitizer,
    profile_for_shell,
)


@dataclass
class Result:
    exit_code: object = 0
    stderr: bytes = b""
    timed_out: bool = False
    sanitizer_findings: list = field(default_factory=list)
    script_path: str = "script.sh"


V = oracle_for(GeneratorKind.V)
I = oracle_for(GeneratorKind.I)  # noqa: E741


def test_expectation_needs_patterns():
    with pytest.raises(ValueError):
        OracleExpectation(ExitClass.ZERO, StderrMode.MUST_NOT_MATCH_ERROR, ())


def test_default_patterns():
    assert set(ERROR_PATTERNS) == {
        "syntax error", "unexpected", "not found", "bad substitution", "cannot", "parse error", "arithmetic",
    }


def test_profiles():
    assert profile_for_shell("/usr/bin/dash") == "dash"
    assert profile_for_shell("/opt/mksh") == "ksh"
    assert profile_for_shell("/bin/zsh") == "default"
    assert set(ERROR_PATTERNS) <= set(error_patterns("bash"))
    with pytest.raises(ValueError):
        error_patterns("fish")


def test_v_clean_run_passes():
    assert classify(Result(0, b""), V) == Verdict(Outcome.PASS, Category.NONE)


def test_v_nonzero_exit_is_logic_alert():
    v = classify(Result(2, b"script.sh: 4: arithmetic expression: division by zero"), V)
    assert (v.outcome, v.category, v.detail) == (Outcome.ALERT, Category.LOGIC, REJECTS_VALID)
    assert v.failure_class is FailureClass.EXIT_MISMATCH


def test_v_clean_stderr_but_nonzero_exit_is_alert():
    v = classify(Result(1, b""), V)
    assert v.failure_class is FailureClass.EXIT_MISMATCH


def test_v_error_message_with_zero_exit():
    v = classify(Result(0, b"script.sh: 3: foo: not found\n"), V)
    assert v.failure_class is FailureClass.MESSAGE_MISMATCH
    assert v.category is Category.LOGIC


def test_i_accepted_silently():
    v = classify(Result(0, b""), I)
    assert (v.outcome, v.category, v.detail) == (Outcome.ALERT, Category.LOGIC, ACCEPTS_INVALID)


def test_i_rejected_without_message():
    v = classify(Result(1, b""), I)
    assert v.failure_class is FailureClass.MESSAGE_MISMATCH
    assert v.detail == SILENT_REJECTION


def test_i_rejected_with_message_passes():
    assert not classify(Result(2, b"script.sh: 1: Syntax error: \"(\" unexpected\n"), I).is_alert


def test_timeout_is_logic():
    v = classify(Result("signaled(9)", b"", timed_out=True), V)
    assert (v.category, v.detail, v.failure_class) == (Category.LOGIC, TIMEOUT, FailureClass.TIMEOUT)


@pytest.mark.parametrize("expectation", [V, I])
@pytest.mark.parametrize("exit_code", [0, 2, "signaled(6)"])
def test_sanitizer_dominates(expectation, exit_code):
    finding = SanitizerFinding(SanitizerTool.ADDRESS, "heap-buffer-overflow", "main")
    v = classify(Result(exit_code, b"", timed_out=True, sanitizer_findings=[finding]), expectation)
    assert v.category is Category.MEMORY
    assert v.failure_class is FailureClass.SANITIZER_ADDRESS
    assert v.detail == finding.id


def test_verdict_invariants_hold_for_classify():
    for code in (0, 1, 2, "signaled(9)"):
        for err in (b"", b"syntax error"):
            for exp in (V, I):
                v = classify(Result(code, err), exp)
                assert (v.outcome is Outcome.PASS) == (v.category is Category.NONE)


def test_exit_class():
    assert exit_class_of(0) is ExitClass.ZERO
    assert exit_class_of(2) is ExitClass.NONZERO
    assert exit_class_of("signaled(9)") is ExitClass.NONZERO


# -- sanitizer reports ------------------------------------------------------


def test_no_markers():
    assert parse_sanitizer(b"script.sh: 1: Syntax error\n") == []


def test_asan_fixture():
    findings = parse_sanitizer((DATA / "asan_heap_buffer_overflow.txt").read_bytes())
    assert findings == [SanitizerFinding(SanitizerTool.ADDRESS, "heap-buffer-overflow", "main")]


def test_lsan_fixture():
    findings = parse_sanitizer((DATA / "lsan_detected_leaks.txt").read_bytes())
    assert findings == [SanitizerFinding(SanitizerTool.LEAK, "detected-memory-leaks", "main")]


def test_malformed_block():
    (f,) = parse_sanitizer("==1==ERROR: AddressSanitizer:\n")
    assert f.kind == "unparsed-sanitizer-report"


def test_two_blocks():
    text = (DATA / "asan_heap_buffer_overflow.txt").read_text() + (DATA / "lsan_detected_leaks.txt").read_text()
    assert [f.tool for f in parse_sanitizer(text)] == [SanitizerTool.ADDRESS, SanitizerTool.LEAK]


HBO_C = """#include <stdlib.h>
int main(int argc, char **argv) {
    char *p = malloc(8);
    p[8 + argc] = 1;
    return 0;
}
"""

LEAK_C = """#include <stdlib.h>
#include <string.h>
int main(void) {
    char *p = malloc(16);
    strcpy(p, "leak");
    p = 0;
    return 0;
}
"""


@pytest.mark.skipif(shutil.which("gcc") is None, reason="gcc not installed")
@pytest.mark.parametrize(
    "source,tool,kind",
    [(HBO_C, SanitizerTool.ADDRESS, "heap-buffer-overflow"), (LEAK_C, SanitizerTool.LEAK, "detected-memory-leaks")],
)
def test_live_sanitizer_reports(tmp_path, source, tool, kind):
    src = tmp_path / "prog.c"
    src.write_text(source)
    exe = tmp_path / "prog"
    build = subprocess.run(
        ["gcc", "-g", "-O0", "-fsanitize=address", str(src), "-o", str(exe)], capture_output=True
    )
    if build.returncode:
        pytest.skip("address sanitizer unavailable")
    run = subprocess.run([str(exe)], capture_output=True, env={"ASAN_OPTIONS": "detect_leaks=1"})
    if b"Sanitizer" not in run.stderr:
        pytest.skip("sanitizer runtime did not report (ptrace or personality restrictions)")
    assert parse_sanitizer(run.stderr) == [SanitizerFinding(tool, kind, "main")]


# -- normalization -------------------------------------------------------------


def test_normalize_examples():
    assert normalize_message(b"/tmp/s123.sh: line 7: syntax error near 'done'", "/tmp/s123.sh") == (
        "<script>: line <n>: syntax error near '<id>'"
    )
    assert normalize_message(b"") == ""


def test_normalize_dash_style():
    assert normalize_message("script.sh: 12: Syntax error: word unexpected", "/x/y/script.sh") == (
        "<script>: <n>: syntax error: word unexpected"
    )


def test_normalize_identifiers_and_numbers():
    msg = "script.sh: 3: fnAb: not found; 4096 bytes"
    assert normalize_message(msg, "script.sh", identifiers=["fnAb"]) == "<script>: <n>: <id>: not found; <num> bytes"


def test_normalize_first_line_only():
    assert normalize_message("=====\n\nfirst: 1\nsecond\n") == "first: <num>"


@needs_dash
def test_same_error_from_different_paths_normalizes_equal(tmp_path, dash):
    text = "echo ok;\nfor x in a b;\n echo $x;\ndone\n"
    messages = []
    for sub, pad in (("a", ""), ("deeper/dir", "\n\n\n")):
        d = tmp_path / sub
        d.mkdir(parents=True)
        path = d / "s1.sh"
        path.write_text(pad + text)
        proc = subprocess.run([str(dash.binary_path), str(path)], capture_output=True)
        assert proc.returncode != 0
        messages.append(normalize_message(proc.stderr, path))
    assert messages[0] == messages[1]
    assert "<script>" in messages[0]


@settings(max_examples=300, deadline=None)
@given(st.text(alphabet=st.characters(min_codepoint=32, max_codepoint=126), max_size=80))
def test_normalize_idempotent(text):
    once = normalize_message(text, "script.sh")
    assert normalize_message(once, "script.sh") == once


@settings(max_examples=200, deadline=None)
@given(
    code=st.one_of(st.integers(-2, 300), st.just("signaled(9)")),
    err=st.binary(max_size=60),
    timed_out=st.booleans(),
)
def test_classify_total_and_deterministic(code, err, timed_out):
    for exp in (V, I):
        r = Result(code, err, timed_out)
        assert classify(r, exp) == classify(r, exp)
