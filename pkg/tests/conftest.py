import os
import shutil
import stat
import sys
import tempfile
from pathlib import Path

import pytest

from shgen.executor import ShellTarget, harden_environment
from shgen.grammar import load_shipped

DATA = Path(__file__).parent / "data"
DASH = shutil.which("dash")
BASH = shutil.which("bash")

needs_dash = pytest.mark.skipif(DASH is None, reason="dash not installed")
needs_bash = pytest.mark.skipif(BASH is None, reason="bash not installed")


@pytest.fixture(scope="session")
def public_tmp():
    """A world-traversable temp dir; shells run as nobody when we are root."""
    path = Path(tempfile.mkdtemp(prefix="shgen-test-"))
    os.chmod(path, 0o755)
    yield path
    shutil.rmtree(path, ignore_errors=True)


@pytest.fixture(scope="session")
def sandbox(public_tmp):
    return harden_environment(public_tmp / "scratch", max_parallel=16)


@pytest.fixture(scope="session")
def dash():
    if DASH is None:
        pytest.skip("dash not installed")
    return ShellTarget.resolve(DASH)


@pytest.fixture(scope="session")
def grammars():
    return {name: load_shipped(name) for name in ("v", "i", "mi")}


def write_stub_shell(directory: Path, body: str, name: str = "stubsh") -> Path:
    """A python script acting as a shell; argv[1] is the script file."""
    path = directory / name
    path.write_text(f"#!{sys.executable}\n{body}")
    path.chmod(path.stat().st_mode | stat.S_IXUSR | stat.S_IXGRP | stat.S_IXOTH | stat.S_IRGRP | stat.S_IROTH)
    return path


# Deterministic stand-in for a shell: the outcome depends only on the script bytes.
STUB_BODY = '''\
import sys
path = sys.argv[-1]
lines = open(path, encoding="utf-8", errors="replace").read().split("\\n")
hits = [i for i, line in enumerate(lines, 1) if "case " in line]
if hits:
    sys.stderr.write(f"{path}: line {hits[0]}: syntax error: unexpected case\\n")
    sys.exit(2)
if len(lines) % 3 == 0:
    sys.exit(1)
sys.exit(0)
'''


@pytest.fixture(scope="session")
def stub_shell(public_tmp):
    return write_stub_shell(public_tmp, STUB_BODY)


# One line per acceptance criterion, printed at the end of the run.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":").split(".")[0])):
            terminalreporter.write_line(line)
