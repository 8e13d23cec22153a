"""Running scripts against a target shell inside a scratch sandbox."""

from __future__ import annotations

import itertools
import logging
import os
import pwd
import resource
import selectors
import shutil
import signal
import stat
import subprocess
import tempfile
import threading
import time
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .oracle import SanitizerFinding, parse_sanitizer, profile_for_shell

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT_MS = 5000
KILL_GRACE_MS = 200
OUTPUT_LIMIT = 64 * 1024
SCRATCH_ENV = "SHGEN_SCRATCH"
SCRIPT_NAME = "script.sh"

# Utilities reachable through PATH inside the sandbox.
ALLOWED_UTILITIES = ("cat", "wc", "tr", "head", "tail", "sort", "cut", "du")

DEFAULT_SANITIZER_ENV = {
    "ASAN_OPTIONS": "detect_leaks=1:abort_on_error=0:symbolize=1:exitcode=1",
    "LSAN_OPTIONS": "exitcode=23",
}


class SpawnError(RuntimeError):
    """The shell binary could not be started."""


class ScratchSetupError(RuntimeError):
    """The scratch area could not be prepared."""


class PoolAborted(RuntimeError):
    """Too many spawn failures in one pool run."""


@dataclass(frozen=True)
class ResourceLimits:
    cpu_seconds: int = 5
    file_size: int = 8 * 1024 * 1024
    open_files: int = 64
    processes: int = 16  # per running shell


@dataclass(frozen=True)
class ShellTarget:
    binary_path: Path
    extra_args: tuple[str, ...] = ()
    error_pattern_profile: str = ""
    sanitizer_enabled: bool = False
    sanitizer_env: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_SANITIZER_ENV))

    def __post_init__(self):
        object.__setattr__(self, "binary_path", Path(self.binary_path))
        object.__setattr__(self, "extra_args", tuple(self.extra_args))
        if not self.error_pattern_profile:
            object.__setattr__(self, "error_pattern_profile", profile_for_shell(self.binary_path))

    @classmethod
    def resolve(cls, shell: str, **kwargs) -> "ShellTarget":
        """Build a target from a path or a command name found on PATH."""
        found = shell if os.sep in shell else shutil.which(shell)
        if not found:
            raise SpawnError(f"shell {shell!r} not found")
        return cls(Path(found).absolute(), **kwargs)

    def check(self) -> None:
        if not self.binary_path.is_file() or not os.access(self.binary_path, os.X_OK):
            raise SpawnError(f"{self.binary_path} is not an executable file")


@dataclass
class ExecutionResult:
    exit_code: int | str
    stdout: bytes
    stderr: bytes
    wall_time_ms: float
    timed_out: bool
    sanitizer_findings: list[SanitizerFinding] = field(default_factory=list)
    script_path: str = SCRIPT_NAME
    stdout_truncated: bool = False
    stderr_truncated: bool = False

    @property
    def signaled(self) -> bool:
        return isinstance(self.exit_code, str)


@dataclass
class Sandbox:
    """Everything a child shell process inherits."""

    root: Path
    bin_dir: Path
    env: dict[str, str]
    limits: ResourceLimits
    run_as: tuple[int, int] | None
    nproc_limit: int
    max_parallel: int = 1
    _counter: Iterator[int] = field(default_factory=itertools.count, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def child_env(self, workdir: Path, target: ShellTarget) -> dict[str, str]:
        env = dict(self.env)
        env["HOME"] = str(workdir)
        env["TMPDIR"] = str(workdir)
        if target.sanitizer_enabled:
            env.update(target.sanitizer_env)
        return env

    def new_workdir(self) -> Path:
        with self._lock:
            n = next(self._counter)
        path = self.root / "runs" / f"r{os.getpid()}-{n}"
        try:
            path.mkdir(parents=True)
            if self.run_as:
                os.chown(path, *self.run_as)
        except OSError as exc:
            raise ScratchSetupError(f"cannot create {path}: {exc}") from exc
        return path

    def ensure_parallel(self, procs: int) -> None:
        """Raise the shared process limit for ``procs`` concurrent shells."""
        with self._lock:
            if procs > self.max_parallel:
                self.nproc_limit += self.limits.processes * (procs - self.max_parallel)
                self.max_parallel = procs

    def preexec(self) -> None:
        lim = self.limits
        resource.setrlimit(resource.RLIMIT_CPU, (lim.cpu_seconds, lim.cpu_seconds + 1))
        resource.setrlimit(resource.RLIMIT_FSIZE, (lim.file_size, lim.file_size))
        resource.setrlimit(resource.RLIMIT_NOFILE, (lim.open_files, lim.open_files))
        resource.setrlimit(resource.RLIMIT_NPROC, (self.nproc_limit, self.nproc_limit))
        os.umask(0o022)


def _count_processes(uid: int) -> int:
    count = 0
    for entry in Path("/proc").iterdir():
        if entry.name.isdigit():
            try:
                if entry.stat().st_uid == uid:
                    count += 1
            except OSError:
                pass
    return count


def _world_traversable(path: Path) -> bool:
    for p in [path, *path.parents]:
        try:
            if not p.stat().st_mode & stat.S_IXOTH:
                return False
        except OSError:
            return False
    return True


def default_scratch_root() -> Path:
    env = os.environ.get(SCRATCH_ENV)
    if env:
        return Path(env)
    return Path(tempfile.mkdtemp(prefix="shgen-scratch-"))


def harden_environment(
    scratch_root: Path | str | None = None,
    limits: ResourceLimits = ResourceLimits(),
    utilities: Iterable[str] = ALLOWED_UTILITIES,
    max_parallel: int = 1,
    drop_privileges: bool = True,
) -> Sandbox:
    """Prepare the scratch root, the restricted PATH and the child limits.

    When running as root the children run as ``nobody`` so that the only
    writable places are their own scratch directories.
    """
    root = Path(scratch_root) if scratch_root is not None else default_scratch_root()
    try:
        root.mkdir(parents=True, exist_ok=True)
        root = root.resolve()
        bin_dir = root / "bin"
        bin_dir.mkdir(exist_ok=True)
        (root / "runs").mkdir(exist_ok=True)
        for name in utilities:
            found = shutil.which(name)
            link = bin_dir / name
            if found and not link.exists():
                link.symlink_to(found)
        os.chmod(root, 0o711)
        os.chmod(bin_dir, 0o755)
        os.chmod(root / "runs", 0o711)
    except OSError as exc:
        raise ScratchSetupError(f"cannot prepare scratch root {root}: {exc}") from exc

    run_as = None
    if drop_privileges and os.geteuid() == 0:
        try:
            nobody = pwd.getpwnam("nobody")
            run_as = (nobody.pw_uid, nobody.pw_gid)
        except KeyError:
            log.warning("no 'nobody' user; shells run with the caller's privileges")
        if run_as and not _world_traversable(root):
            log.warning("%s is not reachable by nobody; shells keep root privileges", root)
            run_as = None

    uid = run_as[0] if run_as else os.getuid()
    nproc = _count_processes(uid) + limits.processes * max(1, max_parallel)
    env = {"PATH": str(bin_dir), "HOME": str(root), "LC_ALL": "C", "TMPDIR": str(root)}
    return Sandbox(root, bin_dir, env, limits, run_as, nproc, max(1, max_parallel))


_default_sandbox: Sandbox | None = None
_default_lock = threading.Lock()


def default_sandbox() -> Sandbox:
    global _default_sandbox
    with _default_lock:
        if _default_sandbox is None:
            _default_sandbox = harden_environment(max_parallel=64)
        return _default_sandbox


def _remove_tree(path: Path) -> None:
    def fix(func, p, _exc):
        try:
            os.chmod(os.path.dirname(p), 0o700)
            os.chmod(p, 0o700)
            func(p)
        except OSError:
            pass

    shutil.rmtree(path, onerror=fix)


def _capture(proc: subprocess.Popen, deadline: float) -> tuple[bytes, bytes, bool, bool, bool]:
    """Read both pipes until EOF, the deadline, or shortly after exit."""
    buffers = {proc.stdout: bytearray(), proc.stderr: bytearray()}
    truncated = {proc.stdout: False, proc.stderr: False}
    sel = selectors.DefaultSelector()
    for pipe in buffers:
        os.set_blocking(pipe.fileno(), False)
        sel.register(pipe, selectors.EVENT_READ)
    timed_out = False
    exited_at = None
    while sel.get_map():
        now = time.monotonic()
        if exited_at is None and proc.poll() is not None:
            exited_at = now
        if exited_at is not None and now - exited_at > KILL_GRACE_MS / 1000:
            break  # background children keep the pipes open
        if now >= deadline:
            timed_out = exited_at is None
            break
        for key, _ in sel.select(timeout=min(0.05, deadline - now)):
            try:
                chunk = os.read(key.fileobj.fileno(), 65536)
            except BlockingIOError:
                continue
            if not chunk:
                sel.unregister(key.fileobj)
                continue
            buf = buffers[key.fileobj]
            room = OUTPUT_LIMIT - len(buf)
            if len(chunk) > room:
                truncated[key.fileobj] = True
            buf += chunk[:max(room, 0)]
    sel.close()
    return (
        bytes(buffers[proc.stdout]),
        bytes(buffers[proc.stderr]),
        truncated[proc.stdout],
        truncated[proc.stderr],
        timed_out,
    )


def _kill_group(proc: subprocess.Popen) -> None:
    try:
        os.killpg(proc.pid, signal.SIGKILL)
    except (ProcessLookupError, PermissionError):
        pass


def execute(
    script,
    target: ShellTarget,
    timeout: int = DEFAULT_TIMEOUT_MS,
    sandbox: Sandbox | None = None,
    on_spawn=None,
) -> ExecutionResult:
    """Run one script (a GeneratedScript or plain text) under the target shell."""
    if timeout <= 0:
        raise ValueError("timeout must be positive")
    sandbox = sandbox or default_sandbox()
    text = script if isinstance(script, str) else script.text
    workdir = sandbox.new_workdir()
    try:
        script_file = workdir / SCRIPT_NAME
        script_file.write_text(text, encoding="utf-8")
        argv = [str(target.binary_path), *target.extra_args, SCRIPT_NAME]
        kwargs = {}
        if sandbox.run_as:
            kwargs = {"user": sandbox.run_as[0], "group": sandbox.run_as[1], "extra_groups": []}
        start = time.monotonic()
        try:
            proc = subprocess.Popen(
                argv,
                cwd=workdir,
                env=sandbox.child_env(workdir, target),
                stdin=subprocess.DEVNULL,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                start_new_session=True,
                preexec_fn=sandbox.preexec,
                close_fds=True,
                **kwargs,
            )
        except (OSError, subprocess.SubprocessError) as exc:
            raise SpawnError(f"cannot run {target.binary_path}: {exc}") from exc
        if on_spawn:
            on_spawn(+1)
        try:
            stdout, stderr, out_trunc, err_trunc, timed_out = _capture(
                proc, start + timeout / 1000
            )
            _kill_group(proc)
            returncode = proc.wait()
        finally:
            if proc.poll() is None:
                _kill_group(proc)
                proc.wait()
            proc.stdout.close()
            proc.stderr.close()
            if on_spawn:
                on_spawn(-1)
        elapsed = (time.monotonic() - start) * 1000
        if timed_out:
            exit_code: int | str = f"signaled({signal.SIGKILL.value})"
        elif returncode < 0:
            exit_code = f"signaled({-returncode})"
        else:
            exit_code = returncode
        findings = parse_sanitizer(stderr) if target.sanitizer_enabled else []
        return ExecutionResult(
            exit_code=exit_code,
            stdout=stdout,
            stderr=stderr,
            wall_time_ms=elapsed,
            timed_out=timed_out,
            sanitizer_findings=findings,
            script_path=str(script_file),
            stdout_truncated=out_trunc,
            stderr_truncated=err_trunc,
        )
    finally:
        _remove_tree(workdir)


@dataclass
class PoolStats:
    submitted: int = 0
    completed: int = 0
    spawn_failures: int = 0
    peak_children: int = 0
    _alive: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def track(self, delta: int) -> None:
        with self._lock:
            self._alive += delta
            self.peak_children = max(self.peak_children, self._alive)


def run_pool(
    scripts: Iterable,
    target: ShellTarget,
    procs: int,
    timeout: int = DEFAULT_TIMEOUT_MS,
    sandbox: Sandbox | None = None,
    max_spawn_failures: int = 10,
    stats: PoolStats | None = None,
) -> Iterator[tuple[str, ExecutionResult | None]]:
    """Execute scripts with at most ``procs`` shells alive at once.

    Scripts are GeneratedScript objects or ``(id, text)`` pairs. Yields
    ``(script id, result)`` as results complete; a script whose
    shell could not be started yields ``(id, None)``. With ``procs=1``
    results arrive in input order.
    """
    if procs < 1:
        raise ValueError("procs must be >= 1")
    sandbox = sandbox or default_sandbox()
    sandbox.ensure_parallel(procs)
    stats = stats if stats is not None else PoolStats()

    def job(script):
        try:
            return execute(script, target, timeout, sandbox, on_spawn=stats.track)
        except SpawnError as exc:
            log.warning("spawn failure for %s: %s", getattr(script, "id", "?"), exc)
            return None

    source = iter(scripts)
    with ThreadPoolExecutor(max_workers=procs) as pool:
        pending = {}
        exhausted = False
        while True:
            while not exhausted and len(pending) < procs:
                try:
                    script = next(source)
                except StopIteration:
                    exhausted = True
                    break
                if isinstance(script, tuple):
                    sid, script = script
                else:
                    sid = script.id
                pending[pool.submit(job, script)] = sid
                stats.submitted += 1
            if not pending:
                return
            done, _ = wait(pending, return_when=FIRST_COMPLETED)
            for fut in done:
                sid = pending.pop(fut)
                result = fut.result()
                stats.completed += 1
                if result is None:
                    stats.spawn_failures += 1
                    if stats.spawn_failures > max_spawn_failures:
                        for other in pending:
                            other.cancel()
                        raise PoolAborted(
                            f"{stats.spawn_failures} spawn failures (limit {max_spawn_failures})"
                        )
                yield sid, result
