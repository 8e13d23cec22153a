"""Statement-level delta debugging of failure-inducing scripts.

Scripts are cut into statements (from the derivation trace when there is
one, otherwise by :mod:`shgen.shparse`). Statements touching a protected
line span (the malformed construct of an invalid script, or the statement
a valid script failed on) are never removed. Chunk removal follows the
classic split / shrink-by-one / double-the-granularity loop, first over
top-level statements, then inside compound-command bodies.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Sequence

from . import shparse
from .grammar import Span, nonblank_lines

log = logging.getLogger(__name__)

PASS = "pass"
DEFAULT_BUDGET = 2000

Signature = Hashable
OraclePredicate = Callable[[str], Signature]


class CannotSplitError(ValueError):
    """Every statement is protected; there is nothing to split."""


class FlakyOracleError(RuntimeError):
    """The oracle gave different signatures for the same text."""


class NotFailingError(ValueError):
    """The script to reduce does not fail in the first place."""


@dataclass
class Unit:
    """A statement: the original (0-based) line indices it occupies."""

    lines: frozenset[int]
    children: list["Unit"] = field(default_factory=list)
    protected: bool = False

    @property
    def first(self) -> int:
        return min(self.lines)


@dataclass
class ReductionOutcome:
    original_loc: int
    reduced_loc: int
    reduced_text: str
    steps: list[tuple[str, object]]
    oracle_evaluations: int
    signature: Signature = None
    budget_exceeded: bool = False


# -- statement units ------------------------------------------------------------


def _merge(units: list[Unit]) -> list[Unit]:
    """Merge units sharing a line (or one line range inside another)."""
    units = sorted(units, key=lambda u: (u.first, -max(u.lines)))
    merged: list[Unit] = []
    for unit in units:
        if merged and unit.first <= max(merged[-1].lines):
            last = merged[-1]
            merged[-1] = Unit(
                frozenset(range(last.first, max(max(last.lines), max(unit.lines)) + 1)),
                last.children + unit.children,
                last.protected or unit.protected,
            )
        else:
            merged.append(unit)
    for unit in merged:
        unit.children = _merge(unit.children)
    return merged


def _from_stmt(st: shparse.Stmt) -> Unit:
    return Unit(frozenset(range(st.start - 1, st.end)), [_from_stmt(c) for c in st.children])


def _protect(units: list[Unit], protected: set[int]) -> None:
    for unit in units:
        unit.protected = bool(unit.lines & protected)
        _protect(unit.children, protected)


def statement_units(
    text: str,
    statement_spans: Sequence[Span] | None = None,
    protected_spans: Iterable[Span] = (),
) -> list[Unit]:
    """Top-level statement units of ``text`` with their nested bodies."""
    units = [_from_stmt(st) for st in shparse.parse(text)]
    if statement_spans:
        units += [Unit(frozenset(range(s - 1, e))) for s, e in statement_spans]
    units = _merge(units)
    protected = {line - 1 for s, e in protected_spans for line in range(s, e + 1)}
    _protect(units, protected)
    return units


def split(units: Sequence[Unit], n: int) -> list[list[Unit]]:
    """Cut the removable units into ``n`` contiguous chunks of near-equal size.

    Protected units are never part of a chunk.
    """
    removable = [u for u in units if not u.protected]
    if not removable:
        raise CannotSplitError("all statements are protected")
    if not 1 <= n <= len(removable):
        raise ValueError(f"chunk count {n} outside [1, {len(removable)}]")
    size, extra = divmod(len(removable), n)
    chunks, pos = [], 0
    for i in range(n):
        take = size + (1 if i < extra else 0)
        chunks.append(removable[pos:pos + take])
        pos += take
    return chunks


def split_script(
    text: str,
    n: int,
    statement_spans: Sequence[Span] | None = None,
    protected_spans: Iterable[Span] = (),
) -> list[str]:
    """Render the chunks of ``split`` as text, one string per chunk."""
    lines = text.split("\n")
    units = statement_units(text, statement_spans, protected_spans)
    if len(units) < 2:
        raise ValueError("a script with fewer than two statements cannot be split")
    return [
        "\n".join(lines[i] for i in sorted(set().union(*(u.lines for u in chunk))))
        for chunk in split(units, n)
    ]


# -- failure localisation ----------------------------------------------------------

_LINE_PATTERNS = (
    re.compile(r"^[^:\n]*:\s*(?:line\s+)?(\d+):", re.M),
    re.compile(r"^[^\[\n]*\[(\d+)\]:", re.M),
)


def failing_line(stderr: bytes | str) -> int | None:
    """The line number a shell's first error message points at, if any."""
    if isinstance(stderr, bytes):
        stderr = stderr.decode("utf-8", errors="replace")
    for pattern in _LINE_PATTERNS:
        m = pattern.search(stderr)
        if m:
            return int(m.group(1))
    return None


# -- the reduction loop --------------------------------------------------------------


class _Budget(Exception):
    pass


class _Session:
    def __init__(self, text: str, oracle: OraclePredicate, budget: int):
        self.lines = text.split("\n")
        self.oracle = oracle
        self.budget = budget
        self.evaluations = 0
        self.cache: dict[str, Signature] = {}
        self.removed: set[int] = set()
        self.steps: list[tuple[str, object]] = []
        self.target: Signature = None

    def render(self, removed: set[int]) -> str:
        return "\n".join(line for i, line in enumerate(self.lines) if i not in removed)

    def evaluate(self, text: str) -> Signature:
        if text in self.cache:
            return self.cache[text]
        if self.evaluations >= self.budget:
            raise _Budget()
        self.evaluations += 1
        sig = self.oracle(text)
        self.cache[text] = sig
        return sig

    def alive(self, units: Iterable[Unit]) -> list[Unit]:
        return [u for u in units if not u.lines <= self.removed]

    def ddmin(self, units: list[Unit], n: int = 2) -> bool:
        """Delta debugging over one sequence of sibling units.

        At least one unit of the sequence always survives, so compound
        bodies and the script itself never become empty.
        """
        changed = False
        units = self.alive(units)
        removable = [u for u in units if not u.protected]
        n = max(1, min(n, len(removable)))
        while removable:
            chunks = split(units, n)
            for chunk in chunks:
                if len(chunk) == len(units):
                    continue  # would empty the sequence
                gone = set().union(*(u.lines for u in chunk))
                candidate = self.removed | gone
                if self.evaluate(self.render(candidate)) == self.target:
                    self.steps.append(("remove", tuple(sorted(i + 1 for i in gone - self.removed))))
                    self.removed = candidate
                    changed = True
                    units = self.alive(units)
                    removable = [u for u in units if not u.protected]
                    n = min(max(n - 1, 2), len(removable))
                    break
            else:
                if n < len(removable):
                    n = min(2 * n, len(removable))
                    self.steps.append(("granularity", n))
                else:
                    break
        return changed

    def descend(self, units: list[Unit]) -> bool:
        changed = False
        for unit in self.alive(units):
            if unit.children:
                changed |= self.ddmin(unit.children)
                changed |= self.descend(unit.children)
        return changed


def reduce(
    script: str,
    oracle: OraclePredicate,
    n: int = 2,
    statement_spans: Sequence[Span] | None = None,
    protected_spans: Iterable[Span] = (),
    budget: int = DEFAULT_BUDGET,
) -> ReductionOutcome:
    """Shrink ``script`` while ``oracle`` keeps returning the same signature."""
    session = _Session(script, oracle, budget)
    first = session.oracle(script)
    second = session.oracle(script)
    session.evaluations = 2
    if first != second:
        raise FlakyOracleError(f"oracle returned {first!r} and then {second!r} for the same script")
    if first == PASS:
        raise NotFailingError("the script does not trigger a failure")
    session.target = first
    session.cache[script] = first
    units = statement_units(script, statement_spans, protected_spans)
    exceeded = False
    try:
        if len(units) > 1 or any(u.children for u in units):
            while True:
                changed = session.ddmin(units, n) if len(units) > 1 else False
                changed |= session.descend(units)
                if not changed:
                    break
    except _Budget:
        exceeded = True
        log.warning("reduction stopped after %d oracle evaluations", session.evaluations)
    reduced = session.render(session.removed)
    return ReductionOutcome(
        original_loc=nonblank_lines(script),
        reduced_loc=nonblank_lines(reduced),
        reduced_text=reduced,
        steps=session.steps,
        oracle_evaluations=session.evaluations,
        signature=first,
        budget_exceeded=exceeded,
    )


def replay(script: str, steps: Iterable[tuple[str, object]]) -> str:
    """Apply the recorded removal steps to the original script."""
    lines = script.split("\n")
    removed: set[int] = set()
    for kind, arg in steps:
        if kind == "remove":
            removed.update(i - 1 for i in arg)
    return "\n".join(line for i, line in enumerate(lines) if i not in removed)
