"""The three script generators: valid (V), invalid (I), mutated-invalid (MI)."""

from __future__ import annotations

import enum
import random
import re
from dataclasses import dataclass, field

from .grammar import (
    SIZE_RETRIES,
    DerivationTrace,
    Grammar,
    Span,
    denied_words,
    derive,
    nonblank_lines,
    sub_seed,
)


class GeneratorKind(str, enum.Enum):
    V = "V"
    I = "I"  # noqa: E741
    MI = "MI"

    @classmethod
    def parse(cls, text: str) -> "GeneratorKind":
        try:
            return cls(text.strip().upper())
        except ValueError:
            raise ValueError(f"unknown generator {text!r} (expected v, i or mi)") from None


class MutationOperator(str, enum.Enum):
    DROP_REQUIRED_KEYWORD = "DropRequiredKeyword"
    UNBALANCE_DELIMITER = "UnbalanceDelimiter"
    TRUNCATE_STATEMENT = "TruncateStatement"


REQUIRED_KEYWORDS = ("do", "then", "done", "fi", "in")
CLOSING_DELIMITERS = (")", "}", "]", '"', "'")

_KEYWORD_RE = re.compile(r"(?<![A-Za-z0-9_])(do|then|done|fi|in)(?![A-Za-z0-9_])")


class GuaranteeUnreachableError(RuntimeError):
    """No derivation satisfied the generator's structural guarantee."""


@dataclass(frozen=True)
class MutationRecord:
    operator: MutationOperator
    target_span: Span
    removed_text: str
    offset: int  # byte offset of the deletion in the mutated text

    def undo(self, text: str) -> str:
        return text[: self.offset] + self.removed_text + text[self.offset:]

    def to_dict(self) -> dict:
        return {
            "operator": self.operator.value,
            "target_span": list(self.target_span),
            "removed_text": self.removed_text,
            "offset": self.offset,
        }


@dataclass(frozen=True)
class GeneratedScript:
    """A generated script. For MI the trace describes the pre-mutation text;
    mutations only delete bytes within one line, so its line spans still
    address the mutated script."""

    id: str
    kind: GeneratorKind
    seed: int
    text: str
    loc: int
    trace: DerivationTrace
    mutations: tuple[MutationRecord, ...] = ()
    identifiers: tuple[str, ...] = field(default=(), compare=False)

    @property
    def invalid_spans(self) -> tuple[Span, ...]:
        return self.trace.invalid_spans

    @property
    def protected_spans(self) -> tuple[Span, ...]:
        """Line spans that carry the script's intended malformation."""
        return self.trace.invalid_spans + tuple(m.target_span for m in self.mutations)


def script_id(kind: GeneratorKind, seed: int) -> str:
    return f"{kind.value.lower()}-{seed & ((1 << 64) - 1):016x}"


def _make(kind, seed, text, trace, mutations=(), sid=None) -> GeneratedScript:
    return GeneratedScript(
        id=sid or script_id(kind, seed),
        kind=kind,
        seed=seed,
        text=text,
        loc=nonblank_lines(text),
        trace=trace,
        mutations=tuple(mutations),
        identifiers=tuple(trace.identifiers(_base_text(text, mutations))),
    )


def _base_text(text: str, mutations) -> str:
    for m in reversed(tuple(mutations)):
        text = m.undo(text)
    return text


def generate_v(grammar_v: Grammar, size: int, seed: int, sid: str | None = None) -> GeneratedScript:
    if grammar_v.has_invalid:
        raise ValueError(f"grammar {grammar_v.name} has invalid productions; not usable for V")
    text, trace = derive(grammar_v, size, seed)
    return _make(GeneratorKind.V, seed, text, trace, sid=sid)


def generate_i(grammar_i: Grammar, seed: int, sid: str | None = None) -> GeneratedScript:
    if not grammar_i.has_invalid:
        raise ValueError(f"grammar {grammar_i.name} has no invalid productions")
    for attempt in range(SIZE_RETRIES):
        text, trace = derive(grammar_i, None, seed if attempt == 0 else sub_seed(seed, attempt))
        if trace.invalid_spans:
            return _make(GeneratorKind.I, seed, text, trace, sid=sid)
    raise GuaranteeUnreachableError(
        f"{grammar_i.name}: no invalid production fired in {SIZE_RETRIES} derivations"
    )


def generate_mi(grammar_mi: Grammar, size: int, seed: int, sid: str | None = None) -> GeneratedScript:
    if grammar_mi.has_invalid:
        raise ValueError(f"grammar {grammar_mi.name} has invalid productions; not usable for MI")
    for attempt in range(SIZE_RETRIES):
        derivation_seed = seed if attempt == 0 else sub_seed(seed, attempt)
        text, trace = derive(grammar_mi, size, derivation_seed)
        rng = random.Random(sub_seed(derivation_seed, 0xA11CE))
        mutation = choose_mutation(grammar_mi, text, trace, rng)
        if mutation is not None:
            mutated = text[: mutation.offset] + text[mutation.offset + len(mutation.removed_text):]
            return _make(GeneratorKind.MI, seed, mutated, trace, [mutation], sid=sid)
    raise GuaranteeUnreachableError(
        f"{grammar_mi.name}: no mutation site found in {SIZE_RETRIES} derivations"
    )


# -- mutation sites -----------------------------------------------------------


@dataclass(frozen=True)
class _Site:
    operator: MutationOperator
    start: int
    end: int


def _line_of(text: str, offset: int) -> int:
    return text.count("\n", 0, offset) + 1


def _statement_tree(grammar: Grammar, trace: DerivationTrace):
    """Statement nodes, each with its nearest statement ancestor."""
    nodes = trace.nodes
    stmt_parent: dict[int, int] = {}
    nearest = [-1] * len(nodes)
    for i, node in enumerate(nodes):
        up = nearest[node.parent] if node.parent >= 0 else -1
        if node.production >= 0 and node.symbol.value in grammar.statement_symbols:
            stmt_parent[i] = up
            nearest[i] = i
        else:
            nearest[i] = up
    return stmt_parent, nearest


def scan_delimiters(text: str):
    """Scan shell text; return (closing delimiter offsets, truncation points).

    Truncation points are offsets where the prefix ends directly inside a
    double-quoted string, a single-quoted string or a ``${`` expansion.
    """
    closers: list[int] = []
    cuts: list[int] = []
    stack: list[str] = []
    i = 0
    n = len(text)
    while i < n:
        top = stack[-1] if stack else ""
        if i > 0 and top in ('"', "'", "${"):
            cuts.append(i)
        ch = text[i]
        if top == "'":
            if ch == "'":
                closers.append(i)
                stack.pop()
            i += 1
            continue
        if ch == "\\":
            i += 2
            continue
        if ch == '"':
            if top == '"':
                closers.append(i)
                stack.pop()
            else:
                stack.append('"')
            i += 1
            continue
        if ch == "'" and top != '"':
            stack.append("'")
            i += 1
            continue
        if text.startswith("$((", i):
            stack.append("$((")
            i += 3
            continue
        if text.startswith("$(", i) or text.startswith("${", i):
            stack.append(text[i:i + 2])
            i += 2
            continue
        if ch == "(" and top in ("$((", "$(", "("):
            stack.append("(")
        elif ch == ")" and top in ("(", "$("):
            closers.append(i)
            stack.pop()
        elif ch == ")" and top == "$((" and text.startswith("))", i):
            closers.extend((i, i + 1))
            stack.pop()
            i += 2
            continue
        elif ch == "}" and top == "${":
            closers.append(i)
            stack.pop()
        elif ch == "]" and top in ("", '"') and i > 0 and text[i - 1] == " ":
            closers.append(i)
        i += 1
    return closers, cuts


def mutation_sites(grammar: Grammar, text: str, trace: DerivationTrace) -> dict[int, list[_Site]]:
    """Applicable mutation sites, keyed by the innermost statement node."""
    nodes = trace.nodes
    stmt_parent, nearest = _statement_tree(grammar, trace)
    has_child_stmt = {i: False for i in stmt_parent}
    has_compound_child = {i: False for i in stmt_parent}
    for i, up in stmt_parent.items():
        if up >= 0:
            has_child_stmt[up] = True
    for i, up in stmt_parent.items():
        if up >= 0 and has_child_stmt[i]:
            has_compound_child[up] = True

    sites: dict[int, list[_Site]] = {}
    for i in stmt_parent:
        node = nodes[i]
        found: list[_Site] = []
        if has_child_stmt[i] and not has_compound_child[i]:
            # innermost compound: its own keyword terminals
            for j in range(i + 1, len(nodes)):
                leaf = nodes[j]
                if leaf.parent < i:
                    break
                if leaf.symbol.is_terminal and nearest[leaf.parent] == i:
                    body = text[leaf.start:leaf.end]
                    for m in _KEYWORD_RE.finditer(body):
                        found.append(_Site(
                            MutationOperator.DROP_REQUIRED_KEYWORD,
                            leaf.start + m.start(), leaf.start + m.end(),
                        ))
        elif not has_child_stmt[i]:
            body = text[node.start:node.end]
            line_end = body.find("\n")
            line_end = len(body) if line_end < 0 else line_end
            closers, cuts = scan_delimiters(body[:line_end])
            for c in closers:
                found.append(_Site(
                    MutationOperator.UNBALANCE_DELIMITER, node.start + c, node.start + c + 1,
                ))
            for c in cuts:
                if denied_words(body[:c]):  # a cut name can collide with a denied command
                    continue
                found.append(_Site(
                    MutationOperator.TRUNCATE_STATEMENT, node.start + c, node.start + line_end,
                ))
        if found:
            sites[i] = found
    return sites


def choose_mutation(grammar: Grammar, text: str, trace: DerivationTrace, rng: random.Random) -> MutationRecord | None:
    """Pick a statement uniformly, then an operator, then a site."""
    sites = mutation_sites(grammar, text, trace)
    if not sites:
        return None
    stmt = rng.choice(sorted(sites))
    by_op: dict[MutationOperator, list[_Site]] = {}
    for s in sites[stmt]:
        by_op.setdefault(s.operator, []).append(s)
    op = rng.choice(sorted(by_op, key=lambda o: o.value))
    site = rng.choice(by_op[op])
    node = trace.nodes[stmt]
    span = (_line_of(text, node.start), _line_of(text, max(node.start, node.end - 1)))
    while span[1] > span[0] and not text.split("\n")[span[1] - 1].strip():
        span = (span[0], span[1] - 1)
    return MutationRecord(op, span, text[site.start:site.end], site.start)
