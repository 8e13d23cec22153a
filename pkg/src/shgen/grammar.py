"""Weighted context-free grammars and budgeted random derivation.

Grammar text format (UTF-8, ``#`` starts a comment)::

    %name V
    %start Script
    %statement Stmt Block
    %meta origin = hand-written

    Script : Stmts "exit 0;\\n" ;
    Stmts  : Stmt Stmts @weight=3 | Stmt ;
    Bad    : "[ - done func" <num> "();\\n" @invalid ;

Terminals are double- or single-quoted (escapes ``\\n \\t \\\\ \\" \\'``),
lexical classes are ``<ident>``, ``<num>``, ``<str>`` and ``<same>`` (repeat
the identifier an earlier ``<ident>`` of the same alternative produced). Every alternative may carry ``@weight=w``
(positive, ``3``, ``0.5`` or ``3/2``) and ``@invalid``.

``%statement`` names the nonterminals whose expansions are shell statements;
the outermost ones become the top-level statement spans of a derivation.
"""

from __future__ import annotations

import bisect
import enum
import random
import re
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable

# Destructive command words that must never appear in generated text.
DENY_LIST = frozenset(
    {"rm", "mv", "dd", "mkfs", "chmod", "chown", "kill", "shutdown", "reboot"}
)

# Names <ident> never produces: shell keywords, special/readonly variables,
# and anything on the deny list.
RESERVED_WORDS = frozenset(
    {
        "if", "then", "else", "elif", "fi", "do", "done", "case", "esac",
        "for", "in", "while", "until", "time", "select", "function",
        "PATH", "HOME", "IFS", "PS1", "PS2", "PS3", "PS4", "ENV", "PWD",
        "MAIL", "TERM", "USER", "UID", "EUID", "PPID", "TZ", "LANG",
        "OPTIND", "OPTARG", "LINENO", "CDPATH", "SHELL", "HOST",
    }
) | DENY_LIST

LEXICAL_CLASSES = {
    "ident": "identifier: 1-4 ASCII letters/digits starting with a letter",
    "num": "decimal literal with at most 36 digits",
    "str": "1-16 printable characters without quotes, backquotes, $ or \\",
    "same": "the identifier last generated by an earlier <ident> of the same production",
}

GRAMMAR_DETERMINED = None

SIZE_RETRIES = 32
MAX_RECURSION_DEPTH = 10
MAX_NESTING = 5
LIST_BOOST = 8.0
IDENT_REUSE = 0.4

_STR_ALPHABET = (
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789"
    "     -_.,:+=@%^~"
)
_IDENT_FIRST = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
_IDENT_REST = _IDENT_FIRST + "0123456789"
_WORD_RE = re.compile(r"[A-Za-z0-9_]+")
_REDIRECT_RE = re.compile(r"(?<![<>&])>{1,2}\|?[ \t]*([^\s;&|)]+)")

MASK64 = (1 << 64) - 1


def mix64(x: int) -> int:
    """SplitMix64 finalizer; a bijection on 64-bit integers."""
    x &= MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def sub_seed(seed: int, attempt: int) -> int:
    return mix64((seed + 0x9E3779B97F4A7C15 * (attempt + 1)) & MASK64)


class GrammarError(ValueError):
    pass


class GrammarSyntaxError(GrammarError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class UndefinedNonterminalError(GrammarError):
    pass


class UnreachableNonterminalError(GrammarError):
    pass


class NonterminatingError(GrammarError):
    pass


class DeniedTerminalError(GrammarError):
    pass


class SizeUnreachableError(RuntimeError):
    pass


class Validity(str, enum.Enum):
    VALID = "valid"
    INVALID = "invalid"


@dataclass(frozen=True)
class Symbol:
    kind: str  # "terminal" | "nonterminal" | "lexical"
    value: str

    @property
    def is_terminal(self) -> bool:
        return self.kind == "terminal"

    @property
    def is_nonterminal(self) -> bool:
        return self.kind == "nonterminal"

    def __str__(self) -> str:
        if self.kind == "terminal":
            return repr(self.value)
        if self.kind == "lexical":
            return f"<{self.value}>"
        return self.value


def terminal(text: str) -> Symbol:
    return Symbol("terminal", text)


def nonterminal(name: str) -> Symbol:
    return Symbol("nonterminal", name)


def lexical(cls: str) -> Symbol:
    return Symbol("lexical", cls)


@dataclass(frozen=True)
class Production:
    body: tuple[Symbol, ...]
    weight: Fraction = Fraction(1)
    validity: Validity = Validity.VALID
    size_hint: int = 0

    @property
    def invalid(self) -> bool:
        return self.validity is Validity.INVALID


@dataclass(frozen=True)
class _Analysis:
    min_lines: dict[str, int]
    min_height: dict[str, int]
    # per nonterminal, per production
    cost: dict[str, tuple[int, ...]]
    height: dict[str, tuple[int, ...]]
    recursive: dict[str, tuple[bool, ...]]
    grows: dict[str, tuple[bool, ...]]
    weights: dict[str, tuple[float, ...]] = field(default_factory=dict)


@dataclass(frozen=True)
class Grammar:
    name: str
    start: str
    rules: dict[str, tuple[Production, ...]]
    lexical_classes: dict[str, str] = field(default_factory=lambda: dict(LEXICAL_CLASSES))
    metadata: dict[str, str] = field(default_factory=dict)
    statement_symbols: frozenset[str] = frozenset()
    analysis: _Analysis | None = field(default=None, compare=False, repr=False)

    @property
    def has_invalid(self) -> bool:
        return any(p.invalid for prods in self.rules.values() for p in prods)


@dataclass(frozen=True, slots=True)
class TraceNode:
    symbol: Symbol
    production: int  # -1 for leaves
    parent: int
    start: int
    end: int


Span = tuple[int, int]


@dataclass(frozen=True)
class DerivationTrace:
    """Flat preorder derivation tree plus line spans (1-based, inclusive)."""

    nodes: tuple[TraceNode, ...]
    statement_spans: tuple[Span, ...]
    invalid_spans: tuple[Span, ...]

    def children(self) -> list[list[int]]:
        kids: list[list[int]] = [[] for _ in self.nodes]
        for i, node in enumerate(self.nodes):
            if node.parent >= 0:
                kids[node.parent].append(i)
        return kids

    def tokens(self, text: str, cls: str) -> list[str]:
        """Texts of the lexical tokens of one class, in order."""
        return [
            text[n.start:n.end]
            for n in self.nodes
            if n.symbol.kind == "lexical" and n.symbol.value == cls
        ]

    def identifiers(self, text: str) -> list[str]:
        seen = dict.fromkeys(self.tokens(text, "ident") + self.tokens(text, "same"))
        return list(seen)


def count_invalid_spans(trace: DerivationTrace) -> int:
    return len(trace.invalid_spans)


# -- grammar text parsing -------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<dq>"(?:\\.|[^"\\\n])*")
  | (?P<sq>'(?:\\.|[^'\\\n])*')
  | (?P<lex><[A-Za-z_]+>)
  | (?P<annot>@[A-Za-z_]+(?:=[^\s;|]+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<colon>:)
  | (?P<semi>;)
  | (?P<pipe>\|)
    """,
    re.VERBOSE,
)

_ESCAPES = {"n": "\n", "t": "\t", "\\": "\\", '"': '"', "'": "'"}


def _unescape(raw: str, line: int, col: int) -> str:
    out = []
    i = 0
    while i < len(raw):
        ch = raw[i]
        if ch == "\\":
            nxt = raw[i + 1] if i + 1 < len(raw) else ""
            if nxt not in _ESCAPES:
                raise GrammarSyntaxError(f"unknown escape \\{nxt}", line, col + i + 1)
            out.append(_ESCAPES[nxt])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def _parse_weight(text: str, line: int, col: int) -> Fraction:
    try:
        w = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise GrammarSyntaxError(f"bad weight {text!r}", line, col) from None
    if w <= 0:
        raise GrammarSyntaxError(f"weight must be positive, got {text}", line, col)
    return w


def _tokenize(source: str):
    line, line_start = 1, 0
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        col = pos - line_start + 1
        if m is None:
            raise GrammarSyntaxError(f"unexpected character {source[pos]!r}", line, col)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            yield kind, m.group(), line, col
        pos = m.end()
    yield "eof", "", line, pos - line_start + 1


def load_grammar(source: str | Path, name: str | None = None) -> Grammar:
    """Parse and validate grammar text (or a path to a grammar file)."""
    if isinstance(source, Path):
        text = source.read_text(encoding="utf-8")
        name = name or source.stem
    else:
        text = source

    directives: dict[str, list[str]] = {}
    metadata: dict[str, str] = {}
    body_lines = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        stripped = raw.strip()
        if stripped.startswith("%"):
            key, _, rest = stripped[1:].partition(" ")
            rest = rest.strip()
            if key == "meta":
                k, _, v = rest.partition("=")
                metadata[k.strip()] = v.strip()
            elif key in ("name", "start", "statement"):
                directives.setdefault(key, []).extend(rest.split())
            else:
                raise GrammarSyntaxError(f"unknown directive %{key}", lineno, 1)
            body_lines.append("")
        else:
            body_lines.append(raw)

    rules: dict[str, list[Production]] = {}
    first_lhs = None
    referenced: dict[str, tuple[int, int]] = {}
    tokens = _tokenize("\n".join(body_lines))
    tok = next(tokens)
    while tok[0] != "eof":
        kind, value, line, col = tok
        if kind != "name":
            raise GrammarSyntaxError(f"expected nonterminal name, got {value!r}", line, col)
        lhs = value
        first_lhs = first_lhs or lhs
        kind, value, line, col = next(tokens)
        if kind != "colon":
            raise GrammarSyntaxError(f"expected ':' after {lhs}", line, col)
        alternatives: list[Production] = []
        symbols: list[Symbol] = []
        weight = Fraction(1)
        validity = Validity.VALID
        annotated = False
        while True:
            kind, value, line, col = tok = next(tokens)
            if kind in ("pipe", "semi"):
                if validity is Validity.INVALID and not any(
                    s.is_terminal and s.value.strip() for s in symbols
                ):
                    raise GrammarSyntaxError(
                        "an @invalid production needs a non-blank terminal", line, col
                    )
                alternatives.append(
                    Production(
                        tuple(symbols),
                        weight,
                        validity,
                        sum(s.value.count("\n") for s in symbols if s.is_terminal),
                    )
                )
                symbols, weight, validity, annotated = [], Fraction(1), Validity.VALID, False
                if kind == "semi":
                    break
                continue
            if kind == "eof":
                raise GrammarSyntaxError(f"missing ';' ending rule {lhs}", line, col)
            if kind == "annot":
                annotated = True
                key, _, arg = value[1:].partition("=")
                if key == "weight" and arg:
                    weight = _parse_weight(arg, line, col)
                elif key == "invalid" and not arg:
                    validity = Validity.INVALID
                else:
                    raise GrammarSyntaxError(f"unknown annotation {value}", line, col)
                continue
            if annotated:
                raise GrammarSyntaxError("symbols must precede annotations", line, col)
            if kind in ("dq", "sq"):
                symbols.append(terminal(_unescape(value[1:-1], line, col)))
            elif kind == "lex":
                cls = value[1:-1]
                if cls not in LEXICAL_CLASSES:
                    raise GrammarSyntaxError(f"unknown lexical class {value}", line, col)
                symbols.append(lexical(cls))
            elif kind == "name":
                symbols.append(nonterminal(value))
                referenced.setdefault(value, (line, col))
            else:
                raise GrammarSyntaxError(f"unexpected {value!r}", line, col)
        rules.setdefault(lhs, []).extend(alternatives)
        tok = next(tokens)

    if not rules:
        raise GrammarSyntaxError("grammar has no rules", 1, 1)
    start = (directives.get("start") or [first_lhs])[0]
    grammar_name = (directives.get("name") or [name or "grammar"])[0]
    frozen = {k: tuple(v) for k, v in rules.items()}
    statements = frozenset(directives.get("statement", ()))
    _validate(frozen, start, referenced, statements)
    return Grammar(
        name=grammar_name,
        start=start,
        rules=frozen,
        metadata=metadata,
        statement_symbols=statements,
        analysis=_analyse(frozen),
    )


def _validate(rules, start, referenced, statements) -> None:
    for sym, (line, col) in referenced.items():
        if sym not in rules:
            raise UndefinedNonterminalError(
                f"nonterminal {sym} (line {line}, column {col}) has no rule"
            )
    if start not in rules:
        raise UndefinedNonterminalError(f"start symbol {start} has no rule")
    for sym in statements:
        if sym not in rules:
            raise UndefinedNonterminalError(f"%statement {sym} has no rule")

    reached = {start}
    queue = deque([start])
    while queue:
        for prod in rules[queue.popleft()]:
            for s in prod.body:
                if s.is_nonterminal and s.value not in reached:
                    reached.add(s.value)
                    queue.append(s.value)
    unreachable = sorted(set(rules) - reached)
    if unreachable:
        raise UnreachableNonterminalError(
            f"unreachable from {start}: {', '.join(unreachable)}"
        )

    productive: set[str] = set()
    changed = True
    while changed:
        changed = False
        for lhs, prods in rules.items():
            if lhs in productive:
                continue
            if any(
                all(not s.is_nonterminal or s.value in productive for s in p.body)
                for p in prods
            ):
                productive.add(lhs)
                changed = True
    stuck = sorted(set(rules) - productive)
    if stuck:
        raise NonterminatingError(f"cannot derive a finite string: {', '.join(stuck)}")

    for lhs, prods in rules.items():
        for prod in prods:
            for s in prod.body:
                if s.is_terminal:
                    bad = denied_words(s.value)
                    if bad:
                        raise DeniedTerminalError(
                            f"rule {lhs}: terminal {s.value!r} contains {bad[0]!r}"
                        )


def _analyse(rules) -> _Analysis:
    inf = float("inf")

    def fixpoint(combine):
        value = {k: inf for k in rules}
        changed = True
        while changed:
            changed = False
            for lhs, prods in rules.items():
                best = min(combine(p, value) for p in prods)
                if best < value[lhs]:
                    value[lhs] = best
                    changed = True
        return {k: int(v) for k, v in value.items()}

    def lines(p, val):
        return p.size_hint + sum(val[s.value] for s in p.body if s.is_nonterminal)

    def height(p, val):
        return 1 + max((val[s.value] for s in p.body if s.is_nonterminal), default=0)

    min_lines = fixpoint(lines)
    min_height = fixpoint(height)

    reach: dict[str, set[str]] = {}
    for lhs in rules:
        seen: set[str] = set()
        queue = deque([lhs])
        while queue:
            for p in rules[queue.popleft()]:
                for s in p.body:
                    if s.is_nonterminal and s.value not in seen:
                        seen.add(s.value)
                        queue.append(s.value)
        reach[lhs] = seen

    cost, heights, recursive, grows = {}, {}, {}, {}
    for lhs, prods in rules.items():
        cost[lhs] = tuple(lines(p, min_lines) for p in prods)
        heights[lhs] = tuple(height(p, min_height) for p in prods)
        recursive[lhs] = tuple(
            any(s.is_nonterminal and lhs in reach[s.value] | {s.value} for s in p.body)
            for p in prods
        )
        grows[lhs] = tuple(
            rec and c > min_lines[lhs] for rec, c in zip(recursive[lhs], cost[lhs])
        )
    weights = {lhs: tuple(float(p.weight) for p in prods) for lhs, prods in rules.items()}
    return _Analysis(min_lines, min_height, cost, heights, recursive, grows, weights)


def denied_words(text: str) -> list[str]:
    """Deny-listed command words and out-of-scratch redirection targets in text."""
    found = [w for w in _WORD_RE.findall(text) if w.lower() in DENY_LIST]
    for target in _REDIRECT_RE.findall(text):
        if target.startswith("/") or ".." in target:
            found.append(f"> {target}")
    return found


# -- derivation -------------------------------------------------------------


class _Lexer:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self.pool: list[str] = []
        self.last: str | None = None

    def generate(self, cls: str, sibling: str | None = None) -> str:
        if cls == "ident":
            return self.ident()
        if cls == "same":
            if sibling is not None:
                return sibling
            return self.last if self.last is not None else self.ident()
        if cls == "num":
            return self.num()
        return self.string()

    def ident(self) -> str:
        rng = self.rng
        if self.pool and rng.random() < IDENT_REUSE:
            name = rng.choice(self.pool)
        else:
            while True:
                size = rng.choices((1, 2, 3, 4), weights=(2, 3, 3, 2))[0]
                name = rng.choice(_IDENT_FIRST) + "".join(
                    rng.choice(_IDENT_REST) for _ in range(size - 1)
                )
                if name not in RESERVED_WORDS and name.lower() not in DENY_LIST:
                    break
            self.pool.append(name)
        self.last = name
        return name

    def num(self) -> str:
        rng = self.rng
        r = rng.random()
        digits = rng.randint(1, 3) if r < 0.8 else rng.randint(4, 9) if r < 0.95 else rng.randint(10, 36)
        if digits == 1:
            return str(rng.randint(0, 9))
        return str(rng.randint(1, 9)) + "".join(
            str(rng.randint(0, 9)) for _ in range(digits - 1)
        )

    def string(self) -> str:
        rng = self.rng
        while True:
            size = rng.randint(1, 8) if rng.random() < 0.85 else rng.randint(9, 16)
            s = "".join(rng.choice(_STR_ALPHABET) for _ in range(size))
            if not denied_words(s):
                return s


_CLOSE = object()


def _choose(grammar: Grammar, lhs: str, rng, est, target, nest, closing):
    """Pick a production index; returns (index, force_closing)."""
    a = grammar.analysis
    base = a.weights[lhs]
    if closing:
        best = a.min_height[lhs]
        idx = [i for i, h in enumerate(a.height[lhs]) if h == best]
        return rng.choices(idx, weights=[base[i] for i in idx])[0], True
    grows = a.grows[lhs]
    weights = []
    for i, w in enumerate(base):
        if grows[i]:
            if nest >= MAX_NESTING:
                w = 0.0
            elif target is not None:
                w = 0.0 if est >= target else w * LIST_BOOST * (target - est) / target / (1 + nest)
        weights.append(w)
    if sum(weights) > 0:
        return rng.choices(range(len(base)), weights=weights)[0], False
    idx = [i for i in range(len(base)) if not grows[i]]
    if idx:
        return rng.choices(idx, weights=[base[i] for i in idx])[0], False
    return _choose(grammar, lhs, rng, est, target, nest, True)


def _derive_once(grammar: Grammar, target: int | None, seed: int):
    rng = random.Random(seed)
    lexer = _Lexer(rng)
    a = grammar.analysis
    out: list[str] = []
    nodes: list[list] = []  # [symbol, production, parent, start, end]
    pos = 0
    newlines = 0
    pending = a.min_lines[grammar.start]
    sibling_ident: dict[int, str] = {}
    # (symbol, parent, nest, rdepth, closing)
    stack: list = [(nonterminal(grammar.start), -1, 0, 0, False)]
    while stack:
        item = stack.pop()
        if item[0] is _CLOSE:
            nodes[item[1]][4] = pos
            continue
        sym, parent, nest, rdepth, closing = item
        if sym.kind != "nonterminal":
            text = sym.value if sym.is_terminal else lexer.generate(sym.value, sibling_ident.get(parent))
            if sym.kind == "lexical" and sym.value == "ident":
                sibling_ident[parent] = text
            nodes.append([sym, -1, parent, pos, pos + len(text)])
            out.append(text)
            pos += len(text)
            if sym.is_terminal:
                nl = text.count("\n")
                newlines += nl
                pending -= nl
            continue
        lhs = sym.value
        pending -= a.min_lines[lhs]
        choice, force = _choose(
            grammar, lhs, rng, newlines + pending, target, nest,
            closing or rdepth >= MAX_RECURSION_DEPTH,
        )
        prod = grammar.rules[lhs][choice]
        pending += a.cost[lhs][choice]
        index = len(nodes)
        nodes.append([sym, choice, parent, pos, pos])
        stack.append((_CLOSE, index))
        child_nest = nest + (lhs in grammar.statement_symbols)
        if a.grows[lhs][choice] and target is not None:
            child_depth = 0
        else:
            child_depth = rdepth + a.recursive[lhs][choice]
        for s in reversed(prod.body):
            stack.append((s, index, child_nest, child_depth, force))
    text = "".join(out)
    return text, _build_trace(grammar, text, nodes)


def _build_trace(grammar: Grammar, text: str, raw_nodes) -> DerivationTrace:
    nodes = tuple(TraceNode(*n) for n in raw_nodes)
    breaks = [i for i, ch in enumerate(text) if ch == "\n"]

    def line_of(offset: int) -> int:
        return bisect.bisect_left(breaks, offset) + 1

    def span(node: TraceNode) -> Span | None:
        s, e = node.start, node.end
        while s < e and text[s].isspace():
            s += 1
        while e > s and text[e - 1].isspace():
            e -= 1
        if s >= e:
            return None
        return line_of(s), line_of(e - 1)

    in_stmt = [False] * len(nodes)
    spans: list[Span] = []
    invalid: list[Span] = []
    for i, node in enumerate(nodes):
        parent_in = in_stmt[node.parent] if node.parent >= 0 else False
        is_stmt = node.production >= 0 and node.symbol.value in grammar.statement_symbols
        in_stmt[i] = parent_in or is_stmt
        if is_stmt and not parent_in:
            sp = span(node)
            if sp:
                spans.append(sp)
        if node.production >= 0 and grammar.rules[node.symbol.value][node.production].invalid:
            sp = span(node)
            if sp:
                invalid.append(sp)

    covered = set()
    for s, e in spans:
        covered.update(range(s, e + 1))
    for n, line in enumerate(text.split("\n"), 1):
        if line.strip() and n not in covered:
            spans.append((n, n))
    spans.sort()
    merged: list[list[int]] = []
    for s, e in spans:
        if merged and s <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], e)
        else:
            merged.append([s, e])
    return DerivationTrace(nodes, tuple(map(tuple, merged)), tuple(invalid))


def nonblank_lines(text: str) -> int:
    return sum(1 for line in text.splitlines() if line.strip())


def derive(grammar: Grammar, target_size: int | None, rng_seed: int) -> tuple[str, DerivationTrace]:
    """Derive one sentence, aiming for ``target_size`` non-blank lines.

    With ``target_size=None`` the grammar alone decides the size. Otherwise
    the result has between half and twice the target; up to ``SIZE_RETRIES``
    re-derivations with sub-seeds are tried before giving up.
    """
    if target_size is not None and target_size < 1:
        raise ValueError("target_size must be >= 1 or None")
    if grammar.analysis is None:
        raise ValueError("grammar was not produced by load_grammar")
    for attempt in range(SIZE_RETRIES):
        seed = rng_seed & MASK64 if attempt == 0 else sub_seed(rng_seed, attempt)
        text, trace = _derive_once(grammar, target_size, seed)
        if target_size is None:
            return text, trace
        loc = nonblank_lines(text)
        if 0.5 * target_size <= loc <= 2 * target_size:
            return text, trace
    raise SizeUnreachableError(
        f"{grammar.name}: no derivation within [{target_size / 2}, {2 * target_size}] "
        f"lines after {SIZE_RETRIES} attempts"
    )


def shipped_grammar_path(name: str) -> Path:
    return Path(__file__).with_name("grammars") / f"{name.lower()}.grammar"


def load_shipped(name: str) -> Grammar:
    """Load one of the bundled grammars: ``v``, ``i`` or ``mi``."""
    return load_grammar(shipped_grammar_path(name))


def iter_symbols(grammar: Grammar) -> Iterable[Symbol]:
    for prods in grammar.rules.values():
        for p in prods:
            yield from p.body
