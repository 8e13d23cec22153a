"""A small, error-tolerant shell statement splitter.

It recovers the statement structure of a script (including scripts that
are not valid shell) well enough to cut it into removable pieces: each
statement gets its first and last line, and compound commands list the
statements of their bodies. Unbalanced input never raises; unterminated
constructs run to the end of the text and stray closing keywords become
ordinary words.
"""

from __future__ import annotations

from dataclasses import dataclass, field

RESERVED = {"if", "then", "elif", "else", "fi", "for", "while", "until", "do", "done", "case", "esac", "{", "}", "!", "in"}
OPENERS = {"if", "for", "while", "until", "case", "{"}
OPERATORS = ("&&", "||", ";;", "<<-", "<<", ">>", "<&", ">&", "<>", ">|", ";", "&", "|", "(", ")", "<", ">")


@dataclass
class Token:
    kind: str  # "word" | "op" | "newline"
    text: str
    line: int
    end_line: int


@dataclass
class Stmt:
    start: int  # 1-based, inclusive
    end: int
    bodies: list[list["Stmt"]] = field(default_factory=list)
    compound: bool = False

    @property
    def children(self) -> list["Stmt"]:
        return [s for body in self.bodies for s in body]


def _scan_word(text: str, i: int, line: int) -> tuple[int, int]:
    """Return the end offset and line of the word starting at i."""
    n = len(text)
    stack: list[str] = []
    while i < n:
        ch = text[i]
        top = stack[-1] if stack else ""
        if top == "'":
            if ch == "'":
                stack.pop()
        elif ch == "\\" and top != "'":
            if i + 1 < n and text[i + 1] == "\n":
                line += 1
            i += 2
            continue
        elif top == "`":
            if ch == "`":
                stack.pop()
        elif ch == '"':
            if top == '"':
                stack.pop()
            else:
                stack.append('"')
        elif ch == "'" and top != '"':
            stack.append("'")
        elif ch == "`":
            stack.append("`")
        elif text.startswith("$((", i):
            stack.append("((")
            i += 3
            continue
        elif text.startswith("$(", i):
            stack.append("(")
            i += 2
            continue
        elif text.startswith("${", i):
            stack.append("{")
            i += 2
            continue
        elif ch == "(" and top in ("(", "(("):
            stack.append("(")
        elif ch == ")" and top == "((" and text.startswith("))", i):
            stack.pop()
            i += 2
            continue
        elif ch == ")" and top in ("(", "(("):
            stack.pop()
        elif ch == "}" and top == "{":
            stack.pop()
        elif not stack and (ch in " \t\n;&|<>()"):
            break
        if ch == "\n":
            line += 1
        i += 1
    return i, line


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    heredocs: list[tuple[str, bool]] = []
    i, line, n = 0, 1, len(text)
    while i < n:
        ch = text[i]
        if ch in " \t":
            i += 1
        elif ch == "\\" and text.startswith("\\\n", i):
            i += 2
            line += 1
        elif ch == "#" and (i == 0 or text[i - 1] in " \t\n;&|()"):
            while i < n and text[i] != "\n":
                i += 1
        elif ch == "\n":
            tokens.append(Token("newline", "\n", line, line))
            i += 1
            line += 1
            for delim, strip in heredocs:
                while i < n:
                    eol = text.find("\n", i)
                    eol = n if eol < 0 else eol
                    body = text[i:eol]
                    i = min(eol + 1, n)
                    line += 1
                    if (body.lstrip("\t") if strip else body) == delim:
                        break
                tokens[-1].end_line = line - 1
            heredocs = []
        else:
            op = next((o for o in OPERATORS if text.startswith(o, i)), None)
            if op:
                tokens.append(Token("op", op, line, line))
                i += len(op)
                if op in ("<<", "<<-"):
                    while i < n and text[i] in " \t":
                        i += 1
                    end, _ = _scan_word(text, i, line)
                    raw = text[i:end]
                    if raw:
                        tokens.append(Token("word", raw, line, line))
                        heredocs.append((raw.replace("'", "").replace('"', "").replace("\\", ""), op == "<<-"))
                    i = end
                continue
            end, end_line = _scan_word(text, i, line)
            if end == i:
                end = i + 1
            tokens.append(Token("word", text[i:end], line, end_line))
            line = end_line
            i = end
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.pos = 0

    def peek(self) -> Token | None:
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def take(self) -> Token:
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def skip_separators(self) -> None:
        while (tok := self.peek()) and (tok.kind == "newline" or tok.text in (";", "&")):
            self.pos += 1

    def at_word(self, *words: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind == "word" and tok.text in words

    def parse_list(self, stop: tuple[str, ...] = ()) -> list[Stmt]:
        stmts: list[Stmt] = []
        while True:
            self.skip_separators()
            tok = self.peek()
            if tok is None:
                return stmts
            if stop and tok.kind == "word" and tok.text in stop:
                return stmts
            if stop and tok.kind == "op" and tok.text in stop:
                return stmts
            stmts.append(self.parse_and_or())

    def parse_and_or(self) -> Stmt:
        stmt = self.parse_command()
        while (tok := self.peek()) and tok.kind == "op" and tok.text in ("&&", "||", "|"):
            self.pos += 1
            while (nl := self.peek()) and nl.kind == "newline":
                self.pos += 1
            if self.peek() is None:
                break
            nxt = self.parse_command()
            stmt = Stmt(stmt.start, max(stmt.end, nxt.end), stmt.bodies + nxt.bodies, stmt.compound or nxt.compound)
        return stmt

    def parse_command(self) -> Stmt:
        tok = self.peek()
        if tok.kind == "word" and tok.text == "!":
            self.pos += 1
            if self.peek() is None or self.peek().kind == "newline":
                return Stmt(tok.line, tok.end_line)
            inner = self.parse_command()
            return Stmt(tok.line, inner.end, inner.bodies, inner.compound)
        if tok.kind == "word" and tok.text in OPENERS:
            stmt = self.parse_compound()
        elif tok.kind == "op" and tok.text == "(":
            stmt = self.parse_group("(", (")",))
        else:
            stmt = self.parse_simple()
        return self.parse_redirects(stmt)

    def parse_redirects(self, stmt: Stmt) -> Stmt:
        while (tok := self.peek()) and (
            (tok.kind == "op" and tok.text[0] in "<>")
            or (tok.kind == "word" and tok.text.isdigit() and self._next_is_redirect())
        ):
            self.pos += 1
            stmt.end = max(stmt.end, tok.end_line)
            if (w := self.peek()) and w.kind == "word":
                self.pos += 1
                stmt.end = max(stmt.end, w.end_line)
        return stmt

    def _next_is_redirect(self) -> bool:
        nxt = self.toks[self.pos + 1] if self.pos + 1 < len(self.toks) else None
        return nxt is not None and nxt.kind == "op" and nxt.text[0] in "<>"

    def parse_simple(self) -> Stmt:
        first = self.peek()
        start, end = first.line, first.end_line
        consumed = False
        while (tok := self.peek()) is not None:
            if tok.kind == "newline":
                end = max(end, tok.end_line)  # heredoc bodies end here
                if tok.end_line > tok.line:
                    self.pos += 1
                    return Stmt(start, end)
                break
            if tok.kind == "op" and tok.text in (";", "&", "&&", "||", "|", ";;"):
                if not consumed:
                    self.pos += 1  # stray operator
                    end = max(end, tok.end_line)
                break
            if tok.kind == "op" and tok.text == ")" and consumed:
                break
            if tok.kind == "op" and tok.text == "(":
                # function definition or a stray parenthesis
                self.pos += 1
                end = max(end, tok.end_line)
                if (c := self.peek()) and c.kind == "op" and c.text == ")":
                    self.pos += 1
                    while (nl := self.peek()) and nl.kind == "newline":
                        self.pos += 1
                    if self.peek() is not None and (
                        (self.peek().kind == "word" and self.peek().text in OPENERS)
                        or self.peek().text == "("
                    ):
                        body = self.parse_command()
                        return Stmt(start, body.end, body.bodies, True)
                consumed = True
                continue
            self.pos += 1
            consumed = True
            end = max(end, tok.end_line)
        return Stmt(start, end)

    def parse_group(self, opener: str, closers: tuple[str, ...]) -> Stmt:
        first = self.take()
        body = self.parse_list(closers)
        end = body[-1].end if body else first.end_line
        if (tok := self.peek()) is not None and tok.text in closers:
            self.pos += 1
            end = tok.end_line
        return Stmt(first.line, end, [body], True)

    def _expect_body(self, stop: tuple[str, ...]) -> tuple[list[Stmt], int]:
        body = self.parse_list(stop)
        end = body[-1].end if body else 0
        return body, end

    def parse_compound(self) -> Stmt:
        first = self.peek()
        word = first.text
        if word == "{":
            return self.parse_group("{", ("}",))
        self.pos += 1
        bodies: list[list[Stmt]] = []
        end = first.end_line
        if word == "if":
            self.parse_list(("then",))
            while True:
                if self.at_word("then", "else"):
                    end = self.take().end_line
                body, b_end = self._expect_body(("elif", "else", "fi"))
                bodies.append(body)
                end = max(end, b_end)
                if self.at_word("elif"):
                    end = self.take().end_line
                    self.parse_list(("then",))
                    continue
                if self.at_word("else"):
                    continue
                break
            if self.at_word("fi"):
                end = self.take().end_line
        elif word in ("while", "until"):
            self.parse_list(("do",))
            if self.at_word("do"):
                end = self.take().end_line
            body, b_end = self._expect_body(("done",))
            bodies.append(body)
            end = max(end, b_end)
            if self.at_word("done"):
                end = self.take().end_line
        elif word == "for":
            while (tok := self.peek()) and tok.kind == "word" and tok.text != "do":
                end = self.take().end_line
            self.skip_separators()
            if self.at_word("do"):
                end = self.take().end_line
            body, b_end = self._expect_body(("done",))
            bodies.append(body)
            end = max(end, b_end)
            if self.at_word("done"):
                end = self.take().end_line
        elif word == "case":
            while (tok := self.peek()) and not (tok.kind == "word" and tok.text == "in"):
                if tok.kind == "newline" and tok.end_line > tok.line:
                    break
                end = self.take().end_line
                if tok.kind == "newline":
                    break
            if self.at_word("in"):
                end = self.take().end_line
            while True:
                while (tok := self.peek()) and tok.kind == "newline":
                    self.pos += 1
                tok = self.peek()
                if tok is None or (tok.kind == "word" and tok.text == "esac"):
                    break
                while (tok := self.peek()) and not (tok.kind == "op" and tok.text == ")"):
                    if tok.kind == "word" and tok.text == "esac":
                        break
                    end = self.take().end_line
                if self.peek() is not None and self.peek().text == ")":
                    end = self.take().end_line
                body, b_end = self._expect_body((";;", "esac"))
                bodies.append(body)
                end = max(end, b_end)
                if (tok := self.peek()) and tok.text == ";;":
                    end = self.take().end_line
            if self.at_word("esac"):
                end = self.take().end_line
        return Stmt(first.line, end, bodies, True)


def parse(text: str) -> list[Stmt]:
    """Top-level statements of a script, in source order."""
    parser = _Parser(tokenize(text))
    stmts: list[Stmt] = []
    while parser.peek() is not None:
        stmts.extend(parser.parse_list())
        tok = parser.peek()
        if tok is not None:
            # a stray closer: keep it as a statement of its own
            stmts.append(Stmt(tok.line, tok.end_line))
            parser.pos += 1
    last = max(1, len(text.rstrip("\n").split("\n")))
    _clamp(stmts, last)
    return stmts


def _clamp(stmts: list[Stmt], last: int) -> None:
    for st in stmts:
        st.end = max(st.start, min(st.end, last))
        for body in st.bodies:
            _clamp(body, last)
