from hypothesis import given, settings, strategies as st

from shgen import shparse


def spans(text):
    return [(s.start, s.end) for s in shparse.parse(text)]


def test_simple_statements():
    assert spans("a=1;\necho $a;\nexit 0;\n") == [(1, 1), (2, 2), (3, 3)]


def test_semicolon_separated_on_one_line():
    assert spans("a=1; b=2\n") == [(1, 1), (1, 1)]


def test_compound_is_one_statement():
    text = "if true; then\n  echo a;\n  echo b;\nfi\nexit 0;\n"
    stmts = shparse.parse(text)
    assert [(s.start, s.end) for s in stmts] == [(1, 4), (5, 5)]
    assert [(c.start, c.end) for c in stmts[0].children] == [(2, 2), (3, 3)]


def test_nested_loops_and_case():
    text = (
        "for x in a b; do\n"
        "  while false; do\n"
        "    echo $x;\n"
        "  done\n"
        "done\n"
        "case $y in\n"
        "  a) echo a;;\n"
        "  *) echo b;;\n"
        "esac\n"
    )
    stmts = shparse.parse(text)
    assert [(s.start, s.end) for s in stmts] == [(1, 5), (6, 9)]
    (inner,) = stmts[0].children
    assert (inner.start, inner.end) == (2, 4)
    assert len(stmts[1].bodies) == 2


def test_multiline_quotes_and_substitutions():
    text = 'a="x\ny";\nb=$(echo\n z);\nc=$((1 +\n 2));\n'
    assert spans(text) == [(1, 2), (3, 4), (5, 6)]


def test_heredoc_body_belongs_to_statement():
    text = "cat <<EOF\nhello\nEOF\necho done;\n"
    assert spans(text) == [(1, 3), (4, 4)]


def test_function_definition():
    text = "fn_a() {\n  echo a;\n}\nfn_a;\n"
    stmts = shparse.parse(text)
    assert [(s.start, s.end) for s in stmts] == [(1, 3), (4, 4)]
    assert stmts[0].compound


def test_and_or_pipeline_joined():
    assert spans("a &&\n b || c | d\n") == [(1, 2)]


def test_comments_ignored():
    assert spans("# x\necho a; # trailing ( \nexit 0;\n") == [(2, 2), (3, 3)]


def test_invalid_input_tolerated():
    text = "[ - done func87();\nexit 0;\n"
    assert spans(text)[-1] == (2, 2)
    assert spans("fi\ndone\n)\n") == [(1, 1), (2, 2), (3, 3)]
    assert spans("for E9 in D a;\n echo x;\ndone\nexit 0;\n")[0][0] == 1
    assert spans('echo "unterminated\nmore\n') == [(1, 2)]
    assert spans("echo ok;\n&& ;;\n") == [(1, 1), (2, 2), (2, 2)]


def test_missing_closers_run_to_end():
    stmts = shparse.parse("if true; then\n  echo a;\n")
    assert [(s.start, s.end) for s in stmts] == [(1, 2)]


PIECES = ["if ", "fi", "do", "done", "then", "case ", "esac", "<<E\n", "E\n", " in "]


@settings(max_examples=400, deadline=None)
@given(st.lists(st.sampled_from(list("ab;&|(){}'\"$`\\#<>\n ") + PIECES), max_size=60))
def test_parse_total_and_ordered(pieces):
    text = "".join(pieces)
    stmts = shparse.parse(text)
    nlines = max(1, len(text.rstrip("\n").split("\n")))

    def check(body, lo):
        prev = lo
        for s in body:
            assert prev <= s.start <= s.end <= nlines
            prev = s.start
            for inner in s.bodies:
                check(inner, s.start)

    check(stmts, 1)
