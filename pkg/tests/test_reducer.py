import itertools

import pytest
from hypothesis import given, settings, strategies as st

from shgen.reducer import (
    PASS,
    CannotSplitError,
    FlakyOracleError,
    NotFailingError,
    Unit,
    failing_line,
    reduce,
    replay,
    split,
    split_script,
    statement_units,
)


def flat_script(n):
    return "".join(f"s{i}=1;\n" for i in range(1, n + 1))


def present(text):
    lines = (line.strip() for line in text.splitlines())
    return {int(line[1:].split("=")[0]) for line in lines if line.startswith("s")}


def subset_oracle(*required, counter=None):
    """Fails (with signature 'boom') when any of the required sets is present."""

    def oracle(text):
        if counter is not None:
            counter.append(text)
        have = present(text)
        return "boom" if any(set(r) <= have for r in required) else PASS

    return oracle


def test_split_four_into_two():
    units = statement_units(flat_script(4))
    chunks = split(units, 2)
    assert [[u.first for u in c] for c in chunks] == [[0, 1], [2, 3]]


def test_split_script_text():
    assert split_script(flat_script(4), 2) == ["s1=1;\ns2=1;", "s3=1;\ns4=1;"]


def test_split_keeps_protected_out_of_chunks():
    units = statement_units(flat_script(5), protected_spans=[(3, 3)])
    chunks = split(units, 2)
    assert all(u.first != 2 for c in chunks for u in c)
    assert sum(len(c) for c in chunks) == 4


def test_split_everything_protected():
    units = statement_units(flat_script(2), protected_spans=[(1, 2)])
    with pytest.raises(CannotSplitError):
        split(units, 1)


def test_split_bad_n():
    with pytest.raises(ValueError):
        split(statement_units(flat_script(3)), 4)
    with pytest.raises(ValueError):
        split_script("exit 0;\n", 2)


def test_units_follow_statement_spans_and_merge_overlaps():
    text = "fn() {\n echo;\n}\nfn;\nexit 0;\n"
    units = statement_units(text, statement_spans=[(1, 4), (5, 5)])
    assert [sorted(u.lines) for u in units] == [[0, 1, 2, 3], [4]]


def test_single_statement_is_returned_as_is():
    out = reduce("s1=1;\n", subset_oracle([1]))
    assert out.reduced_text == "s1=1;\n"
    assert out.steps == []
    assert out.reduced_loc == out.original_loc == 1


def test_not_failing():
    with pytest.raises(NotFailingError):
        reduce(flat_script(3), lambda text: PASS)


def test_flaky():
    answers = iter(["a", "b"])
    with pytest.raises(FlakyOracleError):
        reduce(flat_script(3), lambda text: next(answers))


def test_sixteen_statements_one_culprit():
    text = flat_script(16)
    out = reduce(text, subset_oracle([11]))
    assert present(out.reduced_text) == {11}
    assert out.signature == "boom"
    assert replay(text, out.steps) == out.reduced_text
    assert out.oracle_evaluations <= 2000


def test_two_culprits_match_brute_force():
    text = flat_script(16)
    oracle = subset_oracle([3, 11])
    out = reduce(text, oracle)
    best = min(
        (set(c) for k in range(1, 17) for c in itertools.combinations(range(1, 17), k)
         if oracle("".join(f"s{i}=1;\n" for i in c)) == "boom"),
        key=len,
    )
    assert present(out.reduced_text) == best == {3, 11}


def test_budget_exhaustion_returns_best_so_far():
    text = flat_script(40)
    out = reduce(text, subset_oracle([7, 29]), budget=6)
    assert out.budget_exceeded
    assert out.oracle_evaluations == 6
    assert {7, 29} <= present(out.reduced_text)


def test_protected_statement_survives():
    text = flat_script(8)
    out = reduce(text, subset_oracle([2]), protected_spans=[(6, 6)])
    assert present(out.reduced_text) == {2, 6}


def test_multiline_failing_statement_kept_whole():
    text = "a=1;\nb=2;\nx=\"$((1/\n0))\";\nc=3;\nexit 0;\n"

    def oracle(t):
        return "div" if 'x="$((1/\n0))";' in t else PASS

    out = reduce(text, oracle, protected_spans=[(3, 3)])
    assert out.reduced_text.strip() == 'x="$((1/\n0))";'


def test_descends_into_compound_bodies():
    text = "if true; then\n  s1=1;\n  s2=1;\n  s3=1;\nfi\ns4=1;\n"
    out = reduce(text, subset_oracle([2]))
    assert out.reduced_text.splitlines() == ["if true; then", "  s2=1;", "fi"]


def test_body_never_emptied():
    text = "if true; then\n  s1=1;\nfi\ns2=1;\n"

    def oracle(t):
        return "x" if "if true" in t and "fi" in t else PASS

    out = reduce(text, oracle)
    assert out.reduced_text.splitlines() == ["if true; then", "  s1=1;", "fi"]


def test_cache_avoids_repeat_evaluations():
    seen = []
    reduce(flat_script(16), subset_oracle([5], counter=seen))
    assert len(seen) - 1 == len(set(seen))  # only the original is evaluated twice


@pytest.mark.parametrize(
    "stderr,line",
    [
        (b"script.sh: 4: arithmetic expression: division by zero", 4),
        (b"script.sh: line 7: syntax error near 'done'", 7),
        (b"mksh: script.sh[12]: bad substitution", 12),
        (b"no location here", None),
    ],
)
def test_failing_line(stderr, line):
    assert failing_line(stderr) == line


def test_unit_first():
    assert Unit(frozenset({4, 2, 9})).first == 2


@settings(max_examples=150, deadline=None)
@given(
    n=st.integers(2, 14),
    data=st.data(),
)
def test_reduction_preserves_behavior_and_is_one_minimal(n, data):
    sets = data.draw(
        st.lists(st.sets(st.integers(1, n), min_size=1, max_size=3), min_size=1, max_size=3)
    )
    oracle = subset_oracle(*sets)
    text = flat_script(n)
    if oracle(text) == PASS:
        return
    out = reduce(text, oracle)
    assert oracle(out.reduced_text) == oracle(text)
    assert out.reduced_loc <= out.original_loc
    assert replay(text, out.steps) == out.reduced_text
    kept = sorted(present(out.reduced_text))
    if len(kept) > 1:
        for drop in kept:
            rest = "".join(f"s{i}=1;\n" for i in kept if i != drop)
            assert oracle(rest) == PASS
