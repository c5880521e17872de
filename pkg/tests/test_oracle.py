import pytest

from grammar import Grammar, parse_grammar
from oracle import (
    ChartItem,
    EnumerationLimitError,
    chart_facts,
    compose,
    enumerate_language,
    tabular_recognize,
)


@pytest.mark.parametrize("name, sentence, expected", [
    ("cfg_anbn", "a a b b", True),
    ("cfg_anbn", "a a b", False),
    ("count4", "a a b c c d", True),
    ("count4", "a b c c d", False),
    ("tag_style", "a a b b e c c d d", True),
    ("itg_sep", "x y x # x x y", True),
    ("itg_sep", "x y # y y", False),
    ("dual_initial_demo", "a a d c b b", True),
    ("dual_initial_demo", "a d c b b", False),
])
def test_tabular_recognize(bundled, name, sentence, expected):
    accepted, _ = tabular_recognize(bundled(name), sentence.split())
    assert accepted is expected


def test_chart_holds_partial_items(bundled):
    _, chart = tabular_recognize(bundled("count4"), "a a b c c d".split())
    assert ChartItem("A", ((0, 2), (3, 5))) in chart
    assert ChartItem("S", ((0, 6),)) in chart
    assert ("B", ((2, 3), (5, 6))) in chart_facts(chart)
    assert str(ChartItem("S", ((0, 6),))) == "S[(0, 6)]"


def test_compose(bundled):
    g = bundled("tag_style")
    r = g.rule(2)
    assert compose(r, ((1, 2), (7, 8)), ((2, 4), (5, 7))) == ((1, 4), (5, 8))
    # first child not adjacent to the second
    assert compose(r, ((1, 2), (7, 8)), ((3, 4), (5, 7))) is None
    # output spans out of order
    assert compose(r, ((5, 6), (1, 2)), ((6, 7), (0, 1))) is None


def test_enumerate_cfg(bundled):
    assert enumerate_language(bundled("cfg_anbn"), 6) == {
        ("a", "b"), ("a", "a", "b", "b"), ("a", "a", "a", "b", "b", "b")}


def test_enumerate_count4(bundled):
    assert enumerate_language(bundled("count4"), 6) == {
        tuple("abcd"), tuple("aabccd"), tuple("abbcdd")}


def test_enumerate_dual_initial(bundled):
    assert enumerate_language(bundled("dual_initial_demo"), 6) == {
        tuple("adcb"), tuple("aadcbb")}


def test_enumerate_without_lexical_rules():
    g = parse_grammar("start S\nS -> S S : b1 g1\n")
    assert enumerate_language(g, 5) == set()


def test_enumerate_bounds(bundled):
    g = bundled("cfg_anbn")
    assert enumerate_language(g, 0) == set()
    with pytest.raises(ValueError):
        enumerate_language(g, -1)
    with pytest.raises(EnumerationLimitError):
        enumerate_language(g, 1000)


def test_enumeration_does_not_depend_on_rule_order(bundled):
    g = bundled("dual_initial_demo")
    reordered = Grammar(g.start, dict(g.fan_outs), tuple(reversed(g.rules)), g.terminals, g.name)
    first = enumerate_language(g, 8)
    assert enumerate_language(g, 8) == first
    assert enumerate_language(reordered, 8) == first
