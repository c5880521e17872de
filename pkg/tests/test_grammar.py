import dataclasses
import math
import random

import pytest

from grammar import (
    Grammar,
    GrammarError,
    Var,
    analyze,
    binarization_bound,
    config_set,
    configurations,
    contact_rank,
    delta,
    dual_initial_rules,
    fan_out,
    format_grammar,
    is_balanced,
    is_enclosing,
    is_single_initial,
    list_bundled,
    load_grammar,
    parse_grammar,
    per_rule_contact_rank,
    rule_weight,
    tabular_exponent,
    to_single_initial,
    validate,
)
from config import Config
from oracle import enumerate_language
from tests.conftest import BUNDLED, random_chain_grammar


# ============================================================================
# PARSING
# ============================================================================

def test_parse_binary_and_lexical_rules(bundled):
    g = bundled("count4")
    assert g.start == "S"
    assert g.fan_outs == {"S": 1, "A": 2, "B": 2, "X": 2, "Y": 2}
    first = g.rules[0]
    assert first.rhs == ("A", "B")
    assert first.comp == ((Var("b", 1), Var("g", 1), Var("b", 2), Var("g", 2)),)
    assert g.rule(4).strings == (("a",), ("c",))
    assert g.terminals == frozenset("abcd")


def test_empty_span_and_comments():
    g = parse_grammar("start S  # top\nS -> A C : b1 g1 b2\nA -> : 'a' , ''\nC -> : '#'\n")
    assert g.rule(2).strings == (("a",), ())
    assert "#" in g.terminals


def test_comma_terminal():
    g = parse_grammar("start S\nS -> A B : b1 g1 b2\nA -> : ',' , 'a,b'\nB -> : ','\n")
    assert g.rule(2).strings == ((",",), ("a,b",))
    assert g.rule(3).strings == ((",",),)
    assert {",", "a,b"} <= g.terminals
    again = parse_grammar(format_grammar(g))
    assert [str(r) for r in again.rules] == [str(r) for r in g.rules]


def test_missing_lexical_span():
    with pytest.raises(GrammarError, match="missing span"):
        parse_grammar("start S\nS -> A B : b1 g1 b2\nA -> : 'a' ,\nB -> : 'b'\n")


def test_nonterminal_named_start():
    g = parse_grammar("start S\nS -> start B : b1 g1\nstart -> : 'a'\nB -> : 'b'\n")
    assert g.start == "S"
    assert g.fan_outs["start"] == 1
    assert g.rule(2).lhs == "start"
    again = parse_grammar(format_grammar(g))
    assert again.start == "S"
    assert [str(r) for r in again.rules] == [str(r) for r in g.rules]


def test_bundled_grammars_are_listed():
    assert set(BUNDLED) <= set(list_bundled(Config.GRAMMAR_DIR))


def test_load_unknown_grammar():
    with pytest.raises(FileNotFoundError):
        load_grammar("no_such_grammar", Config.GRAMMAR_DIR)


@pytest.mark.parametrize("text, fragment, line", [
    ("S -> A B : b1 g1\n", "missing 'start", None),
    ("start S\nS -> A : b1\n", "unary rules", 2),
    ("start S\nS -> A B C : b1\n", "at most two", 2),
    ("start S\nS -> A B : b1 g1\nA -> : 'a' , 'b'\nB -> : 'b'\n", "fan-out mismatch", 3),
    ("start S\nS -> A B : b1 g1\nA -> : 'a'\n", "unknown symbol B", 2),
    ("start S\nS -> A B : b1 , g1\nA -> : 'a'\nB -> : 'b'\n", "fan-out 1", 1),
    ("start S\nS -> A B : b1 x1\n", "expected a variable", 2),
    ("start S\nS -> : a\n", "single-quoted", 2),
    ("start S\nS -> A B : g1 b1\nA -> : 'a'\nB -> : 'b'\n", "start with b1", 2),
])
def test_parse_errors(text, fragment, line):
    with pytest.raises(GrammarError) as info:
        parse_grammar(text)
    assert fragment in str(info.value)
    assert info.value.line == line


def test_parse_error_has_column():
    with pytest.raises(GrammarError) as info:
        parse_grammar("start S\nS -> A B : b1 zz\n")
    assert info.value.column == 15


def test_format_grammar_parses_back(bundled):
    for name in BUNDLED:
        g = bundled(name)
        again = parse_grammar(format_grammar(g), g.name)
        assert [str(r) for r in again.rules] == [str(r) for r in g.rules]
        assert again.fan_outs == g.fan_outs


# ============================================================================
# VALIDATION
# ============================================================================

@pytest.mark.parametrize("rule, x_spans, message", [
    ("A -> X Y : b1 g1 b1 , g2", "'x'", "non-linear use of b1"),
    ("A -> X Y : b2 g1 , g2", "'x' , 'x'", "b1 unused (erasing)"),
    ("A -> X Y : b1 g2 , b2 g1", "'x' , 'x'", "gamma order"),
    ("A -> X Y : b1 b2 g1 , g2", "'x' , 'x'", "adjacent variables b1 b2"),
])
def test_validation_violations(rule, x_spans, message):
    text = (f"start S\nS -> A Z : b1 g1 b2\n{rule}\nX -> : {x_spans}\n"
            "Y -> : 'y' , 'y'\nZ -> : 'z'\n")
    with pytest.raises(GrammarError) as info:
        parse_grammar(text)
    assert message in str(info.value)


def test_adjacent_same_child_variables_rejected():
    text = "start S\nS -> A B : b1 b2 g1\nA -> : 'a' , 'a'\nB -> : 'b'\n"
    with pytest.raises(GrammarError, match="same child"):
        parse_grammar(text)


def test_lexical_first_span_must_be_nonempty():
    text = "start S\nS -> A B : b1 g1 b2\nA -> : '' , 'a'\nB -> : 'b'\n"
    with pytest.raises(GrammarError, match="first span must be nonempty"):
        parse_grammar(text)


def test_bundled_grammars_validate(bundled):
    for name in BUNDLED:
        assert validate(bundled(name)) == []


# ============================================================================
# ANALYSIS
# ============================================================================

@pytest.mark.parametrize("name, d, balanced", [
    ("cfg_anbn", 1, False),
    ("count4", 3, False),
    ("tag_style", 2, False),
    ("itg_sep", 2, True),
    ("dual_initial_demo", 3, False),
])
def test_contact_rank_and_balance(bundled, name, d, balanced):
    g = bundled(name)
    assert contact_rank(g) == d
    assert is_balanced(g) is balanced


def test_count4_rule_numbers(bundled):
    g = bundled("count4")
    top = g.rule(1)
    assert delta(g, top) == 3
    assert per_rule_contact_rank(g, top) == 3
    assert configurations(top).to_dict() == {"cfg1": [1], "cfg2": [1], "cfg3": [1, 2, 3]}
    assert fan_out(g) == 2
    assert tabular_exponent(g) == 6
    assert binarization_bound(g, top) == pytest.approx(3 / (5 / 3))


def test_itg_config_sets(bundled):
    g = bundled("itg_sep")
    assert config_set(g, "A") == {frozenset({1, 3}), frozenset({1, 4})}


def test_tag_style_configurations(bundled):
    g = bundled("tag_style")
    rule = g.rule(2)
    cfg = configurations(rule)
    assert cfg.cfg1 == cfg.cfg2 == cfg.cfg3 == frozenset({1, 4})


def test_enclosing_rules(bundled):
    g = bundled("tag_style")
    assert is_enclosing(g, g.rule(1))
    assert not is_enclosing(g, g.rule(2))


def test_delta_of_lexical_rule_is_undefined(bundled):
    g = bundled("cfg_anbn")
    with pytest.raises(ValueError):
        delta(g, g.rule(4))


def test_analyze_report(bundled):
    report = analyze(bundled("itg_sep"), omega=2.5)
    data = report.to_dict()
    assert data["d"] == 2
    assert data["balanced"] is True
    assert data["predicted_matmul_exponent"] == pytest.approx(6.0)
    assert data["tabular_exponent"] == 6
    assert data["config_sets"]["A"] == [[1, 3], [1, 4]]
    assert all(r["binarization_ratio"] >= 1 for r in data["per_rule"])


def test_grammar_without_binary_rules():
    g = parse_grammar("start S\nS -> : 'a'\n")
    report = analyze(g)
    assert report.d == 1
    assert report.per_rule == ()
    assert report.predicted_matmul_exponent == pytest.approx(report.omega)


def renamed(g: Grammar, prefix: str) -> Grammar:
    """The same grammar with renamed nonterminals and its rules in reverse order."""
    def name(symbol: str) -> str:
        return prefix + symbol
    rules = tuple(
        dataclasses.replace(r, id=k, lhs=name(r.lhs), rhs=tuple(name(c) for c in r.rhs))
        for k, r in enumerate(reversed(g.rules), start=1))
    fan_outs = {name(a): phi for a, phi in reversed(list(g.fan_outs.items()))}
    return Grammar(name(g.start), fan_outs, rules, g.terminals, g.name)


def test_analysis_ignores_names_and_rule_order(bundled):
    for source in BUNDLED:
        g = bundled(source)
        other = renamed(g, "N_")
        assert validate(other) == []
        assert contact_rank(other) == contact_rank(g)
        assert is_balanced(other) is is_balanced(g)
        assert tabular_exponent(other) == tabular_exponent(g)
        assert fan_out(other) == fan_out(g)


def test_random_rules_formula_consistency(grammar_factory):
    rng = random.Random(20240611)
    for _ in range(200):
        g = grammar_factory(rng)
        r = g.rule(1)
        dl = delta(g, r)
        cfg = configurations(r)
        pb, pc = g.fan_outs["B"], g.fan_outs["C"]
        assert len(cfg.cfg2) + dl == 2 * pb
        assert len(cfg.cfg3) == dl
        assert len(cfg.cfg1) == 2 * g.fan_outs["A"] - (2 * pc - dl)
        assert contact_rank(g) == per_rule_contact_rank(g, r)
        assert per_rule_contact_rank(g, r) >= math.ceil(rule_weight(g, r) / 3)

        converted = to_single_initial(g)
        assert is_single_initial(converted)
        assert fan_out(converted) <= fan_out(g) + 1
        assert [v for v in validate(converted) if not v.startswith("start")] == []


# ============================================================================
# SINGLE-INITIAL CONVERSION
# ============================================================================

def test_single_initial_flags(bundled):
    assert is_single_initial(bundled("count4"))
    assert not is_single_initial(bundled("dual_initial_demo"))


def test_dual_initial_conversion(bundled):
    g = bundled("dual_initial_demo")
    converted = to_single_initial(g)
    assert is_single_initial(converted)
    assert validate(converted) == []
    assert converted.fan_outs["B_e2"] == 3
    assert converted.fan_outs["E_e2"] == 3
    rules = {str(r) for r in converted.rules}
    assert "A -> B_e2 C : b1 , b2 g1 b3" in rules
    assert "B_e2 -> E_e2 B : b1 g1 , b2 , b3 g2" in rules
    assert "B_e2 -> : 'a' , '' , 'b'" in rules
    assert contact_rank(converted) == 4
    assert fan_out(converted) == fan_out(g) + 1


def test_single_initial_grammar_is_unchanged(bundled):
    g = bundled("itg_sep")
    assert to_single_initial(g) is g


def test_stacked_conversion_fan_out():
    g = parse_grammar("start S\nS -> A D : b1 g1 b2\nA -> B C : b1 , g1 b2\n"
                      "B -> E F : b1 , g1 b2\nE -> : 'a' , 'b'\nF -> : 'f'\n"
                      "C -> : 'c'\nD -> : 'd'\n")
    converted = to_single_initial(g)
    assert len(dual_initial_rules(g)) == 2
    assert is_single_initial(converted)
    assert validate(converted) == []
    assert fan_out(converted) == 4 == fan_out(g) + len(dual_initial_rules(g))
    assert enumerate_language(converted, 6) == enumerate_language(g, 6) == {tuple("adcfb")}


def test_left_recursive_dual_initial_rule_is_rejected():
    g = parse_grammar("start S\nS -> A D : b1 g1 b2\nA -> A C : b1 , g1 b2\n"
                      "A -> : 'a' , 'b'\nC -> : 'c'\nD -> : 'd'\n")
    with pytest.raises(GrammarError, match="left-recursive"):
        to_single_initial(g)


def test_random_dual_initial_chains():
    rng = random.Random(41)
    for _ in range(30):
        g = random_chain_grammar(rng, rng.randint(1, 3))
        assert validate(g) == []
        converted = to_single_initial(g)
        assert is_single_initial(converted)
        assert validate(converted) == []
        assert fan_out(converted) <= fan_out(g) + len(dual_initial_rules(g))
        members = enumerate_language(g, 9)
        assert members
        assert enumerate_language(converted, 9) == members
