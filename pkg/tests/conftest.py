import os
import random
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from address_space import compare  # noqa: E402
from config import Config  # noqa: E402
from engine import ProductMatrix, pi_copy  # noqa: E402
from grammar import Grammar, Rule, Var, load_grammar, parse_grammar  # noqa: E402

BUNDLED = ("cfg_anbn", "count4", "tag_style", "itg_sep", "dual_initial_demo")


@pytest.fixture
def bundled():
    """Load a bundled grammar by name."""
    def load(name: str) -> Grammar:
        return load_grammar(name, Config.GRAMMAR_DIR)
    return load


@pytest.fixture
def cfg_ab() -> Grammar:
    return parse_grammar("start S\nS -> A B : b1 g1\nA -> : 'a'\nB -> : 'b'\n", "cfg_ab")


def random_rule(rng: random.Random) -> tuple[tuple[tuple[Var, ...], ...], int, int]:
    """A random well-formed template list plus the children's fan-outs."""
    phi_b, phi_c = rng.randint(1, 3), rng.randint(1, 3)
    betas = [Var("b", k) for k in range(1, phi_b + 1)]
    gammas = [Var("g", k) for k in range(1, phi_c + 1)]
    order = [betas.pop(0)]
    while betas or gammas:
        source = rng.choice([s for s in (betas, gammas) if s])
        order.append(source.pop(0))
    spans, current = [], [order[0]]
    for v in order[1:]:
        if v.source == current[-1].source or rng.random() < 0.3:
            spans.append(tuple(current))
            current = [v]
        else:
            current.append(v)
    spans.append(tuple(current))
    return tuple(spans), phi_b, phi_c


def random_grammar(rng: random.Random) -> Grammar:
    """One binary rule A -> B C over lexical children."""
    comp, phi_b, phi_c = random_rule(rng)
    rules = (
        Rule(1, "A", ("B", "C"), comp=comp),
        Rule(2, "B", strings=tuple(("b",) for _ in range(phi_b))),
        Rule(3, "C", strings=tuple(("c",) for _ in range(phi_c))),
    )
    fan_outs = {"A": len(comp), "B": phi_b, "C": phi_c}
    return Grammar("A", fan_outs, rules, frozenset({"b", "c"}), "random")


@pytest.fixture
def grammar_factory():
    return random_grammar


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run the exhaustive agreement grids")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: exhaustive grid, needs --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def random_chain_grammar(rng: random.Random, depth: int = 2) -> Grammar:
    """S over a first-child chain X1 -> X2 C1, X2 -> X3 C2, ... of fan-out 2.

    Every level has a rule whose second span opens with g1, so each level is converted
    and the empty-span variants stack down the chain. Some levels also get a
    single-initial alternative.
    """
    bottom = f"X{depth + 1}"
    specs: list[tuple] = [
        ("S", ("X1", "D"), ((Var("b", 1), Var("g", 1), Var("b", 2)),), ()),
        ("D", (), (), (("d",),)),
        (bottom, (), (), (("a",), ("b",))),
    ]
    fan_outs = {"S": 1, "D": 1, bottom: 2}
    b1, b2, g1, g2 = Var("b", 1), Var("b", 2), Var("g", 1), Var("g", 2)
    for level in range(1, depth + 1):
        parent, child, sibling = f"X{level}", f"X{level + 1}", f"C{level}"
        fan_outs[parent] = 2
        if rng.random() < 0.5:
            fan_outs[sibling] = 1
            specs.append((parent, (child, sibling), ((b1,), (g1, b2)), ()))
            specs.append((sibling, (), (), (("c",),)))
        else:
            fan_outs[sibling] = 2
            specs.append((parent, (child, sibling), ((b1,), (g1, b2, g2)), ()))
            specs.append((sibling, (), (), (("c",), ("c",))))
        if rng.random() < 0.5:
            second = (b2,) if fan_outs[sibling] == 1 else (b2, g2)
            specs.append((parent, (child, sibling), ((b1, g1), second), ()))
    rules = tuple(Rule(k, lhs, rhs, comp=comp, strings=strings)
                  for k, (lhs, rhs, comp, strings) in enumerate(specs, start=1))
    return Grammar("S", fan_outs, rules, frozenset({"a", "b", "c", "d"}), "chain")


def check_invariants(matrix: ProductMatrix, copy_complete: bool = False):
    """Cells above the diagonal, never two marks in one cell, optionally closed under Pi."""
    for i, j, symbols in matrix.items():
        assert compare(i, j) < 0, f"{i} {j}"
        assert not (i.is_marked and j.is_marked), f"{i} {j}"
        assert symbols
    if copy_complete:
        assert pi_copy(matrix) == matrix
