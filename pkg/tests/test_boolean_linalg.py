import random

import numpy as np
import pytest

from boolean_linalg import (
    Block,
    Factor,
    ProductStats,
    bool_multiply,
    build_rule_factors,
    compact,
    factor_count,
    multiply_bitset,
    multiply_naive,
    multiply_strassen,
    product_via_boolean,
)
from engine import ProductMatrix, matrix_product, seed, space_for, union
from tests.conftest import check_invariants

ENGINE_GRAMMARS = ("cfg_anbn", "count4", "tag_style", "itg_sep")


def reference(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (a.astype(np.int64) @ b.astype(np.int64)) > 0


# ============================================================================
# BACKENDS
# ============================================================================

@pytest.mark.parametrize("dim", [16, 64, 128, 256])
def test_backends_agree_on_random_matrices(dim):
    rng = np.random.default_rng(dim)
    for trial in range(100):
        density = rng.uniform(0.005, 0.2)
        a = rng.random((dim, dim)) < density
        b = rng.random((dim, dim)) < density
        expected = reference(a, b)
        assert np.array_equal(multiply_naive(a, b), expected)
        assert np.array_equal(multiply_bitset(a, b), expected)
        assert np.array_equal(multiply_strassen(a, b, cutoff=max(8, dim // 8)), expected)


def test_rectangular_operands():
    rng = np.random.default_rng(3)
    a = rng.random((5, 11)) < 0.4
    b = rng.random((11, 3)) < 0.4
    expected = reference(a, b)
    for backend in ("naive", "bitset", "strassen"):
        result = bool_multiply(a, b, backend, cutoff=2)
        assert result.shape == (5, 3)
        assert result.dtype == bool
        assert np.array_equal(result, expected)


def test_all_ones_do_not_overflow():
    a = np.ones((16, 16), dtype=bool)
    assert multiply_strassen(a, a, cutoff=1).all()


def test_empty_operands():
    a = np.zeros((0, 4), dtype=bool)
    b = np.zeros((4, 2), dtype=bool)
    assert bool_multiply(a, b, "bitset").shape == (0, 2)


def test_shape_mismatch():
    with pytest.raises(ValueError):
        multiply_naive(np.zeros((2, 3), dtype=bool), np.zeros((2, 3), dtype=bool))


def test_unknown_backend():
    a = np.zeros((2, 2), dtype=bool)
    with pytest.raises(ValueError, match="Invalid backend"):
        bool_multiply(a, a, "gpu")


# ============================================================================
# REDUCTION
# ============================================================================

def random_instances(bundled, count: int, max_n: int, seed_value: int):
    rng = random.Random(seed_value)
    grammars = [bundled(name) for name in ENGINE_GRAMMARS]
    for _ in range(count):
        g = rng.choice(grammars)
        n = rng.randint(1, max_n)
        terminals = sorted(g.terminals)
        yield g, tuple(rng.choice(terminals) for _ in range(n))


def test_factor_count(bundled):
    g = bundled("count4")
    t = seed(g, "a b c d".split(), space_for(g, 4))
    factors = build_rule_factors(t, t, g)
    assert 0 < len(factors) <= factor_count(g) == 2 * 3 + 2 * 5 + 6
    present = {s for symbols in t.cells.values() for s in symbols}
    assert set(factors.nt_left) <= present
    assert set(factors.nt_right) <= present
    assert all(len(f) > 0 for f in factors.nt_left.values())


def test_factors_of_empty_matrix(cfg_ab):
    empty = ProductMatrix(space_for(cfg_ab, 2))
    assert len(build_rule_factors(empty, empty, cfg_ab)) == 0
    stats = ProductStats()
    assert product_via_boolean(empty, empty, cfg_ab, stats=stats).fact_count() == 0
    assert stats.multiplications == 0
    assert stats.skipped == len(cfg_ab.binary_rules) + 6 * len(cfg_ab.nonterminals)


def test_factors_are_upper_triangular(bundled):
    g = bundled("tag_style")
    t = seed(g, "a b e c d".split(), space_for(g, 5))
    t = union(t, matrix_product(t, t, g))
    factors = build_rule_factors(t, t, g)
    groups = (factors.rule_left, factors.rule_right, factors.nt_left,
              factors.nt_right, factors.copy_left, factors.copy_right)
    for group in groups:
        for factor in group.values():
            assert all(row < col for row, col in factor.bits())


def test_compact_keeps_only_shared_middles():
    left, right = Factor(), Factor()
    left.add(0, 5)
    left.add(1, 7)
    right.add(5, 9)
    right.add(6, 12)
    rows, a, b, cols = compact(left, right)
    assert rows.tolist() == [0]
    assert cols.tolist() == [9]
    assert a.shape == (1, 1) and b.shape == (1, 1)
    assert a.all() and b.all()

    disjoint = Factor()
    disjoint.add(8, 9)
    assert compact(left, disjoint) is None


def test_reduction_matches_cell_product(bundled):
    for g, sentence in random_instances(bundled, 50, 5, 11):
        t = seed(g, sentence, space_for(g, len(sentence)))
        for _ in range(2):
            expected = matrix_product(t, t, g)
            check_invariants(expected)
            for backend in ("naive", "bitset", "strassen"):
                assert product_via_boolean(t, t, g, backend, cutoff=4) == expected
            t = union(t, expected)


def test_reduction_on_member_sentence(bundled):
    g = bundled("count4")
    t = seed(g, "a a b c c d".split(), space_for(g, 6))
    stats = ProductStats()
    product = product_via_boolean(t, t, g, "bitset", stats=stats)
    assert product == matrix_product(t, t, g)
    assert stats.multiplications > 0
    assert stats.multiplications + stats.skipped == len(g.binary_rules) + 6 * len(g.nonterminals)


def test_block_product_matches_restricted_product(bundled):
    g = bundled("tag_style")
    t = seed(g, "a b e c d".split(), space_for(g, 5))
    t = union(t, matrix_product(t, t, g))
    size = len(t.space)
    block = Block(range(0, size // 2), range(0, size), range(size // 3, size))
    expected = matrix_product(t.restrict(block.rows, block.mids), t.restrict(block.mids, block.cols), g)
    expected = expected.restrict(block.rows, block.cols)
    assert product_via_boolean(t, t, g, "bitset", block=block) == expected
