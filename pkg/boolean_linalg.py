"""Boolean matrix multiplication and the reduction of the cell product to it.

One product of two product matrices becomes a fixed set of Boolean matrix
products: one per binary rule, one per (nonterminal, copy symbol) pair.
Configuration and marking conditions are checked while the factor matrices
are built (row side and middle side) and on the result (column side).

Factors are kept as sparse bit lists. A product is compacted to the rows,
middles and columns its two factors use, multiplied as unpacked numpy bool
arrays, and mapped back to address ids. Only the bitset backend packs words.
"""
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from address_space import Address, endpoints_at
from config import BACKENDS, Config, check_choice
from engine import Cell, CopySymbol, ProductMatrix, check_same_space, rule_configs
from grammar import Grammar, Rule

NAIVE_CHUNK = 64

LEFT_COPY = (CopySymbol.FROM_ROW, CopySymbol.TO_ROW, CopySymbol.UNMARK_ROW)
RIGHT_COPY = (CopySymbol.TO_COL, CopySymbol.FROM_COL, CopySymbol.UNMARK_COL)


# ============================================================================
# BOOLEAN MULTIPLICATION BACKENDS
# ============================================================================

def _check_shapes(a: np.ndarray, b: np.ndarray):
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ValueError(f"cannot multiply shapes {a.shape} and {b.shape}")


def multiply_naive(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """OR of ANDs, broadcast over row chunks."""
    _check_shapes(a, b)
    a, b = a.astype(bool), b.astype(bool)
    out = np.zeros((a.shape[0], b.shape[1]), dtype=bool)
    for start in range(0, a.shape[0], NAIVE_CHUNK):
        stop = start + NAIVE_CHUNK
        out[start:stop] = np.any(a[start:stop, :, None] & b[None, :, :], axis=1)
    return out


def multiply_bitset(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Rows of b packed into machine words; each output row ORs the selected rows."""
    _check_shapes(a, b)
    a = a.astype(bool)
    width = b.shape[1]
    packed = np.packbits(b.astype(bool), axis=1)
    out = np.zeros((a.shape[0], packed.shape[1]), dtype=np.uint8)
    for row in range(a.shape[0]):
        hits = np.flatnonzero(a[row])
        if hits.size:
            out[row] = np.bitwise_or.reduce(packed[hits], axis=0)
    return np.unpackbits(out, axis=1, count=width).astype(bool)


def _strassen_counts(a: np.ndarray, b: np.ndarray, cutoff: int) -> np.ndarray:
    n = a.shape[0]
    if n <= cutoff:
        return a @ b

    mid = n // 2
    a11, a12, a21, a22 = a[:mid, :mid], a[:mid, mid:], a[mid:, :mid], a[mid:, mid:]
    b11, b12, b21, b22 = b[:mid, :mid], b[:mid, mid:], b[mid:, :mid], b[mid:, mid:]

    m1 = _strassen_counts(a11 + a22, b11 + b22, cutoff)
    m2 = _strassen_counts(a21 + a22, b11, cutoff)
    m3 = _strassen_counts(a11, b12 - b22, cutoff)
    m4 = _strassen_counts(a22, b21 - b11, cutoff)
    m5 = _strassen_counts(a11 + a12, b22, cutoff)
    m6 = _strassen_counts(a21 - a11, b11 + b12, cutoff)
    m7 = _strassen_counts(a12 - a22, b21 + b22, cutoff)

    c = np.empty((n, n), dtype=np.int64)
    c[:mid, :mid] = m1 + m4 - m5 + m7
    c[:mid, mid:] = m3 + m5
    c[mid:, :mid] = m2 + m4
    c[mid:, mid:] = m1 - m2 + m3 + m6
    return c


def multiply_strassen(a: np.ndarray, b: np.ndarray, cutoff: Optional[int] = None) -> np.ndarray:
    """Strassen over exact integer counts, thresholded at zero.

    Operands are padded to a square power of two. Counts are exact in int64
    for any operand that fits in memory, so no saturation is needed.
    """
    _check_shapes(a, b)
    cutoff = Config.STRASSEN_CUTOFF if cutoff is None else max(1, cutoff)
    rows, inner, cols = a.shape[0], a.shape[1], b.shape[1]
    size = 1
    while size < max(rows, inner, cols, 1):
        size *= 2
    pa = np.zeros((size, size), dtype=np.int64)
    pb = np.zeros((size, size), dtype=np.int64)
    pa[:rows, :inner] = a
    pb[:inner, :cols] = b
    return _strassen_counts(pa, pb, cutoff)[:rows, :cols] > 0


_BACKENDS: dict[str, Callable[..., np.ndarray]] = {
    "naive": multiply_naive,
    "bitset": multiply_bitset,
    "strassen": multiply_strassen,
}


def bool_multiply(a: np.ndarray, b: np.ndarray, backend: str = "bitset",
                  cutoff: Optional[int] = None) -> np.ndarray:
    backend = check_choice("backend", backend, BACKENDS)
    if backend == "strassen":
        return multiply_strassen(a, b, cutoff)
    return _BACKENDS[backend](a, b)


# ============================================================================
# FACTOR MATRICES
# ============================================================================

@dataclass
class ProductStats:
    multiplications: int = 0
    skipped: int = 0


@dataclass
class Block:
    """Id ranges of one block product: rows x mids times mids x cols."""
    rows: range
    mids: range
    cols: range

    @classmethod
    def full(cls, size: int) -> "Block":
        return cls(range(size), range(size), range(size))


@dataclass
class Factor:
    """Set bits of one factor matrix as parallel lists of global address ids."""
    rows: list[int] = field(default_factory=list)
    cols: list[int] = field(default_factory=list)

    def add(self, row: int, col: int):
        self.rows.append(row)
        self.cols.append(col)

    def __len__(self) -> int:
        return len(self.rows)

    def bits(self) -> set[Cell]:
        return set(zip(self.rows, self.cols))


@dataclass
class RuleFactors:
    """Factors with at least one set bit; an absent key is an all-zero matrix."""
    rule_left: dict[int, Factor] = field(default_factory=lambda: defaultdict(Factor))
    rule_right: dict[int, Factor] = field(default_factory=lambda: defaultdict(Factor))
    nt_left: dict[str, Factor] = field(default_factory=lambda: defaultdict(Factor))
    nt_right: dict[str, Factor] = field(default_factory=lambda: defaultdict(Factor))
    copy_left: dict[CopySymbol, Factor] = field(default_factory=lambda: defaultdict(Factor))
    copy_right: dict[CopySymbol, Factor] = field(default_factory=lambda: defaultdict(Factor))

    def __len__(self) -> int:
        return (len(self.rule_left) + len(self.rule_right) + len(self.nt_left)
                + len(self.nt_right) + len(self.copy_left) + len(self.copy_right))


def factor_count(g: Grammar) -> int:
    """Upper bound on the number of factors of one product."""
    return 2 * len(g.binary_rules) + 2 * len(g.nonterminals) + 6


def _left_ok(g: Grammar, r: Rule, i: Address, k: Address) -> bool:
    if i.is_marked or k.is_marked or len(i) + len(k) != 2 * g.fan_outs[r.rhs[0]]:
        return False
    return endpoints_at(i, k, rule_configs(r).cfg2) == i.positions


def _right_ok(g: Grammar, r: Rule, k: Address, j: Address) -> bool:
    if k.is_marked or j.is_marked or len(k) + len(j) != 2 * g.fan_outs[r.rhs[1]]:
        return False
    return endpoints_at(k, j, rule_configs(r).cfg3) == k.positions


def _result_ok(g: Grammar, r: Rule, i: Address, j: Address) -> bool:
    if i.is_marked or j.is_marked or len(i) + len(j) != 2 * g.fan_outs[r.lhs]:
        return False
    return endpoints_at(i, j, rule_configs(r).cfg1) == i.positions


def _copy_ok(symbol: CopySymbol, g: Grammar, nt: str, i: Address, j: Address) -> bool:
    if symbol is CopySymbol.TO_COL:
        return not i.is_marked and j.is_marked and j.marked_pos in i.positions
    if symbol is CopySymbol.FROM_COL:
        return i.is_marked and i.marked_pos not in j.positions
    if symbol is CopySymbol.FROM_ROW:
        return j.is_marked and j.marked_pos not in i.positions
    if symbol is CopySymbol.TO_ROW:
        return not j.is_marked and i.is_marked and i.marked_pos in j.positions
    return len(i) + len(j) == 2 * g.fan_outs[nt]


def build_rule_factors(t1: ProductMatrix, t2: ProductMatrix, g: Grammar,
                       block: Optional[Block] = None) -> RuleFactors:
    """Sparse Boolean factors of one block product, in global address ids.

    Only nonterminals and copy symbols that occur in the block get a factor.
    """
    check_same_space(t1, t2)
    space = t1.space
    block = block or Block.full(len(space))
    factors = RuleFactors()

    left_rules = defaultdict(list)
    right_rules = defaultdict(list)
    for r in g.binary_rules:
        left_rules[r.rhs[0]].append(r)
        right_rules[r.rhs[1]].append(r)

    for (ri, ck), symbols in t1.cells.items():
        if ri not in block.rows or ck not in block.mids:
            continue
        i, k = space.address(ri), space.address(ck)
        for s in symbols:
            if isinstance(s, CopySymbol):
                if s in LEFT_COPY:
                    factors.copy_left[s].add(ri, ck)
                continue
            factors.nt_left[s].add(ri, ck)
            for r in left_rules.get(s, ()):
                if _left_ok(g, r, i, k):
                    factors.rule_left[r.id].add(ri, ck)

    for (rk, cj), symbols in t2.cells.items():
        if rk not in block.mids or cj not in block.cols:
            continue
        k, j = space.address(rk), space.address(cj)
        for s in symbols:
            if isinstance(s, CopySymbol):
                if s in RIGHT_COPY:
                    factors.copy_right[s].add(rk, cj)
                continue
            factors.nt_right[s].add(rk, cj)
            for r in right_rules.get(s, ()):
                if _right_ok(g, r, k, j):
                    factors.rule_right[r.id].add(rk, cj)
    return factors


def compact(left: Factor, right: Factor) -> Optional[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]]:
    """Dense operands over the ids the two factors actually use.

    Returns (row ids, left matrix, right matrix, column ids), or None when the
    factors share no middle id and the product is zero.
    """
    left_rows, left_mids = np.asarray(left.rows), np.asarray(left.cols)
    right_mids, right_cols = np.asarray(right.rows), np.asarray(right.cols)
    mids = np.intersect1d(left_mids, right_mids)
    if mids.size == 0:
        return None

    keep = np.isin(left_mids, mids)
    rows, row_at = np.unique(left_rows[keep], return_inverse=True)
    a = np.zeros((rows.size, mids.size), dtype=bool)
    a[row_at, np.searchsorted(mids, left_mids[keep])] = True

    keep = np.isin(right_mids, mids)
    cols, col_at = np.unique(right_cols[keep], return_inverse=True)
    b = np.zeros((mids.size, cols.size), dtype=bool)
    b[np.searchsorted(mids, right_mids[keep]), col_at] = True
    return rows, a, b, cols


# ============================================================================
# PRODUCT VIA BOOLEAN MULTIPLICATION
# ============================================================================

def product_via_boolean(t1: ProductMatrix, t2: ProductMatrix, g: Grammar,
                        backend: str = "bitset", block: Optional[Block] = None,
                        stats: Optional[ProductStats] = None,
                        cutoff: Optional[int] = None) -> ProductMatrix:
    """The cell-wise product t1 (x) t2 computed with Boolean matrix products."""
    space = t1.space
    stats = stats if stats is not None else ProductStats()
    factors = build_rule_factors(t1, t2, g, block)
    out: dict[Cell, set] = defaultdict(set)

    def run(left: Optional[Factor], right: Optional[Factor],
            emit: Callable[[Address, Address, int, int], None]):
        operands = compact(left, right) if left and right else None
        if operands is None:
            stats.skipped += 1
            return
        rows, a, b, cols = operands
        stats.multiplications += 1
        result = bool_multiply(a, b, backend, cutoff)
        for x, y in np.argwhere(result):
            ri, cj = int(rows[x]), int(cols[y])
            if ri < cj:
                emit(space.address(ri), space.address(cj), ri, cj)

    for r in g.binary_rules:
        def emit_rule(i, j, ri, cj, r=r):
            if _result_ok(g, r, i, j):
                out[(ri, cj)].add(r.lhs)
        run(factors.rule_left.get(r.id), factors.rule_right.get(r.id), emit_rule)

    for nt in sorted(g.nonterminals):
        for symbol in RIGHT_COPY:
            def emit_right(i, j, ri, cj, symbol=symbol, nt=nt):
                if _copy_ok(symbol, g, nt, i, j):
                    out[(ri, cj)].add(nt)
            run(factors.nt_left.get(nt), factors.copy_right.get(symbol), emit_right)
        for symbol in LEFT_COPY:
            def emit_left(i, j, ri, cj, symbol=symbol, nt=nt):
                if _copy_ok(symbol, g, nt, i, j):
                    out[(ri, cj)].add(nt)
            run(factors.copy_left.get(symbol), factors.nt_right.get(nt), emit_left)

    return ProductMatrix.from_sets(space, out)
