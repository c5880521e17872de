"""Product matrices over addresses: seeding, the cell product and Pi.

A product matrix maps (row, column) address pairs to sets of symbols. A
symbol is either a nonterminal name or one of the six copy symbols that
move a fact between equivalent cells. Cells are stored sparsely by address
ids of the owning AddressSpace; every stored cell lies strictly above the
diagonal.
"""
from collections import defaultdict
from enum import Enum
from functools import lru_cache
from typing import Iterable, Iterator, Optional, Union

from address_space import (
    Address,
    AddressSpace,
    MarkedIndex,
    Span,
    endpoints_at,
    hat,
    insert,
    mark,
    merge_m,
    remove,
)
from grammar import ConfigTriple, Grammar, Rule, configurations, contact_rank, is_enclosing


class EngineError(RuntimeError):
    """Raised when a matrix operation breaks an engine invariant."""


class CopySymbol(Enum):
    FROM_ROW = "FromRow"
    TO_COL = "ToCol"
    UNMARK_COL = "UnmarkCol"
    TO_ROW = "ToRow"
    FROM_COL = "FromCol"
    UNMARK_ROW = "UnmarkRow"

    def __str__(self) -> str:
        return self.value


Symbol = Union[str, CopySymbol]
Cell = tuple[int, int]


def _symbol_key(symbol: Symbol) -> tuple[int, str]:
    return (1, symbol.value) if isinstance(symbol, CopySymbol) else (0, symbol)


# ============================================================================
# PRODUCT MATRIX
# ============================================================================

class ProductMatrix:
    """Sparse upper-triangular matrix of symbol sets."""

    def __init__(self, space: AddressSpace, cells: Optional[dict[Cell, frozenset]] = None):
        self.space = space
        self.cells: dict[Cell, frozenset] = {}
        for cell, symbols in (cells or {}).items():
            if symbols:
                self._check(cell)
                self.cells[cell] = frozenset(symbols)

    def _check(self, cell: Cell):
        if cell[0] >= cell[1]:
            i, j = (self.space.address(k) for k in cell)
            raise EngineError(f"cell {i} {j} is not above the diagonal")

    @classmethod
    def from_sets(cls, space: AddressSpace, cells: dict[Cell, set]) -> "ProductMatrix":
        return cls(space, {c: frozenset(s) for c, s in cells.items() if s})

    @classmethod
    def wrap(cls, space: AddressSpace, cells: dict[Cell, frozenset]) -> "ProductMatrix":
        """Read-only view over already checked cells; no copy."""
        view = cls.__new__(cls)
        view.space = space
        view.cells = cells
        return view

    def has_nonterminals(self) -> bool:
        return any(isinstance(s, str) for symbols in self.cells.values() for s in symbols)

    def get(self, i: Address, j: Address) -> frozenset:
        ri, cj = self.space.get(i), self.space.get(j)
        if ri is None or cj is None:
            return frozenset()
        return self.cells.get((ri, cj), frozenset())

    def __contains__(self, fact: tuple[Symbol, Address, Address]) -> bool:
        symbol, i, j = fact
        return symbol in self.get(i, j)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ProductMatrix):
            return NotImplemented
        return self._space_key() == other._space_key() and self.cells == other.cells

    __hash__ = None

    def _space_key(self) -> tuple:
        return (self.space.n, self.space.d, self.space.allow_empty)

    def __len__(self) -> int:
        return len(self.cells)

    def items(self) -> Iterator[tuple[Address, Address, frozenset]]:
        for (ri, cj), symbols in sorted(self.cells.items()):
            yield self.space.address(ri), self.space.address(cj), symbols

    def symbols(self) -> set[Symbol]:
        return {s for symbols in self.cells.values() for s in symbols}

    def restrict(self, rows: range, cols: range) -> "ProductMatrix":
        """Only the cells inside the given id ranges."""
        return ProductMatrix(self.space, {
            (r, c): s for (r, c), s in self.cells.items() if r in rows and c in cols
        })

    def fact_count(self) -> int:
        return sum(len(s) for s in self.cells.values())

    def nonterminal_facts(self) -> set[tuple[str, tuple[Span, ...]]]:
        facts = set()
        for i, j, symbols in self.items():
            spans = merge_m(i, j)
            if spans is None:
                continue
            facts.update((s, spans) for s in symbols if isinstance(s, str))
        return facts

    def dump(self) -> str:
        lines = []
        for i, j, symbols in self.items():
            names = " ".join(str(s) for s in sorted(symbols, key=_symbol_key))
            lines.append(f"{i} | {j} | {names}")
        return "\n".join(lines)


def check_same_space(t1: ProductMatrix, t2: ProductMatrix):
    if t1._space_key() != t2._space_key():
        raise EngineError("matrices over different address spaces")


def union(t1: ProductMatrix, t2: ProductMatrix) -> ProductMatrix:
    check_same_space(t1, t2)
    cells = dict(t1.cells)
    for cell, symbols in t2.cells.items():
        cells[cell] = cells.get(cell, frozenset()) | symbols
    return ProductMatrix(t1.space, cells)


def space_for(g: Grammar, n: int) -> AddressSpace:
    """The address space a grammar needs for sentences of length n."""
    return AddressSpace(n, contact_rank(g), allow_empty=any(is_enclosing(g, r) for r in g.binary_rules))


# ============================================================================
# SEEDING
# ============================================================================

def lexical_placements(strings: tuple[tuple[str, ...], ...],
                       sentence: tuple[str, ...]) -> Iterator[tuple[Span, ...]]:
    """Sorted, non-overlapping span tuples whose yields are the given strings."""
    n = len(sentence)

    def place(k: int, lo: int, acc: tuple[Span, ...]):
        if k == len(strings):
            yield acc
            return
        word = strings[k]
        for left in range(lo, n - len(word) + 1):
            if sentence[left:left + len(word)] == word:
                yield from place(k + 1, left + len(word), acc + ((left, left + len(word)),))

    yield from place(0, 0, ())


def _add(cells: dict[Cell, set], space: AddressSpace, i: Address, j: Address, symbol: Symbol):
    ri, cj = space.get(i), space.get(j)
    if ri is not None and cj is not None and ri < cj:
        cells[(ri, cj)].add(symbol)


def _seed_copy_symbols(cells: dict[Cell, set], space: AddressSpace):
    for i in space.unmarked():
        if not i.positions:
            continue
        if len(i) < space.d:
            for x in range(space.n + 1):
                _add(cells, space, i, insert(i, hat(x)), CopySymbol.TO_COL)
                _add(cells, space, insert(i, hat(x)), i, CopySymbol.TO_ROW)
        for x in sorted(set(i.positions)):
            _add(cells, space, i, mark(i, x), CopySymbol.UNMARK_ROW)
            _add(cells, space, mark(i, x), i, CopySymbol.UNMARK_COL)
            if len(i) > 1:
                _add(cells, space, remove(i, MarkedIndex(x)), i, CopySymbol.FROM_ROW)
                _add(cells, space, i, remove(i, MarkedIndex(x)), CopySymbol.FROM_COL)


def seed(g: Grammar, sentence: Iterable[str], space: AddressSpace) -> ProductMatrix:
    """The initial matrix: lexical facts in every equivalent cell plus copy symbols."""
    sentence = tuple(sentence)
    if len(sentence) != space.n:
        raise EngineError(f"address space built for n={space.n}, sentence has {len(sentence)} tokens")
    cells: dict[Cell, set] = defaultdict(set)
    for r in g.lexical_rules:
        for spans in lexical_placements(r.strings, sentence):
            for i, j in space.cells_for(spans):
                _add(cells, space, i, j, r.lhs)
    _seed_copy_symbols(cells, space)
    return ProductMatrix.from_sets(space, cells)


# ============================================================================
# CELL PRODUCT
# ============================================================================

@lru_cache(maxsize=None)
def rule_configs(r: Rule) -> ConfigTriple:
    return configurations(r)


def _binary_fires(g: Grammar, r: Rule, i: Address, k: Address, j: Address) -> bool:
    pa, pb, pc = g.fan_outs[r.lhs], g.fan_outs[r.rhs[0]], g.fan_outs[r.rhs[1]]
    if len(i) + len(k) != 2 * pb or len(k) + len(j) != 2 * pc or len(i) + len(j) != 2 * pa:
        return False
    cfg = rule_configs(r)
    return (endpoints_at(i, k, cfg.cfg2) == i.positions
            and endpoints_at(k, j, cfg.cfg3) == k.positions
            and endpoints_at(i, j, cfg.cfg1) == i.positions)


def _split(symbols: frozenset) -> tuple[list[str], set[CopySymbol]]:
    names = [s for s in symbols if isinstance(s, str)]
    return names, {s for s in symbols if isinstance(s, CopySymbol)}


def cell_product(left: frozenset, right: frozenset, i: Address, k: Address, j: Address,
                 g: Grammar) -> frozenset:
    """Nonterminals derived from left at (i, k) and right at (k, j) into (i, j)."""
    left_nts, left_copy = _split(left)
    right_nts, right_copy = _split(right)
    out = set()

    if left_nts and right_nts and not (i.is_marked or k.is_marked or j.is_marked):
        for b in left_nts:
            for c in right_nts:
                for r in g.rules_by_children.get((b, c), ()):
                    if r.lhs not in out and _binary_fires(g, r, i, k, j):
                        out.add(r.lhs)

    if left_nts:
        if CopySymbol.TO_COL in right_copy and not i.is_marked and j.is_marked \
                and j.marked_pos in i.positions:
            out.update(left_nts)
        if CopySymbol.FROM_COL in right_copy and i.is_marked and i.marked_pos not in j.positions:
            out.update(left_nts)
        if CopySymbol.UNMARK_COL in right_copy:
            out.update(a for a in left_nts if len(i) + len(j) == 2 * g.fan_outs[a])

    if right_nts:
        if CopySymbol.FROM_ROW in left_copy and j.is_marked and j.marked_pos not in i.positions:
            out.update(right_nts)
        if CopySymbol.TO_ROW in left_copy and not j.is_marked and i.is_marked \
                and i.marked_pos in j.positions:
            out.update(right_nts)
        if CopySymbol.UNMARK_ROW in left_copy:
            out.update(a for a in right_nts if len(i) + len(j) == 2 * g.fan_outs[a])

    return frozenset(out)


def matrix_product(t1: ProductMatrix, t2: ProductMatrix, g: Grammar) -> ProductMatrix:
    """(t1 (x) t2)[i, j] = union over k of t1[i, k] (x) t2[k, j]."""
    check_same_space(t1, t2)
    space = t1.space
    by_col: dict[int, list[tuple[int, frozenset, bool]]] = defaultdict(list)
    for (ri, ck), symbols in t1.cells.items():
        by_col[ck].append((ri, symbols, any(isinstance(s, str) for s in symbols)))
    by_row: dict[int, list[tuple[int, frozenset, bool]]] = defaultdict(list)
    for (rk, cj), symbols in t2.cells.items():
        by_row[rk].append((cj, symbols, any(isinstance(s, str) for s in symbols)))

    out: dict[Cell, set] = defaultdict(set)
    for k_id, lefts in by_col.items():
        rights = by_row.get(k_id)
        if not rights:
            continue
        k = space.address(k_id)
        for ri, left, left_nt in lefts:
            i = space.address(ri)
            for cj, right, right_nt in rights:
                if not (left_nt or right_nt):
                    continue
                symbols = cell_product(left, right, i, k, space.address(cj), g)
                if symbols:
                    out[(ri, cj)].update(symbols)
    return ProductMatrix.from_sets(space, out)


# ============================================================================
# PI: COPY TO ALL EQUIVALENT CELLS
# ============================================================================

def pi_copy(t: ProductMatrix) -> ProductMatrix:
    """Copy every nonterminal fact into all cells with the same span set."""
    space = t.space
    by_spans: dict[tuple[Span, ...], set[str]] = defaultdict(set)
    for i, j, symbols in t.items():
        spans = merge_m(i, j)
        if spans is not None:
            by_spans[spans].update(s for s in symbols if isinstance(s, str))
    cells: dict[Cell, set] = defaultdict(set)
    for cell, symbols in t.cells.items():
        cells[cell].update(symbols)
    for spans, names in by_spans.items():
        if not names:
            continue
        for i, j in space.cells_for(spans):
            ri, cj = space.id(i), space.id(j)
            if ri < cj:
                cells[(ri, cj)].update(names)
    return ProductMatrix.from_sets(space, cells)
