"""Matrix addresses: sorted position sequences with at most one marked index.

Rows and columns of every matrix are addresses of length 1..d over the
positions 0..n. Two addresses are ordered lexicographically on positions
(a proper prefix first); addresses with equal positions are ordered as
mark-on-last-item < unmarked < mark elsewhere, which keeps every copy-symbol
cell of both copy directions above the diagonal wherever that is possible.
"""
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, combinations_with_replacement
from typing import NamedTuple, Optional

Span = tuple[int, int]


class MarkedIndex(NamedTuple):
    pos: int
    marked: bool = False

    def __str__(self) -> str:
        return f"{self.pos}^" if self.marked else str(self.pos)


def hat(pos: int) -> MarkedIndex:
    return MarkedIndex(pos, True)


@dataclass(frozen=True, slots=True)
class Address:
    positions: tuple[int, ...]
    mark: int = -1

    @classmethod
    def of(cls, *items) -> "Address":
        """Build an address from ints, MarkedIndex values or strings like '8^'."""
        positions, mark = [], -1
        for item in items:
            if isinstance(item, str):
                item = MarkedIndex(int(item.rstrip("^")), item.endswith("^"))
            elif isinstance(item, int):
                item = MarkedIndex(item)
            if item.marked:
                if mark >= 0:
                    raise ValueError("an address carries at most one marked index")
                mark = len(positions)
            positions.append(item.pos)
        if positions != sorted(positions):
            raise ValueError(f"address positions must be non-decreasing: {positions}")
        address = cls(tuple(positions), -1)
        if mark >= 0:
            # canonical place for a mark: after equal unmarked positions
            pos = positions[mark]
            address = insert(remove(address, MarkedIndex(pos)), hat(pos))
        return address

    @classmethod
    def parse(cls, text: str) -> "Address":
        body = text.strip().strip("()").strip()
        if not body:
            return EMPTY
        return cls.of(*[p.strip() for p in body.split(",")])

    @property
    def is_marked(self) -> bool:
        return self.mark >= 0

    @property
    def marked_pos(self) -> Optional[int]:
        return self.positions[self.mark] if self.mark >= 0 else None

    @property
    def min(self) -> Optional[int]:
        return self.positions[0] if self.positions else None

    def __len__(self) -> int:
        return len(self.positions)

    def items(self) -> tuple[MarkedIndex, ...]:
        return tuple(MarkedIndex(p, k == self.mark) for k, p in enumerate(self.positions))

    def sort_key(self) -> tuple:
        if self.mark < 0:
            tie = 0
        elif self.mark == len(self.positions) - 1:
            tie = -1
        else:
            tie = 1 + self.mark
        return (0 if self.positions else 1, self.positions, tie)

    def __str__(self) -> str:
        return "(" + ",".join(str(x) for x in self.items()) + ")"


EMPTY = Address(())


def compare(i: Address, j: Address) -> int:
    a, b = i.sort_key(), j.sort_key()
    return (a > b) - (a < b)


def insert(v: Address, x: MarkedIndex) -> Address:
    positions = list(v.positions)
    if x.marked:
        if v.is_marked:
            raise ValueError("an address carries at most one marked index")
        idx = bisect_right(positions, x.pos)
        positions.insert(idx, x.pos)
        return Address(tuple(positions), idx)
    idx = bisect_left(positions, x.pos)
    positions.insert(idx, x.pos)
    mark = v.mark + 1 if v.is_marked and v.mark >= idx else v.mark
    return Address(tuple(positions), mark)


def remove(v: Address, x: MarkedIndex) -> Address:
    positions = list(v.positions)
    if x.marked:
        if v.marked_pos != x.pos:
            raise ValueError(f"{x} does not occur in {v}")
        del positions[v.mark]
        return Address(tuple(positions), -1)
    candidates = [k for k, p in enumerate(positions) if p == x.pos and k != v.mark]
    if not candidates:
        raise ValueError(f"{x} does not occur in {v}")
    idx = candidates[-1]
    del positions[idx]
    mark = v.mark - 1 if v.is_marked and v.mark > idx else v.mark
    return Address(tuple(positions), mark)


def mark(v: Address, pos: int) -> Address:
    """The address v with one unmarked occurrence of pos marked."""
    return insert(remove(v, MarkedIndex(pos)), hat(pos))


def unmark(v: Address) -> Address:
    return Address(v.positions, -1)


@lru_cache(maxsize=1 << 18)
def merge_m(i: Address, j: Address) -> Optional[tuple[Span, ...]]:
    """Merge row and column addresses into their sorted span set, or None."""
    if i.is_marked or j.is_marked or not i.positions:
        return None
    if j.positions and j.positions[0] <= i.positions[0]:
        return None
    if (len(i) + len(j)) % 2:
        return None
    merged = sorted(i.positions + j.positions)
    return tuple((merged[k], merged[k + 1]) for k in range(0, len(merged), 2))


@lru_cache(maxsize=1 << 18)
def endpoints_at(i: Address, j: Address, config: frozenset[int]) -> Optional[tuple[int, ...]]:
    """Positions of m(i, j) at the 1-based endpoint numbers in config."""
    spans = merge_m(i, j)
    if spans is None:
        return None
    flat = [p for span in spans for p in span]
    if max(config, default=0) > len(flat):
        return None
    return tuple(flat[q - 1] for q in sorted(config))


def splits(spans: tuple[Span, ...], d: int, allow_empty: bool = False) -> set[tuple[Address, Address]]:
    """All unmarked (row, column) pairs of length <= d whose merge is spans."""
    flat = [p for span in spans for p in span]
    if not flat:
        return set()
    rest = list(range(1, len(flat)))
    out = set()
    spans = tuple(tuple(span) for span in spans)
    for size in range(0, min(d, len(flat))):
        for chosen in combinations(rest, size):
            col = [flat[k] for k in rest if k not in chosen]
            if len(col) > d or (not col and not allow_empty):
                continue
            row = Address(tuple([flat[0]] + [flat[k] for k in chosen]))
            column = Address(tuple(col))
            if merge_m(row, column) == tuple(spans):
                out.add((row, column))
    return out


class AddressSpace:
    """The index set N(d) for a sentence of length n, in matrix order."""

    def __init__(self, n: int, d: int, allow_empty: bool = False):
        if n < 0 or d < 1:
            raise ValueError(f"invalid address space n={n}, d={d}")
        self.n = n
        self.d = d
        self.allow_empty = allow_empty
        addresses = []
        for length in range(1, d + 1):
            for positions in combinations_with_replacement(range(n + 1), length):
                addresses.append(Address(positions))
                for k in range(length):
                    if k + 1 < length and positions[k + 1] == positions[k]:
                        continue
                    addresses.append(Address(positions, k))
        if allow_empty:
            addresses.append(EMPTY)
        addresses.sort(key=Address.sort_key)
        self.addresses: tuple[Address, ...] = tuple(addresses)
        self._ids = {a: k for k, a in enumerate(self.addresses)}

    def __len__(self) -> int:
        return len(self.addresses)

    def __contains__(self, address: Address) -> bool:
        return address in self._ids

    def id(self, address: Address) -> int:
        return self._ids[address]

    def get(self, address: Address) -> Optional[int]:
        return self._ids.get(address)

    def address(self, ident: int) -> Address:
        return self.addresses[ident]

    def unmarked(self) -> list[Address]:
        return [a for a in self.addresses if not a.is_marked]

    def equivalent_cells(self, i: Address, j: Address) -> set[tuple[Address, Address]]:
        spans = merge_m(i, j)
        if spans is None:
            raise ValueError(f"m{i}{j} is undefined")
        return self.cells_for(spans)

    def cells_for(self, spans: tuple[Span, ...]) -> set[tuple[Address, Address]]:
        return {(r, c) for r, c in splits(spans, self.d, self.allow_empty)
                if r in self._ids and c in self._ids}

    def whole_sentence_cells(self) -> set[tuple[Address, Address]]:
        if self.n == 0:
            return set()
        return self.cells_for(((0, self.n),))


def enumerate_space(n: int, d: int, allow_empty: bool = False) -> AddressSpace:
    return AddressSpace(n, d, allow_empty)
