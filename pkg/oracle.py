"""Reference recognizers that work on spans directly, without matrices.

``tabular_recognize`` is an agenda-driven chart parser over span tuples;
``enumerate_language`` lists every sentence up to a length bound. Both are
meant to be checked by eye, not to be fast.
"""
from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

from config import Config
from grammar import Grammar, Rule

Span = tuple[int, int]


class EnumerationLimitError(ValueError):
    """Raised when a language enumeration bound exceeds the configured guard."""


@dataclass(frozen=True, order=True)
class ChartItem:
    nonterminal: str
    spans: tuple[Span, ...]

    def __str__(self) -> str:
        return f"{self.nonterminal}{list(self.spans)}"


# ============================================================================
# CHART PARSER
# ============================================================================

def _placements(strings: tuple[tuple[str, ...], ...], sentence: tuple[str, ...],
                lo: int = 0) -> Iterator[tuple[Span, ...]]:
    if not strings:
        yield ()
        return
    words, rest = strings[0], strings[1:]
    for left in range(lo, len(sentence) - len(words) + 1):
        if sentence[left:left + len(words)] == words:
            for tail in _placements(rest, sentence, left + len(words)):
                yield ((left, left + len(words)),) + tail


def compose(r: Rule, first: tuple[Span, ...], second: tuple[Span, ...]) -> Optional[tuple[Span, ...]]:
    """Instantiate the rule's templates over two children's spans."""
    out = []
    for template in r.comp:
        spans = [first[v.index - 1] if v.source == "b" else second[v.index - 1] for v in template]
        for (_, right), (left, _) in zip(spans, spans[1:]):
            if right != left:
                return None
        out.append((spans[0][0], spans[-1][1]))
    for (_, right), (left, _) in zip(out, out[1:]):
        if right > left:
            return None
    return tuple(out)


def tabular_recognize(g: Grammar, sentence: Iterable[str]) -> tuple[bool, set[ChartItem]]:
    """Agenda-based deduction; accept iff the start symbol covers (0, n)."""
    sentence = tuple(sentence)
    agenda: deque[ChartItem] = deque(
        ChartItem(r.lhs, spans) for r in g.lexical_rules for spans in _placements(r.strings, sentence))
    chart: set[ChartItem] = set()
    found: dict[str, set[tuple[Span, ...]]] = defaultdict(set)
    as_first: dict[str, list[Rule]] = defaultdict(list)
    as_second: dict[str, list[Rule]] = defaultdict(list)
    for r in g.binary_rules:
        as_first[r.rhs[0]].append(r)
        as_second[r.rhs[1]].append(r)

    while agenda:
        item = agenda.popleft()
        if item in chart:
            continue
        chart.add(item)
        found[item.nonterminal].add(item.spans)
        for r in as_first[item.nonterminal]:
            for other in list(found[r.rhs[1]]):
                spans = compose(r, item.spans, other)
                if spans is not None:
                    agenda.append(ChartItem(r.lhs, spans))
        for r in as_second[item.nonterminal]:
            for other in list(found[r.rhs[0]]):
                spans = compose(r, other, item.spans)
                if spans is not None:
                    agenda.append(ChartItem(r.lhs, spans))

    accepted = bool(sentence) and ChartItem(g.start, ((0, len(sentence)),)) in chart
    return accepted, chart


def chart_facts(chart: Iterable[ChartItem]) -> set[tuple[str, tuple[Span, ...]]]:
    return {(item.nonterminal, item.spans) for item in chart}


# ============================================================================
# LANGUAGE ENUMERATION
# ============================================================================

def _size(yields: tuple[tuple[str, ...], ...]) -> int:
    return sum(len(w) for w in yields)


def enumerate_language(g: Grammar, max_len: int) -> set[tuple[str, ...]]:
    """All sentences of length <= max_len, from the least fixpoint of the yields."""
    if max_len < 0:
        raise ValueError("max_len must be >= 0")
    if max_len > Config.MAX_ENUM_LEN:
        raise EnumerationLimitError(
            f"max_len {max_len} exceeds the enumeration guard of {Config.MAX_ENUM_LEN}")

    yields: dict[str, set[tuple[tuple[str, ...], ...]]] = defaultdict(set)
    for r in g.lexical_rules:
        if _size(r.strings) <= max_len:
            yields[r.lhs].add(r.strings)

    changed = True
    while changed:
        changed = False
        for r in g.binary_rules:
            b, c = r.rhs
            for left in list(yields[b]):
                for right in list(yields[c]):
                    if _size(left) + _size(right) > max_len:
                        continue
                    produced = tuple(
                        tuple(w for v in template
                              for w in (left if v.source == "b" else right)[v.index - 1])
                        for template in r.comp)
                    if produced not in yields[r.lhs]:
                        yields[r.lhs].add(produced)
                        changed = True

    return {y[0] for y in yields[g.start] if y[0]}
