"""Transitive closure, the two recognition algorithms and derivation extraction."""
import time
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional

from address_space import Span
from boolean_linalg import Block, ProductStats, product_via_boolean
from config import BACKENDS, CLOSURES, ENGINES, Config, check_choice
from engine import (
    Cell,
    EngineError,
    ProductMatrix,
    matrix_product,
    pi_copy,
    seed,
    space_for,
    union,
)
from grammar import (
    AnalysisReport,
    Grammar,
    Rule,
    analyze,
    is_balanced,
    is_single_initial,
    to_single_initial,
    validate,
)
from oracle import chart_facts, tabular_recognize
from utils import logger

Fact = tuple[str, tuple[Span, ...]]


class RecognitionError(ValueError):
    """Raised when a grammar does not meet a recognizer's preconditions."""


# ============================================================================
# CLOSURE
# ============================================================================

@dataclass
class ClosureStats:
    algorithm: str = "fixpoint"
    products: int = 0
    multiplications: int = 0
    iterations: int = 0
    outer_iterations: int = 0
    elapsed_ms: float = 0.0

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "products": self.products,
            "multiplications": self.multiplications,
            "iterations": self.iterations,
            "outer_iterations": self.outer_iterations,
            "elapsed_ms": round(self.elapsed_ms, 3),
        }


@dataclass
class Closure:
    matrix: ProductMatrix
    stats: ClosureStats = field(default_factory=ClosureStats)


def closure_fixpoint(t: ProductMatrix, g: Grammar, backend: Optional[str] = None,
                     stats: Optional[ClosureStats] = None, cutoff: Optional[int] = None) -> Closure:
    """Iterate X <- X u (X (x) X) until the fact count stops growing.

    Without a backend the cell-wise product is used directly; with one, every
    product goes through the Boolean reduction.
    """
    stats = stats or ClosureStats("fixpoint")
    products = ProductStats()
    started = time.perf_counter()
    current = t
    while True:
        stats.iterations += 1
        stats.products += 1
        if backend is None:
            step = matrix_product(current, current, g)
        else:
            step = product_via_boolean(current, current, g, backend, stats=products, cutoff=cutoff)
        nxt = union(current, step)
        if nxt.fact_count() == current.fact_count():
            if nxt != current:
                raise EngineError("fact count unchanged but the matrix moved")
            break
        current = nxt
    stats.multiplications += products.multiplications
    stats.elapsed_ms += (time.perf_counter() - started) * 1000
    logger.log_closure("fixpoint", stats.products, stats.iterations)
    return Closure(current, stats)


class _Chart:
    """Mutable row-indexed cells used while a closure is in progress."""

    def __init__(self, t: ProductMatrix):
        self.space = t.space
        self.rows: dict[int, dict[int, frozenset]] = defaultdict(dict)
        for (r, c), symbols in t.cells.items():
            self.rows[r][c] = symbols

    def view(self, rows: range, cols: range) -> ProductMatrix:
        cells: dict[Cell, frozenset] = {}
        for r in rows:
            row = self.rows.get(r)
            if not row:
                continue
            for c, symbols in row.items():
                if c in cols:
                    cells[(r, c)] = symbols
        return ProductMatrix.wrap(self.space, cells)

    def merge(self, m: ProductMatrix) -> int:
        added = 0
        for (r, c), symbols in m.cells.items():
            old = self.rows[r].get(c, frozenset())
            new = old | symbols
            if len(new) != len(old):
                added += len(new) - len(old)
                self.rows[r][c] = new
        return added

    def matrix(self) -> ProductMatrix:
        return ProductMatrix(self.space, {
            (r, c): s for r, row in self.rows.items() for c, s in row.items()
        })


def closure_valiant(t: ProductMatrix, g: Grammar, backend: str = "bitset",
                    stats: Optional[ClosureStats] = None, cutoff: Optional[int] = None) -> Closure:
    """Divide and conquer over the address order.

    Both diagonal halves are closed first; the off-diagonal block is then
    filled with products against the closed halves until it stops growing.
    """
    stats = stats or ClosureStats("valiant")
    products = ProductStats()
    started = time.perf_counter()
    chart = _Chart(t)

    def close(lo: int, hi: int):
        if hi - lo < 2:
            return
        mid = (lo + hi) // 2
        close(lo, mid)
        close(mid, hi)
        block = Block(range(lo, mid), range(lo, hi), range(mid, hi))
        while True:
            left = chart.view(block.rows, block.mids)
            right = chart.view(block.mids, block.cols)
            if not left.cells or not right.cells:
                return
            if not (left.has_nonterminals() or right.has_nonterminals()):
                return
            stats.iterations += 1
            stats.products += 1
            step = product_via_boolean(left, right, g, backend, block, products, cutoff)
            if not chart.merge(step):
                return

    close(0, len(t.space))
    stats.multiplications += products.multiplications
    stats.elapsed_ms += (time.perf_counter() - started) * 1000
    logger.log_closure("valiant", stats.products, stats.iterations,
                       {"multiplications": products.multiplications})
    return Closure(chart.matrix(), stats)


def close(t: ProductMatrix, g: Grammar, closure_alg: str, backend: Optional[str],
          stats: ClosureStats, cutoff: Optional[int] = None) -> Closure:
    if closure_alg == "valiant":
        return closure_valiant(t, g, backend or Config.BACKEND, stats, cutoff)
    return closure_fixpoint(t, g, backend, stats, cutoff)


# ============================================================================
# RECOGNITION
# ============================================================================

@dataclass
class RecognitionResult:
    accepted: bool
    engine: str
    algorithm: str
    n: int
    backend: Optional[str] = None
    closure_alg: Optional[str] = None
    stats: ClosureStats = field(default_factory=ClosureStats)
    facts: int = 0
    report: Optional[AnalysisReport] = None
    grammar: Optional[Grammar] = None
    closure: Optional[Closure] = None
    chart: Optional[set[Fact]] = None
    converted: bool = False

    def __bool__(self) -> bool:
        return self.accepted

    def to_dict(self) -> dict:
        return {
            "accept": self.accepted,
            "engine": self.engine,
            "algorithm": self.algorithm,
            "n": self.n,
            "backend": self.backend,
            "closure": self.closure_alg,
            "facts": self.facts,
            "stats": self.stats.to_dict(),
            "converted": self.converted,
        }


def _check_hostable(g: Grammar):
    violations = validate(g)
    if violations:
        raise RecognitionError("invalid grammar: " + "; ".join(violations))
    if not is_single_initial(g):
        raise RecognitionError(
            f"grammar {g.name} is not single-initial; convert it with to_single_initial first")


def _accepts(m: ProductMatrix, g: Grammar) -> bool:
    return any(g.start in m.get(i, j) for i, j in m.space.whole_sentence_cells())


def _result(accepted: bool, algorithm: str, g: Grammar, n: int, closure: Closure,
            backend: Optional[str], closure_alg: str) -> RecognitionResult:
    return RecognitionResult(
        accepted=accepted,
        engine="matmul",
        algorithm=algorithm,
        n=n,
        backend=backend,
        closure_alg=closure_alg,
        stats=closure.stats,
        facts=closure.matrix.fact_count(),
        grammar=g,
        closure=closure,
    )


def recognize_unbalanced(g: Grammar, sentence: Iterable[str], backend: Optional[str] = None,
                         closure_alg: str = "fixpoint",
                         cutoff: Optional[int] = None) -> RecognitionResult:
    """Seed, one closure, then the start-symbol check.

    Copy chains only move a fact toward a smaller row and a larger column;
    when the start fact is still missing, Pi rounds complete the
    equivalent-cell copies until the fact count stops growing.
    """
    sentence = tuple(sentence)
    _check_hostable(g)
    if is_balanced(g):
        raise RecognitionError(f"grammar {g.name} is balanced; use recognize_general")
    stats = ClosureStats(closure_alg)
    space = space_for(g, len(sentence))
    closure = close(seed(g, sentence, space), g, closure_alg, backend, stats, cutoff)
    stats.outer_iterations = 1
    accepted = len(sentence) > 0 and _accepts(closure.matrix, g)
    while len(sentence) > 0 and not accepted:
        copied = pi_copy(closure.matrix)
        if copied.fact_count() == closure.matrix.fact_count():
            break
        closure = close(copied, g, closure_alg, backend, stats, cutoff)
        stats.outer_iterations += 1
        accepted = _accepts(closure.matrix, g)
    return _result(accepted, "unbalanced", g, len(sentence), closure, backend, closure_alg)


def recognize_general(g: Grammar, sentence: Iterable[str], backend: Optional[str] = None,
                      closure_alg: str = "fixpoint",
                      cutoff: Optional[int] = None) -> RecognitionResult:
    """Repeat T <- (Pi(T))+ until T does not change."""
    sentence = tuple(sentence)
    _check_hostable(g)
    stats = ClosureStats(closure_alg)
    space = space_for(g, len(sentence))
    current = seed(g, sentence, space)
    closure = Closure(current, stats)
    while True:
        closure = close(pi_copy(current), g, closure_alg, backend, stats, cutoff)
        stats.outer_iterations += 1
        if closure.matrix.fact_count() == current.fact_count():
            break
        current = closure.matrix
    accepted = len(sentence) > 0 and _accepts(closure.matrix, g)
    return _result(accepted, "general", g, len(sentence), closure, backend, closure_alg)


def recognize(g: Grammar, sentence: Iterable[str], engine: Optional[str] = None,
              backend: Optional[str] = None, closure_alg: Optional[str] = None,
              omega: Optional[float] = None, cutoff: Optional[int] = None) -> RecognitionResult:
    """Convert to single-initial form if needed and pick the recognition path."""
    sentence = tuple(sentence)
    engine = check_choice("engine", engine or Config.ENGINE, ENGINES)
    backend = check_choice("backend", backend or Config.BACKEND, BACKENDS)
    closure_alg = check_choice("closure", closure_alg or Config.CLOSURE, CLOSURES)
    report = analyze(g, Config.OMEGA if omega is None else omega)
    started = time.perf_counter()

    if engine == "tabular":
        accepted, chart = tabular_recognize(g, sentence)
        facts = chart_facts(chart)
        result = RecognitionResult(accepted, "tabular", "tabular", len(sentence),
                                   facts=len(facts), report=report, grammar=g, chart=facts)
    else:
        hosted = to_single_initial(g)
        if is_balanced(hosted):
            result = recognize_general(hosted, sentence, backend, closure_alg, cutoff)
        else:
            result = recognize_unbalanced(hosted, sentence, backend, closure_alg, cutoff)
        result.report = report
        result.converted = hosted is not g

    result.stats.elapsed_ms = (time.perf_counter() - started) * 1000
    logger.log_recognition(engine, len(sentence), result.accepted, {
        "grammar": g.name,
        "algorithm": result.algorithm,
        "backend": result.backend,
        "closure": result.closure_alg,
        "facts": result.facts,
        "multiplications": result.stats.multiplications,
        "outer_iterations": result.stats.outer_iterations,
        "ms": round(result.stats.elapsed_ms, 3),
    })
    return result


# ============================================================================
# DERIVATIONS
# ============================================================================

@dataclass
class DerivationNode:
    nonterminal: str
    rule: int
    spans: tuple[Span, ...]
    children: tuple["DerivationNode", ...] = ()
    strings: tuple[tuple[str, ...], ...] = ()

    def to_dict(self) -> dict:
        return {
            "nonterminal": self.nonterminal,
            "rule": self.rule,
            "spans": [list(s) for s in self.spans],
            "children": [c.to_dict() for c in self.children],
        }

    def leaves(self) -> list[tuple[Span, tuple[str, ...]]]:
        if not self.children:
            return list(zip(self.spans, self.strings))
        return [leaf for child in self.children for leaf in child.leaves()]

    def yield_tokens(self) -> tuple[str, ...]:
        tokens: list[str] = []
        for _, words in sorted(self.leaves()):
            tokens.extend(words)
        return tuple(tokens)


def child_spans(r: Rule, parent: tuple[Span, ...], first: tuple[Span, ...]) -> Optional[tuple[Span, ...]]:
    """Spans of the second child, given the parent's and the first child's."""
    second: dict[int, Span] = {}
    for template, (left, right) in zip(r.comp, parent):
        at = left
        for pos, v in enumerate(template):
            if v.source == "b":
                span = first[v.index - 1]
                if span[0] != at:
                    return None
                at = span[1]
            else:
                end = right if pos == len(template) - 1 else first[template[pos + 1].index - 1][0]
                if end < at:
                    return None
                second[v.index] = (at, end)
                at = end
        if at != right:
            return None
    return tuple(second[k] for k in sorted(second))


def _lexical_matches(r: Rule, spans: tuple[Span, ...], sentence: tuple[str, ...]) -> bool:
    return len(r.strings) == len(spans) and all(
        sentence[left:right] == words for (left, right), words in zip(spans, r.strings))


def derive(facts: set[Fact], g: Grammar, sentence: Iterable[str]) -> Optional[DerivationNode]:
    """Backtrack one derivation of the whole sentence through a fact set."""
    sentence = tuple(sentence)
    goal = (g.start, ((0, len(sentence)),))
    if not sentence or goal not in facts:
        return None

    by_symbol: dict[str, list[tuple[Span, ...]]] = defaultdict(list)
    for symbol, spans in facts:
        by_symbol[symbol].append(spans)
    for spans in by_symbol.values():
        spans.sort()

    memo: dict[Fact, Optional[DerivationNode]] = {}
    active: set[Fact] = set()

    def build(fact: Fact) -> Optional[DerivationNode]:
        if fact in memo:
            return memo[fact]
        if fact in active:
            return None
        active.add(fact)
        symbol, spans = fact
        node = None
        for r in g.rules_by_lhs.get(symbol, ()):
            if not r.is_binary:
                if _lexical_matches(r, spans, sentence):
                    node = DerivationNode(symbol, r.id, spans, strings=r.strings)
                    break
                continue
            for first in by_symbol.get(r.rhs[0], ()):
                second = child_spans(r, spans, first)
                if second is None or (r.rhs[1], second) not in facts:
                    continue
                left = build((r.rhs[0], first))
                right = build((r.rhs[1], second)) if left else None
                if left and right:
                    node = DerivationNode(symbol, r.id, spans, (left, right))
                    break
            if node:
                break
        active.discard(fact)
        memo[fact] = node
        return node

    tree = build(goal)
    if tree is None:
        raise EngineError(f"start fact {goal} has no reconstructible derivation")
    if tree.yield_tokens() != sentence:
        raise EngineError("derivation yield does not match the sentence")
    return tree


def extract_derivation(closure: Closure, g: Grammar, sentence: Iterable[str]) -> Optional[DerivationNode]:
    return derive(closure.matrix.nonterminal_facts(), g, sentence)


def parse(g: Grammar, sentence: Iterable[str], **options) -> tuple[RecognitionResult, Optional[DerivationNode]]:
    """Recognize, then extract a derivation from the resulting facts."""
    sentence = tuple(sentence)
    result = recognize(g, sentence, **options)
    if not result.accepted:
        return result, None
    if result.closure is not None:
        return result, extract_derivation(result.closure, result.grammar, sentence)
    return result, derive(result.chart or set(), result.grammar, sentence)
