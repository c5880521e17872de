"""Binary LCFRS grammars: the file format, validation, analysis and the
single-initial normal form.

The file format is line oriented::

    # comment
    start S
    S -> A B : b1 g1 b2 g2
    A -> X A : b1 g1 , b2 g2
    A -> : 'a' , 'c'

A binary rule lists one span template per span of the left-hand side;
``bK`` is the K-th span of the first child and ``gK`` the K-th span of the
second. A lexical rule lists quoted terminals per span, ``''`` being the
empty span. Fan-outs are read off rule usage and must agree everywhere.
"""
import os
import re
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional

DEFAULT_OMEGA = 2.3728639
GRAMMAR_SUFFIX = ".lcfrs"

_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_']*$")
_VAR = re.compile(r"^([bg])([1-9][0-9]*)$")
_LEXICAL_TOKEN = re.compile(r"'([^'\s]*)'|(,)|(\S+)")


class GrammarError(ValueError):
    """Raised for malformed or invalid grammars."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.message = message
        self.line = line
        self.column = column
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "")
            message = f"{where}: {message}"
        super().__init__(message)


# ============================================================================
# DOMAIN TYPES
# ============================================================================

@dataclass(frozen=True, order=True)
class Var:
    source: str  # 'b' for the first child, 'g' for the second
    index: int

    def __str__(self) -> str:
        return f"{self.source}{self.index}"


@dataclass(frozen=True)
class Rule:
    id: int
    lhs: str
    rhs: tuple[str, ...] = ()
    comp: tuple[tuple[Var, ...], ...] = ()
    strings: tuple[tuple[str, ...], ...] = ()
    line: Optional[int] = field(default=None, compare=False)

    @property
    def is_binary(self) -> bool:
        return len(self.rhs) == 2

    @property
    def arity(self) -> int:
        return len(self.comp) if self.is_binary else len(self.strings)

    def __str__(self) -> str:
        if self.is_binary:
            spans = " , ".join(" ".join(str(v) for v in span) for span in self.comp)
            return f"{self.lhs} -> {self.rhs[0]} {self.rhs[1]} : {spans}"
        spans = " , ".join(" ".join(f"'{t}'" for t in s) if s else "''" for s in self.strings)
        return f"{self.lhs} -> : {spans}"


@dataclass(frozen=True)
class ConfigTriple:
    cfg1: frozenset[int]
    cfg2: frozenset[int]
    cfg3: frozenset[int]

    def to_dict(self) -> dict:
        return {
            "cfg1": sorted(self.cfg1),
            "cfg2": sorted(self.cfg2),
            "cfg3": sorted(self.cfg3),
        }


@dataclass(frozen=True, eq=False)
class Grammar:
    start: str
    fan_outs: dict[str, int]
    rules: tuple[Rule, ...]
    terminals: frozenset[str]
    name: str = "grammar"

    @property
    def nonterminals(self) -> frozenset[str]:
        return frozenset(self.fan_outs)

    def fan_out(self, symbol: str) -> int:
        return self.fan_outs[symbol]

    @cached_property
    def binary_rules(self) -> tuple[Rule, ...]:
        return tuple(r for r in self.rules if r.is_binary)

    @cached_property
    def lexical_rules(self) -> tuple[Rule, ...]:
        return tuple(r for r in self.rules if not r.is_binary)

    @cached_property
    def rules_by_children(self) -> dict[tuple[str, str], tuple[Rule, ...]]:
        index: dict[tuple[str, str], list[Rule]] = defaultdict(list)
        for r in self.binary_rules:
            index[(r.rhs[0], r.rhs[1])].append(r)
        return {k: tuple(v) for k, v in index.items()}

    @cached_property
    def rules_by_lhs(self) -> dict[str, tuple[Rule, ...]]:
        index: dict[str, list[Rule]] = defaultdict(list)
        for r in self.rules:
            index[r.lhs].append(r)
        return {k: tuple(v) for k, v in index.items()}

    def rule(self, rule_id: int) -> Rule:
        for r in self.rules:
            if r.id == rule_id:
                return r
        raise KeyError(rule_id)


@dataclass(frozen=True)
class RuleAnalysis:
    rule_id: int
    delta: int
    contact_rank: int
    configs: ConfigTriple
    binarization_ratio: float

    def to_dict(self) -> dict:
        return {
            "rule": self.rule_id,
            "delta": self.delta,
            "d": self.contact_rank,
            "configs": self.configs.to_dict(),
            "binarization_ratio": round(self.binarization_ratio, 6),
        }


@dataclass(frozen=True)
class AnalysisReport:
    grammar: str
    f: int
    d: int
    per_rule: tuple[RuleAnalysis, ...]
    config_sets: dict[str, frozenset[frozenset[int]]]
    balanced: bool
    single_initial: bool
    omega: float
    predicted_matmul_exponent: float
    tabular_exponent: int
    enclosing: bool

    def to_dict(self) -> dict:
        return {
            "grammar": self.grammar,
            "f": self.f,
            "d": self.d,
            "per_rule": [r.to_dict() for r in self.per_rule],
            "config_sets": {
                nt: sorted(sorted(c) for c in cfgs)
                for nt, cfgs in sorted(self.config_sets.items())
            },
            "balanced": self.balanced,
            "single_initial": self.single_initial,
            "omega": self.omega,
            "predicted_matmul_exponent": self.predicted_matmul_exponent,
            "tabular_exponent": self.tabular_exponent,
            "enclosing": self.enclosing,
        }


# ============================================================================
# PARSING
# ============================================================================

def _strip_comment(line: str) -> str:
    quoted = False
    for pos, ch in enumerate(line):
        if ch == "'":
            quoted = not quoted
        elif ch == "#" and not quoted:
            return line[:pos]
    return line


def _column(raw: str, fragment: str) -> int:
    pos = raw.find(fragment)
    return pos + 1 if pos >= 0 else 1


def _parse_binary_spans(body: str, raw: str, lineno: int) -> tuple[tuple[Var, ...], ...]:
    spans = []
    for chunk in body.split(","):
        span = []
        for token in chunk.split():
            m = _VAR.match(token)
            if not m:
                raise GrammarError(f"expected a variable such as b1 or g2, found '{token}'",
                                   lineno, _column(raw, token))
            span.append(Var(m.group(1), int(m.group(2))))
        if not span:
            raise GrammarError("empty span template in binary rule", lineno, _column(raw, ":"))
        spans.append(tuple(span))
    return tuple(spans)


def _parse_lexical_spans(body: str, raw: str, lineno: int) -> tuple[tuple[str, ...], ...]:
    spans = []
    words: list[str] = []
    written = False
    for m in _LEXICAL_TOKEN.finditer(body):
        terminal, comma, other = m.groups()
        if other is not None:
            raise GrammarError(f"terminals must be single-quoted, found '{other}'",
                               lineno, _column(raw, other))
        if comma is None:
            if terminal:
                words.append(terminal)
            written = True
            continue
        if not written:
            raise GrammarError("missing span; write '' for an empty span", lineno, _column(raw, ":"))
        spans.append(tuple(words))
        words, written = [], False
    if not written:
        raise GrammarError("missing span; write '' for an empty span", lineno, _column(raw, ":"))
    spans.append(tuple(words))
    return tuple(spans)


def parse_grammar(text: str, name: str = "grammar") -> Grammar:
    start = None
    start_line = None
    rules: list[Rule] = []
    fan_outs: dict[str, int] = {}
    first_seen: dict[str, int] = {}
    terminals: set[str] = set()

    def record(symbol: str, phi: int, lineno: int, raw: str):
        if symbol in fan_outs and fan_outs[symbol] != phi:
            raise GrammarError(
                f"fan-out mismatch for {symbol}: {phi} here, {fan_outs[symbol]} on line {first_seen[symbol]}",
                lineno, _column(raw, symbol))
        fan_outs.setdefault(symbol, phi)
        first_seen.setdefault(symbol, lineno)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue

        if line.split()[0] == "start" and "->" not in line:
            parts = line.split()
            if len(parts) != 2 or not _IDENT.match(parts[1]):
                raise GrammarError("expected 'start <NT>'", lineno, 1)
            if start is not None:
                raise GrammarError("start symbol declared twice", lineno, 1)
            start, start_line = parts[1], lineno
            continue

        if "->" not in line:
            raise GrammarError("expected '->'", lineno, 1)
        head, rest = line.split("->", 1)
        lhs = head.strip()
        if not _IDENT.match(lhs):
            raise GrammarError(f"invalid nonterminal name '{lhs}'", lineno, 1)
        if ":" not in rest:
            raise GrammarError("expected ':' before the span list", lineno, _column(raw, "->") + 2)
        children_text, body = rest.split(":", 1)
        children = children_text.split()
        for child in children:
            if not _IDENT.match(child):
                raise GrammarError(f"invalid nonterminal name '{child}'", lineno, _column(raw, child))

        rule_id = len(rules) + 1
        if len(children) == 2:
            comp = _parse_binary_spans(body, raw, lineno)
            record(lhs, len(comp), lineno, raw)
            for source, child in zip("bg", children):
                indices = [v.index for span in comp for v in span if v.source == source]
                if not indices:
                    raise GrammarError(f"{child} contributes no spans", lineno, _column(raw, child))
                record(child, max(indices), lineno, raw)
            rules.append(Rule(rule_id, lhs, tuple(children), comp=comp, line=lineno))
        elif not children:
            strings = _parse_lexical_spans(body, raw, lineno)
            record(lhs, len(strings), lineno, raw)
            terminals.update(t for s in strings for t in s)
            rules.append(Rule(rule_id, lhs, strings=strings, line=lineno))
        elif len(children) == 1:
            raise GrammarError("unary rules are not supported; use binary or lexical rules",
                               lineno, _column(raw, children[0]))
        else:
            raise GrammarError("rules have at most two children", lineno, _column(raw, children[2]))

    if start is None:
        raise GrammarError("missing 'start <NT>' declaration")
    defined = {r.lhs for r in rules}
    if start not in defined:
        raise GrammarError(f"unknown symbol {start}: start symbol has no rules", start_line, 7)
    for r in rules:
        for child in r.rhs:
            if child not in defined:
                raise GrammarError(f"unknown symbol {child}: no rules rewrite it", r.line,
                                   None)
    if fan_outs[start] != 1:
        raise GrammarError(f"start symbol {start} must have fan-out 1, found {fan_outs[start]}",
                           start_line, 7)
    clash = terminals & set(fan_outs)
    if clash:
        raise GrammarError(f"symbols used as both terminal and nonterminal: {', '.join(sorted(clash))}")

    grammar = Grammar(start, fan_outs, tuple(rules), frozenset(terminals), name)
    violations = validate(grammar)
    if violations:
        m = re.match(r"rule (\d+):", violations[0])
        line = grammar.rule(int(m.group(1))).line if m else None
        raise GrammarError("; ".join(violations), line)
    return grammar


def format_grammar(g: Grammar) -> str:
    lines = [f"start {g.start}"]
    lines.extend(str(r) for r in g.rules)
    return "\n".join(lines) + "\n"


def list_bundled(grammar_dir: str) -> list[str]:
    if not os.path.isdir(grammar_dir):
        return []
    return sorted(f[:-len(GRAMMAR_SUFFIX)] for f in os.listdir(grammar_dir)
                  if f.endswith(GRAMMAR_SUFFIX))


def load_grammar(name_or_path: str, grammar_dir: str) -> Grammar:
    """Load a grammar from a file path or a bundled grammar name."""
    path = name_or_path
    if not os.path.isfile(path):
        path = os.path.join(grammar_dir, name_or_path + GRAMMAR_SUFFIX)
    if not os.path.isfile(path):
        raise FileNotFoundError(f"No grammar file or bundled grammar named '{name_or_path}'")
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    name = os.path.basename(path)
    if name.endswith(GRAMMAR_SUFFIX):
        name = name[:-len(GRAMMAR_SUFFIX)]
    return parse_grammar(text, name)


# ============================================================================
# VALIDATION
# ============================================================================

def _validate_binary(g: Grammar, r: Rule) -> list[str]:
    out = []
    prefix = f"rule {r.id}:"
    if r.lhs in g.fan_outs and len(r.comp) != g.fan_outs[r.lhs]:
        out.append(f"{prefix} expected {g.fan_outs[r.lhs]} spans for {r.lhs}, found {len(r.comp)}")
    if any(not span for span in r.comp):
        out.append(f"{prefix} empty span template in binary rule")

    flat = [v for span in r.comp for v in span]
    for source, child in zip("bg", r.rhs):
        phi = g.fan_outs.get(child, 0)
        seen = [v.index for v in flat if v.source == source]
        for k in sorted(set(seen)):
            if k > phi:
                out.append(f"{prefix} {source}{k} exceeds the fan-out of {child}")
            elif seen.count(k) > 1:
                out.append(f"{prefix} non-linear use of {source}{k}")
        for k in range(1, phi + 1):
            if k not in seen:
                out.append(f"{prefix} {source}{k} unused (erasing)")
        if seen != sorted(seen):
            out.append(f"{prefix} {'beta' if source == 'b' else 'gamma'} order")

    if flat and flat[0] != Var("b", 1):
        out.append(f"{prefix} first span must start with b1")
    for span in r.comp:
        for left, right in zip(span, span[1:]):
            if left.source == right.source:
                out.append(f"{prefix} adjacent variables {left} {right} from the same child")
    return out


def validate(g: Grammar) -> list[str]:
    violations = []
    if g.fan_outs.get(g.start) != 1:
        violations.append(f"start symbol {g.start} must have fan-out 1")
    for r in g.rules:
        if r.is_binary:
            violations.extend(_validate_binary(g, r))
            continue
        if len(r.strings) != g.fan_outs.get(r.lhs):
            violations.append(f"rule {r.id}: expected {g.fan_outs.get(r.lhs)} spans for {r.lhs}, "
                              f"found {len(r.strings)}")
        if r.strings and not r.strings[0]:
            violations.append(f"rule {r.id}: first span must be nonempty")
        for s in r.strings:
            for t in s:
                if not t or any(c.isspace() for c in t):
                    violations.append(f"rule {r.id}: invalid terminal '{t}'")
    return violations


# ============================================================================
# ANALYSIS
# ============================================================================

def delta(g: Grammar, r: Rule) -> int:
    if not r.is_binary:
        raise ValueError(f"delta is undefined for lexical rule {r.id}")
    b, c = r.rhs
    return g.fan_outs[b] + g.fan_outs[c] - g.fan_outs[r.lhs]


def adjacency_count(r: Rule) -> int:
    return sum(1 for span in r.comp for left, right in zip(span, span[1:])
               if left.source != right.source)


def per_rule_contact_rank(g: Grammar, r: Rule) -> int:
    dl = delta(g, r)
    pb, pc = g.fan_outs[r.rhs[0]], g.fan_outs[r.rhs[1]]
    return max(dl, 2 * pb - dl, 2 * pc - dl)


def _fan_out_form(g: Grammar, r: Rule) -> int:
    pa, pb, pc = g.fan_outs[r.lhs], g.fan_outs[r.rhs[0]], g.fan_outs[r.rhs[1]]
    return max(pa + pb - pc, pa - pb + pc, -pa + pb + pc)


def rule_weight(g: Grammar, r: Rule) -> int:
    """phi(A) + phi(B) + phi(C): the tabular parsing exponent of one rule."""
    return g.fan_outs[r.lhs] + sum(g.fan_outs[c] for c in r.rhs)


def binarization_bound(g: Grammar, r: Rule) -> float:
    """d(r) against the mean fan-out of the rule; never below 1."""
    return per_rule_contact_rank(g, r) / (rule_weight(g, r) / 3)


def configurations(r: Rule) -> ConfigTriple:
    cfg1, cfg2, cfg3 = set(), set(), set()
    for t, span in enumerate(r.comp, start=1):
        if span[0].source == "b":
            cfg1.add(2 * t - 1)
        if span[-1].source == "b":
            cfg1.add(2 * t)
        last = len(span) - 1
        for pos, v in enumerate(span):
            if v.source == "b":
                if pos == 0:
                    cfg2.add(2 * v.index - 1)
                if pos == last:
                    cfg2.add(2 * v.index)
            else:
                if pos > 0:
                    cfg3.add(2 * v.index - 1)
                if pos < last:
                    cfg3.add(2 * v.index)
    return ConfigTriple(frozenset(cfg1), frozenset(cfg2), frozenset(cfg3))


def contact_rank(g: Grammar) -> int:
    if not g.binary_rules:
        return 1
    d = max(per_rule_contact_rank(g, r) for r in g.binary_rules)
    assert d == max(_fan_out_form(g, r) for r in g.binary_rules), "contact rank formulas disagree"
    return d


def fan_out(g: Grammar) -> int:
    return max(g.fan_outs.values())


def tabular_exponent(g: Grammar) -> int:
    if not g.binary_rules:
        return 1
    return max(rule_weight(g, r) for r in g.binary_rules)


def config_set(g: Grammar, symbol: str) -> frozenset[frozenset[int]]:
    found = set()
    for r in g.binary_rules:
        cfg = configurations(r)
        if r.lhs == symbol:
            found.add(cfg.cfg1)
        if r.rhs[0] == symbol:
            found.add(cfg.cfg2)
        if r.rhs[1] == symbol:
            found.add(cfg.cfg3)
    return frozenset(found)


def is_balanced(g: Grammar) -> bool:
    d = contact_rank(g)
    return any(g.fan_outs[b] == d and len(config_set(g, b)) > 1 for b in sorted(g.fan_outs))


def dual_initial_rules(g: Grammar) -> tuple[Rule, ...]:
    """Binary rules with a left-hand span that opens with the second child."""
    return tuple(r for r in g.binary_rules if any(span[0] == Var("g", 1) for span in r.comp))


def is_single_initial(g: Grammar) -> bool:
    return not dual_initial_rules(g)



def is_enclosing(g: Grammar, r: Rule) -> bool:
    """True when every span of the second child sits strictly inside A's spans."""
    return 2 * g.fan_outs[r.rhs[1]] == delta(g, r)


def analyze(g: Grammar, omega: float = DEFAULT_OMEGA) -> AnalysisReport:
    d = contact_rank(g)
    per_rule = []
    for r in g.binary_rules:
        per_rule.append(RuleAnalysis(
            rule_id=r.id,
            delta=delta(g, r),
            contact_rank=per_rule_contact_rank(g, r),
            configs=configurations(r),
            binarization_ratio=binarization_bound(g, r),
        ))
    balanced = is_balanced(g)
    return AnalysisReport(
        grammar=g.name,
        f=fan_out(g),
        d=d,
        per_rule=tuple(per_rule),
        config_sets={nt: config_set(g, nt) for nt in sorted(g.fan_outs)},
        balanced=balanced,
        single_initial=is_single_initial(g),
        omega=omega,
        predicted_matmul_exponent=omega * d + (1 if balanced else 0),
        tabular_exponent=tabular_exponent(g),
        enclosing=any(is_enclosing(g, r) for r in g.binary_rules),
    )


# ============================================================================
# SINGLE-INITIAL CONVERSION
# ============================================================================

def _shift_b(comp: Iterable[tuple[Var, ...]], from_index: int) -> list[tuple[Var, ...]]:
    return [tuple(Var("b", v.index + 1) if v.source == "b" and v.index >= from_index else v
                  for v in span) for span in comp]


def _betas_before(comp: tuple[tuple[Var, ...], ...], t: int) -> int:
    return sum(1 for span in comp[:t] for v in span if v.source == "b")


def _open_empty_span(comp, t: int) -> tuple[tuple[tuple[Var, ...], ...], int]:
    """Give the first child an empty span at the head of template t."""
    q = _betas_before(comp, t) + 1
    spans = _shift_b(comp, q)
    spans[t] = (Var("b", q),) + spans[t]
    return tuple(spans), q


def _insert_lone_span(comp, q: int) -> tuple[tuple[tuple[Var, ...], ...], int]:
    """Insert a new template at span position q holding one fresh b variable."""
    q2 = _betas_before(comp, q - 1) + 1
    spans = _shift_b(comp, q2)
    spans.insert(q - 1, (Var("b", q2),))
    return tuple(spans), q2


def to_single_initial(g: Grammar) -> Grammar:
    """Give the first child of every dual-initial rule an extra empty span.

    Variants of variants stack one empty span per converted rule along a
    first-child chain, so the fan-out grows by at most the number of
    dual-initial rules. A chain that passes the same converted rule twice
    never closes and is rejected.
    """
    dual = dual_initial_rules(g)
    if not dual:
        return g

    fan_outs = dict(g.fan_outs)
    bound = fan_out(g) + len(dual)
    variants: dict[tuple[str, int], str] = {}
    pending: list[tuple[str, int]] = []

    def variant(symbol: str, q: int) -> str:
        key = (symbol, q)
        if key not in variants:
            if fan_outs[symbol] + 1 > bound:
                raise GrammarError(
                    f"cannot convert to single-initial form: the empty-span variants of "
                    f"{symbol} grow without bound through a left-recursive dual-initial rule")
            new = f"{symbol}_e{q}"
            while new in fan_outs:
                new += "_"
            variants[key] = new
            fan_outs[new] = fan_outs[symbol] + 1
            pending.append(key)
        return variants[key]

    bodies: list[tuple[str, tuple, tuple, tuple]] = []
    for r in g.rules:
        if r.is_binary:
            t = next((t for t, span in enumerate(r.comp) if span[0] == Var("g", 1)), None)
            if t is not None:
                comp, q = _open_empty_span(r.comp, t)
                bodies.append((r.lhs, (variant(r.rhs[0], q), r.rhs[1]), comp, ()))
                continue
        bodies.append((r.lhs, r.rhs, r.comp, r.strings))

    built: set[str] = set(g.fan_outs)
    stalled = 0
    while pending:
        symbol, q = pending.pop(0)
        if symbol not in built:
            pending.append((symbol, q))
            stalled += 1
            if stalled > len(pending) + 1:
                raise GrammarError(f"cannot build an empty-span variant of {symbol}")
            continue
        stalled = 0
        new = variants[(symbol, q)]
        for lhs, rhs, comp, strings in [b for b in bodies if b[0] == symbol]:
            if rhs:
                comp2, q2 = _insert_lone_span(comp, q)
                bodies.append((new, (variant(rhs[0], q2), rhs[1]), comp2, ()))
            else:
                bodies.append((new, (), (), strings[:q - 1] + ((),) + strings[q - 1:]))
        built.add(new)

    rules = tuple(Rule(k, lhs, rhs, comp=comp, strings=strings)
                  for k, (lhs, rhs, comp, strings) in enumerate(bodies, start=1))
    return Grammar(g.start, fan_outs, rules, g.terminals, g.name)
