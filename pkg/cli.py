"""The ``lcfrs`` command group: analyze, recognize, parse, bench, grammars.

Exit status is 0 on ACCEPT (or success), 1 on REJECT and 2 on any error.
"""
import csv
import functools
import json
import sys
import time
from typing import Optional

import click

from config import BACKENDS, CLOSURES, ENGINES, Config, check_choice
from grammar import AnalysisReport, Grammar, analyze, list_bundled, load_grammar
from oracle import enumerate_language
from recognizer import parse, recognize
from utils import logger, parse_lengths, parse_sentence

EXIT_ACCEPT, EXIT_REJECT, EXIT_ERROR = 0, 1, 2
BENCH_HEADER = ("grammar", "n", "engine", "backend", "closure", "ms", "facts", "muls")


def handle_errors(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (ValueError, OSError) as e:
            logger.log_error(e, {"command": func.__name__})
            click.echo(f"error: {e}", err=True)
            sys.exit(EXIT_ERROR)
    return wrapper


def _grammar(name_or_path: str) -> Grammar:
    return load_grammar(name_or_path, Config.GRAMMAR_DIR)


def _sentence(text: Optional[str], source) -> tuple[str, ...]:
    if text is not None and source is not None:
        raise ValueError("use either --sentence or --sentence-file, not both")
    if source is not None:
        text = source.read()
    if text is None:
        raise ValueError("a sentence is required (--sentence or --sentence-file)")
    return parse_sentence(text)


def render_report(report: AnalysisReport) -> str:
    exponent = "omega*d + 1" if report.balanced else "omega*d"
    lines = [
        f"grammar: {report.grammar}",
        f"f = {report.f}",
        f"d = {report.d}",
    ]
    for r in report.per_rule:
        cfg = r.configs.to_dict()
        lines.append(f"  rule {r.rule_id}: delta={r.delta} d={r.contact_rank} "
                     f"cfg1={cfg['cfg1']} cfg2={cfg['cfg2']} cfg3={cfg['cfg3']} "
                     f"ratio={r.binarization_ratio:.3f}")
    lines.extend([
        f"balanced: {str(report.balanced).lower()}",
        f"single-initial: {str(report.single_initial).lower()}",
        f"enclosing: {str(report.enclosing).lower()}",
        f"predicted exponent ({exponent}, omega={report.omega}): {report.predicted_matmul_exponent:.4f}",
        f"tabular exponent p: {report.tabular_exponent}",
    ])
    return "\n".join(lines)


grammar_option = click.option("--grammar", "-g", "grammar_name", required=True,
                              help="Grammar file path or bundled grammar name.")
sentence_options = [
    click.option("--sentence", "-s", default=None, help="Whitespace-separated tokens."),
    click.option("--sentence-file", type=click.File("r", encoding="utf-8"), default=None),
]
engine_options = [
    click.option("--engine", default=None, help=f"One of: {', '.join(ENGINES)}."),
    click.option("--backend", default=None, help=f"One of: {', '.join(BACKENDS)}."),
    click.option("--closure", "closure_alg", default=None, help=f"One of: {', '.join(CLOSURES)}."),
]


def _apply(options):
    def decorator(func):
        for option in reversed(options):
            func = option(func)
        return func
    return decorator


def _engine_settings(engine, backend, closure_alg) -> dict:
    return {
        "engine": check_choice("engine", engine or Config.ENGINE, ENGINES),
        "backend": check_choice("backend", backend or Config.BACKEND, BACKENDS),
        "closure_alg": check_choice("closure", closure_alg or Config.CLOSURE, CLOSURES),
    }


@click.group(name="lcfrs")
def lcfrs():
    """Recognize and analyze binary LCFRS grammars."""


@lcfrs.command("analyze")
@grammar_option
@click.option("--json", "as_json", is_flag=True)
@click.option("--omega", type=float, default=None)
@handle_errors
def analyze_command(grammar_name, as_json, omega):
    """Report fan-out, contact rank, balance and predicted exponents."""
    g = _grammar(grammar_name)
    report = analyze(g, Config.OMEGA if omega is None else omega)
    logger.log_analysis(g.name, report.d, report.balanced)
    if as_json:
        click.echo(json.dumps(report.to_dict(), indent=2))
    else:
        click.echo(render_report(report))


@lcfrs.command("recognize")
@grammar_option
@_apply(sentence_options)
@_apply(engine_options)
@click.option("--json", "as_json", is_flag=True)
@handle_errors
def recognize_command(grammar_name, sentence, sentence_file, engine, backend, closure_alg, as_json):
    """Print ACCEPT or REJECT; exit 0 or 1."""
    g = _grammar(grammar_name)
    tokens = _sentence(sentence, sentence_file)
    result = recognize(g, tokens, **_engine_settings(engine, backend, closure_alg))
    if as_json:
        click.echo(json.dumps(result.to_dict(), indent=2))
    else:
        click.echo("ACCEPT" if result.accepted else "REJECT")
    sys.exit(EXIT_ACCEPT if result.accepted else EXIT_REJECT)


@lcfrs.command("parse")
@grammar_option
@_apply(sentence_options)
@_apply(engine_options)
@handle_errors
def parse_command(grammar_name, sentence, sentence_file, engine, backend, closure_alg):
    """Print one derivation as JSON, or null when the sentence is rejected."""
    g = _grammar(grammar_name)
    tokens = _sentence(sentence, sentence_file)
    result, tree = parse(g, tokens, **_engine_settings(engine, backend, closure_alg))
    click.echo(json.dumps(tree.to_dict() if tree else None, indent=2))
    sys.exit(EXIT_ACCEPT if result.accepted else EXIT_REJECT)


def bench_sentence(g: Grammar, n: int, members: dict[int, tuple[str, ...]]) -> tuple[str, ...]:
    """The first member of length n if one is known, else n copies of a terminal."""
    if n in members:
        return members[n]
    terminal = min(g.terminals) if g.terminals else "a"
    return (terminal,) * n


@lcfrs.command("bench")
@grammar_option
@click.option("--lengths", default="2,4,6", show_default=True, help="Comma-separated sentence lengths.")
@click.option("--max-len", type=int, default=None,
              help="Enumeration bound used to pick member sentences.")
@_apply(engine_options)
@handle_errors
def bench_command(grammar_name, lengths, max_len, engine, backend, closure_alg):
    """Time recognition over a length sweep; CSV on stdout."""
    g = _grammar(grammar_name)
    settings = _engine_settings(engine, backend, closure_alg)
    sweep = parse_lengths(lengths)
    bound = min(max(sweep, default=0), Config.MAX_ENUM_LEN if max_len is None else max_len)
    members: dict[int, tuple[str, ...]] = {}
    for member in sorted(enumerate_language(g, bound)):
        members.setdefault(len(member), member)

    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(BENCH_HEADER)
    for n in sweep:
        tokens = bench_sentence(g, n, members)
        started = time.perf_counter()
        result = recognize(g, tokens, **settings)
        ms = (time.perf_counter() - started) * 1000
        writer.writerow((g.name, n, settings["engine"], settings["backend"], settings["closure_alg"],
                         f"{ms:.3f}", result.facts, result.stats.multiplications))


@lcfrs.command("grammars")
def grammars_command():
    """List bundled grammar names."""
    for name in list_bundled(Config.GRAMMAR_DIR):
        click.echo(name)


if __name__ == "__main__":
    lcfrs()
