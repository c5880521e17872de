from flask import Blueprint, current_app, jsonify, request

from grammar import Grammar, GrammarError, analyze, list_bundled, load_grammar, parse_grammar
from health_checks import get_overall_health
from recognizer import parse, recognize
from utils import logger, parse_sentence

bp = Blueprint("analysis", __name__)


class NotFound(LookupError):
    pass


def _grammar_from(payload: dict) -> Grammar:
    text = payload.get("grammar")
    name = payload.get("bundled")
    if text and name:
        raise ValueError("send either 'grammar' or 'bundled', not both")
    if text:
        return parse_grammar(text, payload.get("name") or "inline")
    if not name:
        raise ValueError("missing 'grammar' (text) or 'bundled' (name)")
    grammar_dir = current_app.config["GRAMMAR_DIR"]
    if name not in list_bundled(grammar_dir):
        raise NotFound(f"unknown bundled grammar '{name}'")
    return load_grammar(name, grammar_dir)


def _options(payload: dict) -> dict:
    return {
        "engine": payload.get("engine"),
        "backend": payload.get("backend"),
        "closure_alg": payload.get("closure"),
    }


def _error(e: Exception, status: int):
    body = {"error": str(e)}
    if isinstance(e, GrammarError):
        body.update({"line": e.line, "column": e.column})
    logger.log_error(e, {"endpoint": request.path})
    return jsonify(body), status


def _handle(view):
    payload = request.get_json(silent=True) or {}
    try:
        return jsonify(view(payload))
    except NotFound as e:
        return _error(e, 404)
    except ValueError as e:
        return _error(e, 400)


@bp.post("/api/analyze")
def analyze_grammar():
    def view(payload):
        g = _grammar_from(payload)
        omega = payload.get("omega")
        report = analyze(g, float(omega) if omega is not None else current_app.config["OMEGA"])
        logger.log_analysis(g.name, report.d, report.balanced)
        return report.to_dict()
    return _handle(view)


@bp.post("/api/recognize")
def recognize_sentence():
    def view(payload):
        g = _grammar_from(payload)
        result = recognize(g, parse_sentence(payload.get("sentence")), **_options(payload))
        return result.to_dict()
    return _handle(view)


@bp.post("/api/parse")
def parse_sentence_view():
    def view(payload):
        g = _grammar_from(payload)
        result, tree = parse(g, parse_sentence(payload.get("sentence")), **_options(payload))
        return {"accept": result.accepted, "derivation": tree.to_dict() if tree else None}
    return _handle(view)


@bp.get("/api/grammars")
def grammars():
    return jsonify(list_bundled(current_app.config["GRAMMAR_DIR"]))


@bp.get("/health")
def health():
    status = get_overall_health()
    body = dict(status, checks=[c.to_dict() for c in status["checks"]])
    return jsonify(body), 200 if status["status"] == "healthy" else 503
