from datetime import datetime, timezone

import numpy as np

from boolean_linalg import multiply_bitset, multiply_naive, multiply_strassen
from config import Config
from grammar import analyze, list_bundled, load_grammar
from oracle import enumerate_language
from recognizer import recognize

# bundled grammar -> (d, balanced)
EXPECTED_ANALYSIS = {
    "cfg_anbn": (1, False),
    "tag_style": (2, False),
    "itg_sep": (2, True),
}
SMOKE_LEN = 4


class HealthCheckResult:
    def __init__(self, service_name: str, status: bool, message: str, details: dict = None):
        self.service_name = service_name
        self.status = status
        self.message = message
        self.details = details or {}
        self.timestamp = datetime.now(timezone.utc)

    def to_dict(self) -> dict:
        return {
            "service": self.service_name,
            "status": self.status,
            "message": self.message,
            "details": self.details,
            "timestamp": self.timestamp.isoformat(),
        }


def check_bundled_grammars():
    """Every bundled grammar parses and validates."""
    names = list_bundled(Config.GRAMMAR_DIR)
    if not names:
        return HealthCheckResult("grammars", False, f"No bundled grammars in {Config.GRAMMAR_DIR}")
    broken = {}
    for name in names:
        try:
            load_grammar(name, Config.GRAMMAR_DIR)
        except (ValueError, OSError) as e:
            broken[name] = str(e)
    if broken:
        return HealthCheckResult("grammars", False, "Some bundled grammars failed to load", broken)
    return HealthCheckResult("grammars", True, f"{len(names)} bundled grammars load", {"names": names})


def check_analysis():
    """Contact rank and balance of the reference grammars."""
    wrong = {}
    for name, (d, balanced) in EXPECTED_ANALYSIS.items():
        report = analyze(load_grammar(name, Config.GRAMMAR_DIR))
        if (report.d, report.balanced) != (d, balanced):
            wrong[name] = {"d": report.d, "balanced": report.balanced}
    if wrong:
        return HealthCheckResult("analysis", False, "Analysis differs from expected values", wrong)
    return HealthCheckResult("analysis", True, "Analysis matches expected values")


def check_backends():
    rng = np.random.default_rng(7)
    a = rng.random((16, 16)) < 0.3
    b = rng.random((16, 16)) < 0.3
    reference = multiply_naive(a, b)
    same = {
        "bitset": bool(np.array_equal(reference, multiply_bitset(a, b))),
        "strassen": bool(np.array_equal(reference, multiply_strassen(a, b, cutoff=2))),
    }
    if not all(same.values()):
        return HealthCheckResult("backends", False, "Boolean backends disagree", same)
    return HealthCheckResult("backends", True, "Boolean backends agree", same)


def check_engine_agreement():
    """Matrix engine and chart parser agree on a short member and non-member."""
    disagreements = {}
    for name in list_bundled(Config.GRAMMAR_DIR):
        g = load_grammar(name, Config.GRAMMAR_DIR)
        members = sorted(enumerate_language(g, SMOKE_LEN), key=lambda w: (len(w), w))
        if not members:
            continue
        member = members[0]
        sentences = [member, member[:-1]] if len(member) > 1 else [member]
        for sentence in sentences:
            matmul = recognize(g, sentence, engine="matmul").accepted
            tabular = recognize(g, sentence, engine="tabular").accepted
            if matmul != tabular:
                disagreements[f"{name}: {' '.join(sentence)}"] = {"matmul": matmul, "tabular": tabular}
    if disagreements:
        return HealthCheckResult("engine", False, "Engine and chart parser disagree", disagreements)
    return HealthCheckResult("engine", True, "Engine and chart parser agree")


def run_all_health_checks():
    """Run all health checks and return results."""
    checks = [
        check_bundled_grammars,
        check_analysis,
        check_backends,
        check_engine_agreement,
    ]

    results = []
    for check_func in checks:
        try:
            result = check_func()
            results.append(result)
        except Exception as e:
            results.append(HealthCheckResult(
                check_func.__name__,
                False,
                f"Health check failed to run: {str(e)}"
            ))

    return results


def get_overall_health():
    """Get overall health status."""
    results = run_all_health_checks()

    failed_checks = [r for r in results if not r.status]
    overall_status = len(failed_checks) == 0

    return {
        "status": "healthy" if overall_status else "unhealthy",
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "checks": results,
        "failed_count": len(failed_checks),
        "total_count": len(results)
    }
