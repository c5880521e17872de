import os

from dotenv import load_dotenv

BASE_DIR = os.path.abspath(os.path.dirname(__file__))
load_dotenv(os.path.join(BASE_DIR, ".env"))

BACKENDS = ("naive", "bitset", "strassen")
CLOSURES = ("fixpoint", "valiant")
ENGINES = ("matmul", "tabular")


class Config:
    OMEGA = float(os.environ.get('LCFRS_OMEGA', '2.3728639'))
    BACKEND = os.environ.get('LCFRS_BACKEND', 'bitset').lower()
    STRASSEN_CUTOFF = int(os.environ.get('LCFRS_STRASSEN_CUTOFF', '64'))
    CLOSURE = os.environ.get('LCFRS_CLOSURE', 'fixpoint').lower()
    ENGINE = os.environ.get('LCFRS_ENGINE', 'matmul').lower()
    LOG_LEVEL = os.environ.get('LCFRS_LOG_LEVEL', 'INFO').upper()
    GRAMMAR_DIR = os.environ.get('LCFRS_GRAMMAR_DIR') or os.path.join(BASE_DIR, 'grammars')
    MAX_ENUM_LEN = int(os.environ.get('LCFRS_MAX_ENUM_LEN', '12'))
    JSON_SORT_KEYS = False


def check_choice(name: str, value: str, choices: tuple[str, ...]) -> str:
    value = (value or "").strip().lower()
    if value not in choices:
        raise ValueError(f"Invalid {name} '{value}'. Use one of: {', '.join(choices)}")
    return value
