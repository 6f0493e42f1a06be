"""EVL: a small functional language with polymorphic record types for
event processing."""
from .parser import ParseError, parse, parse_scheme, parse_type, pretty
from .syntax import PolyType, show_scheme, show_type
from .infer import TypeInferenceError, check, infer, principal
from .evaluator import evaluate, step, trace
from .prelude import prelude_env, primitives

__all__ = [
    "ParseError",
    "PolyType",
    "TypeInferenceError",
    "check",
    "evaluate",
    "infer",
    "parse",
    "parse_scheme",
    "parse_type",
    "prelude_env",
    "pretty",
    "primitives",
    "principal",
    "show_scheme",
    "show_type",
    "step",
    "trace",
]
