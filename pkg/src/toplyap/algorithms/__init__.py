"""Lyapunov estimation, periodic approximation, JSR brackets and pressure."""

from toplyap.algorithms.jsr import (
    JsrBracket, LowerBound, OptimalOrbit, UpperBound, jsr_lower, jsr_upper, metric_jsr,
    optimal_orbit,
)
from toplyap.algorithms.words import WordTable, word_table

__all__ = [
    "JsrBracket", "LowerBound", "OptimalOrbit", "UpperBound", "WordTable",
    "jsr_lower", "jsr_upper", "metric_jsr", "optimal_orbit", "word_table",
]
