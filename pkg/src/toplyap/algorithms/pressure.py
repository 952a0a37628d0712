"""Cylinder-sum pressure of the displacement potential and the zero-temperature scan.

For a potential depending on the first ``n`` symbols,
``P_n(q) = (1/n) log sum_w exp(q D(w))`` over admissible words ``w`` of length
``n``, where ``D(w)`` is the displacement of the cocycle over ``w``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from toplyap.algorithms.words import WordTable, word_table
from toplyap.cocycle import Cocycle
from toplyap.errors import InputError, InvariantViolation
from toplyap.symbolic import MarkovChain, entropy

TOL = 1e-9


def _logsumexp(v: np.ndarray) -> float:
    m = float(v.max())
    return m + math.log(math.fsum(np.exp(v - m).tolist()))


def pressure(c: Cocycle, q: float, n: int, table: WordTable | None = None,
             threads: int = 1) -> float:
    if n < 1:
        raise InputError("n must be at least 1")
    tab = table if table is not None else word_table(c, n, threads)
    return _logsumexp(q * tab.displacements) / n


def mean_displacement(table: WordTable, chain: MarkovChain) -> float:
    """``(1/n) sum_w mu(w) D(w)`` over the length-``n`` cylinders."""
    probs = np.array([chain.word_probability(w) for w in table.words])
    return math.fsum((probs * table.displacements).tolist()) / table.n


def variational_gap(c: Cocycle, q: float, chains: Sequence[MarkovChain], n: int,
                    table: WordTable | None = None, threads: int = 1,
                    tol: float = TOL) -> list[float]:
    """``P_n(q) - (h(mu) + q lambda_n(mu))`` for each Markov measure ``mu``."""
    tab = table if table is not None else word_table(c, n, threads)
    p = pressure(c, q, n, table=tab)
    gaps = []
    for chain in chains:
        if chain.alphabet_size != c.alphabet_size:
            raise InputError("chain and cocycle alphabets differ")
        gaps.append(p - (entropy(chain) + q * mean_displacement(tab, chain)))
    bad = [g for g in gaps if g < -tol]
    if bad:
        raise InvariantViolation(f"variational inequality fails: gaps {bad}")
    return gaps


@dataclass
class PressureCurve:
    q: list[float]
    values: list[float]
    n: int
    word_count: int
    max_displacement: float
    mean_displacement: list[float] = field(default_factory=list)
    concentration: list[float] = field(default_factory=list)

    @property
    def normalized(self) -> list[float]:
        return [v / q for v, q in zip(self.values, self.q)]

    def sandwich(self, q: float) -> tuple[float, float]:
        a = self.max_displacement / self.n
        return a, a + math.log(self.word_count) / (q * self.n)


def _gibbs(table: WordTable, q: float, near: np.ndarray) -> tuple[float, float]:
    v = q * table.displacements
    w = np.exp(v - v.max())
    z = math.fsum(w.tolist())
    mean = math.fsum((w * table.displacements).tolist()) / z / table.n
    mass = math.fsum(w[near].tolist()) / z
    return mean, mass


def zero_temperature_scan(c: Cocycle, q_list: Sequence[float], n: int,
                          table: WordTable | None = None, threads: int = 1,
                          near_fraction: float = 0.05, tol: float = TOL) -> PressureCurve:
    """Pressure over a grid of increasing ``q`` with Gibbs-weight statistics.

    Checks that ``P_n(q)/q`` decreases, stays within
    ``[a_n/n, a_n/n + log(#words)/(q n)]``, and that the Gibbs mass on words
    within ``near_fraction`` of the largest displacement does not decrease.
    """
    qs = [float(q) for q in q_list]
    if not qs or any(q <= 0 for q in qs) or any(b <= a for a, b in zip(qs, qs[1:])):
        raise InputError("q_list must be positive and strictly increasing")
    tab = table if table is not None else word_table(c, n, threads)
    a_n = tab.max_displacement
    near = tab.displacements >= a_n - near_fraction * abs(a_n)
    curve = PressureCurve(qs, [], n, tab.count, a_n)
    for q in qs:
        curve.values.append(pressure(c, q, n, table=tab))
        mean, mass = _gibbs(tab, q, near)
        curve.mean_displacement.append(mean)
        curve.concentration.append(mass)
    norm = curve.normalized
    for a, b in zip(norm, norm[1:]):
        if b > a + tol:
            raise InvariantViolation(f"P_n(q)/q increased from {a} to {b}")
    for q, v in zip(qs, norm):
        lo, hi = curve.sandwich(q)
        if not (lo - tol <= v <= hi + tol):
            raise InvariantViolation(f"P_n({q})/{q} = {v} outside [{lo}, {hi}]")
    for a, b in zip(curve.concentration, curve.concentration[1:]):
        if b < a - tol:
            raise InvariantViolation(f"Gibbs concentration decreased from {a} to {b}")
    return curve
