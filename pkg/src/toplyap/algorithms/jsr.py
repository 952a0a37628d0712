"""Brackets for the metric joint spectral radius.

Upper side: ``min_j a_j / j`` where ``a_j`` is the largest displacement over
admissible words of length ``j`` (Fekete).  Lower side: the best translation
length per symbol over primitive periodic words.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from toplyap.algorithms.words import _suffixes, split_depth, suffix_images
from toplyap.cocycle import Cocycle, evaluate
from toplyap.errors import InputError, InvariantViolation
from toplyap.symbolic import CyclicWord, Word, primitive_cycles

# Relative safety margin on float comparisons of logged norms when pruning.
_PRUNE_MARGIN = 1e-9


@dataclass
class UpperBound:
    value: float
    level: int
    maxima: list[float]
    witnesses: list[Word]
    trace: list[tuple[int, float, float]]
    slack: float
    nodes: int


@dataclass
class LowerBound:
    value: float
    witness: CyclicWord
    translation_length: float
    converged: bool
    candidates: int


@dataclass
class JsrBracket:
    lower: float
    upper: float
    lower_witness: CyclicWord
    witness_translation_length: float
    upper_level: int
    upper_trace: list[tuple[int, float, float]]
    slack: float
    converged: bool

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def rho_lower(self) -> float:
        return math.exp(self.lower)

    @property
    def rho_upper(self) -> float:
        return math.exp(self.upper)

    def contains(self, x: float) -> bool:
        return self.lower <= x <= self.upper


@dataclass
class OptimalOrbit:
    cycle: CyclicWord
    exponent: float
    eta: int
    eta_exponent: float
    eta_trace: list[float] = field(default_factory=list)
    curve_exponents: list[float] = field(default_factory=list)
    converged: bool = True


def _better(v: float, w: Word, best: tuple[float, Word]) -> bool:
    return v > best[0] or (v == best[0] and w < best[1])


def _bb_subtree(c: Cocycle, j: int, suffix: Word, maxima: list[float], slack: float,
                incumbent: tuple[float, Word]) -> tuple[tuple[float, Word], int]:
    t = c.target
    act = t.act
    els = c.elements
    preds = [c.system.predecessors(b) for b in range(c.alphabet_size)]
    best = incumbent
    nodes = 0

    def rec(word: Word, images: list) -> None:
        nonlocal best, nodes
        nodes += 1
        d = t.images_displacement(images)
        i = len(word)
        if i == j:
            if _better(d, word, best):
                best = (d, word)
            return
        bound = d + maxima[j - i] + slack
        if bound < best[0] - _PRUNE_MARGIN * max(1.0, abs(best[0])):
            return
        for s in preds[word[0]]:
            g = els[s]
            rec((s,) + word, [act(g, a) for a in images])

    rec(suffix, suffix_images(c, suffix))
    return best, nodes


def jsr_upper(c: Cocycle, n: int, threads: int = 1, slack: float | None = None) -> UpperBound:
    """Fekete upper bound ``min_{j<=n} a_j / j`` computed by branch and bound.

    Subtrees are pruned when the displacement of the current suffix plus the
    best displacement of the missing prefix length cannot reach the incumbent.
    Certified when the displacement is exactly subadditive (``slack == 0``).
    """
    if n < 1:
        raise InputError("n must be at least 1")
    t = c.target
    if slack is None:
        slack = t.default_slack()
    maxima = [0.0]
    witnesses: list[Word] = [()]
    trace = []
    nodes = 0
    best_ratio, best_level = math.inf, 0
    for j in range(1, n + 1):
        # seed the incumbent by extending the previous level's witness
        inc = (-math.inf, ())
        prev = witnesses[-1]
        for s in range(c.alphabet_size):
            if j == 1 or c.system.allowed(s, prev[0]):
                w = (s,) + prev
                d = t.images_displacement(suffix_images(c, w))
                if _better(d, w, inc):
                    inc = (d, w)
        depth = min(split_depth(c, j, threads), j)
        tasks = _suffixes(c, depth)
        run = lambda sfx: _bb_subtree(c, j, sfx, maxima, slack, inc)  # noqa: E731
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as ex:
                results = list(ex.map(run, tasks))
        else:
            results = [run(sfx) for sfx in tasks]
        best = inc
        for cand, cnt in results:
            nodes += cnt
            if _better(cand[0], cand[1], best):
                best = cand
        maxima.append(best[0])
        witnesses.append(best[1])
        ratio = best[0] / j
        if ratio < best_ratio:
            best_ratio, best_level = ratio, j
        trace.append((j, ratio, best_ratio))
    return UpperBound(best_ratio, best_level, maxima, witnesses, trace, slack, nodes)


def jsr_lower(c: Cocycle, k_max: int, threads: int = 1, m_max: int = 400,
              tol: float = 1e-12) -> LowerBound:
    """Best per-symbol translation length over primitive cycles of length <= k_max."""
    if k_max < 1:
        raise InputError("k_max must be at least 1")
    t = c.target
    cycles = primitive_cycles(c.system, k_max)

    def score(cyc: CyclicWord):
        g = evaluate(c, cyc.symbols)
        tl, ok = t.translation_length(g, m_max=m_max, tol=tol)
        return tl / cyc.period, tl, ok

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            scores = list(ex.map(score, cycles))
    else:
        scores = [score(cyc) for cyc in cycles]
    best_i = 0
    for i, (v, _, _) in enumerate(scores):
        b = scores[best_i][0]
        if v > b or (v == b and cycles[i].symbols < cycles[best_i].symbols):
            best_i = i
    v, tl, ok = scores[best_i]
    return LowerBound(v, cycles[best_i], tl, ok, len(cycles))


def metric_jsr(c: Cocycle, n: int, k_max: int, threads: int = 1,
               slack: float | None = None) -> JsrBracket:
    up = jsr_upper(c, n, threads=threads, slack=slack)
    lo = jsr_lower(c, k_max, threads=threads)
    allowance = 1e-12 if up.slack == 0 else 2.0 * up.slack / lo.witness.period
    if lo.value > up.value + allowance:
        raise InvariantViolation(
            f"bracket inverted: lower {lo.value} exceeds upper {up.value} by more than {allowance}")
    return JsrBracket(lo.value, up.value, lo.witness, lo.translation_length, up.level,
                      up.trace, up.slack, lo.converged)


def optimal_orbit(c: Cocycle, k_max: int, tol: float = 1e-6, m_max: int = 400,
                  threads: int = 1) -> OptimalOrbit:
    """Best periodic orbit and a marking curve growing at the orbit's exponent."""
    lo = jsr_lower(c, k_max, threads=threads, m_max=m_max)
    cyc = lo.witness
    t = c.target
    g = evaluate(c, cyc.symbols)
    p = cyc.period
    ests = [t.curve_growth(g, a, m_max=m_max) for a in t.marking]
    exps = [e.value / p for e in ests]
    eta = max(range(len(exps)), key=lambda i: (exps[i], -i))
    if abs(exps[eta] - lo.value) > tol:
        raise InvariantViolation(
            f"no marking curve realises the orbit exponent {lo.value}: best {exps[eta]}")
    trace = [v / p for v in ests[eta].trace]
    return OptimalOrbit(cyc, lo.value, eta, exps[eta], trace, exps,
                        lo.converged and all(e.converged for e in ests))
