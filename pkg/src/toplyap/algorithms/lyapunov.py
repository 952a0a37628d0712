"""Lyapunov exponents along sampled orbits and their periodic approximation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from toplyap.cocycle import Cocycle, displacement_trace, word_displacement
from toplyap.errors import InputError
from toplyap.symbolic import (
    CyclicWord, MarkovChain, close_to_periodic, find_return, is_admissible, sample_orbit,
)


@dataclass
class LyapunovEstimate:
    value: float
    n: int
    seed: object
    trace: list[tuple[int, float]] = field(default_factory=list)


@dataclass
class PeriodicApproximation:
    cycle: CyclicWord
    k: int
    n: int
    eps: float
    periodic_value: float
    estimate: float
    n_estimate: int
    gap: float
    converged: bool
    retries: int

    @property
    def in_window(self) -> bool:
        return self.n * (1 + self.eps) < self.k < self.n * (1 + 2 * self.eps)


def _checkpoints(n: int) -> list[int]:
    cps = []
    m = 1
    while m < n:
        cps.append(m)
        m *= 2
    cps.append(n)
    return cps


def _check_chain(c: Cocycle, chain: MarkovChain) -> None:
    if chain.alphabet_size != c.alphabet_size:
        raise InputError("chain and cocycle alphabets differ")
    sup = chain.support().transitions
    allowed = c.system.transitions
    for i, row in enumerate(sup):
        for j, v in enumerate(row):
            if v and not allowed[i][j]:
                raise InputError(f"chain allows the forbidden transition {i}->{j}")


def orbit_lyapunov(c: Cocycle, x, seed=None) -> LyapunovEstimate:
    """``D(o, Z_n(x) o) / n`` along a given word, traced at powers of two."""
    n = len(x)
    if n < 1:
        raise InputError("orbit must be non-empty")
    if not is_admissible(x, c.system):
        raise InputError("orbit is not admissible")
    cps = _checkpoints(n)
    ds = displacement_trace(c, x, cps)
    trace = [(m, d / m) for m, d in zip(cps, ds)]
    return LyapunovEstimate(trace[-1][1], n, seed, trace)


def lyapunov(c: Cocycle, chain: MarkovChain, n: int, seed) -> LyapunovEstimate:
    """Top Lyapunov exponent estimate from one sampled orbit of length ``n``."""
    if n < 1:
        raise InputError("n must be at least 1")
    _check_chain(c, chain)
    x = sample_orbit(chain, n, seed)
    return orbit_lyapunov(c, x, seed)


def periodic_approx(c: Cocycle, chain: MarkovChain, eps: float, seed,
                    n_estimate: int = 100_000, n_return: int | None = None,
                    max_retries: int = 6) -> PeriodicApproximation:
    """Close a sampled orbit into a periodic word whose exponent tracks the orbit's.

    The orbit estimate uses the first ``n_estimate`` symbols.  A return time ``k``
    with ``n(1+eps) < k < n(1+2eps)`` and ``x_k = x_0`` is searched for (the
    cocycle reads one symbol, so agreement in one symbol suffices); on failure
    ``n`` doubles, up to ``max_retries`` times.
    """
    if eps <= 0:
        raise InputError("eps must be positive")
    _check_chain(c, chain)
    n = n_return if n_return is not None else max(16, n_estimate // 10)
    delta = 0.5
    retries = 0
    while True:
        length = max(n_estimate, math.ceil(n * (1 + 2 * eps)) + 2)
        x = sample_orbit(chain, length, seed)
        k = find_return(x, n, eps, delta)
        if k is not None or retries >= max_retries:
            break
        n *= 2
        retries += 1
    est = orbit_lyapunov(c, x[:n_estimate], seed).value
    if k is None:
        return PeriodicApproximation(CyclicWord((x[0],)), 0, n, eps, math.nan, est, n_estimate,
                                     math.inf, False, retries)
    cyc = close_to_periodic(x, k, c.system)
    value = word_displacement(c, x[:k]) / k
    gap = abs(est - value)
    return PeriodicApproximation(cyc, k, n, eps, value, est, n_estimate, gap, gap < eps, retries)


def derived_seeds(master: int, count: int) -> list[int]:
    """Independent per-task seeds derived from one master seed."""
    ss = np.random.SeedSequence(master)
    return [int(s.generate_state(1, dtype=np.uint64)[0]) for s in ss.spawn(count)]
