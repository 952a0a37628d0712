"""Subshifts of finite type: admissibility, periodic orbits, Markov sampling and
the return/closing machinery used to build periodic approximations.

Words are plain tuples of integer symbols.  Sequences are one-sided; the shift
metric between two words is ``2**-j`` where ``j`` is the length of their common
prefix.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from toplyap.errors import InputError, InvariantViolation

Word = tuple[int, ...]


@dataclass(frozen=True)
class TransitionSystem:
    """Alphabet ``{0..k-1}`` with a 0/1 matrix of allowed transitions."""

    transitions: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(int(v) for v in row) for row in self.transitions)
        k = len(rows)
        if k == 0:
            raise InputError("transition matrix is empty")
        for row in rows:
            if len(row) != k:
                raise InputError("transition matrix must be square")
            if any(v not in (0, 1) for v in row):
                raise InputError("transition entries must be 0 or 1")
        for i in range(k):
            if not any(rows[i]):
                raise InputError(f"symbol {i} has no successor")
            if not any(rows[j][i] for j in range(k)):
                raise InputError(f"symbol {i} has no predecessor")
        object.__setattr__(self, "transitions", rows)

    @classmethod
    def full_shift(cls, k: int) -> "TransitionSystem":
        if k < 1:
            raise InputError("alphabet size must be positive")
        return cls(tuple((1,) * k for _ in range(k)))

    @classmethod
    def golden_mean(cls) -> "TransitionSystem":
        """Binary shift with the word ``11`` forbidden."""
        return cls(((1, 1), (1, 0)))

    @property
    def alphabet_size(self) -> int:
        return len(self.transitions)

    @property
    def is_full_shift(self) -> bool:
        return all(all(row) for row in self.transitions)

    def allowed(self, a: int, b: int) -> bool:
        return self.transitions[a][b] == 1

    def successors(self, a: int) -> tuple[int, ...]:
        return tuple(j for j, v in enumerate(self.transitions[a]) if v)

    def predecessors(self, b: int) -> tuple[int, ...]:
        return tuple(i for i in range(self.alphabet_size) if self.transitions[i][b])

    def check_word(self, w: Sequence[int]) -> None:
        k = self.alphabet_size
        for s in w:
            if not (0 <= s < k):
                raise InputError(f"symbol {s} outside alphabet of size {k}")

    def matrix_power(self, p: int) -> list[list[int]]:
        return _int_matpow([list(r) for r in self.transitions], p)


def _int_matmul(a: list[list[int]], b: list[list[int]]) -> list[list[int]]:
    n = len(a)
    return [[sum(a[i][t] * b[t][j] for t in range(n)) for j in range(n)] for i in range(n)]


def _int_matpow(a: list[list[int]], p: int) -> list[list[int]]:
    n = len(a)
    result = [[int(i == j) for j in range(n)] for i in range(n)]
    base = a
    while p:
        if p & 1:
            result = _int_matmul(result, base)
        base = _int_matmul(base, base)
        p >>= 1
    return result


def is_admissible(w: Sequence[int], sys: TransitionSystem) -> bool:
    sys.check_word(w)
    return all(sys.allowed(w[i], w[i + 1]) for i in range(len(w) - 1))


def count_words(sys: TransitionSystem, n: int) -> int:
    """Number of admissible words of length ``n``."""
    if n < 0:
        raise InputError("word length must be non-negative")
    if n == 0:
        return 1
    return sum(sum(row) for row in sys.matrix_power(n - 1))


def count_periodic(sys: TransitionSystem, p: int) -> int:
    """Number of points of period ``p`` (not necessarily least), i.e. trace(A^p)."""
    if p < 1:
        raise InputError("period must be at least 1")
    m = sys.matrix_power(p)
    return sum(m[i][i] for i in range(len(m)))


def least_rotation(w: Sequence[int]) -> int:
    """Index of the lexicographically least rotation (Booth's algorithm)."""
    s = list(w) * 2
    n = len(w)
    f = [-1] * len(s)
    k = 0
    for j in range(1, len(s)):
        sj = s[j]
        i = f[j - k - 1]
        while i != -1 and sj != s[k + i + 1]:
            if sj < s[k + i + 1]:
                k = j - i - 1
            i = f[i]
        if sj != s[k + i + 1]:
            if sj < s[k]:
                k = j
            f[j - k] = -1
        else:
            f[j - k] = i + 1
    return k % n if n else 0


def primitive_period(w: Sequence[int]) -> int:
    """Smallest ``t`` dividing ``len(w)`` with ``w`` a power of its length-``t`` prefix."""
    n = len(w)
    for t in range(1, n + 1):
        if n % t == 0 and all(w[i] == w[i % t] for i in range(n)):
            return t
    return n


@dataclass(frozen=True)
class CyclicWord:
    """Rotation class of a periodic word.

    ``symbols`` is the lexicographically least rotation.  ``offset`` remembers
    the phase of the word the class was built from, so that ``phase_word``
    reproduces it; it does not take part in equality.
    """

    symbols: Word
    primitive: bool = field(init=False)
    offset: int = field(default=0, compare=False)

    def __post_init__(self):
        if not self.symbols:
            raise InputError("cyclic word must be non-empty")
        object.__setattr__(self, "primitive", primitive_period(self.symbols) == len(self.symbols))

    @classmethod
    def from_word(cls, w: Sequence[int]) -> "CyclicWord":
        w = tuple(w)
        if not w:
            raise InputError("cyclic word must be non-empty")
        r = least_rotation(w)
        rep = w[r:] + w[:r]
        return cls(rep, offset=(len(w) - r) % len(w))

    @property
    def period(self) -> int:
        return len(self.symbols)

    @property
    def phase_word(self) -> Word:
        o = self.offset
        return self.symbols[o:] + self.symbols[:o]

    def root(self) -> "CyclicWord":
        """The primitive cyclic word this one is a power of."""
        t = primitive_period(self.symbols)
        return CyclicWord(self.symbols[:t])

    def rotations(self) -> int:
        return primitive_period(self.symbols)

    def __str__(self) -> str:
        return "".join(str(s) if s < 10 else f"[{s}]" for s in self.symbols)


def is_cyclically_admissible(w: Sequence[int], sys: TransitionSystem) -> bool:
    return len(w) > 0 and is_admissible(w, sys) and sys.allowed(w[-1], w[0])


def admissible_words(sys: TransitionSystem, n: int, first: int | None = None):
    """Yield all admissible words of length ``n`` in lexicographic order."""
    if n < 0:
        raise InputError("word length must be non-negative")
    if n == 0:
        yield ()
        return
    starts = range(sys.alphabet_size) if first is None else (first,)
    succ = [sys.successors(a) for a in range(sys.alphabet_size)]
    stack: list[int] = []

    def rec():
        if len(stack) == n:
            yield tuple(stack)
            return
        for b in succ[stack[-1]]:
            stack.append(b)
            yield from rec()
            stack.pop()

    for a in starts:
        stack.append(a)
        yield from rec()
        stack.pop()


def periodic_points(sys: TransitionSystem, p: int) -> list[CyclicWord]:
    """All cyclically admissible rotation classes of length exactly ``p``,
    sorted lexicographically."""
    if p < 1:
        raise InputError("period must be at least 1")
    out = []
    for a in range(sys.alphabet_size):
        for w in admissible_words(sys, p, first=a):
            if not sys.allowed(w[-1], w[0]):
                continue
            # canonical representatives start with their least symbol
            if least_rotation(w) == 0:
                out.append(CyclicWord(w))
    return out


def primitive_cycles(sys: TransitionSystem, k_max: int) -> list[CyclicWord]:
    """Primitive cyclic words of length 1..k_max, ordered by length then lexicographically."""
    out = []
    for p in range(1, k_max + 1):
        out.extend(c for c in periodic_points(sys, p) if c.primitive)
    return out


def shift_distance(u: Sequence[int], v: Sequence[int], window: int) -> float:
    """``2**-j`` with ``j`` the common-prefix length of ``u`` and ``v``, capped at ``window``."""
    if window < 0 or len(u) < window or len(v) < window:
        raise InputError("words shorter than the comparison window")
    j = 0
    while j < window and u[j] == v[j]:
        j += 1
    return 2.0 ** -j


def window_for(delta: float) -> int:
    """Number of leading symbols that must agree for distance ``< delta``."""
    if not (0 < delta <= 1):
        raise InputError("delta must lie in (0, 1]")
    return max(1, math.ceil(math.log2(1.0 / delta) - 1e-12))


def find_return(x: Sequence[int], n: int, eps: float, delta: float) -> int | None:
    """Smallest ``k`` with ``n(1+eps) < k < n(1+2eps)`` whose shifted word agrees
    with ``x`` on the first ``window_for(delta)`` symbols.

    Returns ``None`` if the interval holds no such ``k``.
    """
    if n < 1 or eps <= 0:
        raise InputError("need n >= 1 and eps > 0")
    m = window_for(delta)
    lo = n * (1 + eps)
    hi = n * (1 + 2 * eps)
    k = math.floor(lo) + 1
    k_last = math.ceil(hi) - 1
    if len(x) < k_last + m:
        raise InputError(f"orbit of length {len(x)} too short; need {k_last + m}")
    head = tuple(x[:m])
    for k in range(k, k_last + 1):
        if tuple(x[k:k + m]) == head:
            return k
    return None


def close_to_periodic(x: Sequence[int], k: int, sys: TransitionSystem) -> CyclicWord:
    """Periodic orbit shadowing ``x`` after a return at time ``k``."""
    if k < 1 or len(x) < k + 1:
        raise InputError("need len(x) >= k + 1")
    w = tuple(x[:k])
    if not is_cyclically_admissible(w, sys):
        raise InvariantViolation(
            f"closing at k={k} yields an inadmissible cycle; the return was not verified")
    return CyclicWord.from_word(w)


def periodic_extension(w: Sequence[int], length: int) -> Word:
    k = len(w)
    return tuple(w[i % k] for i in range(length))


@dataclass(frozen=True)
class ClosingConstants:
    """Constants of the closing inequality ``d(T^i x, T^i p) <= C d e^{-gamma min(i, k-i)}``.

    The defaults hold for the one-sided shift metric used here.
    """

    C: float = 1.0
    gamma: float = math.log(2.0)
    delta0: float = 1.0

    def __post_init__(self):
        if min(self.C, self.gamma, self.delta0) <= 0:
            raise InputError("closing constants must be positive")

    def bound(self, delta: float, i: int, k: int) -> float:
        return self.C * delta * math.exp(-self.gamma * min(i, k - i))


class MarkovChain:
    """Stationary Markov measure on a subshift, given by a stochastic matrix."""

    def __init__(self, P, pi=None, system: TransitionSystem | None = None):
        P = np.asarray(P, dtype=float)
        k = P.shape[0]
        if P.ndim != 2 or P.shape != (k, k):
            raise InputError("stochastic matrix must be square")
        if np.any(P < 0) or np.max(np.abs(P.sum(axis=1) - 1.0)) > 1e-12:
            raise InputError("rows of P must be non-negative and sum to 1")
        if system is not None:
            if system.alphabet_size != k:
                raise InputError("chain and system alphabet sizes differ")
            allowed = np.asarray(system.transitions)
            if np.any((P > 0) & (allowed == 0)):
                raise InputError("chain charges a forbidden transition")
        if pi is None:
            pi = _stationary(P)
        pi = np.asarray(pi, dtype=float)
        if pi.shape != (k,) or np.any(pi < -1e-15):
            raise InputError("stationary vector has the wrong shape or sign")
        pi = np.clip(pi, 0.0, None)
        pi = pi / pi.sum()
        if np.max(np.abs(pi @ P - pi)) >= 1e-12:
            raise InputError("supplied distribution is not stationary")
        self.P = P
        self.pi = pi
        self.P.setflags(write=False)
        self.pi.setflags(write=False)

    @classmethod
    def bernoulli(cls, probs) -> "MarkovChain":
        probs = np.asarray(probs, dtype=float)
        return cls(np.tile(probs, (len(probs), 1)), pi=probs)

    @property
    def alphabet_size(self) -> int:
        return self.P.shape[0]

    def support(self) -> TransitionSystem:
        return TransitionSystem(tuple(tuple(int(v > 0) for v in row) for row in self.P))

    def word_probability(self, w: Sequence[int]) -> float:
        if not w:
            return 1.0
        p = self.pi[w[0]]
        for a, b in zip(w, w[1:]):
            p *= self.P[a, b]
        return float(p)

    def __repr__(self) -> str:
        return f"MarkovChain(P={self.P.tolist()})"


def _stationary(P: np.ndarray) -> np.ndarray:
    k = P.shape[0]
    a = np.vstack([P.T - np.eye(k), np.ones((1, k))])
    b = np.zeros(k + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(a, b, rcond=None)
    # one step of refinement keeps the residual near machine precision
    r = b - a @ pi
    pi = pi + np.linalg.lstsq(a, r, rcond=None)[0]
    return pi


def sample_orbit(chain: MarkovChain, n: int, seed) -> Word:
    """Sample a length-``n`` word from the stationary chain (deterministic in ``seed``)."""
    if n < 1:
        raise InputError("orbit length must be at least 1")
    rng = np.random.default_rng(seed)
    u = rng.random(n)
    cum = np.cumsum(chain.P, axis=1)
    cum[:, -1] = 1.0
    first = int(np.searchsorted(np.cumsum(chain.pi), u[0], side="right"))
    first = min(first, chain.alphabet_size - 1)
    out = [first]
    rows = [c.tolist() for c in cum]
    s = first
    for i in range(1, n):
        row = rows[s]
        s = bisect.bisect_right(row, u[i])
        if s >= len(row):
            s = len(row) - 1
        out.append(s)
    return tuple(out)


def entropy(chain: MarkovChain) -> float:
    """Entropy rate ``-sum_i pi_i sum_j P_ij log P_ij`` in nats."""
    P = chain.P
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(P > 0, P * np.log(np.where(P > 0, P, 1.0)), 0.0)
    return float(-(chain.pi @ terms.sum(axis=1)))
