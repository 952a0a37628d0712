"""Locally constant cocycles and the finite-marking displacement.

A cocycle assigns to every symbol an element of a group acting on curves; the
element over a word ``w`` is ``g(w0) g(w1) ... g(w_{n-1})`` with the earliest
symbol as the left factor.  Distances in the group are measured through a
finite marking: the displacement of ``g`` is ``max log(size(g a) / size(a))``
over the marking curves ``a``.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Sequence

from toplyap.errors import InputError
from toplyap.symbolic import TransitionSystem, is_admissible

# A curve's size must grow for at least this many steps before a polynomial
# fit along a stride is trusted.
_POLY_MIN_STEPS = 12
_POLY_MAX_STRIDE = 12
_POLY_SAMPLES = 6
_BLOCK = 32


@dataclass(frozen=True)
class DisplacementValue:
    value: float
    witness: int


@dataclass
class GrowthEstimate:
    """Exponential growth rate of ``size(g^m c)`` in ``m``."""

    value: float
    converged: bool
    steps: int
    kind: str  # "exponential", "polynomial" or "unconverged"
    trace: list[float] = field(default_factory=list)


class CocycleTarget(ABC):
    """A group acting on curves that carry a positive size.

    Subclasses provide the group law and the action; the marking, displacement
    and growth estimates are shared.
    """

    # True when composing elements is cheap enough to keep running products.
    cheap_compose = False

    generators: dict

    def __init__(self, marking: Sequence[Any]):
        marking = list(marking)
        if not marking:
            raise InputError("marking must contain at least one curve")
        self.marking = marking
        self.base_log_sizes = [self.log_size(c) for c in marking]

    @abstractmethod
    def identity(self): ...

    @abstractmethod
    def compose(self, a, b): ...

    @abstractmethod
    def inverse(self, a): ...

    @abstractmethod
    def act(self, g, curve): ...

    @abstractmethod
    def curve_size(self, curve): ...

    def log_size(self, curve) -> float:
        s = self.curve_size(curve)
        return math.log(s.numerator) - math.log(s.denominator) if hasattr(s, "numerator") \
            else math.log(s)

    @abstractmethod
    def equal(self, a, b) -> bool: ...

    def element_to_json(self, g):
        return repr(g)

    def curve_to_json(self, c):
        return repr(c)

    def generator(self, name: str):
        try:
            return self.generators[name]
        except KeyError:
            raise InputError(f"unknown generator {name!r}") from None

    def parse_word(self, text) -> Any:
        """Element named by a generator word such as ``"L R^-1 L"``."""
        tokens = text.split() if isinstance(text, str) else list(text)
        g = self.identity()
        for tok in tokens:
            if tok.endswith("^-1"):
                h = self.inverse(self.generator(tok[:-3]))
            elif tok.endswith("^1"):
                h = self.generator(tok[:-2])
            else:
                h = self.generator(tok)
            g = self.compose(g, h)
        return g

    def displacement(self, g) -> DisplacementValue:
        best, arg = -math.inf, 0
        for i, (c, base) in enumerate(zip(self.marking, self.base_log_sizes)):
            v = self.log_size(self.act(g, c)) - base
            if v > best:
                best, arg = v, i
        return DisplacementValue(best, arg)

    def images_displacement(self, images: Sequence[Any]) -> float:
        """Displacement read off from precomputed marking images."""
        return max(self.log_size(c) - b for c, b in zip(images, self.base_log_sizes))

    def max_generator_displacement(self) -> float:
        vals = [0.0]
        for g in self.generators.values():
            vals.append(self.displacement(g).value)
            vals.append(self.displacement(self.inverse(g)).value)
        return max(vals)

    def default_slack(self) -> float:
        """Additive constant by which the marking displacement may fail subadditivity."""
        return 2.0 * self.max_generator_displacement()

    def curve_growth(self, g, curve, m_max: int = 400, tol: float = 1e-12) -> GrowthEstimate:
        return curve_growth(self, g, curve, m_max=m_max, tol=tol)

    def translation_length(self, g, m_max: int = 400, tol: float = 1e-12) -> tuple[float, bool]:
        """``lim displacement(g^m) / m`` and whether the estimate converged."""
        if m_max < 2:
            raise InputError("m_max must be at least 2")
        ests = [self.curve_growth(g, c, m_max=m_max, tol=tol) for c in self.marking]
        return max(e.value for e in ests), all(e.converged for e in ests)


def _exact_size(target: CocycleTarget, curve):
    return target.curve_size(curve)


def _is_polynomial_along_stride(sizes: list, stride: int) -> bool:
    tail = sizes[-_POLY_SAMPLES * stride:]
    for r in range(stride):
        seq = tail[r::stride]
        d = list(seq)
        for _ in range(3):
            d = [b - a for a, b in zip(d, d[1:])]
        if any(d):
            return False
    return True


def curve_growth(target: CocycleTarget, g, curve, m_max: int = 400,
                 tol: float = 1e-12) -> GrowthEstimate:
    """Estimate the exponential growth rate of a curve under powers of ``g``.

    The estimate at step ``m`` is ``log size(g^{m+1} c) - log size(g^m c)``; it
    is accepted once successive values agree to within ``tol`` three times in a
    row.  Sizes are exact, so a sequence that is exactly polynomial (of degree at
    most two) along some stride up to 12 is recognised as zero exponential growth.
    """
    if m_max < 2:
        raise InputError("m_max must be at least 2")
    c = curve
    sizes = [_exact_size(target, c)]
    logs = [target.log_size(c)]
    trace: list[float] = []
    prev = None
    streak = 0
    for m in range(1, m_max + 1):
        c = target.act(g, c)
        sizes.append(_exact_size(target, c))
        logs.append(target.log_size(c))
        est = logs[m] - logs[m - 1]
        trace.append(est)
        if m >= _POLY_MIN_STEPS:
            for stride in range(1, _POLY_MAX_STRIDE + 1):
                if len(sizes) >= _POLY_SAMPLES * stride and _is_polynomial_along_stride(sizes, stride):
                    return GrowthEstimate(0.0, True, m, "polynomial", trace)
        streak = streak + 1 if prev is not None and abs(est - prev) < tol else 0
        # small integer sizes can look geometric for a step or two by accident
        if streak >= 3 and m >= 8:
            return GrowthEstimate(est, True, m, "exponential", trace)
        prev = est
    return GrowthEstimate(trace[-1], False, m_max, "unconverged", trace)


class Cocycle:
    """Locally constant cocycle: symbol ``s`` maps to a fixed target element."""

    def __init__(self, target: CocycleTarget, assignment, system: TransitionSystem):
        k = system.alphabet_size
        if isinstance(assignment, dict):
            try:
                items = {int(s): w for s, w in assignment.items()}
            except ValueError:
                raise InputError("assignment keys must be symbols 0..k-1") from None
        else:
            items = dict(enumerate(assignment))
        if sorted(items) != list(range(k)):
            raise InputError(f"assignment must cover exactly the symbols 0..{k - 1}")
        self.target = target
        self.system = system
        self.words = {s: items[s] for s in range(k)}
        self.elements = [target.parse_word(items[s]) for s in range(k)]
        for s, g in enumerate(self.elements):
            fwd = target.displacement(g).value
            back = target.displacement(target.inverse(g)).value
            if not (math.isfinite(fwd) and math.isfinite(back)):
                raise InputError(f"element of symbol {s} has infinite displacement")

    @property
    def alphabet_size(self) -> int:
        return self.system.alphabet_size

    def element(self, s: int):
        return self.elements[s]

    def describe(self) -> dict:
        return {str(s): w if isinstance(w, str) else " ".join(w) for s, w in self.words.items()}


def _check(c: Cocycle, w: Sequence[int]) -> None:
    if not is_admissible(w, c.system):
        raise InputError(f"word {tuple(w)} is not admissible")


def evaluate(c: Cocycle, w: Sequence[int]):
    """``g(w0) g(w1) ... g(w_{n-1})``; the identity for the empty word."""
    _check(c, w)
    t = c.target
    g = t.identity()
    for s in w:
        g = t.compose(g, c.elements[s])
    return g


def act_word(c: Cocycle, w: Sequence[int], curve):
    """Image of ``curve`` under the element over ``w`` without forming it."""
    t = c.target
    for s in reversed(w):
        curve = t.act(c.elements[s], curve)
    return curve


def displacement(g, target: CocycleTarget) -> DisplacementValue:
    return target.displacement(g)


def word_displacement(c: Cocycle, w: Sequence[int]) -> float:
    """Displacement of the element over ``w``, computed through curve actions."""
    _check(c, w)
    if not w:
        return 0.0
    images = [act_word(c, w, a) for a in c.target.marking]
    return c.target.images_displacement(images)


def growth_sequence(c: Cocycle, w: Sequence[int], curve) -> list[float]:
    """``log size(Z_n c) - log size(c)`` for every prefix length ``n = 0..len(w)``."""
    _check(c, w)
    t = c.target
    base = t.log_size(curve)
    out = [0.0]
    if t.cheap_compose:
        z = t.identity()
        for s in w:
            z = t.compose(z, c.elements[s])
            out.append(t.log_size(t.act(z, curve)) - base)
    else:
        for n in range(1, len(w) + 1):
            out.append(t.log_size(act_word(c, w[:n], curve)) - base)
    return out


def displacement_trace(c: Cocycle, w: Sequence[int], checkpoints: Sequence[int]) -> list[float]:
    """Displacement of ``Z_n`` for each ``n`` in the increasing ``checkpoints``."""
    _check(c, w)
    t = c.target
    cps = list(checkpoints)
    if any(b <= a for a, b in zip(cps, cps[1:])) or (cps and (cps[0] < 0 or cps[-1] > len(w))):
        raise InputError("checkpoints must be increasing and within the word")
    out = []
    if t.cheap_compose:
        z = t.identity()
        n = 0
        for cp in cps:
            while n < cp:
                # short blocks keep most products small before touching the big running one
                end = min(cp, n + _BLOCK)
                b = c.elements[w[n]]
                for i in range(n + 1, end):
                    b = t.compose(b, c.elements[w[i]])
                z = t.compose(z, b)
                n = end
            out.append(t.displacement(z).value if cp else 0.0)
    else:
        for cp in cps:
            out.append(word_displacement(c, w[:cp]) if cp else 0.0)
    return out


def translation_length(g, target: CocycleTarget, m_max: int = 400,
                       tol: float = 1e-12) -> tuple[float, bool]:
    return target.translation_length(g, m_max=m_max, tol=tol)
