"""Property and cross-oracle checks for a configured cocycle target.

Each check returns a :class:`CheckResult`; ``run_suite`` collects the checks
that apply to the target at hand.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from toplyap.cocycle import Cocycle, CocycleTarget, evaluate
from toplyap.lamination import LaminationTarget, flip
from toplyap.matrix import MatrixTarget, log_spectral_radius, operator_norm
from toplyap.symbolic import (
    ClosingConstants, MarkovChain, TransitionSystem, admissible_words, close_to_periodic,
    find_return, periodic_extension, sample_orbit, shift_distance,
)


@dataclass
class CheckResult:
    name: str
    passed: bool
    trials: int
    detail: str = ""


def _gen_tokens(target: CocycleTarget) -> list[str]:
    names = sorted(target.generators)
    return names + [f"{n}^-1" for n in names]


def _random_word(rng: random.Random, tokens: list[str], max_len: int) -> str:
    return " ".join(rng.choice(tokens) for _ in range(rng.randint(1, max_len)))


def check_group_laws(target: CocycleTarget, rng: random.Random, trials: int = 100) -> CheckResult:
    tokens = _gen_tokens(target)
    fails = 0
    for _ in range(trials):
        a = target.parse_word(_random_word(rng, tokens, 6))
        b = target.parse_word(_random_word(rng, tokens, 6))
        c = target.parse_word(_random_word(rng, tokens, 6))
        e = target.identity()
        ok = target.equal(target.compose(target.compose(a, b), c),
                          target.compose(a, target.compose(b, c)))
        ok &= target.equal(target.compose(a, e), a) and target.equal(target.compose(e, a), a)
        ok &= target.equal(target.compose(a, target.inverse(a)), e)
        for curve in target.marking:
            ok &= target.act(target.compose(a, b), curve) == target.act(a, target.act(b, curve))
        fails += not ok
    return CheckResult("group_laws", fails == 0, trials, f"{fails} failures")


def check_cocycle_property(c: Cocycle, max_len: int = 12, samples: int = 300,
                           rng: random.Random | None = None) -> CheckResult:
    """evaluate(uv) == evaluate(u) evaluate(v) on admissible words of length <= max_len."""
    rng = rng or random.Random(0)
    t = c.target
    fails = trials = 0
    for n in range(0, max_len + 1):
        words = list(admissible_words(c.system, n))
        if len(words) > samples:
            words = rng.sample(words, samples)
        for w in words:
            for i in range(len(w) + 1):
                trials += 1
                lhs = evaluate(c, w)
                rhs = t.compose(evaluate(c, w[:i]), evaluate(c, w[i:]))
                fails += not t.equal(lhs, rhs)
    return CheckResult("cocycle_property", fails == 0, trials, f"{fails} failures")


def check_quasi_subadditivity(c: Cocycle, max_len: int = 6, slack: float | None = None
                              ) -> CheckResult:
    t = c.target
    slack = t.default_slack() if slack is None else slack
    elems = [evaluate(c, w) for n in range(1, max_len + 1) for w in admissible_words(c.system, n)]
    disp = [t.displacement(g).value for g in elems]
    worst = -math.inf
    step = max(1, len(elems) // 150)
    sub = list(range(0, len(elems), step))
    for i in sub:
        for j in sub:
            v = t.displacement(t.compose(elems[i], elems[j])).value - disp[i] - disp[j]
            worst = max(worst, v)
    return CheckResult("quasi_subadditivity", worst <= slack + 1e-12, len(sub) ** 2,
                       f"worst excess {worst:.3g}, slack {slack:.3g}")


def check_submultiplicativity(c: Cocycle, max_len: int = 6) -> CheckResult:
    """Exact ||ab|| <= ||a|| ||b|| for the L1 operator norm over all word pairs."""
    elems = [evaluate(c, w) for n in range(1, max_len + 1) for w in admissible_words(c.system, n)]
    norms = [operator_norm(g) for g in elems]
    fails = trials = 0
    for i, a in enumerate(elems):
        for j, b in enumerate(elems):
            trials += 1
            fails += operator_norm(a @ b) > norms[i] * norms[j]
    return CheckResult("submultiplicativity", fails == 0, trials, f"{fails} failures")


def level_maxima_exact(c: Cocycle, n_max: int) -> list[Fraction]:
    """Largest L1 operator norm over admissible words of each length 0..n_max."""
    out = [Fraction(1)]
    for n in range(1, n_max + 1):
        out.append(max(operator_norm(evaluate(c, w)) for w in admissible_words(c.system, n)))
    return out


def check_fekete(c: Cocycle, n_max: int = 12) -> CheckResult:
    """a_{n+m} <= a_n + a_m for n + m <= n_max, exhaustively and exactly."""
    A = level_maxima_exact(c, n_max)
    fails = trials = 0
    for n in range(1, n_max):
        for m in range(1, n_max - n + 1):
            trials += 1
            fails += A[n + m] > A[n] * A[m]
    return CheckResult("fekete_subadditivity", fails == 0, trials, f"{fails} failures")


def check_conjugacy(target: CocycleTarget, rng: random.Random, trials: int = 50,
                    tol: float = 1e-9) -> CheckResult:
    tokens = _gen_tokens(target)
    worst = 0.0
    for _ in range(trials):
        g = target.parse_word(_random_word(rng, tokens, 6))
        h = target.parse_word(_random_word(rng, tokens, 4))
        conj = target.compose(target.compose(h, g), target.inverse(h))
        a, _ = target.translation_length(g)
        b, _ = target.translation_length(conj)
        worst = max(worst, abs(a - b))
    return CheckResult("conjugacy_robustness", worst <= tol, trials, f"worst {worst:.3g}")


def check_translation_vs_displacement(target: CocycleTarget, rng: random.Random,
                                      trials: int = 100, tol: float = 1e-9) -> CheckResult:
    tokens = _gen_tokens(target)
    allowance = tol if isinstance(target, MatrixTarget) and target.basis_marking \
        else tol + target.default_slack()
    worst = -math.inf
    for _ in range(trials):
        g = target.parse_word(_random_word(rng, tokens, 8))
        tl, _ = target.translation_length(g)
        worst = max(worst, tl - target.displacement(g).value)
    return CheckResult("translation_below_displacement", worst <= allowance, trials,
                       f"worst excess {worst:.3g}, allowance {allowance:.3g}")


def check_gelfand(target: MatrixTarget, rng: random.Random, trials: int = 100,
                  m: int = 512, gap: float = 0.05) -> CheckResult:
    """Gelfand: ``log ||g^m|| / m`` never drops below ``log rho(g)`` and closes in on it."""
    tokens = _gen_tokens(target)
    fails = 0
    worst = 0.0
    for _ in range(trials):
        g = target.parse_word(_random_word(rng, tokens, 8))
        lr = log_spectral_radius(g)
        p, k = g, 1
        while k < m:
            p, k = p @ p, 2 * k
            nrm = operator_norm(p)
            v = (math.log(nrm.numerator) - math.log(nrm.denominator)) / k
            if v < lr - 1e-9:
                fails += 1
                break
        worst = max(worst, v - lr)
        fails += v - lr > gap
    return CheckResult("gelfand_spectral_radius", fails == 0, trials,
                       f"{fails} failures, worst gap {worst:.3g} at m={m}")


def random_lamination(target: LaminationTarget, rng: random.Random, max_word: int = 8):
    """Valid coordinates: a sum of images of marking curves under random words."""
    tokens = _gen_tokens(target)
    x = [0] * target.triangulation.edges
    for _ in range(rng.randint(1, 3)):
        g = target.parse_word(_random_word(rng, tokens, max_word))
        y = target.act(g, rng.choice(target.marking))
        x = [a + b for a, b in zip(x, y)]
    return tuple(x)


def check_flip_involution(target: LaminationTarget, rng: random.Random,
                          trials: int = 1000) -> CheckResult:
    tri = target.triangulation
    fails = 0
    for _ in range(trials):
        x = random_lamination(target, rng)
        e = rng.randrange(tri.edges)
        y = flip(tri, x, e)
        ok = tri.flip(e).is_valid(y) and flip(tri.flip(e), y, e) == x
        fails += not ok
    return CheckResult("flip_involution", fails == 0, trials, f"{fails} failures")


def check_triangle_invariants(target: LaminationTarget, rng: random.Random,
                              trials: int = 200) -> CheckResult:
    from toplyap.lamination import apply_class

    tokens = _gen_tokens(target)
    fails = 0
    for _ in range(trials):
        x = random_lamination(target, rng)
        g = target.parse_word(_random_word(rng, tokens, 6))
        try:
            y = apply_class(target.triangulation, g, x, debug=True)
            fails += y != target.act(g, x)
        except Exception:
            fails += 1
    return CheckResult("triangle_invariants", fails == 0, trials, f"{fails} failures")


def check_inverse_roundtrip(target: LaminationTarget, rng: random.Random,
                            trials: int = 100) -> CheckResult:
    tokens = _gen_tokens(target)
    fails = 0
    for _ in range(trials):
        x = random_lamination(target, rng)
        g = target.parse_word(_random_word(rng, tokens, 8))
        fails += target.act(target.inverse(g), target.act(g, x)) != x
    return CheckResult("inverse_roundtrip", fails == 0, trials, f"{fails} failures")


def homology_exponent(g) -> float:
    """Expected growth exponent from the declared homology image."""
    return max(0.0, log_spectral_radius(g.homology))


def check_homology_cross_oracle(target: LaminationTarget, rng: random.Random,
                                trials: int = 50, max_len: int = 10, tol: float = 1e-6,
                                m_max: int = 400) -> CheckResult:
    tokens = _gen_tokens(target)
    worst = 0.0
    unconverged = 0
    for _ in range(trials):
        g = target.parse_word(_random_word(rng, tokens, max_len))
        tl, ok = target.translation_length(g, m_max=m_max)
        unconverged += not ok
        worst = max(worst, abs(tl - homology_exponent(g)))
    return CheckResult("homology_cross_oracle", worst <= tol and unconverged == 0, trials,
                       f"worst {worst:.3g}, unconverged {unconverged}")


def check_exhaustive_cross_oracle(target: LaminationTarget, max_len: int = 6,
                                  tol: float = 1e-6) -> CheckResult:
    tokens = _gen_tokens(target)
    worst = 0.0
    trials = 0
    for n in range(1, max_len + 1):
        for toks in itertools.product(tokens, repeat=n):
            g = target.parse_word(" ".join(toks))
            tl, _ = target.translation_length(g)
            worst = max(worst, abs(tl - homology_exponent(g)))
            trials += 1
    return CheckResult("homology_cross_oracle_exhaustive", worst <= tol, trials, f"worst {worst:.3g}")


def check_size_convention(target: LaminationTarget, rng: random.Random, trials: int = 50,
                          tol: float = 1e-9) -> CheckResult:
    other = target.with_size("max" if target.size_kind == "l1" else "l1")
    tokens = _gen_tokens(target)
    worst = 0.0
    for _ in range(trials):
        g = target.parse_word(_random_word(rng, tokens, 8))
        worst = max(worst, abs(target.translation_length(g)[0] - other.translation_length(g)[0]))
    return CheckResult("size_convention", worst <= tol, trials, f"worst {worst:.3g}")


def run_suite(c: Cocycle, seed: int = 0, quick: bool = False) -> list[CheckResult]:
    rng = random.Random(seed)
    t = c.target
    scale = 0.2 if quick else 1.0
    n = lambda k: max(5, int(k * scale))  # noqa: E731
    checks: list[Callable[[], CheckResult]] = [
        lambda: check_group_laws(t, rng, n(100)),
        lambda: check_cocycle_property(c, max_len=8 if quick else 12, rng=rng),
        lambda: check_conjugacy(t, rng, n(50)),
        lambda: check_translation_vs_displacement(t, rng, n(100)),
    ]
    if isinstance(t, MatrixTarget):
        if t.basis_marking:
            checks += [lambda: check_submultiplicativity(c, 4 if quick else 6),
                       lambda: check_fekete(c, 8 if quick else 12)]
        else:
            checks.append(lambda: check_quasi_subadditivity(c, 4 if quick else 6))
        checks.append(lambda: check_gelfand(t, rng, n(100)))
    if isinstance(t, LaminationTarget):
        checks += [lambda: check_quasi_subadditivity(c, 4 if quick else 6),
                   lambda: check_flip_involution(t, rng, n(1000)),
                   lambda: check_triangle_invariants(t, rng, n(200)),
                   lambda: check_inverse_roundtrip(t, rng, n(100)),
                   lambda: check_size_convention(t, rng, n(50))]
        if all(g.homology is not None for g in t.generators.values()):
            checks.append(lambda: check_homology_cross_oracle(t, rng, 50))
            checks.append(lambda: check_exhaustive_cross_oracle(t, 3 if quick else 6))
    return [chk() for chk in checks]


def check_closing(system: TransitionSystem, chain: MarkovChain, trials: int = 1000,
                  seed: int = 0, eps: float = 0.5,
                  constants: ClosingConstants | None = None) -> CheckResult:
    """Closing inequality ``d(T^i x, T^i p) <= C delta e^{-gamma min(i, k-i)}``.

    Each trial samples an orbit, finds a return with a random window ``m``
    (``delta = 2^-m``), closes it to ``p`` and compares the two orbits over
    ``2m + k`` symbols at every ``0 <= i <= k``.
    """
    const = constants or ClosingConstants()
    rng = random.Random(seed)
    violations = closings = 0
    attempts = 0
    while closings < trials:
        attempts += 1
        if attempts > 50 * trials:
            return CheckResult("closing_inequality", False, closings,
                               f"only {closings} closings in {attempts} attempts")
        m = rng.randint(1, 4)
        delta = 2.0 ** -m
        n = rng.randint(4, 40)
        length = 2 * (math.ceil(n * (1 + 2 * eps)) + m) + 2
        x = sample_orbit(chain, length, rng.getrandbits(63))
        k = find_return(x, n, eps, delta)
        if k is None:
            continue
        cyc = close_to_periodic(x, k, system)
        p = periodic_extension(cyc.phase_word, length)
        closings += 1
        window = 2 * m + k
        for i in range(k + 1):
            d = shift_distance(x[i:], p[i:], window)
            if d > const.bound(delta, i, k) * (1 + 1e-12):
                violations += 1
                break
    return CheckResult("closing_inequality", violations == 0, closings,
                       f"{violations} violations")
