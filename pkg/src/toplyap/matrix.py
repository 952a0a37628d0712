"""Exact rational matrices as a cocycle target.

Matrices are stored as an integer numerator matrix over a common positive
denominator, which keeps products of integer generators in plain ``int``
arithmetic.  Curves are column vectors; their size is the L1 norm, and the
displacement of a matrix on the standard-basis marking is the log of its L1
operator norm (maximum absolute column sum).
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from toplyap.cocycle import CocycleTarget
from toplyap.errors import InputError


def _to_fraction(v) -> Fraction:
    if isinstance(v, bool):
        raise InputError("boolean is not a matrix entry")
    if isinstance(v, (int, Fraction)):
        return Fraction(v)
    if isinstance(v, str):
        try:
            return Fraction(v.strip())
        except ValueError:
            raise InputError(f"cannot parse rational entry {v!r}") from None
    if isinstance(v, float) and v.is_integer():
        return Fraction(int(v))
    raise InputError(f"matrix entries must be integers or rational strings, got {v!r}")


def _normalize(num: Iterable[int], den: int) -> tuple[tuple[int, ...], int]:
    num = tuple(num)
    if den == 1:
        return num, 1
    g = reduce(math.gcd, num, den)
    if g > 1:
        num = tuple(x // g for x in num)
        den //= g
    return num, den


def _log_ratio(num: int, den: int) -> float:
    return math.log(num) - math.log(den)


class RationalMatrix:
    """Square matrix with exact rational entries."""

    __slots__ = ("num", "den", "dim")

    def __init__(self, rows, den: int = 1):
        rows = [list(r) for r in rows]
        d = len(rows)
        if d == 0 or any(len(r) != d for r in rows):
            raise InputError("matrix must be square and non-empty")
        if den == 1 and all(type(v) is int for r in rows for v in r):
            flat, D = tuple(v for r in rows for v in r), 1
        else:
            fr = [_to_fraction(v) / den for r in rows for v in r]
            D = reduce(lambda a, b: a * b // math.gcd(a, b), (f.denominator for f in fr), 1)
            flat = tuple(int(f * D) for f in fr)
        flat, D = _normalize(flat, D)
        self.num = tuple(flat[i * d:(i + 1) * d] for i in range(d))
        self.den = D
        self.dim = d

    @classmethod
    def _raw(cls, num: tuple[tuple[int, ...], ...], den: int) -> "RationalMatrix":
        m = object.__new__(cls)
        d = len(num)
        flat, den = _normalize((v for r in num for v in r), den)
        m.num = tuple(flat[i * d:(i + 1) * d] for i in range(d))
        m.den = den
        m.dim = d
        return m

    @classmethod
    def identity(cls, d: int) -> "RationalMatrix":
        return cls._raw(tuple(tuple(int(i == j) for j in range(d)) for i in range(d)), 1)

    def entry(self, i: int, j: int) -> Fraction:
        return Fraction(self.num[i][j], self.den)

    def tolist(self) -> list[list[Fraction]]:
        return [[self.entry(i, j) for j in range(self.dim)] for i in range(self.dim)]

    def to_json(self):
        if self.den == 1:
            return [list(r) for r in self.num]
        return [[str(self.entry(i, j)) for j in range(self.dim)] for i in range(self.dim)]

    def __matmul__(self, other: "RationalMatrix") -> "RationalMatrix":
        if not isinstance(other, RationalMatrix):
            return NotImplemented
        if other.dim != self.dim:
            raise InputError(f"dimension mismatch: {self.dim} vs {other.dim}")
        a, b, d = self.num, other.num, self.dim
        cols = list(zip(*b))
        prod = tuple(tuple(sum(x * y for x, y in zip(row, col)) for col in cols) for row in a)
        return RationalMatrix._raw(prod, self.den * other.den)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RationalMatrix):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self) -> int:
        return hash((self.num, self.den))

    def __repr__(self) -> str:
        return f"RationalMatrix({self.to_json()})"

    def det(self) -> Fraction:
        return _det_fraction(self.tolist())

    def trace(self) -> Fraction:
        return Fraction(sum(self.num[i][i] for i in range(self.dim)), self.den)

    def is_identity(self) -> bool:
        return self == RationalMatrix.identity(self.dim)

    def apply(self, v: "MatrixCurve") -> "MatrixCurve":
        if len(v.num) != self.dim:
            raise InputError("vector dimension mismatch")
        out = tuple(sum(x * y for x, y in zip(row, v.num)) for row in self.num)
        return MatrixCurve._raw(out, self.den * v.den)

    def max_abs_entry(self) -> Fraction:
        return Fraction(max(abs(v) for r in self.num for v in r), self.den)

    def to_float_scaled(self) -> tuple[np.ndarray, float]:
        """Float copy divided by the largest absolute entry, and the log of that scale."""
        mx = max(abs(v) for r in self.num for v in r)
        if mx == 0:
            return np.zeros((self.dim, self.dim)), 0.0
        arr = np.array([[float(Fraction(v, mx)) for v in r] for r in self.num])
        return arr, _log_ratio(mx, self.den)


def _det_fraction(rows: list[list[Fraction]]) -> Fraction:
    a = [list(r) for r in rows]
    n = len(a)
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if a[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = -det
        det *= a[c][c]
        for r in range(c + 1, n):
            f = a[r][c] / a[c][c]
            if f:
                a[r] = [x - f * y for x, y in zip(a[r], a[c])]
    return det


class MatrixCurve:
    """Non-zero rational column vector."""

    __slots__ = ("num", "den")

    def __init__(self, entries: Sequence, den: int = 1):
        fr = [_to_fraction(v) / den for v in entries]
        if not fr:
            raise InputError("vector must be non-empty")
        D = reduce(lambda a, b: a * b // math.gcd(a, b), (f.denominator for f in fr), 1)
        num, D = _normalize((int(f * D) for f in fr), D)
        if not any(num):
            raise InputError("curve vector must be non-zero")
        self.num = num
        self.den = D

    @classmethod
    def _raw(cls, num: tuple[int, ...], den: int) -> "MatrixCurve":
        v = object.__new__(cls)
        v.num, v.den = _normalize(num, den)
        return v

    @classmethod
    def basis(cls, d: int, i: int) -> "MatrixCurve":
        return cls._raw(tuple(int(j == i) for j in range(d)), 1)

    def __eq__(self, other) -> bool:
        return isinstance(other, MatrixCurve) and self.num == other.num and self.den == other.den

    def __hash__(self) -> int:
        return hash((self.num, self.den))

    def __repr__(self) -> str:
        return f"MatrixCurve({[str(Fraction(v, self.den)) for v in self.num]})"

    def to_json(self):
        if self.den == 1:
            return list(self.num)
        return [str(Fraction(v, self.den)) for v in self.num]


def compose(a: RationalMatrix, b: RationalMatrix) -> RationalMatrix:
    return a @ b


def inverse(a: RationalMatrix) -> RationalMatrix:
    """Exact inverse by Gauss-Jordan elimination over the rationals."""
    d = a.dim
    if d == 2:
        (p, q), (r, s) = a.num
        det = p * s - q * r
        if det == 0:
            raise InputError("matrix is singular")
        # inverse of N/D is D * adj(N) / det(N)
        adj = ((s * a.den, -q * a.den), (-r * a.den, p * a.den))
        if det < 0:
            adj = tuple(tuple(-v for v in row) for row in adj)
        return RationalMatrix._raw(adj, abs(det))
    m = a.tolist()
    aug = [row + [Fraction(int(i == j)) for j in range(d)] for i, row in enumerate(m)]
    for c in range(d):
        piv = next((r for r in range(c, d) if aug[r][c] != 0), None)
        if piv is None:
            raise InputError("matrix is singular")
        aug[c], aug[piv] = aug[piv], aug[c]
        pv = aug[c][c]
        aug[c] = [x / pv for x in aug[c]]
        for r in range(d):
            if r != c and aug[r][c] != 0:
                f = aug[r][c]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[c])]
    return RationalMatrix([row[d:] for row in aug])


def curve_size(v: MatrixCurve) -> Fraction:
    """L1 norm of the vector."""
    s = sum(abs(x) for x in v.num)
    if s == 0:
        raise InputError("zero vector has no size")
    return Fraction(s, v.den)


def operator_norm(a: RationalMatrix) -> Fraction:
    """L1 operator norm: the largest absolute column sum."""
    d = a.dim
    return Fraction(max(sum(abs(a.num[i][j]) for i in range(d)) for j in range(d)), a.den)


def displacement_norm(a: RationalMatrix) -> float:
    n = operator_norm(a)
    if n == 0:
        return -math.inf
    return _log_ratio(n.numerator, n.denominator)


def spectral_radius(a: RationalMatrix, m_max: int = 10_000, tol: float = 1e-13) -> float:
    """Spectral radius; exact quadratic formula for 2x2, eigenvalues otherwise."""
    return math.exp(log_spectral_radius(a))


def log_spectral_radius(a: RationalMatrix) -> float:
    if a.dim == 1:
        v = abs(a.entry(0, 0))
        return -math.inf if v == 0 else _log_ratio(v.numerator, v.denominator)
    if a.dim == 2:
        return _log_rho_2x2(a)
    arr, log_scale = a.to_float_scaled()
    rho = float(np.max(np.abs(np.linalg.eigvals(arr))))
    return -math.inf if rho == 0 else math.log(rho) + log_scale


def _log_rho_2x2(a: RationalMatrix) -> float:
    # roots of x^2 - t x + det; work with the integer numerator N = D * a
    (p, q), (r, s) = a.num
    t = p + s
    det = p * s - q * r
    disc = t * t - 4 * det
    if disc >= 0:
        # real roots; the larger magnitude is (|t| + sqrt(disc)) / 2
        root = math.isqrt(disc)
        if root * root == disc:
            mag_num = abs(t) + root
            if mag_num == 0:
                return -math.inf
            return _log_ratio(mag_num, 2 * a.den)
        # big-int safe: sqrt via logs when values are huge
        if disc.bit_length() < 1000:
            mag = (abs(t) + math.sqrt(disc)) / 2
            return math.log(mag) - math.log(a.den)
        s_ = 0.5 * math.log(disc)
        at = abs(t)
        lt = math.log(at) if at else -math.inf
        hi, lo = max(lt, s_), min(lt, s_)
        return hi + math.log1p(math.exp(lo - hi)) - math.log(2) - math.log(a.den)
    # complex pair: |lambda|^2 = det
    return 0.5 * math.log(det) - math.log(a.den)


class MatrixTarget(CocycleTarget):
    """Named invertible rational matrices acting on column vectors."""

    cheap_compose = True

    def __init__(self, generators: dict, marking: Sequence[MatrixCurve] | None = None):
        if not generators:
            raise InputError("at least one generator is required")
        gens = {}
        dims = set()
        for name, g in generators.items():
            m = g if isinstance(g, RationalMatrix) else RationalMatrix(g)
            if m.det() == 0:
                raise InputError(f"generator {name!r} is singular")
            gens[name] = m
            dims.add(m.dim)
        if len(dims) != 1:
            raise InputError("generators have different dimensions")
        self.dim = dims.pop()
        self.generators = gens
        if marking is None:
            marking = [MatrixCurve.basis(self.dim, i) for i in range(self.dim)]
            self.basis_marking = True
        else:
            marking = [v if isinstance(v, MatrixCurve) else MatrixCurve(v) for v in marking]
            if any(len(v.num) != self.dim for v in marking):
                raise InputError("marking vectors have the wrong dimension")
            self.basis_marking = marking == [MatrixCurve.basis(self.dim, i) for i in range(self.dim)]
        super().__init__(marking)

    def identity(self) -> RationalMatrix:
        return RationalMatrix.identity(self.dim)

    def compose(self, a, b):
        return a @ b

    def inverse(self, a):
        return inverse(a)

    def act(self, g, curve):
        return g.apply(curve)

    def curve_size(self, curve) -> Fraction:
        return curve_size(curve)

    def log_size(self, curve) -> float:
        s = sum(abs(x) for x in curve.num)
        if s == 0:
            raise InputError("zero vector has no size")
        return _log_ratio(s, curve.den)

    def equal(self, a, b) -> bool:
        return a == b

    def log_spectral_radius(self, g) -> float:
        return log_spectral_radius(g)

    def translation_length(self, g, m_max: int = 400, tol: float = 1e-12):
        if m_max < 2:
            raise InputError("m_max must be at least 2")
        # Gelfand: lim log||g^m|| / m is the log spectral radius
        return log_spectral_radius(g), True

    def default_slack(self) -> float:
        return 0.0 if self.basis_marking else 2.0 * self.max_generator_displacement()

    def element_to_json(self, g):
        return g.to_json()

    def curve_to_json(self, c):
        return c.to_json()
