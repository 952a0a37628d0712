"""Mapping classes acting on integral lamination coordinates.

A curve (or multicurve) on a triangulated punctured surface is recorded by its
intersection numbers with the edges.  Flipping edge ``e`` inside its
quadrilateral ``(a, b, c, d)`` changes one coordinate by the tropical Ptolemy
rule ``x_e' = max(x_a + x_c, x_b + x_d) - x_e``.  A mapping class is a word of
flips followed by a relabelling that carries the flipped triangulation back to
the original one.

Edge ids are 0-based internally and 1-based in surface files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Sequence

from toplyap.cocycle import CocycleTarget
from toplyap.errors import InputError, InvariantViolation
from toplyap.matrix import RationalMatrix, inverse as matrix_inverse

LamCoords = tuple[int, ...]
Move = tuple  # ("flip", e) or ("relabel", perm)


def _canon_triangle(t: Sequence[int]) -> tuple[int, int, int]:
    rots = [tuple(t[i:]) + tuple(t[:i]) for i in range(3)]
    return min(rots)


@dataclass(frozen=True)
class Triangulation:
    """Ideal triangulation given by triangles as cyclically ordered edge triples.

    An edge may not occur twice in the same triangle.
    """

    edges: int
    triangles: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        tris = tuple(tuple(int(e) for e in t) for t in self.triangles)
        if self.edges < 1:
            raise InputError("triangulation needs at least one edge")
        count = [0] * self.edges
        for t in tris:
            if len(t) != 3:
                raise InputError("triangles must have three sides")
            if len(set(t)) != 3:
                raise InputError(f"triangle {t} uses an edge twice; folded triangles are unsupported")
            for e in t:
                if not (0 <= e < self.edges):
                    raise InputError(f"edge id {e} out of range")
                count[e] += 1
        if any(c != 2 for c in count):
            raise InputError("every edge must belong to exactly two triangle sides")
        object.__setattr__(self, "triangles", tris)

    def key(self) -> tuple:
        return tuple(sorted(_canon_triangle(t) for t in self.triangles))

    def _slots(self, e: int) -> list[tuple[int, int]]:
        return [(ti, i) for ti, t in enumerate(self.triangles) for i in range(3) if t[i] == e]

    def quad(self, e: int) -> tuple[int, int, int, int]:
        """Sides ``(a, b, c, d)`` around ``e`` in cyclic order; ``a, c`` are opposite."""
        (t1, i1), (t2, i2) = self._slots(e)
        T1, T2 = self.triangles[t1], self.triangles[t2]
        a, b = T1[(i1 + 1) % 3], T1[(i1 + 2) % 3]
        c, d = T2[(i2 + 1) % 3], T2[(i2 + 2) % 3]
        return a, b, c, d

    def flip(self, e: int) -> "Triangulation":
        (t1, i1), (t2, i2) = self._slots(e)
        a, b, c, d = self.quad(e)
        tris = list(self.triangles)
        tris[t1] = (e, b, c)
        tris[t2] = (e, d, a)
        return Triangulation(self.edges, tuple(tris))

    def relabel(self, perm: Sequence[int]) -> "Triangulation":
        """Rename edge ``perm[i]`` to ``i``."""
        new_name = [0] * self.edges
        for i, old in enumerate(perm):
            new_name[old] = i
        return Triangulation(self.edges, tuple(tuple(new_name[e] for e in t) for t in self.triangles))

    def check(self, x: Sequence[int]) -> None:
        """Raise if ``x`` violates a triangle inequality or parity condition."""
        if len(x) != self.edges:
            raise InputError(f"expected {self.edges} coordinates, got {len(x)}")
        if any(v < 0 for v in x):
            raise InputError("lamination coordinates must be non-negative")
        for t in self.triangles:
            a, b, c = (x[e] for e in t)
            if (a + b + c) % 2 or a > b + c or b > a + c or c > a + b:
                raise InputError(f"coordinates {tuple(x)} violate the triangle condition on {t}")

    def is_valid(self, x: Sequence[int]) -> bool:
        try:
            self.check(x)
        except InputError:
            return False
        return True


def _check_perm(perm: Sequence[int], n: int) -> tuple[int, ...]:
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(n)):
        raise InputError(f"relabelling {perm} is not a permutation of {n} edges")
    return perm


def _reduce_moves(moves: Sequence[Move]) -> tuple[Move, ...]:
    out: list[Move] = []
    for mv in moves:
        if mv[0] == "relabel":
            perm = mv[1]
            if out and out[-1][0] == "relabel":
                prev = out.pop()[1]
                perm = tuple(prev[p] for p in perm)
            if perm != tuple(range(len(perm))):
                out.append(("relabel", perm))
        elif out and out[-1] == mv:
            out.pop()
        else:
            out.append(mv)
    return tuple(out)


@dataclass(frozen=True)
class FlipWordClass:
    """Mapping class given as flips and relabellings applied left to right."""

    moves: tuple[Move, ...] = ()
    homology: RationalMatrix | None = None

    def __len__(self) -> int:
        return len(self.moves)


def make_class(moves, edges: int, homology=None) -> FlipWordClass:
    """Build a class from ``[("flip", e), ("relabel", perm), ...]`` with 0-based ids."""
    norm = []
    for mv in moves:
        kind = mv[0]
        if kind == "flip":
            e = int(mv[1])
            if not (0 <= e < edges):
                raise InputError(f"flip of unknown edge {e}")
            norm.append(("flip", e))
        elif kind == "relabel":
            norm.append(("relabel", _check_perm(mv[1], edges)))
        else:
            raise InputError(f"unknown move {kind!r}")
    h = None if homology is None else (
        homology if isinstance(homology, RationalMatrix) else RationalMatrix(homology))
    return FlipWordClass(tuple(norm), h)


def inverse_class(cls: FlipWordClass) -> FlipWordClass:
    moves = []
    for mv in reversed(cls.moves):
        if mv[0] == "relabel":
            perm = mv[1]
            inv = [0] * len(perm)
            for i, p in enumerate(perm):
                inv[p] = i
            moves.append(("relabel", tuple(inv)))
        else:
            moves.append(mv)
    h = None if cls.homology is None else matrix_inverse(cls.homology)
    return FlipWordClass(tuple(moves), h)


def compose_classes(a: FlipWordClass, b: FlipWordClass) -> FlipWordClass:
    """The class acting as ``b`` first, then ``a``."""
    h = a.homology @ b.homology if a.homology is not None and b.homology is not None else None
    return FlipWordClass(_reduce_moves(b.moves + a.moves), h)


def _compile(tri: Triangulation, moves: tuple[Move, ...]) -> tuple:
    prog = []
    t = tri
    for mv in moves:
        if mv[0] == "flip":
            e = mv[1]
            prog.append((True, (e,) + t.quad(e)))
            t = t.flip(e)
        else:
            prog.append((False, mv[1]))
            t = t.relabel(mv[1])
    if t.key() != tri.key():
        raise InputError("move sequence does not return to the base triangulation")
    return tuple(prog)


def _run(prog: tuple, x: list[int]) -> list[int]:
    for is_flip, data in prog:
        if is_flip:
            e, a, b, c, d = data
            x[e] = max(x[a] + x[c], x[b] + x[d]) - x[e]
        else:
            x = [x[p] for p in data]
    return x


def flip(tri: Triangulation, x: Sequence[int], e: int) -> LamCoords:
    """Coordinates of ``x`` with respect to ``tri.flip(e)``."""
    tri.check(x)
    if not (0 <= e < tri.edges):
        raise InputError(f"edge {e} out of range")
    a, b, c, d = tri.quad(e)
    y = list(x)
    y[e] = max(x[a] + x[c], x[b] + x[d]) - x[e]
    return tuple(y)


def apply_class(tri: Triangulation, cls: FlipWordClass, x: Sequence[int],
                debug: bool = False) -> LamCoords:
    """Apply the moves of ``cls`` to ``x`` left to right."""
    tri.check(x)
    if not debug:
        return tuple(_run(_compile_cached(tri, cls.moves), list(x)))
    t, y = tri, tuple(x)
    for mv in cls.moves:
        if mv[0] == "flip":
            y = flip(t, y, mv[1])
            t = t.flip(mv[1])
        else:
            y = tuple(y[p] for p in mv[1])
            t = t.relabel(mv[1])
        try:
            t.check(y)
        except InputError as exc:
            raise InvariantViolation(f"move {mv} broke the triangle condition: {exc}") from None
    if t.key() != tri.key():
        raise InputError("move sequence does not return to the base triangulation")
    return y


@lru_cache(maxsize=4096)
def _compile_cached(tri: Triangulation, moves: tuple[Move, ...]) -> tuple:
    return _compile(tri, moves)


def curve_size(x: Sequence[int]) -> int:
    """Sum of the edge coordinates."""
    s = sum(x)
    if s <= 0:
        raise InputError("the zero lamination has no size")
    return s


class LaminationTarget(CocycleTarget):
    """Flip-word mapping classes of a triangulated surface acting on laminations."""

    def __init__(self, triangulation: Triangulation, generators: dict,
                 marking: Sequence[Sequence[int]], size: str = "l1"):
        if size not in ("l1", "max"):
            raise InputError("size must be 'l1' or 'max'")
        self.triangulation = triangulation
        self.size_kind = size
        self.generators = {}
        for name, g in generators.items():
            _compile(triangulation, g.moves)
            self.generators[name] = g
        marks = []
        for m in marking:
            m = tuple(int(v) for v in m)
            triangulation.check(m)
            if not any(m):
                raise InputError("marking curves must be non-zero")
            marks.append(m)
        super().__init__(marks)

    def with_size(self, size: str) -> "LaminationTarget":
        return LaminationTarget(self.triangulation, self.generators, self.marking, size=size)

    def with_marking(self, marking) -> "LaminationTarget":
        return LaminationTarget(self.triangulation, self.generators, marking, size=self.size_kind)

    def identity(self) -> FlipWordClass:
        return FlipWordClass((), RationalMatrix.identity(2) if self._has_homology() else None)

    def _has_homology(self) -> bool:
        gens = list(self.generators.values())
        return bool(gens) and all(g.homology is not None for g in gens) and \
            len({g.homology.dim for g in gens}) == 1 and gens[0].homology.dim == 2

    def compose(self, a, b):
        return compose_classes(a, b)

    def inverse(self, a):
        return inverse_class(a)

    def act(self, g, curve):
        prog = _compile_cached(self.triangulation, g.moves)
        return tuple(_run(prog, list(curve)))

    def curve_size(self, curve) -> int:
        if self.size_kind == "max":
            s = max(curve)
            if s <= 0:
                raise InputError("the zero lamination has no size")
            return s
        return curve_size(curve)

    def equal(self, a, b) -> bool:
        """Equality of the actions on the marking and on sums of marking pairs."""
        if a.moves == b.moves:
            return True
        probe = list(self.marking)
        probe += [tuple(u + v for u, v in zip(p, q))
                  for i, p in enumerate(self.marking) for q in self.marking[i + 1:]]
        return all(self.act(a, c) == self.act(b, c) for c in probe)

    def element_to_json(self, g):
        return {"moves": moves_to_json(g.moves),
                "homology": None if g.homology is None else g.homology.to_json()}

    def curve_to_json(self, c):
        return list(c)


def moves_to_json(moves) -> list:
    out = []
    for mv in moves:
        if mv[0] == "flip":
            out.append(["flip", mv[1] + 1])
        else:
            out.append(["relabel", [p + 1 for p in mv[1]]])
    return out


def load_surface(data: dict, size: str = "l1") -> LaminationTarget:
    """Parse a surface/generator description (1-based edge ids)."""
    try:
        E = int(data["edges"])
        tris = tuple(tuple(int(e) - 1 for e in t) for t in data["triangles"])
        tri = Triangulation(E, tris)
        quads = data.get("quads") or {}
        for key, q in quads.items():
            e = int(key) - 1
            got = tri.quad(e)
            want = tuple(int(v) - 1 for v in q)
            if want not in (got, got[2:] + got[:2]):
                raise InputError(
                    f"quad of edge {key} is {[v + 1 for v in got]}, file says {list(q)}")
        gens = {}
        for name, gen in data["generators"].items():
            moves = []
            for mv in gen["moves"]:
                if mv[0] == "flip":
                    moves.append(("flip", int(mv[1]) - 1))
                elif mv[0] == "relabel":
                    moves.append(("relabel", [int(p) - 1 for p in mv[1]]))
                else:
                    raise InputError(f"unknown move {mv[0]!r}")
            gens[name] = make_class(moves, E, gen.get("homology"))
        marking = data["marking"]
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"malformed surface description: {exc!r}") from None
    return LaminationTarget(tri, gens, marking, size=size)


def preset_data(name: str = "punctured_torus") -> dict:
    path = resources.files("toplyap") / "data" / f"{name}.json"
    try:
        return json.loads(path.read_text())
    except FileNotFoundError:
        raise InputError(f"unknown preset {name!r}") from None


def preset_punctured_torus(size: str = "l1"):
    """Once-punctured torus with twist generators ``L`` and ``R``.

    Edges have slopes (0,1), (1,0), (1,-1), so the coordinates of the curve of
    slope ``(p, q)`` are ``(|p|, |q|, |p + q|)``.  ``L`` and ``R`` act on slopes
    by ``[[1,1],[0,1]]`` and ``[[1,0],[1,1]]``.
    Returns ``(triangulation, generators, marking)``.
    """
    target = load_surface(preset_data("punctured_torus"), size=size)
    return target.triangulation, dict(target.generators), list(target.marking)


def punctured_torus_target(size: str = "l1") -> LaminationTarget:
    return load_surface(preset_data("punctured_torus"), size=size)


def slope_coordinates(p: int, q: int) -> LamCoords:
    """Punctured-torus coordinates of the curve with homology class ``(p, q)``."""
    return (abs(p), abs(q), abs(p + q))
