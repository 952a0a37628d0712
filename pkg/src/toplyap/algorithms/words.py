"""Enumeration of admissible words together with their displacements.

Words are grown by prepending symbols.  Prepending ``s`` to ``w`` turns the
marking images ``Z(w) a`` into ``g(s) Z(w) a``, so every node of the word tree
costs one action per marking curve.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import product
from typing import Sequence

import numpy as np

from toplyap.cocycle import Cocycle
from toplyap.errors import InputError
from toplyap.symbolic import Word, is_admissible


@dataclass(frozen=True)
class WordTable:
    """All admissible words of one length, sorted, with their displacements."""

    n: int
    words: tuple[Word, ...]
    displacements: np.ndarray

    @property
    def max_displacement(self) -> float:
        return float(self.displacements.max())

    @property
    def count(self) -> int:
        return len(self.words)


def _suffixes(c: Cocycle, depth: int) -> list[Word]:
    k = c.alphabet_size
    return [w for w in product(range(k), repeat=depth) if is_admissible(w, c.system)]


def suffix_images(c: Cocycle, suffix: Sequence[int]) -> list:
    t = c.target
    images = list(t.marking)
    for s in reversed(suffix):
        g = c.elements[s]
        images = [t.act(g, a) for a in images]
    return images


def _enumerate_subtree(c: Cocycle, n: int, suffix: Word) -> list[tuple[Word, float]]:
    t = c.target
    act = t.act
    els = c.elements
    preds = [c.system.predecessors(b) for b in range(c.alphabet_size)]
    out: list[tuple[Word, float]] = []

    def rec(word: Word, images: list) -> None:
        if len(word) == n:
            out.append((word, t.images_displacement(images)))
            return
        for s in preds[word[0]]:
            g = els[s]
            rec((s,) + word, [act(g, a) for a in images])

    rec(suffix, suffix_images(c, suffix))
    return out


def split_depth(c: Cocycle, n: int, threads: int) -> int:
    """Suffix length used to cut the word tree into independent tasks."""
    if threads <= 1:
        return 1
    depth, k = 1, c.alphabet_size
    while k ** depth < 4 * threads and depth < n:
        depth += 1
    return min(depth, n)


def word_table(c: Cocycle, n: int, threads: int = 1) -> WordTable:
    """Displacement of every admissible word of length ``n`` (``n >= 1``)."""
    if n < 1:
        raise InputError("word length must be at least 1")
    tasks = _suffixes(c, split_depth(c, n, threads))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(lambda s: _enumerate_subtree(c, n, s), tasks))
    else:
        parts = [_enumerate_subtree(c, n, s) for s in tasks]
    rows = sorted(r for part in parts for r in part)
    return WordTable(n, tuple(w for w, _ in rows), np.array([d for _, d in rows], dtype=float))
