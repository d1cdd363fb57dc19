"""Segregated geographical spaces.

The geography is a nested family of cells ("complexes") indexed by finite
words over an alphabet {1, ..., |S|}.  Two concrete geometries are supported:

* ``CANTOR_SET`` -- the |S|-part Cantor set, built from the contractions
  ``F_i(x) = (2i - 2 + x) / (2|S| - 1)`` on [0, 1].  Cells are closed,
  pairwise disjoint, and shrink by ``1/(2|S|-1)`` per level.
* ``HALF_OPEN_INTERVAL`` -- the unit interval split into |S| half-open cells
  per level, with any shared endpoint assigned to the cell nearer the origin.
  Cells shrink by ``1/|S|`` per level.

Points are represented as fixed-precision words (length ``precision``), so
all cell arithmetic is exact and the genealogy never depends on floating
point boundaries.  The geometry only affects the embedding into [0, 1];
cell structure, measure and sampling are identical across geometries.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np

# A word is a tuple of letters from 1..|S|.  The empty tuple is the root cell.
Word = tuple[int, ...]

ROOT: Word = ()


class GeometryKind(Enum):
    CANTOR_SET = "cantor"
    HALF_OPEN_INTERVAL = "interval"


@dataclass(frozen=True)
class Alphabet:
    """The letter set {1, ..., size}; at least two letters are required."""

    size: int

    def __post_init__(self) -> None:
        if self.size < 2:
            raise ValueError(f"alphabet size must be >= 2, got {self.size}")

    def letters(self) -> range:
        return range(1, self.size + 1)


@dataclass(frozen=True)
class Geometry:
    kind: GeometryKind

    def ratio(self, alphabet: Alphabet) -> Fraction:
        """Per-level contraction ratio of cell diameters."""
        if self.kind is GeometryKind.CANTOR_SET:
            return Fraction(1, 2 * alphabet.size - 1)
        return Fraction(1, alphabet.size)

    def diameter_bound(self, alphabet: Alphabet, level: int) -> Fraction:
        """Upper bound on the diameter of a level-n cell (monotone to 0)."""
        if level < 0:
            raise ValueError("level must be >= 0")
        return self.ratio(alphabet) ** level


CANTOR = Geometry(GeometryKind.CANTOR_SET)
HALF_OPEN = Geometry(GeometryKind.HALF_OPEN_INTERVAL)


@dataclass(frozen=True)
class SpaceConfig:
    """Alphabet + geometry + the fixed word length used to represent points.

    ``precision`` must be at least the truncation depth of any event process
    the space is paired with, so parent points can always be refined to a
    deeper cell than any event.
    """

    alphabet: Alphabet
    geometry: Geometry
    precision: int

    def __post_init__(self) -> None:
        if self.precision < 1:
            raise ValueError(f"precision must be >= 1, got {self.precision}")


def word_from_string(text: str) -> Word:
    """Parse "121" (single-digit letters) or "10.2.1" (dot-separated)."""
    if text == "":
        return ROOT
    if "." in text:
        return tuple(int(part) for part in text.split("."))
    return tuple(int(ch) for ch in text)


def word_to_string(word: Word) -> str:
    if any(letter > 9 for letter in word):
        return ".".join(str(letter) for letter in word)
    return "".join(str(letter) for letter in word)


def child(word: Word, letter: int, alphabet: Alphabet) -> Word:
    """The cell obtained by appending one letter; level increases by one."""
    if not 1 <= letter <= alphabet.size:
        raise ValueError(f"letter {letter} outside 1..{alphabet.size}")
    return word + (letter,)


def parent(word: Word) -> Word:
    if not word:
        raise ValueError("the root cell has no parent")
    return word[:-1]


def is_ancestor(word: Word, other: Word) -> bool:
    """True iff ``word`` is a prefix of ``other`` (cell containment)."""
    return other[: len(word)] == word


def measure(word: Word, alphabet: Alphabet) -> Fraction:
    """Uniform measure of the cell: |S| ** -len(word), exactly."""
    return Fraction(1, alphabet.size ** len(word))


def embed(word: Word, alphabet: Alphabet, geometry: Geometry) -> tuple[Fraction, Fraction]:
    """Endpoints of the cell's interval in [0, 1], as exact rationals.

    Cantor cells are the closed intervals produced by composing the
    contractions along the word.  Half-open cells are ``(a, b]`` except the
    leftmost cell of each level, which keeps its left endpoint.
    """
    if geometry.kind is GeometryKind.CANTOR_SET:
        lo, hi = Fraction(0), Fraction(1)
        denom = 2 * alphabet.size - 1
        for letter in reversed(word):
            lo = Fraction(2 * letter - 2 + lo, denom)
            hi = Fraction(2 * letter - 2 + hi, denom)
        return lo, hi
    cells = alphabet.size ** len(word)
    index = 0
    for letter in word:
        index = index * alphabet.size + (letter - 1)
    return Fraction(index, cells), Fraction(index + 1, cells)


def level_ancestor(word: Word, level: int) -> Word:
    if level > len(word):
        raise ValueError(f"word has level {len(word)} < {level}")
    return word[:level]


def sample_uniform_point(
    word: Word, precision: int, alphabet: Alphabet, rng: np.random.Generator
) -> Word:
    """A uniform depth-``precision`` cell inside ``word``'s cell.

    Extends the word with independent uniform letters; the marginal law is
    the uniform measure restricted to the cell.
    """
    free = precision - len(word)
    if free < 0:
        raise ValueError(f"word level {len(word)} exceeds precision {precision}")
    if free == 0:
        return word
    letters = rng.integers(1, alphabet.size + 1, size=free)
    return word + tuple(int(x) for x in letters)
