"""One seeded realization of the hierarchical Poisson reproduction process.

Each cell ``K_w`` carries an independent Poisson stream of reproduction
events at rate ``r_{|w|}`` per unit time over a window ``(lo, hi]``; each
event carries a parent point sampled uniformly inside the cell.

Realizations are sampled lazily per word but are a pure function of
``(seed, word)``: per-word randomness is derived by chaining a 64-bit
splitmix-style mix down the word tree, never from Python's salted ``hash``
or from query order.  This keeps the realization consistent no matter how
many times, or along how many lineage paths, the same cell is queried, and
lets vectorised sweeps reproduce the scalar path bit for bit.

The geometry of the space never enters the derivation, so two stores that
differ only in geometry realise the identical genealogy.
"""

from __future__ import annotations

import bisect
import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .rates import Constant, RateFamily, rate
from .space import SpaceConfig, Word, word_to_string

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_ROOT_SALT = 0x8BADF00D5EEDC0DE
_COUNT_SALT = 0xD6E8FEB86659FD93
_DETAIL_SALT = 0x2545F4914F6CDD1D

# Letters are offset so update increments stay nonzero for letter 1.
_LETTER_OFFSET = 0x9E6D


def mix64(z: int) -> int:
    """splitmix64 finalizer; full-avalanche 64-bit mix."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def np_mix64(z: np.ndarray) -> np.ndarray:
    """Vectorised mix64 on uint64 arrays; wraps exactly like the scalar path."""
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


def root_state(seed: int) -> int:
    """Chain state of the root word for a 64-bit store seed."""
    return mix64((seed & _MASK64) ^ _ROOT_SALT)


def child_state(state: int, letter: int) -> int:
    """Chain state of ``word + (letter,)`` given the state of ``word``."""
    return mix64((state + _GAMMA * (letter + _LETTER_OFFSET)) & _MASK64)


def count_unit(state: int) -> float:
    """The uniform in (0, 1) deciding a word's event count."""
    return ((mix64(state ^ _COUNT_SALT) >> 11) + 0.5) * 2.0**-53


def np_count_units(states: np.ndarray) -> np.ndarray:
    h = np_mix64(states ^ np.uint64(_COUNT_SALT))
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def replicate_seed(base_seed: int, index: int) -> int:
    """Deterministic per-replicate store seed (order-independent)."""
    if index < 0:
        raise ValueError("replicate index must be >= 0")
    return mix64(((base_seed & _MASK64) + _GAMMA * (index + 1)) & _MASK64)


def poisson_inverse(u: float, lam: float) -> int:
    """Inverse-CDF Poisson draw: the smallest k with CDF(k) >= u.

    Agrees with the count-zero test ``u <= exp(-lam)`` used by the
    vectorised survivor sweeps.
    """
    if lam <= 0:
        return 0
    p = math.exp(-lam)
    cdf = p
    k = 0
    while cdf < u:
        k += 1
        p *= lam / k
        cdf += p
        if k > 100_000:
            raise RuntimeError(f"Poisson inversion runaway at lam={lam}")
    return k


@dataclass(frozen=True)
class Event:
    """A reproduction point: at ``time`` every point of cell ``word`` jumps to ``parent``."""

    time: float
    word: Word
    parent: Word

    def __post_init__(self) -> None:
        if self.parent[: len(self.word)] != self.word:
            raise ValueError("parent must lie inside the event's cell")


class DepthError(ValueError):
    """A query touched a cell deeper than the store's truncation depth."""


class WindowError(ValueError):
    """A query interval left the store's time window."""


@dataclass
class EventStore:
    """A lazily sampled realization over ``window = (lo, hi]``, truncated at ``depth``.

    Truncation is exact in distribution: a store of depth N realises the
    model whose rates are zero beyond level N, with no further
    approximation.  Queries against the same (seed, word) always return the
    identical stream.

    Lazy population is single-writer: share a store across threads only
    after the words of interest are materialised, and parallelise Monte
    Carlo across stores (one seed each), never within one.
    """

    space: SpaceConfig
    rates: RateFamily
    window: tuple[float, float]
    depth: int
    seed: int
    _states: dict[Word, int] = field(default_factory=dict, repr=False)
    _counts: dict[Word, int] = field(default_factory=dict, repr=False)
    _events: dict[Word, tuple[Event, ...]] = field(default_factory=dict, repr=False)
    _frozen: bool = field(default=False, repr=False)

    def __post_init__(self) -> None:
        lo, hi = self.window
        if not lo < hi:
            raise WindowError(f"window must satisfy lo < hi, got {self.window}")
        if self.depth < 0:
            raise ValueError("depth must be >= 0")
        if self.space.precision < self.depth:
            raise ValueError(
                f"precision {self.space.precision} is below depth {self.depth}; "
                "points must resolve deeper than any event cell"
            )
        self.seed &= _MASK64

    @classmethod
    def from_events(
        cls,
        space: SpaceConfig,
        window: tuple[float, float],
        depth: int,
        events: Iterable[Event],
    ) -> "EventStore":
        """A fixed, handcrafted realization (no lazy sampling).

        Words not mentioned carry no events.  Used for oracle traces and
        negative controls.
        """
        store = cls(space, Constant(0.0), window, depth, seed=0)
        store._frozen = True
        grouped: dict[Word, list[Event]] = {}
        for ev in events:
            if len(ev.word) > depth:
                raise DepthError(f"event cell {ev.word} deeper than depth {depth}")
            if not window[0] < ev.time <= window[1]:
                raise WindowError(f"event time {ev.time} outside window {window}")
            if len(ev.parent) != space.precision:
                raise ValueError("parent must be a full-precision word")
            grouped.setdefault(ev.word, []).append(ev)
        for word, evs in grouped.items():
            evs.sort(key=lambda e: e.time)
            store._events[word] = tuple(evs)
            store._counts[word] = len(evs)
        return store

    # -- per-word realization ------------------------------------------------

    def word_chain_state(self, word: Word) -> int:
        state = self._states.get(word)
        if state is None:
            if word:
                state = child_state(self.word_chain_state(word[:-1]), word[-1])
            else:
                state = root_state(self.seed)
            self._states[word] = state
        return state

    def _check_word(self, word: Word) -> None:
        if len(word) > self.depth:
            raise DepthError(f"cell level {len(word)} exceeds depth {self.depth}")

    def count(self, word: Word) -> int:
        """Number of events for ``word`` over the full window."""
        self._check_word(word)
        n = self._counts.get(word)
        if n is None:
            if self._frozen:
                n = 0
            else:
                lo, hi = self.window
                lam = rate(self.rates, len(word)) * (hi - lo)
                n = poisson_inverse(count_unit(self.word_chain_state(word)), lam)
            self._counts[word] = n
        return n

    def events(self, word: Word) -> tuple[Event, ...]:
        """The word's full event stream, sorted by time."""
        self._check_word(word)
        evs = self._events.get(word)
        if evs is None:
            n = self.count(word)
            if n == 0:
                evs = ()
            else:
                lo, hi = self.window
                rng = np.random.default_rng(
                    (self.seed, self.word_chain_state(word), _DETAIL_SALT)
                )
                # 1 - U keeps times inside (lo, hi].
                times = np.sort(lo + (hi - lo) * (1.0 - rng.random(n)))
                free = self.space.precision - len(word)
                letters = rng.integers(1, self.space.alphabet.size + 1, size=(n, free))
                evs = tuple(
                    Event(float(t), word, word + tuple(int(x) for x in row))
                    for t, row in zip(times, letters)
                )
            self._events[word] = evs
        return evs

    def _check_interval(self, lo: float, hi: float) -> None:
        if not (self.window[0] <= lo <= hi <= self.window[1]):
            raise WindowError(f"interval ({lo}, {hi}] outside window {self.window}")

    def events_in(
        self, word: Word, lo: float, hi: float, include_left: bool = False
    ) -> tuple[Event, ...]:
        """Events of the word with time in ``(lo, hi]`` (or ``[lo, hi]``)."""
        self._check_interval(lo, hi)
        if self.count(word) == 0:
            return ()
        evs = self.events(word)
        times = [e.time for e in evs]
        left = bisect.bisect_left(times, lo) if include_left else bisect.bisect_right(times, lo)
        right = bisect.bisect_right(times, hi)
        return evs[left:right]

    def has_event(self, word: Word, lo: float, hi: float, include_left: bool = False) -> bool:
        """True iff the word saw at least one event in the interval.

        Marginally this is ``1 - exp(-r_{|w|} * (hi - lo))`` for a
        half-open interval.
        """
        self._check_interval(lo, hi)
        if self.count(word) == 0:
            return False
        if not include_left and (lo, hi) == self.window:
            return True
        return bool(self.events_in(word, lo, hi, include_left))

    # -- export ----------------------------------------------------------------

    def iter_all_events(self, max_cells: int = 1 << 22) -> Iterable[Event]:
        """All events to the truncation depth, ordered by (level, word, time).

        Materialises every cell, so it is guarded against exponential blowup.
        """
        size = self.space.alphabet.size
        total = sum(size**n for n in range(self.depth + 1))
        if total > max_cells:
            raise ValueError(
                f"dump would touch {total} cells (> {max_cells}); reduce depth"
            )
        level: list[Word] = [()]
        for _ in range(self.depth + 1):
            for word in level:
                yield from self.events(word)
            level = [w + (i,) for w in level for i in self.space.alphabet.letters()]

    def dump_csv(self, fileobj: io.TextIOBase | None = None) -> str:
        """Write the realization as CSV columns (time, word, parent)."""
        buffer = fileobj or io.StringIO()
        writer = csv.writer(buffer)
        writer.writerow(["time", "word", "parent"])
        for ev in self.iter_all_events():
            writer.writerow([repr(ev.time), word_to_string(ev.word), word_to_string(ev.parent)])
        return buffer.getvalue() if fileobj is None else ""
