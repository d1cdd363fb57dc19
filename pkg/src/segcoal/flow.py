"""The coalescing stochastic flow and its dust/block decomposition.

A point's image under the flow over ``(s, t]`` is determined by a short
ordered list of events: the latest event at the lowest level whose cell
contains the point, then (restarting from that event's parent and time) the
latest event at the next strictly higher level, and so on.  At truncation
depth N the list has at most N + 1 entries, so the construction below is
exact for the truncated model, and the truncated model is itself a bona
fide instance of the model (rates zero beyond N).

From one realization we extract:

* ``trace_lineage`` / ``apply_flow`` -- the per-point flow map;
* ``survivor_tree`` -- per-level sets of cells untouched by events;
* ``decompose`` -- dust cells, maximal coalesced blocks and their atoms,
  with exact rational masses;
* ``verify_flow_property`` -- sampled checks of the composition identity
  ``X_{s,v} = X_{t,v} o X_{s,t}`` on a shared realization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .events import (
    Event,
    EventStore,
    np_count_units,
    root_state,
)
from .rates import RateFamily, rate
from .space import ROOT, SpaceConfig, Word, sample_uniform_point, word_to_string


class AtomCollisionError(RuntimeError):
    """Two blocks traced to the same finite-precision atom.

    Distinct blocks share an atom with probability zero; a collision means
    the word precision is too coarse for this event density.  Raise
    ``SpaceConfig.precision`` and retry.
    """


@dataclass(frozen=True)
class Lineage:
    """The event chain that moves one point across ``(s, t]``.

    ``steps`` hold strictly increasing levels; dust means no event touched
    the point, in which case it is a fixed point of the flow.
    """

    start: Word
    steps: tuple[Event, ...]

    @property
    def is_dust(self) -> bool:
        return not self.steps

    @property
    def final(self) -> Word:
        return self.steps[-1].parent if self.steps else self.start

    @property
    def levels(self) -> tuple[int, ...]:
        return tuple(len(ev.word) for ev in self.steps)


@dataclass(frozen=True)
class SurvivorTree:
    """Per-level survivor cells: no event in the cell or any ancestor by time t.

    ``survivors`` may be None for count-only trees produced by the batch
    sweep; ``counts[n]`` is always populated.
    """

    t: float
    depth: int
    alphabet_size: int
    counts: tuple[int, ...]
    survivors: tuple[frozenset[Word], ...] | None = None

    def dust_measure(self) -> Fraction:
        return Fraction(self.counts[self.depth], self.alphabet_size**self.depth)


@dataclass(frozen=True)
class Block:
    """A maximal coalesced cell: every point of ``word`` maps to ``atom``."""

    word: Word
    atom: Word
    mass: Fraction


@dataclass(frozen=True)
class BlockDecomposition:
    """Dust cells plus non-trivial blocks of one realization at time t."""

    t: float
    depth: int
    alphabet_size: int
    dust_words: frozenset[Word]
    blocks: tuple[Block, ...]
    dust_measure: Fraction
    counts: tuple[int, ...]

    def to_json_dict(self) -> dict:
        return {
            "t": self.t,
            "depth": self.depth,
            "dust_measure": float(self.dust_measure),
            "dust_measure_exact": str(self.dust_measure),
            "blocks": [
                {
                    "word": word_to_string(b.word),
                    "atom": word_to_string(b.atom),
                    "mass": float(b.mass),
                    "mass_exact": str(b.mass),
                }
                for b in self.blocks
            ],
            "b_counts": list(self.counts),
        }


@dataclass(frozen=True)
class FlowCheckReport:
    n_samples: int
    violations: int
    first_counterexample: dict | None

    @property
    def passed(self) -> bool:
        return self.violations == 0


def _resume_trace(
    store: EventStore, u: float, p: Word, level_lo: int, t: float
) -> tuple[list[Event], Word]:
    """Continue a lineage from parent ``p`` at time ``u``.

    Searches levels >= level_lo over [u, t] (closed on the left: an event at
    exactly u in a deeper cell still applies), always taking the lowest
    level first and the latest event within that level.
    """
    steps: list[Event] = []
    while True:
        found = None
        for n in range(level_lo, store.depth + 1):
            evs = store.events_in(p[:n], u, t, include_left=True)
            if evs:
                found = evs[-1]
                break
        if found is None:
            return steps, p
        steps.append(found)
        u, p = found.time, found.parent
        level_lo = len(found.word) + 1


def trace_lineage(store: EventStore, x: Word, s: float, t: float) -> Lineage:
    """The full event chain moving ``x`` across ``(s, t]``.

    The first step scans levels from the root for the latest event in
    ``(s, t]`` whose cell contains ``x``; every later step restarts from the
    previous parent over ``[u_m, t]`` and strictly higher levels.  With no
    event at any level the point is dust.
    """
    if len(x) != store.space.precision:
        raise ValueError(
            f"point must be a depth-{store.space.precision} word, got level {len(x)}"
        )
    if not s < t:
        raise ValueError(f"need s < t, got s={s}, t={t}")
    first = None
    for n in range(0, store.depth + 1):
        evs = store.events_in(x[:n], s, t)
        if evs:
            first = evs[-1]
            break
    if first is None:
        return Lineage(start=x, steps=())
    rest, _ = _resume_trace(store, first.time, first.parent, len(first.word) + 1, t)
    return Lineage(start=x, steps=(first, *rest))


def apply_flow(store: EventStore, x: Word, s: float, t: float) -> Word:
    """Image of ``x`` under the flow over ``(s, t]``."""
    return trace_lineage(store, x, s, t).final


def survivor_tree(store: EventStore, t: float) -> SurvivorTree:
    """Breadth-first survivor sets: a cell survives iff its parent does and
    it saw no event in ``(window_lo, t]``."""
    lo = store.window[0]
    letters = store.space.alphabet.letters()
    levels: list[frozenset[Word]] = []
    current: list[Word] = []
    if not store.has_event(ROOT, lo, t):
        current = [ROOT]
    levels.append(frozenset(current))
    for _ in range(store.depth):
        current = [
            w + (i,) for w in current for i in letters if not store.has_event(w + (i,), lo, t)
        ]
        levels.append(frozenset(current))
    return SurvivorTree(
        t=t,
        depth=store.depth,
        alphabet_size=store.space.alphabet.size,
        counts=tuple(len(level) for level in levels),
        survivors=tuple(levels),
    )


def decompose(store: EventStore, t: float) -> BlockDecomposition:
    """Split the space into dust cells and maximal coalesced blocks.

    A block's top cell is a word with an event in ``(window_lo, t]`` and no
    event in any strict ancestor; its atom is the final parent of the chain
    restarted from the cell's latest event.  Depth-N survivors are dust.
    Block masses plus dust measure sum to one exactly.
    """
    lo = store.window[0]
    size = store.space.alphabet.size
    depth = store.depth
    counts = [0] * (depth + 1)
    top_words: list[Word] = []
    dust_words: list[Word] = []
    frontier: list[Word] = [ROOT]
    for n in range(depth + 1):
        next_frontier: list[Word] = []
        for w in frontier:
            if store.has_event(w, lo, t):
                top_words.append(w)
            else:
                counts[n] += 1
                if n < depth:
                    next_frontier.extend(w + (i,) for i in store.space.alphabet.letters())
                else:
                    dust_words.append(w)
        frontier = next_frontier

    blocks = []
    seen_atoms: dict[Word, Word] = {}
    for w in top_words:
        top_event = store.events_in(w, lo, t)[-1]
        _, atom = _resume_trace(store, top_event.time, top_event.parent, len(w) + 1, t)
        if atom in seen_atoms:
            raise AtomCollisionError(
                f"blocks {word_to_string(seen_atoms[atom])} and {word_to_string(w)} share "
                f"atom {word_to_string(atom)}; increase precision above "
                f"{store.space.precision}"
            )
        seen_atoms[atom] = w
        blocks.append(Block(word=w, atom=atom, mass=Fraction(1, size ** len(w))))

    dust_measure = Fraction(counts[depth], size**depth)
    total = sum((b.mass for b in blocks), start=Fraction(0)) + dust_measure
    if total != 1:
        raise AssertionError(f"mass leak: blocks + dust = {total}")
    return BlockDecomposition(
        t=t,
        depth=depth,
        alphabet_size=size,
        dust_words=frozenset(dust_words),
        blocks=tuple(blocks),
        dust_measure=dust_measure,
        counts=tuple(counts),
    )


def block_count_from_counts(counts: Sequence[int], alphabet_size: int) -> int:
    """Number of maximal blocks implied by a survivor-count trajectory.

    Level-n tops are the children of level-(n-1) survivors that died:
    ``|S| * B_{n-1} - B_n``; the root contributes one block iff it died.
    Matches ``len(decompose(...).blocks)`` on the same realization.
    """
    total = 1 - counts[0]
    for n in range(1, len(counts)):
        total += alphabet_size * counts[n - 1] - counts[n]
    return total


def verify_flow_property(
    store: EventStore, n_samples: int, rng: np.random.Generator
) -> FlowCheckReport:
    """Sampled check of ``X_{s,v} = X_{t,v} o X_{s,t}`` on one realization.

    Draws random points and random ``s < t < v`` inside the window, and
    requires exact word equality of the direct and composed images.
    """
    lo, hi = store.window
    space = store.space
    violations = 0
    first = None
    for _ in range(n_samples):
        x = sample_uniform_point(ROOT, space.precision, space.alphabet, rng)
        s, t, v = np.sort(lo + (hi - lo) * rng.random(3)).tolist()
        if not s < t < v:
            continue
        direct = apply_flow(store, x, s, v)
        composed = apply_flow(store, apply_flow(store, x, s, t), t, v)
        if direct != composed:
            violations += 1
            if first is None:
                first = {
                    "x": word_to_string(x),
                    "s": s,
                    "t": t,
                    "v": v,
                    "direct": word_to_string(direct),
                    "composed": word_to_string(composed),
                }
    return FlowCheckReport(n_samples=n_samples, violations=violations, first_counterexample=first)


def _expected_cells(rates_family: RateFamily, t: float, depth: int, alphabet_size: int) -> float:
    """Expected total children inspected by one replicate sweep."""
    total = 1.0
    log_mean = -rate(rates_family, 0) * t
    for n in range(1, depth + 1):
        log_mean += math.log(alphabet_size) - rate(rates_family, n) * t
        total += alphabet_size * math.exp(min(log_mean, 700.0))
    return total


def _mix64_inplace(z: np.ndarray) -> np.ndarray:
    """In-place vectorised mix64; identical output to events.np_mix64."""
    with np.errstate(over="ignore"):
        z ^= z >> np.uint64(30)
        z *= np.uint64(0xBF58476D1CE4E5B9)
        z ^= z >> np.uint64(27)
        z *= np.uint64(0x94D049BB133111EB)
        z ^= z >> np.uint64(31)
    return z


def survivor_counts_batch(
    space: SpaceConfig,
    rates_family: RateFamily,
    t: float,
    depth: int,
    seeds: Sequence[int],
    max_chunk_cells: float = 4e6,
) -> np.ndarray:
    """Survivor-count trajectories for many independent replicates.

    Replicate ``r`` reproduces, bit for bit, the counts of
    ``survivor_tree(EventStore(space, rates, (0, t), depth, seeds[r]), t)``;
    the sweep shares the per-word hash chain with the scalar path and only
    vectorises it.  Returns an int64 array of shape (len(seeds), depth + 1).
    """
    if space.precision < depth:
        raise ValueError("precision below depth")
    if t <= 0:
        raise ValueError("t must be positive")
    size = space.alphabet.size
    # One threshold per level, computed once so scalar and vector paths
    # compare against the identical float.
    thresholds = [math.exp(-rate(rates_family, n) * t) for n in range(depth + 1)]
    with np.errstate(over="ignore"):
        increments = np.uint64(0x9E3779B97F4A7C15) * (
            np.arange(1, size + 1, dtype=np.uint64) + np.uint64(0x9E6D)
        )
    count_salt = np.uint64(0xD6E8FEB86659FD93)

    n_reps = len(seeds)
    out = np.zeros((n_reps, depth + 1), dtype=np.int64)
    per_rep = _expected_cells(rates_family, t, depth, size)
    chunk = int(max(1, min(n_reps, max_chunk_cells / max(per_rep, 1.0))))

    for start in range(0, n_reps, chunk):
        batch = seeds[start : start + chunk]
        states = np.array([root_state(s) for s in batch], dtype=np.uint64)
        reps = np.arange(len(batch), dtype=np.int64)
        alive = np_count_units(states) <= thresholds[0]
        states, reps = states[alive], reps[alive]
        out[start : start + len(batch), 0] = np.bincount(reps, minlength=len(batch))
        for n in range(1, depth + 1):
            if states.size == 0:
                break
            with np.errstate(over="ignore"):
                child = np.add.outer(states, increments).reshape(-1)
            _mix64_inplace(child)
            h = child ^ count_salt
            _mix64_inplace(h)
            u = (h >> np.uint64(11)).astype(np.float64)
            u += 0.5
            u *= 2.0**-53
            alive = u <= thresholds[n]
            states = child[alive]
            reps = np.repeat(reps, size)[alive]
            out[start : start + len(batch), n] = np.bincount(reps, minlength=len(batch))
    return out


def survivor_trees_batch(
    space: SpaceConfig,
    rates_family: RateFamily,
    t: float,
    depth: int,
    seeds: Sequence[int],
) -> list[SurvivorTree]:
    """Count-only SurvivorTree objects from the vectorised sweep."""
    counts = survivor_counts_batch(space, rates_family, t, depth, seeds)
    return [
        SurvivorTree(
            t=t,
            depth=depth,
            alphabet_size=space.alphabet.size,
            counts=tuple(int(c) for c in row),
            survivors=None,
        )
        for row in counts
    ]
