import csv
import io
import math

import numpy as np
import pytest

from _oracles import chi_square_statistic
from segcoal.events import (
    DepthError,
    Event,
    EventStore,
    WindowError,
    poisson_inverse,
    replicate_seed,
)
from segcoal.rates import Constant, Geometric
from segcoal.space import CANTOR, HALF_OPEN, Alphabet, SpaceConfig

SPACE = SpaceConfig(Alphabet(2), CANTOR, precision=12)


def store_with(seed, rates=Constant(1.0), window=(0.0, 1.0), depth=6, space=SPACE):
    return EventStore(space, rates, window, depth, seed)


def test_event_parent_must_lie_in_cell():
    with pytest.raises(ValueError):
        Event(0.5, (1,), (2,) * 12)
    Event(0.5, (1,), (1,) + (2,) * 11)


def test_zero_rate_has_no_events():
    store = store_with(3, rates=Constant(0.0))
    for word in [(), (1,), (2, 2), (1, 2, 1)]:
        assert store.events_in(word, 0.0, 1.0) == ()
        assert not store.has_event(word, 0.0, 1.0)


def test_realization_is_deterministic_and_memoised():
    a = store_with(99)
    b = store_with(99)
    for word in [(), (1,), (2,), (1, 2), (2, 1, 1)]:
        assert a.events(word) == b.events(word)
        assert a.events(word) is a.events(word)  # memo returns the same tuple
    # query order does not matter
    c = store_with(99)
    words = [(2, 1, 1), (), (1, 2), (2,), (1,)]
    assert [c.events(w) for w in words] == [a.events(w) for w in words]


def test_different_seeds_differ():
    a, b = store_with(1), store_with(2)
    assert any(a.events(w) != b.events(w) for w in [(), (1,), (2,), (1, 1)])


def test_event_stream_contents():
    store = store_with(5, rates=Constant(3.0))
    evs = store.events((1,))
    times = [e.time for e in evs]
    assert times == sorted(times)
    for e in evs:
        assert 0.0 < e.time <= 1.0
        assert e.word == (1,)
        assert len(e.parent) == SPACE.precision
        assert e.parent[:1] == (1,)


def test_events_in_filters_and_validates():
    store = store_with(17, rates=Constant(4.0))
    evs = store.events(())
    mid = 0.5
    early = store.events_in((), 0.0, mid)
    late = store.events_in((), mid, 1.0)
    assert early + late == evs
    assert all(e.time <= mid for e in early)
    assert all(e.time > mid for e in late)
    # closed-left queries include an event at exactly the boundary
    if evs:
        boundary = evs[0].time
        assert evs[0] in store.events_in((), boundary, 1.0, include_left=True)
        assert evs[0] not in store.events_in((), boundary, 1.0)
    with pytest.raises(WindowError):
        store.events_in((), -0.1, 0.5)
    with pytest.raises(WindowError):
        store.events_in((), 0.0, 1.5)
    with pytest.raises(DepthError):
        store.events_in((1,) * 7, 0.0, 1.0)


def test_has_event_consistent_with_events_in():
    store = store_with(23, rates=Constant(2.0))
    for word in [(), (1,), (2, 2)]:
        for lo, hi in [(0.0, 1.0), (0.0, 0.3), (0.3, 0.9)]:
            assert store.has_event(word, lo, hi) == bool(store.events_in(word, lo, hi))


def test_poisson_mean_monte_carlo():
    # Constant(1) over a unit window: counts are Poisson(1)
    n = 10_000
    counts = [store_with(replicate_seed(42, i)).count((1,)) for i in range(n)]
    mean = sum(counts) / n
    assert abs(mean - 1.0) < 3 / math.sqrt(n)


def test_has_event_probability_at_log2():
    # P[no event by ln 2] = exp(-ln 2) = 1/2 at every level
    t = math.log(2)
    n = 10_000
    hits = 0
    for i in range(n):
        store = EventStore(SPACE, Constant(1.0), (0.0, t), 6, replicate_seed(7, i))
        hits += store.has_event((1, 2, 1), 0.0, t)
    sigma = 0.5 / math.sqrt(n)
    assert abs(hits / n - 0.5) < 3 * sigma


def test_sibling_counts_chi_square_independence():
    buckets = [[0] * 3 for _ in range(3)]
    for i in range(3000):
        store = store_with(replicate_seed(11, i), rates=Constant(1.5))
        c1 = min(store.count((1,)), 2)
        c2 = min(store.count((2,)), 2)
        buckets[c1][c2] += 1
    # df = 4; critical value 18.47 at alpha = 0.001
    assert chi_square_statistic(buckets) < 18.47


def test_geometry_does_not_enter_realization():
    interval_space = SpaceConfig(Alphabet(2), HALF_OPEN, precision=12)
    a = store_with(31)
    b = store_with(31, space=interval_space)
    for word in [(), (1,), (2, 1), (1, 1, 2)]:
        assert a.events(word) == b.events(word)


def test_from_events_fixed_realization():
    parent = (1, 2) + (1,) * 10
    ev = Event(0.4, (1,), parent)
    store = EventStore.from_events(SPACE, (0.0, 1.0), 6, [ev])
    assert store.events((1,)) == (ev,)
    assert store.events((2,)) == ()
    assert store.count(()) == 0
    with pytest.raises(WindowError):
        EventStore.from_events(SPACE, (0.0, 1.0), 6, [Event(1.4, (1,), parent)])
    with pytest.raises(DepthError):
        EventStore.from_events(SPACE, (0.0, 1.0), 2, [Event(0.4, (1, 2, 1), parent[:3] + (1,) * 9)])


def test_store_validation():
    with pytest.raises(WindowError):
        store_with(1, window=(1.0, 1.0))
    with pytest.raises(ValueError):
        EventStore(SPACE, Constant(1.0), (0.0, 1.0), depth=13, seed=1)  # precision 12 < depth


def test_poisson_inverse_edge_cases():
    assert poisson_inverse(0.3, 0.0) == 0
    assert poisson_inverse(0.999999, 2.0) >= 8
    # count is zero exactly when u <= exp(-lam)
    lam = 0.7
    p0 = math.exp(-lam)
    assert poisson_inverse(p0, lam) == 0
    assert poisson_inverse(p0 * 1.0000001, lam) == 1


def test_csv_dump():
    store = store_with(13, rates=Constant(2.0), depth=3)
    text = store.dump_csv()
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["time", "word", "parent"]
    words = [row[1] for row in rows[1:]]
    levels = [len(w) for w in words]
    assert levels == sorted(levels)
    for time_str, word, parent_str in rows[1:]:
        assert parent_str.startswith(word)
        assert 0.0 < float(time_str) <= 1.0
    # dump of the whole tree is guarded against exponential blowup
    deep_space = SpaceConfig(Alphabet(2), CANTOR, precision=40)
    deep = EventStore(deep_space, Constant(1.0), (0.0, 1.0), 30, 1)
    with pytest.raises(ValueError):
        deep.dump_csv()


def test_replicate_seed_is_deterministic_and_spread():
    seeds = [replicate_seed(1729, i) for i in range(100)]
    assert seeds == [replicate_seed(1729, i) for i in range(100)]
    assert len(set(seeds)) == 100
    with pytest.raises(ValueError):
        replicate_seed(1, -1)
