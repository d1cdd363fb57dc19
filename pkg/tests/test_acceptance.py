"""Acceptance suite: one test per numbered criterion, at the stated tolerance.

Monte Carlo items use the fixed default seed machinery, so every run is
deterministic.  Run with ``pytest tests/test_acceptance.py -v -s`` to see
one pass line per criterion.
"""

import math
from fractions import Fraction

import numpy as np
import pytest

from _oracles import constant_rate_extinction_fixed_point, gwve_extinction_dp
from segcoal.events import EventStore, replicate_seed
from segcoal.flow import (
    apply_flow,
    decompose,
    survivor_counts_batch,
    survivor_trees_batch,
    trace_lineage,
    verify_flow_property,
)
from segcoal.gwve import (
    GwveSpec,
    degeneracy_test,
    extinct_prob_by,
    extinct_prob_limit,
    g_term,
    mean_b,
    simulate_many,
)
from segcoal.phase import (
    PhaseLabel,
    classify,
    dust_dimension_analytic,
    dust_dimension_empirical,
)
from segcoal.rates import (
    Constant,
    CustomTable,
    Geometric,
    Harmonic,
    Linear,
    Truncated,
    analytics,
    partial_sum,
)
from segcoal.space import CANTOR, HALF_OPEN, ROOT, Alphabet, SpaceConfig, sample_uniform_point

SEED = 1729
T0_2 = math.log(2)  # critical time for |S|=2, constant rate 1


def _pass(num: int, message: str) -> None:
    print(f"PASS criterion {num:2d}: {message}")


def _seeds(tag: int, count: int) -> list[int]:
    base = replicate_seed(SEED, tag)
    return [replicate_seed(base, i) for i in range(count)]


def test_criterion_01_critical_time_exact():
    phase = classify(2, analytics(Constant(1.0), 2))
    assert phase.label is PhaseLabel.CRITICAL
    assert phase.critical_time == math.log(2)  # exact float equality
    phase3 = classify(3, analytics(Constant(2.0), 3))
    assert phase3.label is PhaseLabel.CRITICAL
    assert phase3.critical_time == math.log(3) / 2
    _pass(1, "t0 = ln2 for (2, constant 1) and (ln3)/2 for (3, constant 2), exactly")


def test_criterion_02_phase_table():
    expected = [
        (Geometric(1.0, 0.125), PhaseLabel.LOWER_SUBCRITICAL),
        (Geometric(1.0, 0.5), PhaseLabel.UPPER_SUBCRITICAL),
        (Harmonic(1.0), PhaseLabel.SEMICRITICAL),
        (Constant(1.0), PhaseLabel.CRITICAL),
        (Linear(1.0), PhaseLabel.SUPERCRITICAL),
    ]
    for size in (2, 3, 5):
        for family, label in expected:
            got = classify(size, analytics(family, size)).label
            assert got is label, (size, family, got)
    _pass(2, "five-family phase table exact for |S| in {2, 3, 5}")


def test_criterion_03_extinction_probability():
    spec = GwveSpec(2, Constant(1.0), 0.5 * T0_2)
    oracle = constant_rate_extinction_fixed_point(
        2, line_p=spec.survive_prob(1), root_p=spec.survive_prob(0)
    )
    assert oracle == pytest.approx(math.sqrt(2) - 1, abs=1e-12)
    limit = extinct_prob_limit(spec, tol=1e-9)
    assert limit.converged
    assert abs(limit.value - oracle) < 1e-6
    above = GwveSpec(2, Constant(1.0), 1.1 * T0_2)
    assert abs(extinct_prob_by(above, 1000) - 1.0) < 1e-3
    _pass(3, f"extinction limit {limit.value:.7f} = sqrt(2)-1 within 1e-6; "
             "=1 within 1e-3 at t=1.1*t0 by n=1000")


def test_criterion_04_degeneracy_flip():
    for size, c in [(2, 1.0), (3, 2.0)]:
        t0 = math.log(size) / c
        below = degeneracy_test(GwveSpec(size, Constant(c), 0.9 * t0))
        assert not below.degenerate and below.inf_m_positive and below.g.kind == "finite"
        above = degeneracy_test(GwveSpec(size, Constant(c), 1.1 * t0))
        assert above.degenerate and not above.inf_m_positive
        at = degeneracy_test(GwveSpec(size, Constant(c), t0))
        assert at.degenerate and at.inf_m_positive and at.g.kind == "diverges"
    spec_at = GwveSpec(2, Constant(1.0), T0_2)
    for n in (1, 10, 100):
        assert g_term(spec_at, n) == pytest.approx(0.25, rel=1e-12)
    _pass(4, "non-degenerate at 0.9*t0, degenerate at t0 (certified g divergence, "
             "terms 0.25) and at 1.1*t0")


GRID_5 = [
    (2, Constant(1.0), 0.5 * T0_2),
    (2, Constant(1.0), T0_2),
    (2, Geometric(1.0, 0.5), 1.0),
    (3, Constant(1.0), 1.0),
    (3, Harmonic(2.0), 1.0),
    (5, Constant(2.0), 0.75),
]


def test_criterion_05_gwve_coupling():
    reps = 10_000
    depth = 10
    for tag, (size, family, t) in enumerate(GRID_5):
        space = SpaceConfig(Alphabet(size), CANTOR, precision=depth + 10)
        flow_counts = survivor_counts_batch(
            space, family, t, depth, _seeds(100 + tag, reps)
        )
        spec = GwveSpec(size, family, t)
        rng = np.random.default_rng(replicate_seed(SEED, 200 + tag))
        gwve_counts = simulate_many(spec, depth, reps, rng)
        for n in range(1, depth + 1):
            formula = mean_b(spec, n)
            for label, sample in (("flow", flow_counts[:, n]), ("gwve", gwve_counts[:, n])):
                se = sample.std(ddof=1) / math.sqrt(reps)
                assert abs(sample.mean() - formula) <= 3 * se, (
                    size, family, t, n, label, sample.mean(), formula, se,
                )
    _pass(5, "flow survivor counts match direct GWVE simulation and the exact "
             "mean formula within 3 SE on a 6-point grid, n = 1..10")


def test_criterion_06_dust_extinction_bridge():
    t = 0.5 * T0_2
    reps = 10_000
    depth = 30
    space = SpaceConfig(Alphabet(2), CANTOR, precision=depth + 10)
    counts = survivor_counts_batch(space, Constant(1.0), t, depth, _seeds(300, reps))
    freq = float((counts[:, depth] == 0).mean())
    exact = extinct_prob_by(GwveSpec(2, Constant(1.0), t), depth)
    se = math.sqrt(exact * (1 - exact) / reps)
    assert abs(freq - exact) <= 3 * se, (freq, exact, se)
    assert abs(freq - 0.4142) <= 0.015
    _pass(6, f"dust-empty frequency {freq:.4f} matches pgf value {exact:.4f} "
             f"within 3 SE at depth 30 (~0.4142)")


def test_criterion_07_dust_measure_fubini():
    # summable rates: the truncated mean is within 3e-12 of exp(-8/7)
    cases = [
        (Geometric(1.0, 0.125), 1.0, 12, math.exp(-8 / 7), 400),
        (Constant(1.0), 0.3, 10, None, 401),  # sum r_n diverges; matched truncation
        (Harmonic(1.0), 0.5, 10, None, 402),
    ]
    reps = 10_000
    for family, t, depth, headline, tag in cases:
        space = SpaceConfig(Alphabet(2), CANTOR, precision=depth + 10)
        counts = survivor_counts_batch(space, family, t, depth, _seeds(tag, reps))
        measures = counts[:, depth] / float(2**depth)
        exact = math.exp(-t * partial_sum(family, 0, depth))
        se = measures.std(ddof=1) / math.sqrt(reps)
        assert abs(measures.mean() - exact) <= 3 * se, (family, measures.mean(), exact, se)
        if headline is not None:
            assert abs(exact - headline) < 1e-9
            assert abs(measures.mean() - headline) <= 3 * se
    _pass(7, "mean dust measure = exp(-t * sum of truncated rates) within 3 SE; "
             "exp(-8/7) ~ 0.3189 for geometric(1, 1/8) at t=1")


def test_criterion_08_flow_property():
    families = [Constant(1.0), Geometric(1.0, 0.5), Truncated(Constant(2.0), 4)]
    rng = np.random.default_rng(replicate_seed(SEED, 500))
    for geometry in (CANTOR, HALF_OPEN):
        for family in families:
            space = SpaceConfig(Alphabet(2), geometry, precision=22)
            store = EventStore(space, family, (0.0, 1.0), 12, replicate_seed(SEED, 501))
            report = verify_flow_property(store, 1000, rng)
            assert report.violations == 0, report.first_counterexample
    # negative control: a stream that mutates between the direct and the
    # composed evaluation must be caught
    space = SpaceConfig(Alphabet(2), CANTOR, precision=22)
    tag = 502
    store = EventStore(space, Constant(1.0), (0.0, 1.0), 8, replicate_seed(SEED, tag))
    while not store.events(ROOT):  # the control needs a root event to remove
        tag += 1
        store = EventStore(space, Constant(1.0), (0.0, 1.0), 8, replicate_seed(SEED, tag))
    samples = []
    for _ in range(200):
        x = sample_uniform_point(ROOT, 22, space.alphabet, rng)
        s, t, v = np.sort(rng.random(3)).tolist()
        samples.append((x, s, t, v))
    direct = [apply_flow(store, x, s, v) for x, s, t, v in samples]
    store._events[ROOT] = ()
    store._counts[ROOT] = 0
    composed = [apply_flow(store, apply_flow(store, x, s, t), t, v) for x, s, t, v in samples]
    assert any(d != c for d, c in zip(direct, composed)), "corruption went undetected"
    _pass(8, "6000 composition checks pass across 2 geometries x 3 families; "
             "memo corruption is detected")


def test_criterion_09_genealogy_invariance():
    for size, family, t in [(2, Constant(1.0), 0.5), (3, Geometric(1.0, 0.5), 0.8)]:
        cantor = SpaceConfig(Alphabet(size), CANTOR, precision=16)
        interval = SpaceConfig(Alphabet(size), HALF_OPEN, precision=16)
        for seed in _seeds(600 + size, 25):
            dec_c = decompose(EventStore(cantor, family, (0.0, t), 8, seed), t)
            dec_i = decompose(EventStore(interval, family, (0.0, t), 8, seed), t)
            assert dec_c.blocks == dec_i.blocks
            assert dec_c.dust_words == dec_i.dust_words
            assert dec_c.dust_measure == dec_i.dust_measure
    _pass(9, "identical seeds give word-identical block decompositions under "
             "both geometries")


def test_criterion_10_dimension():
    depth = 25
    space = SpaceConfig(Alphabet(2), CANTOR, precision=depth + 10)
    cases = [
        (0.25 * T0_2, 260, 0.05),
        (0.5 * T0_2, 400, 0.05),
        (0.75 * T0_2, 750, 0.08),
    ]
    empirical = []
    analytic = []
    for tag, (t, reps, tolerance) in enumerate(cases):
        trees = survivor_trees_batch(space, Constant(1.0), t, depth, _seeds(700 + tag, reps))
        expected = dust_dimension_analytic(2, 1.0, t)
        report = dust_dimension_empirical(trees, analytic_dim=expected)
        if t == 0.5 * T0_2:
            assert report.replicates_used >= 200
            assert expected == pytest.approx(0.315464876785729, abs=1e-9)
        assert abs(report.empirical_dim - expected) <= tolerance, (t, report)
        empirical.append(report.empirical_dim)
        analytic.append(expected)
    emp = np.asarray(empirical)
    ana = np.asarray(analytic)
    r_squared = 1.0 - ((emp - ana) ** 2).sum() / ((emp - emp.mean()) ** 2).sum()
    assert r_squared > 0.95, (r_squared, empirical, analytic)
    _pass(10, f"empirical dimension tracks (log2 - t)/log3 on the t grid "
              f"(R^2 = {r_squared:.4f}); 0.5*t0 point = {empirical[1]:.4f} "
              f"vs 0.3155 within 0.05")


def test_criterion_11_small_instance_oracle():
    families = [
        Constant(1.0),
        Geometric(1.0, 0.5),
        Harmonic(1.0),
        CustomTable((0.3, 1.2, 0.7, 2.0, 0.1)),
    ]
    for size in (2, 3):
        for family in families:
            for t in (0.3, 0.9):
                spec = GwveSpec(size, family, t)
                for n in range(5):
                    oracle = gwve_extinction_dp(
                        size, [spec.survive_prob(k) for k in range(n + 1)]
                    )
                    assert abs(extinct_prob_by(spec, n) - oracle) < 1e-12
    _pass(11, "pgf extinction equals exhaustive DP enumeration to 1e-12 "
              "for n <= 4, |S| <= 3")


def test_criterion_12_block_structure():
    rng = np.random.default_rng(replicate_seed(SEED, 800))
    checked_blocks = 0
    for size, family in [(2, Constant(1.0)), (2, Geometric(1.0, 0.5)), (3, Constant(1.0))]:
        space = SpaceConfig(Alphabet(size), CANTOR, precision=16)
        for t in (0.35, 0.8):
            for seed in _seeds(810 + size, 10):
                store = EventStore(space, family, (0.0, t), 8, seed)
                dec = decompose(store, t)
                total = sum((b.mass for b in dec.blocks), start=Fraction(0))
                assert total + dec.dust_measure == 1  # exact rational identity
                atoms = [b.atom for b in dec.blocks]
                assert len(set(atoms)) == len(atoms)  # one atom per block
                for block in dec.blocks[:6]:
                    assert block.atom[: len(block.word)] == block.word
                    x = sample_uniform_point(block.word, 16, space.alphabet, rng)
                    assert apply_flow(store, x, 0.0, t) == block.atom
                    checked_blocks += 1
                for word in list(dec.dust_words)[:4]:
                    x = sample_uniform_point(word, 16, space.alphabet, rng)
                    lineage = trace_lineage(store, x, 0.0, t)
                    assert lineage.is_dust and lineage.final == x
    assert checked_blocks > 100
    _pass(12, "every realization: one complex per atom, dust points fixed, "
              "block masses + dust measure = 1 exactly")
