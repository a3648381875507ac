import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mnam import simulation as sim
from mnam.simulation import CurvePoint, SimConfigIndividual, SimConfigPairwise


def curve(means):
    return [CurvePoint(x, m, 0 if m is None else 1) if m is not None else CurvePoint(x, math.nan, 0)
            for x, m in enumerate(means)]  # fmt: skip


class TestCurve:
    def test_means_and_counts(self):
        c = sim.empirical_marginal_curve(np.array([0, 0, 1, 3, 7]), np.array([1.0, 3.0, 5.0, 2.0, 9.0]), 4)
        assert [pt.count for pt in c] == [2, 1, 0, 1, 0]
        assert c[0].mean == 2.0 and c[1].mean == 5.0 and math.isnan(c[2].mean)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            sim.empirical_marginal_curve(np.zeros(3), np.zeros(2), 4)


class TestIndividualCheck:
    def test_monotone_curve(self):
        assert not sim.is_violated_individual(curve([0.1, 0.2, 0.2, 0.5]))

    def test_single_drop(self):
        assert sim.is_violated_individual(curve([0.1, 0.3, 0.2, 0.5]))

    def test_empty_levels_are_bridged(self):
        assert sim.is_violated_individual(curve([0.1, 0.5, None, 0.4]))
        assert not sim.is_violated_individual(curve([0.1, None, None, 0.4]))

    def test_fewer_than_two_levels_is_vacuous(self):
        assert not sim.is_violated_individual(curve([0.3, None, None]))

    def test_all_pairs_mode(self):
        c = curve([0.1, 0.5, 0.4, 0.6])
        assert sim.is_violated_individual(c, "all_pairs")
        with pytest.raises(ValueError):
            sim.is_violated_individual(c, "sideways")

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.one_of(st.none(), st.floats(-5, 5)), min_size=1, max_size=8))
    def test_modes_agree(self, means):
        # a drop between neighbours exists iff some later level lies below an earlier one
        c = curve(means)
        assert sim.is_violated_individual(c, "adjacent") == sim.is_violated_individual(c, "all_pairs")


class TestPairwiseCheck:
    def test_dominant_rises_more(self):
        assert not sim.is_violated_pairwise(curve([0, 0.5, 0.9]), curve([0, 0.2, 0.3]))

    def test_dominated_rises_more(self):
        assert sim.is_violated_pairwise(curve([0, 0.1, 0.9]), curve([0, 0.2, 0.3]))

    def test_missing_levels_skipped(self):
        assert not sim.is_violated_pairwise(curve([0, None, 0.1]), curve([0, 0.9, 1.0]))


class TestConfigs:
    @pytest.mark.parametrize("kwargs", [dict(c=0.5), dict(sigma=-1), dict(poisson_rate=0), dict(n_reps=0)])
    def test_individual_invalid(self, kwargs):
        with pytest.raises(ValueError):
            SimConfigIndividual(**kwargs)

    def test_pairwise_requires_alpha_at_least_beta(self):
        with pytest.raises(ValueError):
            SimConfigPairwise(alpha=0.9, beta=1.0)

    def test_pairwise_defaults_are_the_published_setting(self):
        c = SimConfigPairwise()
        assert (c.c, c.alpha, c.beta, c.rate1, c.rate2, c.sigma) == (10.0, 1.2, 1.0, 0.5, 0.4, 0.2)


class TestSimulation:
    def test_noiseless_log_utility_is_never_violated(self):
        r = sim.simulate_individual(SimConfigIndividual(sigma=0.0, n_reps=50, n_samples=2000))
        assert r.ratio() == 0.0

    def test_large_noise_small_sample_is_nearly_coin_flip(self):
        r = sim.simulate_individual(SimConfigIndividual(sigma=100.0, n_samples=50, poisson_rate=2.0, n_reps=300))
        assert r.ratio() > 0.5

    def test_seeded_and_reproducible(self):
        cfg = SimConfigIndividual(n_reps=40, n_samples=1000, seed=9)
        assert sim.simulate_individual(cfg).ratios == sim.simulate_individual(cfg).ratios

    def test_replications_are_independent_streams(self):
        # the first 20 replications do not depend on how many follow
        a = sim.simulate_individual(SimConfigIndividual(n_reps=20, n_samples=500, seed=2))
        gens = sim._rep_generators(2, 40)[:20]
        again = sum(
            sim._check_individual(*sim._bin(x, np.log(10.0 + x) + g.normal(0, 0.2, 500), 4), "adjacent")
            for g in gens for x in [g.poisson(0.5, 500)]
        )  # fmt: skip
        assert a.ratios["x"].violations == again

    def test_stderr(self):
        r = sim.Ratio(25, 100)
        assert r.stderr == pytest.approx(math.sqrt(0.25 * 0.75 / 100))

    def test_pairwise_result_keys(self):
        r = sim.simulate_pairwise(SimConfigPairwise(n_reps=10, n_samples=500))
        assert set(r.ratios) == {"x1", "x2", "pairwise"}
        assert set(r.to_dict()["ratios"]) == {"x1", "x2", "pairwise"}

    def test_pairwise_equal_effects_are_symmetric_coin(self):
        # with identical effects and rates the increments tie in distribution
        cfg = SimConfigPairwise(alpha=1.0, beta=1.0, rate1=0.5, rate2=0.5, n_reps=300, n_samples=3000)
        assert 0.6 < sim.simulate_pairwise(cfg).ratio("pairwise") < 1.0


class TestSweep:
    def test_table1_has_twelve_cells(self):
        cfgs = sim.table1_configs(n_reps=10)
        assert len(cfgs) == 12
        assert {p for p, _, _ in cfgs} == {"c", "sigma", "poisson_rate"}
        for param, value, c in cfgs:
            assert getattr(c, param) == value

    def test_csv_columns(self):
        res = [("demo", "c", sim.simulate_individual(SimConfigIndividual(n_reps=5, n_samples=200)))]
        rows = list(csv.DictReader(io.StringIO(sim.sweep_csv(res))))
        assert list(rows[0]) == sim.SWEEP_COLUMNS
        assert rows[0]["n_reps"] == "5" and rows[0]["target"] == "x"

    def test_published_values(self):
        assert sim.TABLE1[("c", 5)] == 0.018
        assert sim.TABLE1[("sigma", 0.4)] == 0.249
        assert sim.TABLE1[("poisson_rate", 0.3)] == 0.298
        assert sim.PAIRWISE_PUBLISHED == {"x1": 0.054, "x2": 0.216, "pairwise": 0.692}
