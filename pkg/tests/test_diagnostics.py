import math

import numpy as np
import pytest
from scipy import signal

from quarterstep import (DegenerateSeriesError, GaussianTarget,
                         InvalidInputError, LogisticTarget, SamplerSpec,
                         autocorrelation_time, benchmark, gen_synthetic,
                         marginal_accuracy, stepsize_scaling)
from quarterstep.diagnostics import outer_steps_for_budget
from quarterstep.diagnostics import test_function_l1 as l1_norm


class TestMarginalAccuracy:
    def test_identical_samples_give_one(self):
        rng = np.random.default_rng(0)
        sample = rng.standard_normal((500, 3))
        report = marginal_accuracy(sample, sample, bins=20)
        assert report.ma == 1.0
        np.testing.assert_array_equal(report.per_coordinate_tv, np.zeros(3))

    def test_disjoint_supports_give_zero(self):
        rng = np.random.default_rng(1)
        a = rng.uniform(0.0, 1.0, size=(300, 1))
        b = rng.uniform(5.0, 6.0, size=(300, 1))
        assert marginal_accuracy(a, b, bins=10).ma == pytest.approx(0.0)

    def test_two_bin_hand_case(self):
        sample = np.full((20, 1), 0.2)
        reference = np.concatenate([np.full((10, 1), 0.2), np.full((10, 1), 0.8)])
        report = marginal_accuracy(sample, reference, bins=2)
        assert report.per_coordinate_tv[0] == pytest.approx(1.0)
        assert report.ma == pytest.approx(0.5)

    def test_symmetry(self):
        rng = np.random.default_rng(2)
        a = rng.standard_normal((400, 2))
        b = rng.standard_normal((400, 2)) + 0.3
        assert marginal_accuracy(a, b, bins=25).ma == pytest.approx(
            marginal_accuracy(b, a, bins=25).ma, abs=1e-15)

    def test_invariant_under_shared_permutation(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((300, 4))
        b = rng.standard_normal((350, 4)) * 1.2
        perm = rng.permutation(4)
        assert marginal_accuracy(a, b, bins=10).ma == pytest.approx(
            marginal_accuracy(a[:, perm], b[:, perm], bins=10).ma, abs=1e-15)

    def test_degenerate_equal_constants(self):
        a = np.zeros((50, 1))
        b = np.zeros((60, 1))
        assert marginal_accuracy(a, b, bins=5).ma == 1.0

    def test_constant_vs_spread_coordinate(self):
        a = np.zeros((50, 1))
        b = np.concatenate([np.zeros((30, 1)), np.ones((30, 1))])
        report = marginal_accuracy(a, b, bins=4)
        assert 0.0 < report.ma < 1.0

    def test_minimum_sample_size_enforced(self):
        with pytest.raises(InvalidInputError):
            marginal_accuracy(np.zeros((9, 1)), np.zeros((50, 1)), bins=5)


class TestAutocorrelationTime:
    def test_iid_is_near_one(self):
        x = np.random.default_rng(4).standard_normal(100_000)
        report = autocorrelation_time(x)
        assert report.act == pytest.approx(1.0, abs=0.2)

    def test_ar1_matches_analytic(self):
        rng = np.random.default_rng(5)
        eps = rng.standard_normal(1_000_000)
        x = signal.lfilter([1.0], [1.0, -0.5], eps)[1000:]
        report = autocorrelation_time(x)
        assert report.act == pytest.approx(3.0, abs=0.3)

    def test_fixed_zero_lag_is_exactly_one(self):
        x = np.random.default_rng(6).standard_normal(500)
        report = autocorrelation_time(x, s_max=0)
        assert report.act == 1.0
        assert report.s_max == 0

    def test_fixed_lag_formula(self):
        x = np.random.default_rng(7).standard_normal(2000)
        report = autocorrelation_time(x, s_max=3)
        assert report.act == pytest.approx(
            1.0 + 2.0 * float(np.sum(report.rho[1:4])))

    def test_constant_series_raises(self):
        with pytest.raises(DegenerateSeriesError):
            autocorrelation_time(np.ones(500))

    def test_short_series_rejected(self):
        with pytest.raises(InvalidInputError):
            autocorrelation_time(np.arange(50.0))


class TestTestFunction:
    def test_examples(self):
        rows = np.array([[1.0, -2.0, 3.0], [0.0, 0.0, 0.0], [1.0, 1.0, 1.0]])
        np.testing.assert_allclose(l1_norm(rows), [6.0, 0.0, 3.0])

    def test_d_ones(self):
        d = 11
        np.testing.assert_allclose(l1_norm(np.ones((1, d))), [float(d)])


def small_benchmark(master_seed=77, eta_grid=(0.2, 0.4), budget=1500):
    data = gen_synthetic(5, 5, seed=1)
    target = LogisticTarget(data.X, data.Y, np.eye(5))
    T = math.pi / 3
    templates = [
        SamplerSpec(kind="uhmc", i_max=1, seed=master_seed, eta=0.2, T=T),
        SamplerSpec(kind="mala", i_max=1, seed=master_seed, eta=0.2),
    ]
    reference = SamplerSpec(kind="mala", i_max=4000, seed=master_seed, eta=0.3)
    return benchmark(target, templates, list(eta_grid), reference,
                     bins=10, budget=budget, master_seed=master_seed)


class TestBenchmark:
    def test_budget_arithmetic(self):
        assert outer_steps_for_budget("uhmc", 20_000, 1.0, 0.1) == 2000
        assert outer_steps_for_budget("uhmc", 20_000, math.pi / 3, 0.5) == 10_000
        assert outer_steps_for_budget("mala", 20_000, None, 0.3) == 20_000
        with pytest.raises(InvalidInputError):
            outer_steps_for_budget("uhmc", 3, 1.0, 0.1)

    def test_cells_have_sane_values(self):
        report = small_benchmark()
        assert len(report.cells) == 4
        for cell in report.cells:
            assert cell.error is None
            assert 0.0 <= cell.ma <= 1.0
            assert cell.act >= 0.8
            assert cell.grad_evals > 0

    def test_cells_independent_of_sweep_order(self):
        fwd = small_benchmark(eta_grid=(0.2, 0.4))
        rev = small_benchmark(eta_grid=(0.4, 0.2))
        key = lambda c: (c.kind, c.eta)
        for a, b in zip(sorted(fwd.cells, key=key), sorted(rev.cells, key=key)):
            assert (a.kind, a.eta, a.seed) == (b.kind, b.eta, b.seed)
            assert a.ma == b.ma and a.act == b.act
            assert a.grad_evals == b.grad_evals

    def test_failed_cell_marked_not_raised(self):
        data = gen_synthetic(4, 4, seed=2)
        target = LogisticTarget(data.X, data.Y, np.eye(4))
        templates = [SamplerSpec(kind="uhmc", i_max=1, seed=5, eta=0.2, T=0.5)]
        reference = SamplerSpec(kind="mala", i_max=2000, seed=5, eta=0.3)
        report = benchmark(target, templates, [0.2, 0.9], reference,
                           bins=8, budget=400, master_seed=5)
        by_eta = {c.eta: c for c in report.cells}
        assert by_eta[0.2].error is None
        assert by_eta[0.9].error is not None  # eta > T cannot form a trajectory

    def test_report_serialization(self, tmp_path):
        report = small_benchmark()
        jpath = tmp_path / "report.json"
        cpath = tmp_path / "report.csv"
        report.save_json(jpath)
        report.save_csv(cpath)
        import json
        payload = json.loads(jpath.read_text())
        assert payload["budget"] == 1500
        assert len(payload["cells"]) == 4
        lines = cpath.read_text().splitlines()
        assert lines[0].startswith("kind,eta,ma,act")
        assert len(lines) == 5

    def test_best_cell_selection(self):
        report = small_benchmark()
        best_ma = report.best_cell("uhmc", "ma")
        assert all(best_ma.ma >= c.ma for c in report.cells if c.kind == "uhmc")
        best_act = report.best_cell("mala", "act")
        assert all(best_act.act <= c.act for c in report.cells if c.kind == "mala")


class TestStepsizeScaling:
    def test_smoke_two_dimensions(self):
        result = stepsize_scaling([4, 16], eps=0.1, T=1.0, n_draws=5, seed=0,
                                  bisection_iters=12)
        assert result.eta_star.shape == (2,)
        assert np.all(result.eta_star > 0.0)
        assert result.eta_star[1] < result.eta_star[0]
        assert result.slope < 0.0

    def test_requires_two_points(self):
        with pytest.raises(InvalidInputError):
            stepsize_scaling([16], eps=0.1)
