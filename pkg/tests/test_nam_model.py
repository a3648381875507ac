import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mnam import feature_net as fn
from mnam import nam_model as nm
from mnam.nam_model import FcnnModel, NamModel

from conftest import spec_for


def random_model(rng, p=3, task="classification", scale=1.0):
    return NamModel(rng.normal(), rng.normal(scale=scale, size=(p, 7)), spec_for(p, task))


class TestPrediction:
    def test_zero_nets_give_intercept(self):
        m = NamModel(0.3, np.zeros((4, 7)), spec_for(4))
        assert nm.predict_raw(m, np.array([1.0, -2.0, 5.0, 0.0])) == 0.3

    def test_additivity_by_construction(self, rng):
        m = random_model(rng, p=2, task="regression")
        x = np.array([0.4, -1.1])
        want = m.intercept + fn.forward(m.params[0], 0.4) + fn.forward(m.params[1], -1.1)
        assert nm.predict_raw(m, x) == pytest.approx(want, abs=1e-14)

    def test_sum_of_feature_forwards(self, rng):
        m = random_model(rng, p=5)
        X = rng.normal(size=(20, 5))
        want = m.intercept + sum(fn.forward(m.nets[j], X[:, j]) for j in range(5))
        np.testing.assert_allclose(nm.predict_raw(m, X), want, rtol=1e-13)
        np.testing.assert_allclose(nm.contributions(m, X).sum(axis=1) + m.intercept, want, rtol=1e-13)

    def test_logistic_link(self):
        spec = spec_for(1, "classification")
        assert nm.predict(NamModel(0.0, np.zeros((1, 7)), spec), np.array([1.0])) == 0.5
        assert nm.predict(NamModel(2.0, np.zeros((1, 7)), spec), np.array([1.0])) == pytest.approx(
            1 / (1 + math.exp(-2.0)), abs=1e-15
        )
        assert nm.predict(NamModel(2.0, np.zeros((1, 7)), spec), np.array([1.0])) == pytest.approx(0.880797, abs=1e-6)

    def test_identity_link_for_regression(self, rng):
        m = random_model(rng, task="regression")
        X = rng.normal(size=(4, 3))
        np.testing.assert_array_equal(nm.predict(m, X), nm.predict_raw(m, X))

    def test_dimension_mismatch(self, rng):
        m = random_model(rng)
        with pytest.raises(ValueError):
            nm.predict_raw(m, np.zeros(4))
        with pytest.raises(ValueError):
            nm.predict_raw(m, np.zeros((2, 2)))

    def test_params_shape_checked(self):
        with pytest.raises(ValueError):
            NamModel(0.0, np.zeros((2, 7)), spec_for(3))

    def test_model_is_immutable(self, rng):
        m = random_model(rng)
        with pytest.raises(ValueError):
            m.params[0, 0] = 1.0


class TestLoss:
    def test_perfect_regression_fit(self):
        m = NamModel(1.5, np.zeros((1, 7)), spec_for(1, "regression"))
        assert nm.loss(m, (np.ones((3, 1)), np.full(3, 1.5))) == 0.0

    def test_constant_half_probability(self):
        m = NamModel(0.0, np.zeros((1, 7)), spec_for(1, "classification"))
        y = np.array([0.0, 1.0, 1.0, 0.0])
        assert nm.loss(m, (np.zeros((4, 1)), y)) == pytest.approx(math.log(2), rel=1e-14)

    def test_three_row_manual_computation(self):
        # f(x) = 2 * sigmoid(x) - 1, intercept 0.5
        params = np.array([[1.0, 0, 0, 0, 2.0, 0, -1.0]])
        m = NamModel(0.5, params, spec_for(1, "classification"))
        X = np.array([[-1.0], [0.0], [2.0]])
        y = np.array([0.0, 1.0, 1.0])
        raws = [0.5 + 2 / (1 + math.exp(1.0)) - 1, 0.5, 0.5 + 2 / (1 + math.exp(-2.0)) - 1]
        ps = [1 / (1 + math.exp(-r)) for r in raws]
        want = -(math.log(1 - ps[0]) + math.log(ps[1]) + math.log(ps[2])) / 3
        assert nm.loss(m, (X, y)) == pytest.approx(want, rel=1e-13)

    def test_clamped_probabilities_keep_loss_finite(self):
        m = NamModel(80.0, np.zeros((1, 7)), spec_for(1, "classification"))
        value = nm.loss(m, (np.zeros((1, 1)), np.zeros(1)))
        # 1 - 1e-12 is not exactly representable, hence the loose tolerance
        assert value == pytest.approx(-math.log(1e-12), rel=1e-5)

    def test_empty_and_bad_labels(self):
        m = NamModel(0.0, np.zeros((1, 7)), spec_for(1, "classification"))
        with pytest.raises(ValueError):
            nm.loss(m, (np.zeros((0, 1)), np.zeros(0)))
        with pytest.raises(ValueError):
            nm.loss(m, (np.zeros((1, 1)), np.array([2.0])))

    @pytest.mark.parametrize("task", ["regression", "classification"])
    def test_gradient_finite_difference(self, rng, task):
        h = 1e-6
        for _ in range(50):
            m = random_model(rng, p=2, task=task)
            X = rng.normal(size=(8, 2))
            y = rng.integers(0, 2, 8).astype(float) if task == "classification" else rng.normal(size=8)
            g0, gp = nm.loss_gradient(m, (X, y))
            fd0 = (nm.loss(m.replace(intercept=m.intercept + h), (X, y)) - nm.loss(m.replace(intercept=m.intercept - h), (X, y))) / (2 * h)
            assert g0 == pytest.approx(fd0, rel=1e-5, abs=1e-8)
            fd = np.empty_like(gp)
            for idx in np.ndindex(gp.shape):
                e = np.zeros_like(gp)
                e[idx] = h
                fd[idx] = (nm.loss(m.replace(params=m.params + e), (X, y)) - nm.loss(m.replace(params=m.params - e), (X, y))) / (2 * h)
            np.testing.assert_allclose(gp, fd, rtol=1e-5, atol=1e-8)


class TestShapeFunction:
    def test_constant_net_centres_to_zero(self):
        m = NamModel(0.0, np.array([[0, 0, 0, 0, 0, 0, 4.0]]), spec_for(1))
        np.testing.assert_array_equal(nm.shape_function(m, 0, np.linspace(-1, 1, 7))[:, 1], 0.0)

    def test_logistic_symmetry(self):
        m = NamModel(0.0, np.array([[1.0, 0, 0, 0, 1.0, 0, 0]]), spec_for(1))
        values = nm.shape_function(m, 0, np.linspace(-2, 2, 9))[:, 1]
        np.testing.assert_allclose(values, -values[::-1], atol=1e-15)

    def test_forward_minus_mean(self, rng):
        m = random_model(rng, p=2)
        grid = np.linspace(-1, 1, 5)
        values = fn.forward(m.params[1], grid)
        np.testing.assert_allclose(nm.shape_function(m, 1, grid)[:, 1], values - values.mean(), rtol=1e-14)

    def test_extrapolation_warns_and_empty_grid_fails(self, rng):
        m = random_model(rng, p=1)
        with pytest.warns(UserWarning, match="extrapolates"):
            nm.shape_function(m, 0, [10.0])
        with pytest.raises(ValueError):
            nm.shape_function(m, 0, [])


class TestFcnn:
    def test_constant_when_weights_zero(self):
        m = FcnnModel(np.zeros((4, 2)), np.zeros(4), np.zeros(4), 0.8, spec_for(2))
        np.testing.assert_array_equal(nm.fcnn_forward(m, np.ones((3, 2))), 0.8)

    def test_contains_single_feature_net(self, rng):
        v = rng.normal(size=7)
        m = FcnnModel(v[0:2].reshape(2, 1), v[2:4], v[4:6], v[6] + 0.25, spec_for(1))
        x = rng.normal(size=6)
        np.testing.assert_allclose(nm.fcnn_forward(m, x[:, None]), fn.forward(v, x) + 0.25, rtol=1e-13)

    def test_hidden_width_defaults_to_twice_features(self, rng):
        m = nm.init_fcnn(spec_for(6), rng)
        assert m.hidden == 12
        assert m.n_params == 2 * 36 + 4 * 6 + 1
        assert nm.init_nam(spec_for(6), rng).n_params == 7 * 6 + 1

    def test_gradient_finite_difference(self, rng):
        # 500 random dense nets, relative error below 1e-5
        h = 1e-6
        for trial in range(500):
            task = "classification" if trial % 2 else "regression"
            m = nm.init_fcnn(spec_for(2, task), rng, hidden=3)
            m = m.from_flat(rng.normal(size=m.flat().size))
            X = rng.normal(size=(5, 2))
            y = rng.integers(0, 2, 5).astype(float) if task == "classification" else rng.normal(size=5)
            g = nm.fcnn_loss_gradient(m, (X, y))
            theta = m.flat()
            fd = np.empty_like(theta)
            for k in range(theta.size):
                e = np.zeros_like(theta)
                e[k] = h
                fd[k] = (nm.fcnn_loss(m.from_flat(theta + e), (X, y)) - nm.fcnn_loss(m.from_flat(theta - e), (X, y))) / (2 * h)
            assert np.max(np.abs(g - fd) / np.maximum(1.0, np.abs(fd))) < 1e-5


class TestSerialization:
    def test_nam_round_trip_is_exact(self, rng, tmp_path):
        m = random_model(rng, p=3)
        nm.save_model(m, tmp_path / "m.json")
        back = nm.load_model(tmp_path / "m.json")
        np.testing.assert_array_equal(back.params, m.params)
        assert back.intercept == m.intercept and back.spec == m.spec

    def test_fcnn_round_trip_is_exact(self, rng, tmp_path):
        m = nm.init_fcnn(spec_for(2), rng)
        m = m.from_flat(rng.normal(size=m.flat().size))
        nm.save_model(m, tmp_path / "f.json")
        back = nm.load_model(tmp_path / "f.json")
        np.testing.assert_array_equal(back.flat(), m.flat())

    def test_json_names_parameters(self, rng):
        d = nm.to_dict(random_model(rng, p=2))
        assert d["kind"] == "nam" and set(d["params"]) == {"x0", "x1"}
        assert d["param_names"] == list(fn.PARAM_NAMES)
        json.dumps(d)

    def test_unknown_kind(self, rng):
        d = nm.to_dict(random_model(rng, p=1)) | {"kind": "forest"}
        with pytest.raises(ValueError):
            nm.from_dict(d)


class TestProperties:
    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(0, 2), st.floats(-4, 4), st.floats(-4, 4))
    def test_additivity_exact_difference(self, seed, i, a, b):
        rng = np.random.default_rng(seed)
        m = random_model(rng, p=3, task="regression")
        x = rng.normal(size=3)
        x2 = x.copy()
        x[i], x2[i] = a, b
        diff = nm.predict_raw(m, x) - nm.predict_raw(m, x2)
        want = fn.forward(m.params[i], a) - fn.forward(m.params[i], b)
        assert diff == pytest.approx(want, abs=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_probabilities_strictly_inside_unit_interval(self, seed):
        rng = np.random.default_rng(seed)
        m = random_model(rng, p=3, scale=3.0)
        p = nm.predict(m, rng.normal(scale=2, size=(50, 3)))
        assert np.all((p > 0) & (p < 1))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_negated_input_matches_flipped_net(self, seed):
        # a net fed -x equals the net with first-layer weights negated fed x
        rng = np.random.default_rng(seed)
        m = random_model(rng, p=2, task="regression")
        flipped = m.params.copy()
        flipped[0, fn.W1] *= -1
        m2 = m.replace(params=flipped)
        X = rng.normal(size=(10, 2))
        Xn = X.copy()
        Xn[:, 0] *= -1
        np.testing.assert_allclose(nm.predict_raw(m, Xn), nm.predict_raw(m2, X), rtol=1e-13)
        np.testing.assert_allclose(
            fn.input_derivative(m.params[0], -X[:, 0]), -fn.input_derivative(flipped[0], X[:, 0]), rtol=1e-12, atol=1e-15
        )
