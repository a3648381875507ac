import numpy as np
import pytest

from mnam import feature_net as fn
from mnam import monotonicity as mono
from mnam import nam_model as nm
from mnam import trainer as T
from mnam.schema import ModelSpec

from conftest import make_data

FAST = T.TrainConfig(seed=0, epochs=400, step_size=0.05)


def sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def anti_monotone(seed=0, n=400):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-2, 2, n)
    return make_data(x, -x + rng.normal(0, 0.3, n), monotone=(0,))


class TestConfig:
    @pytest.mark.parametrize(
        "kwargs", [dict(step_size=0), dict(escalation_factor=1.0), dict(max_escalations=0), dict(optimizer="sgd")]
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            T.TrainConfig(**kwargs)

    def test_round_trip(self):
        cfg = T.TrainConfig(seed=4, epochs=10)
        assert T.TrainConfig.from_dict(cfg.to_dict()) == cfg


class TestOptimizers:
    def test_adam_first_step_is_step_size_times_sign(self):
        opt = T.Adam(3, 0.1)
        theta = opt.update(np.zeros(3), np.array([2.0, -0.5, 0.0]))
        np.testing.assert_allclose(theta, [-0.1, 0.1, 0.0], atol=1e-7)

    def test_gradient_descent_step(self):
        opt = T.GradientDescent(2, 0.5)
        np.testing.assert_array_equal(opt.update(np.ones(2), np.array([1.0, -2.0])), [0.5, 2.0])


class TestTrainNam:
    def test_recovers_logistic_generator(self):
        rng = np.random.default_rng(1)
        x = rng.uniform(-2, 2, 500)
        data, spec = make_data(x, sigmoid(2 * x) + rng.normal(0, 0.02, 500))
        m = T.train_nam(data, spec, T.TrainConfig(seed=0, epochs=3000, step_size=0.05))
        grid = np.linspace(-2, 2, 101)
        rmse = np.sqrt(np.mean((nm.predict(m, grid[:, None]) - sigmoid(2 * grid)) ** 2))
        assert rmse < 0.05

    def test_constant_labels_give_label_mean(self):
        rng = np.random.default_rng(2)
        data, spec = make_data(rng.normal(size=(200, 2)), np.ones(200), task="classification")
        m = T.train_nam(data, spec, FAST)
        assert np.all(nm.predict(m, data.X) > 0.95)

    def test_bit_identical_reruns(self):
        data, spec = anti_monotone()
        a = T.train_nam_stage(data, spec, FAST, lam=0.5)
        b = T.train_nam_stage(data, spec, FAST, lam=0.5)
        np.testing.assert_array_equal(a.model.params, b.model.params)
        assert a.objective == b.objective

    def test_minibatch_is_deterministic(self):
        data, spec = anti_monotone()
        cfg = T.TrainConfig(seed=3, epochs=20, batch_size=64)
        a, b = T.train_nam(data, spec, cfg), T.train_nam(data, spec, cfg)
        np.testing.assert_array_equal(a.params, b.params)

    def test_plain_gradient_descent_is_monotone(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(300, 2))
        y = (X[:, 0] - X[:, 1] + rng.normal(size=300) > 0).astype(float)
        data, spec = make_data(X, y, task="classification", monotone=(0,))
        stage = T.train_nam_stage(data, spec, T.TrainConfig(epochs=300, optimizer="gd", step_size=0.05), lam=1.0)
        assert np.all(np.diff(stage.objective) <= 1e-12)

    def test_divergence_is_reported(self):
        data, spec = anti_monotone()
        with pytest.raises(T.TrainingDivergedError):
            with np.errstate(all="ignore"):
                T.train_nam(data, spec, T.TrainConfig(epochs=50, optimizer="gd", step_size=1e6))

    def test_spec_must_match_data(self):
        data, spec = anti_monotone()
        other, _ = make_data(np.zeros((3, 1)), np.zeros(3), names=["z"])
        with pytest.raises(ValueError):
            T.train_nam(other, spec, FAST)

    def test_decreasing_constraints_must_be_normalized(self):
        data, spec = anti_monotone()
        with pytest.raises(ValueError, match="normalized"):
            T.train_nam(data, ModelSpec(spec.features, spec.task, ((0, "decreasing"),)), FAST)

    def test_warm_start_bookkeeping(self):
        data, spec = anti_monotone()
        pcfg = mono.penalty_config_from_data(spec, data, margin=FAST.margin)
        first = T.train_nam_stage(data, spec, FAST, 0.1, 0.0, penalty=pcfg)
        second = T.train_nam_stage(data, spec, FAST, 1.0, 0.0, init=first.model, penalty=pcfg)
        want = first.loss + 1.0 * first.h1
        assert second.objective[0] == pytest.approx(want, rel=1e-12)


class TestTrainMnam:
    def test_monotone_data_needs_no_escalation(self):
        rng = np.random.default_rng(5)
        x = rng.uniform(-2, 2, 400)
        data, spec = make_data(x, x + rng.normal(0, 0.3, 400), monotone=(0,))
        model, log = T.train_mnam(data, spec, FAST)
        assert len(log) == 1 and log.rounds[0].lam == 0.0
        np.testing.assert_array_equal(model.params, T.train_nam(data, spec, FAST).params)

    def test_anti_monotone_data_is_flattened(self):
        data, spec = anti_monotone()
        model, log = T.train_mnam(data, spec, FAST)
        assert log.rounds[-1].lam > 0
        assert mono.certify(model, 1000, data).passed
        assert fn.input_derivative(model.params[0], np.linspace(-2, 2, 2001)).min() >= 0
        lams = [r.lam for r in log.rounds]
        assert lams == sorted(lams)

    def test_pairwise_constraint_enforced(self):
        rng = np.random.default_rng(6)
        X = rng.uniform(0, 3, size=(500, 2))
        y = 0.2 * X[:, 0] + 1.0 * X[:, 1] + rng.normal(0, 0.1, 500)
        data, spec = make_data(X, y, monotone=(0, 1), pairs=((0, 1),))
        model, log = T.train_mnam(data, spec, FAST)
        assert log.rounds[-1].eta > 0
        report = mono.certify(model, 1000, data)
        assert report.passed and report.pairwise[0].minimum >= 0

    def test_budget_exhaustion_raises_with_log(self):
        data, spec = anti_monotone()
        cfg = T.TrainConfig(epochs=50, step_size=0.05, max_escalations=1, lambda_init=1e-3)
        with pytest.raises(T.MonotonicityNotAchieved) as info:
            T.train_mnam(data, spec, cfg)
        assert len(info.value.log) == 2 and info.value.model is not None

    def test_unconstrained_spec_equals_train_nam(self):
        data, spec = anti_monotone()
        spec = spec.without_constraints()
        model, log = T.train_mnam(data, spec, FAST)
        np.testing.assert_array_equal(model.params, T.train_nam(data, spec, FAST).params)

    def test_log_csv(self):
        data, spec = anti_monotone()
        _, log = T.train_mnam(data, spec, FAST)
        lines = log.to_csv().splitlines()
        assert lines[0] == "round,lambda,eta,loss,h1,h2"
        assert len(lines) == len(log) + 1


class TestTrainFcnn:
    def test_constant_labels(self):
        rng = np.random.default_rng(7)
        data, spec = make_data(rng.normal(size=(200, 2)), np.zeros(200), task="classification")
        m = T.train_fcnn(data, spec, FAST)
        assert np.all(nm.fcnn_predict(m, data.X) < 0.05)

    def test_deterministic(self):
        data, spec = anti_monotone()
        a, b = T.train_fcnn(data, spec, FAST), T.train_fcnn(data, spec, FAST)
        np.testing.assert_array_equal(a.flat(), b.flat())

    def test_interaction_beats_additive_model(self):
        rng = np.random.default_rng(8)
        X = rng.uniform(-1, 1, size=(400, 2))
        y = X[:, 0] * X[:, 1] * 4
        data, spec = make_data(X, y)
        cfg = T.TrainConfig(seed=0, epochs=3000, step_size=0.05)
        dense = nm.fcnn_loss(T.train_fcnn(data, spec, cfg), data)
        additive = nm.loss(T.train_nam(data, spec, cfg), data)
        assert dense < additive
        # the best additive fit of x0*x1 is the constant zero: loss near var(y)
        assert additive > 0.9 * np.var(y)
