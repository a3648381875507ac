import numpy as np
import pytest

from mnam.schema import Dataset, FeatureMeta, ModelSpec

FEATS = tuple(FeatureMeta(n) for n in "abc")


class TestFeatureMeta:
    def test_transform_round_trip(self):
        f = FeatureMeta("a", negated=True, shift=2.0, scale=4.0)
        raw = np.array([-3.0, 0.0, 5.5])
        np.testing.assert_allclose(f.to_raw(f.to_model(raw)), raw, atol=1e-12)

    def test_cap_applied_before_scaling(self):
        f = FeatureMeta("a", cap=3.0, shift=1.0, scale=2.0)
        np.testing.assert_array_equal(f.to_model([7.0, 2.0]), [1.0, 0.5])

    def test_invalid(self):
        with pytest.raises(ValueError):
            FeatureMeta("a", kind="text")
        with pytest.raises(ValueError):
            FeatureMeta("a", scale=0.0)


class TestModelSpec:
    def test_valid(self):
        s = ModelSpec(FEATS, "classification", ((0, "increasing"), (1, "increasing")), ((0, 1),))
        assert s.has_constraints and s.is_normal_form() and s.index("c") == 2
        assert ModelSpec.from_dict(s.to_dict()) == s
        assert not s.without_constraints().has_constraints

    @pytest.mark.parametrize(
        "mono,pairs",
        [
            (((3, "increasing"),), ()),
            (((0, "up"),), ()),
            (((0, "increasing"), (0, "increasing")), ()),
            (((0, "increasing"),), ((0, 0),)),
            (((0, "increasing"),), ((0, 1),)),
            (((0, "increasing"), (1, "decreasing")), ((0, 1),)),
            (((0, "increasing"), (1, "increasing")), ((0, 1), (0, 1))),
        ],
    )
    def test_invalid(self, mono, pairs):
        with pytest.raises(ValueError):
            ModelSpec(FEATS, "classification", mono, pairs)

    def test_unknown_task(self):
        with pytest.raises(ValueError):
            ModelSpec(FEATS, "ranking")

    def test_with_features_checks_names(self):
        s = ModelSpec(FEATS)
        with pytest.raises(ValueError):
            s.with_features([FeatureMeta("z")] * 3)


class TestDataset:
    def test_column_major_and_read_only(self):
        d = Dataset(np.ones((3, 3)), np.zeros(3), FEATS)
        assert d.X.flags.f_contiguous and not d.X.flags.writeable
        with pytest.raises(ValueError):
            d.X[0, 0] = 2.0

    @pytest.mark.parametrize(
        "X,y",
        [(np.ones((3, 3)), np.zeros(2)), (np.ones((3, 2)), np.zeros(3)), (np.full((1, 3), np.nan), np.zeros(1)),
         (np.ones((1, 3)), np.array([0.5]))],
    )  # fmt: skip
    def test_invalid(self, X, y):
        with pytest.raises(ValueError):
            Dataset(X, y, FEATS, "classification")

    def test_model_space_round_trip(self):
        fs = (FeatureMeta("a", shift=1.0, scale=2.0), FeatureMeta("b", negated=True))
        raw = np.array([[3.0, 4.0], [5.0, -1.0]])
        d = Dataset(np.zeros((2, 2)), np.zeros(2), fs, "regression")
        X = d.to_model_space(raw)
        np.testing.assert_allclose(Dataset(X, np.zeros(2), fs, "regression").to_raw_space(), raw)
