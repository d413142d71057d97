import numpy as np
import pytest
from sklearn.base import clone

from lexifair.estimators import LexifairClassifier, LexifairRegressor
from lexifair.synth import gen_synth


def reg_data():
    ds, _ = gen_synth("reg", K=3, n_per_group=8, scale=0.15, skew=2.0, seed=3)
    return ds


def clf_data():
    ds, _ = gen_synth("clf", K=3, n_per_group=8, skew=1.0, seed=7)
    return ds


class TestLexifairRegressor:
    def test_fit_predict(self):
        ds = reg_data()
        est = LexifairRegressor(ell=2, alpha=0.1).fit(ds.X, ds.y, ds.membership)
        assert est.coef_.shape == (ds.d,)
        assert est.eta_.shape == (2,)
        assert est.group_errors_.shape == (ds.K,)
        preds = est.predict(ds.X)
        assert preds.shape == (ds.n,)
        np.testing.assert_allclose(preds, ds.X @ est.coef_)

    def test_group_index_lists_accepted(self):
        ds = reg_data()
        lists = [list(np.flatnonzero(row)) for row in ds.membership]
        est = LexifairRegressor(ell=1, alpha=0.2).fit(ds.X, ds.y, lists)
        assert est.coef_.shape == (ds.d,)

    def test_default_single_group(self):
        ds = reg_data()
        est = LexifairRegressor(ell=1, alpha=0.2).fit(ds.X, ds.y)
        assert est.group_errors_.shape == (1,)

    def test_clone_and_get_params(self):
        est = LexifairRegressor(ell=2, alpha=0.05, loss="logistic", radius=0.5)
        cloned = clone(est)
        assert cloned.get_params() == est.get_params()

    def test_determinism(self):
        ds = reg_data()
        a = LexifairRegressor(ell=1, alpha=0.2, seed=4).fit(ds.X, ds.y, ds.membership)
        b = LexifairRegressor(ell=1, alpha=0.2, seed=4).fit(ds.X, ds.y, ds.membership)
        np.testing.assert_array_equal(a.coef_, b.coef_)

    def test_bad_inputs(self):
        ds = reg_data()
        with pytest.raises(ValueError):
            LexifairRegressor().fit(ds.X.ravel(), ds.y)
        with pytest.raises(ValueError):
            LexifairRegressor().fit(ds.X, ds.y[:-1])
        with pytest.raises(ValueError):
            LexifairRegressor(loss="hinge").fit(ds.X, ds.y)

    def test_predict_shape_check(self):
        ds = reg_data()
        est = LexifairRegressor(ell=1, alpha=0.2).fit(ds.X, ds.y)
        with pytest.raises(ValueError):
            est.predict(np.zeros((2, ds.d + 1)))


class TestLexifairClassifier:
    def test_fit_predict_proba(self):
        ds = clf_data()
        est = LexifairClassifier(ell=1, alpha=0.2, delta=0.1, budget=100).fit(
            ds.X, ds.y, ds.membership
        )
        proba = est.predict_proba(ds.X)
        assert proba.shape == (ds.n, 2)
        np.testing.assert_allclose(proba.sum(axis=1), 1.0)
        preds = est.predict(ds.X)
        assert set(np.unique(preds)) <= {0.0, 1.0}
        assert list(est.classes_) == [0.0, 1.0]

    def test_nonbinary_labels_rejected(self):
        ds = clf_data()
        y = ds.y.copy()
        y[0] = 0.5
        with pytest.raises(ValueError):
            LexifairClassifier(budget=50).fit(ds.X, y, ds.membership)

    def test_determinism(self):
        ds = clf_data()
        kwargs = dict(ell=1, alpha=0.2, delta=0.1, budget=60, seed=2)
        a = LexifairClassifier(**kwargs).fit(ds.X, ds.y, ds.membership)
        b = LexifairClassifier(**kwargs).fit(ds.X, ds.y, ds.membership)
        np.testing.assert_array_equal(a.group_errors_, b.group_errors_)
        assert a.model_.support == b.model_.support

    def test_clone(self):
        est = LexifairClassifier(ell=2, alpha=0.15, delta=0.01)
        assert clone(est).get_params() == est.get_params()
