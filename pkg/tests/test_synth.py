import numpy as np
import pytest

from lexifair.synth import gen_synth


class TestGenSynth:
    def test_deterministic_for_seed(self):
        a, pa = gen_synth("clf", K=3, n_per_group=10, seed=5, overlap=0.3)
        b, pb = gen_synth("clf", K=3, n_per_group=10, seed=5, overlap=0.3)
        np.testing.assert_array_equal(a.X, b.X)
        np.testing.assert_array_equal(a.y, b.y)
        np.testing.assert_array_equal(a.membership, b.membership)
        assert pa == pb

    def test_seed_matters(self):
        a, _ = gen_synth("clf", K=2, n_per_group=10, seed=1)
        b, _ = gen_synth("clf", K=2, n_per_group=10, seed=2)
        assert not np.array_equal(a.X, b.X)

    def test_shapes_and_group_sizes(self):
        ds, params = gen_synth("reg", K=4, n_per_group=7, d=3, seed=0)
        assert (ds.n, ds.d, ds.K) == (28, 3, 4)
        assert ds.n_min >= 7
        assert params["group_noise_rates"] == pytest.approx([0.1] * 4)

    def test_clf_labels_binary(self):
        ds, _ = gen_synth("clf", K=3, n_per_group=10, skew=2.0, seed=1)
        assert set(np.unique(ds.y)) <= {0.0, 1.0}

    def test_skew_orders_noise_rates(self):
        _, params = gen_synth("clf", K=3, n_per_group=5, skew=1.0, seed=0)
        rates = params["group_noise_rates"]
        assert rates == sorted(rates) and rates[0] < rates[-1]

    def test_overlap_adds_memberships(self):
        flat, _ = gen_synth("clf", K=3, n_per_group=20, overlap=0.0, seed=3)
        over, _ = gen_synth("clf", K=3, n_per_group=20, overlap=0.8, seed=3)
        assert over.membership.sum() > flat.membership.sum()
        assert flat.membership.sum(axis=1).max() == 1
        assert over.membership.sum(axis=1).max() == 2

    def test_reg_values_bounded_by_scale(self):
        ds, _ = gen_synth("reg", K=2, n_per_group=30, scale=0.15, seed=2)
        assert np.abs(ds.X).max() <= 0.15
        assert np.abs(ds.y).max() <= 0.15

    def test_validation(self):
        with pytest.raises(ValueError):
            gen_synth("ranking", K=2, n_per_group=5)
        with pytest.raises(ValueError):
            gen_synth("clf", K=1, n_per_group=5)
        with pytest.raises(ValueError):
            gen_synth("clf", K=2, n_per_group=5, overlap=1.5)
