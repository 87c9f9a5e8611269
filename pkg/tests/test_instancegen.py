import numpy as np
import pytest

from dualwarm.formats import write_instance
from dualwarm.instancegen import (
    UCI_DATASETS,
    ClusterModelConfig,
    PointSet,
    TypeModelConfig,
    cluster_model_instance,
    cluster_model_prepare,
    dataset_dir,
    kmeans,
    load_points,
    save_points,
    stream_rng,
    type_model_base,
    type_model_instance,
    type_model_noise,
)


class TestTypeModel:
    def test_config_validation(self):
        with pytest.raises(ValueError):
            TypeModelConfig(n=10, groups=3)
        with pytest.raises(ValueError):
            TypeModelConfig(n=10, groups=5, variance=-1)

    def test_base_is_reproducible_and_positive(self):
        cfg = TypeModelConfig(n=20, groups=10, seed=4)
        W = type_model_base(cfg)
        assert W.shape == (10, 10)
        assert (W >= 1).all()
        np.testing.assert_array_equal(W, type_model_base(cfg))

    def test_geometric_mean(self):
        cfg = TypeModelConfig(n=1, groups=1)
        draws = stream_rng(0, "base").geometric(1 / cfg.mean_weight, size=10**5)
        assert abs(draws.mean() - 250) <= 5
        W = type_model_base(TypeModelConfig(n=316, groups=316, seed=1))
        assert abs(W.mean() - 250) <= 5

    def test_zero_noise_reproduces_base(self):
        cfg = TypeModelConfig(n=6, groups=3)
        W = type_model_base(cfg)
        inst = type_model_instance(W, cfg, stream_rng(0, "test", 0))
        group = np.repeat(np.arange(3), 2)
        np.testing.assert_array_equal(inst.dense, W[np.ix_(group, group)])

    @pytest.mark.parametrize("v", [1, 50, 200])
    def test_noise_moments(self, v):
        eta = type_model_noise(v, 10**5, stream_rng(v, "test"))
        assert eta.dtype == np.int64
        assert abs(eta.mean()) <= 4 * np.sqrt(v / 10**5) + 1e-9
        assert abs(eta.var(ddof=1) - v) <= 0.05 * v

    def test_costs_clamped_and_counted(self):
        cfg = TypeModelConfig(n=10, groups=2, variance=10**4, seed=2)
        stats = {}
        inst = type_model_instance(type_model_base(cfg), cfg, stream_rng(2, "test", 0), stats)
        assert inst.cost.min() >= 1
        assert inst.is_complete and inst.is_square
        assert stats["clamped"] > 0

    def test_instance_files_byte_identical(self, tmp_path):
        cfg = TypeModelConfig(n=12, groups=4, variance=30, seed=9)
        for name in ("a.txt", "b.txt"):
            inst = type_model_instance(type_model_base(cfg), cfg, stream_rng(9, "train", 0, 3))
            write_instance(tmp_path / name, inst)
        assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()


class TestPoints:
    def test_load_three_rows(self, tmp_path):
        p = tmp_path / "pts.csv"
        p.write_text("1,2\n3,4\n\n5,6\n")
        ps = load_points(p)
        assert len(ps) == 3 and ps.n_features == 2

    def test_header_skipped(self, tmp_path):
        p = tmp_path / "pts.csv"
        p.write_text("x,y\n1,2\n")
        assert len(load_points(p, header=True)) == 1

    @pytest.mark.parametrize("body, line", [("1,2\n3,a\n", 2), ("1,2\n3\n", 2), ("1,2\n1,nan\n", 2)])
    def test_malformed_rows_report_line(self, tmp_path, body, line):
        p = tmp_path / "pts.csv"
        p.write_text(body)
        with pytest.raises(ValueError, match=f":{line}:"):
            load_points(p)

    def test_subsample_deterministic(self, tmp_path):
        p = tmp_path / "pts.csv"
        save_points(p, PointSet(np.arange(2000.0).reshape(1000, 2)))
        a = load_points(p, subsample=100, seed=3)
        b = load_points(p, subsample=100, seed=3)
        assert len(a) == 100
        np.testing.assert_array_equal(a.points, b.points)
        assert not np.array_equal(a.points, load_points(p, subsample=100, seed=4).points)

    def test_round_trip(self, tmp_path):
        pts = PointSet(np.random.default_rng(0).normal(size=(20, 3)))
        save_points(tmp_path / "p.csv", pts)
        np.testing.assert_array_equal(load_points(tmp_path / "p.csv").points, pts.points)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            PointSet(np.array([[np.inf, 0.0]]))

    def test_dataset_dir_from_env(self, monkeypatch, tmp_path):
        monkeypatch.setenv("DUALWARM_DATA", str(tmp_path))
        assert dataset_dir() == tmp_path

    def test_reference_dataset_shapes(self):
        assert UCI_DATASETS["covertype"] == (581_012, 54)
        assert UCI_DATASETS["skin"] == (100_000, 4)
        assert len(UCI_DATASETS) == 5


class TestKMeans:
    def test_objective_non_increasing(self):
        rng = np.random.default_rng(1)
        for seed in range(10):
            x = rng.normal(size=(300, 4))
            res = kmeans(x, 8, stream_rng(seed, "kmeans"))
            h = np.array(res.history)
            assert (np.diff(h) <= 1e-9 * h[0]).all()
            assert len(h) <= 50

    def test_separated_clusters_recovered(self):
        rng = np.random.default_rng(2)
        centres = np.array([[0, 0], [100, 0], [0, 100]])
        x = np.concatenate([c + rng.normal(size=(50, 2)) for c in centres])
        res = kmeans(x, 3, stream_rng(0, "kmeans"))
        assert len(set(res.labels[:50])) == len(set(res.labels[50:100])) == len(set(res.labels[100:])) == 1
        assert len(set(res.labels.tolist())) == 3

    def test_k_too_large(self):
        with pytest.raises(ValueError):
            kmeans(np.zeros((3, 2)), 4, stream_rng(0, "kmeans"))

    def test_duplicate_points(self):
        res = kmeans(np.zeros((5, 2)), 3, stream_rng(0, "kmeans"))
        assert res.history[-1] == 0


class TestClusterModel:
    def _points(self, n=200, d=2, seed=0):
        return PointSet(np.random.default_rng(seed).random((n, d)))

    def test_singleton_clusters(self):
        pts = self._points(20)
        prep = cluster_model_prepare(pts, ClusterModelConfig(k=10))
        assert sorted(prep.left.labels.tolist()) == list(range(10))

    def test_k_too_large(self):
        with pytest.raises(ValueError):
            cluster_model_prepare(self._points(20), ClusterModelConfig(k=11))

    def test_deterministic(self):
        cfg = ClusterModelConfig(k=8, seed=5)
        a = cluster_model_prepare(self._points(), cfg)
        b = cluster_model_prepare(self._points(), cfg)
        np.testing.assert_array_equal(a.left.labels, b.left.labels)
        np.testing.assert_array_equal(a.right.centers, b.right.centers)

    def test_unit_square_cost_bound(self):
        cfg = ClusterModelConfig(k=10, seed=1)
        prep = cluster_model_prepare(self._points(), cfg)
        for t in range(5):
            inst = cluster_model_instance(prep, cfg, stream_rng(1, "test", t))
            assert inst.is_complete and inst.n_left == 10
            assert 0 <= inst.cost.min() and inst.cost.max() <= 1414

    def test_coincident_points_cost_zero(self):
        pts = PointSet(np.ones((10, 3)))
        cfg = ClusterModelConfig(k=1, scale=1)
        inst = cluster_model_instance(cluster_model_prepare(pts, cfg), cfg, stream_rng(0, "test"))
        assert inst.cost.tolist() == [0]

    def test_triangle_inequality_within_rounding(self):
        # One shared point set on both sides lets us compare left-right-left paths.
        cfg = ClusterModelConfig(k=6, seed=2)
        prep = cluster_model_prepare(self._points(120, 3, seed=2), cfg)
        inst = cluster_model_instance(prep, cfg, stream_rng(2, "test", 0))
        d = inst.dense
        for i in range(6):
            for i2 in range(6):
                for j in range(6):
                    for j2 in range(6):
                        # |i-j| <= |i-j2| + |j2-i2| + |i2-j| with each term off by at most 1/2.
                        assert d[i, j] <= d[i, j2] + d[i2, j2] + d[i2, j] + 2

    def test_empty_cluster_reported(self):
        pts = self._points(20)
        cfg = ClusterModelConfig(k=3)
        prep = cluster_model_prepare(pts, cfg)
        prep.left.labels[:] = 0
        with pytest.raises(ValueError, match="empty"):
            cluster_model_instance(prep, cfg, stream_rng(0, "test"))
