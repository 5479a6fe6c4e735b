import numpy as np
import pytest

from uwform import domaingap, imgcore


def silhouette(points, labels):
    """Brute-force mean silhouette coefficient."""
    points = np.asarray(points)
    labels = np.asarray(labels)
    scores = []
    for i in range(len(points)):
        d = np.linalg.norm(points - points[i], axis=1)
        same = labels == labels[i]
        a = d[same & (np.arange(len(points)) != i)].mean()
        b = min(d[labels == other].mean() for other in set(labels) - {labels[i]})
        scores.append((b - a) / max(a, b))
    return float(np.mean(scores))


class TestFeatures:
    def test_constant_gray(self):
        img = imgcore.LinearImage(np.full((16, 16, 3), 0.5))
        f = domaingap.extract_features(img)
        assert f.shape == (30,)
        assert f[:3] == pytest.approx([0.5, 0.5, 0.5])
        assert f[3:6] == pytest.approx([0, 0, 0])
        for c in range(3):
            hist = f[6 + 8 * c : 6 + 8 * (c + 1)]
            assert hist.sum() == pytest.approx(1.0)
            assert hist[4] == 1.0  # 0.5 falls in bin [0.5, 0.625)

    def test_identical_images_identical_vectors(self, rng):
        data = rng.random((12, 12, 3))
        f1 = domaingap.extract_features(imgcore.LinearImage(data))
        f2 = domaingap.extract_features(imgcore.LinearImage(data.copy()))
        assert np.array_equal(f1, f2)

    def test_recompute_bitwise_equal(self, rng):
        img = imgcore.LinearImage(rng.random((12, 12, 3)))
        assert np.array_equal(domaingap.extract_features(img),
                              domaingap.extract_features(img))

    def test_invariant_under_pixel_shuffle(self, rng):
        data = rng.random((10, 10, 3))
        flat = data.reshape(-1, 3)
        shuffled = flat[rng.permutation(flat.shape[0])].reshape(data.shape)
        f1 = domaingap.extract_features(imgcore.LinearImage(data))
        f2 = domaingap.extract_features(imgcore.LinearImage(shuffled))
        assert np.allclose(f1, f2)


class TestEmbed:
    def test_needs_three_vectors(self, rng):
        with pytest.raises(ValueError):
            domaingap.embed_2d([rng.random(30), rng.random(30)])

    def test_degenerate_all_identical(self):
        v = np.full(30, 0.25)
        emb = domaingap.embed_2d([v, v, v, v])
        assert np.all(emb.points == 0.0)

    def test_two_dim_unit_variance_data_is_rotated(self, rng):
        # feature vectors varying in exactly 2 dims with zero mean and unit
        # variance: standardization is the identity, so the projection is a
        # rotation and pairwise distances survive exactly
        n = 12
        raw = rng.normal(size=(n, 2))
        raw -= raw.mean(axis=0)
        raw /= raw.std(axis=0)
        X = np.zeros((n, 30))
        X[:, 4] = raw[:, 0]
        X[:, 9] = raw[:, 1]
        emb = domaingap.embed_2d(X)
        orig = np.linalg.norm(raw[:, None] - raw[None, :], axis=2)
        got = np.linalg.norm(emb.points[:, None] - emb.points[None, :], axis=2)
        assert np.allclose(orig, got, atol=1e-9)

    def test_deterministic_and_order_equivariant(self, rng):
        X = rng.random((10, 30))
        e1 = domaingap.embed_2d(X)
        e2 = domaingap.embed_2d(X)
        assert np.array_equal(e1.points, e2.points)
        perm = rng.permutation(10)
        e3 = domaingap.embed_2d(X[perm])
        assert np.allclose(e3.points, e1.points[perm], atol=1e-9)

    def test_three_blobs_separate(self, rng):
        # well-separated Gaussian blobs: cluster means differ on every
        # dimension by far more than the within-cluster spread
        centers = rng.normal(0.0, 1.0, (3, 30))
        vecs, labels = [], []
        for k in range(3):
            for _ in range(15):
                vecs.append(centers[k] + rng.normal(0, 0.05, 30))
                labels.append(k)
        emb = domaingap.embed_2d(vecs)
        assert silhouette(emb.points, labels) > 0.5


class TestOverlapStats:
    def test_self_intersection_full(self, rng):
        emb = domaingap.Embedding2D(rng.random((20, 2)))
        assert domaingap.intersection_ratio(emb, emb) == 100.0
        assert domaingap.center_distance(emb, emb) == 0.0

    def test_disjoint_halves(self, rng):
        a = domaingap.Embedding2D(rng.random((20, 2)) * 0.4)
        b = domaingap.Embedding2D(rng.random((20, 2)) * 0.4 + 10.0)
        assert domaingap.intersection_ratio(a, b) == 0.0

    def test_center_distance_analytic(self):
        a = domaingap.Embedding2D(np.array([[0.0, 0.0], [0.0, 0.0]]))
        b = domaingap.Embedding2D(np.array([[3.0, 4.0], [3.0, 4.0]]))
        assert domaingap.center_distance(a, b) == pytest.approx(5.0)
        assert domaingap.center_distance(b, a) == pytest.approx(5.0)

    def test_ratio_within_bounds(self, rng):
        a = domaingap.Embedding2D(rng.random((30, 2)))
        b = domaingap.Embedding2D(rng.random((30, 2)) + 0.5)
        ir = domaingap.intersection_ratio(a, b, grid=25)
        assert 0.0 <= ir <= 100.0

    def test_empty_rejected(self, rng):
        a = domaingap.Embedding2D(np.zeros((0, 2)))
        b = domaingap.Embedding2D(rng.random((5, 2)))
        with pytest.raises(ValueError):
            domaingap.intersection_ratio(a, b)
        with pytest.raises(ValueError):
            domaingap.center_distance(a, b)

    def test_single_point_degenerate_box(self):
        a = domaingap.Embedding2D(np.array([[1.0, 1.0]]))
        assert domaingap.intersection_ratio(a, a) == 100.0
