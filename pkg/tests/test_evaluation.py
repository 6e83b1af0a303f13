"""Diversity score, linear probe, spectral clustering, and rand index."""

import numpy as np
import pytest

from hyperwave import (
    EvalConfig,
    adjusted_rand_index,
    linear_probe,
    spectral_cluster,
    vendi_score,
)
from hyperwave.errors import (
    ClassTooSmallError,
    ConfigError,
    DataError,
    SingleClassError,
    ZeroRowError,
)
from hyperwave.evaluation import fit_multinomial, standardize_columns, stratified_split


def vendi_oracle(features):
    """Diversity recomputed from scratch: explicit kernel, eigvalsh, entropy."""
    x = np.asarray(features, dtype=np.float64)
    u = x / np.linalg.norm(x, axis=1)[:, None]
    lam = np.linalg.eigvalsh(u @ u.T / x.shape[0])
    lam = lam[lam > 1e-12]
    return float(np.exp(-np.sum(lam * np.log(lam))))


def blobs(rng, centers, per, spread=0.05):
    pts, labels = [], []
    for i, c in enumerate(centers):
        pts.append(np.asarray(c) + spread * rng.standard_normal((per, len(c))))
        labels += [i] * per
    return np.concatenate(pts), np.array(labels)


class TestVendiScore:
    def test_identical_rows_collapse_to_one(self):
        x = np.tile([1.0, 2.0, 3.0], (7, 1))
        assert vendi_score(x) == pytest.approx(1.0, abs=1e-9)

    def test_orthogonal_rows_count_themselves(self):
        assert vendi_score(np.eye(5)) == pytest.approx(5.0, abs=1e-9)

    def test_two_repeated_groups(self):
        """Three copies each of two orthogonal rows: two effective modes."""
        x = np.array([[1.0, 0.0]] * 3 + [[0.0, 1.0]] * 3)
        assert vendi_score(x) == pytest.approx(2.0, abs=1e-9)

    def test_single_row(self):
        assert vendi_score(np.array([[3.0, 4.0]])) == pytest.approx(1.0, abs=1e-9)

    def test_bounds(self):
        rng = np.random.default_rng(60)
        for _ in range(25):
            m = int(rng.integers(1, 40))
            x = rng.standard_normal((m, int(rng.integers(2, 10))))
            score = vendi_score(x)
            assert 1.0 - 1e-9 <= score <= m + 1e-9

    def test_matches_eigen_oracle(self):
        rng = np.random.default_rng(61)
        for _ in range(30):
            x = rng.standard_normal((int(rng.integers(2, 21)), 6))
            assert vendi_score(x) == pytest.approx(vendi_oracle(x), abs=1e-8)

    def test_row_permutation_invariant(self):
        rng = np.random.default_rng(62)
        x = rng.standard_normal((15, 4))
        assert vendi_score(x[rng.permutation(15)]) == pytest.approx(
            vendi_score(x), abs=1e-10)

    def test_row_rescaling_invariant_under_cosine(self):
        rng = np.random.default_rng(63)
        x = rng.standard_normal((12, 5))
        scales = rng.uniform(0.1, 10.0, size=(12, 1))
        assert vendi_score(x * scales) == pytest.approx(vendi_score(x), abs=1e-9)

    def test_zero_row_rejected_for_cosine(self):
        x = np.array([[1.0, 0.0], [0.0, 0.0]])
        with pytest.raises(ZeroRowError, match="1"):
            vendi_score(x)

    def test_rbf_kernel(self):
        rng = np.random.default_rng(64)
        x = rng.standard_normal((10, 3))
        score = vendi_score(x, kernel="rbf")
        assert 1.0 <= score <= 10.0
        assert vendi_score(np.zeros((4, 2)), kernel="rbf") == pytest.approx(1.0, abs=1e-9)
        far = np.eye(6) * 100.0
        assert vendi_score(far, kernel="rbf", bandwidth=1.0) == pytest.approx(6.0, abs=1e-6)

    def test_standardize_flag(self):
        rng = np.random.default_rng(65)
        x = rng.standard_normal((9, 4)) * [1.0, 50.0, 0.1, 2.0] + [5.0, 0.0, -3.0, 1.0]
        z, _, _ = standardize_columns(x)
        assert vendi_score(x, standardize=True) == pytest.approx(
            vendi_score(z), abs=1e-10)

    def test_unknown_kernel(self):
        with pytest.raises(ConfigError):
            vendi_score(np.eye(3), kernel="linear")

    def test_nonfinite_rejected(self):
        with pytest.raises(DataError):
            vendi_score(np.array([[1.0, np.nan]]))


class TestStandardizeColumns:
    def test_zero_variance_column_safe(self):
        x = np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]])
        z, mean, std = standardize_columns(x)
        assert np.isfinite(z).all()
        np.testing.assert_array_equal(z[:, 1], np.zeros(3))
        np.testing.assert_allclose(z[:, 0].std(), 1.0)

    def test_reusing_moments(self):
        rng = np.random.default_rng(66)
        train, test = rng.random((20, 3)), rng.random((10, 3))
        _, mean, std = standardize_columns(train)
        z, _, _ = standardize_columns(test, mean, std)
        np.testing.assert_allclose(z, (test - mean) / std, atol=0)


class TestStratifiedSplit:
    def test_every_class_on_both_sides(self):
        rng = np.random.default_rng(67)
        for _ in range(20):
            labels = rng.integers(0, 4, size=int(rng.integers(8, 60)))
            labels[:8] = [0, 0, 1, 1, 2, 2, 3, 3]
            train, test = stratified_split(labels, 0.8, seed=int(rng.integers(1000)))
            assert set(np.unique(labels[train])) == set(np.unique(labels))
            assert set(np.unique(labels[test])) == set(np.unique(labels))
            combined = np.sort(np.concatenate([train, test]))
            np.testing.assert_array_equal(combined, np.arange(labels.shape[0]))

    def test_train_fraction_respected(self):
        labels = np.repeat([0, 1], 100)
        train, _ = stratified_split(labels, 0.8, seed=0)
        assert train.shape[0] == 160

    def test_seed_determinism(self):
        labels = np.repeat([0, 1, 2], 30)
        a = stratified_split(labels, 0.7, seed=5)
        b = stratified_split(labels, 0.7, seed=5)
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])
        c = stratified_split(labels, 0.7, seed=6)
        assert not np.array_equal(a[0], c[0])


class TestFitMultinomial:
    def test_penalized_loss_never_increases(self):
        """The fixed step size is chosen to make descent monotone."""
        rng = np.random.default_rng(68)
        for _ in range(10):
            n, d, c = int(rng.integers(20, 80)), int(rng.integers(2, 8)), int(rng.integers(2, 5))
            x = rng.standard_normal((n, d)) * rng.uniform(0.5, 20.0)
            y = rng.integers(0, c, size=n)
            y[:c] = np.arange(c)
            _, _, info = fit_multinomial(x, y, c, l2_penalty=1e-2,
                                         max_iterations=200, tolerance=0.0)
            trace = np.array(info["loss_trace"])
            assert (np.diff(trace) <= 1e-12).all()

    def test_convergence_flag(self):
        rng = np.random.default_rng(69)
        x = rng.standard_normal((40, 3))
        y = (x[:, 0] > 0).astype(int)
        _, _, strict = fit_multinomial(x, y, 2, 1e-2, max_iterations=2, tolerance=1e-12)
        assert strict["converged"] is False and strict["iterations"] == 2
        _, _, loose = fit_multinomial(x, y, 2, 1e-2, max_iterations=5000, tolerance=1e-6)
        assert loose["converged"] is True

    def test_separable_data_fits(self):
        rng = np.random.default_rng(70)
        x, y = blobs(rng, [[0, 0], [4, 4], [-4, 4]], per=30)
        weights, bias, _ = fit_multinomial(x, y, 3, 1e-3, 2000, 1e-9)
        pred = np.argmax(x @ weights + bias, axis=1)
        assert (pred == y).mean() == 1.0


class TestLinearProbe:
    def test_separated_blobs_probe_perfectly(self):
        rng = np.random.default_rng(71)
        x, y = blobs(rng, [[0.0, 0.0], [5.0, 5.0]], per=50)
        report = linear_probe(x, y, EvalConfig(seeds=(0, 1, 2)))
        assert report.mean_accuracy == 1.0
        assert report.mean_auroc_ovr == 1.0
        assert report.std_accuracy == 0.0

    def test_one_hot_features_are_fully_predictive(self):
        rng = np.random.default_rng(72)
        y = rng.integers(0, 3, size=90)
        y[:3] = [0, 1, 2]
        x = np.eye(3)[y]
        report = linear_probe(x, y, EvalConfig(seeds=(0, 1)))
        assert report.mean_accuracy == 1.0
        assert report.mean_macro_f1 == 1.0
        assert report.mean_auroc_ovr == 1.0

    def test_shuffled_labels_probe_at_chance(self):
        """Features carry no label signal: accuracy sits at the class prior."""
        rng = np.random.default_rng(73)
        x = rng.standard_normal((600, 8))
        y = np.repeat([0, 1], 300)
        report = linear_probe(x, y, EvalConfig(seeds=tuple(range(5))))
        assert abs(report.mean_accuracy - 0.5) <= 0.1

    def test_null_auroc_concentrates_at_half(self):
        """Mean held-out AUROC over 20 seeds stays within [0.4, 0.6]."""
        rng = np.random.default_rng(74)
        x = rng.standard_normal((600, 6))
        y = np.repeat([0, 1], 300)
        report = linear_probe(x, y, EvalConfig(seeds=tuple(range(20))))
        assert 0.4 <= report.mean_auroc_ovr <= 0.6

    def test_bitwise_deterministic(self):
        rng = np.random.default_rng(75)
        x, y = blobs(rng, [[0, 0], [1.5, 0], [0, 1.5]], per=25, spread=0.5)
        a = linear_probe(x, y, EvalConfig(seeds=(0, 1)))
        b = linear_probe(x.copy(), y.copy(), EvalConfig(seeds=(0, 1)))
        assert a == b

    def test_aggregates_match_per_seed(self):
        rng = np.random.default_rng(76)
        x, y = blobs(rng, [[0, 0], [1, 0]], per=40, spread=0.6)
        report = linear_probe(x, y, EvalConfig(seeds=(0, 1, 2, 3)))
        accs = np.array([p.accuracy for p in report.per_seed])
        assert report.mean_accuracy == pytest.approx(accs.mean(), abs=0)
        assert report.std_accuracy == pytest.approx(accs.std(), abs=0)
        assert [p.split_seed for p in report.per_seed] == [0, 1, 2, 3]

    def test_string_labels_accepted(self):
        rng = np.random.default_rng(77)
        x, y = blobs(rng, [[0, 0], [4, 4]], per=20)
        names = np.array(["ctrl", "case"])[y]
        report = linear_probe(x, names, EvalConfig(seeds=(0,)))
        assert {c.label for c in report.per_seed[0].per_class} == {"ctrl", "case"}

    def test_single_class_rejected(self):
        with pytest.raises(SingleClassError):
            linear_probe(np.random.default_rng(0).random((10, 2)), np.zeros(10))

    def test_tiny_class_rejected(self):
        y = np.array([0] * 9 + [1])
        with pytest.raises(ClassTooSmallError, match="1"):
            linear_probe(np.random.default_rng(0).random((10, 2)), y)

    def test_label_length_mismatch(self):
        with pytest.raises(DataError):
            linear_probe(np.zeros((4, 2)), np.array([0, 1]))


class TestSpectralCluster:
    def test_three_blobs_recovered_exactly(self):
        """Blobs pointing in three different directions separate perfectly."""
        rng = np.random.default_rng(78)
        x, y = blobs(rng, [[10, 0], [0, 10], [-10, -10]], per=40)
        result = spectral_cluster(x, n_clusters=3, seed=0)
        assert result.used_fallback is False
        assert adjusted_rand_index(result.labels, y) == 1.0

    def test_nearly_all_singletons(self):
        """k = m - 1 forces exactly one pair to share a cluster."""
        rng = np.random.default_rng(79)
        x = rng.standard_normal((8, 3)) * 5
        result = spectral_cluster(x, n_clusters=7, n_neighbors=3, seed=0)
        sizes = sorted(np.bincount(result.labels, minlength=7))
        assert sizes == [1, 1, 1, 1, 1, 1, 2]

    def test_duplicated_rows_co_cluster(self):
        rng = np.random.default_rng(80)
        base, _ = blobs(rng, [[8, 0], [0, 8]], per=20)
        doubled = np.concatenate([base, base])
        result = spectral_cluster(doubled, n_clusters=2, seed=0)
        m = base.shape[0]
        np.testing.assert_array_equal(result.labels[:m], result.labels[m:])

    def test_permutation_equivariant(self):
        rng = np.random.default_rng(81)
        x, _ = blobs(rng, [[9, 0], [0, 9], [-9, -9]], per=30)
        perm = rng.permutation(x.shape[0])
        a = spectral_cluster(x, n_clusters=3, seed=0)
        b = spectral_cluster(x[perm], n_clusters=3, seed=0)
        assert adjusted_rand_index(b.labels, a.labels[perm]) == 1.0

    def test_zero_rows_fall_back_but_return_labels(self):
        """Cosine affinity is undefined on zero rows; clustering still answers."""
        rng = np.random.default_rng(82)
        x, _ = blobs(rng, [[1, 1], [9, 9]], per=10)
        x[0] = 0.0
        result = spectral_cluster(x, n_clusters=2, seed=0)
        assert result.used_fallback is True
        assert result.labels.shape == (20,)
        assert set(np.unique(result.labels)) <= {0, 1}

    def test_validation(self):
        x = np.random.default_rng(1).random((5, 2))
        with pytest.raises(ConfigError):
            spectral_cluster(x, n_clusters=1)
        with pytest.raises(DataError):
            spectral_cluster(x, n_clusters=5)

    def test_deterministic_for_seed(self):
        rng = np.random.default_rng(83)
        x, _ = blobs(rng, [[0, 0], [6, 0], [3, 5]], per=20, spread=0.8)
        a = spectral_cluster(x, n_clusters=3, seed=4)
        b = spectral_cluster(x, n_clusters=3, seed=4)
        np.testing.assert_array_equal(a.labels, b.labels)
        assert a.inertia == b.inertia


class TestAdjustedRandIndex:
    def test_identical_up_to_renaming(self):
        a = np.array([0, 0, 1, 1, 2, 2])
        b = np.array([5, 5, 3, 3, 9, 9])
        assert adjusted_rand_index(a, b) == 1.0

    def test_hand_computed_example(self):
        a = [0, 0, 1, 1]
        b = [0, 0, 1, 2]
        assert adjusted_rand_index(a, b) == pytest.approx(4.0 / 7.0, abs=1e-12)

    def test_independent_labelings_near_zero(self):
        rng = np.random.default_rng(84)
        scores = [adjusted_rand_index(rng.integers(0, 4, 200), rng.integers(0, 4, 200))
                  for _ in range(30)]
        assert abs(float(np.mean(scores))) < 0.05

    def test_string_labels(self):
        assert adjusted_rand_index(["x", "x", "y"], ["a", "a", "b"]) == 1.0
