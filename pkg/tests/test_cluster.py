"""Feature building, standardization, PCA, K-Means, and k selection."""

from datetime import datetime, timedelta
from types import SimpleNamespace

import numpy as np
import pytest

import inboxaudit.cluster as cluster_mod
from inboxaudit.cluster import (FEATURE_NAMES, FixedComponents,
                                InsufficientCompaniesError, VarianceThreshold,
                                build_features, kmeans, loadings_report,
                                pca_fit, select_k, silhouette, standardize)


class FakeStore:
    def __init__(self, by_service):
        self.by_service = by_service

    def services(self):
        return sorted(self.by_service)

    def service_records(self, name):
        return self.by_service.get(name, [])


def record(message_id, day=0, hour=9):
    base = datetime(2024, 1, 1, hour)  # a Monday
    return SimpleNamespace(message_id=message_id,
                           received_local=base + timedelta(days=day))


def test_feature_names_frozen():
    assert len(FEATURE_NAMES) == 36
    assert FEATURE_NAMES[0] == "hourly_00"
    assert FEATURE_NAMES[23] == "hourly_23"
    assert FEATURE_NAMES[24] == "weekly_0"
    assert FEATURE_NAMES[31] == "marketing_flag"
    assert FEATURE_NAMES[32:] == ["mix_promotional", "mix_crm", "mix_alert",
                                  "total_volume"]


def test_build_features_rows():
    store = FakeStore({
        "alpha": [record("m1", day=0, hour=9), record("m2", day=1, hour=9),
                  record("m3", day=0, hour=20)],
        "beta": [record("m4", day=5, hour=3),
                 SimpleNamespace(message_id="m5", received_local=None)],
    })
    profiles = [SimpleNamespace(service_name="alpha", uses_marketing_provider=True),
                SimpleNamespace(service_name="beta", uses_marketing_provider=False)]
    classes = {"m1": SimpleNamespace(label="promotional"),
               "m2": SimpleNamespace(label="promotional"),
               "m3": SimpleNamespace(label="crm")}
    features = build_features(store, profiles, classes)
    assert features.companies == ["alpha", "beta"]
    assert features.matrix.shape == (2, 36)
    alpha, beta = features.matrix
    assert alpha[9] == 2 and alpha[20] == 1          # hourly
    assert alpha[24] == 2 and alpha[25] == 1         # Mon, Tue
    assert alpha[31] == 1.0 and beta[31] == 0.0      # marketing flag
    assert alpha[32:35] == pytest.approx([2 / 3, 1 / 3, 0.0])
    assert alpha[35] == 3.0
    # beta has no classified mail: zero mix, flagged
    assert beta[32:35] == pytest.approx([0.0, 0.0, 0.0])
    assert beta[35] == 2.0                           # unstamped still counts
    assert beta[24:31].sum() == 1.0                  # but not on the clock
    assert features.no_content_companies == ["beta"]


def test_build_features_needs_two_companies():
    store = FakeStore({"solo": [record("m1")]})
    with pytest.raises(InsufficientCompaniesError):
        build_features(store, [], {})


def test_standardize_population_zscores():
    rng = np.random.default_rng(1)
    x = rng.normal(5, 3, size=(20, 4))
    x[:, 2] = 7.0  # constant column
    result = standardize(x)
    z = result.matrix
    assert np.allclose(z.mean(axis=0), 0.0, atol=1e-12)
    assert np.allclose(z[:, [0, 1, 3]].std(axis=0), 1.0)  # population convention
    assert np.all(z[:, 2] == 0.0)
    assert result.zero_variance_cols == [2]
    with pytest.raises(ValueError):
        standardize(x[:1])


def blobs(rng, centers, per=8, spread=0.1):
    rows = [rng.normal(c, spread, size=(per, len(centers[0]))) for c in centers]
    return np.vstack(rows)


def test_pca_orthonormal_and_svd_oracle():
    rng = np.random.default_rng(2)
    x = rng.normal(0, 1, size=(30, 6)) * np.array([5, 3, 2, 1, 0.5, 0.1])
    pca = pca_fit(x, FixedComponents(4))
    c = pca.components
    assert c.shape == (4, 6)
    assert np.allclose(c @ c.T, np.eye(4), atol=1e-10)
    centered = x - x.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    assert np.allclose(pca.eigenvalues, s ** 2 / len(x), atol=1e-9)
    # components match right singular vectors up to sign
    _, _, vt = np.linalg.svd(centered)
    for i in range(4):
        assert abs(float(vt[i] @ c[i])) == pytest.approx(1.0)
        j = int(np.argmax(np.abs(c[i])))
        assert c[i, j] > 0  # sign convention
    # transform is projection of the centered data
    assert np.allclose(pca.transform(x), centered @ c.T)


def test_pca_clamps_beyond_rank():
    x = np.array([[0.0, 0, 0, 0, 0], [1, 1, 0, 0, 0], [2, 0, 1, 0, 0]])
    pca = pca_fit(x, FixedComponents(5))
    assert pca.components.shape[0] == 2  # 3 points span a plane


def test_pca_variance_threshold_minimal():
    rng = np.random.default_rng(3)
    x = rng.normal(0, 1, size=(40, 5)) * np.array([10, 5, 2, 1, 0.5])
    full = pca_fit(x, FixedComponents(5))
    eigen = np.array(full.eigenvalues)
    cumulative = np.cumsum(eigen) / eigen.sum()
    for ratio in (0.5, 0.8, 0.95, 1.0):
        pca = pca_fit(x, VarianceThreshold(ratio))
        m = pca.components.shape[0]
        assert cumulative[m - 1] >= ratio - 1e-12
        assert m == 1 or cumulative[m - 2] < ratio


def test_pca_rejects_bad_targets():
    x = np.eye(3)
    with pytest.raises(ValueError):
        pca_fit(x, VarianceThreshold(0.0))
    with pytest.raises(ValueError):
        pca_fit(x, VarianceThreshold(1.5))
    with pytest.raises(TypeError):
        pca_fit(x, target="3")


def test_kmeans_recovers_blobs_and_is_deterministic():
    rng = np.random.default_rng(4)
    x = blobs(rng, [[0, 0], [10, 10], [0, 10]])
    first = kmeans(x, 3, seed=9)
    second = kmeans(x, 3, seed=9)
    assert np.array_equal(first.labels, second.labels)
    assert first.inertia == second.inertia
    for start in (0, 8, 16):
        block = first.labels[start:start + 8]
        assert len(set(block.tolist())) == 1
    assert len(set(first.labels.tolist())) == 3


def test_kmeans_inertia_history_nonincreasing():
    rng = np.random.default_rng(5)
    x = rng.uniform(0, 10, size=(40, 3))
    result = kmeans(x, 4, seed=1, restarts=1)
    hist = result.inertia_history
    assert all(b <= a + 1e-9 for a, b in zip(hist, hist[1:]))


def test_kmeans_restarts_never_hurt():
    rng = np.random.default_rng(6)
    x = rng.uniform(0, 10, size=(30, 2))
    # restart 1 of N shares the rng sequence with restarts=1
    single = kmeans(x, 5, seed=3, restarts=1)
    many = kmeans(x, 5, seed=3, restarts=10)
    assert many.inertia <= single.inertia + 1e-9


def test_kmeans_guards():
    x = np.eye(3)
    with pytest.raises(ValueError):
        kmeans(x, 1)
    with pytest.raises(ValueError):
        kmeans(x, 4)


def silhouette_oracle(x, labels):
    n = len(x)
    scores = []
    for i in range(n):
        own = [j for j in range(n) if labels[j] == labels[i] and j != i]
        if not own:
            scores.append(0.0)
            continue
        a = np.mean([np.linalg.norm(x[i] - x[j]) for j in own])
        b = min(np.mean([np.linalg.norm(x[i] - x[j])
                         for j in range(n) if labels[j] == lab])
                for lab in set(labels) if lab != labels[i])
        scores.append(0.0 if max(a, b) == 0 else (b - a) / max(a, b))
    return float(np.mean(scores))


@pytest.mark.parametrize("seed", range(6))
def test_silhouette_matches_bruteforce(seed):
    rng = np.random.default_rng(100 + seed)
    x = rng.uniform(0, 5, size=(12, 3))
    labels = rng.integers(0, 3, 12)
    while len(set(labels.tolist())) < 2:
        labels = rng.integers(0, 3, 12)
    assert silhouette(x, labels) == pytest.approx(
        silhouette_oracle(x, labels.tolist()), abs=1e-12)


def test_silhouette_extremes():
    rng = np.random.default_rng(7)
    x = blobs(rng, [[0, 0], [100, 100]], spread=0.01)
    labels = np.array([0] * 8 + [1] * 8)
    assert silhouette(x, labels) > 0.99
    with pytest.raises(ValueError):
        silhouette(x, np.zeros(16))


@pytest.mark.parametrize("n_blobs", [2, 3])
def test_select_k_finds_planted_count(n_blobs):
    rng = np.random.default_rng(8)
    centers = [[0, 0], [20, 0], [10, 17]][:n_blobs]
    x = blobs(rng, centers, per=10, spread=0.5)
    result = select_k(x, seed=1)
    assert result.k == n_blobs
    assert result.silhouette > 0.8
    assert set(result.per_k_silhouette) == set(range(2, 11))
    assert result.per_k_silhouette[n_blobs] == result.silhouette


def test_select_k_tie_prefers_smaller(monkeypatch):
    monkeypatch.setattr(cluster_mod, "silhouette", lambda x, labels: 0.5)
    rng = np.random.default_rng(9)
    x = rng.uniform(0, 10, size=(12, 2))
    result = cluster_mod.select_k(x, k_min=2, k_max=6, seed=1)
    assert result.k == 2


def test_select_k_clamps_to_row_count():
    rng = np.random.default_rng(10)
    x = blobs(rng, [[0, 0], [10, 10]], per=2, spread=0.01)  # 4 rows
    result = select_k(x, k_min=2, k_max=10, seed=1)
    assert result.clamped
    assert max(result.per_k_silhouette) <= 4
    with pytest.raises(ValueError):
        select_k(x, k_min=5, k_max=10)


def test_loadings_report_shape():
    rng = np.random.default_rng(11)
    x = blobs(rng, [[0, 0, 0], [5, 5, 5]], per=6, spread=0.2)
    pca = pca_fit(x, FixedComponents(2))
    scores = pca.transform(x)
    selection = select_k(scores, k_min=2, k_max=3, seed=2)
    report = loadings_report(pca, selection, ["f0", "f1", "f2"], scores, top_n=2)
    assert len(report["components"]) == 2
    for comp in report["components"]:
        mags = [abs(f["loading"]) for f in comp["top_features"]]
        assert mags == sorted(mags, reverse=True)
        assert len(comp["top_features"]) == 2
    assert sum(c["size"] for c in report["clusters"]) == len(x)
