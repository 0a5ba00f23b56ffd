"""Company-level behavioral clustering: features → z-scores → PCA → K-Means.

The 36-column feature layout is frozen: hourly[0..23], weekly[0..6]
(0=Monday), marketing_flag, content mix proportions (promotional, crm,
alert), total volume. Proportions carry the content signal so volume
lives only in the final column. Every randomized routine takes an
explicit seed and is deterministic for a fixed one.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

FEATURE_NAMES = (
    [f"hourly_{h:02d}" for h in range(24)]
    + [f"weekly_{d}" for d in range(7)]
    + ["marketing_flag", "mix_promotional", "mix_crm", "mix_alert", "total_volume"]
)

DEFAULT_SEED = 42
_MAX_LLOYD_ITER = 300


class InsufficientCompaniesError(ValueError):
    pass


@dataclass
class FeatureMatrix:
    companies: list[str]
    matrix: np.ndarray  # shape (n_companies, 36)
    feature_names: list[str] = field(default_factory=lambda: list(FEATURE_NAMES))
    no_content_companies: list[str] = field(default_factory=list)


def build_features(store, profiles, classifications: dict) -> FeatureMatrix:
    """One 36-dim row per company, name-sorted for determinism."""
    companies = store.services()
    if len(companies) < 2:
        raise InsufficientCompaniesError(
            f"need >= 2 companies with mail, have {len(companies)}")
    marketing = {p.service_name: p.uses_marketing_provider for p in profiles}
    rows = []
    flagged: list[str] = []
    for company in companies:
        records = store.service_records(company)
        hourly = np.zeros(24)
        weekly = np.zeros(7)
        label_counts = {"promotional": 0, "crm": 0, "alert": 0}
        for rec in records:
            if rec.received_local is not None:
                hourly[rec.received_local.hour] += 1
                weekly[rec.received_local.weekday()] += 1
            cls = classifications.get(rec.message_id)
            if cls is not None:
                label_counts[cls.label] += 1
        classified = sum(label_counts.values())
        if classified > 0:
            mix = np.array([label_counts["promotional"], label_counts["crm"],
                            label_counts["alert"]], dtype=float) / classified
        else:
            mix = np.zeros(3)
            flagged.append(company)
        row = np.concatenate([
            hourly, weekly,
            [1.0 if marketing.get(company) else 0.0],
            mix,
            [float(len(records))],
        ])
        rows.append(row)
    return FeatureMatrix(companies=companies, matrix=np.array(rows),
                         no_content_companies=flagged)


@dataclass
class StandardizeResult:
    matrix: np.ndarray
    means: np.ndarray
    stds: np.ndarray
    zero_variance_cols: list[int]


def standardize(matrix: np.ndarray) -> StandardizeResult:
    """Column z-scores (population stddev); constant columns become zeros."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] < 2:
        raise ValueError("standardize needs a 2-d matrix with >= 2 rows")
    means = matrix.mean(axis=0)
    stds = matrix.std(axis=0)
    zero_cols = [int(i) for i in np.flatnonzero(stds == 0.0)]
    safe = np.where(stds == 0.0, 1.0, stds)
    z = (matrix - means) / safe
    z[:, stds == 0.0] = 0.0
    if zero_cols:
        log.info("standardize: %d zero-variance columns zeroed", len(zero_cols))
    return StandardizeResult(matrix=z, means=means, stds=stds,
                             zero_variance_cols=zero_cols)


@dataclass(frozen=True)
class FixedComponents:
    n: int


@dataclass(frozen=True)
class VarianceThreshold:
    ratio: float


@dataclass
class PcaModel:
    mean: np.ndarray
    components: np.ndarray               # shape (m, d), rows orthonormal
    explained_variance_ratio: list[float]
    eigenvalues: list[float]             # all, descending

    def transform(self, matrix: np.ndarray) -> np.ndarray:
        return (np.asarray(matrix, dtype=float) - self.mean) @ self.components.T


def pca_fit(matrix: np.ndarray,
            target: FixedComponents | VarianceThreshold = FixedComponents(5)
            ) -> PcaModel:
    """Principal axes of the centered data via covariance eigendecomposition.

    Population covariance (divide by n); each component's sign is fixed
    so its largest-magnitude entry is positive. Requests beyond the data
    rank clamp with a warning.
    """
    x = np.asarray(matrix, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("pca_fit needs a 2-d matrix with >= 2 rows")
    n = x.shape[0]
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / n
    eigenvalues, eigenvectors = np.linalg.eigh(cov)
    order = np.argsort(eigenvalues)[::-1]
    eigenvalues = np.clip(eigenvalues[order], 0.0, None)
    eigenvectors = eigenvectors[:, order]

    total = eigenvalues.sum()
    rank = int((eigenvalues > max(total, 1.0) * 1e-12).sum())
    rank = max(rank, 1)

    if isinstance(target, FixedComponents):
        m = target.n
        if m > rank:
            log.warning("pca: requested %d components, data rank %d; clamping",
                        m, rank)
            m = rank
    elif isinstance(target, VarianceThreshold):
        if not (0.0 < target.ratio <= 1.0):
            raise ValueError(f"variance threshold out of (0,1]: {target.ratio}")
        cumulative = np.cumsum(eigenvalues) / total if total > 0 else eigenvalues
        m = int(np.searchsorted(cumulative, target.ratio) + 1)
        m = min(m, rank)
    else:
        raise TypeError(f"bad pca target: {target!r}")
    m = max(m, 1)

    components = eigenvectors[:, :m].T.copy()
    for i in range(m):
        j = int(np.argmax(np.abs(components[i])))
        if components[i, j] < 0:
            components[i] = -components[i]

    ratios = (eigenvalues[:m] / total).tolist() if total > 0 else [0.0] * m
    return PcaModel(mean=mean, components=components,
                    explained_variance_ratio=[float(r) for r in ratios],
                    eigenvalues=[float(v) for v in eigenvalues])


@dataclass
class KmeansResult:
    labels: np.ndarray
    centroids: np.ndarray
    inertia: float
    inertia_history: list[float]  # per Lloyd iteration of the winning restart


def _kmeans_pp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centroids = np.empty((k, x.shape[1]))
    first = int(rng.integers(n))
    centroids[0] = x[first]
    closest_sq = ((x - centroids[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = closest_sq.sum()
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=closest_sq / total))
        centroids[i] = x[idx]
        dist_sq = ((x - centroids[i]) ** 2).sum(axis=1)
        closest_sq = np.minimum(closest_sq, dist_sq)
    return centroids


def _lloyd(x: np.ndarray, centroids: np.ndarray
           ) -> tuple[np.ndarray, np.ndarray, float, list[float]]:
    n, k = x.shape[0], centroids.shape[0]
    labels = np.full(n, -1)
    history: list[float] = []
    for _ in range(_MAX_LLOYD_ITER):
        dists = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_labels = dists.argmin(axis=1)
        history.append(float(dists[np.arange(n), new_labels].sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            members = x[labels == c]
            if len(members) > 0:
                centroids[c] = members.mean(axis=0)
            else:
                # re-seed an empty cluster with the worst-fit point
                per_point = dists[np.arange(n), labels]
                centroids[c] = x[int(per_point.argmax())]
    dists = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    labels = dists.argmin(axis=1)
    inertia = float(dists[np.arange(n), labels].sum())
    return labels, centroids, inertia, history


def kmeans(matrix: np.ndarray, k: int, seed: int = DEFAULT_SEED,
           restarts: int = 10) -> KmeansResult:
    """Best-of-restarts K-Means with k-means++ seeding and Lloyd refinement."""
    x = np.asarray(matrix, dtype=float)
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if x.shape[0] < k:
        raise ValueError(f"{x.shape[0]} rows cannot support k={k}")
    rng = np.random.default_rng(seed)
    best: KmeansResult | None = None
    for _ in range(max(1, restarts)):
        centroids = _kmeans_pp_init(x, k, rng)
        labels, centroids, inertia, history = _lloyd(x, centroids.copy())
        if best is None or inertia < best.inertia:
            best = KmeansResult(labels=labels, centroids=centroids,
                                inertia=inertia, inertia_history=history)
    assert best is not None
    return best


def silhouette(matrix: np.ndarray, labels: np.ndarray) -> float:
    """Mean silhouette over points; singleton-cluster points score 0."""
    x = np.asarray(matrix, dtype=float)
    labels = np.asarray(labels)
    unique = np.unique(labels)
    if len(unique) < 2:
        raise ValueError("silhouette undefined for a single cluster")
    n = x.shape[0]
    diffs = x[:, None, :] - x[None, :, :]
    dists = np.sqrt((diffs ** 2).sum(axis=2))
    scores = np.zeros(n)
    for i in range(n):
        own = labels[i]
        own_mask = labels == own
        own_size = int(own_mask.sum())
        if own_size <= 1:
            scores[i] = 0.0
            continue
        a = dists[i][own_mask].sum() / (own_size - 1)
        b = min(dists[i][labels == other].mean()
                for other in unique if other != own)
        denom = max(a, b)
        scores[i] = 0.0 if denom == 0.0 else (b - a) / denom
    return float(scores.mean())


@dataclass
class SelectionResult:
    k: int
    labels: np.ndarray
    centroids: np.ndarray
    silhouette: float
    inertia: float
    per_k_silhouette: dict[int, float]
    clamped: bool = False


def select_k(matrix: np.ndarray, k_min: int = 2, k_max: int = 10,
             seed: int = DEFAULT_SEED, restarts: int = 10) -> SelectionResult:
    """Fit every k in range, keep the best silhouette (ties favor smaller k)."""
    x = np.asarray(matrix, dtype=float)
    n = x.shape[0]
    clamped = False
    if k_max > n:
        log.warning("select_k: k range clamped to %d (only %d rows)", n, n)
        k_max = n
        clamped = True
    if k_min > k_max:
        raise ValueError(f"empty k range after clamping: {k_min}..{k_max}")

    best: SelectionResult | None = None
    per_k: dict[int, float] = {}
    for k in range(k_min, k_max + 1):
        result = kmeans(x, k, seed=seed, restarts=restarts)
        score = silhouette(x, result.labels)
        per_k[k] = score
        if best is None or score > best.silhouette:
            best = SelectionResult(k=k, labels=result.labels,
                                   centroids=result.centroids,
                                   silhouette=score, inertia=result.inertia,
                                   per_k_silhouette=per_k, clamped=clamped)
    assert best is not None
    best.per_k_silhouette = per_k
    return best


def loadings_report(pca: PcaModel, selection: SelectionResult,
                    feature_names: list[str], scores: np.ndarray,
                    top_n: int = 5) -> dict:
    """Interpretation aid: per-cluster mean component scores + top loadings."""
    report: dict = {"components": [], "clusters": []}
    for i, component in enumerate(pca.components):
        idx = np.argsort(-np.abs(component))[:top_n]
        report["components"].append({
            "component": i + 1,
            "explained_variance_ratio": pca.explained_variance_ratio[i],
            "top_features": [
                {"feature": feature_names[int(j)], "loading": float(component[j])}
                for j in idx
            ],
        })
    for cluster_id in sorted(set(int(c) for c in selection.labels)):
        member_scores = scores[selection.labels == cluster_id]
        report["clusters"].append({
            "cluster": cluster_id,
            "size": int((selection.labels == cluster_id).sum()),
            "mean_component_scores": [float(v) for v in member_scores.mean(axis=0)],
        })
    return report
