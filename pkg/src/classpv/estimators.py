"""Fitted test-statistic families for the permutation engine, with incremental
single-point refits (remove / replace / augment).

Every fit computes its sums over a canonical row ordering, so the fitted
statistic is exactly symmetric in each class's training rows: shuffling the
rows of one group changes no output bit. That symmetry is what makes the
permutation p-values valid, so it is enforced structurally rather than
approximately.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .core import TrainingSet, check_label
from .numerics import SingularMatrixError, SpdMatrix, f_cdf, mahalanobis_sq
from .oracle import log_weighted_lr

__all__ = [
    "Augment",
    "DegenerateFitError",
    "KnnCaches",
    "KnnStatistic",
    "LogisticFit",
    "LogisticStatistic",
    "PluginStatistic",
    "PooledGaussianFit",
    "Remove",
    "Replace",
    "TypicalityStatistic",
    "default_k",
    "fit_logistic",
    "fit_pooled_gaussian",
    "gaussian_plugin_statistic",
    "gaussian_update",
    "knn_augmented_counts",
    "knn_fit",
    "knn_posterior",
    "typicality_index",
]


class DegenerateFitError(RuntimeError):
    """A fit's covariance (or normal equations) lost rank; carries the failing pivot."""

    def __init__(self, message: str, pivot_index: int | None = None):
        super().__init__(message)
        self.pivot_index = pivot_index


def _canonical_order(features: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Row permutation sorting by (label, features); used so sums are order-free."""
    keys = tuple(features[:, c] for c in reversed(range(features.shape[1]))) + (labels,)
    return np.lexsort(keys)


# ---------------------------------------------------------------------------
# Pooled-covariance Gaussian fit and its update formulae
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PooledGaussianFit:
    """Per-class means with the pooled covariance (divisor n - L)."""

    data: TrainingSet
    means: np.ndarray          # (L, q)
    sigma: SpdMatrix
    group_sizes: np.ndarray    # (L,)

    def __post_init__(self):
        self.means.setflags(write=False)
        self.group_sizes.setflags(write=False)

    @property
    def n(self) -> int:
        return int(self.group_sizes.sum())

    @property
    def n_classes(self) -> int:
        return self.group_sizes.size

    @property
    def q(self) -> int:
        return self.means.shape[1]

    @property
    def class_weights(self) -> np.ndarray:
        return self.group_sizes / self.n


def fit_pooled_gaussian(d: TrainingSet) -> PooledGaussianFit:
    """Groupwise means and pooled covariance of a training set."""
    n, n_classes = d.n, d.n_classes
    if n <= n_classes:
        raise ValueError(f"pooled covariance needs n > L, got n={n}, L={n_classes}")
    order = _canonical_order(d.features, d.labels)
    feats = d.features[order]
    labs = d.labels[order]
    means = np.empty((n_classes, d.q))
    for theta in range(1, n_classes + 1):
        means[theta - 1] = feats[labs == theta].mean(axis=0)
    deviations = feats - means[labs - 1]
    scatter = deviations.T @ deviations
    try:
        sigma = SpdMatrix(scatter / (n - n_classes))
    except SingularMatrixError as err:
        raise DegenerateFitError(
            f"pooled covariance is singular ({err})", pivot_index=err.pivot_index
        ) from err
    return PooledGaussianFit(data=d, means=means, sigma=sigma, group_sizes=d.group_sizes)


@dataclass(frozen=True)
class Remove:
    index: int


@dataclass(frozen=True, eq=False)
class Replace:
    index: int
    point: np.ndarray


@dataclass(frozen=True, eq=False)
class Augment:
    point: np.ndarray
    label: int


def gaussian_update(fit: PooledGaussianFit, edit: Remove | Replace | Augment) -> PooledGaussianFit:
    """Apply a single-point edit to a pooled Gaussian fit in O(q^2).

    The result matches a from-scratch refit of the edited data to within
    1e-9 relative error. Removing the last member of a group is rejected, and
    an edit that drives the pooled covariance singular raises
    DegenerateFitError.
    """
    d = fit.data
    n, n_classes = fit.n, fit.n_classes
    scatter = (n - n_classes) * fit.sigma.matrix
    means = np.array(fit.means, copy=True)
    sizes = np.array(fit.group_sizes, copy=True)

    if isinstance(edit, Remove):
        i = edit.index
        theta = int(d.labels[i])
        big_n = int(sizes[theta - 1])
        if big_n < 2:
            raise ValueError(f"cannot remove row {i}: class {theta} would become empty")
        x_i = d.features[i]
        dev = x_i - means[theta - 1]
        scatter = scatter - (big_n / (big_n - 1.0)) * np.outer(dev, dev)
        means[theta - 1] = means[theta - 1] - dev / (big_n - 1.0)
        sizes[theta - 1] -= 1
        new_data = d.remove(i)
    elif isinstance(edit, Replace):
        i = edit.index
        theta = int(d.labels[i])
        big_n = int(sizes[theta - 1])
        x_i = d.features[i]
        x = np.asarray(edit.point, dtype=float)
        if big_n > 1:
            mean_wo = (big_n * means[theta - 1] - x_i) / (big_n - 1.0)
            dev_new = x - mean_wo
            dev_old = x_i - mean_wo
            scatter = scatter + (1.0 - 1.0 / big_n) * (np.outer(dev_new, dev_new) - np.outer(dev_old, dev_old))
        means[theta - 1] = means[theta - 1] + (x - x_i) / big_n
        new_data = d.replace(i, x)
    elif isinstance(edit, Augment):
        theta = check_label(edit.label, n_classes)
        x = np.asarray(edit.point, dtype=float)
        big_n = int(sizes[theta - 1])
        dev = x - means[theta - 1]
        scatter = scatter + np.outer(dev, dev) / (1.0 + 1.0 / big_n)
        means[theta - 1] = means[theta - 1] + dev / (big_n + 1.0)
        sizes[theta - 1] += 1
        new_data = d.augment(x, theta)
    else:
        raise TypeError(f"unknown edit {edit!r}")

    new_n = int(sizes.sum())
    if new_n <= n_classes:
        raise ValueError(f"edit leaves n={new_n} <= L={n_classes}")
    try:
        sigma = SpdMatrix(scatter / (new_n - n_classes))
    except SingularMatrixError as err:
        raise DegenerateFitError(
            f"edited covariance is singular ({err})", pivot_index=err.pivot_index
        ) from err
    return PooledGaussianFit(data=new_data, means=means, sigma=sigma, group_sizes=sizes)


def log_plugin_statistic(fit: PooledGaussianFit, theta: int, x: np.ndarray) -> np.ndarray | float:
    """log of the weighted likelihood-ratio statistic at the fitted parameters."""
    check_label(theta, fit.n_classes)
    covs = tuple(fit.sigma for _ in range(fit.n_classes))
    return log_weighted_lr(fit.class_weights, fit.means, covs, theta, x)


def gaussian_plugin_statistic(fit: PooledGaussianFit, theta: int, x: np.ndarray) -> float:
    """Known-model statistic with (N_c/n, fitted means, pooled covariance) plugged in."""
    return math.exp(log_plugin_statistic(fit, theta, np.asarray(x, dtype=float)))


def typicality_index(fit: PooledGaussianFit, theta: int, x: np.ndarray) -> np.ndarray | float:
    """Exact-pivot p-value from the scaled squared Mahalanobis distance to class theta.

    The scaling constant turns the distance into an F-distributed pivot, so the
    index is an exact p-value under a homoscedastic Gaussian model.
    """
    check_label(theta, fit.n_classes)
    n, n_classes, q = fit.n, fit.n_classes, fit.q
    if n < n_classes + q:
        raise ValueError(f"typicality needs n >= L + q, got n={n}, L={n_classes}, q={q}")
    d2 = n - n_classes - q + 1
    c_theta = d2 / (q * (n - n_classes) * (1.0 + 1.0 / fit.group_sizes[theta - 1]))
    msq = mahalanobis_sq(np.asarray(x, dtype=float), fit.means[theta - 1], fit.sigma)
    if np.ndim(msq) == 0:
        return 1.0 - f_cdf(c_theta * float(msq), q, d2)
    return np.array([1.0 - f_cdf(c_theta * float(v), q, d2) for v in msq])


# ---------------------------------------------------------------------------
# k-nearest-neighbor caches and posterior estimate
# ---------------------------------------------------------------------------


def default_k(n: int) -> int:
    """ceil(n^(2/3)): grows without bound while k/n -> 0."""
    return max(1, math.ceil(n ** (2.0 / 3.0)))


def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Squared euclidean distances between rows of a and rows of b, chunked.

    Computed as explicit difference-square-sums so that distances between the
    same pair of points are bit-identical no matter which matrix they sit in;
    the tie cases in the augmented-count rule rely on exact comparisons.
    """
    out = np.empty((a.shape[0], b.shape[0]))
    chunk = max(1, int(2**22 / max(1, b.shape[0] * max(1, a.shape[1]))))
    for start in range(0, a.shape[0], chunk):
        stop = min(start + chunk, a.shape[0])
        diff = a[start:stop, None, :] - b[None, :, :]
        out[start:stop] = np.sum(diff * diff, axis=2)
    return out


def _feature_scales(d: TrainingSet) -> np.ndarray:
    order = _canonical_order(d.features, d.labels)
    scales = d.features[order].std(axis=0, ddof=1)
    zero = scales == 0.0
    if np.any(zero):
        warnings.warn(
            f"feature(s) {np.flatnonzero(zero).tolist()} have zero variance; scale set to 1",
            stacklevel=3,
        )
        scales = np.where(zero, 1.0, scales)
    return scales


@dataclass(frozen=True, eq=False)
class KnnCaches:
    """Per-point ball radii and per-class ball counts for the k-NN statistic.

    Radii are stored squared; every comparison in this module is done on
    squared distances so no square root ever enters a tie decision.
    """

    data: TrainingSet
    k: int
    scales: np.ndarray          # (q,), 1.0 everywhere when scaling is off
    radius_sq: np.ndarray       # (n,), squared k-th-neighbor radius per point
    radius_km1_sq: np.ndarray   # (n,), squared (k-1)-th radius, 0 for k = 1
    counts_km1: np.ndarray      # (n, L), class counts within the (k-1)-radius
    counts_k: np.ndarray        # (n, L), class counts within the k-radius

    def __post_init__(self):
        for name in ("scales", "radius_sq", "radius_km1_sq", "counts_km1", "counts_k"):
            getattr(self, name).setflags(write=False)

    def scaled_features(self) -> np.ndarray:
        return self.data.features / self.scales


def knn_fit(d: TrainingSet, k: int | None = None, scaling: str = "none") -> KnnCaches:
    """Build the n(1 + 2L) cached numbers driving the O(n) augmented-data rule.

    scaling is "none" or "per-feature-sd"; the latter divides each feature by
    its sample standard deviation over the full training set.
    """
    if k is None:
        k = default_k(d.n)
    if not 1 <= k <= d.n:
        raise ValueError(f"k must lie in 1..n={d.n}, got {k}")
    if scaling not in ("none", "per-feature-sd"):
        raise ValueError(f"unknown scaling {scaling!r}")
    scales = _feature_scales(d) if scaling == "per-feature-sd" else np.ones(d.q)
    scaled = d.features / scales
    dsq = _sq_dists(scaled, scaled)
    part = np.partition(dsq, k - 1, axis=1)
    radius_sq = part[:, k - 1]
    radius_km1_sq = part[:, k - 2] if k >= 2 else np.zeros(d.n)
    counts_km1 = _ball_counts(dsq, radius_km1_sq, d.labels, d.n_classes)
    counts_k = _ball_counts(dsq, radius_sq, d.labels, d.n_classes)
    return KnnCaches(
        data=d,
        k=k,
        scales=scales,
        radius_sq=radius_sq,
        radius_km1_sq=radius_km1_sq,
        counts_km1=counts_km1,
        counts_k=counts_k,
    )


def _ball_counts(dsq: np.ndarray, radius_sq: np.ndarray, labels: np.ndarray, n_classes: int) -> np.ndarray:
    in_ball = dsq <= radius_sq[:, None]
    counts = np.empty((dsq.shape[0], n_classes), dtype=np.int64)
    for b in range(1, n_classes + 1):
        counts[:, b - 1] = np.count_nonzero(in_ball[:, labels == b], axis=1)
    return counts


def _posterior_from_counts(
    counts: np.ndarray,
    theta: int,
    group_sizes: np.ndarray,
    class_weights: np.ndarray | None,
) -> np.ndarray:
    """Posterior weight of class theta from per-class ball counts.

    With no explicit class weights this is the plain count ratio; explicit
    weights go through the weighted empirical-measure form.
    """
    counts = np.atleast_2d(counts)
    if class_weights is None:
        return counts[:, theta - 1] / counts.sum(axis=1)
    rates = class_weights[None, :] * counts / group_sizes[None, :]
    return rates[:, theta - 1] / rates.sum(axis=1)


def _knn_weight(
    d: TrainingSet,
    k: int,
    scales: np.ndarray,
    theta: int,
    x: np.ndarray,
    class_weights: np.ndarray | None,
) -> np.ndarray:
    """k-NN posterior weight of class theta at each row of x; O(n q) per row."""
    pts = np.atleast_2d(np.asarray(x, dtype=float)) / scales
    dsq = _sq_dists(pts, d.features / scales)
    radius = np.partition(dsq, k - 1, axis=1)[:, k - 1]
    counts = _ball_counts(dsq, radius, d.labels, d.n_classes)
    return _posterior_from_counts(counts, theta, d.group_sizes, class_weights)


def knn_posterior(
    caches: KnnCaches,
    theta: int,
    x: np.ndarray,
    class_weights: np.ndarray | None = None,
) -> float:
    """Fraction of the k-neighborhood of x belonging to class theta.

    The ball is closed, so distance ties at the boundary radius are all
    included and the neighborhood may hold more than k points.
    """
    check_label(theta, caches.data.n_classes)
    out = _knn_weight(caches.data, caches.k, caches.scales, theta, x, class_weights)
    return float(out[0]) if np.asarray(x).ndim == 1 else out


def knn_augmented_counts(caches: KnnCaches, x: np.ndarray, theta: int) -> np.ndarray:
    """Class counts N_{k,b} at every training point after adding (x, theta).

    Case split on the distance from each training point to x versus that
    point's cached k-th radius: strictly inside shrinks the ball to the
    (k-1)-radius, an exact tie keeps the k-radius, strictly outside leaves the
    counts untouched; the added point contributes to its own class whenever it
    is inside. O(n) per new point. Assumes the metric (the cached scales) is
    held fixed.
    """
    check_label(theta, caches.data.n_classes)
    pts = np.asarray(x, dtype=float)[None, :] / caches.scales
    dsq = _sq_dists(pts, caches.scaled_features())[0]
    counts = np.array(caches.counts_k, copy=True)
    inside = dsq < caches.radius_sq
    tie = dsq == caches.radius_sq
    counts[inside] = caches.counts_km1[inside]
    counts[inside | tie, theta - 1] += 1
    return counts


def _knn_query_augmented_counts(caches: KnnCaches, x: np.ndarray, theta: int) -> np.ndarray:
    """Class counts in the k-ball of the query x itself within the augmented data."""
    pts = np.asarray(x, dtype=float)[None, :] / caches.scales
    dsq = _sq_dists(pts, caches.scaled_features())[0]
    with_self = np.append(dsq, 0.0)
    radius = np.partition(with_self, caches.k - 1)[caches.k - 1]
    in_ball = dsq <= radius
    counts = np.empty(caches.data.n_classes, dtype=np.int64)
    for b in range(1, caches.data.n_classes + 1):
        counts[b - 1] = np.count_nonzero(in_ball & (caches.data.labels == b))
    counts[theta - 1] += 1  # the added point sits at distance 0 of itself
    return counts


# ---------------------------------------------------------------------------
# Logistic regression (two classes)
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LogisticFit:
    """Maximum-likelihood logistic fit for two classes, with separation handling.

    On convergence the log-likelihood gradient norm is at most 1e-8. When the
    classes are (nearly) separable the coefficients are the capped-iteration
    output and `separated` is set; the statistic's ordering stays usable.
    """

    data: TrainingSet
    intercept: float
    coefficients: np.ndarray   # (q,)
    iterations: int
    gradient_norm: float
    separated: bool

    def __post_init__(self):
        self.coefficients.setflags(write=False)


_LOGISTIC_MAX_ITER = 100
_LOGISTIC_GRAD_TOL = 1e-8
_LOGISTIC_COEF_CAP = 30.0


def fit_logistic(d: TrainingSet) -> LogisticFit:
    """Fit log-odds of class 2 as an affine function of the features by IRLS."""
    if d.n_classes != 2:
        raise ValueError(f"logistic statistic requires exactly 2 classes, got {d.n_classes}")
    order = _canonical_order(d.features, d.labels)
    feats = d.features[order]
    y = (d.labels[order] == 2).astype(float)
    design = np.hstack([np.ones((d.n, 1)), feats])
    beta = np.zeros(design.shape[1])
    grad_norm = math.inf
    separated = False
    prev_deviance = math.inf
    deviance = math.inf
    iterations = 0
    for iterations in range(1, _LOGISTIC_MAX_ITER + 1):
        eta = np.clip(design @ beta, -36.0, 36.0)
        p = 1.0 / (1.0 + np.exp(-eta))
        grad = design.T @ (y - p)
        grad_norm = float(np.linalg.norm(grad))
        prev_deviance = deviance
        deviance = -2.0 * float(y @ np.log(p) + (1.0 - y) @ np.log1p(-p))
        if grad_norm <= _LOGISTIC_GRAD_TOL:
            break
        weights = p * (1.0 - p)
        hessian = design.T @ (design * weights[:, None])
        try:
            step = np.linalg.solve(hessian, grad)
        except np.linalg.LinAlgError:
            warnings.warn("singular weighted normal equations; adding ridge 1e-8", stacklevel=2)
            hessian = hessian + 1e-8 * np.eye(hessian.shape[0])
            step = np.linalg.solve(hessian, grad)
        beta = beta + step
        if float(np.max(np.abs(beta))) > _LOGISTIC_COEF_CAP:
            separated = True
            break
    else:
        if grad_norm > _LOGISTIC_GRAD_TOL and deviance < prev_deviance:
            separated = True
    return LogisticFit(
        data=d,
        intercept=float(beta[0]),
        coefficients=np.array(beta[1:]),
        iterations=iterations,
        gradient_norm=grad_norm,
        separated=separated,
    )


# ---------------------------------------------------------------------------
# Statistic-model wrappers consumed by the permutation engine
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PluginStatistic:
    """Gaussian plug-in statistic: larger means class theta is less plausible."""

    fit: PooledGaussianFit
    kind: str = field(default="plugin", init=False)

    @staticmethod
    def from_data(d: TrainingSet) -> "PluginStatistic":
        return PluginStatistic(fit_pooled_gaussian(d))

    @property
    def data(self) -> TrainingSet:
        return self.fit.data

    def evaluate(self, theta: int, x: np.ndarray) -> float:
        # log scale; only the ordering enters the permutation count
        return float(log_plugin_statistic(self.fit, theta, np.asarray(x, dtype=float)))

    def evaluate_batch(self, theta: int, pts: np.ndarray) -> np.ndarray:
        return np.atleast_1d(log_plugin_statistic(self.fit, theta, np.atleast_2d(pts)))

    def remove(self, i: int) -> "PluginStatistic":
        return PluginStatistic(gaussian_update(self.fit, Remove(i)))

    def replace(self, i: int, x: np.ndarray) -> "PluginStatistic":
        return PluginStatistic(gaussian_update(self.fit, Replace(i, x)))

    def augment(self, x: np.ndarray, theta: int) -> "PluginStatistic":
        return PluginStatistic(gaussian_update(self.fit, Augment(x, theta)))


@dataclass(frozen=True, eq=False)
class KnnStatistic:
    """Negative k-NN posterior weight of the hypothesized class.

    Caches are built lazily: plain evaluations need only distances from the
    query, while the valid-shortcut path uses the cached radii and counts.
    """

    data: TrainingSet
    k: int
    scaling: str = "none"
    class_weights: tuple[float, ...] | None = None
    kind: str = field(default="knn", init=False)

    @staticmethod
    def from_data(
        d: TrainingSet,
        k: int | None = None,
        scaling: str = "none",
        class_weights: tuple[float, ...] | None = None,
    ) -> "KnnStatistic":
        return KnnStatistic(d, k if k is not None else default_k(d.n), scaling, class_weights)

    @cached_property
    def caches(self) -> KnnCaches:
        # only the valid-shortcut path needs the O(n^2) cache build
        return knn_fit(self.data, self.k, self.scaling)

    @cached_property
    def scales(self) -> np.ndarray:
        if self.scaling == "per-feature-sd":
            return _feature_scales(self.data)
        return np.ones(self.data.q)

    @property
    def _weights(self) -> np.ndarray | None:
        return None if self.class_weights is None else np.asarray(self.class_weights, dtype=float)

    def evaluate(self, theta: int, x: np.ndarray) -> float:
        check_label(theta, self.data.n_classes)
        return -float(_knn_weight(self.data, self.k, self.scales, theta, np.asarray(x, dtype=float), self._weights)[0])

    def evaluate_batch(self, theta: int, pts: np.ndarray) -> np.ndarray:
        check_label(theta, self.data.n_classes)
        return -_knn_weight(self.data, self.k, self.scales, theta, np.atleast_2d(pts), self._weights)

    def _edited(self, d: TrainingSet) -> "KnnStatistic":
        return KnnStatistic(d, self.k, self.scaling, self.class_weights)

    def remove(self, i: int) -> "KnnStatistic":
        return self._edited(self.data.remove(i))

    def replace(self, i: int, x: np.ndarray) -> "KnnStatistic":
        return self._edited(self.data.replace(i, x))

    def augment(self, x: np.ndarray, theta: int) -> "KnnStatistic":
        return self._edited(self.data.augment(x, theta))

    def valid_shortcut_values(self, theta: int, x: np.ndarray) -> tuple[float, np.ndarray]:
        """Statistic at x and at every group-theta point, all under the data
        augmented with (x, theta).

        With a fixed metric this runs off the cached counts in O(n); with
        data-driven scaling the scales must be recomputed on the augmented
        data, so the evaluations are done directly there instead.
        """
        x = np.asarray(x, dtype=float)
        d = self.data
        group = d.group(theta)
        aug_sizes = np.array(d.group_sizes, copy=True)
        aug_sizes[theta - 1] += 1
        weights = self._weights
        if self.scaling == "none":
            caches = self.caches
            ref_counts = _knn_query_augmented_counts(caches, x, theta)
            swap_counts = knn_augmented_counts(caches, x, theta)[group]
            ref = -float(_posterior_from_counts(ref_counts, theta, aug_sizes, weights)[0])
            swaps = -_posterior_from_counts(swap_counts, theta, aug_sizes, weights)
            return ref, swaps
        aug = self.data.augment(x, theta)
        scales = _feature_scales(aug)
        scaled = aug.features / scales
        queries = np.vstack([x[None, :], d.features[group]]) / scales
        dsq = _sq_dists(queries, scaled)
        radius = np.partition(dsq, self.k - 1, axis=1)[:, self.k - 1]
        counts = _ball_counts(dsq, radius, aug.labels, aug.n_classes)
        vals = -_posterior_from_counts(counts, theta, aug_sizes, weights)
        return float(vals[0]), vals[1:]


@dataclass(frozen=True, eq=False)
class LogisticStatistic:
    """Signed logistic score: the class-2 logit tests class 1 and vice versa."""

    fit: LogisticFit
    kind: str = field(default="logistic", init=False)

    @staticmethod
    def from_data(d: TrainingSet) -> "LogisticStatistic":
        return LogisticStatistic(fit_logistic(d))

    @property
    def data(self) -> TrainingSet:
        return self.fit.data

    def evaluate(self, theta: int, x: np.ndarray) -> float:
        check_label(theta, 2)
        score = self.fit.intercept + float(self.fit.coefficients @ np.asarray(x, dtype=float))
        return score if theta == 1 else -score

    def evaluate_batch(self, theta: int, pts: np.ndarray) -> np.ndarray:
        check_label(theta, 2)
        scores = self.fit.intercept + np.atleast_2d(pts) @ self.fit.coefficients
        return scores if theta == 1 else -scores

    def remove(self, i: int) -> "LogisticStatistic":
        return LogisticStatistic(fit_logistic(self.data.remove(i)))

    def replace(self, i: int, x: np.ndarray) -> "LogisticStatistic":
        return LogisticStatistic(fit_logistic(self.data.replace(i, x)))

    def augment(self, x: np.ndarray, theta: int) -> "LogisticStatistic":
        return LogisticStatistic(fit_logistic(self.data.augment(x, theta)))


@dataclass(frozen=True, eq=False)
class TypicalityStatistic:
    """Direct F-pivot p-values; not a permutation statistic."""

    fit: PooledGaussianFit
    kind: str = field(default="typicality", init=False)

    @staticmethod
    def from_data(d: TrainingSet) -> "TypicalityStatistic":
        return TypicalityStatistic(fit_pooled_gaussian(d))

    @property
    def data(self) -> TrainingSet:
        return self.fit.data

    def pvalue(self, theta: int, x: np.ndarray) -> float:
        return float(typicality_index(self.fit, theta, np.asarray(x, dtype=float)))

    def remove(self, i: int) -> "TypicalityStatistic":
        return TypicalityStatistic(gaussian_update(self.fit, Remove(i)))

    def replace(self, i: int, x: np.ndarray) -> "TypicalityStatistic":
        return TypicalityStatistic(gaussian_update(self.fit, Replace(i, x)))

    def augment(self, x: np.ndarray, theta: int) -> "TypicalityStatistic":
        return TypicalityStatistic(gaussian_update(self.fit, Augment(x, theta)))
