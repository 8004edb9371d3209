"""P-values for a fully known Gaussian mixture: the gold standard the data-driven
methods are measured against.

Densities are evaluated in log space throughout; the weighted likelihood-ratio
statistic uses a max-shifted sum so well-separated classes in moderate
dimension do not underflow. Monte Carlo p-values use the (count + 1)/(M + 1)
convention so they remain valid p-values themselves, and every sampler is
driven by an explicit seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import check_label
from .numerics import (
    SpdMatrix,
    chisq_cdf,
    log_sum_exp,
    mahalanobis_sq,
    solve_lower,
    std_normal_cdf,
)

__all__ = [
    "GaussianMixtureModel",
    "OptimalMonteCarlo",
    "RiskEstimate",
    "compromise_pvalue",
    "inflated_pvalue",
    "optimal_pvalue_2class_closed",
    "optimal_pvalue_mc",
    "optimal_statistic",
    "risk_alpha",
    "typicality_known",
]

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class GaussianMixtureModel:
    """Known prior weights, class means and class covariances."""

    weights: np.ndarray          # (L,), positive, sums to 1
    means: np.ndarray            # (L, q)
    covariances: tuple[SpdMatrix, ...]

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float)
        means = np.asarray(self.means, dtype=float)
        covariances = tuple(self.covariances)
        object.__setattr__(self, "covariances", covariances)
        if weights.ndim != 1 or weights.size < 2:
            raise ValueError("need at least two classes")
        if np.any(weights <= 0.0):
            raise ValueError("prior weights must be positive")
        if abs(float(weights.sum()) - 1.0) > 1e-12:
            raise ValueError(f"prior weights sum to {weights.sum()}, not 1")
        if len(covariances) != weights.size or means.shape != (weights.size, covariances[0].dim):
            raise ValueError("means/covariances inconsistent with the number of classes")
        same = all(
            np.array_equal(means[b], means[0]) and np.array_equal(self.covariances[b].matrix, self.covariances[0].matrix)
            for b in range(weights.size)
        )
        if same:
            raise ValueError("all class distributions identical; likelihood ratios would be degenerate")
        weights.setflags(write=False)
        means.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "means", means)

    @property
    def n_classes(self) -> int:
        return self.weights.size

    @property
    def q(self) -> int:
        return self.means.shape[1]

    def has_common_covariance(self) -> bool:
        first = self.covariances[0].matrix
        return all(np.array_equal(c.matrix, first) for c in self.covariances[1:])

    def log_density(self, theta: int, x: np.ndarray) -> np.ndarray | float:
        """log of the class-theta Gaussian density at x (single vector or (m, q) batch)."""
        check_label(theta, self.n_classes)
        cov = self.covariances[theta - 1]
        msq = mahalanobis_sq(x, self.means[theta - 1], cov)
        return -0.5 * (self.q * _LOG_2PI + cov.log_det + msq)

    def sample(self, theta: int, size: int, rng: np.random.Generator) -> np.ndarray:
        """size draws from the class-theta Gaussian, via the cached Cholesky factor."""
        check_label(theta, self.n_classes)
        z = rng.standard_normal((size, self.q))
        return self.means[theta - 1] + z @ self.covariances[theta - 1].chol_lower.T


def log_weighted_lr(
    weights: np.ndarray,
    means: np.ndarray,
    covariances: Sequence[SpdMatrix],
    theta: int,
    x: np.ndarray,
) -> np.ndarray | float:
    """log of sum_{b != theta} w_{b,theta} f_b(x) / f_theta(x).

    The competitor weights w_{b,theta} = w_b / sum_{c != theta} w_c depend only
    on ratios among the non-theta weights. Shared kernel for the known-model
    statistic and the plug-in statistic, so the two agree exactly when handed
    the same parameters. x may be (q,) or (m, q).
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = x[None, :] if single else x
    n_classes = len(covariances)
    log_dens = np.empty((n_classes, pts.shape[0]))
    q = pts.shape[1]
    for b in range(n_classes):
        cov = covariances[b]
        log_dens[b] = -0.5 * (q * _LOG_2PI + cov.log_det + mahalanobis_sq(pts, means[b], cov))
    others = [b for b in range(n_classes) if b != theta - 1]
    log_norm = math.log(float(np.sum(weights[others])))
    terms = (
        np.log(weights[others])[:, None]
        - log_norm
        + log_dens[others]
        - log_dens[theta - 1][None, :]
    )
    out = log_sum_exp(terms, axis=0)
    return float(out[0]) if single else out


def optimal_statistic(model: GaussianMixtureModel, theta: int, x: np.ndarray) -> float:
    """Weighted likelihood-ratio statistic against class theta; small means plausible."""
    check_label(theta, model.n_classes)
    return math.exp(
        log_weighted_lr(model.weights, model.means, model.covariances, theta, np.asarray(x, dtype=float))
    )


def _log_statistic_batch(model: GaussianMixtureModel, theta: int, pts: np.ndarray) -> np.ndarray:
    return np.atleast_1d(
        log_weighted_lr(model.weights, model.means, model.covariances, theta, pts)
    )


def _mc_pvalue(sample_stats: np.ndarray, threshold: float) -> float:
    count = int(np.count_nonzero(sample_stats >= threshold))
    return (count + 1) / (sample_stats.size + 1)


def optimal_pvalue_mc(
    model: GaussianMixtureModel,
    theta: int,
    x: np.ndarray,
    mc_samples: int = 20_000,
    seed: int = 0,
) -> float:
    """Monte Carlo estimate of the optimal p-value for class theta at x.

    Draws mc_samples points from the class-theta distribution and counts how
    often the statistic there reaches the statistic at x; the +1 convention
    keeps the estimate a valid p-value. Deterministic given the seed.
    """
    check_label(theta, model.n_classes)
    if mc_samples < 1:
        raise ValueError("mc_samples must be positive")
    rng = np.random.default_rng(seed)
    draws = model.sample(theta, mc_samples, rng)
    stats = _log_statistic_batch(model, theta, draws)
    threshold = float(log_weighted_lr(model.weights, model.means, model.covariances, theta, x))
    return _mc_pvalue(stats, threshold)


class OptimalMonteCarlo:
    """Shared-sample evaluator for the optimal p-values.

    One seeded sample per class is drawn up front and reused for every query:
    only the threshold statistic depends on the query point, so the same draws
    serve arbitrarily many evaluations (region maps, risk estimates, ROC
    curves) at O(log M) per point.
    """

    def __init__(
        self,
        model: GaussianMixtureModel,
        mc_samples: int = 20_000,
        seed: int | np.random.SeedSequence = 0,
    ):
        if mc_samples < 1:
            raise ValueError("mc_samples must be positive")
        self.model = model
        self.mc_samples = mc_samples
        sequence = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        children = sequence.spawn(model.n_classes)
        self._sorted_stats = []
        for theta in range(1, model.n_classes + 1):
            rng = np.random.default_rng(children[theta - 1])
            draws = model.sample(theta, mc_samples, rng)
            self._sorted_stats.append(np.sort(_log_statistic_batch(model, theta, draws)))

    def pvalue(self, theta: int, x: np.ndarray) -> float:
        return float(self.pvalues(theta, np.asarray(x, dtype=float)[None, :])[0])

    def pvalues(self, theta: int, x: np.ndarray) -> np.ndarray:
        """Optimal p-values for class theta at each row of x."""
        check_label(theta, self.model.n_classes)
        stats = self._sorted_stats[theta - 1]
        thresholds = _log_statistic_batch(self.model, theta, np.asarray(x, dtype=float))
        below = np.searchsorted(stats, thresholds, side="left")
        return (stats.size - below + 1.0) / (stats.size + 1.0)


def optimal_pvalue_2class_closed(model: GaussianMixtureModel, theta: int, x: np.ndarray) -> float:
    """Closed-form optimal p-value for two classes with a common covariance."""
    pv = optimal_pvalues_2class_closed(model, theta, np.asarray(x, dtype=float)[None, :])
    return float(pv[0])


def optimal_pvalues_2class_closed(model: GaussianMixtureModel, theta: int, x: np.ndarray) -> np.ndarray:
    if model.n_classes != 2:
        raise ValueError("closed form requires exactly two classes")
    check_label(theta, 2)
    if not model.has_common_covariance():
        raise ValueError("closed form requires a common covariance matrix")
    cov = model.covariances[0]
    mu1, mu2 = model.means
    delta_sq = mahalanobis_sq(mu1, mu2, cov)
    if delta_sq <= 0.0:
        raise ValueError("class means coincide; the discriminant direction is undefined")
    delta = math.sqrt(delta_sq)
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    midpoint = 0.5 * (mu1 + mu2)
    # z(x) = (x - midpoint)^T Sigma^{-1} (mu2 - mu1) / delta via two triangular solves
    y_dir = solve_lower(cov.chol_lower, mu2 - mu1)
    y_pts = solve_lower(cov.chol_lower, (pts - midpoint).T)
    z = (y_dir @ y_pts) / delta
    sign = -1.0 if theta == 1 else 1.0
    return np.array([std_normal_cdf(sign * zi - 0.5 * delta) for zi in np.atleast_1d(z)])


def typicality_known(model: GaussianMixtureModel, theta: int, x: np.ndarray) -> float:
    """Outlyingness p-value of x with respect to the class-theta distribution alone."""
    check_label(theta, model.n_classes)
    msq = mahalanobis_sq(np.asarray(x, dtype=float), model.means[theta - 1], model.covariances[theta - 1])
    return 1.0 - chisq_cdf(float(msq), model.q)


def compromise_pvalue(
    model: GaussianMixtureModel,
    w0: float,
    theta: int,
    x: np.ndarray,
    mc_samples: int = 20_000,
    seed: int = 0,
) -> float:
    """Monte Carlo p-value interpolating between the optimal p-value and typicality.

    An artificial background class with constant density 1 and weight w0 is
    added to the mixture; small w0 recovers the optimal p-value, large w0 the
    typicality index. The constant density is taken literally in the data's
    units, so the interpolation point depends on the measurement scale.
    """
    check_label(theta, model.n_classes)
    if w0 <= 0.0:
        raise ValueError(f"background weight must be positive, got {w0}")
    if mc_samples < 1:
        raise ValueError("mc_samples must be positive")
    rng = np.random.default_rng(seed)
    draws = model.sample(theta, mc_samples, rng)

    def score(pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        log_dens = np.stack([np.atleast_1d(model.log_density(b, pts)) for b in range(1, model.n_classes + 1)])
        terms = np.vstack([np.log(model.weights)[:, None] + log_dens, np.full((1, pts.shape[0]), math.log(w0))])
        log_mix = np.atleast_1d(log_sum_exp(terms, axis=0))
        return log_dens[theta - 1] - log_mix

    # low score means x looks atypical for theta relative to the padded mixture
    sample_scores = score(draws)
    threshold = float(score(np.asarray(x, dtype=float))[0])
    count = int(np.count_nonzero(sample_scores <= threshold))
    return (count + 1) / (mc_samples + 1)


def inflated_pvalue(
    model: GaussianMixtureModel,
    c: float,
    theta: int,
    x: np.ndarray,
    mc_samples: int = 20_000,
    seed: int = 0,
) -> float:
    """Monte Carlo p-value for the homoscedastic variant that widens the competing
    classes' covariance by the factor c > 1, making the p-value fall off for
    points far from every class."""
    check_label(theta, model.n_classes)
    if c <= 1.0:
        raise ValueError(f"inflation factor must exceed 1, got {c}")
    if not model.has_common_covariance():
        raise ValueError("covariance inflation is defined for a common covariance matrix")
    if mc_samples < 1:
        raise ValueError("mc_samples must be positive")
    rng = np.random.default_rng(seed)
    draws = model.sample(theta, mc_samples, rng)
    sample_stats = log_inflated_statistic(model, c, theta, draws)
    threshold = float(log_inflated_statistic(model, c, theta, np.asarray(x, dtype=float)[None, :])[0])
    return _mc_pvalue(sample_stats, threshold)


def log_inflated_statistic(model: GaussianMixtureModel, c: float, theta: int, pts: np.ndarray) -> np.ndarray:
    """log of the inflated-covariance statistic, via the recentered quadratic form."""
    cov = model.covariances[0]
    mu_theta = model.means[theta - 1]
    others_norm = float(np.sum(np.delete(model.weights, theta - 1)))
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    terms = np.empty((model.n_classes, pts.shape[0]))
    for b in range(model.n_classes):
        mu_b = model.means[b]
        nu = mu_theta - (mu_b - mu_theta) / (c - 1.0)
        msq_nu = np.atleast_1d(mahalanobis_sq(pts, nu, cov))
        msq_means = float(mahalanobis_sq(mu_b, mu_theta, cov))
        terms[b] = (
            math.log(model.weights[b] / others_norm)
            + 0.5 * (1.0 - 1.0 / c) * msq_nu
            - 0.5 * msq_means / (c - 1.0)
        )
    return np.atleast_1d(log_sum_exp(terms, axis=0))


@dataclass(frozen=True, eq=False)
class RiskEstimate:
    """Expected prediction-region size at level alpha, with the per-class split."""

    alpha: float
    total: float
    per_class: np.ndarray  # per_class[theta - 1] = P(p-value for theta exceeds alpha)
    mc_samples: int

    def __post_init__(self):
        self.per_class.setflags(write=False)


def risk_alpha(
    pvalue_fn: Callable[[int, np.ndarray], float],
    model: GaussianMixtureModel,
    alpha: float,
    mc_samples: int = 2_000,
    seed: int = 0,
) -> RiskEstimate:
    """Monte Carlo estimate of the expected region size under the full mixture.

    pvalue_fn(theta, x) supplies the p-value family under study; the total risk
    is the sum over classes of the per-class exceedance probabilities.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if mc_samples < 1:
        raise ValueError("mc_samples must be positive")
    rng = np.random.default_rng(seed)
    labels = rng.choice(model.n_classes, size=mc_samples, p=model.weights) + 1
    exceed = np.zeros(model.n_classes)
    for j in range(mc_samples):
        x = model.sample(int(labels[j]), 1, rng)[0]
        for theta in range(1, model.n_classes + 1):
            if pvalue_fn(theta, x) > alpha:
                exceed[theta - 1] += 1
    per_class = exceed / mc_samples
    return RiskEstimate(alpha=alpha, total=float(per_class.sum()), per_class=per_class, mc_samples=mc_samples)
