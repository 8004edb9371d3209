"""Nonparametric p-values from group permutations, with three computation modes.

Under the hypothesis that a new observation belongs to class theta, the new
feature vector and the class-theta training features are exchangeable, so the
rank of the test statistic among its swapped-in versions is uniform. The
resulting p-value takes values on the grid {1/(N+1), ..., 1} where N is the
group size, and is valid for every sample size.

Modes:

* ``exact-swap``   - reference implementation: one refit per group member,
                     each on the data with that member swapped for the query.
* ``valid-shortcut`` - default: a single refit on the data augmented with
                     (query, theta); keeps the finite-sample guarantee at a
                     fraction of the cost.
* ``naive``        - compares against the unswapped training statistics; the
                     cheapest, asymptotically equivalent, but without the
                     finite-sample guarantee. Retained because many packages'
                     ROC machinery implicitly uses it.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import PValueVector, TrainingSet, check_label
from .estimators import (
    DegenerateFitError,
    KnnStatistic,
    LogisticStatistic,
    PluginStatistic,
    TypicalityStatistic,
)

__all__ = [
    "MODES",
    "PermutationMethod",
    "STATISTICS",
    "naive_pvalue",
    "permutation_pvalue",
    "pvalue_vector",
    "valid_shortcut_pvalue",
]

STATISTICS = ("plugin", "knn", "logistic", "typicality")
MODES = ("exact-swap", "valid-shortcut", "naive")


@dataclass(frozen=True)
class PermutationMethod:
    """A statistic family plus the computation mode and its configuration.

    ``exact-swap`` and ``valid-shortcut`` carry the finite-sample validity
    guarantee; ``naive`` does not. ``typicality`` is not a permutation
    statistic at all: it is an exact-pivot p-value evaluated directly, and the
    mode is ignored for it.
    """

    statistic: str = "plugin"
    mode: str = "valid-shortcut"
    k: int | None = None
    scale_features: bool = False
    class_weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.statistic not in STATISTICS:
            raise ValueError(f"unknown statistic {self.statistic!r}; expected one of {STATISTICS}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")

    def fit(self, d: TrainingSet):
        """Fit the configured statistic on d."""
        if self.statistic == "plugin":
            return PluginStatistic.from_data(d)
        if self.statistic == "knn":
            scaling = "per-feature-sd" if self.scale_features else "none"
            return KnnStatistic.from_data(d, k=self.k, scaling=scaling, class_weights=self.class_weights)
        if self.statistic == "logistic":
            return LogisticStatistic.from_data(d)
        return TypicalityStatistic.from_data(d)


def _count_pvalue(swap_values: np.ndarray, reference: float) -> float:
    count = int(np.count_nonzero(swap_values >= reference))
    return (count + 1) / (swap_values.size + 1)


def _exact_swap(fitted, theta: int, x: np.ndarray) -> float:
    d = fitted.data
    group = d.group(theta)
    reference = fitted.evaluate(theta, x)
    values = np.empty(group.size)
    for j, i in enumerate(group):
        try:
            swapped = fitted.replace(int(i), x)
        except DegenerateFitError as err:
            err.swap_index = int(i)
            raise
        values[j] = swapped.evaluate(theta, d.features[i])
    return _count_pvalue(values, reference)


def _valid_shortcut(fitted, theta: int, x: np.ndarray) -> float:
    d = fitted.data
    group = d.group(theta)
    if hasattr(fitted, "valid_shortcut_values"):
        reference, values = fitted.valid_shortcut_values(theta, x)
    else:
        augmented = fitted.augment(x, theta)
        reference = augmented.evaluate(theta, x)
        values = augmented.evaluate_batch(theta, d.features[group])
    return _count_pvalue(np.asarray(values), reference)


def _naive(fitted, theta: int, x: np.ndarray) -> float:
    d = fitted.data
    group = d.group(theta)
    reference = fitted.evaluate(theta, x)
    values = fitted.evaluate_batch(theta, d.features[group])
    return _count_pvalue(np.asarray(values), reference)


def _pvalue_from_fitted(fitted, mode: str, theta: int, x: np.ndarray) -> float:
    if isinstance(fitted, TypicalityStatistic):
        return fitted.pvalue(theta, x)
    if mode == "exact-swap":
        return _exact_swap(fitted, theta, x)
    if mode == "valid-shortcut":
        return _valid_shortcut(fitted, theta, x)
    return _naive(fitted, theta, x)


def permutation_pvalue(method: PermutationMethod, d: TrainingSet, theta: int, x: np.ndarray) -> float:
    """Exact-swap permutation p-value for class theta at x.

    For each group member, the statistic is refit on the data with that member
    replaced by x and evaluated at the member; the count of swapped statistics
    reaching the statistic of x on the unmodified data gives the p-value. A
    degenerate swapped fit aborts the whole p-value (skipping an index would
    break exchangeability); the offending swap index rides on the error.
    """
    check_label(theta, d.n_classes)
    x = np.asarray(x, dtype=float)
    fitted = method.fit(d)
    if isinstance(fitted, TypicalityStatistic):
        return fitted.pvalue(theta, x)
    return _exact_swap(fitted, theta, x)


def valid_shortcut_pvalue(method: PermutationMethod, d: TrainingSet, theta: int, x: np.ndarray) -> float:
    """Permutation p-value from a single fit on the data augmented with (x, theta).

    Statistically valid at every sample size, like the exact swap, but needs
    one refit per query instead of one per group member; for the k-NN
    statistic the whole call is O(n) thanks to the cached-count update rule.
    """
    check_label(theta, d.n_classes)
    x = np.asarray(x, dtype=float)
    fitted = method.fit(d)
    if isinstance(fitted, TypicalityStatistic):
        return fitted.pvalue(theta, x)
    return _valid_shortcut(fitted, theta, x)


def naive_pvalue(method: PermutationMethod, d: TrainingSet, theta: int, x: np.ndarray) -> float:
    """Shortcut comparing against unswapped training statistics.

    One fit on d serves every comparison. Asymptotically equivalent to the
    exact swap but NOT guaranteed valid in finite samples.
    """
    check_label(theta, d.n_classes)
    x = np.asarray(x, dtype=float)
    fitted = method.fit(d)
    if isinstance(fitted, TypicalityStatistic):
        return fitted.pvalue(theta, x)
    return _naive(fitted, theta, x)


def warn_small_groups(d: TrainingSet, alphas: Sequence[float]) -> None:
    """Warn when some group is too small for its p-value ever to drop below alpha."""
    sizes = d.group_sizes
    for alpha in alphas:
        too_small = np.flatnonzero(sizes + 1 < 1.0 / alpha)
        for idx in too_small:
            warnings.warn(
                f"class {d.label_names[idx]!r} has {int(sizes[idx])} training points, so its "
                f"permutation p-value is never below 1/{int(sizes[idx]) + 1} and the class can "
                f"never be excluded at level alpha={alpha} (need group size >= {int(np.ceil(1.0 / alpha)) - 1})",
                stacklevel=3,
            )


def pvalue_vector(
    method: PermutationMethod,
    d: TrainingSet,
    x: np.ndarray,
    alphas: Sequence[float] | None = None,
    fitted=None,
) -> PValueVector:
    """P-values for every class at the query point x, per the method's mode.

    Pass ``fitted`` (from ``method.fit(d)``) to reuse one fit across many
    queries. With ``alphas`` given, emits a usability warning for groups too
    small to ever be excluded at those levels.
    """
    x = np.asarray(x, dtype=float)
    if alphas:
        warn_small_groups(d, alphas)
    if fitted is None:
        fitted = method.fit(d)
    values = np.array(
        [_pvalue_from_fitted(fitted, method.mode, theta, x) for theta in range(1, d.n_classes + 1)]
    )
    return PValueVector(values)
