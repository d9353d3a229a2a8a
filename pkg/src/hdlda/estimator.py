"""scikit-learn front end for the two-group plug-in discriminant rule.

The estimator takes the usual ``(n_samples, n_features)`` layout; internally
the observations are transposed to the ``p x n`` convention of
:mod:`hdlda.model`.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .inference import Side, contrast_vector, one_sided_test, test_statistic, two_sided_test
from .model import GroupSample, discriminant_coefficients, pooled_estimates


class FisherDiscriminant(ClassifierMixin, BaseEstimator):
    """Fisher's linear discriminant with pooled covariance and equal priors.

    An observation goes to ``classes_[0]`` when its score
    ``a_hat' (x - (xbar1 + xbar2) / 2)`` is strictly positive, otherwise to
    ``classes_[1]``.

    Attributes
    ----------
    classes_ : ndarray of shape (2,)
    coef_ : ndarray of shape (n_features,)
        ``S_pl^{-1}(xbar1 - xbar2)``.
    intercept_ : float
    estimates_ : PooledEstimates
    """

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        check_classification_targets(y)
        classes = np.unique(y)
        if classes.size != 2:
            raise ValueError(f"need exactly two classes, got {classes.size}")
        g1 = GroupSample(X[y == classes[0]].T, 1)
        g2 = GroupSample(X[y == classes[1]].T, 2)
        est = pooled_estimates(g1, g2)
        self.classes_ = classes
        self.estimates_ = est
        self.coef_ = discriminant_coefficients(est)
        self.intercept_ = float(-0.5 * self.coef_ @ (est.xbar1 + est.xbar2))
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X @ self.coef_ + self.intercept_

    def predict(self, X):
        score = self.decision_function(X)
        return np.where(score > 0, self.classes_[0], self.classes_[1])

    def test_coefficients(self, i: int, j: int, alpha: float = 0.05, side="two_sided"):
        """Exact t test of ``a_i = a_j`` (or ``a_i <= a_j`` one-sided).

        ``i`` and ``j`` are 1-based feature indices.
        """
        check_is_fitted(self, "coef_")
        est = self.estimates_
        t = test_statistic(est, contrast_vector(est.dims.p, i, j))
        if Side(side) is Side.TWO_SIDED:
            return two_sided_test(t, est.dims, alpha)
        return one_sided_test(t, est.dims, alpha)
