"""Soft-margin RBF-kernel SVM trained by sequential minimal optimization.

Binary labels are +1/-1. The dual is solved pairwise: alternating full
passes and non-bound passes pick a first multiplier violating its KKT
condition, a second is chosen to maximize |E1 - E2|, and the pair is
optimized analytically. Deterministic: candidate scans are cyclic, no
randomness.
"""

import numpy as np

from .errors import DataError


def rbf_kernel(A, B, gamma):
    """Pairwise exp(-gamma * ||a - b||^2) between rows of A and rows of B."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    sq = (
        np.sum(A * A, axis=1)[:, None]
        + np.sum(B * B, axis=1)[None, :]
        - 2.0 * (A @ B.T)
    )
    return np.exp(-gamma * np.maximum(sq, 0.0))


class SVMModel:
    def __init__(self, X, y, alpha, b, gamma, C, converged):
        self.X = X
        self.y = y
        self.alpha = alpha
        self.b = b
        self.gamma = gamma
        self.C = C
        self.converged = converged
        # only support vectors contribute to the decision function
        sv = alpha > 1e-12
        self._sv_X = X[sv]
        self._sv_coef = (alpha * y)[sv]

    def decision_function(self, A):
        A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        if len(self._sv_coef) == 0:
            return np.full(A.shape[0], self.b)
        K = rbf_kernel(self._sv_X, A, self.gamma)
        return self._sv_coef @ K + self.b

    def predict(self, A):
        return np.where(self.decision_function(A) >= 0.0, 1.0, -1.0)


def train_rbf_svm(features, labels, C, gamma, tol=5e-4, eps=1e-8,
                  max_sweeps=2000):
    """Fit the dual by SMO; returns an SVMModel.

    tol bounds the KKT violation tolerated at convergence; eps is the
    minimum useful multiplier change. If the sweep cap is hit first, the
    best-so-far model is returned with converged=False.
    """
    X = np.ascontiguousarray(np.atleast_2d(features), dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64).ravel()
    n = len(y)
    if n < 2 or X.shape[0] != n:
        raise DataError("need at least 2 labeled samples")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise DataError("labels must be +1/-1")
    if len(np.unique(y)) < 2:
        raise DataError("both classes must be present")
    if C <= 0 or gamma <= 0:
        raise DataError("C and gamma must be positive")

    K = rbf_kernel(X, X, gamma)
    alpha = np.zeros(n)
    b = 0.0
    errors = -y.copy()  # f(x_i) - y_i with all alpha at zero

    def take_step(i1, i2):
        nonlocal b, errors
        if i1 == i2:
            return False
        a1, a2 = alpha[i1], alpha[i2]
        y1, y2 = y[i1], y[i2]
        E1, E2 = errors[i1], errors[i2]
        s = y1 * y2
        if s > 0:
            lo, hi = max(0.0, a1 + a2 - C), min(C, a1 + a2)
        else:
            lo, hi = max(0.0, a2 - a1), min(C, C + a2 - a1)
        if lo >= hi:
            return False
        k11, k12, k22 = K[i1, i1], K[i1, i2], K[i2, i2]
        eta = k11 + k22 - 2.0 * k12
        if eta > 0.0:
            a2_new = a2 + y2 * (E1 - E2) / eta
            a2_new = min(max(a2_new, lo), hi)
        else:
            # flat direction (duplicate points): compare endpoint objectives
            f1 = y1 * (E1 + b) - a1 * k11 - s * a2 * k12
            f2 = y2 * (E2 + b) - s * a1 * k12 - a2 * k22
            l1 = a1 + s * (a2 - lo)
            h1 = a1 + s * (a2 - hi)
            obj_lo = (
                l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11
                + 0.5 * lo * lo * k22 + s * lo * l1 * k12
            )
            obj_hi = (
                h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11
                + 0.5 * hi * hi * k22 + s * hi * h1 * k12
            )
            if obj_lo < obj_hi - eps:
                a2_new = lo
            elif obj_lo > obj_hi + eps:
                a2_new = hi
            else:
                return False
        if abs(a2_new - a2) < eps * (a2_new + a2 + eps):
            return False
        a1_new = a1 + s * (a2 - a2_new)
        if a1_new < 0.0:
            a2_new += s * a1_new
            a1_new = 0.0
        elif a1_new > C:
            a2_new += s * (a1_new - C)
            a1_new = C

        b1 = b - E1 - y1 * (a1_new - a1) * k11 - y2 * (a2_new - a2) * k12
        b2 = b - E2 - y1 * (a1_new - a1) * k12 - y2 * (a2_new - a2) * k22
        if 0.0 < a1_new < C:
            b_new = b1
        elif 0.0 < a2_new < C:
            b_new = b2
        else:
            b_new = 0.5 * (b1 + b2)

        errors += (
            y1 * (a1_new - a1) * K[:, i1]
            + y2 * (a2_new - a2) * K[:, i2]
            + (b_new - b)
        )
        alpha[i1], alpha[i2] = a1_new, a2_new
        b = b_new
        return True

    def examine(i2):
        r2 = errors[i2] * y[i2]
        if not ((r2 < -tol and alpha[i2] < C) or (r2 > tol and alpha[i2] > 0)):
            return False
        non_bound = np.flatnonzero((alpha > 0) & (alpha < C))
        if len(non_bound) > 1:
            i1 = non_bound[np.argmax(np.abs(errors[non_bound] - errors[i2]))]
            if take_step(i1, i2):
                return True
        for i1 in non_bound:
            if take_step(i1, i2):
                return True
        for i1 in range(n):
            if take_step(i1, i2):
                return True
        return False

    converged = True
    examine_all = True
    num_changed = 0
    sweeps = 0
    while num_changed > 0 or examine_all:
        sweeps += 1
        if sweeps > max_sweeps:
            converged = False
            break
        num_changed = 0
        if examine_all:
            candidates = range(n)
        else:
            candidates = np.flatnonzero((alpha > 0) & (alpha < C))
        for i in candidates:
            num_changed += examine(i)
        if examine_all:
            examine_all = False
        elif num_changed == 0:
            examine_all = True

    return SVMModel(X, y, alpha, b, gamma, C, converged)


def kkt_violation(model):
    """Worst KKT violation over the training set (certificate helper).

    For margins m_i = y_i f(x_i): alpha = 0 requires m >= 1, alpha = C
    requires m <= 1, interior alpha requires m = 1.
    """
    m = model.y * model.decision_function(model.X)
    a = model.alpha
    worst = 0.0
    at_zero = a <= 1e-9
    at_c = a >= model.C - 1e-9
    interior = ~(at_zero | at_c)
    if np.any(at_zero):
        worst = max(worst, float(np.max(1.0 - m[at_zero], initial=0.0)))
    if np.any(at_c):
        worst = max(worst, float(np.max(m[at_c] - 1.0, initial=0.0)))
    if np.any(interior):
        worst = max(worst, float(np.max(np.abs(m[interior] - 1.0))))
    return worst
