"""Sparse coding: lasso encoding, dictionary learning, spectral bound.

Solves, for each input row x,

    min_z ||x - D z||_2^2 + lambda * ||z||_1

by cyclic coordinate descent, and learns the dictionary D (columns
constrained to the unit ball) by alternating encoding with exact block
coordinate updates of the atoms. The plain squared norm is used for the
quadratic term, so the soft-threshold level is lambda / 2.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DataError, ParseError


class Dictionary:
    """L x K atom matrix; every column has Euclidean norm <= 1."""

    def __init__(self, data):
        data = np.ascontiguousarray(data, dtype=np.float64)
        if data.ndim != 2:
            raise DataError(f"dictionary must be 2-d, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise DataError("dictionary contains non-finite values")
        norms = np.linalg.norm(data, axis=0)
        if np.any(norms > 1.0 + 1e-12):
            raise DataError(
                f"dictionary column norm {norms.max():.15g} exceeds 1"
            )
        self.data = data
        # filled in by learn_dictionary
        self.objective_trace = []
        self.underdetermined = False

    @property
    def dim(self):
        return self.data.shape[0]

    @property
    def atom_count(self):
        return self.data.shape[1]


class SparseCodeMatrix:
    """V x K lasso codes, with per-row convergence flags."""

    def __init__(self, data, sparsity_lambda, converged=None):
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        self.sparsity_lambda = float(sparsity_lambda)
        if converged is None:
            converged = np.ones(self.data.shape[0], dtype=bool)
        self.converged = converged


@dataclass
class LassoConfig:
    lambd: float = 1e-6
    max_iters: int = 200
    tol: float = 1e-8

    def __post_init__(self):
        if self.lambd < 0:
            raise DataError("lasso lambda must be non-negative")
        if self.max_iters < 1:
            raise DataError("max_iters must be >= 1")
        if self.tol <= 0:
            raise DataError("tol must be positive")


def soft_threshold(v, t):
    """sign(v) * max(|v| - t, 0); works on scalars and arrays."""
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def _cd_sweeps(X, D, cfg, Z0=None):
    """Run cyclic coordinate descent on every row of X simultaneously.

    Keeps Q = Z G with G = D^T D up to date incrementally; one sweep
    visits each of the K coordinates once, applying the exact 1-d update

        z_j <- soft_threshold(c_j - (G z)_j + G_jj z_j, lambda/2) / G_jj

    which never increases the objective, so warm starts stay monotone.
    Rows are independent, so rows whose largest coordinate move falls
    below tol are retired from the working set as they converge.
    Returns (Z, per-row converged flags).
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    n, K = X.shape[0], D.shape[1]
    G = D.T @ D
    diag = np.diag(G).copy()
    thresh = cfg.lambd / 2.0
    active = diag > 0.0

    Z_full = np.zeros((n, K)) if Z0 is None else np.array(
        Z0, dtype=np.float64, copy=True
    )
    converged = np.zeros(n, dtype=bool)
    live = np.arange(n)
    Zl = Z_full.copy()
    Cl = X @ D
    Ql = Zl @ G

    for _ in range(cfg.max_iters):
        row_delta = np.zeros(len(live))
        for j in range(K):
            if not active[j]:
                continue
            rho = Cl[:, j] - Ql[:, j] + diag[j] * Zl[:, j]
            z_new = soft_threshold(rho, thresh) / diag[j]
            delta = z_new - Zl[:, j]
            if np.any(delta != 0.0):
                Ql += np.outer(delta, G[j])
                Zl[:, j] = z_new
            np.maximum(row_delta, np.abs(delta), out=row_delta)
        done = row_delta < cfg.tol
        if done.all():
            Z_full[live] = Zl
            converged[live] = True
            return Z_full, converged
        if np.count_nonzero(done) >= 0.25 * len(live):
            Z_full[live] = Zl
            converged[live[done]] = True
            keep = ~done
            live = live[keep]
            Zl = Zl[keep]
            Cl = Cl[keep]
            Ql = Ql[keep]
    Z_full[live] = Zl
    return Z_full, converged

def lasso_encode(x, dictionary, cfg, z0=None):
    """Encode one vector; returns (z, converged)."""
    D = dictionary.data
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (D.shape[0],):
        raise DataError(
            f"x has shape {x.shape}, dictionary expects ({D.shape[0]},)"
        )
    Z0 = None if z0 is None else np.atleast_2d(z0)
    Z, ok = _cd_sweeps(x[None, :], D, cfg, Z0=Z0)
    return Z[0], bool(ok[0])


def encode_all(emb, dictionary, cfg, warm_start=None):
    """Lasso-encode every row of an embedding matrix.

    Rows are independent; warm_start may carry codes from a previous
    call with the same shapes.
    """
    X = (emb.data if isinstance(getattr(emb, "data", None), np.ndarray)
         else np.asarray(emb, dtype=np.float64))
    if X.shape[1] != dictionary.dim:
        raise DataError(
            f"embedding dim {X.shape[1]} != dictionary dim {dictionary.dim}"
        )
    Z0 = warm_start.data if isinstance(warm_start, SparseCodeMatrix) else warm_start
    Z, ok = _cd_sweeps(X, dictionary.data, cfg, Z0=Z0)
    return SparseCodeMatrix(Z, cfg.lambd, converged=ok)


def lasso_objective(X, D, Z, lambd):
    """Sum over rows of ||x_i - D z_i||^2 + lambda ||z_i||_1."""
    X = np.atleast_2d(X)
    Z = np.atleast_2d(Z)
    resid = X - Z @ D.T
    return float(np.sum(resid * resid) + lambd * np.sum(np.abs(Z)))


def kkt_violation(x, dictionary, z, lambd):
    """Worst violation of the lasso stationarity conditions at z.

    For the returned solution, d_j^T (x - D z) must lie in
    [-lambda/2, lambda/2] when z_j = 0 and equal (lambda/2) sign(z_j)
    otherwise. Returns the max absolute violation over coordinates.
    """
    D = dictionary.data if isinstance(dictionary, Dictionary) else dictionary
    g = D.T @ (np.asarray(x) - D @ np.asarray(z))
    half = lambd / 2.0
    zero = z == 0.0
    v_zero = np.maximum(np.abs(g[zero]) - half, 0.0)
    v_active = np.abs(g[~zero] - half * np.sign(z[~zero]))
    worst = 0.0
    if v_zero.size:
        worst = max(worst, float(v_zero.max()))
    if v_active.size:
        worst = max(worst, float(v_active.max()))
    return worst


def _init_atoms(X, atoms, rng):
    """Seed atoms from distinct data rows (normalized); Gaussian fill-in."""
    V, L = X.shape
    D = np.empty((L, atoms))
    n_data = min(atoms, V)
    picks = rng.choice(V, size=n_data, replace=False)
    for k, i in enumerate(picks):
        row = X[i]
        norm = np.linalg.norm(row)
        if norm < 1e-12:
            row = rng.standard_normal(L)
            norm = np.linalg.norm(row)
        D[:, k] = row / norm
    for k in range(n_data, atoms):
        g = rng.standard_normal(L)
        D[:, k] = g / np.linalg.norm(g)
    return D


def learn_dictionary(emb, atoms, cfg, outer_iters=20, seed=0,
                     encode_iters=25):
    """Learn an L x K dictionary by alternating minimization.

    Each outer iteration (a) lasso-encodes all rows against the current
    atoms (warm-started from the previous codes) and (b) updates every
    atom by its exact constrained block minimizer

        d_j <- project_ball( d_j + (B_j - D A_j) / A_jj )

    with A = Z^T Z and B = X^T Z, so the full objective never increases.
    Atoms with an all-zero coefficient column are re-seeded to the worst
    reconstructed input row (objective-neutral, their codes are zero).

    encode_iters caps the coordinate sweeps spent per outer iteration;
    partial encoding keeps the descent property because every sweep is
    itself non-increasing and codes are warm-started across iterations.

    The objective after each outer iteration is recorded on the returned
    Dictionary as `objective_trace`.
    """
    X = (emb.data if isinstance(getattr(emb, "data", None), np.ndarray)
         else np.asarray(emb, dtype=np.float64))
    V, L = X.shape
    if atoms < 1 or V < 1:
        raise DataError("need at least one atom and one input row")
    rng = np.random.default_rng(seed)

    underdetermined = atoms > V and cfg.lambd == 0.0
    if underdetermined:
        warnings.warn(
            "more atoms than input rows with lambda = 0: dictionary is "
            "underdetermined",
            stacklevel=2,
        )

    D = _init_atoms(X, atoms, rng)
    inner_cfg = LassoConfig(
        lambd=cfg.lambd,
        max_iters=min(cfg.max_iters, encode_iters),
        tol=cfg.tol,
    )
    Z = None
    trace = []
    for _ in range(outer_iters):
        codes = encode_all(X, Dictionary(D), inner_cfg, warm_start=Z)
        Z = codes.data

        A = Z.T @ Z
        B = X.T @ Z
        dead = []
        for j in range(atoms):
            if A[j, j] <= 0.0:
                dead.append(j)
                continue
            u = D[:, j] + (B[:, j] - D @ A[:, j]) / A[j, j]
            norm = np.linalg.norm(u)
            D[:, j] = u / norm if norm > 1.0 else u

        if dead:
            err = np.sum((X - Z @ D.T) ** 2, axis=1)
            worst = np.argsort(err)[::-1]
            for rank, j in enumerate(dead):
                row = X[worst[rank % V]]
                norm = np.linalg.norm(row)
                if norm < 1e-12:
                    row = rng.standard_normal(L)
                    norm = np.linalg.norm(row)
                D[:, j] = row / norm

        trace.append(lasso_objective(X, D, Z, cfg.lambd))

    result = Dictionary(D)
    result.objective_trace = trace
    result.underdetermined = underdetermined
    return result


def spectral_upper_bound(dictionary, safety=1.01, tol=1e-9, max_iters=1000):
    """Upper bound on the largest eigenvalue of D^T D.

    Power iteration applied as v -> D^T (D v) from a fixed seeded start.
    The Rayleigh quotient converges geometrically, so the remaining
    error is estimated from the tail sum of successive changes; the
    iteration stops once that estimate drops below tol relative to the
    current value. Returns safety * lambda_max_estimate, which exceeds
    the true largest eigenvalue whenever the estimate is within the
    safety margin.
    """
    if safety <= 1.0:
        raise DataError("safety must be > 1")
    if tol <= 0.0:
        raise DataError("tol must be positive")
    D = (dictionary.data if isinstance(dictionary, Dictionary)
         else np.asarray(dictionary, dtype=np.float64))
    K = D.shape[1]
    rng = np.random.default_rng(0)
    v = rng.standard_normal(K)
    v /= np.linalg.norm(v)

    lam = None
    prev_change = None
    tail = 0.0
    for _ in range(max_iters):
        w = D.T @ (D @ v)
        lam_new = float(v @ w)
        norm = np.linalg.norm(w)
        if norm < tol * max(lam_new, tol):
            warnings.warn("degenerate dictionary: spectrum at the tol floor",
                          stacklevel=2)
            return safety * tol
        if lam is not None:
            change = abs(lam_new - lam)
            if change <= 1e-15 * max(lam_new, 1.0):
                return safety * lam_new
            if prev_change is not None and prev_change > 0.0:
                ratio = change / prev_change
                if ratio < 1.0:
                    tail = change * ratio / (1.0 - ratio)
                    if tail <= tol * lam_new:
                        return safety * (lam_new + tail)
                else:
                    tail = 0.0
            prev_change = change
        lam = lam_new
        v = w / norm
    # cap reached: correct the geometric tail still outstanding
    return safety * (lam + tail)

def write_matrix_text(M, stream):
    """Serialize a dense matrix: "rows cols" header, one row per line."""
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    lines = [f"{M.shape[0]} {M.shape[1]}\n"]
    for row in M:
        lines.append(" ".join("%.17g" % v for v in row) + "\n")
    stream.write("".join(lines).encode("utf-8"))


def read_matrix_text(stream):
    """Inverse of write_matrix_text."""
    text = stream.read()
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty matrix file")
    try:
        rows, cols = (int(f) for f in lines[0].split())
    except ValueError:
        raise ParseError("bad matrix header", line=1) from None
    if len(lines) < rows + 1:
        raise ParseError(f"expected {rows} matrix rows, got {len(lines) - 1}")
    try:
        data = np.array(
            [lines[1 + i].split() for i in range(rows)], dtype=np.float64
        )
    except ValueError:
        raise ParseError("unparseable matrix entry") from None
    if rows == 0:
        data = data.reshape(0, cols)
    if data.ndim != 2 or data.shape != (rows, cols):
        raise ParseError(
            f"matrix body {data.shape} does not match header ({rows}, {cols})"
        )
    return data
