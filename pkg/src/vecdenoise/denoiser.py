"""Depth-T feed-forward denoising filter.

The filter maps a batch of embeddings X through

    Y(0)   = tanh(X Q)
    Y(k+1) = tanh(X Q + Y(k) S),   0 <= k < T

with Q initialized from a learned dictionary as D / E and S from
I - D^T D / E, where E bounds the top eigenvalue of D^T D. S is kept
symmetric with a zero diagonal throughout training. Training minimizes
the mean cosine mismatch between filter outputs and targets (the inputs
themselves in complete mode, sparse codes in overcomplete mode) plus an
entrywise l1 penalty on S, using manual backpropagation through the
unrolled recursion and Adadelta updates.
"""

from dataclasses import dataclass, field

import numpy as np

from .embeddings import EmbeddingMatrix
from .errors import DataError, NumericalError, ParseError
from .sparse import SparseCodeMatrix, spectral_upper_bound

ZERO_NORM_EPS = 1e-12


def _project_sym_zero_diag(M):
    out = 0.5 * (M + M.T)
    np.fill_diagonal(out, 0.0)
    return out


class FilterParams:
    """Learned filter state: Q (L x M), S (M x M), spectral scalar, depth."""

    def __init__(self, Q, S, E, depth, activation="tanh", mode=None):
        Q = np.ascontiguousarray(Q, dtype=np.float64)
        S = np.ascontiguousarray(S, dtype=np.float64)
        if S.shape != (Q.shape[1], Q.shape[1]):
            raise DataError(
                f"S shape {S.shape} does not match Q output dim {Q.shape[1]}"
            )
        if E <= 0:
            raise DataError("spectral scalar E must be positive")
        if depth < 0:
            raise DataError("filter depth must be >= 0")
        if activation != "tanh":
            raise DataError(f"unsupported activation: {activation!r}")
        if not (np.all(np.isfinite(Q)) and np.all(np.isfinite(S))):
            raise DataError("filter parameters contain non-finite values")
        self.Q = Q
        self.S = _project_sym_zero_diag(S)
        self.E = float(E)
        self.depth = int(depth)
        self.activation = activation
        if mode is None:
            mode = "complete" if Q.shape[0] == Q.shape[1] else "overcomplete"
        self.mode = mode

    @property
    def in_dim(self):
        return self.Q.shape[0]

    @property
    def out_dim(self):
        return self.Q.shape[1]


@dataclass
class TrainConfig:
    alpha: float = 0.5
    batch_size: int = 100
    epochs: int = 50
    depth: int = 3
    adadelta_rho: float = 0.95
    adadelta_eps: float = 1e-6
    dropout_in: float = 0.5
    dropout_out: float = 0.2
    seed: int = 0
    mode: str = "complete"
    early_stop_delta: float = 1e-5
    early_stop_patience: int = 5

    def __post_init__(self):
        if self.alpha < 0:
            raise DataError("alpha must be non-negative")
        if self.batch_size < 1:
            raise DataError("batch_size must be >= 1")
        if self.epochs < 1:
            raise DataError("epochs must be >= 1")
        if not 0.0 < self.adadelta_rho < 1.0:
            raise DataError("adadelta_rho must be in (0, 1)")
        if self.adadelta_eps <= 0:
            raise DataError("adadelta_eps must be positive")
        for rate in (self.dropout_in, self.dropout_out):
            if not 0.0 <= rate < 1.0:
                raise DataError("dropout rates must be in [0, 1)")
        if self.mode not in ("complete", "overcomplete"):
            raise DataError(f"unknown mode: {self.mode!r}")
        if self.depth < 0:
            raise DataError("depth must be >= 0")


class AdadeltaState:
    """Running averages of squared gradients and squared updates."""

    def __init__(self, shape):
        self.grad_sq_avg = np.zeros(shape)
        self.update_sq_avg = np.zeros(shape)


def init_filter_params(dictionary, E, depth, mode=None):
    """Build filter parameters from a learned dictionary.

    Q = D / E and S = I - D^T D / E, after which S is symmetrized and
    its diagonal zeroed (the structural constraint S carries through
    training).
    """
    if E <= 0:
        raise DataError("spectral scalar E must be positive")
    D = dictionary.data
    Q = D / E
    S = np.eye(D.shape[1]) - (D.T @ D) / E
    return FilterParams(Q, S, E, depth, mode=mode)


def filter_forward(X, params, return_activations=False):
    """Apply the recursive filter; returns Y(T).

    With return_activations=True, also returns [Y(0), ..., Y(T)] for
    backpropagation.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != params.in_dim:
        raise DataError(
            f"input dim {X.shape[1]} does not match filter input dim "
            f"{params.in_dim}"
        )
    XQ = X @ params.Q
    Y = np.tanh(XQ)
    acts = [Y]
    for _ in range(params.depth):
        Y = np.tanh(XQ + Y @ params.S)
        acts.append(Y)
    if return_activations:
        return Y, acts
    return Y


def cosine_similarity(a, b):
    """Cosine of the angle between two vectors; 0 if either is ~zero."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na < ZERO_NORM_EPS or nb < ZERO_NORM_EPS:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def _row_cosines(T, Y):
    """Per-row cosines between two equal-shape batches; zero rows give 0."""
    nt = np.linalg.norm(T, axis=1)
    ny = np.linalg.norm(Y, axis=1)
    dots = np.sum(T * Y, axis=1)
    ok = (nt >= ZERO_NORM_EPS) & (ny >= ZERO_NORM_EPS)
    out = np.zeros(len(dots))
    out[ok] = dots[ok] / (nt[ok] * ny[ok])
    return out


def batch_loss(target, Y, S, alpha):
    """Mean of 1 - cos(t_i, y_i) over the batch, plus alpha * ||S||_1."""
    target = np.atleast_2d(target)
    Y = np.atleast_2d(Y)
    if target.shape != Y.shape:
        raise DataError(
            f"target shape {target.shape} != output shape {Y.shape}"
        )
    delta = 1.0 - _row_cosines(target, Y)
    return float(np.mean(delta) + alpha * np.sum(np.abs(S)))


def _cosine_loss_grad(target, Y):
    """Gradient of mean_i (1 - cos(t_i, y_i)) w.r.t. Y.

    Rows where either vector has ~zero norm carry the similarity-0
    convention and contribute zero gradient.
    """
    n = Y.shape[0]
    nt = np.linalg.norm(target, axis=1)
    ny = np.linalg.norm(Y, axis=1)
    ok = (nt >= ZERO_NORM_EPS) & (ny >= ZERO_NORM_EPS)
    grad = np.zeros_like(Y)
    if np.any(ok):
        t = target[ok]
        y = Y[ok]
        nt_ok = nt[ok][:, None]
        ny_ok = ny[ok][:, None]
        cos = np.sum(t * y, axis=1, keepdims=True) / (nt_ok * ny_ok)
        # d(1 - cos)/dy = -(t / (|t||y|) - cos * y / |y|^2)
        grad[ok] = -(t / (nt_ok * ny_ok) - cos * y / (ny_ok * ny_ok))
    return grad / n


def _backward(X, target, params, alpha, acts, out_mask=None):
    """Reverse accumulation through the unrolled filter.

    Q and S are shared across the T + 1 steps, so their gradients sum
    over steps. The S gradient is symmetrized with zero diagonal, the
    gradient of the constrained parameterization.
    """
    S = params.S
    Y_T = acts[-1]
    if out_mask is not None:
        dY = _cosine_loss_grad(target, Y_T * out_mask) * out_mask
    else:
        dY = _cosine_loss_grad(target, Y_T)

    dQ = np.zeros_like(params.Q)
    dS = np.zeros_like(S)
    for k in range(params.depth, 0, -1):
        dA = dY * (1.0 - acts[k] ** 2)
        dQ += X.T @ dA
        dS += acts[k - 1].T @ dA
        dY = dA @ S.T
    dA = dY * (1.0 - acts[0] ** 2)
    dQ += X.T @ dA

    dS += alpha * np.sign(S)
    return dQ, _project_sym_zero_diag(dS)


def compute_gradients(X_batch, target, params, alpha):
    """Exact gradients of batch_loss w.r.t. Q and S."""
    X = np.atleast_2d(np.asarray(X_batch, dtype=np.float64))
    target = np.atleast_2d(np.asarray(target, dtype=np.float64))
    _, acts = filter_forward(X, params, return_activations=True)
    return _backward(X, target, params, alpha, acts)


def adadelta_update(param, grad, state, rho=0.95, eps=1e-6):
    """One Adadelta step; mutates `state`, returns the updated parameter."""
    state.grad_sq_avg = rho * state.grad_sq_avg + (1.0 - rho) * grad**2
    delta = -(
        np.sqrt(state.update_sq_avg + eps)
        / np.sqrt(state.grad_sq_avg + eps)
    ) * grad
    state.update_sq_avg = rho * state.update_sq_avg + (1.0 - rho) * delta**2
    return param + delta


def _dropout_mask(rng, shape, rate):
    if rate == 0.0:
        return None
    return (rng.random(shape) >= rate) / (1.0 - rate)


def train_denoiser(emb, dictionary, Z=None, cfg=None):
    """Train the filter on an embedding matrix.

    Complete mode reconstructs the inputs themselves (requires a square
    dictionary, K = L, and no codes); overcomplete mode reconstructs the
    sparse codes Z. Inverted dropout is applied to the batch inputs and
    to the final filter output during training only.

    Returns (params, trace) where trace holds one record per epoch:
    (epoch, mean_delta, l1_penalty, total).
    """
    if cfg is None:
        cfg = TrainConfig()
    X = emb.data if isinstance(emb, EmbeddingMatrix) else np.asarray(
        emb, dtype=np.float64
    )
    V, L = X.shape

    if cfg.mode == "complete":
        if Z is not None:
            raise DataError("complete mode takes no sparse codes")
        if dictionary.atom_count != L:
            raise DataError(
                f"complete mode needs a square dictionary, got "
                f"{dictionary.dim} x {dictionary.atom_count} for dim {L}"
            )
        target_all = X
    else:
        if Z is None:
            raise DataError("overcomplete mode requires sparse codes")
        Zdata = Z.data if isinstance(Z, SparseCodeMatrix) else np.asarray(Z)
        if Zdata.shape != (V, dictionary.atom_count):
            raise DataError(
                f"codes shape {Zdata.shape} does not match "
                f"({V}, {dictionary.atom_count})"
            )
        target_all = Zdata

    E = spectral_upper_bound(dictionary)
    params = init_filter_params(dictionary, E, cfg.depth, mode=cfg.mode)

    q_state = AdadeltaState(params.Q.shape)
    s_state = AdadeltaState(params.S.shape)
    rng = np.random.default_rng(cfg.seed)

    trace = []
    best = np.inf
    stall = 0
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(V)
        delta_sum = 0.0
        for start in range(0, V, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            Xb = X[batch]
            target = target_all[batch]

            in_mask = _dropout_mask(rng, Xb.shape, cfg.dropout_in)
            if in_mask is not None:
                Xb = Xb * in_mask
            out_mask = _dropout_mask(
                rng, (len(batch), params.out_dim), cfg.dropout_out
            )

            Y_T, acts = filter_forward(Xb, params, return_activations=True)
            Y_out = Y_T if out_mask is None else Y_T * out_mask
            delta = 1.0 - _row_cosines(target, Y_out)
            batch_delta = float(np.sum(delta))
            if not np.isfinite(batch_delta):
                raise NumericalError(
                    f"non-finite loss at epoch {epoch}, batch "
                    f"{start // cfg.batch_size}"
                )
            delta_sum += batch_delta

            dQ, dS = _backward(
                Xb, target, params, cfg.alpha, acts, out_mask=out_mask
            )
            params.Q = adadelta_update(
                params.Q, dQ, q_state, cfg.adadelta_rho, cfg.adadelta_eps
            )
            S_new = adadelta_update(
                params.S, dS, s_state, cfg.adadelta_rho, cfg.adadelta_eps
            )
            params.S = _project_sym_zero_diag(S_new)

        mean_delta = delta_sum / V
        l1_pen = cfg.alpha * float(np.sum(np.abs(params.S)))
        total = mean_delta + l1_pen
        trace.append((epoch, mean_delta, l1_pen, total))

        if best - total < cfg.early_stop_delta:
            stall += 1
            if stall >= cfg.early_stop_patience:
                break
        else:
            stall = 0
        best = min(best, total)

    return params, trace


def apply_denoising(emb, params):
    """Project an embedding through the trained filter: tanh(X Q).

    Inference is deterministic; dropout is never applied here. The
    vocabulary is preserved, the output dimension is params.out_dim.
    """
    if emb.dim != params.in_dim:
        raise DataError(
            f"embedding dim {emb.dim} != filter input dim {params.in_dim}"
        )
    return EmbeddingMatrix(emb.vocab, np.tanh(emb.data @ params.Q))


def write_trace(trace, stream):
    """Emit a training trace as CSV: epoch,mean_delta,l1_penalty,total."""
    stream.write("epoch,mean_delta,l1_penalty,total\n")
    for epoch, mean_delta, l1_pen, total in trace:
        stream.write(
            f"{epoch},{mean_delta:.10g},{l1_pen:.10g},{total:.10g}\n"
        )


def save_filter_params(params, stream):
    """Serialize params: key-value header, then Q and S as text matrices."""
    lines = [
        f"mode = {params.mode}\n",
        f"L = {params.in_dim}\n",
        f"M = {params.out_dim}\n",
        f"T = {params.depth}\n",
        f"E = {params.E:.17g}\n",
        f"activation = {params.activation}\n",
    ]
    for M in (params.Q, params.S):
        lines.append(f"{M.shape[0]} {M.shape[1]}\n")
        for row in M:
            lines.append(" ".join("%.17g" % v for v in row) + "\n")
    stream.write("".join(lines).encode("utf-8"))


def load_filter_params(stream):
    """Inverse of save_filter_params."""
    text = stream.read()
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    lines = text.splitlines()
    header = {}
    pos = 0
    while pos < len(lines) and "=" in lines[pos]:
        key, _, value = lines[pos].partition("=")
        header[key.strip()] = value.strip()
        pos += 1
    for key in ("mode", "L", "M", "T", "E", "activation"):
        if key not in header:
            raise ParseError(f"filter params header missing {key!r}")

    def read_matrix(pos):
        rows, cols = (int(f) for f in lines[pos].split())
        data = np.array(
            [lines[pos + 1 + i].split() for i in range(rows)],
            dtype=np.float64,
        )
        if data.shape != (rows, cols):
            raise ParseError("filter params matrix block has wrong shape")
        return data, pos + 1 + rows

    Q, pos = read_matrix(pos)
    S, pos = read_matrix(pos)
    params = FilterParams(
        Q,
        S,
        float(header["E"]),
        int(header["T"]),
        activation=header["activation"],
        mode=header["mode"],
    )
    if params.in_dim != int(header["L"]) or params.out_dim != int(header["M"]):
        raise DataError("filter params header dims do not match matrices")
    return params
