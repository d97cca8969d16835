"""Joint metric learning over text and code views.

Two linear maps U (d_x by k) and V (d_y by k) project word vectors and
code-feature vectors into a shared latent space. Training minimizes

    lambda1 * pull + lambda2 * graph + lambda3 * content + scale

where pull = 0.5 ||X'U - Y'V||_F^2 ties the two views of each document
together, graph = 0.5 tr(O L O') with O = [U'X, V'Y] smooths the latent
layout along the equal-label graph, content = 0.5 ||UV' - R||_F^2 anchors
the learned word-feature relatedness to observed surface-text overlap,
and scale = 0.5 (||U||_F^2 + ||V||_F^2) keeps the factors bounded.

Optimization is plain alternating gradient descent with a fixed step: U
moves first, then V using the fresh U. Both start from the pairwise
singular vectors of X Y' (the classical cross-modal factor solution), so
even an untrained model ranks sensibly.
"""
from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass, field

import numpy as np

from .vectorize import LabelGraph


class TrainingDivergedError(RuntimeError):
    """Loss or iterates became non-finite during descent."""


@dataclass(frozen=True)
class Hyperparams:
    lambda1: float = 1.0      # pull weight
    lambda2: float = 0.1      # graph weight
    lambda3: float = 0.2      # content weight
    k: int = 64               # latent dimensionality
    eta: float = 1e-3         # step size
    max_iter: int = 500
    tol: float = 1e-6         # relative change of total loss
    seed: int = 0
    backtracking: bool = False

    def validate(self, d_x: int | None = None, d_y: int | None = None) -> None:
        if self.k < 1:
            raise ValueError(f"k must be positive, got {self.k}")
        if min(self.lambda1, self.lambda2, self.lambda3) < 0:
            raise ValueError("loss weights must be non-negative")
        if self.eta <= 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be positive, got {self.max_iter}")
        if self.tol < 0:
            raise ValueError(f"tol must be non-negative, got {self.tol}")
        if d_x is not None and d_y is not None and self.k > min(d_x, d_y):
            raise ValueError(f"k={self.k} exceeds min(d_x, d_y)="
                             f"{min(d_x, d_y)}")


@dataclass(frozen=True)
class LossBreakdown:
    pull: float
    graph: float
    content: float
    scale: float
    total: float


@dataclass
class TrainingData:
    X: np.ndarray             # d_x by m
    Y: np.ndarray             # d_y by m
    R: np.ndarray             # d_x by d_y
    graph: LabelGraph         # over the 2m views of the m columns

    def __post_init__(self) -> None:
        if self.X.shape[1] != self.Y.shape[1]:
            raise ValueError("X and Y must have the same number of columns")
        if self.R.shape != (self.X.shape[0], self.Y.shape[0]):
            raise ValueError(f"R must be {self.X.shape[0]} x {self.Y.shape[0]}, "
                             f"got {self.R.shape}")
        if self.graph.m != self.X.shape[1]:
            raise ValueError("label graph size does not match document count")

    @property
    def d_x(self) -> int:
        return self.X.shape[0]

    @property
    def d_y(self) -> int:
        return self.Y.shape[0]

    @property
    def m(self) -> int:
        return self.X.shape[1]


@dataclass
class Model:
    U: np.ndarray
    V: np.ndarray
    hyper: Hyperparams
    initial_loss: LossBreakdown | None = None
    trace: list[LossBreakdown] = field(default_factory=list)


def pull_loss(U: np.ndarray, V: np.ndarray,
              X: np.ndarray, Y: np.ndarray) -> float:
    diff = X.T @ U - Y.T @ V
    return 0.5 * float(np.sum(diff * diff))


def graph_reg(U: np.ndarray, V: np.ndarray, X: np.ndarray, Y: np.ndarray,
              graph: LabelGraph) -> float:
    """0.5 tr(O L O') computed through the four Laplacian blocks.

    A is U'X (text views in latent space), B is V'Y. The block form is
    what the gradients differentiate; it equals the unpartitioned trace.
    """
    A = U.T @ X
    B = V.T @ Y
    return 0.5 * float(
        np.sum((A @ graph.lxx) * A)
        + np.sum((A @ graph.lxy) * B)
        + np.sum((B @ graph.lyx) * A)
        + np.sum((B @ graph.lyy) * B)
    )


def content_reg(U: np.ndarray, V: np.ndarray, R: np.ndarray) -> float:
    diff = U @ V.T - R
    return 0.5 * float(np.sum(diff * diff))


def scale_reg(U: np.ndarray, V: np.ndarray) -> float:
    return 0.5 * float(np.sum(U * U)) + 0.5 * float(np.sum(V * V))


def total_loss(U: np.ndarray, V: np.ndarray, data: TrainingData,
               hyper: Hyperparams) -> LossBreakdown:
    pull = pull_loss(U, V, data.X, data.Y)
    graph = graph_reg(U, V, data.X, data.Y, data.graph)
    content = content_reg(U, V, data.R)
    scale = scale_reg(U, V)
    total = (hyper.lambda1 * pull + hyper.lambda2 * graph
             + hyper.lambda3 * content + scale)
    return LossBreakdown(pull=pull, graph=graph, content=content,
                         scale=scale, total=total)


def grad_U(U: np.ndarray, V: np.ndarray, data: TrainingData,
           hyper: Hyperparams) -> np.ndarray:
    """Gradient of the total loss in U.

    d/dU = lambda1 X (X'U - Y'V)
         + lambda2 (X Lxx X'U + X Lxy Y'V)
         + lambda3 (UV' - R) V
         + U
    """
    X, Y, g = data.X, data.Y, data.graph
    out = np.array(U, copy=True)
    if hyper.lambda1:
        out += hyper.lambda1 * (X @ (X.T @ U - Y.T @ V))
    if hyper.lambda2:
        out += hyper.lambda2 * (X @ (g.lxx @ (X.T @ U)) + X @ (g.lxy @ (Y.T @ V)))
    if hyper.lambda3:
        out += hyper.lambda3 * ((U @ V.T - data.R) @ V)
    return out


def grad_V(U: np.ndarray, V: np.ndarray, data: TrainingData,
           hyper: Hyperparams) -> np.ndarray:
    """Gradient of the total loss in V (mirror image of :func:`grad_U`)."""
    X, Y, g = data.X, data.Y, data.graph
    out = np.array(V, copy=True)
    if hyper.lambda1:
        out += hyper.lambda1 * (Y @ (Y.T @ V - X.T @ U))
    if hyper.lambda2:
        out += hyper.lambda2 * (Y @ (g.lyx @ (X.T @ U)) + Y @ (g.lyy @ (Y.T @ V)))
    if hyper.lambda3:
        out += hyper.lambda3 * ((U @ V.T - data.R).T @ U)
    return out


def _pad_orthonormal(M: np.ndarray, start: int, rng: np.random.Generator) -> None:
    """Fill columns start.. with a seeded orthonormal complement, in place."""
    n, k = M.shape
    for j in range(start, k):
        for _ in range(100):
            v = rng.standard_normal(n)
            # Two Gram-Schmidt passes for numerical safety.
            for _ in range(2):
                v -= M[:, :j] @ (M[:, :j].T @ v)
            norm = np.linalg.norm(v)
            if norm > 1e-8:
                M[:, j] = v / norm
                break
        else:
            raise RuntimeError("could not draw an orthonormal complement")


def cfa_init(X: np.ndarray, Y: np.ndarray, k: int,
             seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Cross-modal factor start: paired top-k singular vectors of X Y'.

    Among orthonormal-column pairs this maximizes the cross term
    tr(U' X Y' V), which is what makes it the classical closed-form
    answer to pulling the two views together. Signs are fixed by making
    the largest-magnitude entry of each left singular vector positive,
    with the matching right vector flipped along, so the pairing (and
    with it the objective value) is preserved. If X Y' has rank below k
    the remaining columns are padded with a seeded orthonormal complement
    and a warning is issued.
    """
    d_x, m = X.shape
    d_y, m_y = Y.shape
    if m != m_y:
        raise ValueError("X and Y must have the same number of columns")
    if not (1 <= k <= min(d_x, d_y, m)):
        raise ValueError(f"need 1 <= k <= min(d_x, d_y, m) = "
                         f"{min(d_x, d_y, m)}, got k={k}")
    M = X @ Y.T
    left, sigma, right_t = np.linalg.svd(M, full_matrices=False)
    cutoff = (sigma[0] * max(M.shape) * np.finfo(np.float64).eps
              if sigma.size and sigma[0] > 0 else 0.0)
    rank = int(np.sum(sigma > cutoff))
    U0 = np.array(left[:, :k], copy=True)
    V0 = np.array(right_t[:k, :].T, copy=True)

    usable = min(rank, k)
    if usable < k:
        warnings.warn(f"cross matrix rank {rank} below k={k}; padding with "
                      f"a seeded orthonormal complement", stacklevel=2)
        rng = np.random.default_rng(seed)
        _pad_orthonormal(U0, usable, rng)
        _pad_orthonormal(V0, usable, rng)
    for j in range(k):
        i = int(np.argmax(np.abs(U0[:, j])))
        if U0[i, j] < 0:
            U0[:, j] = -U0[:, j]
            V0[:, j] = -V0[:, j]
    return U0, V0


def cfa_model(data: TrainingData, hyper: Hyperparams) -> Model:
    """Untrained model: the factor-analysis start used directly."""
    hyper.validate(data.d_x, data.d_y)
    U0, V0 = cfa_init(data.X, data.Y, hyper.k, hyper.seed)
    return Model(U=U0, V=V0, hyper=hyper,
                 initial_loss=total_loss(U0, V0, data, hyper), trace=[])


def _descent_step(U, V, data, hyper, eta):
    U_new = U - eta * grad_U(U, V, data, hyper)
    V_new = V - eta * grad_V(U_new, V, data, hyper)
    return U_new, V_new


def train(data: TrainingData, hyper: Hyperparams) -> Model:
    """Alternating gradient descent from the factor-analysis start.

    Each iteration updates U, then V against the fresh U, then records the
    loss breakdown. Descent stops when the relative change of the total,
    |total_t - total_{t-1}| / max(total_{t-1}, 1), drops below ``tol`` or
    after ``max_iter`` iterations. A non-finite loss or iterate aborts
    with a hint to lower the step size. With ``backtracking`` the step is
    halved (up to 40 times) within each iteration until the total does
    not increase.

    Identical inputs and hyperparameters give bit-identical models.
    """
    hyper.validate(data.d_x, data.d_y)
    if hyper.k > data.m:
        raise ValueError(f"k={hyper.k} exceeds the number of training "
                         f"documents {data.m}")
    U, V = cfa_init(data.X, data.Y, hyper.k, hyper.seed)
    initial = total_loss(U, V, data, hyper)
    if not np.isfinite(initial.total):
        raise TrainingDivergedError("initial loss is not finite; check inputs")

    trace: list[LossBreakdown] = []
    prev = initial.total
    for _ in range(hyper.max_iter):
        if hyper.backtracking:
            eta = hyper.eta
            for _ in range(40):
                U_new, V_new = _descent_step(U, V, data, hyper, eta)
                cand = total_loss(U_new, V_new, data, hyper)
                if np.isfinite(cand.total) and cand.total <= prev:
                    break
                eta *= 0.5
            breakdown = cand
        else:
            U_new, V_new = _descent_step(U, V, data, hyper, hyper.eta)
            breakdown = total_loss(U_new, V_new, data, hyper)
        if (not np.isfinite(breakdown.total)
                or not np.all(np.isfinite(U_new))
                or not np.all(np.isfinite(V_new))):
            raise TrainingDivergedError(
                f"loss diverged at iteration {len(trace) + 1}; "
                f"try a step size smaller than eta={hyper.eta}")
        U, V = U_new, V_new
        trace.append(breakdown)
        if abs(breakdown.total - prev) / max(prev, 1.0) < hyper.tol:
            break
        prev = breakdown.total
    return Model(U=U, V=V, hyper=hyper, initial_loss=initial, trace=trace)


def cfa_plus_cr_train(data: TrainingData, hyper: Hyperparams) -> Model:
    """Factor analysis plus content regularization: same descent, no graph."""
    return train(data, dataclasses.replace(hyper, lambda2=0.0))


def find_decreasing_step(data: TrainingData, hyper: Hyperparams,
                         start: float = 1e-2, max_halvings: int = 40) -> float:
    """Largest eta in {start, start/2, ...} whose first full update
    strictly decreases the total loss from the factor-analysis start."""
    hyper.validate(data.d_x, data.d_y)
    U0, V0 = cfa_init(data.X, data.Y, hyper.k, hyper.seed)
    before = total_loss(U0, V0, data, hyper).total
    eta = start
    for _ in range(max_halvings):
        U1, V1 = _descent_step(U0, V0, data, hyper, eta)
        after = total_loss(U1, V1, data, hyper).total
        if np.isfinite(after) and after < before:
            return eta
        eta *= 0.5
    raise RuntimeError(f"no decreasing step found from {start} "
                       f"within {max_halvings} halvings")
