"""Pure numpy implementations of the hot numerical kernels.

This is the fallback backend; `_ckernels` (Cython) implements the same
functions with identical semantics. All matrix arguments are float64 and
C-contiguous; callers are responsible for dtype discipline. Matrix products
are deliberately absent: both backends leave those to BLAS.
"""

from __future__ import annotations

import numpy as np


def bn_train(
    x: np.ndarray,
    gamma: np.ndarray,
    beta: np.ndarray,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    momentum: float,
    eps: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batch-norm forward in training mode.

    Normalizes with biased batch variance, then updates the running stats in
    place with `running = (1 - momentum) * running + momentum * stat`, where
    the variance statistic is the unbiased estimate (biased fallback when the
    batch has a single row, so size-1 batches stay finite).

    Returns (y, xhat, batch_var); xhat and batch_var feed bn_backward.
    """
    n = x.shape[0]
    mean = x.mean(axis=0)
    centered = x - mean
    var = np.mean(centered * centered, axis=0)
    xhat = centered / np.sqrt(var + eps)
    y = gamma * xhat + beta
    var_update = var * (n / (n - 1.0)) if n > 1 else var
    running_mean *= 1.0 - momentum
    running_mean += momentum * mean
    running_var *= 1.0 - momentum
    running_var += momentum * var_update
    return y, xhat, var


def bn_eval(
    x: np.ndarray,
    gamma: np.ndarray,
    beta: np.ndarray,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    eps: float,
) -> np.ndarray:
    """Batch-norm forward in eval mode: running stats, no mutation."""
    xhat = (x - running_mean) / np.sqrt(running_var + eps)
    return gamma * xhat + beta


def bn_backward(
    dy: np.ndarray,
    xhat: np.ndarray,
    gamma: np.ndarray,
    var: np.ndarray,
    eps: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batch-norm backward under the batch-statistics formulation.

    dx = (inv_std / n) * (n * dxhat - sum(dxhat) - xhat * sum(dxhat * xhat))
    with dxhat = dy * gamma, reduced per feature over the batch axis.
    """
    n = dy.shape[0]
    dgamma = np.sum(dy * xhat, axis=0)
    dbeta = np.sum(dy, axis=0)
    dxhat = dy * gamma
    inv = 1.0 / np.sqrt(var + eps)
    dx = (inv / n) * (
        n * dxhat - np.sum(dxhat, axis=0) - xhat * np.sum(dxhat * xhat, axis=0)
    )
    return dx, dgamma, dbeta


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(dy: np.ndarray, y: np.ndarray) -> np.ndarray:
    # y is the relu OUTPUT; exact zeros get zero gradient.
    return dy * (y > 0.0)


def smooth_l1(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Smooth-L1 (Huber at delta=1), mean-reduced over all N elements.

    loss = mean(0.5*d^2 if |d| < 1 else |d| - 0.5), grad = clamp(d, -1, 1)/N.
    """
    d = pred - target
    ad = np.abs(d)
    per = np.where(ad < 1.0, 0.5 * d * d, ad - 0.5)
    loss = float(per.mean())
    grad = np.clip(d, -1.0, 1.0) / d.size
    return loss, grad

def kl_softmax(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Row-wise KL(q || p) after lifting both operands to the simplex.

    p = softmax(pred) row-wise, q = softmax(target); loss is the mean over
    rows of sum(q * (log q - log p)); gradient wrt pred logits is
    (p - q) / n_rows. Softmax is computed with the max-shift trick, so any
    finite logits stay finite.
    """
    n = pred.shape[0]
    p_shift = pred - pred.max(axis=1, keepdims=True)
    q_shift = target - target.max(axis=1, keepdims=True)
    log_p = p_shift - np.log(np.exp(p_shift).sum(axis=1, keepdims=True))
    log_q = q_shift - np.log(np.exp(q_shift).sum(axis=1, keepdims=True))
    q = np.exp(log_q)
    loss = float(np.sum(q * (log_q - log_p), axis=1).mean())
    grad = (np.exp(log_p) - q) / n
    return loss, grad


def adam_update(
    param: np.ndarray,
    grad: np.ndarray,
    m: np.ndarray,
    v: np.ndarray,
    t: int,
    lr: float,
    beta1: float,
    beta2: float,
    eps: float,
) -> None:
    """One bias-corrected Adam step, in place on param/m/v. t is 1-based."""
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    mhat = m / (1.0 - beta1**t)
    vhat = v / (1.0 - beta2**t)
    param -= lr * mhat / (np.sqrt(vhat) + eps)


def _interp_percentile(sorted_col: np.ndarray, q: float) -> float:
    # Linear interpolation between closest ranks: h = (n-1)*q.
    n = sorted_col.shape[0]
    h = (n - 1) * q
    lo = int(h)
    frac = h - lo
    if lo + 1 < n:
        return float(sorted_col[lo] + frac * (sorted_col[lo + 1] - sorted_col[lo]))
    return float(sorted_col[n - 1])


def column_functionals(frames: np.ndarray) -> np.ndarray:
    """Six functionals per column: mean, median, population std, p1, p99, range.

    Output is column-major concatenated: [six of col 0, six of col 1, ...].
    Median and percentiles share the (n-1)*q linear-interpolation convention.
    """
    n, ncols = frames.shape
    out = np.empty(6 * ncols, dtype=np.float64)
    for c in range(ncols):
        col = frames[:, c]
        mean = float(col.mean())
        centered = col - mean
        std = float(np.sqrt(np.mean(centered * centered)))
        s = np.sort(col)
        median = _interp_percentile(s, 0.5)
        p1 = _interp_percentile(s, 0.01)
        p99 = _interp_percentile(s, 0.99)
        base = 6 * c
        out[base] = mean
        out[base + 1] = median
        out[base + 2] = std
        out[base + 3] = p1
        out[base + 4] = p99
        out[base + 5] = p99 - p1
    return out
