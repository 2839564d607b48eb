"""Minimal feed-forward network engine with explicit backpropagation.

Architecture: for layer widths [w0, .., wL] there are L fully connected
layers. Every hidden layer applies FC -> BatchNorm -> ReLU, with one
exception: the bottleneck layer (the narrowest hidden layer) carries no
BatchNorm, only FC -> ReLU, so the bottleneck embedding is an unnormalized
ReLU activation. The final layer is a plain affine map. All arithmetic is
float64; hot loops are delegated to the selected kernels backend.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ShapeMismatch, StaleCache

BN_EPS = 1e-5
BN_MOMENTUM = 0.1
ADAM_LR = 1e-3
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


class LossKind(str, enum.Enum):
    SMOOTH_L1 = "SMOOTH_L1"
    KL_DIVERGENCE = "KL_DIVERGENCE"


class Mode(str, enum.Enum):
    TRAIN = "TRAIN"
    EVAL = "EVAL"


@dataclass(frozen=True)
class MlpSpec:
    """Topology and loss selection for one encoder-decoder network."""

    layer_widths: tuple[int, ...]
    bottleneck_index: int
    loss_kind: LossKind
    dual_loss: bool

    def __post_init__(self) -> None:
        widths = tuple(int(w) for w in self.layer_widths)
        if len(widths) < 3:
            raise ShapeMismatch("layer_widths must contain at least 3 widths")
        if any(w < 1 for w in widths):
            raise ShapeMismatch("all layer widths must be >= 1")
        if not 1 <= self.bottleneck_index <= len(widths) - 2:
            raise ShapeMismatch(
                f"bottleneck_index {self.bottleneck_index} must point at a "
                f"hidden layer (1..{len(widths) - 2})"
            )
        hidden = widths[1:-1]
        if widths[self.bottleneck_index] != min(hidden):
            raise ShapeMismatch(
                "bottleneck_index must point at the narrowest hidden layer"
            )
        object.__setattr__(self, "layer_widths", widths)

    @property
    def num_fc(self) -> int:
        return len(self.layer_widths) - 1

    @property
    def input_dim(self) -> int:
        return self.layer_widths[0]

    @property
    def output_dim(self) -> int:
        return self.layer_widths[-1]

    @property
    def bottleneck_width(self) -> int:
        return self.layer_widths[self.bottleneck_index]

    def bn_layers(self) -> tuple[int, ...]:
        """FC indices followed by BatchNorm: hidden layers minus bottleneck."""
        return tuple(
            i
            for i in range(self.num_fc - 1)
            if i + 1 != self.bottleneck_index
        )

    def num_parameters(self) -> int:
        widths = self.layer_widths
        total = sum(
            widths[i + 1] * widths[i] + widths[i + 1] for i in range(self.num_fc)
        )
        total += sum(2 * widths[i + 1] for i in self.bn_layers())
        return total


@dataclass
class ModelParams:
    """Learned tensors plus BatchNorm running statistics.

    weights[i]/biases[i] belong to FC layer i (weight shape out x in).
    BatchNorm dicts are keyed by FC index; running stats are tracked, not
    optimized.
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    bn_gamma: dict[int, np.ndarray]
    bn_beta: dict[int, np.ndarray]
    bn_running_mean: dict[int, np.ndarray]
    bn_running_var: dict[int, np.ndarray]
    bn_eps: float = BN_EPS
    bn_momentum: float = BN_MOMENTUM

    def copy(self) -> "ModelParams":
        return ModelParams(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            bn_gamma={k: v.copy() for k, v in self.bn_gamma.items()},
            bn_beta={k: v.copy() for k, v in self.bn_beta.items()},
            bn_running_mean={k: v.copy() for k, v in self.bn_running_mean.items()},
            bn_running_var={k: v.copy() for k, v in self.bn_running_var.items()},
            bn_eps=self.bn_eps,
            bn_momentum=self.bn_momentum,
        )

    def learned_tensors(self) -> list[tuple[str, np.ndarray]]:
        """Optimizable tensors in declared order: FC pairs, then BN pairs."""
        out: list[tuple[str, np.ndarray]] = []
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out.append((f"w{i}", w))
            out.append((f"b{i}", b))
        for i in sorted(self.bn_gamma):
            out.append((f"gamma{i}", self.bn_gamma[i]))
            out.append((f"beta{i}", self.bn_beta[i]))
        return out

    def tracked_tensors(self) -> list[tuple[str, np.ndarray]]:
        out: list[tuple[str, np.ndarray]] = []
        for i in sorted(self.bn_running_mean):
            out.append((f"rmean{i}", self.bn_running_mean[i]))
            out.append((f"rvar{i}", self.bn_running_var[i]))
        return out


@dataclass
class ParamGrads:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    bn_gamma: dict[int, np.ndarray]
    bn_beta: dict[int, np.ndarray]

    def learned_tensors(self) -> list[tuple[str, np.ndarray]]:
        out: list[tuple[str, np.ndarray]] = []
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out.append((f"w{i}", w))
            out.append((f"b{i}", b))
        for i in sorted(self.bn_gamma):
            out.append((f"gamma{i}", self.bn_gamma[i]))
            out.append((f"beta{i}", self.bn_beta[i]))
        return out


def init_params(spec: MlpSpec, seed) -> ModelParams:
    """Seeded Kaiming-uniform weights (limit sqrt(6/fan_in)), zero biases,
    identity BatchNorm, drawn in declared parameter order."""
    rng = np.random.default_rng(seed)
    widths = spec.layer_widths
    weights = []
    biases = []
    for i in range(spec.num_fc):
        fan_in = widths[i]
        limit = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(widths[i + 1], fan_in)))
        biases.append(np.zeros(widths[i + 1]))
    bn_gamma = {}
    bn_beta = {}
    bn_rm = {}
    bn_rv = {}
    for i in spec.bn_layers():
        d = widths[i + 1]
        bn_gamma[i] = np.ones(d)
        bn_beta[i] = np.zeros(d)
        bn_rm[i] = np.zeros(d)
        bn_rv[i] = np.ones(d)
    return ModelParams(
        weights=weights,
        biases=biases,
        bn_gamma=bn_gamma,
        bn_beta=bn_beta,
        bn_running_mean=bn_rm,
        bn_running_var=bn_rv,
    )


@dataclass
class ForwardCache:
    """Intermediates retained by a TRAIN-mode forward pass."""

    mode: Mode
    inputs: list[np.ndarray] = field(default_factory=list)  # FC input per layer
    bn_xhat: dict[int, np.ndarray] = field(default_factory=dict)
    bn_var: dict[int, np.ndarray] = field(default_factory=dict)
    relu_out: dict[int, np.ndarray] = field(default_factory=dict)


def forward(
    params: ModelParams,
    spec: MlpSpec,
    batch: np.ndarray,
    mode: Mode,
) -> tuple[np.ndarray, np.ndarray, ForwardCache]:
    """Run the network, returning (output, bottleneck, cache).

    TRAIN mode normalizes with batch statistics and updates running stats
    in place; EVAL mode uses running stats and mutates nothing. The
    bottleneck is the post-ReLU activation at bottleneck_index.
    """
    batch = np.ascontiguousarray(np.asarray(batch, dtype=np.float64))
    if batch.ndim != 2:
        raise ShapeMismatch(f"batch must be 2-dimensional, got ndim={batch.ndim}")
    if batch.shape[1] != spec.input_dim:
        raise ShapeMismatch(
            f"batch has {batch.shape[1]} columns, spec expects {spec.input_dim}"
        )
    bn_set = set(spec.bn_layers())
    cache = ForwardCache(mode=mode)
    h = batch
    bottleneck: np.ndarray | None = None
    for i in range(spec.num_fc):
        cache.inputs.append(h)
        h = h @ params.weights[i].T + params.biases[i]
        if i < spec.num_fc - 1:
            if i in bn_set:
                if mode is Mode.TRAIN:
                    h, xhat, var = kernels.bn_train(
                        np.ascontiguousarray(h),
                        params.bn_gamma[i],
                        params.bn_beta[i],
                        params.bn_running_mean[i],
                        params.bn_running_var[i],
                        params.bn_momentum,
                        params.bn_eps,
                    )
                    cache.bn_xhat[i] = xhat
                    cache.bn_var[i] = var
                else:
                    h = kernels.bn_eval(
                        np.ascontiguousarray(h),
                        params.bn_gamma[i],
                        params.bn_beta[i],
                        params.bn_running_mean[i],
                        params.bn_running_var[i],
                        params.bn_eps,
                    )
            h = kernels.relu(np.ascontiguousarray(h))
            cache.relu_out[i] = h
            if i + 1 == spec.bottleneck_index:
                bottleneck = h
    assert bottleneck is not None
    return h, bottleneck, cache


def backward(
    params: ModelParams,
    spec: MlpSpec,
    cache: ForwardCache,
    dout: np.ndarray,
) -> ParamGrads:
    """Exact analytic gradients for every learned tensor.

    Requires a TRAIN-mode cache; BatchNorm gradients use the full
    batch-statistics formulation (mean and variance depend on the batch).
    """
    if cache.mode is not Mode.TRAIN:
        raise StaleCache("backward requires a cache from a TRAIN-mode forward")
    bn_set = set(spec.bn_layers())
    g_w: list[np.ndarray] = [None] * spec.num_fc  # type: ignore[list-item]
    g_b: list[np.ndarray] = [None] * spec.num_fc  # type: ignore[list-item]
    g_gamma: dict[int, np.ndarray] = {}
    g_beta: dict[int, np.ndarray] = {}
    dh = np.asarray(dout, dtype=np.float64)
    for i in range(spec.num_fc - 1, -1, -1):
        if i < spec.num_fc - 1:
            dh = kernels.relu_backward(
                np.ascontiguousarray(dh), cache.relu_out[i]
            )
            if i in bn_set:
                dh, dgamma, dbeta = kernels.bn_backward(
                    np.ascontiguousarray(dh),
                    cache.bn_xhat[i],
                    params.bn_gamma[i],
                    cache.bn_var[i],
                    params.bn_eps,
                )
                g_gamma[i] = dgamma
                g_beta[i] = dbeta
        x_in = cache.inputs[i]
        g_w[i] = dh.T @ x_in
        g_b[i] = dh.sum(axis=0)
        if i > 0:
            dh = dh @ params.weights[i]
    return ParamGrads(weights=g_w, biases=g_b, bn_gamma=g_gamma, bn_beta=g_beta)


def _as_batch(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(np.asarray(a, dtype=np.float64))
    return a


def smooth_l1_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Huber loss at delta=1, mean over all elements; grad = clamp(d,-1,1)/N."""
    pred = _as_batch(pred)
    target = _as_batch(target)
    if pred.shape != target.shape:
        raise ShapeMismatch(f"pred {pred.shape} vs target {target.shape}")
    return kernels.smooth_l1(pred, target)


def kl_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """KL(softmax(target) || softmax(pred)), mean over rows.

    Both operands are lifted to the simplex row-wise; the gradient flows
    through the pred softmax only.
    """
    pred = _as_batch(pred)
    target = _as_batch(target)
    if pred.shape != target.shape:
        raise ShapeMismatch(f"pred {pred.shape} vs target {target.shape}")
    if pred.ndim != 2:
        raise ShapeMismatch("kl_loss expects 2-dimensional operands")
    return kernels.kl_softmax(pred, target)


def loss_and_grad(
    kind: LossKind, pred: np.ndarray, target: np.ndarray
) -> tuple[float, np.ndarray]:
    if kind is LossKind.SMOOTH_L1:
        return smooth_l1_loss(pred, target)
    return kl_loss(pred, target)


@dataclass
class AdamState:
    """Per-tensor first/second moment accumulators and the step counter."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0
    lr: float = ADAM_LR
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS

    @classmethod
    def for_params(
        cls,
        params: ModelParams,
        lr: float = ADAM_LR,
        beta1: float = ADAM_BETA1,
        beta2: float = ADAM_BETA2,
        eps: float = ADAM_EPS,
    ) -> "AdamState":
        m = {name: np.zeros_like(t) for name, t in params.learned_tensors()}
        v = {name: np.zeros_like(t) for name, t in params.learned_tensors()}
        return cls(m=m, v=v, lr=lr, beta1=beta1, beta2=beta2, eps=eps)


def adam_step(params: ModelParams, grads: ParamGrads, state: AdamState) -> None:
    """One bias-corrected Adam update, in place on params and state."""
    state.t += 1
    grad_by_name = dict(grads.learned_tensors())
    for name, tensor in params.learned_tensors():
        grad = grad_by_name[name]
        if grad.shape != tensor.shape:
            raise ShapeMismatch(
                f"gradient for {name} has shape {grad.shape}, "
                f"parameter has {tensor.shape}"
            )
        # Kernels operate on 2-d views; 1-d tensors share memory via reshape.
        t2 = tensor if tensor.ndim == 2 else tensor.reshape(1, -1)
        g2 = grad if grad.ndim == 2 else grad.reshape(1, -1)
        m2 = state.m[name] if grad.ndim == 2 else state.m[name].reshape(1, -1)
        v2 = state.v[name] if grad.ndim == 2 else state.v[name].reshape(1, -1)
        kernels.adam_update(
            t2,
            np.ascontiguousarray(g2),
            m2,
            v2,
            state.t,
            state.lr,
            state.beta1,
            state.beta2,
            state.eps,
        )
