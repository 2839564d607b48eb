"""Model presets, the training driver, and NED scoring.

Four presets cover the auditory and semantic model families. Each trains an
encoder-decoder MLP to predict the next cross-speaker unit's features from
the previous unit's features (single loss), or to jointly reconstruct the
input and predict the response with equal weights (dual loss). The neural
entrainment distance (NED) between two units is a scalar computed from the
two bottleneck embeddings: mean absolute difference (lower means closer) or
cosine similarity (higher means closer; the raw cosine value is kept and
the polarity carries the decision direction).

Presets at their canonical input dimension:

    LLD_AUDITORY   [228,128,30,128,228]  smooth-L1, single, ABS_DIFF, lower
    TRILL_AUDITORY [512,128,30,128,512]  KL,        single, COSINE, higher
    SENT_SEMANTIC  [768,512,384,512,768] smooth-L1, dual,   COSINE, higher
    USE_SEMANTIC   [512,128,30,128,512]  smooth-L1, dual,   COSINE, higher

Presets scale to other input dimensions d: the narrow-funnel presets keep
their [d,128,30,128,d] body; SENT_SEMANTIC keeps its proportional funnel
[d, ~2d/3, ~d/2, ~2d/3, d].
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import PairSet, UnitRecord
from .errors import DimensionMismatch, EmptyPairSet, SchemaViolation, ZeroVector
from .features import NormScope, NormStats, zscore_apply_matrix
from .neuralnet import (
    AdamState,
    LossKind,
    MlpSpec,
    Mode,
    ModelParams,
    adam_step,
    backward,
    forward,
    init_params,
    loss_and_grad,
)

DEFAULT_EPOCHS = 10
DEFAULT_BATCH_SIZE = 128
BOTTLENECK_INDEX = 2


class Preset(str, enum.Enum):
    LLD_AUDITORY = "LLD_AUDITORY"
    TRILL_AUDITORY = "TRILL_AUDITORY"
    SENT_SEMANTIC = "SENT_SEMANTIC"
    USE_SEMANTIC = "USE_SEMANTIC"


class NedMetric(str, enum.Enum):
    ABS_DIFF = "ABS_DIFF"
    COSINE = "COSINE"


class Polarity(str, enum.Enum):
    LOWER_IS_CLOSER = "LOWER_IS_CLOSER"
    HIGHER_IS_CLOSER = "HIGHER_IS_CLOSER"


_CANONICAL_DIM = {
    Preset.LLD_AUDITORY: 228,
    Preset.TRILL_AUDITORY: 512,
    Preset.SENT_SEMANTIC: 768,
    Preset.USE_SEMANTIC: 512,
}

_PRESET_LOSS = {
    Preset.LLD_AUDITORY: (LossKind.SMOOTH_L1, False),
    Preset.TRILL_AUDITORY: (LossKind.KL_DIVERGENCE, False),
    Preset.SENT_SEMANTIC: (LossKind.SMOOTH_L1, True),
    Preset.USE_SEMANTIC: (LossKind.SMOOTH_L1, True),
}

_PRESET_METRIC = {
    Preset.LLD_AUDITORY: (NedMetric.ABS_DIFF, Polarity.LOWER_IS_CLOSER),
    Preset.TRILL_AUDITORY: (NedMetric.COSINE, Polarity.HIGHER_IS_CLOSER),
    Preset.SENT_SEMANTIC: (NedMetric.COSINE, Polarity.HIGHER_IS_CLOSER),
    Preset.USE_SEMANTIC: (NedMetric.COSINE, Polarity.HIGHER_IS_CLOSER),
}


@dataclass(frozen=True)
class ModelConfig:
    preset: Preset
    spec: MlpSpec
    ned_metric: NedMetric
    closeness_polarity: Polarity
    epochs: int = DEFAULT_EPOCHS
    batch_size: int = DEFAULT_BATCH_SIZE

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise SchemaViolation("epochs must be >= 1")
        if self.batch_size < 1:
            raise SchemaViolation("batch_size must be >= 1")


def preset_widths(preset: Preset, input_dim: int) -> tuple[int, ...]:
    if input_dim < 1:
        raise DimensionMismatch("input_dim must be >= 1")
    if preset is Preset.SENT_SEMANTIC:
        outer = max(1, int(round(2 * input_dim / 3)))
        inner = max(1, int(round(input_dim / 2)))
        inner = min(inner, outer)  # bottleneck may not exceed its neighbors
        return (input_dim, outer, inner, outer, input_dim)
    return (input_dim, 128, 30, 128, input_dim)


def preset_config(
    preset: Preset,
    input_dim: int | None = None,
    epochs: int = DEFAULT_EPOCHS,
    batch_size: int = DEFAULT_BATCH_SIZE,
    dual_loss: bool | None = None,
) -> ModelConfig:
    """Instantiate a preset, optionally rescaled to a non-canonical input dim.

    `dual_loss` overrides the preset's default reconstruction+mapping
    choice; it exists for the ablation comparison and is recorded in the
    resulting spec.
    """
    dim = _CANONICAL_DIM[preset] if input_dim is None else int(input_dim)
    loss_kind, preset_dual = _PRESET_LOSS[preset]
    metric, polarity = _PRESET_METRIC[preset]
    spec = MlpSpec(
        layer_widths=preset_widths(preset, dim),
        bottleneck_index=BOTTLENECK_INDEX,
        loss_kind=loss_kind,
        dual_loss=preset_dual if dual_loss is None else dual_loss,
    )
    return ModelConfig(
        preset=preset,
        spec=spec,
        ned_metric=metric,
        closeness_polarity=polarity,
        epochs=epochs,
        batch_size=batch_size,
    )


@dataclass(frozen=True)
class TrainedModel:
    """A frozen model: parameters are only ever used in EVAL mode."""

    config: ModelConfig
    params: ModelParams
    training_log: tuple[float, ...]
    seed: int
    norm: NormStats | None = None


def _pairs_to_matrices(
    train_pairs: PairSet | Iterable[PairSet] | tuple[np.ndarray, np.ndarray],
) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(train_pairs, tuple) and len(train_pairs) == 2:
        x1, x2 = train_pairs
        if isinstance(x1, np.ndarray) and isinstance(x2, np.ndarray):
            if x1.shape != x2.shape or x1.ndim != 2:
                raise DimensionMismatch(
                    f"pair matrices must share a 2-d shape, got "
                    f"{x1.shape} vs {x2.shape}"
                )
            return (
                np.ascontiguousarray(x1, dtype=np.float64),
                np.ascontiguousarray(x2, dtype=np.float64),
            )
    pair_sets = [train_pairs] if isinstance(train_pairs, PairSet) else list(train_pairs)
    rows1: list[np.ndarray] = []
    rows2: list[np.ndarray] = []
    for ps in pair_sets:
        for x1, x2 in ps.pairs:
            rows1.append(x1.features)
            rows2.append(x2.features)
    if not rows1:
        raise EmptyPairSet("no training pairs")
    dim = rows1[0].shape[0]
    for r in rows1 + rows2:
        if r.shape[0] != dim:
            raise DimensionMismatch("training pairs disagree on feature dim")
    return np.stack(rows1), np.stack(rows2)


def train_model(
    config: ModelConfig,
    train_pairs: PairSet | Iterable[PairSet] | tuple[np.ndarray, np.ndarray],
    seed: int,
    norm: NormStats | None = None,
) -> TrainedModel:
    """Train one model on (x1 -> x2) pairs and freeze it.

    Mini-batches are reshuffled every epoch from a seed derived as
    (seed, 1, epoch); parameter init uses (seed, 0). With dual_loss the
    decoder output is compared against BOTH the response x2 (mapping) and
    the input x1 (reconstruction), gradients summed at unit weights.
    training_log holds each epoch's mean total batch loss. The same
    (config, pairs, seed) always yields a bit-identical model.
    """
    x1_raw, x2_raw = _pairs_to_matrices(train_pairs)
    if x1_raw.shape[0] == 0:
        raise EmptyPairSet("no training pairs")
    if x1_raw.shape[1] != config.spec.input_dim:
        raise DimensionMismatch(
            f"pair feature dim {x1_raw.shape[1]} != model input "
            f"{config.spec.input_dim}"
        )
    if norm is not None:
        x1 = zscore_apply_matrix(x1_raw, norm)
        x2 = zscore_apply_matrix(x2_raw, norm)
    else:
        x1, x2 = x1_raw, x2_raw

    spec = config.spec
    params = init_params(spec, [seed, 0])
    state = AdamState.for_params(params)
    n = x1.shape[0]
    log: list[float] = []
    for epoch in range(config.epochs):
        rng = np.random.default_rng([seed, 1, epoch])
        perm = rng.permutation(n)
        batch_losses: list[float] = []
        for start in range(0, n, config.batch_size):
            idx = perm[start : start + config.batch_size]
            xb = np.ascontiguousarray(x1[idx])
            yb = np.ascontiguousarray(x2[idx])
            out, _, cache = forward(params, spec, xb, Mode.TRAIN)
            loss_map, grad = loss_and_grad(spec.loss_kind, out, yb)
            total = loss_map
            if spec.dual_loss:
                loss_rec, grad_rec = loss_and_grad(spec.loss_kind, out, xb)
                total += loss_rec
                grad = grad + grad_rec
            grads = backward(params, spec, cache, grad)
            adam_step(params, grads, state)
            batch_losses.append(total)
        log.append(float(np.mean(batch_losses)))
    return TrainedModel(
        config=config,
        params=params,
        training_log=tuple(log),
        seed=seed,
        norm=norm,
    )


def encode_matrix(model: TrainedModel, x: np.ndarray) -> np.ndarray:
    """EVAL-mode bottleneck embeddings for a batch of raw feature vectors."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionMismatch("encode_matrix expects a 2-d batch")
    if x.shape[1] != model.config.spec.input_dim:
        raise DimensionMismatch(
            f"feature dim {x.shape[1]} != model input {model.config.spec.input_dim}"
        )
    if model.norm is not None:
        x = zscore_apply_matrix(x, model.norm)
    _, bottleneck, _ = forward(model.params, model.config.spec, x, Mode.EVAL)
    return bottleneck


def encode(model: TrainedModel, unit: UnitRecord | np.ndarray) -> np.ndarray:
    """Bottleneck embedding z of one unit (or raw feature vector)."""
    vec = unit.features if isinstance(unit, UnitRecord) else np.asarray(unit)
    if vec.ndim != 1:
        raise DimensionMismatch("encode expects a single feature vector")
    return encode_matrix(model, vec[None, :])[0]


def ned_abs_diff(z1: np.ndarray, z2: np.ndarray) -> float:
    """Mean elementwise absolute difference; zero iff the embeddings match."""
    z1 = np.asarray(z1, dtype=np.float64)
    z2 = np.asarray(z2, dtype=np.float64)
    if z1.shape != z2.shape:
        raise DimensionMismatch(f"{z1.shape} vs {z2.shape}")
    return float(np.mean(np.abs(z1 - z2)))


def ned_cosine(z1: np.ndarray, z2: np.ndarray) -> float:
    """Cosine similarity in [-1, 1]; polarity semantics live in ModelConfig."""
    z1 = np.asarray(z1, dtype=np.float64)
    z2 = np.asarray(z2, dtype=np.float64)
    if z1.shape != z2.shape:
        raise DimensionMismatch(f"{z1.shape} vs {z2.shape}")
    n1 = float(np.linalg.norm(z1))
    n2 = float(np.linalg.norm(z2))
    if n1 == 0.0 or n2 == 0.0:
        raise ZeroVector("cosine undefined for zero-norm embeddings")
    return float(np.dot(z1, z2) / (n1 * n2))


def apply_metric(metric: NedMetric, z1: np.ndarray, z2: np.ndarray) -> float:
    if metric is NedMetric.ABS_DIFF:
        return ned_abs_diff(z1, z2)
    return ned_cosine(z1, z2)


def score_pair(
    model: TrainedModel, x1: UnitRecord | np.ndarray, x2: UnitRecord | np.ndarray
) -> float:
    """NED between two units under the model's metric."""
    return apply_metric(model.config.ned_metric, encode(model, x1), encode(model, x2))


# ---------------------------------------------------------------------------
# Checkpoint IO

_CHECKPOINT_FORMAT = 1


def save_model(model: TrainedModel, path: str | Path) -> Path:
    """Serialize to one .npz file; round-trips bit-exactly."""
    path = Path(path)
    arrays: dict[str, np.ndarray] = {}
    for name, tensor in model.params.learned_tensors():
        arrays[name] = tensor
    for name, tensor in model.params.tracked_tensors():
        arrays[name] = tensor
    meta: dict = {
        "format": _CHECKPOINT_FORMAT,
        "preset": model.config.preset.value,
        "layer_widths": list(model.config.spec.layer_widths),
        "bottleneck_index": model.config.spec.bottleneck_index,
        "loss_kind": model.config.spec.loss_kind.value,
        "dual_loss": model.config.spec.dual_loss,
        "ned_metric": model.config.ned_metric.value,
        "closeness_polarity": model.config.closeness_polarity.value,
        "epochs": model.config.epochs,
        "batch_size": model.config.batch_size,
        "bn_eps": model.params.bn_eps,
        "bn_momentum": model.params.bn_momentum,
        "seed": model.seed,
        "training_log": list(model.training_log),
        "norm_scope": model.norm.scope.value if model.norm is not None else None,
    }
    if model.norm is not None:
        arrays["norm_mean"] = model.norm.mean
        arrays["norm_std"] = model.norm.std
        arrays["norm_mask"] = model.norm.constant_mask
    np.savez(path, meta=np.array(json.dumps(meta)), **arrays)
    return path


def load_model(path: str | Path) -> TrainedModel:
    path = Path(path)
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        if meta.get("format") != _CHECKPOINT_FORMAT:
            raise SchemaViolation(
                f"checkpoint {path}: unsupported format {meta.get('format')!r}"
            )
        spec = MlpSpec(
            layer_widths=tuple(meta["layer_widths"]),
            bottleneck_index=meta["bottleneck_index"],
            loss_kind=LossKind(meta["loss_kind"]),
            dual_loss=meta["dual_loss"],
        )
        config = ModelConfig(
            preset=Preset(meta["preset"]),
            spec=spec,
            ned_metric=NedMetric(meta["ned_metric"]),
            closeness_polarity=Polarity(meta["closeness_polarity"]),
            epochs=meta["epochs"],
            batch_size=meta["batch_size"],
        )
        weights = [np.array(data[f"w{i}"]) for i in range(spec.num_fc)]
        biases = [np.array(data[f"b{i}"]) for i in range(spec.num_fc)]
        bn_gamma = {}
        bn_beta = {}
        bn_rm = {}
        bn_rv = {}
        for i in spec.bn_layers():
            bn_gamma[i] = np.array(data[f"gamma{i}"])
            bn_beta[i] = np.array(data[f"beta{i}"])
            bn_rm[i] = np.array(data[f"rmean{i}"])
            bn_rv[i] = np.array(data[f"rvar{i}"])
        params = ModelParams(
            weights=weights,
            biases=biases,
            bn_gamma=bn_gamma,
            bn_beta=bn_beta,
            bn_running_mean=bn_rm,
            bn_running_var=bn_rv,
            bn_eps=meta["bn_eps"],
            bn_momentum=meta["bn_momentum"],
        )
        norm = None
        if meta["norm_scope"] is not None:
            norm = NormStats(
                mean=np.array(data["norm_mean"]),
                std=np.array(data["norm_std"]),
                scope=NormScope(meta["norm_scope"]),
                constant_mask=np.array(data["norm_mask"]),
            )
    return TrainedModel(
        config=config,
        params=params,
        training_log=tuple(meta["training_log"]),
        seed=meta["seed"],
        norm=norm,
    )
