"""Auto-decoder training loop: joint Adam over network weights and
per-shape latent codes, with JSON checkpoints that round-trip exactly."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, StageArtifactError
from .latent import LatentBank
from .neural import (
    DecoderParams,
    EncodingConfig,
    LipschitzLayer,
    NetworkConfig,
    build_decoder,
    decoder_backward,
    decoder_forward,
    lipschitz_loss,
    normalize_rows,
    softplus,
    truncated_l1,
)

__all__ = [
    "TrainConfig",
    "TrainResult",
    "AdamState",
    "total_loss",
    "train",
    "save_checkpoint",
    "load_checkpoint",
    "truncated_l1",
]

CHECKPOINT_FORMAT_VERSION = "shapeforge.checkpoint/1"


@dataclass
class TrainConfig:
    """Optimization settings.  One epoch performs a single Adam step on a
    batch built by drawing ``batch_size`` samples (with replacement) from
    every training shape and concatenating them."""

    epochs: int = 2000
    batch_size: int = 512
    lr_weights: float = 5e-4
    lr_latents: float = 1e-3
    delta: float = 0.1
    w_lipschitz: float = 1e-7
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        for name in ("lr_weights", "lr_latents", "delta"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.w_lipschitz < 0:
            raise ValueError("w_lipschitz must be >= 0")


@dataclass
class TrainResult:
    params: DecoderParams
    latents: LatentBank
    history: dict
    epochs_run: int


def total_loss(
    params: DecoderParams,
    z: np.ndarray,
    points: np.ndarray,
    gt_distances: np.ndarray,
    w_lipschitz: float,
) -> dict:
    """Loss of one batch of ``points`` that all share the latent code ``z``:
    mean truncated-L1 plus the squared latent norm plus the weighted product
    of the per-layer Lipschitz bounds.  Returns each term separately."""
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    points = np.asarray(points, dtype=np.float64)
    gt = np.asarray(gt_distances, dtype=np.float64).reshape(-1)
    pred = decoder_forward(params, points, np.tile(z, (points.shape[0], 1)))
    clip = float(np.mean(truncated_l1(pred, gt, params.delta)))
    latent_reg = float(z @ z)
    lip = lipschitz_loss(params)
    return {
        "total": clip + latent_reg + w_lipschitz * lip,
        "clip": clip,
        "latent_reg": latent_reg,
        "lipschitz": lip,
    }


class AdamState:
    """First/second moment buffers for one array parameter group."""

    def __init__(self, shape, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.m = np.zeros(shape, dtype=np.float64)
        self.v = np.zeros(shape, dtype=np.float64)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0

    def step(self, value: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1**self.t)
        v_hat = self.v / (1.0 - self.beta2**self.t)
        return value - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def _snapshot(params: DecoderParams, latents: dict) -> dict:
    return {
        "params": params.copy(),
        "latents": {k: v.copy() for k, v in latents.items()},
    }


def _check_row_bounds(params: DecoderParams) -> None:
    """The normalized effective weights must satisfy the per-row L1 bound
    softplus(k) after every update; a violation means the normalization
    contract was broken somewhere upstream."""
    for i, layer in enumerate(params.layers):
        w_hat = normalize_rows(layer.weight, layer.k)
        bound = softplus(layer.k)
        excess = np.abs(w_hat).sum(axis=1) - bound
        if np.any(excess > 1e-9 * max(1.0, abs(bound))):
            raise AssertionError(
                f"layer {i} row-sum bound violated by {excess.max():.3e}"
            )


def train(
    dataset: list,
    train_cfg: TrainConfig,
    net_cfg: NetworkConfig,
    log_every: int = 0,
) -> TrainResult:
    """Fit the decoder and one latent code per shape.

    ``dataset`` is a list of SdfSampleSet.  Each epoch draws
    ``batch_size`` indices per shape with replacement, concatenates the
    per-shape batches into one matrix, runs a single forward/backward
    pass, and applies one Adam update to every weight, bias, bound
    parameter and latent code.  The recorded history entry for an epoch
    is the batch loss *before* that epoch's update.

    Raises DivergenceError (carrying the last finite state as
    ``checkpoint``) if any loss term or parameter becomes non-finite.
    """
    if not dataset:
        raise ValueError("dataset is empty")
    ids = [s.shape_id for s in dataset]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate shape ids in dataset")

    rng = np.random.default_rng(train_cfg.seed)
    params = build_decoder(net_cfg, delta=train_cfg.delta, seed=train_cfg.seed)
    latents = {
        s.shape_id: rng.normal(0.0, 0.01, net_cfg.latent_dim) for s in dataset
    }

    w_states = []
    for layer in params.layers:
        w_states.append(
            (
                AdamState(layer.weight.shape, train_cfg.lr_weights),
                AdamState(layer.bias.shape, train_cfg.lr_weights),
                AdamState((), train_cfg.lr_weights),
            )
        )
    z_states = {
        sid: AdamState((net_cfg.latent_dim,), train_cfg.lr_latents) for sid in ids
    }

    history = {"total": [], "clip": [], "latent_reg": [], "lipschitz": []}
    last_good = _snapshot(params, latents)
    counts = [s.points.shape[0] for s in dataset]

    for epoch in range(train_cfg.epochs):
        xs, gts, zs, owners = [], [], [], []
        for s, n in zip(dataset, counts):
            idx = rng.integers(0, n, train_cfg.batch_size)
            xs.append(s.points[idx])
            gts.append(s.distances[idx])
            zs.append(np.tile(latents[s.shape_id], (train_cfg.batch_size, 1)))
            owners.append(s.shape_id)
        x = np.concatenate(xs, axis=0)
        gt = np.concatenate(gts, axis=0)
        z = np.concatenate(zs, axis=0)

        bundle = decoder_backward(params, x, z, gt, train_cfg.w_lipschitz)

        if not (
            np.isfinite(bundle.loss)
            and np.isfinite(bundle.clip_loss)
            and np.isfinite(bundle.latent_reg)
            and np.isfinite(bundle.lipschitz)
        ):
            raise DivergenceError(
                f"non-finite loss at epoch {epoch}", checkpoint=last_good
            )

        history["total"].append(bundle.loss)
        history["clip"].append(bundle.clip_loss)
        history["latent_reg"].append(bundle.latent_reg)
        history["lipschitz"].append(bundle.lipschitz)

        new_layers = []
        for layer, (st_w, st_b, st_k), dw, db, dk in zip(
            params.layers, w_states, bundle.d_weights, bundle.d_biases, bundle.d_k
        ):
            new_layers.append(
                LipschitzLayer(
                    weight=st_w.step(layer.weight, dw),
                    bias=st_b.step(layer.bias, db),
                    k=float(st_k.step(np.float64(layer.k), np.float64(dk))),
                )
            )
        params = DecoderParams(
            layers=new_layers,
            encoding=params.encoding,
            latent_dim=params.latent_dim,
            delta=params.delta,
        )

        row = 0
        for sid in owners:
            g = bundle.d_latent[row : row + train_cfg.batch_size].sum(axis=0)
            latents[sid] = z_states[sid].step(latents[sid], g)
            row += train_cfg.batch_size

        finite = all(
            np.all(np.isfinite(l.weight))
            and np.all(np.isfinite(l.bias))
            and np.isfinite(l.k)
            for l in params.layers
        ) and all(np.all(np.isfinite(v)) for v in latents.values())
        if not finite:
            raise DivergenceError(
                f"non-finite parameters after epoch {epoch}", checkpoint=last_good
            )

        _check_row_bounds(params)
        last_good = _snapshot(params, latents)

        if log_every and (epoch + 1) % log_every == 0:
            print(
                f"epoch {epoch + 1}/{train_cfg.epochs} "
                f"total={bundle.loss:.6f} clip={bundle.clip_loss:.6f}"
            )

    bank = LatentBank(dim=net_cfg.latent_dim, codes=latents)
    return TrainResult(
        params=params, latents=bank, history=history, epochs_run=train_cfg.epochs
    )


def save_checkpoint(
    path,
    params: DecoderParams,
    latents: LatentBank,
    history: dict,
    epoch: int,
    config_echo: dict | None = None,
) -> None:
    """Serialize decoder weights, latent codes, and loss history to JSON.
    Floats use repr-exact encoding, so load_checkpoint returns bitwise
    identical arrays."""
    doc = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "epoch": int(epoch),
        "config": config_echo or {},
        "encoding": {
            "levels": params.encoding.levels,
            "include_input": params.encoding.include_input,
        },
        "latent_dim": params.latent_dim,
        "delta": params.delta,
        "layers": [
            {
                "shape": list(layer.weight.shape),
                "weight": layer.weight.reshape(-1).tolist(),
                "bias": layer.bias.tolist(),
                "k": layer.k,
            }
            for layer in params.layers
        ],
        "latents": {sid: latents.get(sid).tolist() for sid in latents.ids()},
        "loss_history": {k: list(map(float, v)) for k, v in history.items()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)


def load_checkpoint(path):
    """Inverse of save_checkpoint.  Returns (params, latents, history,
    epoch, config_echo)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise StageArtifactError(f"cannot read checkpoint {path}: {exc}") from exc
    version = doc.get("format_version") if isinstance(doc, dict) else None
    if version != CHECKPOINT_FORMAT_VERSION:
        raise StageArtifactError(
            f"checkpoint version {version!r} is not {CHECKPOINT_FORMAT_VERSION!r}"
        )
    try:
        layers = []
        for entry in doc["layers"]:
            o, i = entry["shape"]
            layers.append(
                LipschitzLayer(
                    weight=np.asarray(entry["weight"], dtype=np.float64).reshape(o, i),
                    bias=np.asarray(entry["bias"], dtype=np.float64),
                    k=float(entry["k"]),
                )
            )
        encoding = EncodingConfig(
            levels=doc["encoding"]["levels"],
            include_input=doc["encoding"]["include_input"],
        )
        params = DecoderParams(
            layers=layers,
            encoding=encoding,
            latent_dim=int(doc["latent_dim"]),
            delta=float(doc["delta"]),
        )
        bank = LatentBank(dim=params.latent_dim, codes=doc["latents"])
        history = doc["loss_history"]
        epoch = int(doc["epoch"])
    except (KeyError, TypeError, ValueError) as exc:
        raise StageArtifactError(f"malformed checkpoint {path}: {exc}") from exc
    return params, bank, history, epoch, doc.get("config", {})
