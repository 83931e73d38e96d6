"""Latent-conditioned SDF decoder with per-row Lipschitz weight normalization.

The decoder maps (positional encoding of a query point, latent code) through
ReLU layers whose rows are rescaled on the fly so each row's L1 norm never
exceeds softplus(k_i); the network is then softplus(k_0)*...*softplus(k_n)
Lipschitz in its input, and the product doubles as a trainable regularizer.
The final layer squashes through delta * tanh, clamping predictions to the
truncation range of the distance loss.

All gradients are computed analytically (no autodiff), including the paths
through the row normalization and the k parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def softplus(k):
    return np.logaddexp(0.0, k)


def sigmoid(k):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(k, dtype=np.float64)))


def softplus_inverse(y):
    """k such that softplus(k) == y, for y > 0."""
    y = np.asarray(y, dtype=np.float64)
    return np.where(y > 20.0, y, np.log(np.expm1(np.minimum(y, 20.0))))


@dataclass
class EncodingConfig:
    """Sinusoidal positional encoding: per coordinate, the raw value
    (optional) followed by interleaved sin/cos at octave frequencies
    2^j * pi for j = 0..levels-1."""

    levels: int = 6
    include_input: bool = True

    def __post_init__(self):
        if self.levels < 0:
            raise ValueError(f"levels must be >= 0, got {self.levels}")

    @property
    def encoded_dim(self) -> int:
        return 3 * (2 * self.levels + (1 if self.include_input else 0))


def positional_encoding(points: np.ndarray, cfg: EncodingConfig) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64)
    squeeze = points.ndim == 1
    if squeeze:
        points = points[None, :]
    n, d = points.shape
    if d != 3:
        raise ValueError(f"expected 3-d points, got dim {d}")
    width = 2 * cfg.levels + (1 if cfg.include_input else 0)
    out = np.empty((n, 3, width), dtype=np.float64)
    col = 0
    if cfg.include_input:
        out[:, :, 0] = points
        col = 1
    for j in range(cfg.levels):
        ang = (2.0**j * np.pi) * points
        out[:, :, col] = np.sin(ang)
        out[:, :, col + 1] = np.cos(ang)
        col += 2
    out = out.reshape(n, 3 * width)
    return out[0] if squeeze else out


@dataclass
class LipschitzLayer:
    """One affine layer with a trainable row-sum bound softplus(k)."""

    weight: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)
    k: float

    def __post_init__(self):
        self.weight = np.asarray(self.weight, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        self.k = float(self.k)
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[0],):
            raise ValueError("inconsistent layer shapes")


def normalize_rows(weight: np.ndarray, k: float) -> np.ndarray:
    """Rescale rows whose L1 norm exceeds softplus(k) down to that bound."""
    bound = float(softplus(k))
    row_sums = np.abs(weight).sum(axis=1)
    scale = np.where(row_sums > bound, bound / np.maximum(row_sums, 1e-300), 1.0)
    return weight * scale[:, None]


@dataclass
class NetworkConfig:
    """Decoder architecture; paired with EncodingConfig at build time."""

    hidden_layers: int = 8
    hidden_width: int = 256
    latent_dim: int = 5
    levels: int = 6
    include_input: bool = True

    def __post_init__(self):
        if self.hidden_layers < 1 or self.hidden_width < 1 or self.latent_dim < 1:
            raise ValueError("hidden_layers, hidden_width, latent_dim must be >= 1")

    @property
    def encoding(self) -> EncodingConfig:
        return EncodingConfig(levels=self.levels, include_input=self.include_input)


@dataclass
class DecoderParams:
    layers: list
    encoding: EncodingConfig
    latent_dim: int
    delta: float

    @property
    def input_dim(self) -> int:
        return self.encoding.encoded_dim + self.latent_dim

    def copy(self) -> "DecoderParams":
        return DecoderParams(
            layers=[
                LipschitzLayer(l.weight.copy(), l.bias.copy(), l.k)
                for l in self.layers
            ],
            encoding=self.encoding,
            latent_dim=self.latent_dim,
            delta=self.delta,
        )


def build_decoder(cfg: NetworkConfig, delta: float, seed: int) -> DecoderParams:
    """Fan-in-scaled uniform weights; each k_i starts with softplus(k_i)
    equal to twice the layer's initial max row sum, so no row is clamped
    at initialization.

    The first layer's latent columns are boosted by fan_in / latent_dim so
    the latent block as a whole starts with the same expected row weight
    mass as the rest of the row.  A low-dimensional code feeding a wide
    encoding block would otherwise contribute almost nothing to the
    pre-activations, and the code gradients would start too weak for the
    per-shape codes to differentiate."""
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    rng = np.random.default_rng(seed)
    enc = cfg.encoding
    dims = [enc.encoded_dim + cfg.latent_dim]
    dims += [cfg.hidden_width] * cfg.hidden_layers
    dims += [1]
    layers = []
    for index, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        bound = 1.0 / np.sqrt(fan_in)
        weight = rng.uniform(-bound, bound, (fan_out, fan_in))
        if index == 0:
            weight[:, enc.encoded_dim :] *= fan_in / cfg.latent_dim
        inf_norm = np.abs(weight).sum(axis=1).max()
        k = float(softplus_inverse(2.0 * inf_norm))
        layers.append(LipschitzLayer(weight, np.zeros(fan_out), k))
    return DecoderParams(
        layers=layers, encoding=enc, latent_dim=cfg.latent_dim, delta=delta
    )


def _log_layer_bounds(params: DecoderParams) -> list:
    """log(softplus(k_i)) per layer; -inf when the bound underflows to 0."""
    out = []
    for layer in params.layers:
        bound = float(softplus(layer.k))
        out.append(float(np.log(bound)) if bound > 0.0 else -np.inf)
    return out


def lipschitz_loss(params: DecoderParams) -> float:
    """Product of the per-layer bounds softplus(k_i), accumulated in the
    log domain so large k cannot overflow intermediate products."""
    return float(np.exp(sum(_log_layer_bounds(params))))


def lipschitz_bound(params: DecoderParams) -> float:
    return lipschitz_loss(params)


def _broadcast_latents(z, n, latent_dim):
    z = np.asarray(z, dtype=np.float64)
    if z.ndim == 1:
        z = np.broadcast_to(z, (n, z.shape[0]))
    if z.shape != (n, latent_dim):
        raise ValueError(f"latents must be ({n}, {latent_dim}), got {z.shape}")
    return z


def _forward_cached(params: DecoderParams, x: np.ndarray, z: np.ndarray):
    """Forward pass keeping per-layer inputs/preactivations for backprop."""
    enc = positional_encoding(x, params.encoding)
    h = np.concatenate([enc, z], axis=1)
    cache = []
    n_layers = len(params.layers)
    for i, layer in enumerate(params.layers):
        w_hat = normalize_rows(layer.weight, layer.k)
        pre = h @ w_hat.T + layer.bias
        if i < n_layers - 1:
            out = np.maximum(pre, 0.0)
        else:
            out = params.delta * np.tanh(pre)
        cache.append((h, w_hat, pre))
        h = out
    return h[:, 0], cache


def decoder_forward(params: DecoderParams, x: np.ndarray, z) -> np.ndarray:
    """Predicted signed distances, always inside (-delta, delta)."""
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    z = _broadcast_latents(z, x.shape[0], params.latent_dim)
    pred, _ = _forward_cached(params, x, z)
    return pred[0] if squeeze else pred


def truncated_l1(d_pred, d_gt, delta: float):
    """Distance loss clamped outside the shell |d_gt| <= delta.

    Far-inside targets (d_gt < -delta) only penalize predictions above
    -delta; far-outside targets only penalize predictions below delta;
    in the shell it is plain L1.  Elementwise over arrays.
    """
    d_pred = np.asarray(d_pred, dtype=np.float64)
    d_gt = np.asarray(d_gt, dtype=np.float64)
    inside = d_gt < -delta
    outside = d_gt > delta
    loss = np.abs(d_pred - d_gt)
    loss = np.where(inside, np.maximum(d_pred, -delta) + delta, loss)
    loss = np.where(outside, delta - np.minimum(d_pred, delta), loss)
    return loss


def truncated_l1_grad(d_pred, d_gt, delta: float):
    """d(truncated_l1)/d(d_pred), elementwise."""
    d_pred = np.asarray(d_pred, dtype=np.float64)
    d_gt = np.asarray(d_gt, dtype=np.float64)
    inside = d_gt < -delta
    outside = d_gt > delta
    grad = np.sign(d_pred - d_gt)
    grad = np.where(inside, (d_pred > -delta).astype(np.float64), grad)
    grad = np.where(outside, -(d_pred < delta).astype(np.float64), grad)
    return grad


@dataclass
class GradientBundle:
    """Analytic gradients of the training objective for one batch."""

    d_weights: list
    d_biases: list
    d_k: np.ndarray
    d_latent: np.ndarray  # per-sample rows, (batch, latent_dim)
    loss: float
    clip_loss: float
    latent_reg: float
    lipschitz: float


def decoder_backward(
    params: DecoderParams,
    x: np.ndarray,
    z,
    d_gt: np.ndarray,
    w_lipschitz: float,
) -> GradientBundle:
    """Gradients of mean(clip + ||z_b||^2) + w_lipschitz * prod softplus(k).

    Each batch row carries its own latent code; the per-row latent gradient
    (including the 2 z / batch regularizer term) is returned per sample so
    callers can accumulate it onto shared shape codes.
    """
    x = np.asarray(x, dtype=np.float64)
    d_gt = np.asarray(d_gt, dtype=np.float64)
    n = x.shape[0]
    if n == 0:
        raise ValueError("batch is empty")
    z = _broadcast_latents(z, n, params.latent_dim)

    pred, cache = _forward_cached(params, x, z)
    clip = truncated_l1(pred, d_gt, params.delta)
    clip_loss = float(clip.mean())
    latent_reg = float(np.sum(z * z) / n)
    log_bounds = _log_layer_bounds(params)
    lip = float(np.exp(sum(log_bounds)))
    total = clip_loss + latent_reg + w_lipschitz * lip

    n_layers = len(params.layers)
    d_weights = [None] * n_layers
    d_biases = [None] * n_layers
    d_k = np.zeros(n_layers)

    d_pred = truncated_l1_grad(pred, d_gt, params.delta) / n  # (B,)

    # final layer: out = delta * tanh(pre)
    h_in, w_hat, pre = cache[-1]
    t = np.tanh(pre)
    d_pre = d_pred[:, None] * params.delta * (1.0 - t * t)

    for i in range(n_layers - 1, -1, -1):
        layer = params.layers[i]
        h_in, w_hat, pre = cache[i]
        d_w_hat = d_pre.T @ h_in  # (out, in)
        d_biases[i] = d_pre.sum(axis=0)
        d_h = d_pre @ w_hat

        # normalization backward: rows with L1 norm above the bound were
        # rescaled by s/r; gradients split between the raw weights and k
        bound = float(softplus(layer.k))
        row_sums = np.abs(layer.weight).sum(axis=1)
        clamped = row_sums > bound
        d_weight = d_w_hat.copy()
        if np.any(clamped):
            r = row_sums[clamped][:, None]
            w_rows = layer.weight[clamped]
            g_rows = d_w_hat[clamped]
            row_dot = np.sum(g_rows * w_rows, axis=1, keepdims=True)
            d_weight[clamped] = (bound / r) * g_rows - (
                bound / (r * r)
            ) * row_dot * np.sign(w_rows)
            d_bound = float(np.sum(row_dot / r))
            d_k[i] += d_bound * float(sigmoid(layer.k))
        d_weights[i] = d_weight

        # Lipschitz product term: d(prod)/dk_i = sigmoid(k_i) * prod of the
        # other layers' bounds, built in the log domain so one underflowed
        # bound zeroes the term instead of dividing 0/0
        others = sum(lb for j, lb in enumerate(log_bounds) if j != i)
        d_k[i] += w_lipschitz * float(np.exp(others)) * float(sigmoid(layer.k))

        if i > 0:
            prev_pre = cache[i - 1][2]
            d_pre = d_h * (prev_pre > 0.0)

    d_latent = d_h[:, params.encoding.encoded_dim :] + 2.0 * z / n

    return GradientBundle(
        d_weights=d_weights,
        d_biases=d_biases,
        d_k=d_k,
        d_latent=d_latent,
        loss=float(total),
        clip_loss=clip_loss,
        latent_reg=latent_reg,
        lipschitz=lip,
    )
