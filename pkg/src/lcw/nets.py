"""MLP builders and forward passes for the encoder, decoder, and latent generator.

Encoder and decoder are three 200-unit ReLU layers (the decoder adds a
final sigmoid, or linear for unbounded planar data); the latent
generator is five 512-unit ReLU layers with batch normalization and a
linear head.  Hidden ReLU layers are He-initialized, final layers
Xavier.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import BatchNormState, DiffValue, batchnorm, matmul
from .errors import CompatibilityError, ShapeError

__all__ = [
    "LayerSpec",
    "MlpSpec",
    "Mlp",
    "ModelBundle",
    "build_encoder",
    "build_decoder",
    "build_latent_generator",
    "build_direct_generator",
    "forward",
    "num_params",
]

ACTIVATIONS = ("relu", "sigmoid", "tanh", "linear")

HIDDEN_WIDTH = 200
LG_WIDTH = 512
LG_DEPTH = 5


@dataclass(frozen=True)
class LayerSpec:
    in_dim: int
    out_dim: int
    activation: str = "linear"
    batchnorm: bool = False

    def __post_init__(self):
        if self.in_dim < 1 or self.out_dim < 1:
            raise ShapeError("layer dims must be positive")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


@dataclass(frozen=True)
class MlpSpec:
    layers: tuple[LayerSpec, ...]

    def __post_init__(self):
        if not self.layers:
            raise ShapeError("an MLP needs at least one layer")
        for prev, cur in zip(self.layers, self.layers[1:]):
            if prev.out_dim != cur.in_dim:
                raise ShapeError("layer dims do not chain")

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim


class Mlp:
    """Parameters for an MlpSpec: weight/bias per layer plus batchnorm state."""

    def __init__(self, spec: MlpSpec, seed: int):
        self.spec = spec
        rng = np.random.default_rng(seed)
        self.weights: list[DiffValue] = []
        self.biases: list[DiffValue] = []
        self.bn: list[BatchNormState | None] = []
        for layer in spec.layers:
            if layer.activation == "relu":
                std = np.sqrt(2.0 / layer.in_dim)
            else:
                std = np.sqrt(2.0 / (layer.in_dim + layer.out_dim))
            w = rng.standard_normal((layer.in_dim, layer.out_dim)) * std
            self.weights.append(DiffValue(w))
            self.biases.append(DiffValue(np.zeros(layer.out_dim)))
            self.bn.append(BatchNormState(layer.out_dim) if layer.batchnorm else None)

    def parameters(self) -> list[DiffValue]:
        out: list[DiffValue] = []
        for w, b, bn in zip(self.weights, self.biases, self.bn):
            out.extend((w, b))
            if bn is not None:
                out.extend((bn.gamma, bn.beta))
        return out

    def forward(self, x: DiffValue, mode: str = "train") -> DiffValue:
        return forward(self, x, mode)


def forward(mlp: Mlp, x, mode: str = "train") -> DiffValue:
    """Run the network; mode selects batchnorm behavior (train updates
    running stats, eval uses them)."""
    h = DiffValue._coerce(x)
    if len(h.shape) != 2 or h.shape[1] != mlp.spec.input_dim:
        raise ShapeError(
            f"input shape {h.shape} does not match input dim {mlp.spec.input_dim}")
    for layer, w, b, bn in zip(mlp.spec.layers, mlp.weights, mlp.biases, mlp.bn):
        h = matmul(h, w) + b
        if bn is not None:
            h = batchnorm(h, bn, mode)
        if layer.activation == "relu":
            h = h.relu()
        elif layer.activation == "sigmoid":
            h = h.sigmoid()
        elif layer.activation == "tanh":
            h = h.tanh()
    return h


def num_params(mlp: Mlp) -> int:
    return sum(p.value.size for p in mlp.parameters())


def _mlp_dims(in_dim: int, hidden: int, depth: int, out_dim: int,
              final_activation: str, bn_hidden: bool) -> MlpSpec:
    layers = []
    d = in_dim
    for _ in range(depth):
        layers.append(LayerSpec(d, hidden, "relu", bn_hidden))
        d = hidden
    layers.append(LayerSpec(d, out_dim, final_activation, False))
    return MlpSpec(tuple(layers))


def build_encoder(data_dim: int, latent_dim: int, seed: int) -> Mlp:
    """data_dim -> 200 -> 200 -> 200 -> latent_dim, hidden ReLU, final linear."""
    if data_dim < 1 or latent_dim < 1:
        raise ShapeError("dims must be >= 1")
    return Mlp(_mlp_dims(data_dim, HIDDEN_WIDTH, 3, latent_dim, "linear", False), seed)


def build_decoder(latent_dim: int, data_dim: int, seed: int,
                  final_activation: str = "sigmoid") -> Mlp:
    """latent_dim -> 200 -> 200 -> 200 -> data_dim, hidden ReLU.

    The default sigmoid head pairs with data in [0, 1]; pass "linear"
    for unbounded planar data.
    """
    if latent_dim < 1 or data_dim < 1:
        raise ShapeError("dims must be >= 1")
    return Mlp(_mlp_dims(latent_dim, HIDDEN_WIDTH, 3, data_dim, final_activation, False), seed)


def build_latent_generator(noise_dim: int, latent_dim: int, seed: int) -> Mlp:
    """noise_dim -> 512 x5 (batchnorm + ReLU) -> latent_dim linear."""
    if noise_dim < 1 or latent_dim < 1:
        raise ShapeError("dims must be >= 1")
    return Mlp(_mlp_dims(noise_dim, LG_WIDTH, LG_DEPTH, latent_dim, "linear", True), seed)


def build_direct_generator(noise_dim: int, data_dim: int, seed: int,
                           final_activation: str = "linear") -> Mlp:
    """Noise-to-data generator with the latent-generator architecture."""
    if noise_dim < 1 or data_dim < 1:
        raise ShapeError("dims must be >= 1")
    return Mlp(_mlp_dims(noise_dim, LG_WIDTH, LG_DEPTH, data_dim, final_activation, True), seed)


@dataclass
class ModelBundle:
    """Encoder/decoder pair with an optional latent generator."""

    encoder: Mlp
    decoder: Mlp
    data_dim: int
    latent_dim: int
    latent_generator: Mlp | None = None
    noise_dim: int | None = None

    def __post_init__(self):
        if self.encoder.spec.input_dim != self.data_dim:
            raise ShapeError("encoder input dim != data_dim")
        if self.encoder.spec.output_dim != self.latent_dim:
            raise ShapeError("encoder output dim != latent_dim")
        if self.decoder.spec.input_dim != self.latent_dim:
            raise ShapeError("decoder input dim != latent_dim")
        if self.decoder.spec.output_dim != self.data_dim:
            raise ShapeError("decoder output dim != data_dim")
        if self.latent_generator is not None:
            if self.latent_generator.spec.output_dim != self.latent_dim:
                raise ShapeError("latent generator output dim != latent_dim")
            if self.noise_dim is None:
                self.noise_dim = self.latent_generator.spec.input_dim
            elif self.latent_generator.spec.input_dim != self.noise_dim:
                raise ShapeError("latent generator input dim != noise_dim")

    def require_latent_generator(self) -> Mlp:
        if self.latent_generator is None:
            raise CompatibilityError("model has no latent generator")
        return self.latent_generator
