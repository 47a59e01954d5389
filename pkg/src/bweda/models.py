"""Waveform-to-waveform generators and multi-period discriminators.

Both models are small 1-D convolutional networks over 16 kHz signals,
parameterized by a single flat float64 vector so the trainer can treat every
model uniformly (one Adam state per vector) and checkpoints stay trivially
byte-deterministic.

The generator maps a batch of signals to same-length signals through a stack
of dilated residual blocks with tanh activations and a linear output
projection. The discriminator scores a signal once per configured period:
for period p the signal is folded into p interleaved phase tracks, so its
convolutions relate samples p apart; each sub-network downsamples with
strided convolutions to a score map whose mean is that period's score.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .container import read_container, write_container
from .errors import CheckpointError, InputTooShortError, ValidationError
from .signals import Domain

_LEAKY_SLOPE = 0.1
_DISC_KERNEL = 5
_DISC_STRIDE = 3
_DISC_FINAL_KERNEL = 3
_DISC_N_STRIDED = 3
_DISC_CHANNEL_CAP = 64
_DISC_MIN_FRAMES = 16


@dataclass(frozen=True)
class LayerSpec:
    """Shape of one convolution layer inside a flat parameter vector."""

    name: str
    c_in: int
    c_out: int
    kernel: int
    dilation: int = 1
    stride: int = 1

    @property
    def weight_count(self) -> int:
        return self.c_out * self.c_in * self.kernel

    @property
    def param_count(self) -> int:
        return self.weight_count + self.c_out


@dataclass(frozen=True)
class GeneratorConfig:
    """Architecture of a waveform mapping network.

    ``dilation_schedule`` assigns one dilation per residual block (cycling if
    there are more blocks than entries). The receptive field grows with the
    kernel size and the dilation sum; it bounds how much temporal context one
    output sample can draw on.
    """

    n_blocks: int = 5
    channels: int = 16
    kernel_size: int = 9
    dilation_schedule: tuple[int, ...] = (1, 2, 4, 8, 16)
    parameter_seed: int = 0

    def __post_init__(self) -> None:
        if self.n_blocks < 1:
            raise ValidationError(f"n_blocks must be >= 1, got {self.n_blocks}")
        if self.channels < 1:
            raise ValidationError(f"channels must be >= 1, got {self.channels}")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ValidationError(f"kernel_size must be odd and >= 1, got {self.kernel_size}")
        if not self.dilation_schedule or any(d < 1 for d in self.dilation_schedule):
            raise ValidationError("dilation_schedule must be non-empty positive ints")
        object.__setattr__(self, "dilation_schedule", tuple(int(d) for d in self.dilation_schedule))

    def block_dilations(self) -> tuple[int, ...]:
        sched = self.dilation_schedule
        return tuple(sched[i % len(sched)] for i in range(self.n_blocks))

    @property
    def receptive_field(self) -> int:
        """Width of input context that influences one output sample."""
        return 1 + (self.kernel_size - 1) * (1 + sum(self.block_dilations()))

    def layers(self) -> tuple[LayerSpec, ...]:
        specs = [LayerSpec("entry", 1, self.channels, self.kernel_size)]
        for i, dilation in enumerate(self.block_dilations()):
            specs.append(
                LayerSpec(f"block{i}.dconv", self.channels, self.channels, self.kernel_size, dilation)
            )
            specs.append(LayerSpec(f"block{i}.pconv", self.channels, self.channels, 1))
        specs.append(LayerSpec("exit", self.channels, 1, 1))
        return tuple(specs)

    @property
    def param_count(self) -> int:
        return sum(layer.param_count for layer in self.layers())

    def to_dict(self) -> dict:
        return {
            "n_blocks": self.n_blocks,
            "channels": self.channels,
            "kernel_size": self.kernel_size,
            "dilation_schedule": list(self.dilation_schedule),
            "parameter_seed": self.parameter_seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GeneratorConfig":
        return cls(
            n_blocks=int(data["n_blocks"]),
            channels=int(data["channels"]),
            kernel_size=int(data["kernel_size"]),
            dilation_schedule=tuple(int(d) for d in data["dilation_schedule"]),
            parameter_seed=int(data["parameter_seed"]),
        )


@dataclass(frozen=True)
class DiscriminatorConfig:
    """Architecture of a multi-period scoring network.

    One independent sub-network per period; channels start at
    ``initial_channels`` and double per strided layer (capped). A plain
    single-period discriminator is ``periods=(1,)``.
    """

    periods: tuple[int, ...] = (2, 3, 5)
    initial_channels: int = 8
    parameter_seed: int = 0

    def __post_init__(self) -> None:
        if not self.periods or any(p < 1 for p in self.periods):
            raise ValidationError("periods must be non-empty positive ints")
        if len(set(self.periods)) != len(self.periods):
            raise ValidationError("periods must be distinct")
        if self.initial_channels < 1:
            raise ValidationError(f"initial_channels must be >= 1, got {self.initial_channels}")
        object.__setattr__(self, "periods", tuple(int(p) for p in self.periods))

    def sub_layers(self) -> tuple[LayerSpec, ...]:
        specs = []
        c_in = 1
        c_out = self.initial_channels
        for i in range(_DISC_N_STRIDED):
            specs.append(LayerSpec(f"down{i}", c_in, c_out, _DISC_KERNEL, stride=_DISC_STRIDE))
            c_in = c_out
            c_out = min(c_out * 2, _DISC_CHANNEL_CAP)
        specs.append(LayerSpec("score", c_in, 1, _DISC_FINAL_KERNEL))
        return tuple(specs)

    @property
    def param_count(self) -> int:
        return len(self.periods) * sum(layer.param_count for layer in self.sub_layers())

    @property
    def min_input_length(self) -> int:
        """Shortest signal each period can score meaningfully."""
        return max(self.periods) * _DISC_MIN_FRAMES

    def to_dict(self) -> dict:
        return {
            "periods": list(self.periods),
            "initial_channels": self.initial_channels,
            "parameter_seed": self.parameter_seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DiscriminatorConfig":
        return cls(
            periods=tuple(int(p) for p in data["periods"]),
            initial_channels=int(data["initial_channels"]),
            parameter_seed=int(data["parameter_seed"]),
        )


def _init_params(layers: tuple[LayerSpec, ...], rng: np.random.Generator) -> np.ndarray:
    """Uniform fan-in initialization, one layer after another.

    Each layer's weights and bias are drawn from U(-b, b) with
    b = 1/sqrt(c_in * kernel), the usual scale that keeps activations O(1).
    """
    chunks = []
    for layer in layers:
        bound = 1.0 / np.sqrt(layer.c_in * layer.kernel)
        chunks.append(rng.uniform(-bound, bound, size=layer.weight_count))
        chunks.append(rng.uniform(-bound, bound, size=layer.c_out))
    return np.concatenate(chunks)


def _batch_input(x: ad.Tensor) -> ad.Tensor:
    if len(x.shape) != 2:
        raise ValidationError(f"model input must be (batch, time), got {x.shape}")
    return ad.reshape(x, (x.shape[0], 1, x.shape[1]))


class MappingModel:
    """A generator: same-length waveform-to-waveform map at the model rate."""

    def __init__(
        self,
        config: GeneratorConfig,
        source_domain: Domain,
        target_domain: Domain,
        parameters: np.ndarray | None = None,
    ) -> None:
        self.config = config
        self.source_domain = source_domain
        self.target_domain = target_domain
        self._layers = config.layers()
        if parameters is None:
            rng = np.random.default_rng(config.parameter_seed & 0xFFFF_FFFF_FFFF_FFFF)
            parameters = _init_params(self._layers, rng)
        parameters = np.asarray(parameters, dtype=np.float64)
        if parameters.shape != (config.param_count,):
            raise ValidationError(
                f"parameter vector has shape {parameters.shape}, expected ({config.param_count},)"
            )
        self.parameters = parameters.copy()

    @property
    def param_count(self) -> int:
        return self.parameters.size

    @property
    def receptive_field(self) -> int:
        return self.config.receptive_field

    def parameter_node(self, trainable: bool = True) -> ad.Tensor:
        """A graph leaf holding the current parameters."""
        return ad.Tensor(self.parameters.copy(), requires_grad=trainable)

    def apply(self, params: ad.Tensor, x: ad.Tensor) -> ad.Tensor:
        """Map a (batch, time) tensor using an explicit parameter tensor."""
        if x.shape[-1] < 1:
            raise InputTooShortError("empty signal")
        h = _batch_input(x)
        offset = 0

        def layer_tensors(layer: LayerSpec) -> tuple[ad.Tensor, ad.Tensor]:
            nonlocal offset
            w = ad.param_slice(params, offset, (layer.c_out, layer.c_in, layer.kernel))
            offset += layer.weight_count
            b = ad.param_slice(params, offset, (layer.c_out,))
            offset += layer.c_out
            return w, b

        entry = self._layers[0]
        w, b = layer_tensors(entry)
        pad = (entry.kernel - 1) // 2
        h = ad.tanh(ad.conv1d(h, w, b, padding=pad))

        for i in range(self.config.n_blocks):
            dconv = self._layers[1 + 2 * i]
            pconv = self._layers[2 + 2 * i]
            wd, bd = layer_tensors(dconv)
            pad = (dconv.kernel - 1) // 2 * dconv.dilation
            inner = ad.tanh(ad.conv1d(h, wd, bd, dilation=dconv.dilation, padding=pad))
            wp, bp = layer_tensors(pconv)
            h = ad.add(h, ad.conv1d(inner, wp, bp))

        exit_layer = self._layers[-1]
        w, b = layer_tensors(exit_layer)
        out = ad.conv1d(h, w, b)
        return ad.reshape(out, (x.shape[0], x.shape[1]))

    def map_batch(self, x: np.ndarray) -> np.ndarray:
        """Numpy-in, numpy-out forward pass with the stored parameters."""
        return self.apply(ad.Tensor(self.parameters), ad.Tensor(np.atleast_2d(x))).data

    def map_signal(self, x: np.ndarray) -> np.ndarray:
        """Map one 1-D signal."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1:
            raise ValidationError(f"map_signal expects a 1-D signal, got shape {x.shape}")
        return self.map_batch(x[None, :])[0]


class ScoreModel:
    """A discriminator: one realness score per configured period."""

    def __init__(
        self,
        config: DiscriminatorConfig,
        domain: Domain,
        parameters: np.ndarray | None = None,
    ) -> None:
        self.config = config
        self.domain = domain
        self._sub_layers = config.sub_layers()
        if parameters is None:
            rng = np.random.default_rng(config.parameter_seed & 0xFFFF_FFFF_FFFF_FFFF)
            chunks = [_init_params(self._sub_layers, rng) for _ in config.periods]
            parameters = np.concatenate(chunks)
        parameters = np.asarray(parameters, dtype=np.float64)
        if parameters.shape != (config.param_count,):
            raise ValidationError(
                f"parameter vector has shape {parameters.shape}, expected ({config.param_count},)"
            )
        self.parameters = parameters.copy()

    @property
    def param_count(self) -> int:
        return self.parameters.size

    def parameter_node(self, trainable: bool = True) -> ad.Tensor:
        return ad.Tensor(self.parameters.copy(), requires_grad=trainable)

    def scores(self, params: ad.Tensor, x: ad.Tensor) -> list[ad.Tensor]:
        """Score a (batch, time) tensor: one (batch,) tensor per period."""
        t_in = x.shape[-1]
        if t_in < self.config.min_input_length:
            raise InputTooShortError(
                f"input of {t_in} samples shorter than minimum {self.config.min_input_length}"
                f" (max period {max(self.config.periods)} x {_DISC_MIN_FRAMES} frames)"
            )
        batch = x.shape[0]
        stacked = _batch_input(x)
        sub_size = sum(layer.param_count for layer in self._sub_layers)
        outputs: list[ad.Tensor] = []
        for idx, period in enumerate(self.config.periods):
            offset = idx * sub_size
            h = ad.period_view(stacked, period)
            for layer in self._sub_layers:
                w = ad.param_slice(params, offset, (layer.c_out, layer.c_in, layer.kernel))
                offset += layer.weight_count
                b = ad.param_slice(params, offset, (layer.c_out,))
                offset += layer.c_out
                pad = (layer.kernel - 1) // 2
                h = ad.conv1d(h, w, b, stride=layer.stride, padding=pad)
                if layer.name != "score":
                    h = ad.leaky_relu(h, _LEAKY_SLOPE)
            per_track = ad.mean_axes(h, (1, 2))
            outputs.append(ad.mean_axes(ad.reshape(per_track, (batch, period)), (1,)))
        return outputs

    def score_batch(self, x: np.ndarray) -> list[np.ndarray]:
        """Numpy-in scores with the stored parameters."""
        tensors = self.scores(ad.Tensor(self.parameters), ad.Tensor(np.atleast_2d(x)))
        return [t.data for t in tensors]


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

_MAPPING_KIND = "mapping_model"
_SCORE_KIND = "score_model"


def save_mapping_model(model: MappingModel, path: str | Path) -> None:
    write_container(
        path,
        _MAPPING_KIND,
        {
            "config": model.config.to_dict(),
            "source_domain": model.source_domain.value,
            "target_domain": model.target_domain.value,
        },
        {"parameters": model.parameters},
    )


def load_mapping_model(path: str | Path) -> MappingModel:
    _, meta, arrays = read_container(path, expected_kind=_MAPPING_KIND)
    try:
        config = GeneratorConfig.from_dict(meta["config"])
        source = Domain(meta["source_domain"])
        target = Domain(meta["target_domain"])
    except (KeyError, ValueError) as exc:
        raise CheckpointError(f"{path}: malformed mapping model metadata: {exc}") from exc
    return MappingModel(config, source, target, parameters=arrays["parameters"])


def save_score_model(model: ScoreModel, path: str | Path) -> None:
    write_container(
        path,
        _SCORE_KIND,
        {"config": model.config.to_dict(), "domain": model.domain.value},
        {"parameters": model.parameters},
    )


def load_score_model(path: str | Path) -> ScoreModel:
    _, meta, arrays = read_container(path, expected_kind=_SCORE_KIND)
    try:
        config = DiscriminatorConfig.from_dict(meta["config"])
        domain = Domain(meta["domain"])
    except (KeyError, ValueError) as exc:
        raise CheckpointError(f"{path}: malformed score model metadata: {exc}") from exc
    return ScoreModel(config, domain, parameters=arrays["parameters"])
