"""The three jointly trained networks and baseline coordinate networks.

The image network is a sine MLP whose activations are modulated per
coordinate by four scalars per layer (amplitude, frequency, phase, shift).
Those scalars come from a conditioner MLP fed with the class probabilities
predicted by a softmax-headed sine MLP fitting the segmentation mask.
Baselines: plain sine MLP, ReLU on Fourier features, Gaussian activations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor as tc
from .sampling import CoordinateGrid
from .tensor import Tensor

MODEL_KINDS = ("seco", "seco_no_semantic", "siren", "relu_pe", "gauss")


@dataclass
class ActivationParams:
    """Per-coordinate modulation scalars, one column per activated layer."""

    amplitude: Tensor
    frequency: Tensor
    phase: Tensor
    shift: Tensor

    @property
    def layer_count(self) -> int:
        return self.amplitude.cols

    @classmethod
    def siren_reduction(cls, n: int, layers: int) -> "ActivationParams":
        """(1, 1, 0, 0) everywhere: the plain sine-network special case."""
        ones = np.ones((n, layers))
        zeros = np.zeros((n, layers))
        return cls(Tensor(ones), Tensor(ones.copy()), Tensor(zeros), Tensor(zeros.copy()))

    def as_matrix(self) -> np.ndarray:
        """All values as one (n, 4 * layers) array, blocks in field order."""
        return np.hstack(
            [self.amplitude.data, self.frequency.data, self.phase.data, self.shift.data]
        )


class AffineLayer:
    """W and b for one x @ W + b map, with the init scheme chosen by caller."""

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator,
                 w_bound: float, zero_weights: bool = False):
        if zero_weights:
            w = np.zeros((in_dim, out_dim))
        else:
            w = rng.uniform(-w_bound, w_bound, size=(in_dim, out_dim))
        b = rng.uniform(-1.0, 1.0, size=(1, out_dim)) / np.sqrt(in_dim)
        self.weight = Tensor(w, requires_grad=True)
        self.bias = Tensor(b, requires_grad=True)

    def apply(self, x: Tensor) -> Tensor:
        return tc.add_bias(tc.matmul(x, self.weight), self.bias)

    def parameters(self) -> list[Tensor]:
        return [self.weight, self.bias]


def _sine_first_bound(in_dim: int) -> float:
    return 1.0 / in_dim


def _sine_hidden_bound(in_dim: int, omega0: float) -> float:
    return np.sqrt(6.0 / in_dim) / omega0


def _relu_bound(in_dim: int) -> float:
    return np.sqrt(6.0 / in_dim)


def _sine_stack(dims: list[int], omega0: float, rng: np.random.Generator) -> list[AffineLayer]:
    """Affine layers sized per ``dims`` with the standard sine-net init:
    first layer uniform in +-1/in_dim, the rest in +-sqrt(6/d)/omega0."""
    layers = []
    for i, (din, dout) in enumerate(zip(dims[:-1], dims[1:])):
        bound = _sine_first_bound(din) if i == 0 else _sine_hidden_bound(din, omega0)
        layers.append(AffineLayer(din, dout, rng, bound))
    return layers


class AdaptiveSiren:
    """Sine MLP whose every activated layer is modulated per coordinate.

    Layer l computes amp * sin(freq * omega0 * (x @ W + b) + phase) + shift
    with the four scalars taken from column l of the supplied params; the
    final layer is affine with no activation.
    """

    def __init__(self, layers: int = 5, hidden: int = 256, in_dim: int = 2,
                 out_dim: int = 1, omega0: float = 30.0,
                 hidden_omega0: float | None = None,
                 rng: np.random.Generator | None = None):
        if layers < 2:
            raise ValueError("need at least 2 affine layers")
        rng = rng or np.random.default_rng(0)
        self.omega0 = float(omega0)
        self.hidden_omega0 = float(hidden_omega0 if hidden_omega0 is not None else omega0)
        dims = [in_dim] + [hidden] * (layers - 1) + [out_dim]
        self.layers = _sine_stack(dims, self.hidden_omega0, rng)

    @property
    def activated_layers(self) -> int:
        return len(self.layers) - 1

    def _layer_omega(self, l: int) -> float:
        return self.omega0 if l == 0 else self.hidden_omega0

    def forward(self, coords: Tensor, params: ActivationParams) -> Tensor:
        if params.amplitude.rows != coords.rows:
            raise tc.ShapeError(
                f"params rows ({params.amplitude.rows}) != coords rows ({coords.rows})"
            )
        if params.layer_count != self.activated_layers:
            raise tc.ShapeError(
                f"params have {params.layer_count} layer columns, "
                f"net has {self.activated_layers} activated layers"
            )
        y = coords
        for l in range(self.activated_layers):
            z = self.layers[l].apply(y)
            y = tc.modulated_sin(
                z,
                tc.cols(params.amplitude, l, l + 1),
                tc.cols(params.frequency, l, l + 1),
                tc.cols(params.phase, l, l + 1),
                tc.cols(params.shift, l, l + 1),
                self._layer_omega(l),
            )
        return self.layers[-1].apply(y)

    def parameters(self) -> list[Tensor]:
        return [p for layer in self.layers for p in layer.parameters()]


class Siren:
    """Plain sine MLP: sin(omega0 * (x @ W + b)) per layer, affine head."""

    def __init__(self, layers: int = 5, hidden: int = 256, in_dim: int = 2,
                 out_dim: int = 1, omega0: float = 30.0,
                 hidden_omega0: float | None = None,
                 rng: np.random.Generator | None = None):
        rng = rng or np.random.default_rng(0)
        self.omega0 = float(omega0)
        self.hidden_omega0 = float(hidden_omega0 if hidden_omega0 is not None else omega0)
        dims = [in_dim] + [hidden] * (layers - 1) + [out_dim]
        self.layers = _sine_stack(dims, self.hidden_omega0, rng)

    def forward(self, coords: Tensor) -> Tensor:
        y = coords
        for l, layer in enumerate(self.layers[:-1]):
            omega = self.omega0 if l == 0 else self.hidden_omega0
            y = tc.sin(tc.scale(layer.apply(y), omega))
        return self.layers[-1].apply(y)

    def parameters(self) -> list[Tensor]:
        return [p for layer in self.layers for p in layer.parameters()]


class PixelClassNet:
    """Sine MLP with a softmax head, fitting a continuous segmentation field."""

    def __init__(self, class_count: int, layers: int = 3, hidden: int = 128,
                 in_dim: int = 2, omega0: float = 30.0,
                 rng: np.random.Generator | None = None):
        if class_count < 1:
            raise ValueError("need at least one class")
        rng = rng or np.random.default_rng(0)
        self.class_count = class_count
        self.omega0 = float(omega0)
        dims = [in_dim] + [hidden] * (layers - 1) + [class_count]
        self.layers = _sine_stack(dims, self.omega0, rng)

    def forward(self, coords: Tensor) -> Tensor:
        y = coords
        for layer in self.layers[:-1]:
            y = tc.sin(tc.scale(layer.apply(y), self.omega0))
        return tc.softmax_rows(self.layers[-1].apply(y))

    def parameters(self) -> list[Tensor]:
        return [p for layer in self.layers for p in layer.parameters()]


class ConditionerNet:
    """ReLU MLP mapping class probabilities to the four modulation blocks.

    The head bias starts each block at (amp, freq, phase, shift) = (1, 1, 0, 0)
    so training begins at the plain sine-network reduction; head weights start
    near zero (not exactly zero, which would block gradient flow upstream).
    """

    head_weight_bound = 1e-2

    def __init__(self, class_count: int, activated_layers: int,
                 hidden: int = 64, hidden_layers: int = 2,
                 rng: np.random.Generator | None = None,
                 zero_head: bool = False):
        rng = rng or np.random.default_rng(0)
        self.class_count = class_count
        self.activated_layers = activated_layers
        self.hidden = []
        din = class_count
        for _ in range(hidden_layers):
            self.hidden.append(AffineLayer(din, hidden, rng, _relu_bound(din)))
            din = hidden
        self.head = AffineLayer(din, 4 * activated_layers, rng,
                                self.head_weight_bound, zero_weights=zero_head)
        la = activated_layers
        self.head.bias.data[0, :] = np.concatenate(
            [np.ones(la), np.ones(la), np.zeros(la), np.zeros(la)]
        )

    def forward(self, class_probs: Tensor) -> ActivationParams:
        if class_probs.cols != self.class_count:
            raise tc.ShapeError(
                f"conditioner expects {self.class_count} input columns, "
                f"got {class_probs.cols}"
            )
        y = class_probs
        for layer in self.hidden:
            y = tc.relu(layer.apply(y))
        out = self.head.apply(y)
        la = self.activated_layers
        return ActivationParams(
            amplitude=tc.cols(out, 0, la),
            frequency=tc.cols(out, la, 2 * la),
            phase=tc.cols(out, 2 * la, 3 * la),
            shift=tc.cols(out, 3 * la, 4 * la),
        )

    def parameters(self) -> list[Tensor]:
        return [p for layer in [*self.hidden, self.head] for p in layer.parameters()]


class FourierReluNet:
    """ReLU MLP on axis-factored Fourier features of the coordinates.

    Each of the K frequency rows is applied per input axis, giving
    sin/cos pairs and an encoding of width 2 * in_dim * K. K = 0 feeds the
    raw coordinates straight into the MLP.
    """

    def __init__(self, layers: int = 5, hidden: int = 256, in_dim: int = 2,
                 out_dim: int = 1, frequencies: int = 128, freq_scale: float = 10.0,
                 rng: np.random.Generator | None = None):
        rng = rng or np.random.default_rng(0)
        self.in_dim = in_dim
        self.frequencies = frequencies
        self.freq_bank = rng.normal(0.0, freq_scale, size=(frequencies, in_dim))
        enc_dim = 2 * in_dim * frequencies if frequencies > 0 else in_dim
        dims = [enc_dim] + [hidden] * (layers - 1) + [out_dim]
        self.layers = [
            AffineLayer(d, e, rng, _relu_bound(d)) for d, e in zip(dims[:-1], dims[1:])
        ]
        self._enc_cache: tuple[np.ndarray, Tensor] | None = None

    def encode(self, coords: np.ndarray) -> np.ndarray:
        if self.frequencies == 0:
            return np.asarray(coords, dtype=np.float64)
        proj = 2.0 * np.pi * coords[:, None, :] * self.freq_bank[None, :, :]
        proj = proj.reshape(coords.shape[0], -1)
        return np.hstack([np.sin(proj), np.cos(proj)])

    def _encoded(self, coords: Tensor) -> Tensor:
        # The encoding is a pure function of constant inputs; reuse it when
        # the same coordinate array is fed epoch after epoch.
        if self._enc_cache is not None and self._enc_cache[0] is coords.data:
            return self._enc_cache[1]
        enc = Tensor(self.encode(coords.data))
        self._enc_cache = (coords.data, enc)
        return enc

    def forward(self, coords: Tensor) -> Tensor:
        y = self._encoded(coords)
        for layer in self.layers[:-1]:
            y = tc.relu(layer.apply(y))
        return self.layers[-1].apply(y)

    def parameters(self) -> list[Tensor]:
        return [p for layer in self.layers for p in layer.parameters()]


class GaussNet:
    """MLP with Gaussian activations exp(-(spread * z)^2)."""

    def __init__(self, layers: int = 5, hidden: int = 256, in_dim: int = 2,
                 out_dim: int = 1, spread: float = 10.0,
                 rng: np.random.Generator | None = None):
        rng = rng or np.random.default_rng(0)
        self.spread = float(spread)
        dims = [in_dim] + [hidden] * (layers - 1) + [out_dim]
        self.layers = [
            AffineLayer(d, e, rng, 1.0 / np.sqrt(d)) for d, e in zip(dims[:-1], dims[1:])
        ]

    def forward(self, coords: Tensor) -> Tensor:
        y = coords
        for layer in self.layers[:-1]:
            z = layer.apply(y)
            y = tc.exp(tc.neg(tc.square(tc.scale(z, self.spread))))
        return self.layers[-1].apply(y)

    def parameters(self) -> list[Tensor]:
        return [p for layer in self.layers for p in layer.parameters()]


@dataclass
class ModelSet:
    """The networks for one run: image net plus, for seco kinds, the class
    net and conditioner. ``seco_no_semantic`` keeps all three but feeds the
    conditioner a constant uniform distribution instead of the class output."""

    kind: str
    image_net: AdaptiveSiren | Siren | FourierReluNet | GaussNet
    class_net: PixelClassNet | None = None
    conditioner: ConditionerNet | None = None
    trained_shape: tuple[int, int] | None = field(default=None)

    @property
    def conditioned(self) -> bool:
        return self.kind in ("seco", "seco_no_semantic")

    def forward(self, coords: Tensor) -> tuple[Tensor, Tensor | None, ActivationParams | None]:
        """One pass through the full composite; returns (pred, class_probs, params)."""
        if not self.conditioned:
            return self.image_net.forward(coords), None, None
        probs = self.class_net.forward(coords)
        if self.kind == "seco":
            cond_in = probs
        else:
            n, h = probs.shape
            cond_in = Tensor(np.full((n, h), 1.0 / h))
        params = self.conditioner.forward(cond_in)
        pred = self.image_net.forward(coords, params)
        return pred, probs, params

    def predict(self, grid: CoordinateGrid) -> tuple[np.ndarray, np.ndarray | None]:
        """Tape-free evaluation on a grid: (n,1) intensities and class probs."""
        pred, probs, _ = self.forward(Tensor(grid.coords))
        return pred.data, probs.data if probs is not None else None

    def parameters(self) -> list[Tensor]:
        params = list(self.image_net.parameters())
        if self.class_net is not None:
            params += self.class_net.parameters()
        if self.conditioner is not None:
            params += self.conditioner.parameters()
        return params


def build_models(cfg, class_count: int, seed: int) -> ModelSet:
    """Construct a seeded, untrained ModelSet for a run config.

    Seeds are spawned per network in a fixed order, so the image net of a
    ``siren`` run is initialized identically to the image net of a ``seco``
    run with the same seed and architecture.
    """
    if cfg.model not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {cfg.model!r}")
    image_ss, class_ss, cond_ss, enc_ss = np.random.SeedSequence(seed).spawn(4)
    image_rng = np.random.default_rng(image_ss)
    if cfg.model in ("seco", "seco_no_semantic"):
        image_net = AdaptiveSiren(cfg.layers, cfg.hidden, omega0=cfg.omega0,
                                  rng=image_rng)
        class_net = PixelClassNet(class_count, cfg.class_layers, cfg.class_hidden,
                                  omega0=cfg.omega0,
                                  rng=np.random.default_rng(class_ss))
        conditioner = ConditionerNet(class_count, image_net.activated_layers,
                                     cfg.cond_hidden, cfg.cond_layers,
                                     rng=np.random.default_rng(cond_ss))
        return ModelSet(cfg.model, image_net, class_net, conditioner)
    if cfg.model == "siren":
        return ModelSet(cfg.model, Siren(cfg.layers, cfg.hidden, omega0=cfg.omega0,
                                         rng=image_rng))
    if cfg.model == "relu_pe":
        return ModelSet(cfg.model, FourierReluNet(
            cfg.layers, cfg.hidden, frequencies=cfg.pe_frequencies,
            freq_scale=cfg.pe_scale, rng=np.random.default_rng(enc_ss)))
    return ModelSet(cfg.model, GaussNet(cfg.layers, cfg.hidden,
                                        spread=cfg.gauss_scale, rng=image_rng))
