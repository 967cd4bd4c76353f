"""Dense feed-forward networks with explicit parameter and gradient storage."""

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

OutputHead = Literal["linear", "tanh", "softmax"]
HIDDEN_LAYERS = 2


@dataclass
class Mlp:
    """Fully-connected network: tanh hidden layers and a selectable output head.

    Weights are stored as (fan_in, fan_out) matrices so a forward pass is
    ``h @ W + b``. Inputs may be a single vector or a batch of row vectors.

    Attributes:
        layer_sizes: (input, hidden..., output) widths
        weights: per-layer weight matrices, float64
        biases: per-layer bias vectors, float64
        hidden_activation: activation of every hidden layer (always tanh)
        output_head: linear | tanh | softmax
    """

    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    output_head: OutputHead = "linear"
    hidden_activation: str = "tanh"

    def __post_init__(self) -> None:
        if any(size <= 0 for size in self.layer_sizes):
            raise ValueError(f"Layer sizes must be positive: {self.layer_sizes}")
        if len(self.weights) != len(self.layer_sizes) - 1 or len(self.biases) != len(self.weights):
            raise ValueError("Number of weight/bias arrays does not match layer_sizes")
        for i, (w, b) in enumerate(zip(self.weights, self.biases, strict=True)):
            expected = (self.layer_sizes[i], self.layer_sizes[i + 1])
            if w.shape != expected or b.shape != (expected[1],):
                raise ValueError(
                    f"Layer {i} shape mismatch: W{w.shape}, b{b.shape}, expected W{expected}"
                )

    @property
    def input_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_dim(self) -> int:
        return self.layer_sizes[-1]

    def parameters(self) -> list[np.ndarray]:
        """Return parameter arrays in a fixed order: W0, b0, W1, b1, ..."""
        params: list[np.ndarray] = []
        for w, b in zip(self.weights, self.biases, strict=True):
            params.extend([w, b])
        return params

    def parameter_names(self) -> list[str]:
        names: list[str] = []
        for i in range(len(self.weights)):
            names.extend([f"W{i}", f"b{i}"])
        return names

    def astype(self, dtype: type) -> "Mlp":
        """Independent copy with every parameter cast to ``dtype``."""
        return Mlp(
            layer_sizes=self.layer_sizes,
            weights=[np.ascontiguousarray(w, dtype=dtype) for w in self.weights],
            biases=[np.ascontiguousarray(b, dtype=dtype) for b in self.biases],
            output_head=self.output_head,
            hidden_activation=self.hidden_activation,
        )


@dataclass
class ForwardCache:
    """Activations recorded by a forward pass, consumed by ``backward``."""

    activations: list[np.ndarray] = field(default_factory=list)
    output: np.ndarray | None = None


def _orthogonal(rng: np.random.Generator, fan_in: int, fan_out: int, gain: float) -> np.ndarray:
    """Scaled-uniform draw orthogonalized through a QR decomposition."""
    rows, cols = max(fan_in, fan_out), min(fan_in, fan_out)
    flat = rng.uniform(-1.0, 1.0, size=(rows, cols))
    q, r = np.linalg.qr(flat)
    q = q * np.sign(np.diag(r))
    if fan_in < fan_out:
        q = q.T
    return np.ascontiguousarray(gain * q.reshape(fan_in, fan_out))


def build_mlp(
    input_dim: int,
    output_dim: int,
    rng: np.random.Generator,
    hidden_size: int = 64,
    output_head: OutputHead = "linear",
    output_gain: float = 1.0,
    hidden_gain: float = 1.0,
) -> Mlp:
    """Build a two-hidden-layer network with orthogonal init and zero biases.

    Args:
        input_dim: Width of the input vector
        output_dim: Width of the output vector
        rng: Generator used for weight initialization
        hidden_size: Units per hidden layer (default: 64)
        output_head: linear | tanh | softmax
        output_gain: Scale of the output layer (0.01 for actor heads)
        hidden_gain: Scale of the hidden layers

    Returns:
        Initialized Mlp
    """
    sizes = (input_dim, *([hidden_size] * HIDDEN_LAYERS), output_dim)
    weights: list[np.ndarray] = []
    biases: list[np.ndarray] = []
    for i in range(len(sizes) - 1):
        gain = output_gain if i == len(sizes) - 2 else hidden_gain
        weights.append(_orthogonal(rng, sizes[i], sizes[i + 1], gain))
        biases.append(np.zeros(sizes[i + 1]))
    return Mlp(layer_sizes=sizes, weights=weights, biases=biases, output_head=output_head)


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    exps = np.exp(shifted)
    result: np.ndarray = exps / np.sum(exps, axis=-1, keepdims=True)
    return result


def _apply_head(head: OutputHead, z: np.ndarray) -> np.ndarray:
    if head == "linear":
        return z
    if head == "tanh":
        return np.tanh(z)
    if head == "softmax":
        return softmax(z)
    raise ValueError(f"Unknown output head: {head}")


def forward_with_cache(net: Mlp, x: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    """Run a forward pass and keep every layer input for backpropagation.

    Inputs are promoted to at least float64; extended-precision inputs stay extended.
    """
    x = np.asarray(x)
    x = x.astype(np.result_type(x.dtype, np.float64), copy=False)
    if x.shape[-1] != net.input_dim:
        raise ValueError(f"Input length {x.shape[-1]} does not match network input {net.input_dim}")

    cache = ForwardCache()
    h = x
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases, strict=True)):
        cache.activations.append(h)
        z = h @ w + b
        h = np.tanh(z) if i < last else _apply_head(net.output_head, z)
    cache.output = h
    return h, cache


def forward(net: Mlp, x: np.ndarray) -> np.ndarray:
    """Evaluate the network on one input vector or a batch of rows."""
    output, _ = forward_with_cache(net, x)
    return output


@dataclass
class MlpGrads:
    """Gradients mirroring an Mlp's weights and biases."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def as_list(self) -> list[np.ndarray]:
        grads: list[np.ndarray] = []
        for w, b in zip(self.weights, self.biases, strict=True):
            grads.extend([w, b])
        return grads


def backward(
    net: Mlp,
    x: np.ndarray,
    upstream_grad: np.ndarray,
    cache: ForwardCache | None = None,
) -> tuple[MlpGrads, np.ndarray]:
    """Backpropagate ``upstream_grad · output`` to every parameter and the input.

    For batched inputs the parameter gradients are summed over rows.

    Args:
        net: Network evaluated on ``x``
        x: Input vector or batch
        upstream_grad: d(objective)/d(output), same shape as the output
        cache: Activations from ``forward_with_cache``; recomputed when omitted

    Returns:
        Tuple of (parameter gradients, input gradient)
    """
    if cache is None or cache.output is None:
        _, cache = forward_with_cache(net, x)
    assert cache.output is not None
    output = cache.output
    g = np.asarray(upstream_grad, dtype=np.float64)
    if g.shape != output.shape:
        raise ValueError(f"Upstream gradient shape {g.shape} does not match output {output.shape}")

    if net.output_head == "tanh":
        delta = g * (1.0 - output**2)
    elif net.output_head == "softmax":
        delta = output * (g - np.sum(g * output, axis=-1, keepdims=True))
    else:
        delta = g

    n_layers = len(net.weights)
    w_grads: list[np.ndarray] = [np.empty(0)] * n_layers
    b_grads: list[np.ndarray] = [np.empty(0)] * n_layers
    for i in range(n_layers - 1, -1, -1):
        h_in = cache.activations[i]
        if h_in.ndim == 1:
            w_grads[i] = np.outer(h_in, delta)
            b_grads[i] = delta.copy()
        else:
            w_grads[i] = h_in.T @ delta
            b_grads[i] = delta.sum(axis=0)
        grad_in = delta @ net.weights[i].T
        if i > 0:
            # cached input of layer i is tanh of the previous pre-activation
            delta = grad_in * (1.0 - h_in**2)
        else:
            delta = grad_in

    return MlpGrads(weights=w_grads, biases=b_grads), delta
