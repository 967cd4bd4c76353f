"""Finite-difference oracle for the analytic MLP gradients."""

from collections.abc import Callable
from typing import TypedDict

import numpy as np

from python.models.mlp import HIDDEN_LAYERS, Mlp, OutputHead, backward, forward

# loss(output) -> (value, d value / d output); the value keeps the output's precision
LossFn = Callable[[np.ndarray], tuple[float, np.ndarray]]

OUTPUT_HEADS: tuple[OutputHead, ...] = ("linear", "tanh", "softmax")

# Finite differences are evaluated in extended precision: float64 roundoff in the
# loss (~1e-16 |f| / fd_step) would exceed the 1e-8 denominator floor.
FD_DTYPE = np.longdouble


class GradcheckReport(TypedDict):
    """Summary of a gradient-check suite run."""

    instances: int
    max_relative_error: float
    worst_instance: int


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Worst elementwise ``|a - n| / max(|a|, |n|, 1e-8)``."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(n))):
        raise FloatingPointError("Non-finite value in gradient comparison")
    if a.size == 0:
        return 0.0
    scale = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-8)
    return float(np.max(np.abs(a - n) / scale))


def linear_loss(weights: np.ndarray) -> LossFn:
    def loss(output: np.ndarray) -> tuple[float, np.ndarray]:
        return weights @ output, weights.copy()

    return loss


def quadratic_loss(target: np.ndarray) -> LossFn:
    def loss(output: np.ndarray) -> tuple[float, np.ndarray]:
        diff = output - target
        return 0.5 * (diff @ diff), diff

    return loss


def gradient_check(
    net: Mlp,
    x: np.ndarray,
    loss: LossFn,
    fd_step: float = 1e-6,
    analytic_grads: list[np.ndarray] | None = None,
) -> float:
    """Compare ``backward`` against central finite differences.

    Every parameter entry and every input entry is compared on its own: the
    error is ``|a - n| / max(|a|, |n|, 1e-8)`` and the worst entry is reported.
    Analytic gradients come from the float64 network; the differences are taken
    on an extended-precision copy, so ``net`` itself is never modified.

    Args:
        net: Network to check
        x: Input vector
        loss: Scalar loss of the output returning (value, gradient)
        fd_step: Central difference step
        analytic_grads: Override for the analytic parameter gradients
            (used to validate the checker itself)

    Returns:
        Maximum relative error over all parameter entries and the input

    Raises:
        ValueError: If fd_step is not positive
        FloatingPointError: If any compared value is non-finite
    """
    if fd_step <= 0:
        raise ValueError(f"fd_step must be positive, got {fd_step}")
    x = np.asarray(x, dtype=np.float64)

    _, upstream = loss(forward(net, x))
    grads, input_grad = backward(net, x, upstream)
    analytic = analytic_grads if analytic_grads is not None else grads.as_list()

    wide = net.astype(FD_DTYPE)
    wide_x = x.astype(FD_DTYPE)
    step = FD_DTYPE(fd_step)

    def objective(inputs: np.ndarray) -> float:
        return loss(forward(wide, inputs))[0]

    worst = 0.0
    for param, grad in zip(wide.parameters(), analytic, strict=True):
        numeric = np.zeros(param.shape, dtype=FD_DTYPE)
        for idx in np.ndindex(param.shape):
            original = param[idx]
            param[idx] = original + step
            upper = objective(wide_x)
            param[idx] = original - step
            lower = objective(wide_x)
            param[idx] = original
            numeric[idx] = (upper - lower) / (2 * step)
        worst = max(worst, relative_error(grad, numeric))

    numeric_input = np.zeros(x.shape, dtype=FD_DTYPE)
    for k in range(x.size):
        shifted = wide_x.copy()
        shifted[k] += step
        upper = objective(shifted)
        shifted[k] -= 2 * step
        lower = objective(shifted)
        numeric_input[k] = (upper - lower) / (2 * step)
    worst = max(worst, relative_error(input_grad, numeric_input))
    return worst


def random_network(
    rng: np.random.Generator,
    input_dim: int,
    hidden_size: int,
    output_dim: int,
    output_head: OutputHead,
) -> Mlp:
    """Network with unit-variance-scaled Gaussian weights and random biases."""
    sizes = (input_dim, *([hidden_size] * HIDDEN_LAYERS), output_dim)
    weights = [
        rng.standard_normal((sizes[i], sizes[i + 1])) / np.sqrt(sizes[i])
        for i in range(len(sizes) - 1)
    ]
    biases = [0.1 * rng.standard_normal(sizes[i + 1]) for i in range(len(sizes) - 1)]
    return Mlp(layer_sizes=sizes, weights=weights, biases=biases, output_head=output_head)


def run_gradcheck_suite(
    instances: int = 100, seed: int = 0, fd_step: float = 1e-6
) -> GradcheckReport:
    """Check random networks of widths 4-64 across every output head.

    Returns:
        GradcheckReport with the worst relative error over all instances
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    worst_instance = -1
    for i in range(instances):
        head = OUTPUT_HEADS[i % len(OUTPUT_HEADS)]
        input_dim = int(rng.integers(4, 65))
        hidden = int(rng.integers(4, 65))
        output_dim = int(rng.integers(2, 17))
        net = random_network(rng, input_dim, hidden, output_dim, head)
        x = rng.uniform(-1.0, 1.0, size=input_dim)
        if i % 2 == 0:
            loss = linear_loss(rng.standard_normal(output_dim))
        else:
            loss = quadratic_loss(rng.standard_normal(output_dim))
        error = gradient_check(net, x, loss, fd_step=fd_step)
        if error > worst:
            worst, worst_instance = error, i
    return GradcheckReport(
        instances=instances, max_relative_error=worst, worst_instance=worst_instance
    )
