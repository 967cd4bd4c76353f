"""Adam optimizer and global gradient-norm clipping over lists of arrays."""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    """First/second moment estimates for a fixed list of parameter arrays."""

    first_moment: list[np.ndarray]
    second_moment: list[np.ndarray]
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    names: list[str] = field(default_factory=list)

    @classmethod
    def zeros_like(cls, params: list[np.ndarray], names: list[str] | None = None) -> "AdamState":
        return cls(
            first_moment=[np.zeros_like(p) for p in params],
            second_moment=[np.zeros_like(p) for p in params],
            names=list(names) if names else [f"param{i}" for i in range(len(params))],
        )


def clip_grad_norm(grads: list[np.ndarray], max_norm: float) -> float:
    """Scale gradients in place so their joint L2 norm is at most ``max_norm``.

    Returns:
        The norm before clipping
    """
    total = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))
    if max_norm > 0 and total > max_norm:
        scale = max_norm / (total + 1e-12)
        for g in grads:
            g *= scale
    return total


def adam_step(
    params: list[np.ndarray], grads: list[np.ndarray], state: AdamState, lr: float
) -> None:
    """Apply one bias-corrected Adam update in place.

    ``grads`` are gradients of the loss (the update descends them).

    Args:
        params: Parameter arrays, updated in place
        grads: Gradients with the same shapes
        state: Moment estimates, updated in place
        lr: Learning rate (0 leaves parameters bit-identical)

    Raises:
        ValueError: If shapes disagree or lr is negative
        FloatingPointError: If any gradient is non-finite
    """
    if lr < 0:
        raise ValueError(f"Learning rate must be non-negative, got {lr}")
    if len(params) != len(grads) or len(params) != len(state.first_moment):
        raise ValueError("Parameter, gradient and optimizer state lists differ in length")
    for i, (p, g) in enumerate(zip(params, grads, strict=True)):
        if p.shape != g.shape:
            raise ValueError(f"Gradient shape {g.shape} does not match parameter {p.shape}")
        if not np.all(np.isfinite(g)):
            name = state.names[i] if i < len(state.names) else f"param{i}"
            raise FloatingPointError(f"Non-finite gradient in layer '{name}'")

    state.step_count += 1
    t = state.step_count
    correction1 = 1.0 - state.beta1**t
    correction2 = 1.0 - state.beta2**t
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment, strict=True):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        if lr == 0.0:
            continue
        m_hat = m / correction1
        v_hat = v / correction2
        p -= lr * m_hat / (np.sqrt(v_hat) + state.epsilon)
