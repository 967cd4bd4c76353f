"""Action distributions for the local and central policies."""

import math
from dataclasses import dataclass

import numpy as np

LOG_2PI = math.log(2.0 * math.pi)
SIMPLEX_TOLERANCE = 1e-9


@dataclass(frozen=True)
class CategoricalDist:
    """Distribution over a discrete action set (softmax policy output)."""

    probabilities: np.ndarray

    def __post_init__(self) -> None:
        p = self.probabilities
        if p.ndim != 1 or np.any(p < 0) or abs(float(p.sum()) - 1.0) > SIMPLEX_TOLERANCE:
            raise ValueError(f"Not a probability vector: {p}")


@dataclass(frozen=True)
class DiagGaussianDist:
    """Diagonal Gaussian with a state-independent log standard deviation."""

    mean: np.ndarray
    log_std: np.ndarray

    def __post_init__(self) -> None:
        if self.mean.shape != self.log_std.shape:
            raise ValueError(
                f"Mean shape {self.mean.shape} does not match log_std shape {self.log_std.shape}"
            )

    @property
    def std(self) -> np.ndarray:
        return np.exp(self.log_std)


def categorical_sample(dist: CategoricalDist, rng: np.random.Generator) -> int:
    """Draw an action index by inverting the cumulative distribution."""
    cumulative = np.cumsum(dist.probabilities)
    index = int(np.searchsorted(cumulative, rng.random() * cumulative[-1], side="right"))
    return min(index, len(cumulative) - 1)


def categorical_log_prob(dist: CategoricalDist, action: int) -> float:
    """Return ln p[action].

    Raises:
        ValueError: If the action has zero probability (cannot be sampled from ``dist``)
    """
    p = float(dist.probabilities[action])
    if p <= 0.0:
        raise ValueError(f"Action {action} has zero probability under {dist.probabilities}")
    return math.log(p)


def categorical_entropy(dist: CategoricalDist) -> float:
    p = dist.probabilities
    nonzero = p[p > 0]
    return float(-np.sum(nonzero * np.log(nonzero)))


def gaussian_sample(dist: DiagGaussianDist, rng: np.random.Generator) -> np.ndarray:
    sample: np.ndarray = dist.mean + dist.std * rng.standard_normal(dist.mean.shape)
    return sample


def gaussian_log_prob(dist: DiagGaussianDist, x: np.ndarray) -> float:
    """Sum of per-component Gaussian log densities."""
    return float(np.sum(gaussian_component_log_probs(dist.mean, dist.log_std, x)))


def gaussian_component_log_probs(
    mean: np.ndarray, log_std: np.ndarray, x: np.ndarray
) -> np.ndarray:
    """Per-component log densities; broadcasts over a leading batch axis."""
    if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(x))):
        raise FloatingPointError("Non-finite Gaussian mean or sample")
    z = (x - mean) * np.exp(-log_std)
    result: np.ndarray = -0.5 * z**2 - log_std - 0.5 * LOG_2PI
    return result


def gaussian_entropy(dist: DiagGaussianDist) -> float:
    return float(np.sum(0.5 + 0.5 * LOG_2PI + dist.log_std))
