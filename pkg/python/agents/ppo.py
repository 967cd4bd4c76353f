"""Proximal Policy Optimization: rollout storage, returns, advantages and updates."""

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from python.models.checkpoint import adam_state, mlp_state, restore_adam, restore_mlp
from python.models.distributions import (
    LOG_2PI,
    CategoricalDist,
    DiagGaussianDist,
    categorical_log_prob,
    categorical_sample,
    gaussian_component_log_probs,
    gaussian_sample,
)
from python.models.mlp import Mlp, OutputHead, backward, build_mlp, forward, forward_with_cache
from python.models.optim import AdamState, adam_step, clip_grad_norm

PolicyKind = Literal["categorical", "gaussian"]
Owner = Literal["central", "local"]

LOG_STD_INIT = float(np.log(0.5))
LOG_STD_MIN = -5.0
LOG_STD_MAX = 1.0
PROB_FLOOR = 1e-300


@dataclass
class PpoHyperparams:
    """Hyperparameters of one PPO learner."""

    gamma: float = 0.95
    clip_epsilon: float = 0.2
    lr: float = 3e-4
    update_epochs: int = 4
    minibatch_size: int = 256
    value_coef: float = 0.5
    entropy_coef: float = 0.01
    batch_size: int = 2000
    max_grad_norm: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        if self.clip_epsilon <= 0:
            raise ValueError(f"clip_epsilon must be positive, got {self.clip_epsilon}")
        if self.lr < 0:
            raise ValueError(f"lr must be non-negative, got {self.lr}")
        if self.update_epochs <= 0 or self.minibatch_size <= 0 or self.batch_size <= 0:
            raise ValueError("update_epochs, minibatch_size and batch_size must be positive")

    @classmethod
    def central(cls) -> "PpoHyperparams":
        return cls(lr=3e-4, batch_size=2000)

    @classmethod
    def local(cls) -> "PpoHyperparams":
        return cls(lr=1e-2, batch_size=4000)


@dataclass
class Transition:
    """One experience tuple; ``stream`` identifies the agent / message block it belongs to."""

    observation: np.ndarray
    action: int | np.ndarray
    log_prob_old: float
    reward: float
    done: bool
    value_estimate: float
    stream: int = 0


class RolloutBuffer:
    """On-policy experience storage, consumed and cleared by ``ppo_update``."""

    def __init__(self, capacity: int, owner: Owner) -> None:
        if capacity <= 0:
            raise ValueError("Buffer capacity must be positive")
        self.capacity = capacity
        self.owner = owner
        self.transitions: list[Transition] = []
        self.next_values: dict[int, float] = {}

    def __len__(self) -> int:
        return len(self.transitions)

    def add(self, transition: Transition) -> None:
        if not np.isfinite(transition.log_prob_old):
            raise FloatingPointError(f"Non-finite log_prob_old in {self.owner} buffer")
        if not np.isfinite(transition.reward):
            raise FloatingPointError(f"Non-finite reward in {self.owner} buffer")
        self.transitions.append(transition)

    def is_ready(self) -> bool:
        return len(self.transitions) >= self.capacity

    def set_next_value(self, stream: int, value: float) -> None:
        """Record V(s_{t+1}) for a stream whose episode continues past the last transition."""
        if not np.isfinite(value):
            raise FloatingPointError(f"Non-finite bootstrap value in {self.owner} buffer")
        self.next_values[stream] = float(value)

    def clear(self) -> None:
        self.transitions = []
        self.next_values = {}

    def returns(self, gamma: float) -> np.ndarray:
        """Discounted returns-to-go computed separately for every stream.

        A stream whose last stored transition is not terminal was cut by the
        update trigger; its tail bootstraps from the next-state value recorded
        with ``set_next_value``.

        Raises:
            ValueError: If a cut stream has no next-state value
        """
        by_stream: dict[int, list[int]] = defaultdict(list)
        for index, tr in enumerate(self.transitions):
            by_stream[tr.stream].append(index)

        result = np.zeros(len(self.transitions))
        for stream, indices in by_stream.items():
            rewards = [self.transitions[i].reward for i in indices]
            dones = [self.transitions[i].done for i in indices]
            last = self.transitions[indices[-1]]
            bootstrap = 0.0
            if not last.done:
                if stream not in self.next_values:
                    raise ValueError(
                        f"Stream {stream} of the {self.owner} buffer was cut without a "
                        "next-state value"
                    )
                bootstrap = self.next_values[stream]
            result[indices] = compute_returns(rewards, dones, gamma, last_value=bootstrap)
        return result


def compute_returns(
    rewards: list[float] | np.ndarray,
    dones: list[bool] | np.ndarray,
    gamma: float,
    last_value: float = 0.0,
) -> np.ndarray:
    """G_t = r_t + gamma * G_{t+1}, restarting after every done flag.

    Args:
        rewards: Rewards in time order
        dones: Episode-end flags aligned with rewards
        gamma: Discount factor
        last_value: Value appended after a trailing non-terminal step

    Returns:
        Array of returns-to-go
    """
    if len(rewards) != len(dones):
        raise ValueError(f"rewards ({len(rewards)}) and dones ({len(dones)}) differ in length")
    returns = np.zeros(len(rewards))
    running = last_value
    for t in range(len(rewards) - 1, -1, -1):
        if dones[t]:
            running = 0.0
        running = rewards[t] + gamma * running
        returns[t] = running
    return returns


def compute_advantages(returns: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Return ``G - V`` normalized to zero mean and unit std (single entries stay raw)."""
    returns = np.asarray(returns, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if returns.shape != values.shape:
        raise ValueError("returns and values differ in shape")
    raw = returns - values
    if raw.size < 2:
        return raw
    result: np.ndarray = (raw - raw.mean()) / (raw.std() + 1e-8)
    return result


def clipped_surrogate(
    ratio: float | np.ndarray, advantage: float | np.ndarray, eps: float
) -> float | np.ndarray:
    """Pessimistic PPO objective ``min(r A, clip(r, 1-eps, 1+eps) A)`` (to be maximized)."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    unclipped = ratio * advantage
    clipped = np.clip(ratio, 1.0 - eps, 1.0 + eps) * advantage
    result = np.minimum(unclipped, clipped)
    return float(result) if np.ndim(result) == 0 else result


class ActorCritic:
    """Actor and critic networks trained together by one Adam optimizer.

    Categorical policies use a softmax actor head. Gaussian policies use the
    actor output as the mean and a learned state-independent ``log_std``. With
    ``block_size`` set, the Gaussian output is split into contiguous blocks and a
    transition's ``stream`` selects the block its action belongs to.
    """

    def __init__(
        self,
        actor: Mlp,
        critic: Mlp,
        kind: PolicyKind,
        log_std: np.ndarray | None = None,
        block_size: int | None = None,
    ) -> None:
        if kind == "gaussian" and log_std is None:
            raise ValueError("Gaussian policies need a log_std vector")
        if kind == "gaussian" and log_std is not None and log_std.shape != (actor.output_dim,):
            raise ValueError("log_std length must equal the actor output width")
        if block_size is not None and actor.output_dim % block_size != 0:
            raise ValueError("Actor output width must be a multiple of block_size")
        if critic.output_dim != 1:
            raise ValueError("Critic must produce a single value")
        self.actor = actor
        self.critic = critic
        self.kind = kind
        self.log_std = log_std
        self.block_size = block_size
        self.adam = AdamState.zeros_like(self.parameters(), self.parameter_names())

    @classmethod
    def build(
        cls,
        input_dim: int,
        action_dim: int,
        kind: PolicyKind,
        rng: np.random.Generator,
        hidden_size: int = 64,
        block_size: int | None = None,
    ) -> "ActorCritic":
        """Create fresh networks: softmax head for categorical, tanh means for Gaussian."""
        head: OutputHead = "softmax" if kind == "categorical" else "tanh"
        actor = build_mlp(input_dim, action_dim, rng, hidden_size, head, output_gain=0.01)
        critic = build_mlp(input_dim, 1, rng, hidden_size, "linear", output_gain=1.0)
        log_std = np.full(action_dim, LOG_STD_INIT) if kind == "gaussian" else None
        return cls(actor, critic, kind, log_std=log_std, block_size=block_size)

    @property
    def input_dim(self) -> int:
        return self.actor.input_dim

    def parameters(self) -> list[np.ndarray]:
        params = self.actor.parameters()
        if self.log_std is not None:
            params.append(self.log_std)
        return params + self.critic.parameters()

    def parameter_names(self) -> list[str]:
        names = [f"actor/{n}" for n in self.actor.parameter_names()]
        if self.log_std is not None:
            names.append("log_std")
        return names + [f"critic/{n}" for n in self.critic.parameter_names()]

    def value(self, x: np.ndarray) -> np.ndarray:
        values: np.ndarray = forward(self.critic, x)[..., 0]
        return values

    def act(
        self, x: np.ndarray, rng: np.random.Generator, stochastic: bool = True
    ) -> tuple[int | np.ndarray, float, float]:
        """Choose an action for one input.

        Returns:
            Tuple of (action, log probability of that action, value estimate)
        """
        output = forward(self.actor, x)
        value = float(self.value(x))
        if self.kind == "categorical":
            dist = CategoricalDist(output)
            index = categorical_sample(dist, rng) if stochastic else int(np.argmax(output))
            return index, categorical_log_prob(dist, index), value
        assert self.log_std is not None
        gauss = DiagGaussianDist(output, self.log_std)
        raw = gaussian_sample(gauss, rng) if stochastic else output
        action = np.clip(raw, -1.0, 1.0)
        log_prob = float(np.sum(gaussian_component_log_probs(output, self.log_std, action)))
        return action, log_prob, value

    def act_batch(
        self, xs: np.ndarray, rng: np.random.Generator, stochastic: bool = True
    ) -> tuple[list[int | np.ndarray], np.ndarray, np.ndarray]:
        """Choose actions for a stack of inputs (one row per agent), sampling in row order."""
        outputs = forward(self.actor, xs)
        values = self.value(xs)
        actions: list[int | np.ndarray] = []
        log_probs = np.zeros(len(xs))
        for row, output in enumerate(outputs):
            if self.kind == "categorical":
                dist = CategoricalDist(output)
                index = categorical_sample(dist, rng) if stochastic else int(np.argmax(output))
                actions.append(index)
                log_probs[row] = categorical_log_prob(dist, index)
            else:
                assert self.log_std is not None
                gauss = DiagGaussianDist(output, self.log_std)
                raw = gaussian_sample(gauss, rng) if stochastic else output
                action = np.clip(raw, -1.0, 1.0)
                actions.append(action)
                log_probs[row] = float(
                    np.sum(gaussian_component_log_probs(output, self.log_std, action))
                )
        return actions, log_probs, values

    def state_dict(self, prefix: str) -> dict[str, np.ndarray]:
        arrays = mlp_state(self.actor, f"{prefix}/actor")
        arrays.update(mlp_state(self.critic, f"{prefix}/critic"))
        if self.log_std is not None:
            arrays[f"{prefix}/log_std"] = self.log_std
        arrays.update(adam_state(self.adam, f"{prefix}/adam"))
        return arrays

    def load_state_dict(self, arrays: dict[str, np.ndarray], prefix: str) -> None:
        restore_mlp(self.actor, arrays, f"{prefix}/actor")
        restore_mlp(self.critic, arrays, f"{prefix}/critic")
        if self.log_std is not None:
            self.log_std[...] = arrays[f"{prefix}/log_std"]
        restore_adam(self.adam, arrays, f"{prefix}/adam")

    def is_finite(self) -> bool:
        return all(bool(np.all(np.isfinite(p))) for p in self.parameters())


@dataclass
class UpdateStats:
    """Means over all minibatches of one ``ppo_update`` call.

    ``loss`` is the optimized objective (policy loss + weighted value loss -
    weighted entropy); ``entropy`` is the raw policy entropy.
    """

    loss: float = 0.0
    policy_loss: float = 0.0
    value_loss: float = 0.0
    entropy: float = 0.0
    mean_ratio: float = 1.0
    first_minibatch_ratio: float = 1.0
    approx_kl: float = 0.0
    clip_fraction: float = 0.0
    minibatches: int = 0
    samples: int = 0
    history: list[dict[str, float]] = field(default_factory=list, repr=False)


def _stack_actions(transitions: list[Transition], kind: PolicyKind) -> np.ndarray:
    if kind == "categorical":
        indices = [int(t.action) for t in transitions]  # type: ignore[arg-type]
        return np.array(indices, dtype=np.int64)
    return np.stack([np.asarray(t.action, dtype=np.float64) for t in transitions])


def _minibatch_loss_and_grads(
    policy: ActorCritic,
    obs: np.ndarray,
    actions: np.ndarray,
    streams: np.ndarray,
    old_log_probs: np.ndarray,
    advantages: np.ndarray,
    returns: np.ndarray,
    hp: PpoHyperparams,
) -> tuple[dict[str, float], list[np.ndarray]]:
    batch = len(obs)
    output, actor_cache = forward_with_cache(policy.actor, obs)
    rows = np.arange(batch)

    actor_upstream = np.zeros_like(output)
    log_std_grad = np.zeros_like(policy.log_std) if policy.log_std is not None else None

    if policy.kind == "categorical":
        probs = np.maximum(output, PROB_FLOOR)
        log_probs = np.log(probs[rows, actions])
        log_all = np.log(probs)
        entropy = -np.sum(output * log_all, axis=1)
    else:
        assert policy.log_std is not None and log_std_grad is not None
        width = actions.shape[1]
        if policy.block_size is not None:
            cols = streams[:, None] * policy.block_size + np.arange(width)[None, :]
        else:
            cols = np.broadcast_to(np.arange(width), (batch, width))
        means = np.take_along_axis(output, cols, axis=1)
        log_std = policy.log_std[cols]
        log_probs = gaussian_component_log_probs(means, log_std, actions).sum(axis=1)
        entropy = np.sum(0.5 + 0.5 * LOG_2PI + log_std, axis=1)

    ratio = np.exp(log_probs - old_log_probs)
    surrogate = clipped_surrogate(ratio, advantages, hp.clip_epsilon)
    assert isinstance(surrogate, np.ndarray)
    policy_loss = -float(np.mean(surrogate))
    entropy_mean = float(np.mean(entropy))

    values = forward(policy.critic, obs)[:, 0]
    value_error = returns - values
    value_loss = float(np.mean(value_error**2))

    # gradient of the loss w.r.t. log pi(a|s): only unclipped terms carry gradient
    low, high = 1.0 - hp.clip_epsilon, 1.0 + hp.clip_epsilon
    unclipped = ratio * advantages <= np.clip(ratio, low, high) * advantages
    d_log_prob = -(unclipped * ratio * advantages) / batch
    d_entropy = -hp.entropy_coef / batch

    if policy.kind == "categorical":
        actor_upstream[rows, actions] += d_log_prob / np.maximum(output[rows, actions], PROB_FLOOR)
        actor_upstream += -d_entropy * (log_all + 1.0)
    else:
        assert policy.log_std is not None and log_std_grad is not None
        z = (actions - means) * np.exp(-log_std)
        d_means = d_log_prob[:, None] * z * np.exp(-log_std)
        np.put_along_axis(actor_upstream, cols, d_means, axis=1)
        d_log_std = d_log_prob[:, None] * (z**2 - 1.0) + d_entropy
        np.add.at(log_std_grad, cols.reshape(-1), d_log_std.reshape(-1))

    actor_grads, _ = backward(policy.actor, obs, actor_upstream, actor_cache)
    critic_upstream = (-2.0 * hp.value_coef * value_error / batch)[:, None]
    critic_grads, _ = backward(policy.critic, obs, critic_upstream)

    grads = actor_grads.as_list()
    if log_std_grad is not None:
        grads.append(log_std_grad)
    grads.extend(critic_grads.as_list())

    stats = {
        "policy_loss": policy_loss,
        "value_loss": hp.value_coef * value_loss,
        "entropy": hp.entropy_coef * entropy_mean,
        "raw_entropy": entropy_mean,
        "mean_ratio": float(np.mean(ratio)),
        "approx_kl": float(np.mean(old_log_probs - log_probs)),
        "clip_fraction": float(np.mean(np.abs(ratio - 1.0) > hp.clip_epsilon)),
    }
    return stats, grads


def ppo_update(
    policy: ActorCritic,
    buffer: RolloutBuffer,
    hp: PpoHyperparams,
    rng: np.random.Generator,
) -> UpdateStats:
    """Run ``update_epochs`` passes of shuffled minibatch PPO over the buffer, then clear it.

    Args:
        policy: Actor-critic owning the parameters
        buffer: Experience collected with the current parameters
        hp: PPO hyperparameters
        rng: Generator for minibatch shuffling

    Returns:
        UpdateStats averaged over minibatches (entropy reported without coefficient)

    Raises:
        ValueError: If the buffer is empty
        FloatingPointError: If a loss or gradient becomes non-finite
    """
    if not buffer.transitions:
        raise ValueError(f"Cannot update from an empty {buffer.owner} buffer")

    transitions = buffer.transitions
    obs = np.stack([t.observation for t in transitions])
    actions = _stack_actions(transitions, policy.kind)
    streams = np.array([t.stream for t in transitions], dtype=np.int64)
    old_log_probs = np.array([t.log_prob_old for t in transitions])
    values = np.array([t.value_estimate for t in transitions])
    returns = buffer.returns(hp.gamma)
    advantages = compute_advantages(returns, values)

    size = len(transitions)
    minibatch = min(hp.minibatch_size, size)
    params = policy.parameters()
    stats = UpdateStats(samples=size)

    for _ in range(hp.update_epochs):
        order = rng.permutation(size)
        for start in range(0, size, minibatch):
            idx = order[start : start + minibatch]
            mb_stats, grads = _minibatch_loss_and_grads(
                policy,
                obs[idx],
                actions[idx],
                streams[idx],
                old_log_probs[idx],
                advantages[idx],
                returns[idx],
                hp,
            )
            if not all(np.isfinite(v) for v in mb_stats.values()):
                raise FloatingPointError(f"Non-finite {buffer.owner} PPO loss: {mb_stats}")
            clip_grad_norm(grads, hp.max_grad_norm)
            adam_step(params, grads, policy.adam, hp.lr)
            if policy.log_std is not None:
                np.clip(policy.log_std, LOG_STD_MIN, LOG_STD_MAX, out=policy.log_std)
            stats.history.append(mb_stats)

    history = stats.history
    stats.minibatches = len(history)
    stats.policy_loss = float(np.mean([h["policy_loss"] for h in history]))
    stats.value_loss = float(np.mean([h["value_loss"] for h in history]))
    stats.entropy = float(np.mean([h["raw_entropy"] for h in history]))
    stats.mean_ratio = float(np.mean([h["mean_ratio"] for h in history]))
    stats.first_minibatch_ratio = history[0]["mean_ratio"]
    stats.approx_kl = float(np.mean([h["approx_kl"] for h in history]))
    stats.clip_fraction = float(np.mean([h["clip_fraction"] for h in history]))
    stats.loss = float(
        np.mean([h["policy_loss"] + h["value_loss"] - h["entropy"] for h in history])
    )
    buffer.clear()
    return stats
