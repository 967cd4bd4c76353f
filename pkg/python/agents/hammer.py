"""Central message agent orchestration over parameter-shared local PPO learners.

Per time step in hammer mode:

1. the central agent sees every local observation plus every previous action,
2. emits one message block per agent from a single forward pass,
3. each local agent acts on its own observation concatenated with its message,
4. the environment steps, and each message stream is rewarded with the reward
   of the agent that received it.

Baseline modes reuse the same loop: ``independent`` drops the messages,
``random_message`` replaces them with uniform noise and ``centralized`` feeds
each local learner the joint observation.
"""

from dataclasses import dataclass
from enum import StrEnum

import numpy as np

from python.agents.ppo import (
    ActorCritic,
    PolicyKind,
    PpoHyperparams,
    RolloutBuffer,
    Transition,
    UpdateStats,
    ppo_update,
)
from python.envs.navigation import N_DISCRETE_ACTIONS, NavigationEnv
from python.envs.trajectory import TrajectoryRecorder
from python.experiments.seeding import RngStreams
from python.models.distributions import gaussian_component_log_probs
from python.models.mlp import forward


class RunMode(StrEnum):
    """Compared training conditions."""

    HAMMER = "hammer"
    INDEPENDENT = "independent"
    RANDOM_MESSAGE = "random_message"
    CENTRALIZED = "centralized"

    @property
    def uses_messages(self) -> bool:
        return self in (RunMode.HAMMER, RunMode.RANDOM_MESSAGE)


@dataclass(frozen=True)
class Message:
    """Message vector in [-1, 1]^m addressed to one local agent."""

    values: np.ndarray
    recipient: int


@dataclass(frozen=True)
class GlobalInput:
    """Central agent input: observations in agent order, then previous-action encodings."""

    values: np.ndarray
    n_agents: int
    obs_dim: int
    action_enc_dim: int

    def __len__(self) -> int:
        return len(self.values)


@dataclass
class PolicyBundle:
    """The central actor-critic (hammer mode only) and the one shared local actor-critic."""

    local: ActorCritic
    central: ActorCritic | None = None

    def state_dict(self) -> dict[str, np.ndarray]:
        arrays = self.local.state_dict("local")
        if self.central is not None:
            arrays.update(self.central.state_dict("central"))
        return arrays

    def load_state_dict(self, arrays: dict[str, np.ndarray]) -> None:
        self.local.load_state_dict(arrays, "local")
        if self.central is not None:
            self.central.load_state_dict(arrays, "central")

    def is_finite(self) -> bool:
        return self.local.is_finite() and (self.central is None or self.central.is_finite())


@dataclass
class Buffers:
    """Experience buffer B (central) and B' (locals)."""

    local: RolloutBuffer
    central: RolloutBuffer | None = None


@dataclass
class EpisodeSummary:
    """Per-episode outcome and any PPO updates it triggered."""

    returns: list[float]
    collisions: int
    central_stats: UpdateStats | None = None
    local_stats: UpdateStats | None = None

    @property
    def mean_reward_per_agent(self) -> float:
        return float(np.mean(self.returns))


def action_encoding_dim(env: NavigationEnv) -> int:
    return env.action_dim


def encode_action(action: int | np.ndarray, continuous: bool) -> np.ndarray:
    """One-hot for discrete actions, raw force vector for continuous ones."""
    if continuous:
        return np.asarray(action, dtype=np.float64)
    encoding = np.zeros(N_DISCRETE_ACTIONS)
    encoding[int(action)] = 1.0  # type: ignore[arg-type]
    return encoding


def build_global_input(
    observations: list[np.ndarray],
    previous_actions: list[int | np.ndarray] | None,
    t: int,
    continuous: bool = False,
) -> GlobalInput:
    """Concatenate observations (agent order) with previous-action encodings.

    Args:
        observations: One local observation per agent
        previous_actions: Actions taken at t-1 (ignored at t=1)
        t: 1-based time step
        continuous: Encode actions raw instead of one-hot

    Returns:
        GlobalInput of length n * obs_dim + n * action_enc_dim
    """
    n = len(observations)
    obs_dim = len(observations[0])
    if any(len(o) != obs_dim for o in observations):
        raise ValueError("Observations differ in length")
    enc_dim = 2 if continuous else N_DISCRETE_ACTIONS

    if t <= 1 or previous_actions is None:
        encodings = np.zeros(n * enc_dim)
    else:
        if len(previous_actions) != n:
            raise ValueError(f"Expected {n} previous actions, got {len(previous_actions)}")
        encodings = np.concatenate([encode_action(a, continuous) for a in previous_actions])
        if len(encodings) != n * enc_dim:
            raise ValueError("Previous action encodings have the wrong length")

    values = np.concatenate([*observations, encodings])
    return GlobalInput(values=values, n_agents=n, obs_dim=obs_dim, action_enc_dim=enc_dim)


def emit_messages(
    central: ActorCritic,
    g: GlobalInput,
    rng: np.random.Generator,
    stochastic: bool = True,
) -> tuple[list[Message], np.ndarray, float]:
    """Produce one message block per agent from a single central forward pass.

    Components are sampled from the diagonal Gaussian around the tanh means (or
    set to the means when ``stochastic`` is False) and clipped to [-1, 1].

    Returns:
        Tuple of (messages, per-block log probabilities, central value V(g))
    """
    if central.log_std is None or central.block_size is None:
        raise ValueError("Central agent must be a block-factored Gaussian policy")
    m = central.block_size
    means = forward(central.actor, g.values)
    if len(means) != g.n_agents * m:
        raise ValueError(f"Central output length {len(means)} != {g.n_agents} x {m}")

    if stochastic:
        raw = means + np.exp(central.log_std) * rng.standard_normal(means.shape)
    else:
        raw = means
    sampled = np.clip(raw, -1.0, 1.0)
    component_log_probs = gaussian_component_log_probs(means, central.log_std, sampled)

    blocks = sampled.reshape(g.n_agents, m)
    log_probs = component_log_probs.reshape(g.n_agents, m).sum(axis=1)
    messages = [Message(values=blocks[i].copy(), recipient=i) for i in range(g.n_agents)]
    value = float(central.value(g.values))
    return messages, log_probs, value


def random_messages(n_agents: int, message_length: int, rng: np.random.Generator) -> list[Message]:
    """Fresh i.i.d. Uniform[-1, 1]^m message for every agent."""
    draws = rng.uniform(-1.0, 1.0, size=(n_agents, message_length))
    return [Message(values=draws[i], recipient=i) for i in range(n_agents)]


def augment_observation(observation: np.ndarray, message: Message | None) -> np.ndarray:
    """Local learner input: observation followed by its message (if any)."""
    if message is None:
        return np.asarray(observation, dtype=np.float64)
    return np.concatenate([observation, message.values])


def joint_observation(observations: list[np.ndarray], agent: int) -> np.ndarray:
    """Joint observation for the centralized baseline: own block first, then the rest in order."""
    others = [o for j, o in enumerate(observations) if j != agent]
    return np.concatenate([observations[agent], *others])


def assign_central_rewards(local_rewards: list[float]) -> list[float]:
    """Message stream i earns the reward local agent i received."""
    return [float(r) for r in local_rewards]


def local_input_dim(mode: RunMode, obs_dim: int, n_agents: int, message_length: int) -> int:
    if mode == RunMode.CENTRALIZED:
        return n_agents * obs_dim
    if mode.uses_messages:
        return obs_dim + message_length
    return obs_dim


def central_input_dim(n_agents: int, obs_dim: int, action_enc_dim: int) -> int:
    return n_agents * obs_dim + n_agents * action_enc_dim


def build_policy_bundle(
    mode: RunMode,
    env: NavigationEnv,
    message_length: int,
    streams: RngStreams,
    hidden_size: int = 64,
) -> PolicyBundle:
    """Initialize networks for ``mode``; the central agent exists only in hammer mode."""
    if mode.uses_messages and message_length <= 0:
        raise ValueError(f"message_length must be positive in {mode} mode")
    n, obs_dim = env.n_agents, env.obs_dim
    kind: PolicyKind = "gaussian" if env.continuous else "categorical"

    central = None
    if mode == RunMode.HAMMER:
        central = ActorCritic.build(
            central_input_dim(n, obs_dim, action_encoding_dim(env)),
            n * message_length,
            "gaussian",
            streams.central,
            hidden_size=hidden_size,
            block_size=message_length,
        )
    local = ActorCritic.build(
        local_input_dim(mode, obs_dim, n, message_length),
        env.action_dim,
        kind,
        streams.local,
        hidden_size=hidden_size,
    )
    return PolicyBundle(local=local, central=central)


def validate_bundle(
    bundle: PolicyBundle, env: NavigationEnv, mode: RunMode, message_length: int
) -> None:
    """Check that every network matches the mode and environment dimensions."""
    n, obs_dim = env.n_agents, env.obs_dim
    expected_local = local_input_dim(mode, obs_dim, n, message_length)
    if bundle.local.input_dim != expected_local:
        raise ValueError(
            f"Local network input {bundle.local.input_dim} != {expected_local} for {mode} mode"
        )
    if bundle.local.actor.output_dim != env.action_dim:
        raise ValueError("Local network output does not match the action space")
    if mode == RunMode.HAMMER:
        if bundle.central is None:
            raise ValueError("hammer mode requires a central agent")
        expected_central = central_input_dim(n, obs_dim, action_encoding_dim(env))
        if bundle.central.input_dim != expected_central:
            raise ValueError(
                f"Central network input {bundle.central.input_dim} != {expected_central}"
            )
        if bundle.central.actor.output_dim != n * message_length:
            raise ValueError("Central network output must be n_agents x message_length")
    elif bundle.central is not None:
        raise ValueError(f"{mode} mode must not carry a central agent")


def local_inputs_for(
    mode: RunMode, observations: list[np.ndarray], messages: list[Message] | None
) -> np.ndarray:
    """Stack every agent's local network input (one row per agent)."""
    n = len(observations)
    if mode == RunMode.CENTRALIZED:
        return np.stack([joint_observation(observations, i) for i in range(n)])
    return np.stack(
        [augment_observation(observations[i], messages[i] if messages else None) for i in range(n)]
    )


def bootstrap_values(
    bundle: PolicyBundle,
    mode: RunMode,
    streams: RngStreams,
    next_observations: list[np.ndarray],
    actions: list[int | np.ndarray],
    t_next: int,
    continuous: bool,
    message_length: int,
) -> tuple[np.ndarray, float]:
    """Critic values of the state after a cut: V(s_{t+1}) per local stream and V_c(g_{t+1}).

    Next-step messages are the central policy means in hammer mode and the mean
    of the uniform message distribution (zero) in random_message mode; no draw is
    taken from ``streams``.
    """
    n = len(next_observations)
    messages: list[Message] | None = None
    central_value = 0.0
    if mode == RunMode.HAMMER:
        assert bundle.central is not None
        g = build_global_input(next_observations, actions, t_next, continuous)
        messages, _, central_value = emit_messages(
            bundle.central, g, streams.central, stochastic=False
        )
    elif mode == RunMode.RANDOM_MESSAGE:
        messages = [Message(values=np.zeros(message_length), recipient=i) for i in range(n)]
    local_values = bundle.local.value(local_inputs_for(mode, next_observations, messages))
    return local_values, central_value


def run_episode(
    bundle: PolicyBundle,
    env: NavigationEnv,
    mode: RunMode,
    streams: RngStreams,
    buffers: Buffers | None,
    hp_central: PpoHyperparams,
    hp_local: PpoHyperparams,
    message_length: int = 0,
    stochastic: bool = True,
    recorder: TrajectoryRecorder | None = None,
    episode: int = 0,
) -> EpisodeSummary:
    """Play one episode, storing experience and updating whenever a buffer fills.

    Args:
        bundle: Central and shared local actor-critics
        env: Environment (reset here)
        mode: Training condition
        streams: Named random generators
        buffers: B and B'; None plays without learning (evaluation)
        hp_central: PPO hyperparameters of the central agent
        hp_local: PPO hyperparameters of the local learners
        message_length: Message length m (hammer / random_message)
        stochastic: Sample actions and messages instead of taking means
        recorder: Optional trajectory dump
        episode: Episode index for the trajectory dump

    Returns:
        EpisodeSummary with per-agent return sums and collision count
    """
    validate_bundle(bundle, env, mode, message_length)
    if buffers is not None and mode == RunMode.HAMMER and buffers.central is None:
        raise ValueError("hammer mode needs a central buffer")

    n = env.n_agents
    observations = env.reset(streams.env)
    assert env.world is not None
    if recorder is not None:
        recorder.start_episode(episode, env.world)

    returns = np.zeros(n)
    collisions = 0
    previous_actions: list[int | np.ndarray] | None = None
    summary = EpisodeSummary(returns=[], collisions=0)
    t = 0
    done = False

    while not done:
        t += 1
        messages: list[Message] | None = None
        central_log_probs = np.zeros(0)
        central_value = 0.0
        g: GlobalInput | None = None

        if mode == RunMode.HAMMER:
            assert bundle.central is not None
            g = build_global_input(observations, previous_actions, t, env.continuous)
            messages, central_log_probs, central_value = emit_messages(
                bundle.central, g, streams.central, stochastic
            )
        elif mode == RunMode.RANDOM_MESSAGE:
            messages = random_messages(n, message_length, streams.messages)

        local_inputs = local_inputs_for(mode, observations, messages)

        actions, local_log_probs, local_values = bundle.local.act_batch(
            local_inputs, streams.local, stochastic
        )
        result = env.act(actions if env.continuous else np.asarray(actions))
        if recorder is not None:
            recorder.record(env.world, actions, result)

        done = result.done
        returns += np.asarray(result.rewards)
        collisions += result.collisions

        if buffers is not None:
            for i in range(n):
                buffers.local.add(
                    Transition(
                        observation=local_inputs[i],
                        action=actions[i],
                        log_prob_old=float(local_log_probs[i]),
                        reward=result.rewards[i],
                        done=done,
                        value_estimate=float(local_values[i]),
                        stream=i,
                    )
                )
            if mode == RunMode.HAMMER and buffers.central is not None:
                assert g is not None and messages is not None
                for i, reward in enumerate(assign_central_rewards(result.rewards)):
                    buffers.central.add(
                        Transition(
                            observation=g.values,
                            action=messages[i].values,
                            log_prob_old=float(central_log_probs[i]),
                            reward=reward,
                            done=done,
                            value_estimate=central_value,
                            stream=i,
                        )
                    )

            central_ready = buffers.central is not None and buffers.central.is_ready()
            local_ready = buffers.local.is_ready()
            # cut episodes need V(s_{t+1}) under the pre-update parameters
            if (central_ready or local_ready) and not done:
                next_local, next_central = bootstrap_values(
                    bundle,
                    mode,
                    streams,
                    result.observations,
                    actions,
                    t + 1,
                    env.continuous,
                    message_length,
                )
                for i in range(n):
                    buffers.local.set_next_value(i, float(next_local[i]))
                    if buffers.central is not None:
                        buffers.central.set_next_value(i, next_central)

            if central_ready:
                assert bundle.central is not None and buffers.central is not None
                summary.central_stats = ppo_update(
                    bundle.central, buffers.central, hp_central, streams.central
                )
            if local_ready:
                summary.local_stats = ppo_update(
                    bundle.local, buffers.local, hp_local, streams.local
                )

        observations = result.observations
        previous_actions = actions

    summary.returns = [float(r) for r in returns]
    summary.collisions = collisions
    return summary
