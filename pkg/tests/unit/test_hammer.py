"""Tests for the central message agent and the episode loop."""

from typing import Any
from unittest.mock import patch

import numpy as np
import pytest

from python.agents.hammer import (
    Buffers,
    EpisodeSummary,
    GlobalInput,
    Message,
    PolicyBundle,
    RunMode,
    assign_central_rewards,
    augment_observation,
    build_global_input,
    build_policy_bundle,
    emit_messages,
    joint_observation,
    random_messages,
    run_episode,
    validate_bundle,
)
from python.agents.ppo import ActorCritic, PpoHyperparams, RolloutBuffer, UpdateStats
from python.envs.navigation import NavigationEnv, StepResult
from python.experiments.seeding import RngStreams
from python.models.distributions import DiagGaussianDist, gaussian_log_prob
from python.models.mlp import forward


def make_bundle(
    mode: RunMode, n_agents: int = 3, message_length: int = 4, continuous: bool = False
) -> tuple[PolicyBundle, NavigationEnv, RngStreams]:
    env = NavigationEnv(n_agents, continuous=continuous)
    streams = RngStreams.from_seed(11)
    bundle = build_policy_bundle(mode, env, message_length, streams, hidden_size=16)
    return bundle, env, streams


def large_buffers(central: bool = True) -> Buffers:
    return Buffers(
        local=RolloutBuffer(4000, "local"),
        central=RolloutBuffer(2000, "central") if central else None,
    )


def play(
    bundle: PolicyBundle,
    env: NavigationEnv,
    mode: RunMode,
    streams: RngStreams,
    buffers: Buffers | None,
    **kwargs: Any,
) -> EpisodeSummary:
    central, local = PpoHyperparams.central(), PpoHyperparams.local()
    return run_episode(bundle, env, mode, streams, buffers, central, local, **kwargs)


def sample_global_input(streams: RngStreams, n_agents: int = 3) -> GlobalInput:
    observations = NavigationEnv(n_agents).reset(streams.env)
    return build_global_input(observations, [0] * n_agents, t=2)


class TestGlobalInput:
    """Test the central agent's input layout."""

    def test_first_step_has_zero_action_slots(self) -> None:
        """Test length 57 for N=3 with the last 15 entries zero at t=1."""
        observations = NavigationEnv(3).reset(np.random.default_rng(0))
        g = build_global_input(observations, None, t=1)
        assert len(g) == 3 * 14 + 3 * 5 == 57
        np.testing.assert_array_equal(g.values[-15:], np.zeros(15))
        np.testing.assert_array_equal(g.values[:14], observations[0])

    def test_previous_action_is_one_hot(self) -> None:
        """Test that action 2 of agent 1 lands in agent 1's slot."""
        observations = [np.zeros(14) for _ in range(3)]
        g = build_global_input(observations, [0, 2, 4], t=5)
        slots = g.values[42:].reshape(3, 5)
        np.testing.assert_array_equal(slots[1], [0, 0, 1, 0, 0])
        np.testing.assert_array_equal(slots.sum(axis=1), np.ones(3))

    def test_permuting_agents_permutes_blocks(self) -> None:
        """Test that agent order is kept as given."""
        rng = np.random.default_rng(1)
        observations = [rng.normal(size=14) for _ in range(3)]
        actions = [1, 3, 4]
        order = [2, 0, 1]
        g = build_global_input(observations, actions, t=2)
        p = build_global_input([observations[i] for i in order], [actions[i] for i in order], t=2)
        obs_blocks = g.values[:42].reshape(3, 14)
        act_blocks = g.values[42:].reshape(3, 5)
        np.testing.assert_array_equal(p.values[:42].reshape(3, 14), obs_blocks[order])
        np.testing.assert_array_equal(p.values[42:].reshape(3, 5), act_blocks[order])

    def test_continuous_actions_inserted_raw(self) -> None:
        """Test raw force vectors for the continuous variant."""
        observations = [np.zeros(10) for _ in range(2)]
        g = build_global_input(
            observations, [np.array([0.5, -0.25]), np.array([1.0, 0.0])], t=3, continuous=True
        )
        np.testing.assert_array_equal(g.values[20:], [0.5, -0.25, 1.0, 0.0])

    def test_mismatched_lengths_raise(self) -> None:
        """Test observation and action count validation."""
        with pytest.raises(ValueError, match="differ in length"):
            build_global_input([np.zeros(14), np.zeros(10)], None, t=1)
        with pytest.raises(ValueError, match="previous actions"):
            build_global_input([np.zeros(14)] * 3, [0, 1], t=2)


class TestEmitMessages:
    """Test message generation by the central agent."""

    def test_three_messages_of_length_four(self) -> None:
        """Test the output split for n=3, m=4."""
        bundle, _, streams = make_bundle(RunMode.HAMMER)
        assert bundle.central is not None
        assert bundle.central.actor.output_dim == 12
        messages, log_probs, value = emit_messages(
            bundle.central, sample_global_input(streams), streams.central
        )
        assert [m.recipient for m in messages] == [0, 1, 2]
        assert all(len(m.values) == 4 for m in messages)
        assert log_probs.shape == (3,)
        assert np.isfinite(value)

    def test_deterministic_messages_are_tanh_means(self) -> None:
        """Test that mean messages are repeatable and equal the actor output."""
        bundle, _, streams = make_bundle(RunMode.HAMMER)
        assert bundle.central is not None
        g = sample_global_input(streams)
        first, _, _ = emit_messages(bundle.central, g, streams.central, stochastic=False)
        second, _, _ = emit_messages(bundle.central, g, streams.central, stochastic=False)
        means = forward(bundle.central.actor, g.values)
        np.testing.assert_array_equal(np.concatenate([m.values for m in first]), means)
        for a, b in zip(first, second, strict=True):
            assert a.values.tobytes() == b.values.tobytes()

    def test_zero_parameters_give_zero_means(self) -> None:
        """Test that an all-zero central actor emits zero messages."""
        bundle, _, streams = make_bundle(RunMode.HAMMER)
        assert bundle.central is not None
        for p in bundle.central.actor.parameters():
            p[...] = 0.0
        messages, _, _ = emit_messages(
            bundle.central, sample_global_input(streams), streams.central, stochastic=False
        )
        assert all(np.all(m.values == 0.0) for m in messages)

    def test_sampled_messages_stay_in_bounds(self) -> None:
        """Test componentwise bounds after sampling with a wide policy."""
        bundle, _, streams = make_bundle(RunMode.HAMMER)
        assert bundle.central is not None and bundle.central.log_std is not None
        bundle.central.log_std[...] = 1.0
        g = sample_global_input(streams)
        for _ in range(200):
            messages, _, _ = emit_messages(bundle.central, g, streams.central)
            for m in messages:
                assert np.all(np.abs(m.values) <= 1.0)

    def test_block_log_probs_sum_to_joint_density(self) -> None:
        """Test the per-block log-probability decomposition."""
        bundle, _, streams = make_bundle(RunMode.HAMMER)
        assert bundle.central is not None and bundle.central.log_std is not None
        g = sample_global_input(streams)
        messages, log_probs, _ = emit_messages(bundle.central, g, streams.central)
        full = np.concatenate([m.values for m in messages])
        means = forward(bundle.central.actor, g.values)
        joint = gaussian_log_prob(DiagGaussianDist(means, bundle.central.log_std), full)
        assert abs(float(log_probs.sum()) - joint) < 1e-9

    def test_non_block_policy_rejected(self) -> None:
        """Test that a plain categorical actor cannot emit messages."""
        rng = np.random.default_rng(2)
        policy = ActorCritic.build(57, 5, "categorical", rng, hidden_size=8)
        with pytest.raises(ValueError, match="block-factored"):
            emit_messages(policy, sample_global_input(RngStreams.from_seed(0)), rng)


class TestMessageRouting:
    """Test observation augmentation, random messages and reward copies."""

    def test_augmented_length(self) -> None:
        """Test obs_dim 14 plus m 4."""
        message = Message(values=np.full(4, 0.5), recipient=0)
        augmented = augment_observation(np.arange(14.0), message)
        assert len(augmented) == 18
        np.testing.assert_array_equal(augmented[:14], np.arange(14.0))

    def test_no_message_keeps_observation(self) -> None:
        """Test the independent-mode input."""
        assert len(augment_observation(np.zeros(14), None)) == 14

    def test_random_messages_uniform_and_fresh(self) -> None:
        """Test bounds and per-call regeneration."""
        rng = np.random.default_rng(3)
        first = random_messages(3, 4, rng)
        second = random_messages(3, 4, rng)
        assert all(np.all(np.abs(m.values) <= 1.0) for m in first + second)
        assert not np.array_equal(first[0].values, second[0].values)

    def test_joint_observation_puts_own_block_first(self) -> None:
        """Test the centralized-baseline layout."""
        observations = [np.full(2, float(i)) for i in range(3)]
        np.testing.assert_array_equal(joint_observation(observations, 1), [1, 1, 0, 0, 2, 2])

    def test_central_rewards_copy_local_rewards(self) -> None:
        """Test shared and localized reward copies."""
        assert assign_central_rewards([-5.0, -5.0, -5.0]) == [-5.0, -5.0, -5.0]
        assert assign_central_rewards([0.0, -1.0]) == [0.0, -1.0]


class TestPolicyBundle:
    """Test network construction per mode."""

    @pytest.mark.parametrize(
        ("mode", "local_input"),
        [
            (RunMode.HAMMER, 18),
            (RunMode.INDEPENDENT, 14),
            (RunMode.RANDOM_MESSAGE, 18),
            (RunMode.CENTRALIZED, 42),
        ],
    )
    def test_local_input_width(self, mode: RunMode, local_input: int) -> None:
        """Test the per-mode local network input."""
        bundle, _, _ = make_bundle(mode)
        assert bundle.local.input_dim == local_input
        assert (bundle.central is not None) == (mode == RunMode.HAMMER)

    def test_validate_rejects_wrong_dimensions(self) -> None:
        """Test that a bundle built for another mode is refused."""
        bundle, env, _ = make_bundle(RunMode.INDEPENDENT)
        with pytest.raises(ValueError, match="Local network input"):
            validate_bundle(bundle, env, RunMode.HAMMER, 4)

    def test_validate_rejects_central_outside_hammer(self) -> None:
        """Test mode isolation."""
        bundle, env, _ = make_bundle(RunMode.HAMMER)
        with pytest.raises(ValueError, match="must not carry"):
            validate_bundle(bundle, env, RunMode.RANDOM_MESSAGE, 4)

    def test_message_modes_need_length(self) -> None:
        """Test that message_length 0 is refused in message modes."""
        with pytest.raises(ValueError, match="message_length"):
            build_policy_bundle(
                RunMode.HAMMER, NavigationEnv(3), 0, RngStreams.from_seed(0), hidden_size=8
            )


class TestRunEpisode:
    """Test one episode of the training loop."""

    def test_hammer_fills_both_buffers(self) -> None:
        """Test that B and B' each grow by 3 x 25 transitions."""
        bundle, env, streams = make_bundle(RunMode.HAMMER)
        buffers = large_buffers()
        summary = play(bundle, env, RunMode.HAMMER, streams, buffers, message_length=4)
        assert buffers.central is not None
        assert len(buffers.central) == 75
        assert len(buffers.local) == 75
        assert len(summary.returns) == 3
        assert summary.central_stats is None and summary.local_stats is None

    def test_central_stream_rewards_match_local(self) -> None:
        """Test that stream i of B carries agent i's reward at every step."""
        bundle, env, streams = make_bundle(RunMode.HAMMER)
        buffers = large_buffers()
        play(bundle, env, RunMode.HAMMER, streams, buffers, message_length=4)
        assert buffers.central is not None
        central = [(t.stream, t.reward) for t in buffers.central.transitions]
        local = [(t.stream, t.reward) for t in buffers.local.transitions]
        assert sorted(central) == sorted(local)
        assert all(np.all(np.abs(t.action) <= 1.0) for t in buffers.central.transitions)

    def test_independent_never_touches_central_buffer(self) -> None:
        """Test that B stays empty outside hammer mode."""
        bundle, env, streams = make_bundle(RunMode.INDEPENDENT)
        buffers = large_buffers()
        play(bundle, env, RunMode.INDEPENDENT, streams, buffers)
        assert buffers.central is not None and len(buffers.central) == 0
        assert len(buffers.local) == 75

    def test_centralized_inputs_are_joint(self) -> None:
        """Test local inputs of length 42 for N=3."""
        bundle, env, streams = make_bundle(RunMode.CENTRALIZED)
        buffers = large_buffers(central=False)
        play(bundle, env, RunMode.CENTRALIZED, streams, buffers)
        assert all(len(t.observation) == 42 for t in buffers.local.transitions)

    def test_mid_episode_update_keeps_sharing(self) -> None:
        """Test that a filled buffer triggers an update of the one shared local network."""
        bundle, env, streams = make_bundle(RunMode.RANDOM_MESSAGE)
        shared = bundle.local
        buffers = Buffers(local=RolloutBuffer(30, "local"))
        hp = PpoHyperparams(lr=1e-2, batch_size=30, minibatch_size=10)
        summary = run_episode(
            bundle, env, RunMode.RANDOM_MESSAGE, streams, buffers, hp, hp, message_length=4
        )
        assert summary.local_stats is not None
        assert bundle.local is shared
        # 75 transitions, updates at 30 and 60
        assert len(buffers.local) == 15

    def test_cut_batch_bootstraps_from_next_state(self) -> None:
        """Test that a mid-episode update bootstraps each stream from V(s_{t+1})."""
        bundle, env, streams = make_bundle(RunMode.RANDOM_MESSAGE)
        buffers = Buffers(local=RolloutBuffer(30, "local"))
        hp = PpoHyperparams(batch_size=30, minibatch_size=10)
        results: list[StepResult] = []
        real_act = env.act

        def recording_act(actions: Any) -> StepResult:
            result = real_act(actions)
            results.append(result)
            return result

        seen: list[tuple[int, dict[int, float]]] = []

        def capture(_: ActorCritic, buffer: RolloutBuffer, *args: Any) -> UpdateStats:
            assert not buffer.transitions[-1].done
            seen.append((len(results), dict(buffer.next_values)))
            buffer.clear()
            return UpdateStats()

        with (
            patch.object(env, "act", side_effect=recording_act),
            patch("python.agents.hammer.ppo_update", side_effect=capture),
        ):
            run_episode(
                bundle, env, RunMode.RANDOM_MESSAGE, streams, buffers, hp, hp, message_length=4
            )

        assert [step for step, _ in seen] == [10, 20]
        for step, next_values in seen:
            next_observations = results[step - 1].observations
            next_inputs = np.stack(
                [
                    augment_observation(obs, Message(values=np.zeros(4), recipient=i))
                    for i, obs in enumerate(next_observations)
                ]
            )
            expected = bundle.local.value(next_inputs)
            np.testing.assert_allclose([next_values[i] for i in range(3)], expected)

    def test_evaluation_without_buffers(self) -> None:
        """Test that passing no buffers plays without learning."""
        bundle, env, streams = make_bundle(RunMode.HAMMER)
        before = [p.copy() for p in bundle.local.parameters()]
        summary = play(
            bundle, env, RunMode.HAMMER, streams, None, message_length=4, stochastic=False
        )
        assert summary.collisions >= 0
        for a, b in zip(before, bundle.local.parameters(), strict=True):
            np.testing.assert_array_equal(a, b)

    def test_same_seed_same_episode(self) -> None:
        """Test determinism of a full episode."""
        results = []
        for _ in range(2):
            bundle, env, streams = make_bundle(RunMode.HAMMER)
            summary = play(bundle, env, RunMode.HAMMER, streams, large_buffers(), message_length=4)
            results.append(summary.returns)
        assert results[0] == results[1]

    def test_continuous_variant_runs(self) -> None:
        """Test hammer mode with raw force actions."""
        bundle, env, streams = make_bundle(RunMode.HAMMER, n_agents=2, continuous=True)
        buffers = large_buffers()
        summary = play(bundle, env, RunMode.HAMMER, streams, buffers, message_length=4)
        assert len(summary.returns) == 2
        assert len(buffers.local) == 50
