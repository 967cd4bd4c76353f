"""Tests for Adam, gradient clipping and checkpoints."""

from pathlib import Path

import numpy as np
import pytest

from python.models.checkpoint import (
    adam_state,
    load_checkpoint,
    mlp_state,
    restore_adam,
    restore_mlp,
    save_checkpoint,
)
from python.models.mlp import build_mlp
from python.models.optim import AdamState, adam_step, clip_grad_norm


class TestAdamStep:
    """Test the Adam update."""

    def test_zero_gradient_leaves_fresh_parameters(self) -> None:
        """Test that a zero gradient does not move parameters from a fresh state."""
        params = [np.array([1.0, -2.0])]
        state = AdamState.zeros_like(params)
        adam_step(params, [np.zeros(2)], state, lr=0.1)
        np.testing.assert_array_equal(params[0], [1.0, -2.0])

    def test_zero_gradient_decays_moments(self) -> None:
        """Test that a zero gradient decays both moment estimates."""
        params = [np.array([1.0, -2.0])]
        state = AdamState.zeros_like(params)
        state.first_moment[0][:] = [0.5, 0.5]
        state.second_moment[0][:] = [1.0, 1.0]
        adam_step(params, [np.zeros(2)], state, lr=0.1)
        np.testing.assert_allclose(state.first_moment[0], [0.45, 0.45])
        np.testing.assert_allclose(state.second_moment[0], [0.999, 0.999])
        assert state.step_count == 1

    def test_first_step_moves_by_lr_times_sign(self) -> None:
        """Test that the first bias-corrected step is about -lr * sign(g)."""
        params = [np.zeros(3)]
        state = AdamState.zeros_like(params)
        adam_step(params, [np.array([3.0, -0.01, 250.0])], state, lr=0.001)
        np.testing.assert_allclose(params[0], [-0.001, 0.001, -0.001], rtol=1e-5)

    def test_constant_gradient_moves_monotonically(self) -> None:
        """Test that a constant positive gradient keeps decreasing the parameter."""
        params = [np.array([0.0])]
        state = AdamState.zeros_like(params)
        history = []
        for _ in range(50):
            adam_step(params, [np.array([0.7])], state, lr=0.01)
            history.append(float(params[0][0]))
        assert all(b < a for a, b in zip(history, history[1:], strict=False))

    def test_zero_lr_is_bit_identical(self) -> None:
        """Test that lr=0 leaves parameters bit-identical."""
        params = [np.random.default_rng(0).standard_normal((3, 2))]
        before = params[0].tobytes()
        state = AdamState.zeros_like(params)
        adam_step(params, [np.ones((3, 2))], state, lr=0.0)
        assert params[0].tobytes() == before
        assert state.step_count == 1

    def test_non_finite_gradient_names_layer(self) -> None:
        """Test that a NaN gradient raises with the layer name."""
        params = [np.zeros(2), np.zeros(2)]
        state = AdamState.zeros_like(params, ["actor/W0", "actor/b0"])
        with pytest.raises(FloatingPointError, match="actor/b0"):
            adam_step(params, [np.zeros(2), np.array([np.nan, 0.0])], state, lr=0.1)
        assert state.step_count == 0

    def test_shape_mismatch_raises(self) -> None:
        """Test that gradient shapes must match parameters."""
        params = [np.zeros(2)]
        with pytest.raises(ValueError, match="shape"):
            adam_step(params, [np.zeros(3)], AdamState.zeros_like(params), lr=0.1)


class TestClipGradNorm:
    """Test global norm clipping."""

    def test_scales_down_large_gradients(self) -> None:
        """Test that gradients above the limit are rescaled to it."""
        grads = [np.array([3.0]), np.array([4.0])]
        norm = clip_grad_norm(grads, 1.0)
        assert norm == pytest.approx(5.0)
        total = np.sqrt(sum(float(np.sum(g * g)) for g in grads))
        assert total == pytest.approx(1.0, abs=1e-9)

    def test_leaves_small_gradients(self) -> None:
        """Test that gradients under the limit are untouched."""
        grads = [np.array([0.3, 0.4])]
        clip_grad_norm(grads, 1.0)
        np.testing.assert_array_equal(grads[0], [0.3, 0.4])


class TestCheckpoint:
    """Test the npz checkpoint container."""

    def test_round_trip_is_bit_exact(self, tmp_path: Path) -> None:
        """Test that saved networks and Adam state load back bit for bit."""
        rng = np.random.default_rng(5)
        net = build_mlp(4, 3, rng, hidden_size=8)
        state = AdamState.zeros_like(net.parameters(), net.parameter_names())
        grads = [rng.standard_normal(p.shape) for p in net.parameters()]
        adam_step(net.parameters(), grads, state, lr=0.01)

        arrays = mlp_state(net, "local/actor")
        arrays.update(adam_state(state, "local/adam"))
        path = tmp_path / "ckpt" / "checkpoint.npz"
        save_checkpoint(path, arrays)

        fresh = build_mlp(4, 3, np.random.default_rng(99), hidden_size=8)
        fresh_state = AdamState.zeros_like(fresh.parameters(), fresh.parameter_names())
        loaded = load_checkpoint(path)
        restore_mlp(fresh, loaded, "local/actor")
        restore_adam(fresh_state, loaded, "local/adam")

        for a, b in zip(net.parameters(), fresh.parameters(), strict=True):
            assert a.tobytes() == b.tobytes()
        for a, b in zip(state.second_moment, fresh_state.second_moment, strict=True):
            assert a.tobytes() == b.tobytes()
        assert fresh_state.step_count == 1

    def test_missing_file_raises(self, tmp_path: Path) -> None:
        """Test that loading a missing checkpoint raises FileNotFoundError."""
        with pytest.raises(FileNotFoundError):
            load_checkpoint(tmp_path / "nope.npz")
