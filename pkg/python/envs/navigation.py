"""Cooperative navigation particle world.

N agents and L fixed landmarks live on an unbounded plane. Agents start at
uniform random positions in [-1, 1]^2 with zero velocity, move by damped point
mass kinematics, and are rewarded for covering every landmark without colliding.
Two reward/action structures are supported:

- discrete: 5 cardinal actions, one team reward shared by all agents
- continuous: 2-D forces in [-1, 1]^2, localized reward per agent (agent i
  is responsible for landmark i)
"""

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

# action index -> unit force: motionless, +x, -x, +y, -y
ACTION_FORCES = np.array(
    [[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]], dtype=np.float64
)
N_DISCRETE_ACTIONS = len(ACTION_FORCES)
CONTINUOUS_ACTION_DIM = 2


@dataclass(frozen=True)
class PhysicsParams:
    """Integration and reward constants of the particle world."""

    dt: float = 0.1
    damping: float = 0.25
    force_scale: float = 5.0
    agent_radius: float = 0.15
    mass: float = 1.0
    episode_length: int = 25
    collision_penalty: float = 1.0

    def __post_init__(self) -> None:
        for name in ("dt", "damping", "force_scale", "agent_radius", "mass", "collision_penalty"):
            if getattr(self, name) <= 0:
                raise ValueError(f"Physics parameter {name} must be positive")
        if self.episode_length <= 0:
            raise ValueError("episode_length must be positive")


@dataclass
class NavWorld:
    """Complete simulator state."""

    n_agents: int
    n_landmarks: int
    agent_pos: np.ndarray
    agent_vel: np.ndarray
    landmark_pos: np.ndarray
    t: int = 0
    params: PhysicsParams = field(default_factory=PhysicsParams)

    @property
    def done(self) -> bool:
        return self.t >= self.params.episode_length


@dataclass
class StepResult:
    """Outcome of one environment step."""

    observations: list[np.ndarray]
    rewards: list[float]
    done: bool
    collisions: int


def observation_dim(n_agents: int, n_landmarks: int) -> int:
    """Length of one local observation: vel, pos, landmark offsets, other-agent offsets."""
    return 4 + 2 * n_landmarks + 2 * (n_agents - 1)


def collision_count(world: NavWorld) -> int:
    """Number of unordered agent pairs closer than two radii (strict)."""
    threshold = 2.0 * world.params.agent_radius
    return sum(
        1
        for i, j in combinations(range(world.n_agents), 2)
        if np.linalg.norm(world.agent_pos[i] - world.agent_pos[j]) < threshold
    )


def collisions_per_agent(world: NavWorld) -> np.ndarray:
    """Number of colliding partners of every agent."""
    threshold = 2.0 * world.params.agent_radius
    counts = np.zeros(world.n_agents, dtype=np.int64)
    for i, j in combinations(range(world.n_agents), 2):
        if np.linalg.norm(world.agent_pos[i] - world.agent_pos[j]) < threshold:
            counts[i] += 1
            counts[j] += 1
    return counts


def team_reward(world: NavWorld) -> float:
    """Negative sum over landmarks of the closest agent distance, minus collision penalties."""
    offsets = world.landmark_pos[:, None, :] - world.agent_pos[None, :, :]
    distances = np.linalg.norm(offsets, axis=-1)
    coverage = float(np.sum(np.min(distances, axis=1)))
    return -coverage - world.params.collision_penalty * collision_count(world)


def local_rewards(world: NavWorld) -> list[float]:
    """Per-agent reward: distance to the agent's own landmark plus its collisions."""
    distances = np.linalg.norm(world.agent_pos - world.landmark_pos[: world.n_agents], axis=-1)
    penalties = world.params.collision_penalty * collisions_per_agent(world)
    return [float(-d - c) for d, c in zip(distances, penalties, strict=True)]


def observe(world: NavWorld, agent: int) -> np.ndarray:
    """Local observation of one agent (own velocity and position, relative positions)."""
    own = world.agent_pos[agent]
    landmark_rel = (world.landmark_pos - own).reshape(-1)
    others = [world.agent_pos[j] - own for j in range(world.n_agents) if j != agent]
    others_rel = np.concatenate(others) if others else np.zeros(0)
    return np.concatenate([world.agent_vel[agent], own, landmark_rel, others_rel])


class NavigationEnv:
    """Seedable cooperative navigation environment.

    Example:
        >>> env = NavigationEnv(n_agents=3)
        >>> observations = env.reset(np.random.default_rng(0))
        >>> result = env.step([0, 1, 2])
    """

    def __init__(
        self,
        n_agents: int = 3,
        n_landmarks: int | None = None,
        params: PhysicsParams | None = None,
        continuous: bool = False,
    ) -> None:
        """
        Initialize the environment (call ``reset`` before stepping).

        Args:
            n_agents: Number of agents
            n_landmarks: Number of landmarks (default: n_agents)
            params: Physics constants (default: PhysicsParams())
            continuous: Use 2-D force actions and localized rewards
        """
        if n_agents <= 0:
            raise ValueError("n_agents must be positive")
        self.n_agents = n_agents
        self.n_landmarks = n_landmarks if n_landmarks is not None else n_agents
        if self.n_landmarks <= 0:
            raise ValueError("n_landmarks must be positive")
        if continuous and self.n_landmarks < n_agents:
            raise ValueError("Continuous variant assigns one landmark per agent")
        self.params = params or PhysicsParams()
        self.continuous = continuous
        self.world: NavWorld | None = None

    @property
    def obs_dim(self) -> int:
        return observation_dim(self.n_agents, self.n_landmarks)

    @property
    def action_dim(self) -> int:
        """Number of discrete actions, or the force dimension for the continuous variant."""
        return CONTINUOUS_ACTION_DIM if self.continuous else N_DISCRETE_ACTIONS

    def reset(self, rng: np.random.Generator) -> list[np.ndarray]:
        """Start a new episode with uniform random agent and landmark positions."""
        agent_pos = rng.uniform(-1.0, 1.0, size=(self.n_agents, 2))
        landmark_pos = rng.uniform(-1.0, 1.0, size=(self.n_landmarks, 2))
        self.world = NavWorld(
            n_agents=self.n_agents,
            n_landmarks=self.n_landmarks,
            agent_pos=agent_pos,
            agent_vel=np.zeros((self.n_agents, 2)),
            landmark_pos=landmark_pos,
            params=self.params,
        )
        return self.observations()

    def observations(self) -> list[np.ndarray]:
        world = self._require_world()
        return [observe(world, i) for i in range(self.n_agents)]

    def step(self, actions: list[int] | np.ndarray) -> StepResult:
        """Advance one step with discrete actions; every agent receives the team reward."""
        if self.continuous:
            raise ValueError("Discrete step called on the continuous variant")
        indices = np.asarray(actions)
        if indices.shape != (self.n_agents,):
            raise ValueError(f"Expected {self.n_agents} actions, got shape {indices.shape}")
        if np.any(indices < 0) or np.any(indices >= N_DISCRETE_ACTIONS):
            raise ValueError(f"Action indices must be in 0..{N_DISCRETE_ACTIONS - 1}: {actions}")
        world = self._integrate(ACTION_FORCES[indices.astype(np.int64)])
        reward = team_reward(world)
        return StepResult(
            observations=self.observations(),
            rewards=[reward] * self.n_agents,
            done=world.done,
            collisions=collision_count(world),
        )

    def step_continuous(self, actions: np.ndarray) -> StepResult:
        """Advance one step with 2-D force actions; rewards are localized per agent."""
        forces = np.clip(np.asarray(actions, dtype=np.float64), -1.0, 1.0)
        if forces.shape != (self.n_agents, CONTINUOUS_ACTION_DIM):
            raise ValueError(f"Expected actions of shape ({self.n_agents}, 2), got {forces.shape}")
        world = self._integrate(forces)
        return StepResult(
            observations=self.observations(),
            rewards=local_rewards(world),
            done=world.done,
            collisions=collision_count(world),
        )

    def act(self, actions: list[int] | np.ndarray) -> StepResult:
        """Dispatch to ``step`` or ``step_continuous`` depending on the variant."""
        if self.continuous:
            return self.step_continuous(np.asarray(actions))
        return self.step(actions)

    def _integrate(self, unit_forces: np.ndarray) -> NavWorld:
        world = self._require_world()
        if world.done:
            raise RuntimeError("Episode is finished; call reset() before stepping")
        p = world.params
        world.agent_vel = world.agent_vel * (1.0 - p.damping) + unit_forces * (
            p.force_scale / p.mass * p.dt
        )
        world.agent_pos = world.agent_pos + world.agent_vel * p.dt
        world.t += 1
        return world

    def _require_world(self) -> NavWorld:
        if self.world is None:
            raise RuntimeError("Environment not reset")
        return self.world
