"""Self-play training of the policy, value, and reward networks.

Each epoch plays one game against a simulated user, prices every step with
the reward network, squashes discounted tails into (0,1) returns, and pushes
advantage-tagged steps into a bounded replay memory. Once the memory holds
more than a batch, every step also draws a minibatch and nudges the reward
net (toward the shaped reward) and the policy (REINFORCE ascent).

A step's stored state is the belief the question was sampled from; the
post-answer belief only feeds the entropy bookkeeping. Sampling questions
from one state and crediting them to another would break the policy
gradient, so the pre-decision state is the one that travels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .belief import (MAX_TURNS, CategoryTable, SmoothingConfig, entropy,
                     normalize_prior, update_belief)
from .errors import ConfigurationError, KBReferenceError, NumericalError
from .kb import KnowledgeBase
from .nets import (DenseNetwork, batch_log_prob_gradients,
                   batch_squared_error_gradients, forward, init_network,
                   sgd_step, squared_error_gradients)
from .ranking import policy_input, sample_learned

SIMULATOR_MODES = ("reference-deterministic", "likelihood-sampling")


@dataclass(frozen=True)
class MDPConfig:
    category: str
    epochs: int = 2000
    gamma: float = 0.95
    max_turns: int = MAX_TURNS
    kappa: float = 1.0
    reward_alpha: float = 1.0
    reward_beta: float = 1.0
    batch_size: int = 64
    # replayed steps carry the advantage computed when they were stored, so
    # an oversized memory keeps resampling stale early-training estimates;
    # a few hundred entries keeps the minibatches close to on-policy
    memory_capacity: int = 512
    learning_rate: float = 0.01
    clip_norm: float = 5.0
    hidden: int = 64
    noise_prob: float = 0.0
    simulator_mode: str = "reference-deterministic"
    smoothing: SmoothingConfig = field(default_factory=SmoothingConfig)
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigurationError(f"gamma {self.gamma} not in [0, 1]")
        if not 1 <= self.max_turns <= MAX_TURNS:
            raise ConfigurationError(
                f"max_turns {self.max_turns} not in [1, {MAX_TURNS}]")
        if self.kappa <= 0:
            raise ConfigurationError("kappa must be positive")
        if self.reward_alpha < 0 or self.reward_beta < 0:
            raise ConfigurationError("reward coefficients must be nonnegative")
        if self.epochs < 0 or self.batch_size < 1 or self.memory_capacity < 1:
            raise ConfigurationError("bad epoch, batch, or memory setting")
        if not 0.0 <= self.noise_prob < 1.0:
            raise ConfigurationError(f"noise_prob {self.noise_prob} not in [0, 1)")
        if self.simulator_mode not in SIMULATOR_MODES:
            raise ConfigurationError(
                f"unknown simulator mode {self.simulator_mode!r}")


class UserSimulator:
    """Answers questions the way someone thinking of the target would.

    The deterministic mode returns the reference options, except that with
    probability noise_prob it flips to a single uniformly random option
    outside the reference set. The sampling mode draws one option from the
    smoothed answer distribution instead.
    """

    def __init__(self, table: CategoryTable, target: str,
                 mode: str = "reference-deterministic", noise_prob: float = 0.0,
                 rng=None):
        if target not in table.concept_index:
            raise KBReferenceError(f"unknown target concept {target!r}")
        if mode not in SIMULATOR_MODES:
            raise ConfigurationError(f"unknown simulator mode {mode!r}")
        self.table = table
        self.target = target
        self.mode = mode
        self.noise_prob = noise_prob
        self.rng = rng if rng is not None else np.random.default_rng()

    def answer(self, question_id: str) -> tuple[str, ...]:
        options = self.table.options[question_id]
        if self.mode == "likelihood-sampling":
            row = self.table.rows[question_id][self.table.concept_index[self.target]]
            return (options[int(self.rng.choice(len(options), p=row))],)
        reference = self.table.reference_options(self.target, question_id)
        if self.noise_prob > 0 and self.rng.random() < self.noise_prob:
            outside = [oid for oid in options if oid not in reference]
            if outside:
                return (outside[int(self.rng.integers(len(outside)))],)
        return tuple(oid for oid in options if oid in reference)


def shaped_reward(h_prev: float, h_next: float, terminal_outcome: str,
                  cfg: MDPConfig) -> float:
    """Information gain plus the terminal bonus, the supervision signal."""
    if terminal_outcome == "correct":
        final = cfg.kappa
    elif terminal_outcome == "incorrect":
        final = -cfg.kappa
    elif terminal_outcome == "none":
        final = 0.0
    else:
        raise ConfigurationError(f"unknown outcome {terminal_outcome!r}")
    return cfg.reward_alpha * (h_prev - h_next) + cfg.reward_beta * final


@dataclass(frozen=True)
class Transition:
    state: np.ndarray
    mask: np.ndarray
    question_id: str
    question_index: int
    selected: tuple[str, ...]
    next_state: np.ndarray
    h_prev: float
    h_next: float


@dataclass(frozen=True)
class Episode:
    target: str
    transitions: tuple[Transition, ...]
    outcome: str  # correct | incorrect

    @property
    def turns(self) -> int:
        return len(self.transitions)


def _unique_argmax(probs: np.ndarray) -> int | None:
    peak = probs.max()
    winners = np.flatnonzero(probs == peak)
    return int(winners[0]) if len(winners) == 1 else None


class _SamplingPolicy:
    """Draws questions from the live policy net during rollouts."""

    def __init__(self, net: DenseNetwork, rng):
        self.net = net
        self.rng = rng

    def choose(self, table, state, asked) -> str:
        return sample_learned(self.net, table, state, asked, self.rng)


def rollout_episode(policy, sim: UserSimulator, table: CategoryTable,
                    cfg: MDPConfig) -> Episode:
    """Play one game to the peek-at-the-answer break or the turn budget.

    The break fires only on a unique argmax equal to the target; a tied
    maximum never ends the episode early.
    """
    state = normalize_prior(table.prior_weights)
    asked: set[str] = set()
    transitions = []
    target_index = table.concept_index[sim.target]
    budget = min(cfg.max_turns, len(table.question_ids))
    for _ in range(budget):
        question_id = policy.choose(table, state, asked)
        mask = np.array([qid in asked for qid in table.question_ids])
        selected = sim.answer(question_id)
        h_prev = entropy(state.probs)
        next_state = update_belief(state, table, question_id, selected,
                                   cfg.smoothing)
        transitions.append(Transition(
            state=state.probs, mask=mask, question_id=question_id,
            question_index=table.question_index[question_id],
            selected=selected, next_state=next_state.probs,
            h_prev=h_prev, h_next=entropy(next_state.probs)))
        asked.add(question_id)
        state = next_state
        if _unique_argmax(state.probs) == target_index:
            break
    outcome = ("correct" if _unique_argmax(state.probs) == target_index
               else "incorrect")
    return Episode(target=sim.target, transitions=tuple(transitions),
                   outcome=outcome)


def discounted_tail_sums(rewards, gamma: float) -> list[float]:
    """Plain discounted suffix sums, before any squashing."""
    if not len(rewards):
        raise ConfigurationError("empty reward sequence")
    tails = [0.0] * len(rewards)
    running = 0.0
    for t in range(len(rewards) - 1, -1, -1):
        running = float(rewards[t]) + gamma * running
        tails[t] = running
    return tails


def sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def discounted_return(rewards, gamma: float) -> list[float]:
    """Sigmoid-squashed discounted tails; every output lies in (0, 1)."""
    return [sigmoid(tail) for tail in discounted_tail_sums(rewards, gamma)]


@dataclass
class NetworkBundle:
    policy: DenseNetwork
    value: DenseNetwork
    reward: DenseNetwork

    def copy(self) -> "NetworkBundle":
        return NetworkBundle(self.policy.copy(), self.value.copy(),
                             self.reward.copy())


@dataclass(frozen=True)
class MemoryEntry:
    policy_x: np.ndarray
    mask: np.ndarray
    action: int
    reward_x: np.ndarray
    shaped: float
    advantage: float


class EpisodeMemory:
    """Fixed-capacity FIFO ring with O(1) append and random access."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self._slots: list[MemoryEntry] = []
        self._head = 0  # next slot to overwrite once full

    def __len__(self) -> int:
        return len(self._slots)

    def __getitem__(self, index: int) -> MemoryEntry:
        return self._slots[index]

    def append(self, entry: MemoryEntry) -> None:
        if len(self._slots) < self.capacity:
            self._slots.append(entry)
        else:
            self._slots[self._head] = entry
            self._head = (self._head + 1) % self.capacity


def init_bundle(table: CategoryTable, cfg: MDPConfig, rng) -> NetworkBundle:
    m = len(table.concept_ids)
    n = len(table.question_ids)
    l_max = max(len(opts) for opts in table.options.values())
    policy = init_network((m + n, cfg.hidden, n), "masked-softmax", rng)
    value = init_network((m, cfg.hidden, 1), "sigmoid-scalar", rng)
    reward = init_network((m + n + l_max + m, cfg.hidden, 1), "linear-scalar", rng)
    return NetworkBundle(policy=policy, value=value, reward=reward)


def reward_input(table: CategoryTable, state: np.ndarray, question_id: str,
                 selected, target: str) -> np.ndarray:
    """Reward-net input: belief, question one-hot, option multi-hot, target."""
    n = len(table.question_ids)
    l_max = max(len(opts) for opts in table.options.values())
    question_vec = np.zeros(n)
    question_vec[table.question_index[question_id]] = 1.0
    option_vec = np.zeros(l_max)
    options = table.options[question_id]
    slot = {oid: i for i, oid in enumerate(options)}
    for oid in selected:
        option_vec[slot[oid]] = 1.0
    target_vec = np.zeros(len(table.concept_ids))
    target_vec[table.concept_index[target]] = 1.0
    return np.concatenate([state, question_vec, option_vec, target_vec])


@dataclass
class EpochRecord:
    epoch: int
    target: str
    turns: int
    outcome: str
    policy_loss: float
    value_loss: float
    reward_loss: float
    mean_advantage: float

    def as_dict(self) -> dict:
        return {"epoch": self.epoch, "target": self.target, "turns": self.turns,
                "outcome": self.outcome, "policy_loss": self.policy_loss,
                "value_loss": self.value_loss, "reward_loss": self.reward_loss,
                "mean_advantage": self.mean_advantage}


def train(kb: KnowledgeBase, cfg: MDPConfig) -> tuple[NetworkBundle, list[EpochRecord]]:
    """Joint self-play training loop over the configured category."""
    table = CategoryTable(kb, cfg.category, cfg.smoothing)
    rng = np.random.default_rng(cfg.seed)
    bundle = init_bundle(table, cfg, rng)
    memory = EpisodeMemory(cfg.memory_capacity)
    concept_ids = table.concept_ids
    prior = table.prior_weights / table.prior_weights.sum()
    sampler = _SamplingPolicy(bundle.policy, rng)
    log: list[EpochRecord] = []
    last_good = bundle.copy()

    try:
        for epoch in range(1, cfg.epochs + 1):
            target = concept_ids[int(rng.choice(len(concept_ids), p=prior))]
            sim = UserSimulator(table, target, mode=cfg.simulator_mode,
                                noise_prob=cfg.noise_prob, rng=rng)
            episode = rollout_episode(sampler, sim, table, cfg)
            steps = episode.transitions

            estimated = [forward(bundle.reward,
                                 reward_input(table, tr.state, tr.question_id,
                                              tr.selected, target))
                         for tr in steps]
            returns = discounted_return(estimated, cfg.gamma)

            value_losses = []
            policy_losses = []
            reward_losses = []
            advantages = []
            for tr, ret in zip(steps, returns):
                loss, grads = squared_error_gradients(bundle.value, tr.state, ret)
                sgd_step(bundle.value, grads, cfg.learning_rate, cfg.clip_norm)
                value_losses.append(loss)
                baseline = forward(bundle.value, tr.state)
                advantage = ret - baseline
                advantages.append(advantage)
                terminal = episode.outcome if tr is steps[-1] else "none"
                memory.append(MemoryEntry(
                    policy_x=np.concatenate([tr.state, tr.mask.astype(float)]),
                    mask=tr.mask,
                    action=tr.question_index,
                    reward_x=reward_input(table, tr.state, tr.question_id,
                                          tr.selected, target),
                    shaped=shaped_reward(tr.h_prev, tr.h_next, terminal, cfg),
                    advantage=advantage))
                if len(memory) > cfg.batch_size:
                    batch = [memory[i] for i in
                             rng.choice(len(memory), size=cfg.batch_size,
                                        replace=False)]
                    r_loss, r_grads = batch_squared_error_gradients(
                        bundle.reward,
                        np.stack([e.reward_x for e in batch]),
                        np.array([e.shaped for e in batch]))
                    sgd_step(bundle.reward, r_grads, cfg.learning_rate,
                             cfg.clip_norm)
                    objective, p_grads = batch_log_prob_gradients(
                        bundle.policy,
                        np.stack([e.policy_x for e in batch]),
                        [e.action for e in batch],
                        [e.advantage for e in batch],
                        np.stack([e.mask for e in batch]))
                    sgd_step(bundle.policy, p_grads, cfg.learning_rate,
                             cfg.clip_norm, ascend=True)
                    reward_losses.append(r_loss)
                    policy_losses.append(-objective)

            log.append(EpochRecord(
                epoch=epoch, target=target, turns=episode.turns,
                outcome=episode.outcome,
                policy_loss=float(np.mean(policy_losses)) if policy_losses else 0.0,
                value_loss=float(np.mean(value_losses)) if value_losses else 0.0,
                reward_loss=float(np.mean(reward_losses)) if reward_losses else 0.0,
                mean_advantage=float(np.mean(advantages)) if advantages else 0.0))
            last_good = bundle.copy()
    except NumericalError as err:
        err.checkpoint = last_good
        raise
    return bundle, log
