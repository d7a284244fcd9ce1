"""Trajectory simulation and score-function gradient estimation.

The estimator pipeline per player and iteration is two-phase:

1. sample a batch, form the truncated-occupancy estimate (discounted
   indicator sums over steps 1..H-1, no normalization), and evaluate the
   utility's gradient oracle there to get a fixed per-cell pseudo-reward z;
2. sample a fresh batch and average the per-trajectory score-function
   gradients built from that fixed z.

The per-trajectory gradient over a rollout s0, a0, ..., s_{H-1}, a_{H-1} is

    sum_h gamma^h z(s_h, a_h) * sum_{h' <= h} d log pi(a_h' | s_h') / d theta,

where the score is taken with respect to the pre-exploration parameter
through the mixing map, contributing (1 - eps) / pi(a|s) at each visited
cell.  Pseudo-rewards and gradients live in the requesting player's own
payoff space (see utility.own_pseudo_reward).

Randomness is counter-based: every trajectory owns a Philox stream keyed on
(seed, iteration) with the (phase, index) pair in the counter, so batches
reproduce bitwise regardless of sampling order.
"""

import math
from dataclasses import dataclass

import numpy as np

from .occupancy import OccupancyMeasure
from .utility import own_pseudo_reward


@dataclass(frozen=True)
class Trajectory:
    """One rollout: aligned state / action index arrays plus its stream tag."""

    states: np.ndarray
    actions_min: np.ndarray
    actions_max: np.ndarray
    seed_tag: str = ""

    def __len__(self):
        return len(self.states)


@dataclass(frozen=True)
class GradEstimate:
    gradient: np.ndarray
    batch_size: int
    horizon: int
    empirical_second_moment: float
    side: str = ""


@dataclass(frozen=True)
class EstimatorBounds:
    variance_bound: float
    bias_bound: float
    horizon_valid: bool
    warning: str = None


def trajectory_rng(seed, iteration=0, index=0, phase=0):
    """Dedicated counter-based generator for one trajectory."""
    key = np.array([seed % 2**64, iteration % 2**64], dtype=np.uint64)
    counter = np.array([phase % 2**64, index % 2**64, 0, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def _pick(cum, u):
    idx = int(np.searchsorted(cum, u, side="right"))
    return min(idx, len(cum) - 1)


def sample_trajectory(model, pair, horizon, rng, seed_tag=""):
    """Roll out `horizon` steps under the supplied (played) policies.

    s0 ~ rho, actions from the policy rows, next state from the kernel.
    Deterministic given the generator state.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    x, y, P = pair.min_policy, pair.max_policy, model.transition
    cum_rho = np.cumsum(model.initial_dist)
    cum_x = np.cumsum(x, axis=1)
    cum_y = np.cumsum(y, axis=1)
    states = np.empty(horizon, dtype=np.intp)
    amin = np.empty(horizon, dtype=np.intp)
    amax = np.empty(horizon, dtype=np.intp)
    s = _pick(cum_rho, rng.random())
    for h in range(horizon):
        a = _pick(cum_x[s], rng.random())
        b = _pick(cum_y[s], rng.random())
        states[h], amin[h], amax[h] = s, a, b
        s = _pick(np.cumsum(P[s, a, b]), rng.random())
    return Trajectory(states, amin, amax, seed_tag)


def sample_batch(model, pair, horizon, batch_size, seed, iteration=0, phase=0):
    """Vectorized batch rollout; per-trajectory streams, fixed order.

    Returns (states, actions_min, actions_max), each (batch_size, horizon).
    Trajectory i consumes the same uniforms it would get from
    ``trajectory_rng(seed, iteration, i, phase)``, so concurrent or batched
    sampling cannot change the draw.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    n = 1 + 3 * horizon
    u = np.empty((batch_size, n))
    for i in range(batch_size):
        u[i] = trajectory_rng(seed, iteration, i, phase).random(n)
    x, y, P = pair.min_policy, pair.max_policy, model.transition
    S = model.n_states
    cum_x = np.cumsum(x, axis=1)
    cum_y = np.cumsum(y, axis=1)
    cum_P = np.cumsum(P, axis=3).reshape(-1, S)
    A, B = x.shape[1], y.shape[1]
    states = np.empty((batch_size, horizon), dtype=np.intp)
    amin = np.empty((batch_size, horizon), dtype=np.intp)
    amax = np.empty((batch_size, horizon), dtype=np.intp)
    s = np.minimum(np.searchsorted(np.cumsum(model.initial_dist), u[:, 0], side="right"), S - 1)
    for h in range(horizon):
        a = np.minimum((u[:, 1 + 3 * h, None] >= cum_x[s]).sum(axis=1), A - 1)
        b = np.minimum((u[:, 2 + 3 * h, None] >= cum_y[s]).sum(axis=1), B - 1)
        states[:, h], amin[:, h], amax[:, h] = s, a, b
        rows = cum_P[(s * A + a) * B + b]
        s = np.minimum((u[:, 3 + 3 * h, None] >= rows).sum(axis=1), S - 1)
    return states, amin, amax


def batch_to_trajectories(batch, seed_tag=""):
    states, amin, amax = batch
    return [
        Trajectory(states[i], amin[i], amax[i], f"{seed_tag}/{i}")
        for i in range(states.shape[0])
    ]


def estimate_occupancy(trajectories, model):
    """Monte-Carlo truncated occupancy from a batch of trajectories.

    Batch mean of the per-trajectory discounted indicator sums over steps
    1..len-1 (step 0 excluded, no (1 - gamma) factor), so with rollouts of
    length H the estimate is unbiased for the exact truncated measure at
    horizon H - 1.  Returns a full measure (joint plus both marginals).
    """
    if isinstance(trajectories, tuple):
        states, amin, amax = trajectories
    else:
        if len(trajectories) == 0:
            raise ValueError("empty trajectory batch")
        states = np.stack([t.states for t in trajectories])
        amin = np.stack([t.actions_min for t in trajectories])
        amax = np.stack([t.actions_max for t in trajectories])
    M, H = states.shape
    if M == 0:
        raise ValueError("empty trajectory batch")
    S, A, B = model.n_states, model.n_actions_min, model.n_actions_max
    gamma = model.discount
    joint = np.zeros(S * A * B)
    if H > 1:
        w = gamma ** np.arange(1, H)
        flat = (states[:, 1:] * A + amin[:, 1:]) * B + amax[:, 1:]
        np.add.at(joint, flat.ravel(), np.broadcast_to(w / M, (M, H - 1)).ravel())
    joint = joint.reshape(S, A, B)
    return OccupancyMeasure(
        joint=joint,
        marginal_min=joint.sum(axis=2),
        marginal_max=joint.sum(axis=1),
        discount=gamma,
        normalized=False,
    )


def pseudo_reward(spec, occ_estimate, pair, side, mu_reg=0.0):
    """Per-cell reward z from the utility's gradient oracle at an estimate.

    Own-payoff space of the requesting side; the opponent's policy folds the
    cross-marginal terms into the player's own cells.
    """
    if not np.all(np.isfinite(occ_estimate.joint)):
        raise ValueError("occupancy estimate has non-finite entries")
    return own_pseudo_reward(spec, occ_estimate, pair, side, mu_reg)


def reinforce_grad(trajectory, policy_param, epsilon, z, gamma, side="min"):
    """Score-function gradient of one trajectory for a fixed pseudo-reward.

    ``policy_param`` is the pre-exploration table of the differentiated
    player (``side`` picks whose actions in the trajectory count); the played
    row is (1 - eps) * param + eps / n.  Raises if a visited cell has zero
    played probability.
    """
    policy_param = np.asarray(policy_param, dtype=float)
    if z.shape != policy_param.shape:
        raise ValueError("pseudo-reward table shape must match the policy table")
    played = (1.0 - epsilon) * policy_param + epsilon / policy_param.shape[1]
    states = trajectory.states
    acts = trajectory.actions_min if side == "min" else trajectory.actions_max
    probs = played[states, acts]
    if np.any(probs <= 0.0):
        raise ValueError("visited action has zero probability under the played policy")
    H = len(states)
    w = gamma ** np.arange(H) * z[states, acts]
    suffix = np.cumsum(w[::-1])[::-1]
    grad = np.zeros_like(played)
    np.add.at(grad, (states, acts), (1.0 - epsilon) / probs * suffix)
    return grad


def _batch_reinforce(states, acts, policy_param, epsilon, z, gamma, chunk=20000):
    """Batch-mean reinforce gradient plus the mean squared norm of the terms."""
    played = (1.0 - epsilon) * policy_param + epsilon / policy_param.shape[1]
    M, H = states.shape
    S, n = policy_param.shape
    disc = gamma ** np.arange(H)
    total = np.zeros(S * n)
    sq = 0.0
    for lo in range(0, M, chunk):
        st = states[lo:lo + chunk]
        ac = acts[lo:lo + chunk]
        m = st.shape[0]
        probs = played[st, ac]
        if np.any(probs <= 0.0):
            raise ValueError("visited action has zero probability under the played policy")
        w = disc * z[st, ac]
        suffix = np.cumsum(w[:, ::-1], axis=1)[:, ::-1]
        contrib = (1.0 - epsilon) / probs * suffix
        flat = st * n + ac
        block = np.zeros((m, S * n))
        rows = np.repeat(np.arange(m), H)
        np.add.at(block, (rows, flat.ravel()), contrib.ravel())
        total += block.sum(axis=0)
        sq += float(np.sum(block * block))
    return (total / M).reshape(S, n), sq / M


def batch_grad(model, spec, pair, side, batch_size, horizon, seed,
               iteration=0, mu_reg=0.0):
    """Two-phase Monte-Carlo policy gradient for one player.

    Phase one estimates the occupancy and freezes the pseudo-reward; phase
    two averages score-function gradients over a fresh batch.  The result is
    an ascent direction for the requesting player's own payoff, with respect
    to their pre-exploration parameter table.
    """
    if batch_size < 1 or horizon < 1:
        raise ValueError("batch_size and horizon must be >= 1")
    played = pair.played()
    occ_batch = sample_batch(model, played, horizon, batch_size, seed, iteration, phase=0)
    occ_hat = estimate_occupancy(occ_batch, model)
    z = pseudo_reward(spec, occ_hat, played, side, mu_reg)
    states, amin, amax = sample_batch(model, played, horizon, batch_size, seed, iteration, phase=1)
    if side == "min":
        param, eps, acts = pair.min_policy, pair.explore_min, amin
    elif side == "max":
        param, eps, acts = pair.max_policy, pair.explore_max, amax
    else:
        raise ValueError(f"side must be 'min' or 'max', got {side!r}")
    grad, second_moment = _batch_reinforce(states, acts, param, eps, z, model.discount)
    return GradEstimate(
        gradient=grad,
        batch_size=batch_size,
        horizon=horizon,
        empirical_second_moment=second_moment,
        side=side,
    )


def estimator_bounds(lip_F, gamma, epsilon_greedy, batch_size, horizon):
    """Closed-form variance and bias bounds for the batch gradient.

    variance <= 27 L_F^2 / (M (1-gamma)^6 eps^2)
    bias^2   <= 256 L_F / ((1-gamma)^6 eps^2) exp(-(1-gamma)(horizon-1)),
    the latter valid for horizon > 1 / ln(1/sqrt(gamma)).
    """
    if epsilon_greedy <= 0:
        raise ValueError("epsilon_greedy must be > 0 for the bounds to apply")
    if not (0.0 <= gamma < 1.0):
        raise ValueError("gamma must lie in [0, 1)")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    one = 1.0 - gamma
    variance = 27.0 * lip_F**2 / (batch_size * one**6 * epsilon_greedy**2)
    bias = 256.0 * lip_F / (one**6 * epsilon_greedy**2) * math.exp(-one * (horizon - 1))
    threshold = 0.0 if gamma == 0.0 else 1.0 / math.log(1.0 / math.sqrt(gamma))
    valid = horizon > threshold
    warning = None if valid else (
        f"horizon {horizon} below validity threshold {threshold:.3g}; bias bound not guaranteed"
    )
    return EstimatorBounds(variance, bias, valid, warning)
