"""Tabular two-player zero-sum game model and policy primitives.

A game instance is a finite state space, one finite action space per player,
a transition kernel P(s' | s, a, b), an everywhere-positive initial state
distribution, and a discount factor in [0, 1).  Policies use the direct
parametrization: one probability row per state.  Exploration mixes a policy
with the uniform one, ``(1 - eps) * x + eps / n_actions``, which keeps every
action probability bounded away from zero.

All arrays are plain float64 ndarrays.  Models and policy pairs are frozen
after construction; operations return new values.
"""

from dataclasses import dataclass, field, replace

import numpy as np

STOCHASTIC_TOL = 1e-12   # tolerance on input row sums
DERIVED_TOL = 1e-10      # tolerance on derived stochastic matrices


def _freeze(arr):
    out = np.ascontiguousarray(np.asarray(arr, dtype=float))
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class GameModel:
    """Tabular game: transition kernel (S, A, B, S), initial dist, discount."""

    transition: np.ndarray
    initial_dist: np.ndarray
    discount: float

    def __post_init__(self):
        object.__setattr__(self, "transition", _freeze(self.transition))
        object.__setattr__(self, "initial_dist", _freeze(self.initial_dist))
        object.__setattr__(self, "discount", float(self.discount))
        if self.transition.ndim != 4:
            raise ValueError("transition must have shape (S, A, B, S)")
        if self.transition.shape[0] != self.transition.shape[3]:
            raise ValueError("transition first and last axes must both be S")
        if self.initial_dist.shape != (self.transition.shape[0],):
            raise ValueError("initial_dist length must match state count")

    @property
    def n_states(self):
        return self.transition.shape[0]

    @property
    def n_actions_min(self):
        return self.transition.shape[1]

    @property
    def n_actions_max(self):
        return self.transition.shape[2]

    def to_json_dict(self):
        return {
            "n_states": self.n_states,
            "n_actions_min": self.n_actions_min,
            "n_actions_max": self.n_actions_max,
            "gamma": self.discount,
            "rho": self.initial_dist.tolist(),
            "transition": self.transition.tolist(),
        }

    @classmethod
    def from_json_dict(cls, doc):
        model = cls(
            transition=np.array(doc["transition"], dtype=float),
            initial_dist=np.array(doc["rho"], dtype=float),
            discount=float(doc["gamma"]),
        )
        declared = (doc["n_states"], doc["n_actions_min"], doc["n_actions_max"])
        actual = (model.n_states, model.n_actions_min, model.n_actions_max)
        if tuple(declared) != actual:
            raise ValueError(f"declared dimensions {declared} != array dimensions {actual}")
        return model


def validate_model(model):
    """Check all model invariants; returns a list of violation strings.

    An empty list means the model is valid.  Violations carry the offending
    indices so bad kernels can be located directly.
    """
    issues = []
    P, rho, gamma = model.transition, model.initial_dist, model.discount
    if not (0.0 <= gamma < 1.0):
        issues.append(f"discount gamma={gamma} outside [0, 1)")
    if np.any(P < 0):
        s, a, b, s2 = [idx[0] for idx in np.nonzero(P < 0)]
        issues.append(f"negative transition probability at (s={s}, a={a}, b={b}, s'={s2})")
    row_sums = P.sum(axis=3)
    bad = np.argwhere(np.abs(row_sums - 1.0) > STOCHASTIC_TOL)
    for s, a, b in bad:
        issues.append(
            f"transition row (s={s}, a={a}, b={b}) sums to {row_sums[s, a, b]:.12g}, expected 1"
        )
    if abs(rho.sum() - 1.0) > STOCHASTIC_TOL:
        issues.append(f"initial_dist sums to {rho.sum():.12g}, expected 1")
    if np.any(rho < 0):
        issues.append("initial_dist has negative entries")
    zero_states = np.nonzero(rho <= 0)[0]
    for s in zero_states:
        issues.append(f"initial_dist({s}) = {rho[s]:.12g}; every state needs positive initial mass")
    return issues


def validate_policy(table, n_states, n_actions):
    """Row-stochasticity check for one policy table; returns violations."""
    issues = []
    table = np.asarray(table, dtype=float)
    if table.shape != (n_states, n_actions):
        return [f"policy shape {table.shape} != ({n_states}, {n_actions})"]
    if np.any(table < 0):
        issues.append("policy has negative entries")
    sums = table.sum(axis=1)
    for s in np.nonzero(np.abs(sums - 1.0) > STOCHASTIC_TOL)[0]:
        issues.append(f"policy row {s} sums to {sums[s]:.12g}, expected 1")
    return issues


@dataclass(frozen=True)
class PolicyPair:
    """Both players' policy tables plus their exploration parameters.

    ``min_policy`` has shape (S, A), ``max_policy`` shape (S, B).  The tables
    are the optimization variables; exploration is folded in only by an
    explicit ``played()`` call, never implicitly.
    """

    min_policy: np.ndarray
    max_policy: np.ndarray
    explore_min: float = 0.0
    explore_max: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "min_policy", _freeze(self.min_policy))
        object.__setattr__(self, "max_policy", _freeze(self.max_policy))
        for name in ("explore_min", "explore_max"):
            eps = float(getattr(self, name))
            if not (0.0 <= eps < 1.0):
                raise ValueError(f"{name}={eps} outside [0, 1)")
            object.__setattr__(self, name, eps)

    def played(self):
        """The pair actually executed: exploration applied, parameters kept aside."""
        return PolicyPair(
            epsilon_greedy(self.min_policy, self.explore_min),
            epsilon_greedy(self.max_policy, self.explore_max),
        )

    def with_tables(self, min_policy=None, max_policy=None):
        return replace(
            self,
            min_policy=self.min_policy if min_policy is None else min_policy,
            max_policy=self.max_policy if max_policy is None else max_policy,
        )


def uniform_pair(model, explore_min=0.0, explore_max=0.0):
    S, A, B = model.n_states, model.n_actions_min, model.n_actions_max
    return PolicyPair(
        np.full((S, A), 1.0 / A), np.full((S, B), 1.0 / B), explore_min, explore_max
    )


def dirichlet_pair(model, rng, explore_min=0.0, explore_max=0.0):
    """Random policies, each row drawn from a flat Dirichlet."""
    S, A, B = model.n_states, model.n_actions_min, model.n_actions_max
    return PolicyPair(
        rng.dirichlet(np.ones(A), size=S),
        rng.dirichlet(np.ones(B), size=S),
        explore_min,
        explore_max,
    )


def epsilon_greedy(policy, epsilon, n_actions=None):
    """Mix a policy table (or single row) with the uniform distribution.

    Returns ``(1 - epsilon) * policy + epsilon / n_actions`` entrywise, so
    every entry ends up at least ``epsilon / n_actions``.
    """
    if not (0.0 <= epsilon < 1.0):
        raise ValueError(f"epsilon={epsilon} outside [0, 1)")
    policy = np.asarray(policy, dtype=float)
    n = policy.shape[-1] if n_actions is None else int(n_actions)
    if policy.shape[-1] != n:
        raise ValueError(f"policy rows have length {policy.shape[-1]}, expected {n}")
    return (1.0 - epsilon) * policy + epsilon / n


def induced_transition(model, pair):
    """State-to-state transition matrix under a fixed policy pair.

    Entry (s, s') is  sum_{a,b} x(a|s) y(b|s) P(s'|s,a,b).  Policies are used
    exactly as supplied (apply exploration beforehand if it should count).
    """
    x, y = pair.min_policy, pair.max_policy
    S, A, B = model.n_states, model.n_actions_min, model.n_actions_max
    if x.shape != (S, A) or y.shape != (S, B):
        raise ValueError(
            f"policy shapes {x.shape}, {y.shape} do not match model ({S},{A})/({S},{B})"
        )
    return np.einsum("sa,sb,sabt->st", x, y, model.transition)


def project_simplex(v):
    """Euclidean projection of a vector onto the probability simplex.

    Sort-and-threshold: with u the coordinates sorted in decreasing order,
    find the largest k with u_k > (sum of top k - 1) / k and clip at that
    threshold.  Exact up to floating point.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("project_simplex expects a nonempty 1-d vector")
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, v.size + 1)
    k = np.nonzero(u - css / ks > 0)[0][-1]
    tau = css[k] / (k + 1.0)
    return np.maximum(v - tau, 0.0)


def project_rows(mat):
    """Row-wise simplex projection of a matrix (vectorized)."""
    mat = np.asarray(mat, dtype=float)
    n = mat.shape[1]
    u = np.sort(mat, axis=1)[:, ::-1]
    css = np.cumsum(u, axis=1) - 1.0
    ks = np.arange(1, n + 1)
    cond = u - css / ks > 0
    k = n - 1 - np.argmax(cond[:, ::-1], axis=1)
    tau = css[np.arange(mat.shape[0]), k] / (k + 1.0)
    return np.maximum(mat - tau[:, None], 0.0)


def project_simplex_product(point, block_sizes):
    """Project a flat vector onto a product of probability simplices.

    ``block_sizes`` lists the length of each consecutive block; each block is
    projected independently.  Idempotent on feasible points.
    """
    point = np.asarray(point, dtype=float)
    sizes = [int(n) for n in block_sizes]
    if any(n < 1 for n in sizes):
        raise ValueError("every block must have size >= 1")
    if sum(sizes) != point.size:
        raise ValueError(f"block sizes sum to {sum(sizes)}, vector has {point.size} entries")
    out = np.empty_like(point)
    start = 0
    for n in sizes:
        out[start:start + n] = project_simplex(point[start:start + n])
        start += n
    return out
