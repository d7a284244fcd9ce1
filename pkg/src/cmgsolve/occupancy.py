"""Discounted occupancy measures and their derivatives.

Two conventions coexist and are never mixed silently:

* ``exact_occupancy`` returns the normalized measure: the discounted
  visitation sum starts at step 0 and carries a (1 - gamma) prefactor, so
  the joint table is a probability distribution over (s, a, b).
* ``truncated_occupancy`` returns the finite-horizon estimator target: the
  sum runs over steps 1..H and has no prefactor.  ``truncated_to_discounted``
  converts between the two (add the step-0 term, scale by 1 - gamma).

The state occupancy d solves the linear system (I - gamma * P(x, y)^T) d =
(1 - gamma) * rho, after which the joint measure factorizes as
d(s) x(a|s) y(b|s).  Policy Jacobians come from implicit differentiation of
the same system; partial derivatives are taken in the ambient coordinate
space (each table entry varied independently), which is what central finite
differences measure.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .game import induced_transition

JOINT_SUM_TOL = 1e-8
MARGINAL_TOL = 1e-10
FLOW_TOL = 1e-8


@dataclass(frozen=True)
class OccupancyMeasure:
    """Joint measure over (s, a, b) with both per-player marginals."""

    joint: np.ndarray
    marginal_min: np.ndarray
    marginal_max: np.ndarray
    discount: float
    normalized: bool = True

    @property
    def state_occupancy(self):
        return self.marginal_min.sum(axis=1)

    def to_json_dict(self):
        return {"joint": self.joint.tolist(), "gamma": self.discount}


@dataclass(frozen=True)
class OccupancyConstants:
    """Closed-form continuity constants of the policy-to-occupancy map."""

    lip_lambda: float
    smooth_lambda: float
    lip_lambda_inverse: float


def _occupancy_system(model, pair):
    """LU factorization of (I - gamma P(x,y)^T) and the state occupancy d."""
    S = model.n_states
    Pxy = induced_transition(model, pair)
    M = np.eye(S) - model.discount * Pxy.T
    lu = linalg.lu_factor(M)
    d = linalg.lu_solve(lu, (1.0 - model.discount) * model.initial_dist)
    return lu, d


def _assemble(d, x, y, gamma, normalized):
    joint = d[:, None, None] * x[:, :, None] * y[:, None, :]
    return OccupancyMeasure(
        joint=joint,
        marginal_min=d[:, None] * x,
        marginal_max=d[:, None] * y,
        discount=gamma,
        normalized=normalized,
    )


def exact_occupancy(model, pair):
    """Normalized discounted occupancy measure of a policy pair.

    Uses the supplied tables as the played policies.  The result satisfies
    the flow balance checked by ``validate_occupancy``.
    """
    _, d = _occupancy_system(model, pair)
    return _assemble(d, pair.min_policy, pair.max_policy, model.discount, True)


def truncated_occupancy(model, pair, horizon):
    """Finite-horizon occupancy: discounted visitation over steps 1..horizon.

    No (1 - gamma) prefactor.  Computed by forward recursion of the state
    distribution, so it is exact, not sampled.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    gamma = model.discount
    Pxy = induced_transition(model, pair)
    nu = model.initial_dist.copy()
    acc = np.zeros(model.n_states)
    w = 1.0
    for _ in range(horizon):
        nu = Pxy.T @ nu
        w *= gamma
        acc += w * nu
    return _assemble(acc, pair.min_policy, pair.max_policy, gamma, False)


def truncated_to_discounted(model, pair, occ):
    """Convert a truncated measure to the normalized convention.

    Adds the step-0 contribution rho(s) x(a|s) y(b|s) and applies the
    (1 - gamma) prefactor; converges to ``exact_occupancy`` as the horizon
    grows, with geometric error gamma^(H+1) / (1 - gamma).
    """
    rho = model.initial_dist
    step0 = _assemble(rho, pair.min_policy, pair.max_policy, model.discount, False)
    scale = 1.0 - model.discount
    return OccupancyMeasure(
        joint=scale * (occ.joint + step0.joint),
        marginal_min=scale * (occ.marginal_min + step0.marginal_min),
        marginal_max=scale * (occ.marginal_max + step0.marginal_max),
        discount=model.discount,
        normalized=True,
    )


def validate_occupancy(model, occ):
    """Invariant checks for a normalized measure; returns violations."""
    issues = []
    total = occ.joint.sum()
    if abs(total - 1.0) > JOINT_SUM_TOL:
        issues.append(f"joint sums to {total:.12g}, expected 1")
    if np.any(occ.joint < -MARGINAL_TOL):
        issues.append("joint has negative entries")
    if np.max(np.abs(occ.joint.sum(axis=2) - occ.marginal_min)) > MARGINAL_TOL:
        issues.append("min marginal inconsistent with joint")
    if np.max(np.abs(occ.joint.sum(axis=1) - occ.marginal_max)) > MARGINAL_TOL:
        issues.append("max marginal inconsistent with joint")
    gamma = model.discount
    inflow = np.einsum("pcd,pcds->s", occ.joint, model.transition)
    flow = occ.marginal_min.sum(axis=1) - (1.0 - gamma) * model.initial_dist - gamma * inflow
    for s in np.nonzero(np.abs(flow) > FLOW_TOL)[0]:
        issues.append(f"flow balance violated at state {s} by {flow[s]:.3g}")
    return issues


def recover_policy(occ):
    """Invert an occupancy measure back to the policy pair that induced it.

    x(a|s) = lambda_1(s, a) / sum_a' lambda_1(s, a'), likewise for y.  Every
    state needs positive mass, which positive initial distributions ensure.
    """
    d = occ.marginal_min.sum(axis=1)
    if np.any(d <= 0):
        s = int(np.nonzero(d <= 0)[0][0])
        raise ValueError(f"state {s} has zero occupancy mass; cannot recover a policy")
    from .game import PolicyPair

    return PolicyPair(occ.marginal_min / d[:, None], occ.marginal_max / d[:, None])


def occupancy_jacobian(model, pair, side):
    """Partial derivatives of a player's marginal w.r.t. their own table.

    For side "min" returns J with J[s, a, s', a'] = d lambda_1(s, a) /
    d x(a'|s'); side "max" is the mirror image for lambda_2 and y.  Obtained
    by implicit differentiation: the state-occupancy response solves
    (I - gamma P^T) dd = gamma dP^T d, then the product rule adds the direct
    d(s) delta term.  Derivatives are ambient-space partials and match
    central finite differences of ``exact_occupancy``.
    """
    dd, d, own = _state_jacobian(model, pair, side)
    S, n = own.shape
    J = np.einsum("stc,sa->satc", dd, own)
    idx = np.arange(S)
    for a in range(n):
        J[idx, a, idx, a] += d
    return J


def occupancy_with_jacobians(model, pair, side, with_joint=True):
    """Occupancy measure plus derivatives of its pieces, from one solve.

    Returns (occ, J1, J2, Jj) where J1[s, a, s', c] = d lambda_1(s, a) /
    d theta(c|s') for the chosen player's table theta, J2 the same for the
    opponent marginal (which moves through the shared state occupancy), and
    Jj for the joint measure (None unless requested: it is the largest array
    and most utilities never touch it).
    """
    dd, d, _ = _state_jacobian(model, pair, side)
    x, y = pair.min_policy, pair.max_policy
    S = model.n_states
    n = x.shape[1] if side == "min" else y.shape[1]
    J1 = np.einsum("stc,sa->satc", dd, x)
    J2 = np.einsum("stc,sb->sbtc", dd, y)
    Jj = np.einsum("stc,sa,sb->sabtc", dd, x, y) if with_joint else None
    idx = np.arange(S)
    if side == "min":
        for a in range(n):
            J1[idx, a, idx, a] += d
            if with_joint:
                Jj[idx, a, :, idx, a] += d[:, None] * y
    else:
        for b in range(n):
            J2[idx, b, idx, b] += d
            if with_joint:
                Jj[idx, :, b, idx, b] += d[:, None] * x
    occ = _assemble(d, x, y, model.discount, True)
    return occ, J1, J2, Jj


def occupancy_full_jacobian(model, pair, side):
    """Derivatives of (lambda_1, lambda_2, joint) w.r.t. one player's table."""
    _, J1, J2, Jj = occupancy_with_jacobians(model, pair, side, with_joint=True)
    return J1, J2, Jj


def _state_jacobian(model, pair, side):
    """Shared core: dd[s, s', c] = d d(s) / d theta(c|s') plus d and the own table."""
    if side not in ("min", "max"):
        raise ValueError(f"side must be 'min' or 'max', got {side!r}")
    lu, d = _occupancy_system(model, pair)
    x, y = pair.min_policy, pair.max_policy
    gamma = model.discount
    S = model.n_states
    if side == "min":
        own, n = x, x.shape[1]
        q = np.einsum("sb,sabt->sat", y, model.transition)  # effect of fixing a at s
    else:
        own, n = y, y.shape[1]
        q = np.einsum("sa,sabt->sbt", x, model.transition)
    # rhs column for parameter theta(c|s'): gamma * d(s') * q[s', c, :]
    rhs = gamma * d[:, None, None] * q  # (s', c, t)
    flat = rhs.reshape(S * n, S).T  # (t, s'*c)
    dd_flat = linalg.lu_solve(lu, flat)  # (s, s'*c)
    dd = dd_flat.reshape(S, S, n)
    return dd, d, own


def occupancy_constants(model):
    """Lipschitz and smoothness constants of the occupancy map.

    lip_lambda      = sqrt(S) (A + B) / (1 - gamma)^2
    smooth_lambda   = 2 gamma sqrt(S) (A + B)^{3/2} / (1 - gamma)^3
    lip_lambda_inv  = 2 / (min_s rho(s) (1 - gamma))
    """
    S, A, B = model.n_states, model.n_actions_min, model.n_actions_max
    gamma = model.discount
    minrho = float(model.initial_dist.min())
    one = 1.0 - gamma
    return OccupancyConstants(
        lip_lambda=np.sqrt(S) * (A + B) / one**2,
        smooth_lambda=2.0 * gamma * np.sqrt(S) * (A + B) ** 1.5 / one**3,
        lip_lambda_inverse=2.0 / (minrho * one),
    )
