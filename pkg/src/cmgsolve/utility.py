"""Concave utilities over occupancy measures and their calculus.

A utility spec defines F, the maximizing player's payoff, as a function of
the occupancy measure; the minimizing player's payoff is -F (zero sum is
enforced here, not by configuration).  The game value is

    U(x, y) = F(occupancy(x, y)),

and the regularized variant subtracts (mu / 2) ||lambda_2||^2, a penalty on
the maximizer's marginal that makes the inner maximization strongly concave
through the occupancy map.

Sign conventions, fixed once:

* ``value``/``grads``/``eval_utility``/``exact_grad`` all live in U-space
  (the maximizer's payoff).  ``exact_grad(side="min")`` is the ambient
  partial of U w.r.t. the min player's table and matches central finite
  differences of ``eval_utility_reg``.
* ``own_pseudo_reward`` lives in the requesting player's own payoff space
  (min player sees -F), because that is what the trajectory estimators
  consume.

Penalty specs attach to a player's *own* payoff: ``NegSquaredNorm("min", w)``
subtracts (w/2)||lambda_1||^2 from the min player's payoff, which adds it
to F.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .occupancy import OccupancyMeasure, exact_occupancy, occupancy_constants

ENTROPY_CLAMP = 1e-8  # floor on occupancy entries inside entropy gradients


def _zeros_like_marginals(occ):
    return np.zeros_like(occ.marginal_min), np.zeros_like(occ.marginal_max)


class UtilitySpec:
    """Base class: value and gradient oracles for F plus modulus bounds."""

    kind = None

    def value(self, occ):
        raise NotImplementedError

    def grads(self, occ):
        """U-space partials of F w.r.t. (lambda_1, lambda_2, joint).

        Returns (g1, g2, gj); gj is None when F has no joint term.
        """
        raise NotImplementedError

    def lip_F(self, model):
        """Upper bound on ||grad F|| over the occupancy set."""
        raise NotImplementedError

    def smooth_F(self, model):
        """Upper bound on the Lipschitz modulus of grad F."""
        raise NotImplementedError

    @property
    def strong_concavity(self):
        """(mu_min, mu_max): strong concavity of each player's own payoff."""
        return (0.0, 0.0)

    @property
    def is_linear(self):
        return False

    @property
    def has_entropy(self):
        return False

    def to_json_dict(self):
        raise NotImplementedError


@dataclass(frozen=True)
class LinearReward(UtilitySpec):
    """F = <reward, marginal of `side`>; reward indexed by (s, action)."""

    reward: np.ndarray
    side: str = "min"
    kind = "linear"

    def __post_init__(self):
        object.__setattr__(self, "reward", np.asarray(self.reward, dtype=float))
        if self.side not in ("min", "max"):
            raise ValueError(f"side must be 'min' or 'max', got {self.side!r}")

    def value(self, occ):
        marg = occ.marginal_min if self.side == "min" else occ.marginal_max
        return float(np.sum(self.reward * marg))

    def grads(self, occ):
        g1, g2 = _zeros_like_marginals(occ)
        if self.side == "min":
            g1 += self.reward
        else:
            g2 += self.reward
        return g1, g2, None

    def lip_F(self, model):
        return float(np.linalg.norm(self.reward))

    def smooth_F(self, model):
        return 0.0

    @property
    def is_linear(self):
        return True

    def to_json_dict(self):
        return {"kind": "linear", "side": self.side, "reward": self.reward.tolist()}


@dataclass(frozen=True)
class JointLinearReward(UtilitySpec):
    """F = <reward, joint occupancy>; reward indexed by (s, a, b).

    Linear in the joint measure, hence individually linear: for a fixed
    opponent it collapses to a LinearReward on the player's own marginal.
    Matrix games are the single-state special case.
    """

    reward: np.ndarray
    kind = "joint_linear"

    def __post_init__(self):
        object.__setattr__(self, "reward", np.asarray(self.reward, dtype=float))
        if self.reward.ndim != 3:
            raise ValueError("joint reward must have shape (S, A, B)")

    def value(self, occ):
        return float(np.sum(self.reward * occ.joint))

    def grads(self, occ):
        g1, g2 = _zeros_like_marginals(occ)
        return g1, g2, self.reward

    def lip_F(self, model):
        return float(np.linalg.norm(self.reward))

    def smooth_F(self, model):
        return 0.0

    @property
    def is_linear(self):
        return True

    def to_json_dict(self):
        return {"kind": "joint_linear", "reward": self.reward.tolist()}


@dataclass(frozen=True)
class NegSquaredNorm(UtilitySpec):
    """Quadratic penalty on a player's own marginal occupancy.

    The named player's payoff loses (weight/2) ||lambda_side||^2, so in
    U-space: side "max" contributes -(w/2)||lambda_2||^2, side "min"
    contributes +(w/2)||lambda_1||^2.  Either way the owner's payoff is
    w-strongly concave in their own marginal.
    """

    side: str = "max"
    weight: float = 1.0
    kind = "neg_sq_norm"

    def __post_init__(self):
        if self.side not in ("min", "max"):
            raise ValueError(f"side must be 'min' or 'max', got {self.side!r}")
        if self.weight < 0:
            raise ValueError("weight must be >= 0")

    def value(self, occ):
        if self.side == "max":
            return float(-0.5 * self.weight * np.sum(occ.marginal_max**2))
        return float(+0.5 * self.weight * np.sum(occ.marginal_min**2))

    def grads(self, occ):
        g1, g2 = _zeros_like_marginals(occ)
        if self.side == "max":
            g2 -= self.weight * occ.marginal_max
        else:
            g1 += self.weight * occ.marginal_min
        return g1, g2, None

    def lip_F(self, model):
        return float(self.weight * math.sqrt(2.0))

    def smooth_F(self, model):
        return float(self.weight)

    @property
    def strong_concavity(self):
        if self.side == "min":
            return (self.weight, 0.0)
        return (0.0, self.weight)

    def to_json_dict(self):
        return {"kind": "neg_sq_norm", "side": self.side, "weight": self.weight}


@dataclass(frozen=True)
class Entropy(UtilitySpec):
    """Entropy bonus on a player's own marginal occupancy.

    The named player's payoff gains weight * H(lambda_side).  The gradient is
    unbounded at the boundary, so occupancy entries are floored at
    ENTROPY_CLAMP inside the gradient oracle; exploration keeps real runs
    away from the clamp.
    """

    side: str = "max"
    weight: float = 1.0
    kind = "entropy"

    def __post_init__(self):
        if self.side not in ("min", "max"):
            raise ValueError(f"side must be 'min' or 'max', got {self.side!r}")
        if self.weight < 0:
            raise ValueError("weight must be >= 0")

    def _entropy(self, lam):
        pos = lam > 0
        return float(-np.sum(lam[pos] * np.log(lam[pos])))

    def value(self, occ):
        lam = occ.marginal_max if self.side == "max" else occ.marginal_min
        ent = self.weight * self._entropy(lam)
        return ent if self.side == "max" else -ent

    def grads(self, occ):
        g1, g2 = _zeros_like_marginals(occ)
        if self.side == "max":
            lam = np.maximum(occ.marginal_max, ENTROPY_CLAMP)
            g2 += -self.weight * (1.0 + np.log(lam))
        else:
            # min player's payoff gains w H(lambda_1), so F loses it
            lam = np.maximum(occ.marginal_min, ENTROPY_CLAMP)
            g1 += self.weight * (1.0 + np.log(lam))
        return g1, g2, None

    def lip_F(self, model):
        n = model.n_actions_max if self.side == "max" else model.n_actions_min
        dim = model.n_states * n
        return float(self.weight * (1.0 + abs(math.log(ENTROPY_CLAMP))) * math.sqrt(dim))

    def smooth_F(self, model):
        return float(self.weight / ENTROPY_CLAMP)

    @property
    def strong_concavity(self):
        # Hessian of -sum(l log l) is diag(-1/l); 1/l >= 1 on the simplex.
        if self.side == "min":
            return (self.weight, 0.0)
        return (0.0, self.weight)

    @property
    def has_entropy(self):
        return True

    def to_json_dict(self):
        return {"kind": "entropy", "side": self.side, "weight": self.weight}


@dataclass(frozen=True)
class WeightedSum(UtilitySpec):
    """Sum of component specs (weights fold into the components)."""

    terms: tuple
    kind = "sum"

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise ValueError("WeightedSum needs at least one term")

    def value(self, occ):
        return sum(t.value(occ) for t in self.terms)

    def grads(self, occ):
        g1, g2 = _zeros_like_marginals(occ)
        gj = None
        for t in self.terms:
            t1, t2, tj = t.grads(occ)
            g1 += t1
            g2 += t2
            if tj is not None:
                gj = tj if gj is None else gj + tj
        return g1, g2, gj

    def lip_F(self, model):
        return sum(t.lip_F(model) for t in self.terms)

    def smooth_F(self, model):
        return sum(t.smooth_F(model) for t in self.terms)

    @property
    def strong_concavity(self):
        mins, maxs = zip(*(t.strong_concavity for t in self.terms))
        return (sum(mins), sum(maxs))

    @property
    def is_linear(self):
        return all(t.is_linear for t in self.terms)

    @property
    def has_entropy(self):
        return any(t.has_entropy for t in self.terms)

    def to_json_dict(self):
        return {"kind": "sum", "terms": [t.to_json_dict() for t in self.terms]}


def spec_from_json_dict(doc):
    kind = doc["kind"]
    if kind == "linear":
        return LinearReward(np.array(doc["reward"], dtype=float), doc.get("side", "min"))
    if kind == "joint_linear":
        return JointLinearReward(np.array(doc["reward"], dtype=float))
    if kind == "neg_sq_norm":
        return NegSquaredNorm(doc.get("side", "max"), float(doc.get("weight", 1.0)))
    if kind == "entropy":
        return Entropy(doc.get("side", "max"), float(doc.get("weight", 1.0)))
    if kind == "sum":
        return WeightedSum(tuple(spec_from_json_dict(t) for t in doc["terms"]))
    raise ValueError(f"unknown utility kind {kind!r}")


# ---------------------------------------------------------------------------
# Game value and exact gradients
# ---------------------------------------------------------------------------


def eval_utility(model, spec, pair):
    """U(x, y) = F(occupancy(x, y)), tables used exactly as supplied."""
    return spec.value(exact_occupancy(model, pair))


def eval_utility_reg(model, spec, pair, mu_reg):
    """Regularized value U(x, y) - (mu/2) ||lambda_2(x, y)||^2."""
    if mu_reg < 0:
        raise ValueError(f"mu_reg must be >= 0, got {mu_reg}")
    occ = exact_occupancy(model, pair)
    return spec.value(occ) - 0.5 * mu_reg * float(np.sum(occ.marginal_max**2))


def grad_and_value(model, spec, pair, side, mu_reg=0.0):
    """Gradient of U^mu w.r.t. one table, plus the unregularized value.

    Adjoint formulation: the occupancy responses of both marginals and the
    joint measure all travel through the state occupancy, so one backward
    solve with the composite state weight replaces the full Jacobian.  The
    gradient is the ambient partial (each table entry varied independently)
    and agrees with central finite differences of ``eval_utility_reg``.
    """
    if mu_reg < 0:
        raise ValueError(f"mu_reg must be >= 0, got {mu_reg}")
    if side not in ("min", "max"):
        raise ValueError(f"side must be 'min' or 'max', got {side!r}")
    x, y = pair.min_policy, pair.max_policy
    P = model.transition
    gamma = model.discount
    S = model.n_states
    Pxy = np.einsum("sa,sb,sabt->st", x, y, P)
    M = np.eye(S) - gamma * Pxy.T
    d = np.linalg.solve(M, (1.0 - gamma) * model.initial_dist)
    occ = OccupancyMeasure(
        joint=d[:, None, None] * x[:, :, None] * y[:, None, :],
        marginal_min=d[:, None] * x,
        marginal_max=d[:, None] * y,
        discount=gamma,
    )
    value = spec.value(occ)
    g1, g2, gj = spec.grads(occ)
    if mu_reg:
        g2 = g2 - mu_reg * occ.marginal_max
    w = np.sum(g1 * x, axis=1) + np.sum(g2 * y, axis=1)
    if gj is not None:
        w = w + np.einsum("sab,sa,sb->s", gj, x, y)
    u = np.linalg.solve(M.T, w)
    if side == "min":
        q = np.einsum("sb,sabt->sat", y, P)
        direct = g1 if gj is None else g1 + np.einsum("sab,sb->sa", gj, y)
    else:
        q = np.einsum("sa,sabt->sbt", x, P)
        direct = g2 if gj is None else g2 + np.einsum("sab,sa->sb", gj, x)
    grad = d[:, None] * (gamma * (q @ u) + direct)
    return grad, value


def exact_grad(model, spec, pair, side, mu_reg=0.0):
    """Ambient gradient of the (optionally regularized) value U^mu.

    ``side`` picks the differentiated table ("min" -> x, "max" -> y).  The
    chain rule runs through the occupancy response, including the
    opponent-marginal and joint terms that travel through the shared state
    occupancy.  Agrees with central finite differences of
    ``eval_utility_reg``.
    """
    return grad_and_value(model, spec, pair, side, mu_reg)[0]


def spec_uses_joint(spec):
    if isinstance(spec, JointLinearReward):
        return True
    if isinstance(spec, WeightedSum):
        return any(spec_uses_joint(t) for t in spec.terms)
    return False


def own_pseudo_reward(spec, occ, pair, side, mu_reg=0.0):
    """Per-cell reward table z in the requesting player's own payoff space.

    For the min player, z(s, a) is the derivative of the min player's payoff
    -F^mu along lambda_1 with the opponent's policy held fixed (opponent and
    joint terms fold in through the shared state mass); symmetrically for the
    max player.  ``occ`` may be an exact or an estimated measure.
    """
    g1, g2, gj = spec.grads(occ)
    if mu_reg:
        g2 = g2 - mu_reg * occ.marginal_max
    x, y = pair.min_policy, pair.max_policy
    if side == "min":
        z = g1 + np.einsum("sb,sb->s", g2, y)[:, None]
        if gj is not None:
            z = z + np.einsum("sab,sb->sa", gj, y)
        return -z
    if side == "max":
        z = g2 + np.einsum("sa,sa->s", g1, x)[:, None]
        if gj is not None:
            z = z + np.einsum("sab,sa->sb", gj, x)
        return z
    raise ValueError(f"side must be 'min' or 'max', got {side!r}")


def regularizer_bias_bound(model, mu_reg):
    """Bound on the gradient shift introduced by the quadratic regularizer.

    ||grad_x U - grad_x U^mu|| <= mu_reg * lip_lambda.
    """
    if mu_reg < 0:
        raise ValueError(f"mu_reg must be >= 0, got {mu_reg}")
    return mu_reg * occupancy_constants(model).lip_lambda


def gradient_dominance_modulus(model):
    """Modulus relating the best linear improvement to the optimality gap:
    (1 - gamma) min_s rho(s) / (2 sqrt(2))."""
    return (1.0 - model.discount) * float(model.initial_dist.min()) / (2.0 * math.sqrt(2.0))


# ---------------------------------------------------------------------------
# Closed-form modulus chains
# ---------------------------------------------------------------------------


def lip_utility(lf, n_states, n_a, n_b, gamma):
    return lf * math.sqrt(n_states) * (n_a + n_b) / (1.0 - gamma) ** 2


def smooth_utility(sf, n_states, n_a, n_b, gamma):
    return 2.0 * sf * gamma * math.sqrt(n_states) * (n_a + n_b) ** 1.5 / (1.0 - gamma) ** 3


def lip_utility_reg(lf, n_states, n_a, n_b, gamma):
    return lf * n_states**1.5 * (n_a + n_b) ** 3 / (1.0 - gamma) ** 6


def smooth_utility_reg(sf, n_states, n_a, n_b, gamma):
    return 4.0 * sf * gamma**2 * n_states**1.5 * (n_a + n_b) ** 4 / (1.0 - gamma) ** 8


def quadratic_growth_modulus(min_rho, gamma, mu):
    return min_rho**2 * (1.0 - gamma) ** 2 * mu / 4.0


def ppl_modulus_regularized(min_rho, gamma, mu, sf, n_states, n_a, n_b):
    num = min_rho**4 * (1.0 - gamma) ** 12 * mu**2
    den = 4.0 * sf * gamma**2 * n_states**1.5 * (n_a + n_b) ** 4
    return num / den if den > 0 else math.inf


def ppl_modulus_strong(min_rho, gamma, mu, sf, n_states, n_a, n_b):
    num = min_rho**4 * (1.0 - gamma) ** 7 * mu**2
    den = 4.0 * sf * gamma * math.sqrt(n_states) * (n_a + n_b) ** 1.5
    return num / den if den > 0 else math.inf


@dataclass(frozen=True)
class ModuliReport:
    """Every constant the tuning theory consumes, for one game + spec."""

    regime: str
    mu_used: float
    mu_qg: float
    mu_pl: float
    kappa: float
    lip_maximizer: float
    smooth_phi: float
    lip_U: float
    smooth_U: float
    lip_U_reg: float = None
    smooth_U_reg: float = None
    mu_qg_min: float = None
    mu_pl_min: float = None
    mu_grad_dom: float = None
    entropy_clamp: float = None

    def lines(self):
        """Human-readable (name, value, formula) rows for reporting."""
        rows = [
            ("mu_qg", self.mu_qg, "min_rho^2 (1-g)^2 mu / 4"),
            ("mu_pl", self.mu_pl, "min_rho^4 (1-g)^p mu^2 / (4 sf g^q S^r (A+B)^t)"),
            ("kappa", self.kappa, "smooth / sqrt(mu_qg mu_pl)"),
            ("lip_maximizer", self.lip_maximizer, "smooth / sqrt(mu_pl mu_qg)"),
            ("smooth_phi", self.smooth_phi, "smooth (1 + lip_maximizer)"),
            ("lip_U", self.lip_U, "L_F sqrt(S)(A+B)/(1-g)^2"),
            ("smooth_U", self.smooth_U, "2 l_F g sqrt(S)(A+B)^1.5/(1-g)^3"),
        ]
        if self.lip_U_reg is not None:
            rows.append(("lip_U_reg", self.lip_U_reg, "L_F S^1.5 (A+B)^3/(1-g)^6"))
            rows.append(("smooth_U_reg", self.smooth_U_reg, "4 l_F g^2 S^1.5 (A+B)^4/(1-g)^8"))
        rows.append(("mu_grad_dom", self.mu_grad_dom, "(1-g) min_rho / (2 sqrt 2)"))
        return rows


def compute_moduli(model, spec, mu_reg=0.0, regime="concave"):
    """Evaluate the closed-form modulus chain for a game and utility spec.

    regime "concave": the bare utility is merely concave and mu_reg > 0
    supplies curvature through the regularizer; the chain uses the
    regularized smoothness (with the regularizer's own contribution folded
    into the F-layer modulus, since e.g. linear F alone has none).

    regime "strongly_concave": the spec itself is strongly concave on both
    sides and no regularizer is involved.
    """
    S, A, B = model.n_states, model.n_actions_min, model.n_actions_max
    gamma = model.discount
    minrho = float(model.initial_dist.min())
    lf = spec.lip_F(model)
    sf = spec.smooth_F(model)
    lip_u = lip_utility(lf, S, A, B, gamma)
    smooth_u = smooth_utility(sf, S, A, B, gamma)
    mu_sc_min, mu_sc_max = spec.strong_concavity
    clamp = ENTROPY_CLAMP if spec.has_entropy else None

    if regime == "concave":
        if mu_reg <= 0:
            raise ValueError("no strong concavity available: concave regime needs mu_reg > 0")
        mu = float(mu_reg)
        sf_eff = sf + mu_reg  # regularizer contributes mu to the F-layer smoothness
        lf_eff = lf + mu_reg  # |grad of penalty| <= mu on the occupancy set
        lip_reg = lip_utility_reg(lf_eff, S, A, B, gamma)
        smooth_reg = smooth_utility_reg(sf_eff, S, A, B, gamma)
        mu_qg = quadratic_growth_modulus(minrho, gamma, mu)
        mu_pl = ppl_modulus_regularized(minrho, gamma, mu, sf_eff, S, A, B)
        ell = smooth_reg
        mu_qg_min = mu_pl_min = None
    elif regime == "strongly_concave":
        if mu_sc_max <= 0 or mu_sc_min <= 0:
            raise ValueError(
                "no strong concavity available: strongly_concave regime needs "
                "positive moduli on both sides"
            )
        mu = float(mu_sc_max)
        lip_reg = smooth_reg = None
        mu_qg = quadratic_growth_modulus(minrho, gamma, mu)
        mu_pl = ppl_modulus_strong(minrho, gamma, mu, sf, S, A, B)
        mu_qg_min = quadratic_growth_modulus(minrho, gamma, mu_sc_min)
        mu_pl_min = ppl_modulus_strong(minrho, gamma, mu_sc_min, sf, S, A, B)
        ell = smooth_u
    else:
        raise ValueError(f"unknown regime {regime!r}")

    denom = math.sqrt(mu_qg * mu_pl) if mu_qg * mu_pl > 0 else math.inf
    kappa = ell / denom if denom > 0 and math.isfinite(denom) else math.inf
    lip_star = kappa
    smooth_phi = ell * (1.0 + lip_star) if math.isfinite(lip_star) else math.inf
    return ModuliReport(
        regime=regime,
        mu_used=mu,
        mu_qg=mu_qg,
        mu_pl=mu_pl,
        kappa=kappa,
        lip_maximizer=lip_star,
        smooth_phi=smooth_phi,
        lip_U=lip_u,
        smooth_U=smooth_u,
        lip_U_reg=lip_reg,
        smooth_U_reg=smooth_reg,
        mu_qg_min=mu_qg_min,
        mu_pl_min=mu_pl_min,
        mu_grad_dom=gradient_dominance_modulus(model),
        entropy_clamp=clamp,
    )
