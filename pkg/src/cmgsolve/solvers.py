"""Policy-gradient equilibrium solvers for the zero-sum game.

Two schemes, both operating on the direct parametrization (projected steps
on products of per-state simplices):

* ``nest_pg``: at each outer iteration the maximizer runs a fixed number of
  projected ascent steps on the regularized value (warm-started from its
  previous policy), then the minimizer takes one projected descent step on
  the unregularized value at the fresh inner result.  Output pairs the best
  outer iterate t* with the following inner result y_{t*+1}.
* ``alt_pgda``: single loop; the minimizer steps on the regularized value,
  then the maximizer steps on the unregularized value evaluated at the
  freshly updated minimizer policy.  Output is the best iterate pair.

Which side sees the regularizer is configurable; ``per_paper`` is the
asymmetric assignment above.  Gradients are exact (occupancy chain rule) or
stochastic (two-phase trajectory estimator); in either mode they are taken
with respect to the pre-exploration parameter tables.

Exploitability is measured against certified best responses: value
iteration when the utility is linear in the occupancy, an occupancy-space
convex program when it is concave-quadratic on the responder's own
marginal, and multi-start projected gradient ascent (flagged heuristic)
otherwise.
"""

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .game import PolicyPair, dirichlet_pair, project_rows, uniform_pair
from .minmax import IterTrace, stationarity_proxy
from .occupancy import exact_occupancy
from .sampling import batch_grad
from .utility import (
    Entropy,
    JointLinearReward,
    LinearReward,
    NegSquaredNorm,
    WeightedSum,
    eval_utility,
    eval_utility_reg,
    exact_grad,
    grad_and_value,
)

REPORT_COLUMNS = [
    "iter",
    "u_value",
    "exploitability",
    "gap_min_side",
    "gap_max_side",
    "d_x_proxy",
    "d_y_proxy",
    "br_certificate",
]


@dataclass
class SolverConfig:
    algorithm: str = "alt_pgda"
    mu_reg: float = 0.05
    tau_min: float = 0.1
    tau_max: float = 0.1
    outer_iters: int = 1000
    inner_iters: int = 10
    batch_min: int = 1
    batch_max: int = 1
    horizon: int = 32
    explore_min: float = 0.0
    explore_max: float = 0.0
    gradient_mode: str = "exact"
    regularized_side: str = "per_paper"
    seed: int = 0
    eval_cadence: int = 25
    br_tolerance: float = 1e-6
    snapshot_every: int = 10
    init: str = "uniform"
    simultaneous: bool = False  # diagnostic: evaluate the ascent at the stale x

    def validate(self):
        issues = []
        if self.algorithm not in ("alt_pgda", "nest_pg"):
            issues.append(f"unknown algorithm {self.algorithm!r}")
        if self.tau_min <= 0 or self.tau_max <= 0:
            issues.append("step sizes must be > 0")
        if self.outer_iters < 1 or (self.algorithm == "nest_pg" and self.inner_iters < 1):
            issues.append("iteration counts must be >= 1")
        if self.mu_reg < 0:
            issues.append("mu_reg must be >= 0")
        if self.gradient_mode not in ("exact", "stochastic"):
            issues.append(f"unknown gradient_mode {self.gradient_mode!r}")
        if self.gradient_mode == "stochastic" and (
            self.batch_min < 1 or self.batch_max < 1 or self.horizon < 1
        ):
            issues.append("stochastic mode needs batch sizes and horizon >= 1")
        if self.regularized_side not in ("per_paper", "both", "min_only", "max_only"):
            issues.append(f"unknown regularized_side {self.regularized_side!r}")
        if self.init not in ("uniform", "dirichlet"):
            issues.append(f"unknown init {self.init!r}")
        if self.eval_cadence < 1:
            issues.append("eval_cadence must be >= 1")
        return issues


@dataclass
class Checkpoint:
    iter: int
    pair: PolicyPair
    u_value: float
    exploitability: float
    gap_min_side: float
    gap_max_side: float
    d_x_proxy: float
    d_y_proxy: float
    certificate: str
    y_next: np.ndarray = None


@dataclass
class SolverReport:
    trace: IterTrace
    checkpoints: list
    best_iter: int
    best_pair: PolicyPair
    config: SolverConfig
    wall_clock: float
    diverged: bool = False

    @property
    def best_checkpoint(self):
        for c in self.checkpoints:
            if c.iter == self.best_iter:
                return c
        raise ValueError("best_iter does not index a checkpoint")

    @property
    def final_exploitability(self):
        return self.best_checkpoint.exploitability

    def to_csv(self, path):
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(REPORT_COLUMNS)
            for c in self.checkpoints:
                writer.writerow([
                    c.iter,
                    format(c.u_value, ".17g"),
                    format(c.exploitability, ".17g"),
                    format(c.gap_min_side, ".17g"),
                    format(c.gap_max_side, ".17g"),
                    format(c.d_x_proxy, ".17g"),
                    format(c.d_y_proxy, ".17g"),
                    c.certificate,
                ])

    def summary_dict(self):
        return {
            "t_star": self.best_iter,
            "final_exploitability": self.final_exploitability,
            "diverged": self.diverged,
        }


def _descent_step(point, grad, tau):
    """Projected step plus its stationarity proxy and gradient-mapping norm.

    The update point, the proxy at alpha = 1/tau, and the mapping norm all
    use the same projection; ``grad`` is the gradient of the function being
    minimized (negate for an ascent player, which then makes the returned
    point the ascent update).
    """
    step = project_rows(point - tau * grad)
    diff = point - step
    alpha = 1.0 / tau
    proxy = max(2.0 * alpha * float(np.vdot(grad, diff))
                - alpha**2 * float(np.vdot(diff, diff)), 0.0)
    gmap = float(np.linalg.norm(diff)) * alpha
    return step, proxy, gmap


def _reg_assignment(algorithm, regularized_side, mu):
    """(mu for the min step, mu for the max step)."""
    if regularized_side == "both":
        return mu, mu
    if regularized_side == "min_only":
        return mu, 0.0
    if regularized_side == "max_only":
        return 0.0, mu
    # per_paper: the nested scheme regularizes the inner maximizer, the
    # alternating scheme regularizes the minimizer's step.
    return (0.0, mu) if algorithm == "nest_pg" else (mu, 0.0)


class _GradientEngine:
    """Gradient of the (possibly regularized) value w.r.t. parameter tables.

    ``grad`` returns (gradient of U^mu, unregularized value at the evaluated
    played pair); the value is exact in exact mode and None in stochastic
    mode (where it would cost an extra solve the trace does not need).
    """

    def __init__(self, model, spec, config):
        self.model = model
        self.spec = spec
        self.config = config

    def grad(self, pair, side, mu, step_key):
        cfg = self.config
        if cfg.gradient_mode == "exact":
            played = pair.played()
            g, value = grad_and_value(self.model, self.spec, played, side, mu)
            eps = pair.explore_min if side == "min" else pair.explore_max
            return (1.0 - eps) * g, value
        batch = cfg.batch_min if side == "min" else cfg.batch_max
        key = (step_key << 1) | (0 if side == "min" else 1)
        est = batch_grad(
            self.model, self.spec, pair, side, batch, cfg.horizon, cfg.seed,
            iteration=key, mu_reg=mu,
        )
        # own-payoff ascent direction -> gradient of U^mu
        return (-est.gradient if side == "min" else est.gradient), None


def _blown(*tables):
    return any(not np.all(np.isfinite(t)) or np.linalg.norm(t) > 1e6 for t in tables)


def _init_pair(model, config, rng):
    if config.init == "dirichlet":
        return dirichlet_pair(model, rng, config.explore_min, config.explore_max)
    return uniform_pair(model, config.explore_min, config.explore_max)


def _checkpoint(model, spec, pair, t, dx, dy, tolerance):
    rep = exploitability(model, spec, pair, tolerance)
    return Checkpoint(
        iter=t,
        pair=pair,
        u_value=rep.value,
        exploitability=rep.gap,
        gap_min_side=rep.gap_min_side,
        gap_max_side=rep.gap_max_side,
        d_x_proxy=dx,
        d_y_proxy=dy,
        certificate=rep.certificate,
    )


def _run(model, spec, config):
    issues = config.validate()
    if issues:
        raise ValueError("invalid solver config: " + "; ".join(issues))
    start = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    engine = _GradientEngine(model, spec, config)
    pair = _init_pair(model, config, rng)
    mu_min_step, mu_max_step = _reg_assignment(
        config.algorithm, config.regularized_side, config.mu_reg
    )
    trace = IterTrace()
    checkpoints = [_checkpoint(model, spec, pair, 0, math.nan, math.nan, config.br_tolerance)]
    diverged = False
    nested = config.algorithm == "nest_pg"
    T_in = config.inner_iters if nested else 0

    x, y = pair.min_policy, pair.max_policy
    for t in range(1, config.outer_iters + 1):
        cur = pair.with_tables(x, y)
        if nested:
            y_run = y
            for s in range(1, T_in + 1):
                gy, _ = engine.grad(cur.with_tables(max_policy=y_run), "max", mu_max_step,
                                    step_key=t * (T_in + 2) + s)
                y_run = project_rows(y_run + config.tau_max * gy)
            y_new = y_run
            gx, u_val = engine.grad(cur.with_tables(max_policy=y_new), "min", mu_min_step,
                                    step_key=t * (T_in + 2))
            x_new, dx, gmx = _descent_step(x, gx, config.tau_min)
            # inner-problem stationarity at the returned maximizer policy
            gy_last, _ = engine.grad(cur.with_tables(max_policy=y_new), "max", mu_max_step,
                                     step_key=t * (T_in + 2) + T_in + 1)
            _, dy, gmy = _descent_step(y_new, -gy_last, config.tau_max)
            if u_val is None:
                u_val = eval_utility(model, spec, cur.with_tables(max_policy=y_new))
        else:
            gx, u_val = engine.grad(cur, "min", mu_min_step, step_key=t)
            x_new, dx, gmx = _descent_step(x, gx, config.tau_min)
            y_eval = cur if config.simultaneous else cur.with_tables(min_policy=x_new)
            gy_last, _ = engine.grad(y_eval, "max", mu_max_step, step_key=t)
            y_new, dy, gmy = _descent_step(y, -gy_last, config.tau_max)
            if u_val is None:
                u_val = eval_utility(model, spec, cur)
        trace.record(t, u_val, dx, dy, gmx, gmy)

        if nested:
            # Algorithm output pairs x_{t*} with the *next* inner result.
            if checkpoints and checkpoints[-1].iter == t - 1 and checkpoints[-1].y_next is None:
                checkpoints[-1].y_next = y_new.copy()
        x, y = x_new, y_new
        if t % config.snapshot_every == 0 or t == config.outer_iters:
            trace.snapshots[t] = (x.copy(), y.copy())
        if _blown(x, y):
            diverged = True
            trace.diverged = True
            trace.warnings.append((t, "divergence guard tripped"))
            break
        if t % config.eval_cadence == 0 or t == config.outer_iters:
            checkpoints.append(
                _checkpoint(model, spec, pair.with_tables(x, y), t, dx, dy, config.br_tolerance)
            )

    trace.final_point = (x, y)
    best = select_best_iterate(checkpoints)
    if nested and best.y_next is not None:
        best_pair = PolicyPair(best.pair.min_policy, best.y_next,
                               config.explore_min, config.explore_max)
    else:
        best_pair = best.pair
    return SolverReport(
        trace=trace,
        checkpoints=checkpoints,
        best_iter=best.iter,
        best_pair=best_pair,
        config=config,
        wall_clock=time.perf_counter() - start,
        diverged=diverged,
    )


def nest_pg(model, spec, config):
    """Nested policy gradient (inner ascent loop, one outer descent step)."""
    if config.algorithm != "nest_pg":
        config = replace(config, algorithm="nest_pg")
    return _run(model, spec, config)


def alt_pgda(model, spec, config):
    """Alternating policy gradient descent-ascent (single loop)."""
    if config.algorithm != "alt_pgda":
        config = replace(config, algorithm="alt_pgda")
    return _run(model, spec, config)


def solve(model, spec, config):
    return nest_pg(model, spec, config) if config.algorithm == "nest_pg" else alt_pgda(
        model, spec, config
    )


def select_best_iterate(checkpoints):
    """Checkpoint with minimal measured exploitability among iterations >= 1.

    Ties break toward the later iterate.  The initial (iteration-0)
    evaluation is reference data, not a candidate output.
    """
    candidates = [c for c in checkpoints if c.iter >= 1] or list(checkpoints)
    if not candidates:
        raise ValueError("no evaluated checkpoints")
    best = candidates[0]
    for c in candidates[1:]:
        if c.exploitability <= best.exploitability:
            best = c
    return best


# ---------------------------------------------------------------------------
# Best responses and exploitability
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BestResponse:
    value: float
    policy: np.ndarray
    certificate: str  # "exact" | "heuristic"


@dataclass(frozen=True)
class ExploitabilityReport:
    gap: float
    gap_min_side: float
    gap_max_side: float
    value: float
    certificate: str

    @property
    def is_lower_bound(self):
        return self.certificate != "exact"


def _linear_terms(spec):
    """Flatten a spec into (linear min, linear max, joint, own-quadratics) or None."""
    r1 = r2 = rj = None
    quads = []
    stack = [spec]
    while stack:
        s = stack.pop()
        if isinstance(s, WeightedSum):
            stack.extend(s.terms)
        elif isinstance(s, LinearReward):
            if s.side == "min":
                r1 = s.reward if r1 is None else r1 + s.reward
            else:
                r2 = s.reward if r2 is None else r2 + s.reward
        elif isinstance(s, JointLinearReward):
            rj = s.reward if rj is None else rj + s.reward
        elif isinstance(s, NegSquaredNorm):
            quads.append(s)
        else:
            return None
    return r1, r2, rj, quads


def _responder_reward(model, terms, opponent, side):
    """Per-(state, own action) linear reward for the responder's MDP."""
    r1, r2, rj, _ = terms
    S = model.n_states
    if side == "max":
        R = np.zeros((S, model.n_actions_max))
        if r2 is not None:
            R += r2
        if r1 is not None:
            R += np.einsum("sa,sa->s", r1, opponent)[:, None]
        if rj is not None:
            R += np.einsum("sab,sa->sb", rj, opponent)
    else:
        R = np.zeros((S, model.n_actions_min))
        if r1 is not None:
            R += r1
        if r2 is not None:
            R += np.einsum("sb,sb->s", r2, opponent)[:, None]
        if rj is not None:
            R += np.einsum("sab,sb->sa", rj, opponent)
    return R


def _responder_kernel(model, opponent, side):
    if side == "max":
        return np.einsum("sa,sabt->sbt", opponent, model.transition)
    return np.einsum("sb,sabt->sat", opponent, model.transition)


def _value_iteration(model, R, P_own, side, tolerance):
    """Exact single-agent solve; returns the greedy deterministic policy.

    Bellman-residual certificate: once 2 gamma ||V_{k+1} - V_k||_inf falls
    below the tolerance, the greedy policy's value (in occupancy units,
    which carry the (1 - gamma) normalization) is within tolerance of
    optimal.
    """
    gamma = model.discount
    S, n = R.shape
    V = np.zeros(S)
    opt = np.max if side == "max" else np.min
    cap = 200000
    for _ in range(cap):
        Q = R + gamma * P_own @ V
        V_new = opt(Q, axis=1)
        resid = float(np.max(np.abs(V_new - V)))
        V = V_new
        if 2.0 * gamma * resid <= max(tolerance, 1e-15):
            break
    Q = R + gamma * P_own @ V
    greedy = np.argmax(Q, axis=1) if side == "max" else np.argmin(Q, axis=1)
    policy = np.zeros((S, n))
    policy[np.arange(S), greedy] = 1.0
    return policy


def _quadratic_route_applies(model, terms, side, mu_reg):
    if terms is None:
        return False
    quads = terms[3]
    # Opponent-side quadratics move only through the shared state occupancy,
    # which is constant when there is a single state; otherwise they break
    # the program's curvature sign and the route does not apply.
    if any(q.side != side for q in quads) and model.n_states > 1:
        return False
    if mu_reg > 0 and side != "max" and model.n_states > 1:
        return False
    return True


def _occupancy_program(model, terms, opponent, side, mu_reg, tolerance):
    """Certified best response via a convex program over the occupancy set.

    Variables are the responder's state-action occupancy; the feasible set is
    the discounted flow polytope of the responder's induced MDP, on which the
    objective (linear terms plus own-marginal quadratic penalties) is
    concave for the maximizer / convex for the minimizer.
    """
    import cvxpy as cp

    r1, r2, rj, quads = terms
    gamma = model.discount
    S = model.n_states
    P_own = _responder_kernel(model, opponent, side)  # (S, n, S)
    n = P_own.shape[1]
    R = _responder_reward(model, terms, opponent, side)
    nu = cp.Variable((S, n), nonneg=True)
    # flow constraints: row mass = (1 - gamma) rho + gamma * inflow
    inflow = cp.hstack([cp.sum(cp.multiply(nu, P_own[:, :, s])) for s in range(S)])
    constraints = [
        cp.sum(nu, axis=1) == (1.0 - gamma) * model.initial_dist + gamma * inflow
    ]
    objective = cp.sum(cp.multiply(R, nu))
    # own-side quadratics only; opponent-side ones reach this route only when
    # they are constant on the feasible set (single state) and drop out
    w_own = (mu_reg if side == "max" else 0.0) + sum(
        q.weight for q in quads if q.side == side
    )
    if w_own > 0:
        penalty = 0.5 * w_own * cp.sum_squares(nu)
        objective = objective - penalty if side == "max" else objective + penalty
    problem = cp.Problem(cp.Maximize(objective) if side == "max" else cp.Minimize(objective),
                         constraints)
    _solve_program(problem, tolerance)
    if nu.value is None:
        raise RuntimeError("occupancy program failed to solve")
    occ = np.maximum(np.asarray(nu.value), 0.0)
    d = occ.sum(axis=1)
    d = np.maximum(d, 1e-300)
    policy = occ / d[:, None]
    policy = project_rows(policy)
    return policy


def _solve_program(problem, tolerance):
    import cvxpy as cp

    tol = min(tolerance * 1e-2, 1e-9)
    try:
        problem.solve(solver=cp.CLARABEL, tol_gap_abs=tol, tol_gap_rel=tol, tol_feas=tol)
        return
    except (cp.SolverError, ValueError, TypeError):
        pass
    problem.solve(solver=cp.SCS, eps=tol, max_iters=200000)


def _pga_best_response(model, spec, opponent, side, mu_reg, tolerance, starts, rng):
    """Multi-start projected gradient ascent/descent in policy space."""
    S = model.n_states
    n = model.n_actions_max if side == "max" else model.n_actions_min
    sign = 1.0 if side == "max" else -1.0
    rng = rng or np.random.default_rng(0)

    def objective(policy):
        pair = _pair_for(side, opponent, policy)
        return eval_utility_reg(model, spec, pair, mu_reg)

    def gradient(policy):
        pair = _pair_for(side, opponent, policy)
        return exact_grad(model, spec, pair, side, mu_reg)

    best_policy, best_val = None, -math.inf
    inits = [np.full((S, n), 1.0 / n)]
    inits += [rng.dirichlet(np.ones(n), size=S) for _ in range(max(0, starts - 1))]
    for p0 in inits:
        p, val = _monotone_pga(objective, gradient, p0, sign, tolerance)
        if sign * val > best_val:
            best_val, best_policy = sign * val, p
    return best_policy, sign * best_val


def _pair_for(side, opponent, policy):
    if side == "max":
        return PolicyPair(opponent, policy)
    return PolicyPair(policy, opponent)


def _monotone_pga(objective, gradient, p0, sign, tolerance, max_iters=5000):
    p = np.array(p0, dtype=float)
    tau = 1.0
    tol_proxy = tolerance * 1e-2
    val = sign * objective(p)
    for _ in range(max_iters):
        g = sign * gradient(p)
        if stationarity_proxy(-g, p, 1.0 / tau, project_rows) <= tol_proxy:
            break
        accepted = False
        while tau > 1e-12:
            cand = project_rows(p + tau * g)
            cand_val = sign * objective(cand)
            if cand_val >= val - 1e-15:
                move = float(np.linalg.norm(cand - p))
                p, val = cand, cand_val
                accepted = True
                tau = min(tau * 1.25, 1e3)
                if move < 1e-13:
                    accepted = False
                break
            tau *= 0.5
        if not accepted:
            break
    return p, sign * val


def best_response_value(model, spec, fixed_policy, side, tolerance, mu_reg=0.0,
                        starts=3, rng=None):
    """Opponent-optimal value and policy against a fixed policy.

    ``side`` names the responding player; ``fixed_policy`` is the other
    player's table.  Linear specs solve exactly by value iteration; specs
    that are concave-quadratic in the responder's own marginal solve exactly
    as an occupancy-space convex program; everything else falls back to
    multi-start projected gradient search and is flagged heuristic.
    """
    if side not in ("min", "max"):
        raise ValueError(f"side must be 'min' or 'max', got {side!r}")
    if tolerance <= 0:
        raise ValueError("tolerance must be > 0")
    fixed_policy = np.asarray(fixed_policy, dtype=float)
    terms = _linear_terms(spec)
    if terms is not None and not terms[3] and mu_reg == 0.0:
        R = _responder_reward(model, terms, fixed_policy, side)
        P_own = _responder_kernel(model, fixed_policy, side)
        policy = _value_iteration(model, R, P_own, side, tolerance)
        value = eval_utility(model, spec, _pair_for(side, fixed_policy, policy))
        return BestResponse(value, policy, "exact")
    if _quadratic_route_applies(model, terms, side, mu_reg):
        policy = _occupancy_program(model, terms, fixed_policy, side, mu_reg, tolerance)
        value = eval_utility_reg(model, spec, _pair_for(side, fixed_policy, policy), mu_reg)
        return BestResponse(value, policy, "exact")
    policy, value = _pga_best_response(
        model, spec, fixed_policy, side, mu_reg, tolerance, starts, rng
    )
    return BestResponse(value, policy, "heuristic")


def exploitability(model, spec, pair, tolerance=1e-6):
    """max_y' U(x, y') - min_x' U(x', y), with the one-sided gaps.

    Nonnegative up to solver tolerance; zero exactly at an equilibrium.  If
    either best response is heuristic the result is flagged (it then lower
    bounds the true exploitability).
    """
    br_max = best_response_value(model, spec, pair.min_policy, "max", tolerance)
    br_min = best_response_value(model, spec, pair.max_policy, "min", tolerance)
    u = eval_utility(model, spec, pair)
    cert = "exact" if (br_max.certificate == "exact" and br_min.certificate == "exact") else "heuristic"
    return ExploitabilityReport(
        gap=br_max.value - br_min.value,
        gap_min_side=u - br_min.value,
        gap_max_side=br_max.value - u,
        value=u,
        certificate=cert,
    )
