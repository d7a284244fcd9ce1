"""Constrained min-max optimization with stochastic inexact gradients.

Implements the two iteration schemes used by the game solvers plus their
shared instrumentation:

* ``gdmax``: approximately maximize in y (projected ascent to a certified
  tolerance), then one projected descent step in x;
* ``alt_gda``: single-loop alternating updates where the ascent gradient is
  always evaluated at the freshly updated x.

Near-stationarity is tracked with the one-projected-step proxy

    D(x, alpha) = 2 alpha <g, x - x+> - alpha^2 ||x - x+||^2,
    x+ = proj(x - g / alpha),

which is nonnegative, dominates the squared gradient-mapping norm scaled by
alpha^2, and is monotone in alpha.  Under a proximal gradient-domination
condition, D also certifies near-optimality, which is what the inner
stopping rule of ``gdmax`` uses.

``tune`` evaluates the step-size / batch-size / iteration-count recipes for
the four supported regimes, using the exact leading constants where the
analysis pins them (1/500 and 1/160 for the alternating scheme's descent
step, 1/5 for its ascent step) and unit leading constants elsewhere.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

DIVERGENCE_NORM = 1e6

TRACE_COLUMNS = [
    "iter",
    "f_value",
    "d_x_proxy",
    "d_y_proxy",
    "grad_map_x_norm",
    "grad_map_y_norm",
    "lyapunov",
]


def stationarity_proxy(grad, point, alpha, projector):
    """One-step descent proxy D(point, alpha) for the function behind `grad`.

    ``grad`` must be the gradient of the function being *minimized* at
    ``point`` (pass the negated gradient for an ascent player).  Result is
    clipped at zero against roundoff.
    """
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    step = projector(point - grad / alpha)
    diff = point - step
    val = 2.0 * alpha * float(np.vdot(grad, diff)) - alpha**2 * float(np.vdot(diff, diff))
    return max(val, 0.0)


def gradient_mapping(grad, point, step, projector):
    """(point - proj(point - step * grad)) / step; zero iff projected-fixed."""
    if step <= 0:
        raise ValueError("step must be > 0")
    return (point - projector(point - step * grad)) / step


def saddle_gap_certificate(grad_x, grad_y, x, y):
    """First-order saddle gaps over a product of probability simplices.

    Returns (gap_x, gap_y) with
        gap_x = max_{x'} <grad_x, x - x'>   (min player's best improvement)
        gap_y = max_{y'} <grad_y, y' - y>   (max player's best improvement)
    computed in closed form: a linear function on a simplex is extremized at
    a vertex, per block.
    """
    gx = np.atleast_2d(np.asarray(grad_x, dtype=float))
    gy = np.atleast_2d(np.asarray(grad_y, dtype=float))
    xm = np.atleast_2d(np.asarray(x, dtype=float))
    ym = np.atleast_2d(np.asarray(y, dtype=float))
    gap_x = float(np.sum(np.sum(gx * xm, axis=1) - gx.min(axis=1)))
    gap_y = float(np.sum(gy.max(axis=1) - np.sum(gy * ym, axis=1)))
    return gap_x, gap_y


def lyapunov_value(phi_value, f_value, alpha, phi_star=None):
    """Potential combining outer optimality and inner suboptimality.

    With a known optimum: (phi - phi_star) + alpha (phi - f); otherwise the
    shifted variant phi + alpha (phi - f).
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    base = phi_value - phi_star if phi_star is not None else phi_value
    return base + alpha * (phi_value - f_value)


@dataclass
class OracleSpec:
    """Stochastic inexact first-order oracle.

    ``grad_min(x, y)`` and ``grad_max(x, y)`` return (gradient estimate,
    second-moment record).  ``bias_*`` bound the systematic offset of the
    estimator means from the true gradients; ``variance_*`` bound the second
    moments.  ``value`` is optional and only feeds the trace.
    """

    grad_min: callable
    grad_max: callable
    value: callable = None
    bias_min: float = 0.0
    bias_max: float = 0.0
    variance_min: float = 0.0
    variance_max: float = 0.0

    def __post_init__(self):
        for name in ("bias_min", "bias_max", "variance_min", "variance_max"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass
class SaddleTuning:
    tau_min: float
    tau_max: float
    iters: int
    batch_min: int = 1
    batch_max: int = 1
    inner_iters: int = None
    inner_tol: float = None
    regime: str = ""

    def __post_init__(self):
        if self.tau_min <= 0 or self.tau_max <= 0:
            raise ValueError("step sizes must be > 0")
        if self.iters < 1:
            raise ValueError("iters must be >= 1")


@dataclass
class IterTrace:
    """Per-iteration records of one optimizer run."""

    iters: list = field(default_factory=list)
    f_value: list = field(default_factory=list)
    d_x_proxy: list = field(default_factory=list)
    d_y_proxy: list = field(default_factory=list)
    grad_map_x_norm: list = field(default_factory=list)
    grad_map_y_norm: list = field(default_factory=list)
    lyapunov: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    diverged: bool = False
    final_point: tuple = None

    def record(self, t, f_val, dx, dy, gx, gy, lyap=None):
        self.iters.append(t)
        self.f_value.append(f_val)
        self.d_x_proxy.append(dx)
        self.d_y_proxy.append(dy)
        self.grad_map_x_norm.append(gx)
        self.grad_map_y_norm.append(gy)
        self.lyapunov.append(lyap)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRACE_COLUMNS)
            for i in range(len(self.iters)):
                lyap = self.lyapunov[i]
                writer.writerow([
                    self.iters[i],
                    _fmt(self.f_value[i]),
                    _fmt(self.d_x_proxy[i]),
                    _fmt(self.d_y_proxy[i]),
                    _fmt(self.grad_map_x_norm[i]),
                    _fmt(self.grad_map_y_norm[i]),
                    "" if lyap is None else _fmt(lyap),
                ])


def _fmt(v):
    return "" if v is None else format(float(v), ".17g")


def _blown_up(*arrays):
    for arr in arrays:
        if not np.all(np.isfinite(arr)) or np.linalg.norm(arr) > DIVERGENCE_NORM:
            return True
    return False


def make_pga_argmax(grad_max, projector_y, tau, mu, inner_tol, max_iters):
    """Projected-gradient-ascent inner maximizer with a certified stop.

    Stops once the ascent proxy satisfies D <= 2 mu inner_tol, which under a
    gradient-domination modulus mu certifies an inner_tol-approximate
    maximizer, or when the iteration cap runs out.  Returns (y, certified).
    """
    def solve(x, y0):
        y = y0
        for _ in range(max_iters):
            g, _ = grad_max(x, y)
            if stationarity_proxy(-g, y, 1.0 / tau, projector_y) <= 2.0 * mu * inner_tol:
                return y, True
            y = projector_y(y + tau * g)
        return y, False

    return solve


def gdmax(oracle, inner_solver, config, projectors, x0=None, y0=None,
          snapshot_every=10, lyapunov=None):
    """Nested scheme: certified inner maximization, one outer descent step.

    ``inner_solver(x, y_warm) -> (y, certified)`` supplies the approximate
    maximizer (warm-started at the previous y); a budget failure is recorded
    as a warning and the run continues.  ``lyapunov`` may be a callable
    (x, y) -> float recorded each iteration.
    """
    proj_x, proj_y = projectors
    x, y = np.array(x0, dtype=float), np.array(y0, dtype=float)
    trace = IterTrace()
    for t in range(1, config.iters + 1):
        y, certified = inner_solver(x, y)
        if not certified:
            trace.warnings.append((t, "inner maximizer budget exhausted"))
        gx, _ = oracle.grad_min(x, y)
        gy, _ = oracle.grad_max(x, y)
        _record_step(trace, oracle, config, proj_x, proj_y, t, x, y, gx, gy, lyapunov)
        if t % snapshot_every == 0 or t == config.iters:
            trace.snapshots[t] = (x.copy(), y.copy())
        x = proj_x(x - config.tau_min * gx)
        if _blown_up(x, y):
            trace.diverged = True
            trace.warnings.append((t, "divergence guard tripped"))
            break
    trace.final_point = (x, y)
    return trace


def alt_gda(oracle, config, projectors, x0=None, y0=None, snapshot_every=10,
            lyapunov=None):
    """Single-loop alternation; the ascent gradient sees the fresh x.

    Update order per iteration t:
        x_t <- proj_X(x_{t-1} - tau_min * grad_min(x_{t-1}, y_{t-1}))
        y_t <- proj_Y(y_{t-1} + tau_max * grad_max(x_t,     y_{t-1}))
    """
    proj_x, proj_y = projectors
    x, y = np.array(x0, dtype=float), np.array(y0, dtype=float)
    trace = IterTrace()
    for t in range(1, config.iters + 1):
        gx, _ = oracle.grad_min(x, y)
        x_new = proj_x(x - config.tau_min * gx)
        gy, _ = oracle.grad_max(x_new, y)
        y_new = proj_y(y + config.tau_max * gy)
        _record_step(trace, oracle, config, proj_x, proj_y, t, x, y, gx, gy, lyapunov)
        x, y = x_new, y_new
        if t % snapshot_every == 0 or t == config.iters:
            trace.snapshots[t] = (x.copy(), y.copy())
        if _blown_up(x, y):
            trace.diverged = True
            trace.warnings.append((t, "divergence guard tripped"))
            break
    trace.final_point = (x, y)
    return trace


def _record_step(trace, oracle, config, proj_x, proj_y, t, x, y, gx, gy, lyapunov):
    f_val = oracle.value(x, y) if oracle.value is not None else None
    dx = stationarity_proxy(gx, x, 1.0 / config.tau_min, proj_x)
    dy = stationarity_proxy(-gy, y, 1.0 / config.tau_max, proj_y)
    gmx = float(np.linalg.norm(gradient_mapping(gx, x, config.tau_min, proj_x)))
    gmy = float(np.linalg.norm(gradient_mapping(-gy, y, config.tau_max, proj_y)))
    lyap = lyapunov(x, y) if lyapunov is not None else None
    trace.record(t, f_val, dx, dy, gmx, gmy, lyap)


# ---------------------------------------------------------------------------
# Theory tunings
# ---------------------------------------------------------------------------

REGIMES = ("nc_ppl_gdmax", "ppl_ppl_gdmax", "nc_ppl_altgda", "ppl_ppl_altgda")


def _require(regime, **kwargs):
    missing = [k for k, v in kwargs.items() if v is None]
    if missing:
        raise ValueError(f"regime {regime} needs constants: {', '.join(missing)}")
    bad = [k for k, v in kwargs.items() if not (v > 0 and math.isfinite(v))]
    if bad:
        raise ValueError(f"regime {regime} needs positive finite: {', '.join(bad)}")


def _count(v):
    if not math.isfinite(v):
        raise ValueError("iteration/batch formula diverged; check eps and constants")
    return max(1, math.ceil(v))


def tune(regime, ell=None, lip=None, mu=None, mu_x=None, mu_y=None, kappa=None,
         d_x=None, d_y=None, sigma_x2=0.0, sigma_y2=0.0, eps=None, scale=1.0):
    """Step sizes, batch sizes and iteration counts for a tuning regime.

    Regimes: nc_ppl_gdmax, ppl_ppl_gdmax, nc_ppl_altgda, ppl_ppl_altgda.
    The alternating regimes use the exact analysis constants
    (tau_min = 1/(500 ell kappa^2) or mu_y^2/(160 ell^3), tau_max =
    1/(5 ell)); the nested regimes use unit leading constants.  ``scale``
    multiplies both step sizes for practical runs.
    """
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}; expected one of {REGIMES}")
    if regime.startswith("nc_ppl") and kappa is None and (ell and mu):
        kappa = ell / mu
    if regime == "nc_ppl_gdmax":
        _require(regime, ell=ell, kappa=kappa, lip=lip, d_x=d_x, d_y=d_y, eps=eps)
        tau_x = 1.0 / (ell * kappa)
        tau_y = 1.0 / ell
        T = _count(kappa**3 * lip * (d_x + d_y) / eps**2 * max(math.log(1.0 / eps), 1.0))
        return SaddleTuning(
            tau_min=scale * tau_x, tau_max=scale * tau_y, iters=T,
            batch_min=_count(sigma_x2 / eps**2) if sigma_x2 else 1,
            batch_max=_count(kappa * sigma_y2 / eps**2) if sigma_y2 else 1,
            inner_tol=eps / math.sqrt(18.0), regime=regime,
        )
    if regime == "ppl_ppl_gdmax":
        _require(regime, ell=ell, mu_x=mu_x, mu_y=mu_y, lip=lip, d_x=d_x, d_y=d_y, eps=eps)
        kap_x, kap_y = ell / mu_x, ell / mu_y
        tau_x = 1.0 / (ell * kap_y)
        tau_y = 1.0 / ell
        T = _count(
            ell**2 / (mu_x * mu_y)
            * max(math.log(ell * lip * kap_x * d_x / eps), 1.0)
            * max(math.log(ell * lip * kap_y * d_y / eps), 1.0)
        )
        return SaddleTuning(
            tau_min=scale * tau_x, tau_max=scale * tau_y, iters=T,
            batch_min=_count(kap_x * sigma_x2 / eps) if sigma_x2 else 1,
            batch_max=_count(ell * kap_y * sigma_y2 / eps**2) if sigma_y2 else 1,
            inner_tol=eps / math.sqrt(18.0), regime=regime,
        )
    if regime == "nc_ppl_altgda":
        _require(regime, ell=ell, kappa=kappa, lip=lip, d_x=d_x, d_y=d_y, eps=eps)
        tau_x = 1.0 / (500.0 * ell * kappa**2)
        tau_y = 1.0 / (5.0 * ell)
        T = _count(kappa**2 * ell * lip * (d_x + d_y) / eps**2)
        return SaddleTuning(
            tau_min=scale * tau_x, tau_max=scale * tau_y, iters=T,
            batch_min=_count(ell**2 * kappa**2 * sigma_x2 / eps**2) if sigma_x2 else 1,
            batch_max=_count(kappa**2 * sigma_y2 / eps**2) if sigma_y2 else 1,
            regime=regime,
        )
    # ppl_ppl_altgda
    _require(regime, ell=ell, mu_x=mu_x, mu_y=mu_y, lip=lip, d_x=d_x, d_y=d_y, eps=eps)
    tau_x = mu_y**2 / (160.0 * ell**3)
    tau_y = 1.0 / (5.0 * ell)
    T = _count(ell**3 / (mu_x * mu_y**2) * max(math.log(lip * (d_x + d_y) / eps), 1.0))
    return SaddleTuning(
        tau_min=scale * tau_x, tau_max=scale * tau_y, iters=T,
        batch_min=_count(sigma_x2 / (mu_x * eps)) if sigma_x2 else 1,
        batch_max=_count(sigma_y2 / (mu_x * mu_y**2 * eps)) if sigma_y2 else 1,
        regime=regime,
    )
