"""Regularized block Newton solver for min f(x) + lam * ||x||_0.

Each iteration identifies a working index set from the hard-thresholded
gradient step, solves a shifted Newton system on that block only (the
off-block part of the direction is the exact annihilation of the
complementary entries), safeguards the direction with a descent test,
and backtracks with a modified Armijo rule that keeps the complementary
block exactly zero at every trial point.

A plain hard-thresholding fixed-point iteration is included as a
baseline, along with the parameter bounds and theory constants used by
the diagnostic/invariant test suite.
"""

import time
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .core import (
    IndexSet,
    InvalidInputError,
    ThresholdParams,
    as_vector,
    hard_threshold,
    stationarity_residual,
    support,
    threshold_set,
)
from .oracles import ObjectiveOracle, estimate_lipschitz

__all__ = [
    "ConfigurationError",
    "IndefiniteSystemError",
    "LineSearchError",
    "DegenerateOriginError",
    "SolverConfig",
    "HistoryRow",
    "IterationTrace",
    "SolveReport",
    "TheoryConstants",
    "select_index_set",
    "regularization",
    "newton_direction",
    "descent_check",
    "gradient_direction",
    "line_search",
    "solve",
    "iht_baseline",
    "lambda_bounds",
    "theory_constants",
]


class ConfigurationError(ValueError):
    """Solver parameters are inconsistent with the problem instance."""


class IndefiniteSystemError(RuntimeError):
    """The shifted block system could not be solved by a definite
    factorization or by CG; the caller falls back to the gradient step."""


class LineSearchError(RuntimeError):
    """No backtracking step satisfied the sufficient-decrease rule."""


class DegenerateOriginError(ValueError):
    """The gradient vanishes at the origin, so the penalty lower bound
    is undefined (the origin is already stationary for any penalty)."""


@dataclass
class SolverConfig:
    """Tunables of the block Newton iteration.

    ``tau`` and ``lam`` default to None and are resolved per problem:
    tau = 1 / (4 * L_hat) from a power-iteration smoothness estimate,
    lam = 0.1 * lambda_lower from the origin-gradient bound.
    """

    tau: Optional[float] = None
    lam: Optional[float] = None
    delta: float = 1e-4
    sigma: float = 1e-4
    beta: float = 0.5
    epsilon: float = 1e-6
    cap_d: float = 0.1
    mu0: float = 0.1
    max_iter: int = 2000
    ls_max_backtracks: int = 50
    dense_cutoff: int = 2000
    cg_tol: float = 1e-10
    cg_max_iter: int = 0  # 0 means 10 * |T|
    seed: int = 0
    index_rule: str = "default"  # or "paper-literal" (two-step lookback)
    lipschitz_iters: int = 50

    def __post_init__(self):
        if self.tau is not None and not self.tau > 0:
            raise ConfigurationError("tau must be positive")
        if self.lam is not None and not self.lam > 0:
            raise ConfigurationError("lam must be positive")
        if not 0 < self.sigma < 0.5:
            raise ConfigurationError("sigma must lie in (0, 1/2)")
        if not 0 < self.beta < 1:
            raise ConfigurationError("beta must lie in (0, 1)")
        if not self.delta > 0:
            raise ConfigurationError("delta must be positive")
        if self.epsilon < 0:
            raise ConfigurationError("epsilon must be nonnegative")
        if not self.cap_d > 0:
            raise ConfigurationError("cap_d must be positive")
        if self.max_iter < 1 or self.ls_max_backtracks < 1:
            raise ConfigurationError("max_iter and ls_max_backtracks must be >= 1")
        if self.index_rule not in ("default", "paper-literal"):
            raise ConfigurationError(f"unknown index_rule {self.index_rule!r}")


@dataclass
class HistoryRow:
    """One completed iteration: state at its start, step actually taken."""

    k: int
    fval: float
    residual_norm: float
    t_size: int
    mu: float
    alpha: float
    direction_kind: str
    wall_time: float


@dataclass
class IterationTrace:
    """Full per-iteration state handed to an optional trace callback;
    used by the invariant test suite, never by the solver itself."""

    k: int
    x: np.ndarray
    g: np.ndarray
    fval: float
    t_set: IndexSet
    t_prev: IndexSet
    s_nonempty: bool
    residual_norm: float
    mu: float
    direction: np.ndarray
    direction_kind: str
    alpha: float
    backtracks: int
    x_new: np.ndarray
    fval_new: float


@dataclass
class SolveReport:
    x_final: np.ndarray
    converged: bool
    iterations: int
    history: list
    stop_reason: str  # residual | max_iter | line_search_fail
    residual_final: float
    stagnated: bool
    config: dict

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "stop_reason": self.stop_reason,
            "converged": self.converged,
            "iterations": self.iterations,
            "x_final": self.x_final.tolist(),
            "residual_final": self.residual_final,
            "stagnated": self.stagnated,
            "history": [asdict(row) for row in self.history],
        }


@dataclass
class TheoryConstants:
    """Constants of the convergence analysis, exposed for diagnostics."""

    alpha_bar: float
    tau_bar: float
    rho: float
    lambda_lower: Optional[float] = None
    lambda_upper: Optional[float] = None


def select_index_set(
    x,
    g,
    params: ThresholdParams,
    t_prev: IndexSet,
    t_prev2: Optional[IndexSet] = None,
    rule: str = "default",
):
    """Working-set update: take the fresh threshold set whenever it
    contributes indices not already tracked, otherwise keep the previous
    set (or, under the ``paper-literal`` rule, the one before it).

    Returns the chosen set and whether fresh indices appeared.
    """
    t_tilde = threshold_set(x, g, params)
    fresh = t_tilde.difference(t_prev)
    if len(fresh) > 0:
        return t_tilde, True
    if rule == "paper-literal" and t_prev2 is not None:
        return t_prev2, False
    return t_prev, False


def regularization(residual_norm: float, cap_d: float) -> float:
    """Hessian shift min(residual_norm^2, cap_d); vanishes quadratically
    as the stationarity residual does."""
    if residual_norm < 0:
        raise InvalidInputError("residual_norm must be nonnegative")
    if cap_d <= 0:
        raise InvalidInputError("cap_d must be positive")
    return min(residual_norm * residual_norm, cap_d)


def _conjugate_gradient(matvec, b, tol, max_iter):
    """Plain CG for an SPD operator; raises on non-positive curvature or
    when the residual bound is not met within ``max_iter``."""
    x = np.zeros_like(b)
    bound = tol * max(1.0, float(np.linalg.norm(b)))
    r = b.copy()
    rs = float(r @ r)
    if np.sqrt(rs) <= bound:
        return x
    p = r.copy()
    for _ in range(max_iter):
        ap = matvec(p)
        p_ap = float(p @ ap)
        if p_ap <= 0.0 or not np.isfinite(p_ap):
            raise IndefiniteSystemError("non-positive curvature encountered in CG")
        step = rs / p_ap
        x += step * p
        r -= step * ap
        rs_new = float(r @ r)
        if np.sqrt(rs_new) <= bound:
            return x
        p = r + (rs_new / rs) * p
        rs = rs_new
    raise IndefiniteSystemError("CG did not reach the requested residual")


def newton_direction(
    oracle: ObjectiveOracle,
    x,
    g,
    t_set: IndexSet,
    mu: float,
    cfg: SolverConfig,
) -> np.ndarray:
    """Direction with (H_TT + mu I) d_T = -g_T and d on the complement
    equal to -x there.

    Solved by a dense symmetric factorization while |T| is at or below
    ``cfg.dense_cutoff``, else by CG on the restricted-Hessian apply.
    Raises ``IndefiniteSystemError`` on factorization or CG breakdown.
    """
    x = np.asarray(x, dtype=float)
    g = np.asarray(g, dtype=float)
    idx0 = t_set.zero_based
    comp0 = t_set.complement().zero_based
    d = np.zeros_like(x)
    d[comp0] = -x[comp0]
    k = len(t_set)
    if k == 0:
        return d
    hess = oracle.sub_hessian(x, t_set)
    b = -g[idx0]
    if k <= cfg.dense_cutoff:
        mat = np.array(hess.dense(), dtype=float)
        mat[np.arange(k), np.arange(k)] += mu
        try:
            factor = scipy.linalg.cho_factor(mat, check_finite=False)
            d_t = scipy.linalg.cho_solve(factor, b, check_finite=False)
        except scipy.linalg.LinAlgError as exc:
            raise IndefiniteSystemError(str(exc)) from exc
        # one refinement pass if rounding left a visible residual
        bound = cfg.cg_tol * max(1.0, float(np.linalg.norm(b)))
        res = b - mat @ d_t
        if np.linalg.norm(res) > bound:
            d_t = d_t + scipy.linalg.cho_solve(factor, res, check_finite=False)
            if np.linalg.norm(b - mat @ d_t) > bound:
                raise IndefiniteSystemError("factorized solve left a large residual")
        if not np.all(np.isfinite(d_t)):
            raise IndefiniteSystemError("non-finite Newton solution")
    else:
        max_iter = cfg.cg_max_iter if cfg.cg_max_iter > 0 else 10 * k
        d_t = _conjugate_gradient(
            lambda v: hess.apply(v) + mu * v, b, cfg.cg_tol, max_iter
        )
    d[idx0] = d_t
    return d


def descent_check(g, d, x, t_set: IndexSet, delta, tau, mu) -> bool:
    """Accept the candidate direction only if its block slope is steep
    enough:

        <g_T, d_T> <= -delta ||d||^2 + ||x_Tbar||^2 / (4 tau) - mu ||d_T||^2

    where ||d|| includes the complement block (which is -x there).
    """
    g = np.asarray(g, dtype=float)
    d = np.asarray(d, dtype=float)
    x = np.asarray(x, dtype=float)
    idx0 = t_set.zero_based
    comp0 = t_set.complement().zero_based
    lhs = float(g[idx0] @ d[idx0])
    x_off = x[comp0]
    d_t = d[idx0]
    rhs = (
        -delta * float(d @ d)
        + float(x_off @ x_off) / (4.0 * tau)
        - mu * float(d_t @ d_t)
    )
    return lhs <= rhs


def gradient_direction(g, x, t_set: IndexSet) -> np.ndarray:
    """Fallback direction: steepest descent on the block, annihilation
    of the complement."""
    g = np.asarray(g, dtype=float)
    x = np.asarray(x, dtype=float)
    d = np.zeros_like(x)
    idx0 = t_set.zero_based
    comp0 = t_set.complement().zero_based
    d[idx0] = -g[idx0]
    d[comp0] = -x[comp0]
    return d


def line_search(
    oracle: ObjectiveOracle,
    x,
    fval: float,
    g,
    d,
    t_set: IndexSet,
    sigma: float,
    beta: float,
    max_backtracks: int,
):
    """Backtracking on the block only: the trial point carries
    x_T + alpha d_T on T and exact zeros on the complement regardless of
    alpha. Accepts the smallest m with

        f(x(beta^m)) <= f(x) + sigma beta^m <g, d>.

    Returns (alpha, x_new, f_new, m); raises ``LineSearchError`` if no
    m <= max_backtracks qualifies.
    """
    x = np.asarray(x, dtype=float)
    d = np.asarray(d, dtype=float)
    idx0 = t_set.zero_based
    gd = float(np.asarray(g, dtype=float) @ d)
    x_t = x[idx0]
    d_t = d[idx0]
    for m in range(max_backtracks + 1):
        alpha = beta**m
        trial = np.zeros_like(x)
        trial[idx0] = x_t + alpha * d_t
        f_trial = oracle.value(trial)
        if f_trial <= fval + sigma * alpha * gd:
            return alpha, trial, f_trial, m
    raise LineSearchError(
        f"no step of size beta^m, m <= {max_backtracks}, achieved sufficient decrease"
    )


def lambda_bounds(oracle: ObjectiveOracle, tau: float):
    """Penalty bounds from the origin gradient: the lower one keeps the
    origin from being stationary, the upper one is where it becomes so.

    lambda_lower = min over nonzero entries of (tau/2) g_i(0)^2,
    lambda_upper = max over entries of the same quantity.
    """
    g0 = oracle.gradient(np.zeros(oracle.n))
    scaled = 0.5 * tau * g0 * g0
    nonzero = g0 != 0
    if not np.any(nonzero):
        raise DegenerateOriginError(
            "gradient at the origin is zero; the origin is stationary for any penalty"
        )
    return float(scaled[nonzero].min()), float(scaled.max())


def theory_constants(
    L: float,
    delta: float,
    sigma: float,
    beta: float,
    n: int,
    nu: float,
    cap_d: float,
    tau: float,
) -> TheoryConstants:
    """Step-size and descent constants of the convergence analysis.

    alpha_bar bounds the accepted Armijo step from below, tau_bar is the
    admissible prox-step bound, and rho is the descent modulus (positive
    whenever tau < tau_bar).
    """
    if L <= 0 or delta <= 0 or not 0 < sigma < 0.5 or not 0 < beta < 1:
        raise ConfigurationError("require L > 0, delta > 0, sigma in (0,1/2), beta in (0,1)")
    if n < 1 or nu <= 0 or cap_d <= 0 or tau <= 0:
        raise ConfigurationError("require n >= 1, nu > 0, cap_d > 0, tau > 0")
    denom = L / delta - sigma
    if denom == 0:
        raise ConfigurationError("invalid parameters: L/delta equals sigma")
    alpha_bar = min((1.0 - 2.0 * sigma) / denom, 2.0 * (1.0 - sigma) * delta / L, 1.0)
    tau_bar = min(
        2.0 * alpha_bar * delta * beta / (n * L * L),
        alpha_bar * beta / n,
        1.0 / (4.0 * L),
        nu / (n * (2.0 * L + cap_d)),
    )
    rho = min((2.0 * delta - n * tau * L * L) / 2.0, (2.0 - n * tau) / 2.0)
    return TheoryConstants(alpha_bar=alpha_bar, tau_bar=tau_bar, rho=rho)


def _resolve_tau_lam(oracle: ObjectiveOracle, cfg: SolverConfig):
    """Fill in tau and lam defaults; returns (tau, lam, lower, upper, L_hat)."""
    lipschitz = None
    tau = cfg.tau
    if tau is None:
        lipschitz = estimate_lipschitz(
            oracle, iters=cfg.lipschitz_iters, seed=cfg.seed
        )
        tau = 1.0 / (4.0 * lipschitz)
    lower = upper = None
    lam = cfg.lam
    try:
        lower, upper = lambda_bounds(oracle, tau)
    except DegenerateOriginError:
        if lam is None:
            raise ConfigurationError(
                "gradient at the origin vanishes; set lam explicitly"
            ) from None
    if lam is None:
        lam = 0.1 * lower
    elif lower is not None and lam >= lower:
        warnings.warn(
            f"lam={lam:.3g} is not below lambda_lower={lower:.3g}; "
            "weak entries may never be admitted to the working set",
            stacklevel=3,
        )
    return tau, lam, lower, upper, lipschitz


def _config_echo(cfg: SolverConfig, tau, lam, lower, upper, lipschitz) -> dict:
    echo = asdict(cfg)
    echo.update(
        tau=tau,
        lam=lam,
        lambda_lower=lower,
        lambda_upper=upper,
        lipschitz_estimate=lipschitz,
    )
    return echo


_STAGNATION_RTOL = 1e-14
_STAGNATION_SPAN = 5


def solve(
    oracle: ObjectiveOracle,
    cfg: Optional[SolverConfig] = None,
    x0=None,
    trace: Optional[Callable[[IterationTrace], None]] = None,
) -> SolveReport:
    """Run the block Newton iteration from ``x0`` (default: the origin).

    Per iteration: refresh the working set, stop once the stationarity
    residual drops below ``cfg.epsilon``, shift the block Hessian by
    min(residual^2, cap_d), try the Newton direction, fall back to the
    gradient direction when the solve breaks down or the descent test
    rejects, then backtrack. Stops additionally on ``max_iter``, on a
    failed line search, or when the residual stagnates at a
    floating-point floor (relative change below 1e-14 for 5 iterations;
    flagged on the report).

    ``trace`` receives an :class:`IterationTrace` per completed step.
    """
    if cfg is None:
        cfg = SolverConfig()
    if x0 is None:
        x = np.zeros(oracle.n)
    else:
        x = as_vector(x0, "x0").copy()
        if x.shape[0] != oracle.n:
            raise ConfigurationError(
                f"x0 has length {x.shape[0]}, oracle dimension is {oracle.n}"
            )
    tau, lam, lower, upper, lipschitz = _resolve_tau_lam(oracle, cfg)
    params = ThresholdParams(tau, lam)
    echo = _config_echo(cfg, tau, lam, lower, upper, lipschitz)

    fval, g = oracle.value_and_gradient(x)
    t_prev = IndexSet.empty(oracle.n)
    t_prev2 = IndexSet.empty(oracle.n)
    history: list[HistoryRow] = []
    recent_residuals: list[float] = []
    stop_reason = "max_iter"
    converged = False
    stagnated = False
    residual_final = float("inf")
    t_start = time.perf_counter()

    for k in range(cfg.max_iter):
        t_set, s_nonempty = select_index_set(
            x, g, params, t_prev, t_prev2, cfg.index_rule
        )
        if len(t_set) == 0 and not np.any(x):
            raise ConfigurationError(
                "threshold set is empty at the zero iterate: the penalty is too "
                "large, choose lam below lambda_lower"
            )
        _, fnorm = stationarity_residual(x, g, t_set)
        residual_final = fnorm
        if fnorm < cfg.epsilon:
            stop_reason = "residual"
            converged = True
            break
        recent_residuals.append(fnorm)
        if len(recent_residuals) > _STAGNATION_SPAN + 1:
            recent_residuals.pop(0)
        if len(recent_residuals) == _STAGNATION_SPAN + 1:
            pairs = zip(recent_residuals[:-1], recent_residuals[1:])
            if all(
                abs(cur - prev) <= _STAGNATION_RTOL * max(abs(prev), 1e-300)
                for prev, cur in pairs
            ):
                # numerical floor reached below which progress is rounding noise
                stop_reason = "residual"
                converged = True
                stagnated = True
                break

        mu = regularization(fnorm, cfg.cap_d)
        direction_kind = "newton"
        try:
            d = newton_direction(oracle, x, g, t_set, mu, cfg)
        except IndefiniteSystemError:
            d = None
        if d is None or not descent_check(g, d, x, t_set, cfg.delta, tau, mu):
            d = gradient_direction(g, x, t_set)
            direction_kind = "gradient"
        try:
            alpha, x_new, f_new, backtracks = line_search(
                oracle, x, fval, g, d, t_set, cfg.sigma, cfg.beta, cfg.ls_max_backtracks
            )
        except LineSearchError:
            stop_reason = "line_search_fail"
            break
        history.append(
            HistoryRow(
                k=k,
                fval=fval,
                residual_norm=fnorm,
                t_size=len(t_set),
                mu=mu,
                alpha=alpha,
                direction_kind=direction_kind,
                wall_time=time.perf_counter() - t_start,
            )
        )
        if trace is not None:
            trace(
                IterationTrace(
                    k=k,
                    x=x.copy(),
                    g=g.copy(),
                    fval=fval,
                    t_set=t_set,
                    t_prev=t_prev,
                    s_nonempty=s_nonempty,
                    residual_norm=fnorm,
                    mu=mu,
                    direction=d,
                    direction_kind=direction_kind,
                    alpha=alpha,
                    backtracks=backtracks,
                    x_new=x_new.copy(),
                    fval_new=f_new,
                )
            )
        t_prev2 = t_prev
        t_prev = t_set
        x = x_new
        fval, g = f_new, oracle.gradient(x_new)

    return SolveReport(
        x_final=x,
        converged=converged,
        iterations=len(history),
        history=history,
        stop_reason=stop_reason,
        residual_final=residual_final,
        stagnated=stagnated,
        config=echo,
    )


def iht_baseline(
    oracle: ObjectiveOracle,
    tau: Optional[float] = None,
    lam: Optional[float] = None,
    epsilon: float = 1e-6,
    max_iter: int = 2000,
    x0=None,
    seed: int = 0,
    lipschitz_iters: int = 50,
) -> SolveReport:
    """Fixed-point baseline x <- hard_threshold(x - tau * grad f(x)).

    Stops when the update moves less than ``epsilon`` or at
    ``max_iter``. Unset tau / lam resolve exactly as in :func:`solve`
    so the two methods share thresholds in benchmarks. The report uses
    the same schema as :func:`solve`; the residual column records the
    fixed-point step norm.
    """
    cfg = SolverConfig(
        tau=tau,
        lam=lam,
        epsilon=epsilon,
        max_iter=max_iter,
        seed=seed,
        lipschitz_iters=lipschitz_iters,
    )
    tau, lam, lower, upper, lipschitz = _resolve_tau_lam(oracle, cfg)
    params = ThresholdParams(tau, lam)
    echo = _config_echo(cfg, tau, lam, lower, upper, lipschitz)

    if x0 is None:
        x = np.zeros(oracle.n)
    else:
        x = as_vector(x0, "x0").copy()
        if x.shape[0] != oracle.n:
            raise ConfigurationError(
                f"x0 has length {x.shape[0]}, oracle dimension is {oracle.n}"
            )
    history: list[HistoryRow] = []
    converged = False
    stop_reason = "max_iter"
    step_norm = float("inf")
    t_start = time.perf_counter()
    for k in range(max_iter):
        fval, g = oracle.value_and_gradient(x)
        x_new = hard_threshold(x - tau * g, params)
        step_norm = float(np.linalg.norm(x_new - x))
        history.append(
            HistoryRow(
                k=k,
                fval=fval,
                residual_norm=step_norm,
                t_size=int(np.count_nonzero(x_new)),
                mu=0.0,
                alpha=1.0,
                direction_kind="iht",
                wall_time=time.perf_counter() - t_start,
            )
        )
        x = x_new
        if step_norm < epsilon:
            converged = True
            stop_reason = "residual"
            break
    return SolveReport(
        x_final=x,
        converged=converged,
        iterations=len(history),
        history=history,
        stop_reason=stop_reason,
        residual_final=step_norm,
        stagnated=False,
        config=echo,
    )
