"""Preconditioned primal-dual solver for the assembled saddle-point problem.

Each dualized term owns a dual variable.  One iteration performs, in term
insertion order,

* a dual ascent step followed by the conjugate prox of every dualized term,
  evaluated at the extrapolated primal point,
* a primal descent step through the stacked adjoints, followed by the prox
  of every primal term,
* the over-relaxation ``x_bar = 2 x_new - x_old``.

Step sizes are diagonal: each dual entry gets the reciprocal of its row
absolute sum over the term's stacked operator, each primal entry the
reciprocal of its column absolute sum accumulated over all dualized terms
that touch the variable.  Zero sums fall back to step one.  Convergence is
monitored through the summed primal and dual residuals of consecutive
iterates, normalized by the total number of unknowns.

All reductions run in fixed order, so repeated runs from identical inputs
produce bitwise-identical iterates, and a run of ``n`` then ``m``
iterations matches a single run of ``n + m``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .terms import apply_dual_prox, apply_primal_prox

__all__ = [
    "StopConfig",
    "ResidualReport",
    "RunSummary",
    "SolverState",
    "DivergenceError",
    "fresh_state",
    "compute_step_sizes",
    "iterate_once",
    "compute_residual",
    "run",
    "resume",
]


class DivergenceError(RuntimeError):
    """Raised when an iterate stops being finite."""

    def __init__(self, iteration: int):
        super().__init__(f"non-finite iterate detected at iteration {iteration}")
        self.iteration = iteration


@dataclass(frozen=True)
class StopConfig:
    max_iters: int = 10000
    check_every: int = 100
    tolerance: float = 1e-5

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.check_every < 1:
            raise ValueError(f"check_every must be >= 1, got {self.check_every}")
        if not self.tolerance >= 0.0:
            raise ValueError(f"tolerance must be >= 0, got {self.tolerance}")


@dataclass(frozen=True)
class ResidualReport:
    primal: float
    dual: float
    scaled_total: float
    at_iteration: int


@dataclass(frozen=True)
class RunSummary:
    iterations: int
    final: ResidualReport | None
    converged: bool


@dataclass
class SolverState:
    """Iterates and step sizes retained between runs."""

    x: list
    x_prev: list
    x_bar: list
    y: list
    tau: list
    sigma: list
    k: int = 0
    steps_revision: int = -1
    last_report: ResidualReport | None = None
    has_run: bool = False

    def append_variable(self, n: int):
        self.x.append(np.zeros(n))
        self.x_prev.append(np.zeros(n))
        self.x_bar.append(np.zeros(n))

    def append_dual(self, m: int):
        self.y.append(np.zeros(m))


def fresh_state(problem) -> SolverState:
    """Zero-initialized state matching the problem layout."""
    x = [np.zeros(d.n) for d in problem.dims]
    return SolverState(
        x=x,
        x_prev=[v.copy() for v in x],
        x_bar=[v.copy() for v in x],
        y=[np.zeros(b.term.dual_len) for b in problem.dual_bindings],
        tau=[],
        sigma=[],
    )


def _reciprocal_or_one(sums: np.ndarray) -> np.ndarray:
    out = np.ones_like(sums)
    nz = sums != 0.0
    out[nz] = 1.0 / sums[nz]
    return out


def compute_step_sizes(problem):
    """Diagonal steps ``(tau, sigma)`` from operator row and column sums."""
    if not problem.bindings:
        raise ValueError("problem has no terms")
    col_sums = [np.zeros(d.n) for d in problem.dims]
    sigma = []
    for b in problem.dual_bindings:
        row_sums = np.zeros(b.term.dual_len)
        for c, v in enumerate(b.bound):
            op = b.term.col_ops[c]
            row_sums += op.row_abs_sums()
            col_sums[v] += op.col_abs_sums()
        sigma.append(_reciprocal_or_one(row_sums))
    tau = [_reciprocal_or_one(s) for s in col_sums]
    return tau, sigma


def _check_layout(problem, state: SolverState):
    duals = problem.dual_bindings
    if len(state.y) != len(duals):
        raise ValueError(
            f"state holds {len(state.y)} dual variables, problem has {len(duals)}"
        )
    for b in duals:
        if state.y[b.dual_index].shape != (b.term.dual_len,):
            raise ValueError(
                f"dual variable {b.dual_index} has length "
                f"{state.y[b.dual_index].shape[0]}, term needs {b.term.dual_len}"
            )
    if len(state.x) != len(problem.dims):
        raise ValueError(
            f"state holds {len(state.x)} primal variables, problem has "
            f"{len(problem.dims)}"
        )


def _ensure_ready(problem) -> SolverState:
    state = problem._ensure_state()
    _check_layout(problem, state)
    if state.steps_revision != problem.revision:
        state.tau, state.sigma = compute_step_sizes(problem)
        state.steps_revision = problem.revision
    return state


def iterate_once(problem, state: SolverState) -> SolverState:
    """One full primal-dual update; mutates and returns ``state``."""
    x, x_bar, y = state.x, state.x_bar, state.y
    tau, sigma = state.tau, state.sigma
    for b in problem.dual_bindings:
        t, i = b.term, b.dual_index
        z = t.col_ops[0].apply(x_bar[b.bound[0]])
        for c in range(1, t.arity):
            z = z + t.col_ops[c].apply(x_bar[b.bound[c]])
        y[i] = apply_dual_prox(t, y[i] + sigma[i] * z, sigma[i])
    accum = [np.zeros(d.n) for d in problem.dims]
    for b in problem.dual_bindings:
        for c, v in enumerate(b.bound):
            accum[v] += b.term.col_ops[c].apply_adjoint(y[b.dual_index])
    x_new = [x[v] - tau[v] * accum[v] for v in range(len(x))]
    for b in problem.primal_bindings:
        t = b.term
        if t.arity == 1:
            v = b.bound[0]
            x_new[v] = apply_primal_prox(t, x_new[v], tau[v])
        else:
            stacked = np.concatenate([x_new[v] for v in b.bound])
            tau_stacked = np.concatenate([tau[v] for v in b.bound])
            out = apply_primal_prox(t, stacked, tau_stacked)
            off = 0
            for v in b.bound:
                n = problem.dims[v].n
                x_new[v] = out[off : off + n]
                off += n
    state.x_prev = x
    state.x = x_new
    state.x_bar = [2.0 * xn - xo for xn, xo in zip(x_new, x)]
    state.k += 1
    for arr in x_new:
        if not np.all(np.isfinite(arr)):
            raise DivergenceError(state.k)
    for arr in y:
        if not np.all(np.isfinite(arr)):
            raise DivergenceError(state.k)
    return state


def compute_residual(problem, s_prev: SolverState, s: SolverState) -> ResidualReport:
    """Summed primal/dual residuals between consecutive iterates.

    The primal part measures the gradient-step displacement against the
    adjoint of the dual displacement, the dual part the mirror quantity;
    both vanish together exactly at a saddle point.
    """
    dx = [xp - xc for xp, xc in zip(s_prev.x, s.x)]
    dy = [yp - yc for yp, yc in zip(s_prev.y, s.y)]
    adj = [np.zeros(d.n) for d in problem.dims]
    for b in problem.dual_bindings:
        for c, v in enumerate(b.bound):
            adj[v] += b.term.col_ops[c].apply_adjoint(dy[b.dual_index])
    p_sum = 0.0
    for v in range(len(dx)):
        p_sum += float(np.sum(np.abs(dx[v] / s.tau[v] - adj[v])))
    d_sum = 0.0
    for b in problem.dual_bindings:
        t, i = b.term, b.dual_index
        z = t.col_ops[0].apply(dx[b.bound[0]])
        for c in range(1, t.arity):
            z = z + t.col_ops[c].apply(dx[b.bound[c]])
        d_sum += float(np.sum(np.abs(dy[i] / s.sigma[i] - z)))
    total = sum(d.n for d in problem.dims) + sum(
        b.term.dual_len for b in problem.dual_bindings
    )
    return ResidualReport(
        primal=p_sum,
        dual=d_sum,
        scaled_total=(p_sum + d_sum) / total,
        at_iteration=s.k,
    )


def _run_loop(problem, cfg: StopConfig, callback) -> RunSummary:
    state = _ensure_ready(problem)
    if (
        state.last_report is not None
        and state.last_report.scaled_total < cfg.tolerance
    ):
        return RunSummary(iterations=0, final=state.last_report, converged=True)
    start = state.k
    target = start + cfg.max_iters
    converged = False
    report = None
    while state.k < target:
        next_k = state.k + 1
        checking = next_k % cfg.check_every == 0 or next_k == target
        if checking:
            before = replace(state, x=list(state.x), y=list(state.y))
        iterate_once(problem, state)
        if checking:
            report = compute_residual(problem, before, state)
            state.last_report = report
            if callback is not None:
                callback(state.k, report)
            if report.scaled_total < cfg.tolerance:
                converged = True
                break
    state.has_run = True
    return RunSummary(iterations=state.k - start, final=report, converged=converged)


def run(problem, cfg: StopConfig | None = None, callback=None) -> RunSummary:
    """Iterate for up to ``cfg.max_iters`` further iterations.

    Residuals are checked whenever the global iteration count hits a
    multiple of ``check_every`` and at the end of the budget; ``callback``
    receives ``(iteration, report)`` at every check.  Returns immediately
    when the retained state already satisfies the tolerance.
    """
    if not problem.dims:
        raise ValueError("problem has no primal variables")
    if not problem.bindings:
        raise ValueError("problem has no terms")
    return _run_loop(problem, cfg if cfg is not None else StopConfig(), callback)


def resume(problem, cfg: StopConfig | None = None, callback=None) -> RunSummary:
    """Continue a previous run without resetting iterates or the counter.

    Step sizes are recomputed only if the term set changed since they were
    derived.  Requires a prior :func:`run` on this problem.
    """
    if problem.state is None or not problem.state.has_run:
        raise ValueError("resume needs a prior run")
    return _run_loop(problem, cfg if cfg is not None else StopConfig(), callback)
