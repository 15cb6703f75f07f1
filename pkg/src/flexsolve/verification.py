"""Brute-force numerical oracles for cross-checking the fast paths.

Nothing here shares code or constants with the production kernels: scalar
prox objectives are minimized by golden-section search, coupled groups by
an exact reduction to a 1-d search or by support enumeration, and the
reference saddle-point loop works on dense matrices with plain scalar step
sizes.  Conjugate proxes are obtained from the primal ones through the
Moreau decomposition, so the closed forms under test never feed back into
their own check.
"""

from __future__ import annotations

import numpy as np

from .terms import ProxKind

__all__ = [
    "oracle_prox",
    "oracle_prox_dual",
    "oracle_dense_solve",
]

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
_DENSE_SIZE_CAP = 10_000


def _golden_min(fun, lo, hi, iters: int = 160) -> np.ndarray:
    """Vectorized golden-section minimizer over [lo, hi] per component."""
    a = np.asarray(lo, dtype=np.float64).copy()
    b = np.asarray(hi, dtype=np.float64).copy()
    for _ in range(iters):
        h = b - a
        c = b - _GOLDEN * h
        d = a + _GOLDEN * h
        take_left = fun(c) < fun(d)
        b = np.where(take_left, d, b)
        a = np.where(take_left, a, c)
    return (a + b) / 2.0


def _scalar_objective(tag: str, params: dict):
    if tag == "l1":
        alpha = params["alpha"]
        shift = params.get("shift", 0.0)
        return lambda v: alpha * np.abs(v - shift)
    if tag == "l2":
        alpha = params["alpha"]
        shift = params.get("shift", 0.0)
        return lambda v: (alpha / 2.0) * (v - shift) ** 2
    if tag == "kl":
        f = np.asarray(params["data"], dtype=np.float64)

        def kl(v):
            with np.errstate(divide="ignore", invalid="ignore"):
                body = v - f + f * np.log(np.where(v > 0.0, f / v, 1.0))
                body = np.where((f > 0.0) & (v <= 0.0), np.inf, body)
                body = np.where((f == 0.0) & (v >= 0.0), v, body)
            return np.where(v < 0.0, np.inf, body)

        return kl
    raise ValueError(f"unknown scalar functional {tag!r}")


def _scalar_bracket(tag: str, params: dict, tau: float, y: np.ndarray):
    if tag in ("l1", "l2"):
        shift = np.broadcast_to(
            np.asarray(params.get("shift", 0.0), dtype=np.float64), y.shape
        )
        lo = np.minimum(y, shift) - 1.0
        hi = np.maximum(y, shift) + 1.0
        return lo, hi
    if tag == "kl":
        f = np.broadcast_to(np.asarray(params["data"], dtype=np.float64), y.shape)
        hi = np.abs(y) + tau + np.sqrt(tau * f) + 1.0
        return np.zeros_like(y), hi
    raise ValueError(f"unknown scalar functional {tag!r}")


def _norm_gauge(tag: str, params: dict):
    # scalar penalty applied to the group magnitude
    alpha = params["alpha"]
    if tag == "group-l2":
        return lambda t: alpha * t
    if tag == "group-huber":
        eps = params.get("epsilon", 0.0)

        def huber(t):
            if eps == 0.0:
                return alpha * np.abs(t)
            a = np.abs(t)
            return alpha * np.where(a >= eps, a - eps / 2.0, t * t / (2.0 * eps))

        return huber
    raise ValueError(f"unknown group functional {tag!r}")


def _prox_norm_groups(tag: str, params: dict, tau: float, y: np.ndarray) -> np.ndarray:
    """Exact group prox via reduction to the magnitude.

    For a penalty that depends on a group only through its Euclidean norm,
    the minimizer is collinear with the input, so it suffices to search the
    magnitude on [0, ||q||].
    """
    groups = params["groups"]
    q = y.reshape(groups, -1)
    r = np.sqrt((q * q).sum(axis=0))
    gauge = _norm_gauge(tag, params)
    t = _golden_min(lambda s: 0.5 * (s - r) ** 2 + tau * gauge(s), 0.0, r)
    scale = np.divide(t, r, out=np.zeros_like(r), where=r > 0.0)
    return (q * scale).reshape(-1)


def _project_simplex_enum(z: np.ndarray) -> np.ndarray:
    """Exact Euclidean projection onto the probability simplex by
    enumerating candidate supports; intended for small label counts."""
    k = z.shape[0]
    best = None
    best_obj = np.inf
    for mask in range(1, 1 << k):
        idx = [i for i in range(k) if mask >> i & 1]
        lam = (z[idx].sum() - 1.0) / len(idx)
        v = np.zeros(k)
        v[idx] = z[idx] - lam
        if v[idx].min() < -1e-12:
            continue
        v = np.maximum(v, 0.0)
        obj = 0.5 * float(((v - z) ** 2).sum())
        if obj < best_obj:
            best_obj = obj
            best = v
    return best


def oracle_prox(tag: str, params: dict, tau: float, y) -> np.ndarray:
    """Numeric prox of a tagged functional at scalar step ``tau``.

    Scalar-separable tags: ``l1``, ``l2`` (with optional ``shift``), ``kl``
    (with ``data``).  Group tags: ``group-l2``, ``group-huber`` (with
    ``groups``), ``simplex-linear`` (with ``costs`` and ``labels``), and
    ``zero``.  Accuracy is limited by golden-section on the objective,
    about 1e-8 in the argument.
    """
    y = np.asarray(y, dtype=np.float64)
    tau = float(tau)
    if tau <= 0.0:
        raise ValueError(f"step must be positive, got {tau}")
    if tag == "zero":
        return y.copy()
    if tag in ("l1", "l2", "kl"):
        g = _scalar_objective(tag, params)
        lo, hi = _scalar_bracket(tag, params, tau, y)
        return _golden_min(lambda v: 0.5 * (v - y) ** 2 + tau * g(v), lo, hi)
    if tag in ("group-l2", "group-huber"):
        return _prox_norm_groups(tag, params, tau, y)
    if tag == "simplex-linear":
        labels = params["labels"]
        costs = np.asarray(params["costs"], dtype=np.float64)
        alpha = params["alpha"]
        z = (y - tau * alpha * costs).reshape(labels, -1)
        out = np.empty_like(z)
        for p in range(z.shape[1]):
            out[:, p] = _project_simplex_enum(z[:, p])
        return out.reshape(-1)
    raise ValueError(f"unknown functional tag {tag!r}")


def oracle_prox_dual(tag: str, params: dict, sigma: float, y) -> np.ndarray:
    """Numeric conjugate prox through the Moreau decomposition:
    ``prox of the conjugate at sigma = y - sigma * prox of the functional
    at 1/sigma, evaluated at y/sigma``."""
    y = np.asarray(y, dtype=np.float64)
    sigma = float(sigma)
    if sigma <= 0.0:
        raise ValueError(f"step must be positive, got {sigma}")
    return y - sigma * oracle_prox(tag, params, 1.0 / sigma, y / sigma)


# -- dense reference solver -------------------------------------------


def _spectral_norm(a: np.ndarray, iters: int = 200) -> float:
    if a.size == 0:
        return 0.0
    ata = a.T @ a
    # generic deterministic start; a constant vector can sit in the null
    # space of structured operators (gradients kill constants) and stall
    v = np.random.default_rng(1729).standard_normal(a.shape[1])
    v /= float(np.linalg.norm(v))
    lam = 0.0
    for _ in range(iters):
        w = ata @ v
        lam = float(np.linalg.norm(w))
        if lam == 0.0:
            return 0.0
        v = w / lam
    return float(np.sqrt(lam))


def _dense_dual_prox(term, y_t: np.ndarray, sigma: float) -> np.ndarray:
    k = term.kind
    a = term.weight
    if k is ProxKind.DUAL_CLAMP:
        shifted = y_t - sigma * term.data if term.data is not None else y_t
        return np.minimum(np.maximum(shifted, -a), a)
    if k is ProxKind.DUAL_BALL_POINTWISE:
        q = y_t.reshape(term.groups, -1)
        norms = np.sqrt((q * q).sum(axis=0))
        return np.where(norms > a, q * (a / np.maximum(norms, a)), q).reshape(-1)
    if k is ProxKind.DUAL_BALL_GLOBAL:
        norm = float(np.linalg.norm(y_t))
        return y_t if norm <= a else y_t * (a / norm)
    if k is ProxKind.DUAL_QUADRATIC:
        shifted = y_t - sigma * term.data if term.data is not None else y_t
        return shifted / (1.0 + sigma / a)
    if k is ProxKind.DUAL_KL:
        root = np.sqrt((y_t - 1.0) ** 2 + 4.0 * sigma * term.data)
        return np.minimum((1.0 + y_t - root) / 2.0, 1.0)
    if k is ProxKind.DUAL_HUBER:
        damped = y_t / (1.0 + sigma * term.epsilon / a)
        q = damped.reshape(term.groups, -1)
        norms = np.sqrt((q * q).sum(axis=0))
        return np.where(norms > a, q * (a / np.maximum(norms, a)), q).reshape(-1)
    raise ValueError(f"{k.value} has no dense dual prox")


def _dense_primal_prox(term, x_t: np.ndarray, tau: float) -> np.ndarray:
    k = term.kind
    a = term.weight
    if k is ProxKind.PRIMAL_L2_DATA:
        return (x_t + tau * a * term.data) / (1.0 + tau * a)
    if k is ProxKind.PRIMAL_L1_DATA:
        z = x_t - term.data
        return term.data + np.sign(z) * np.maximum(np.abs(z) - tau * a, 0.0)
    if k is ProxKind.PRIMAL_SIMPLEX_LINEAR:
        z = (x_t - tau * a * term.data).reshape(term.arity, -1)
        out = np.empty_like(z)
        for p in range(z.shape[1]):
            col = z[:, p]
            order = np.argsort(col)[::-1]
            s = col[order]
            css = np.cumsum(s)
            rho = 0
            for j in range(s.shape[0]):
                if s[j] > (css[j] - 1.0) / (j + 1):
                    rho = j
            theta = (css[rho] - 1.0) / (rho + 1)
            out[:, p] = np.maximum(col - theta, 0.0)
        return out.reshape(-1)
    if k is ProxKind.PRIMAL_FREE:
        return x_t
    raise ValueError(f"{k.value} has no dense primal prox")


def oracle_dense_solve(problem, iters: int):
    """Reference solve by a literal dense transcription of the iteration.

    Stacks all dualized operators into one dense matrix, uses a single
    scalar step ``0.99 / ||A||`` on both sides (step one when there are no
    dualized terms) and iterates exactly ``iters`` times from zero.
    Returns the list of primal variable vectors.  Intended for small
    problems; refuses more than 10^4 total unknowns.
    """
    if iters < 0:
        raise ValueError("iteration count must be nonnegative")
    var_off = []
    off = 0
    for d in problem.dims:
        var_off.append(off)
        off += d.n
    n = off
    duals = problem.dual_bindings
    dual_off = []
    off = 0
    for b in duals:
        dual_off.append(off)
        off += b.term.dual_len
    m = off
    if n + m > _DENSE_SIZE_CAP:
        raise ValueError(
            f"dense reference limited to {_DENSE_SIZE_CAP} unknowns, got {n + m}"
        )
    a = np.zeros((m, n))
    for j, b in enumerate(duals):
        r0 = dual_off[j]
        for c, v in enumerate(b.bound):
            block = b.term.col_ops[c].to_dense()
            a[r0 : r0 + b.term.dual_len, var_off[v] : var_off[v] + problem.dims[v].n] += block
    norm = _spectral_norm(a)
    step = 0.99 / norm if norm > 0.0 else 1.0
    tau = sigma = step
    x = np.zeros(n)
    x_bar = np.zeros(n)
    y = np.zeros(m)
    for _ in range(iters):
        y_t = y + sigma * (a @ x_bar)
        for j, b in enumerate(duals):
            sl = slice(dual_off[j], dual_off[j] + b.term.dual_len)
            y[sl] = _dense_dual_prox(b.term, y_t[sl], sigma)
        x_t = x - tau * (a.T @ y)
        x_new = x_t.copy()
        for b in problem.primal_bindings:
            parts = [
                x_new[var_off[v] : var_off[v] + problem.dims[v].n] for v in b.bound
            ]
            out = _dense_primal_prox(b.term, np.concatenate(parts), tau)
            o = 0
            for v in b.bound:
                nv = problem.dims[v].n
                x_new[var_off[v] : var_off[v] + nv] = out[o : o + nv]
                o += nv
        x_bar = 2.0 * x_new - x
        x = x_new
    return [x[var_off[v] : var_off[v] + problem.dims[v].n].copy() for v in range(len(problem.dims))]
