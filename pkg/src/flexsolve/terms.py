"""Functional terms: the building blocks of a variational problem.

A term couples a convex functional with the block operators it applies to
one or more primal variables.  Operator-bearing terms are *dualized*: the
solver gives each one a dual variable of length ``dual_len`` and evaluates
the conjugate prox of the functional.  Identity-shaped data terms and the
labeling term stay *primal* and are handled by a direct prox after the
gradient step.

Blocks form a matrix with one column per bound primal variable and one row
per dual row; the stacked column operators (``col_ops``) give the effective
linear map seen by each variable.  Pointwise group norms couple the g-th
entry across the dual rows, so those kinds require equal row heights.

Weights follow the convention that quadratic terms carry the factor
``weight / 2`` internally.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .linalg import GridDims, SparseOp, as_dims, vectorize, vstack
from .operators import build_diagonal, build_partial
from . import prox as _prox

__all__ = [
    "ProxKind",
    "Term",
    "make_data_term",
    "make_gradient_term",
    "make_operator_term",
    "make_optical_flow_term",
    "make_labeling_term",
    "make_vectorfield_term",
    "make_identity_term",
    "eval_energy",
    "dual_argument",
    "apply_dual_prox",
    "apply_primal_prox",
]

SIMPLEX_FEASIBILITY_TOL = 1e-6


class ProxKind(enum.Enum):
    DUAL_CLAMP = "dual-clamp-shifted"
    DUAL_BALL_POINTWISE = "dual-ball-pointwise"
    DUAL_BALL_GLOBAL = "dual-ball-global"
    DUAL_QUADRATIC = "dual-quadratic-shifted"
    DUAL_KL = "dual-kl"
    DUAL_HUBER = "dual-huber"
    PRIMAL_L2_DATA = "primal-l2-data"
    PRIMAL_L1_DATA = "primal-l1-data"
    PRIMAL_SIMPLEX_LINEAR = "primal-simplex-linear"
    PRIMAL_FREE = "primal-free"


DUAL_KINDS = frozenset(
    {
        ProxKind.DUAL_CLAMP,
        ProxKind.DUAL_BALL_POINTWISE,
        ProxKind.DUAL_BALL_GLOBAL,
        ProxKind.DUAL_QUADRATIC,
        ProxKind.DUAL_KL,
        ProxKind.DUAL_HUBER,
    }
)

_GROUPED_KINDS = frozenset({ProxKind.DUAL_BALL_POINTWISE, ProxKind.DUAL_HUBER})


@dataclass(frozen=True, eq=False)
class Term:
    """One functional term; immutable once constructed.

    ``blocks`` is the dual-rows x arity operator matrix for dualized terms
    and ``None`` for primal ones.  ``data`` holds the shift/data vector of
    the functional (``None`` means zero shift).  ``col_lens`` records the
    required length of each bound primal variable.
    """

    weight: float
    kind: ProxKind
    arity: int
    blocks: tuple[tuple[SparseOp, ...], ...] | None = None
    data: np.ndarray | None = None
    groups: int = 0
    epsilon: float = 0.0
    col_lens: tuple[int, ...] = ()
    dual_len: int = field(init=False, default=0)
    col_ops: tuple[SparseOp, ...] = field(init=False, default=())

    def __post_init__(self):
        if self.weight <= 0.0:
            raise ValueError(f"term weight must be positive, got {self.weight}")
        if self.arity < 1:
            raise ValueError("term must bind at least one variable")
        if self.is_dual:
            self._init_dual()
        else:
            self._init_primal()

    @property
    def is_dual(self) -> bool:
        return self.kind in DUAL_KINDS

    def _init_dual(self):
        if not self.blocks:
            raise ValueError(f"{self.kind.value} term needs operator blocks")
        rows = tuple(tuple(r) for r in self.blocks)
        for r, row in enumerate(rows):
            if len(row) != self.arity:
                raise ValueError(
                    f"block row {r} has {len(row)} entries, expected {self.arity}"
                )
            heights = {b.rows for b in row}
            if len(heights) != 1:
                raise ValueError(f"block row {r} mixes row counts {sorted(heights)}")
        col_lens = []
        for c in range(self.arity):
            widths = {row[c].cols for row in rows}
            if len(widths) != 1:
                raise ValueError(
                    f"block column {c} mixes column counts {sorted(widths)}"
                )
            col_lens.append(widths.pop())
        row_heights = [row[0].rows for row in rows]
        dual_len = sum(row_heights)
        if self.kind in _GROUPED_KINDS:
            if len(set(row_heights)) != 1:
                raise ValueError(
                    "pointwise group norms need equal heights in all block rows"
                )
            if self.groups != len(rows):
                raise ValueError(
                    f"group count {self.groups} does not match {len(rows)} block rows"
                )
        if self.data is not None:
            d = np.asarray(self.data, dtype=np.float64)
            if d.shape != (dual_len,):
                raise ValueError(
                    f"shift of shape {d.shape} does not match dual length {dual_len}"
                )
            object.__setattr__(self, "data", d)
        if self.kind is ProxKind.DUAL_KL:
            if self.data is None:
                raise ValueError("KL term needs a data vector")
            if self.data.size and self.data.min() < 0.0:
                raise ValueError("KL data must be nonnegative")
        col_ops = tuple(vstack([row[c] for row in rows]) for c in range(self.arity))
        object.__setattr__(self, "blocks", rows)
        object.__setattr__(self, "dual_len", dual_len)
        object.__setattr__(self, "col_ops", col_ops)
        object.__setattr__(self, "col_lens", tuple(col_lens))

    def _init_primal(self):
        if self.blocks is not None:
            raise ValueError(f"{self.kind.value} term does not take blocks")
        if not self.col_lens or len(self.col_lens) != self.arity:
            raise ValueError("primal term needs one length per bound variable")
        if self.data is not None:
            d = np.asarray(self.data, dtype=np.float64)
            object.__setattr__(self, "data", d)
        if self.kind in (ProxKind.PRIMAL_L2_DATA, ProxKind.PRIMAL_L1_DATA):
            if self.data is None or self.data.shape != (self.col_lens[0],):
                raise ValueError("data vector must match the variable length")
        if self.kind is ProxKind.PRIMAL_SIMPLEX_LINEAR:
            n = self.col_lens[0]
            if any(l != n for l in self.col_lens):
                raise ValueError("labeling term needs equally sized variables")
            if self.data is None or self.data.shape != (self.arity * n,):
                raise ValueError("label costs must stack one block per label")

    def with_weight(self, weight: float) -> "Term":
        """Copy with a new weight; not available for KL terms, whose weight
        is folded into the operator at construction."""
        if self.kind is ProxKind.DUAL_KL:
            raise ValueError("KL term weight is fixed at construction")
        return replace(self, weight=float(weight))


def _finite_vec(x, what: str) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(
            f"{what} must be a flat vector; pass dims to flatten grid data"
        )
    if v.size and not np.all(np.isfinite(v)):
        raise ValueError(f"{what} must be finite")
    return v


def _grid_vec(f, dims: GridDims | None, what: str) -> np.ndarray:
    """Accept either a flat vector or grid-shaped data for ``dims``."""
    a = np.asarray(f, dtype=np.float64)
    if dims is not None and a.shape == dims.extents:
        a = vectorize(a, dims)
    return _finite_vec(a, what)


def make_data_term(norm: str, alpha: float, f, op: SparseOp | None = None, dims=None) -> Term:
    """Data fidelity ``norm(A u - f)`` with weight ``alpha``.

    Without an operator the term stays primal (direct prox); with one it is
    dualized.  Norms: ``l1``, ``l2`` (squared, carries alpha/2), ``kl``
    (needs an operator and nonnegative f; alpha is folded into the
    operator, scaling its argument).
    """
    dims = as_dims(dims) if dims is not None else None
    f = _grid_vec(f, dims, "data vector")
    if norm == "kl":
        if op is None:
            raise ValueError("KL data term needs an operator")
        if alpha <= 0.0:
            raise ValueError(f"term weight must be positive, got {alpha}")
        scaled = op if alpha == 1.0 else op.scaled(alpha)
        return Term(
            weight=1.0, kind=ProxKind.DUAL_KL, arity=1, blocks=((scaled,),), data=f
        )
    if norm not in ("l1", "l2"):
        raise ValueError(f"unknown data norm {norm!r}")
    if op is None:
        kind = (
            ProxKind.PRIMAL_L1_DATA if norm == "l1" else ProxKind.PRIMAL_L2_DATA
        )
        return Term(
            weight=alpha, kind=kind, arity=1, data=f, col_lens=(f.shape[0],)
        )
    kind = ProxKind.DUAL_CLAMP if norm == "l1" else ProxKind.DUAL_QUADRATIC
    return Term(weight=alpha, kind=kind, arity=1, blocks=((op,),), data=f)


def make_identity_term(norm: str, alpha: float, dims) -> Term:
    """Plain norm of a variable: a data term against zero."""
    dims = as_dims(dims)
    return make_data_term(norm, alpha, np.zeros(dims.n))


_GRADIENT_NORMS = ("l1-aniso", "l1-iso", "l2", "huber", "frobenius")


def _dual_norm_kind(norm: str, allowed) -> ProxKind:
    table = {
        "l1-aniso": ProxKind.DUAL_CLAMP,
        "l1-iso": ProxKind.DUAL_BALL_POINTWISE,
        "l2": ProxKind.DUAL_QUADRATIC,
        "huber": ProxKind.DUAL_HUBER,
        "frobenius": ProxKind.DUAL_BALL_GLOBAL,
    }
    if norm not in allowed:
        raise ValueError(f"unknown norm {norm!r}, expected one of {sorted(allowed)}")
    return table[norm]


def make_gradient_term(norm: str, alpha: float, dims, epsilon: float = 0.0) -> Term:
    """Regularizer ``norm(grad u)`` with one block row per axis partial.

    ``l1-iso`` and ``huber`` couple the per-pixel gradient across axes, so
    the group count equals the grid dimension.
    """
    dims = as_dims(dims)
    kind = _dual_norm_kind(norm, _GRADIENT_NORMS)
    blocks = tuple((build_partial(dims, a),) for a in range(dims.ndim))
    groups = dims.ndim if kind in _GROUPED_KINDS else 0
    return Term(
        weight=alpha,
        kind=kind,
        arity=1,
        blocks=blocks,
        groups=groups,
        epsilon=float(epsilon),
    )


def make_operator_term(norm: str, alpha: float, num_primals: int, blocks) -> Term:
    """General operator-bearing norm term over ``num_primals`` variables.

    ``blocks`` is either a nested rows-of-columns list or a flat sequence
    whose consecutive ``num_primals`` entries form one dual row.  For
    ``l1-iso`` the group count is the number of dual rows.
    """
    if num_primals < 1:
        raise ValueError("operator term needs at least one primal variable")
    blocks = list(blocks)
    if not blocks:
        raise ValueError("operator term needs at least one block")
    if isinstance(blocks[0], SparseOp):
        if len(blocks) % num_primals != 0:
            raise ValueError(
                f"{len(blocks)} blocks do not divide into rows of {num_primals}"
            )
        rows = tuple(
            tuple(blocks[r * num_primals : (r + 1) * num_primals])
            for r in range(len(blocks) // num_primals)
        )
    else:
        rows = tuple(tuple(r) for r in blocks)
    kind = _dual_norm_kind(norm, ("l1-aniso", "l1-iso", "l2", "frobenius"))
    groups = len(rows) if kind in _GROUPED_KINDS else 0
    return Term(
        weight=alpha, kind=kind, arity=num_primals, blocks=rows, groups=groups
    )


def make_optical_flow_term(norm: str, alpha: float, f1, f2, dims) -> Term:
    """Linearized brightness-constancy fit for a 2-d flow field.

    Binds the two flow components through pointwise gradients of the second
    frame; the shift is the temporal difference, so the residual matches
    ``grad(f2) . v + f2 - f1``.
    """
    dims = as_dims(dims)
    if dims.ndim != 2:
        raise ValueError("optical flow needs a 2-d grid")
    f1 = _grid_vec(f1, dims, "first frame")
    f2 = _grid_vec(f2, dims, "second frame")
    if f1.shape[0] != dims.n or f2.shape[0] != dims.n:
        raise ValueError("frames must match the grid size")
    dx = build_partial(dims, 0).apply(f2)
    dy = build_partial(dims, 1).apply(f2)
    blocks = ((build_diagonal(dx), build_diagonal(dy)),)
    if norm == "l1":
        kind = ProxKind.DUAL_CLAMP
    elif norm == "l2":
        kind = ProxKind.DUAL_QUADRATIC
    else:
        raise ValueError(f"unknown flow norm {norm!r}")
    return Term(weight=alpha, kind=kind, arity=2, blocks=blocks, data=f1 - f2)


def make_labeling_term(alpha: float, f, labels, dims) -> Term:
    """Pointwise label assignment cost over ``len(labels)`` indicator
    variables, constrained to the per-pixel probability simplex.

    The cost of label i at a pixel is the squared distance of the image
    value to the label value.
    """
    dims = as_dims(dims)
    f = _grid_vec(f, dims, "image")
    if f.shape[0] != dims.n:
        raise ValueError("image must match the grid size")
    labels = np.asarray(labels, dtype=np.float64).reshape(-1)
    if labels.size < 1:
        raise ValueError("labeling needs at least one label")
    if not np.all(np.isfinite(labels)):
        raise ValueError("label values must be finite")
    costs = np.concatenate([(f - l) ** 2 for l in labels])
    k = labels.size
    return Term(
        weight=alpha,
        kind=ProxKind.PRIMAL_SIMPLEX_LINEAR,
        arity=k,
        data=costs,
        col_lens=(f.shape[0],) * k,
    )


def make_vectorfield_term(op: str, norm: str, alpha: float, dims) -> Term:
    """First-order penalty on a 2-d vector field: ``curl`` or ``divergence``."""
    dims = as_dims(dims)
    if dims.ndim != 2:
        raise ValueError("vector field terms need a 2-d grid")
    if op == "curl":
        blocks = ((-build_partial(dims, 1), build_partial(dims, 0)),)
    elif op == "divergence":
        blocks = (
            (-build_partial(dims, 0).transpose(), -build_partial(dims, 1).transpose()),
        )
    else:
        raise ValueError(f"unknown vector field operator {op!r}")
    if norm == "l1":
        kind = ProxKind.DUAL_CLAMP
    elif norm == "l2":
        kind = ProxKind.DUAL_QUADRATIC
    else:
        raise ValueError(f"unknown vector field norm {norm!r}")
    return Term(weight=alpha, kind=kind, arity=2, blocks=blocks)


def dual_argument(term: Term, xs) -> np.ndarray:
    """Stacked operator applied to the bound variables."""
    if not term.is_dual:
        raise ValueError("primal terms have no dual argument")
    z = term.col_ops[0].apply(xs[0])
    for c in range(1, term.arity):
        z = z + term.col_ops[c].apply(xs[c])
    return z


def apply_dual_prox(term: Term, y_t: np.ndarray, sigma) -> np.ndarray:
    k = term.kind
    if k is ProxKind.DUAL_CLAMP:
        return _prox.prox_dual_clamp(y_t, sigma, term.weight, term.data)
    if k is ProxKind.DUAL_BALL_POINTWISE:
        return _prox.prox_dual_ball_pointwise(y_t, term.weight, term.groups)
    if k is ProxKind.DUAL_BALL_GLOBAL:
        return _prox.prox_dual_ball_global(y_t, term.weight)
    if k is ProxKind.DUAL_QUADRATIC:
        return _prox.prox_dual_quadratic(y_t, sigma, term.weight, term.data)
    if k is ProxKind.DUAL_KL:
        return _prox.prox_dual_kl(y_t, sigma, term.data)
    if k is ProxKind.DUAL_HUBER:
        return _prox.prox_dual_huber(
            y_t, sigma, term.weight, term.epsilon, term.groups
        )
    raise ValueError(f"{k.value} is not a dual kind")


def apply_primal_prox(term: Term, x_t: np.ndarray, tau) -> np.ndarray:
    k = term.kind
    if k is ProxKind.PRIMAL_L2_DATA:
        return _prox.prox_primal_l2_data(x_t, tau, term.weight, term.data)
    if k is ProxKind.PRIMAL_L1_DATA:
        return _prox.prox_primal_l1_data(x_t, tau, term.weight, term.data)
    if k is ProxKind.PRIMAL_SIMPLEX_LINEAR:
        return _prox.prox_simplex_linear(x_t, tau, term.weight, term.data, term.arity)
    if k is ProxKind.PRIMAL_FREE:
        return _prox.prox_primal_free(x_t, tau)
    raise ValueError(f"{k.value} is not a primal kind")


def _huber_of(t: np.ndarray, eps: float) -> np.ndarray:
    if eps == 0.0:
        return np.abs(t)
    a = np.abs(t)
    return np.where(a >= eps, a - eps / 2.0, t * t / (2.0 * eps))


def _kl_value(z: np.ndarray, f: np.ndarray) -> float:
    if z.size and z.min() < 0.0:
        return np.inf
    pos = f > 0.0
    if np.any(pos & (z <= 0.0)):
        return np.inf
    out = float(np.sum(z - f))
    zp = z[pos]
    fp = f[pos]
    out += float(np.sum(fp * np.log(fp / zp)))
    return out


def eval_energy(term: Term, xs) -> float:
    """Value of the term at the given bound-variable vectors.

    Constrained terms return ``inf`` outside their feasible set; the
    simplex check uses a small tolerance so converged iterates pass.
    """
    xs = [np.asarray(x, dtype=np.float64) for x in xs]
    if len(xs) != term.arity:
        raise ValueError(f"term binds {term.arity} variables, got {len(xs)}")
    for c, x in enumerate(xs):
        want = term.col_lens[c]
        if x.shape != (want,):
            raise ValueError(
                f"variable {c} has shape {x.shape}, expected ({want},)"
            )
    k = term.kind
    w = term.weight
    if k is ProxKind.PRIMAL_L2_DATA:
        return (w / 2.0) * float(np.sum((xs[0] - term.data) ** 2))
    if k is ProxKind.PRIMAL_L1_DATA:
        return w * float(np.sum(np.abs(xs[0] - term.data)))
    if k is ProxKind.PRIMAL_FREE:
        return 0.0
    if k is ProxKind.PRIMAL_SIMPLEX_LINEAR:
        u = np.stack(xs, axis=0)
        tol = SIMPLEX_FEASIBILITY_TOL
        if u.min() < -tol or np.max(np.abs(u.sum(axis=0) - 1.0)) > tol:
            return np.inf
        return w * float(np.dot(term.data, np.concatenate(xs)))
    z = dual_argument(term, xs)
    if k is ProxKind.DUAL_CLAMP:
        r = z - term.data if term.data is not None else z
        return w * float(np.sum(np.abs(r)))
    if k is ProxKind.DUAL_QUADRATIC:
        r = z - term.data if term.data is not None else z
        return (w / 2.0) * float(np.sum(r * r))
    if k is ProxKind.DUAL_BALL_POINTWISE:
        q = z.reshape(term.groups, -1)
        return w * float(np.sum(np.sqrt((q * q).sum(axis=0))))
    if k is ProxKind.DUAL_BALL_GLOBAL:
        return w * float(np.sqrt(np.sum(z * z)))
    if k is ProxKind.DUAL_HUBER:
        q = z.reshape(term.groups, -1)
        norms = np.sqrt((q * q).sum(axis=0))
        return w * float(np.sum(_huber_of(norms, term.epsilon)))
    if k is ProxKind.DUAL_KL:
        return _kl_value(z, term.data)
    raise ValueError(f"cannot evaluate {k.value}")
