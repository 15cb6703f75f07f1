"""Problem assembly: primal variables, terms and retained solver state.

The intended workflow mirrors an interactive toolbox session::

    p = Problem()
    u = p.add_primal_var((ny, nx))
    p.add_term(make_data_term("l2", 1.0, f), u)
    p.add_term(make_gradient_term("l1-iso", 0.08, (ny, nx)), u)
    summary = p.run()
    result = p.get_primal(u)

Variables start at zero.  The solver state (iterates, dual variables and
step sizes) lives on the problem between calls, so a run can be continued,
terms can be added or reweighted in between, and warm starts via
:meth:`set_primal` are honored.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import GridDims, as_dims, devectorize, vectorize
from .terms import Term, eval_energy

__all__ = ["Problem", "Binding"]


@dataclass
class Binding:
    """A term together with the primal variables it binds to.

    ``dual_index`` is the position among dualized terms (insertion order)
    or ``None`` for primal terms.
    """

    term: Term
    bound: tuple[int, ...]
    dual_index: int | None


class Problem:
    def __init__(self):
        self.dims: list[GridDims] = []
        self.bindings: list[Binding] = []
        self.state = None
        self.revision = 0

    # -- assembly ------------------------------------------------------

    def add_primal_var(self, dims) -> int:
        """Register a primal variable on a grid; returns its index."""
        self.dims.append(as_dims(dims))
        if self.state is not None:
            self.state.append_variable(self.dims[-1].n)
        self._touch()
        return len(self.dims) - 1

    def add_term(self, term: Term, bound) -> int:
        """Attach a term to one or more variables; returns the term index.

        ``bound`` is a variable index or a sequence of them, one per slot
        of the term.  Shapes are validated here so mismatches fail fast.
        """
        if isinstance(bound, (int, np.integer)):
            bound = (int(bound),)
        else:
            bound = tuple(int(b) for b in bound)
        tid = len(self.bindings)
        if len(bound) != term.arity:
            raise ValueError(
                f"term {tid} ({term.kind.value}) binds {term.arity} variables, "
                f"got {len(bound)} indices"
            )
        for c, v in enumerate(bound):
            if not 0 <= v < len(self.dims):
                raise ValueError(
                    f"term {tid} ({term.kind.value}) references unknown variable {v}"
                )
            want = term.col_lens[c]
            have = self.dims[v].n
            if want != have:
                raise ValueError(
                    f"term {tid} ({term.kind.value}) slot {c} expects length "
                    f"{want}, variable {v} has length {have}"
                )
        dual_index = None
        if term.is_dual:
            dual_index = sum(1 for b in self.bindings if b.dual_index is not None)
        self.bindings.append(Binding(term, bound, dual_index))
        if self.state is not None and dual_index is not None:
            self.state.append_dual(term.dual_len)
        self._touch()
        return tid

    def set_term_weight(self, term_id: int, weight: float):
        """Reweight an existing term; step sizes are re-derived on the
        next run."""
        b = self.bindings[term_id]
        b.term = b.term.with_weight(weight)
        self._touch()

    def _touch(self):
        self.revision += 1
        if self.state is not None:
            self.state.last_report = None

    # -- variable access -----------------------------------------------

    def get_primal(self, i: int) -> np.ndarray:
        """Grid-shaped snapshot (a copy) of variable ``i``."""
        dims = self._var_dims(i)
        if self.state is None:
            return np.zeros(dims.extents)
        return devectorize(self.state.x[i], dims).copy()

    def set_primal(self, i: int, data):
        """Warm-start variable ``i`` from grid-shaped or flat data."""
        dims = self._var_dims(i)
        a = np.asarray(data, dtype=np.float64)
        vec = vectorize(a, dims) if a.ndim > 1 else a.copy()
        if vec.shape != (dims.n,):
            raise ValueError(
                f"data of shape {a.shape} does not fit variable {i} with "
                f"extents {dims.extents}"
            )
        if not np.all(np.isfinite(vec)):
            raise ValueError("warm start data must be finite")
        self._ensure_state()
        self.state.x[i] = vec
        self.state.x_prev[i] = vec.copy()
        self.state.x_bar[i] = vec.copy()
        self.state.last_report = None

    def _var_dims(self, i: int) -> GridDims:
        if not 0 <= i < len(self.dims):
            raise ValueError(f"unknown variable index {i}")
        return self.dims[i]

    # -- energy and solving --------------------------------------------

    def total_energy(self) -> float:
        """Sum of all term values at the current iterates."""
        total = 0.0
        for b in self.bindings:
            xs = [self._current_vec(v) for v in b.bound]
            total += eval_energy(b.term, xs)
        return total

    def _current_vec(self, i: int) -> np.ndarray:
        if self.state is None:
            return np.zeros(self.dims[i].n)
        return self.state.x[i]

    def _ensure_state(self):
        from .solver import fresh_state

        if self.state is None:
            self.state = fresh_state(self)
        return self.state

    def run(self, cfg=None, callback=None):
        from .solver import run

        return run(self, cfg, callback)

    def resume(self, cfg=None, callback=None):
        from .solver import resume

        return resume(self, cfg, callback)

    @property
    def dual_bindings(self) -> list[Binding]:
        return [b for b in self.bindings if b.dual_index is not None]

    @property
    def primal_bindings(self) -> list[Binding]:
        return [b for b in self.bindings if b.dual_index is None]
