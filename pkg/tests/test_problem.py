"""Problem assembly, variable access and the retained-state workflow."""

import numpy as np
import pytest

from flexsolve import (
    Problem,
    StopConfig,
    build_identity,
    make_data_term,
    make_gradient_term,
    make_labeling_term,
    make_optical_flow_term,
    vectorize,
    GridDims,
)

from conftest import noisy_blocks, rof_problem


class TestAssembly:
    def test_variable_indices_are_sequential(self):
        p = Problem()
        assert p.add_primal_var((4, 4)) == 0
        assert p.add_primal_var((8,)) == 1
        assert p.add_primal_var((2, 3, 4)) == 2
        assert [d.n for d in p.dims] == [16, 8, 24]

    def test_term_ids_are_sequential(self):
        p = Problem()
        u = p.add_primal_var((3, 3))
        t0 = p.add_term(make_data_term("l2", 1.0, np.zeros(9)), u)
        t1 = p.add_term(make_gradient_term("l2", 1.0, (3, 3)), u)
        assert (t0, t1) == (0, 1)

    def test_dual_indices_follow_insertion_order(self):
        p = Problem()
        u = p.add_primal_var((3, 3))
        w = p.add_primal_var((3, 3))
        p.add_term(make_data_term("l2", 1.0, np.zeros(9)), u)
        p.add_term(make_gradient_term("l1-iso", 0.1, (3, 3)), u)
        p.add_term(make_gradient_term("l1-iso", 0.1, (3, 3)), w)
        assert p.bindings[0].dual_index is None
        assert p.bindings[1].dual_index == 0
        assert p.bindings[2].dual_index == 1
        assert len(p.dual_bindings) == 2
        assert len(p.primal_bindings) == 1

    def test_flow_term_binds_two_variables(self):
        p = Problem()
        v1 = p.add_primal_var((4, 4))
        v2 = p.add_primal_var((4, 4))
        f = np.zeros(16)
        tid = p.add_term(make_optical_flow_term("l1", 1.0, f, f, (4, 4)), (v1, v2))
        assert p.bindings[tid].bound == (0, 1)

    def test_arity_mismatch_rejected(self):
        p = Problem()
        u = p.add_primal_var((4, 4))
        f = np.zeros(16)
        term = make_optical_flow_term("l1", 1.0, f, f, (4, 4))
        with pytest.raises(ValueError, match="binds 2 variables"):
            p.add_term(term, u)

    def test_unknown_variable_rejected(self):
        p = Problem()
        p.add_primal_var((3, 3))
        with pytest.raises(ValueError, match="unknown variable"):
            p.add_term(make_gradient_term("l2", 1.0, (3, 3)), 1)

    def test_length_mismatch_rejected(self):
        p = Problem()
        u = p.add_primal_var((4, 4))
        with pytest.raises(ValueError, match="expects length"):
            p.add_term(make_gradient_term("l2", 1.0, (3, 3)), u)

    def test_labeling_binds_one_variable_per_label(self):
        p = Problem()
        vs = [p.add_primal_var((3, 3)) for _ in range(3)]
        t = make_labeling_term(1.0, np.zeros((3, 3)), [0.0, 0.5, 1.0], (3, 3))
        p.add_term(t, vs)
        assert p.bindings[0].bound == (0, 1, 2)


class TestVariableAccess:
    def test_zeros_before_any_run(self):
        p = Problem()
        u = p.add_primal_var((4, 4))
        out = p.get_primal(u)
        assert out.shape == (4, 4)
        np.testing.assert_array_equal(out, np.zeros((4, 4)))

    def test_set_then_get_roundtrip_bitwise(self, rng):
        p = Problem()
        u = p.add_primal_var((5, 3))
        data = rng.standard_normal((5, 3))
        p.set_primal(u, data)
        np.testing.assert_array_equal(p.get_primal(u), data)

    def test_set_accepts_flat_vector(self, rng):
        p = Problem()
        u = p.add_primal_var((2, 3))
        flat = rng.standard_normal(6)
        p.set_primal(u, flat)
        np.testing.assert_array_equal(
            vectorize(p.get_primal(u), GridDims((2, 3))), flat
        )

    def test_get_returns_a_copy(self):
        p = Problem()
        u = p.add_primal_var((2, 2))
        p.set_primal(u, np.ones((2, 2)))
        snap = p.get_primal(u)
        snap[0, 0] = 99.0
        assert p.get_primal(u)[0, 0] == 1.0

    def test_set_rejects_bad_shapes_and_values(self):
        p = Problem()
        u = p.add_primal_var((2, 2))
        with pytest.raises(ValueError):
            p.set_primal(u, np.zeros((3, 2)))
        with pytest.raises(ValueError):
            p.set_primal(u, np.full((2, 2), np.nan))
        with pytest.raises(ValueError):
            p.get_primal(5)


class TestEnergy:
    def test_zero_state_data_energy(self):
        f = np.full(9, 2.0)
        p = Problem()
        u = p.add_primal_var((3, 3))
        p.add_term(make_data_term("l2", 1.0, f), u)
        # (1/2) * sum(f^2) at the zero start
        assert p.total_energy() == pytest.approx(0.5 * 9 * 4.0)

    def test_energy_tracks_set_primal(self):
        f = np.full((3, 3), 0.25)
        p = Problem()
        u = p.add_primal_var((3, 3))
        p.add_term(make_data_term("l2", 1.0, f, dims=(3, 3)), u)
        p.add_term(make_gradient_term("l1-aniso", 0.5, (3, 3)), u)
        p.set_primal(u, f)
        assert p.total_energy() == 0.0

    def test_energy_sums_terms(self, rng):
        f = rng.uniform(0.0, 1.0, size=(4, 4))
        p = Problem()
        u = p.add_primal_var((4, 4))
        p.add_term(make_data_term("l1", 2.0, f, dims=(4, 4)), u)
        assert p.total_energy() == pytest.approx(2.0 * np.abs(f).sum())


class TestSolveWorkflow:
    def test_term_order_permutation_agrees(self):
        f = noisy_blocks(8)
        pa, ua = rof_problem(f, 0.1)
        pb = Problem()
        u = pb.add_primal_var(f.shape)
        pb.add_term(make_gradient_term("l1-iso", 0.1, f.shape), u)
        pb.add_term(make_data_term("l2", 1.0, f, dims=f.shape), u)
        cfg = StopConfig(max_iters=30000, check_every=100, tolerance=1e-8)
        pa.run(cfg)
        pb.run(cfg)
        assert np.max(np.abs(pa.get_primal(ua) - pb.get_primal(u))) <= 1e-6

    def test_warm_start_from_solution_converges_fast(self):
        f = noisy_blocks(8)
        cold, uc = rof_problem(f, 0.1)
        # a fine check grid so the iteration counts can actually differ
        cfg = StopConfig(max_iters=20000, check_every=10, tolerance=1e-7)
        cold_summary = cold.run(cfg)
        assert cold_summary.converged
        sol = cold.get_primal(uc)

        warm, uw = rof_problem(f, 0.1)
        warm.set_primal(uw, sol)
        warm_summary = warm.run(cfg)
        assert warm_summary.converged
        assert warm_summary.iterations < cold_summary.iterations
        assert np.max(np.abs(warm.get_primal(uw) - sol)) <= 1e-5

    def test_run_requires_variables_and_terms(self):
        p = Problem()
        with pytest.raises(ValueError, match="no primal variables"):
            p.run()
        p.add_primal_var((3, 3))
        with pytest.raises(ValueError, match="no terms"):
            p.run()

    def test_add_variable_after_run_grows_state(self):
        f = noisy_blocks(6)
        p, _ = rof_problem(f, 0.1)
        p.run(StopConfig(max_iters=20, check_every=10, tolerance=0.0))
        w = p.add_primal_var((6, 6))
        assert len(p.state.x) == 2
        np.testing.assert_array_equal(p.get_primal(w), np.zeros((6, 6)))
        p.add_term(make_data_term("l2", 1.0, np.zeros(36)), w)
        p.resume(StopConfig(max_iters=20, check_every=10, tolerance=0.0))

    def test_set_term_weight_refuses_unknown_id(self):
        p, _ = rof_problem(noisy_blocks(6), 0.1)
        with pytest.raises(IndexError):
            p.set_term_weight(7, 1.0)

    def test_mismatched_state_layout_detected(self):
        p, _ = rof_problem(noisy_blocks(6), 0.1)
        p.run(StopConfig(max_iters=10, check_every=10, tolerance=0.0))
        p.state.y[0] = np.zeros(3)
        with pytest.raises(ValueError, match="dual variable"):
            p.resume(StopConfig(max_iters=10, check_every=10, tolerance=0.0))

    def test_identity_operator_term_matches_primal_form(self):
        # the dualized identity-data route should land on the same minimizer
        # as the direct primal prox route
        f = noisy_blocks(6)
        fv = vectorize(f, GridDims(f.shape))
        direct = Problem()
        u = direct.add_primal_var(f.shape)
        direct.add_term(make_data_term("l2", 1.0, fv), u)
        direct.add_term(make_gradient_term("l1-iso", 0.1, f.shape), u)
        routed = Problem()
        w = routed.add_primal_var(f.shape)
        routed.add_term(
            make_data_term("l2", 1.0, fv, op=build_identity(fv.size)), w
        )
        routed.add_term(make_gradient_term("l1-iso", 0.1, f.shape), w)
        cfg = StopConfig(max_iters=30000, check_every=100, tolerance=1e-8)
        direct.run(cfg)
        routed.run(cfg)
        assert np.max(np.abs(direct.get_primal(u) - routed.get_primal(w))) <= 1e-5
