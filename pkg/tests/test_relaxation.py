import cvxpy as cp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trcolor.exceptions import ConvergenceError, InfeasiblePinError
from trcolor.graph import complete_multipartite, cycle
from trcolor.pseudo import exact_from_colorings, exact_from_independent_sets
from trcolor.relaxation import (
    MomentMatrix,
    RelaxationInfeasibleError,
    SolverConfig,
    _Operators,
    _project_sum,
    build_coloring_relaxation,
    build_is_relaxation,
    pin_and_resolve,
    solve,
)


def affine_oracle(p, M):
    """Frobenius projection onto the affine constraints, solved by cvxpy."""
    n, s, N = p.n, p.size, p.order
    Z = cp.Variable((N, N), symmetric=True)
    idx = lambda u, a: 1 + u * s + a
    cons = [Z[0, 0] == 1]
    forbidden = set(p.edge_symbols)
    edges = set(p.graph.edges)
    pinned = dict(p.pin_indices())
    for u in range(n):
        cons.append(sum(Z[0, idx(u, a)] for a in range(s)) == 1)
        if u in pinned:
            cons += [Z[0, idx(u, a)] == float(a == pinned[u]) for a in range(s)]
        for a in range(s):
            for b in range(s):
                cons.append(Z[idx(u, a), idx(u, b)] == (Z[0, idx(u, a)] if a == b else 0))
        for v in range(n):
            if v == u:
                continue
            for a in range(s):
                cons.append(sum(Z[idx(u, a), idx(v, b)] for b in range(s)) == Z[0, idx(u, a)])
            if (min(u, v), max(u, v)) in edges:
                cons += [Z[idx(u, a), idx(v, a)] == 0 for a in forbidden]
    cp.Problem(cp.Minimize(cp.sum_squares(Z - M)), cons).solve(solver=cp.CLARABEL)
    return Z.value


class TestConstruction:
    def test_k3_problem(self, k3):
        p = build_coloring_relaxation(k3)
        counts = p.to_dict()["constraint_counts"]
        assert p.size == 4 and p.order == 13
        assert counts["edge"] == 9 and "budget" not in counts
        pd = exact_from_colorings(k3)
        res = p.residuals(pd.marginals(), pd.pairwise_all())
        assert max(res.values()) == 0.0

    def test_budget_rows(self, c4):
        assert build_coloring_relaxation(c4, 0.25).budget == (3, "<=", 1.0)
        assert build_is_relaxation(c4).budget == (1, ">=", 2.0)
        with pytest.raises(ValueError):
            build_is_relaxation(c4, 0.5)

    @pytest.mark.parametrize("g", [complete_multipartite(3, 1), cycle(4), complete_multipartite(3, 2)])
    def test_exact_hull_is_feasible(self, g):
        for p, pd in [(build_coloring_relaxation(g), exact_from_colorings(g)),
                      (build_is_relaxation(g, 0.49), exact_from_independent_sets(g, 0.49))]:
            res = p.residuals(pd.marginals(), pd.pairwise_all())
            assert max(res.values()) <= 1e-12
            mm = MomentMatrix.from_distribution(pd)
            assert mm.min_eigenvalue() >= -1e-12
            assert max(mm.exclusivity_residual(), mm.diagonal_residual()) <= 1e-12


class TestProjections:
    @pytest.mark.parametrize("kind", ["coloring", "is"])
    @pytest.mark.parametrize("pins", [(), ((0, 1),)])
    def test_affine_matches_cvxpy(self, c4, rng, kind, pins):
        p = build_coloring_relaxation(c4) if kind == "coloring" else build_is_relaxation(c4)
        p = p.with_pins(pins)
        M = rng.normal(size=(p.order, p.order))
        M = (M + M.T) / 2
        ours = _Operators(p).affine(M)
        np.testing.assert_allclose(ours, affine_oracle(p, M), atol=1e-6)

    def test_affine_is_idempotent(self, k222, rng):
        ops = _Operators(build_coloring_relaxation(k222))
        M = rng.normal(size=(ops.N, ops.N))
        Z = ops.affine(M + M.T)
        np.testing.assert_allclose(ops.affine(Z), Z, atol=1e-12)

    @given(st.lists(st.floats(-3, 3), min_size=1, max_size=12), st.floats(0, 5), st.sampled_from(["<=", ">="]))
    @settings(max_examples=40)
    def test_project_sum(self, xs, rhs, sense):
        x = np.array(xs)
        y = cp.Variable(len(x))
        c = [y >= 0, cp.sum(y) <= rhs if sense == "<=" else cp.sum(y) >= rhs]
        cp.Problem(cp.Minimize(cp.sum_squares(y - x)), c).solve(solver=cp.CLARABEL)
        ours = _project_sum(x, rhs, sense)
        assert ours.min() >= 0
        assert (ours.sum() <= rhs + 1e-9) if sense == "<=" else (ours.sum() >= rhs - 1e-9)
        # strictly convex objective: matching the optimal value pins down the point
        assert np.sum((ours - x) ** 2) <= np.sum((y.value - x) ** 2) + 1e-7


class TestSolve:
    def test_k222(self, k222):
        pd = solve(build_coloring_relaxation(k222))
        assert pd.info["status"] == "converged"
        assert pd.marginals()[:, 3].max() <= 1e-5
        assert pd.moment.min_eigenvalue() >= -1e-6
        res = pd.problem.residuals(pd.moment.marginals(), pd.moment.pairwise_all())
        assert max(res.values()) <= 1e-5

    def test_c4_independent_set(self, c4):
        pd = solve(build_is_relaxation(c4))
        assert pd.marginals()[:, 1].sum() >= 2 - 1e-4

    def test_k2_edge(self):
        k2 = complete_multipartite(2, 1)
        pd = solve(build_coloring_relaxation(k2))
        for u, v in k2.edges:
            assert np.trace(pd.pairwise(u, v)[:3, :3]) <= 1e-6

    def test_k3_is_infeasible(self):
        with pytest.raises(RelaxationInfeasibleError) as exc:
            solve(build_is_relaxation(complete_multipartite(3, 1)))
        assert exc.value.report["status"] == "infeasible"

    def test_k4_reported_honestly(self):
        # level-2 relaxation of K4 is feasible at delta=0 but pays one full vertex of "uncoloured" mass
        pd = solve(build_coloring_relaxation(complete_multipartite(4, 1)))
        assert pd.info["objective"] == pytest.approx(1.0, abs=1e-4)
        with pytest.raises(RelaxationInfeasibleError):
            solve(build_coloring_relaxation(complete_multipartite(4, 1), 0.01))

    def test_iteration_cap(self, k222):
        with pytest.raises(ConvergenceError) as exc:
            solve(build_coloring_relaxation(k222), SolverConfig(max_iter=20))
        assert exc.value.residuals["iterations"] == 20

    def test_deterministic(self, k222):
        p = build_coloring_relaxation(k222)
        a, b = solve(p), solve(p)
        np.testing.assert_array_equal(a.moment.data, b.moment.data)
        assert a.info == b.info


class TestPins:
    def test_no_pins_is_solve(self, k222):
        p = build_coloring_relaxation(k222)
        np.testing.assert_array_equal(pin_and_resolve(p, []).moment.data, solve(p).moment.data)

    def test_one_pin_per_part(self, k222):
        p = build_coloring_relaxation(k222)
        pd = pin_and_resolve(p, [(0, 1), (2, 2), (4, 3)], parent=solve(p))
        for u in range(6):
            assert pd.marginal(u)[u // 2] >= 1 - 1e-3

    def test_condition_chains(self, k222):
        pd = solve(build_coloring_relaxation(k222)).condition(0, 1).condition(2, 2)
        assert pd.problem.pins == ((0, 1), (2, 2))
        assert all(pd.is_deterministic(u) for u in range(6))

    def test_conflicting_pins(self, k222):
        p = build_coloring_relaxation(k222)
        with pytest.raises(InfeasiblePinError):
            pin_and_resolve(p, [(0, 1), (2, 1)])
        with pytest.raises(InfeasiblePinError):
            pin_and_resolve(p.with_pins([(0, 1)]), [(0, 2)])
        # ⊥ on both ends of an edge is allowed by the edge rows
        pin_and_resolve(build_coloring_relaxation(k222, 0.5), [(0, 0), (2, 0)])
