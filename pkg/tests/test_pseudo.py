import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import entropy

from trcolor.exceptions import BackendInconsistencyError, InfeasibleError, ZeroProbabilityError
from trcolor.graph import complete_multipartite, cycle, enumerate_proper_colorings
from trcolor.pseudo import (
    COLORING_ALPHABET,
    ExactDistribution,
    conditioning_loop,
    correlation_profile,
    exact_from_colorings,
    exact_from_independent_sets,
    global_correlation,
    mi_from_joint,
    mutual_information,
    mutual_information_matrix,
    pinsker_from_joint,
    pinsker_gap,
)

# uniform over the 6 colourings of K3: diagonal ln 3, off-diagonal ln(3/2)
K3_GLOBAL_CORRELATION = (3 * math.log(3) + 6 * math.log(1.5)) / 9


def mi_oracle(joint):
    j = np.asarray(joint, float)
    return entropy(j.sum(1)) + entropy(j.sum(0)) - entropy(j.ravel())


@st.composite
def exact_distributions(draw):
    n = draw(st.integers(2, 6))
    s = draw(st.integers(2, 4))
    rows = draw(st.integers(1, 8))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    support = rng.integers(0, s, size=(rows, n))
    weights = rng.dirichlet(np.ones(rows))
    return ExactDistribution(support, weights, tuple(range(s)))


class TestExact:
    def test_k3_marginals_and_correlation(self, k3):
        pd = exact_from_colorings(k3)
        np.testing.assert_allclose(pd.marginals(), np.tile([1 / 3, 1 / 3, 1 / 3, 0], (3, 1)))
        assert global_correlation(pd) == pytest.approx(K3_GLOBAL_CORRELATION, abs=1e-12)
        assert mutual_information(pd, 0, 1) == pytest.approx(math.log(1.5), abs=1e-12)

    def test_condition(self, k3):
        pd = exact_from_colorings(k3).condition(0, 1)
        np.testing.assert_allclose(pd.marginal(0), [1, 0, 0, 0])
        np.testing.assert_allclose(pd.marginal(1), [0, 0.5, 0.5, 0])
        with pytest.raises(ZeroProbabilityError):
            pd.condition(1, 1)
        assert pd.condition(0, 1) is pd

    def test_pairwise_consistency(self, k222):
        pd = exact_from_colorings(k222)
        P, m = pd.pairwise_all(), pd.marginals()
        np.testing.assert_allclose(P.sum(3), np.broadcast_to(m[:, None, :], P.shape[:3]), atol=1e-12)
        for u, v in k222.edges:
            assert np.trace(P[u, v][:3, :3]) == 0.0
        np.testing.assert_allclose(pd.pairwise(0, 2), P[0, 2])

    def test_budget(self):
        k4 = complete_multipartite(4, 1)
        with pytest.raises(InfeasibleError):
            exact_from_colorings(k4)
        pd = exact_from_colorings(k4, delta=0.25)
        assert len(pd.support) == len(enumerate_proper_colorings(k4, 3, 1))
        assert pd.marginals()[:, 3].sum() == pytest.approx(1.0)

    def test_independent_sets(self, c4):
        pd = exact_from_independent_sets(c4)
        np.testing.assert_allclose(pd.marginals()[:, 1], 0.5)
        assert len(pd.support) == 2
        with pytest.raises(InfeasibleError):
            exact_from_independent_sets(complete_multipartite(3, 1))

    def test_validation(self):
        with pytest.raises(ValueError):
            ExactDistribution(np.zeros((0, 2)), [], (0, 1))
        with pytest.raises(ValueError):
            ExactDistribution([[0, 1]], [-1.0], (0, 1))
        with pytest.raises(ValueError):
            exact_from_colorings(complete_multipartite(3, 1)).condition(0, 7)


class TestInformation:
    def test_known_values(self):
        assert mi_from_joint([[0.5, 0], [0, 0.5]]) == pytest.approx(math.log(2))
        assert mi_from_joint(np.outer([0.3, 0.7], [0.6, 0.4])) == pytest.approx(0.0, abs=1e-15)

    @given(st.integers(2, 5), st.integers(2, 5), st.integers(0, 2**32 - 1))
    def test_mi_matches_entropy_oracle(self, s, t, seed):
        rng = np.random.default_rng(seed)
        J = rng.dirichlet(np.full(s * t, 0.5)).reshape(s, t)
        assert mi_from_joint(J) == pytest.approx(mi_oracle(J), abs=1e-10)

    @given(exact_distributions())
    def test_matrix_properties(self, pd):
        I = mutual_information_matrix(pd)
        np.testing.assert_allclose(I, I.T, atol=1e-12)
        assert (I >= 0).all()
        H = [entropy(pd.marginal(u)) for u in range(pd.n)]
        np.testing.assert_allclose(np.diag(I), H, atol=1e-10)
        for u in range(pd.n):
            for v in range(pd.n):
                assert I[u, v] <= min(H[u], H[v]) + 1e-10
                assert pinsker_gap(pd, u, v).holds

    def test_inconsistent_joint(self):
        with pytest.raises(BackendInconsistencyError):
            mi_from_joint([[0.5, 0.5], [0, 0]], px=[1, 0], py=[0, 1])

    def test_pinsker(self):
        gap = pinsker_from_joint([[0.5, 0], [0, 0.5]])
        assert gap.l1_distance == pytest.approx(1.0)
        assert gap.bound == pytest.approx(math.sqrt(2 * math.log(2)))
        assert gap.holds


class TestConditioning:
    @pytest.mark.parametrize("m", [2, 3, 4])
    def test_two_pins_suffice(self, m):
        pd = exact_from_colorings(complete_multipartite(3, m))
        best, tr = conditioning_loop(pd, 12, 1e-9, 200, seed=0)
        assert tr.best_correlation == 0.0 and tr.best_k == 2
        assert tr.succeeded
        assert len(best.support) == 1

    def test_deterministic(self, k222):
        pd = exact_from_colorings(k222)
        a = conditioning_loop(pd, 6, 1e-9, 50, seed=11)[1].to_dict()
        b = conditioning_loop(pd, 6, 1e-9, 50, seed=11)[1].to_dict()
        assert a == b
        assert a != conditioning_loop(pd, 6, 1e-9, 50, seed=12)[1].to_dict()

    def test_stop_at_target(self, k222):
        pd = exact_from_colorings(k222)
        _, tr = conditioning_loop(pd, 6, 1e-9, 50, seed=0, stop_at_target=True)
        assert tr.succeeded and len(tr.sequences) < 50

    def test_rounds_validated(self, k3):
        with pytest.raises(ValueError):
            conditioning_loop(exact_from_colorings(k3), 1, 0.1, 10)

    def test_profile_decreases_below_bound(self):
        pd = exact_from_colorings(complete_multipartite(3, 3))
        prof = correlation_profile(pd, 4, 200, seed=1)
        mean = prof.mean(0)
        assert mean[0] == pytest.approx(global_correlation(pd))
        assert np.all(np.diff(mean) <= 1e-12)
        assert mean.min() <= math.log(4) / 3

    def test_cycle_is(self, c4):
        pd = exact_from_independent_sets(c4).condition(0, 1)
        np.testing.assert_allclose(pd.marginals()[:, 1], [1, 0, 1, 0])
