"""scikit-learn style wrappers around the two pipelines.

Both estimators are transductive: ``fit`` takes an adjacency matrix (or a
``Graph``) and stores per-vertex labels in ``labels_``.
"""
import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_is_fitted

from .graph import COLORING_CAP, INDEPENDENT_SET_CAP
from .relaxation import SolverConfig
from .rounding import solve_3coloring, solve_max_is
from .spectral import random_walk_spectrum
from .validation import check_graph, check_mode, check_positive_int, check_scalar_in


class _PipelineEstimator(ClusterMixin, BaseEstimator):

    def _validate(self):
        check_scalar_in("eps", self.eps, 0, 1)
        check_mode(self.mode)
        check_positive_int("rounds", self.rounds, allow_none=True)
        check_positive_int("samples", self.samples)
        check_positive_int("max_iter", self.max_iter)
        check_scalar_in("tol", self.tol, 0, 1)
        return SolverConfig(tolerance=self.tol, max_iter=self.max_iter)

    def _finish(self, g, report):
        self.report_ = report
        self.n_vertices_ = g.n
        self.eigenvalues_ = random_walk_spectrum(g).eigenvalues
        self.threshold_rank_ = report.r
        return self

    def predict(self, X=None):
        """Labels of the fitted graph; ``X`` is accepted for API symmetry only."""
        check_is_fitted(self, "labels_")
        if X is not None and check_graph(X).n != self.n_vertices_:
            raise ValueError("predict only labels the graph passed to fit")
        return self.labels_.copy()


class ThresholdRankColoring(_PipelineEstimator):
    """Partial 3-colouring of a regular graph with few large random-walk eigenvalues.

    ``labels_[u]`` is 1, 2 or 3, or 0 for uncoloured vertices.
    """

    def __init__(self, eps=0.1, delta=0.0, mode="auto", gamma=0.001, rounds=None, samples=200,
                 random_state=0, tol=1e-7, max_iter=200_000, exact_cap=COLORING_CAP):
        self.eps = eps
        self.delta = delta
        self.mode = mode
        self.gamma = gamma
        self.rounds = rounds
        self.samples = samples
        self.random_state = random_state
        self.tol = tol
        self.max_iter = max_iter
        self.exact_cap = exact_cap

    def fit(self, X, y=None):
        cfg = self._validate()
        check_scalar_in("delta", self.delta, 0, 1, low_closed=True, high_closed=True)
        check_scalar_in("gamma", self.gamma, 0, 0.25)
        g = check_graph(X)
        report = solve_3coloring(g, self.eps, self.delta, self.mode, cfg, self.rounds, self.samples,
                                 self.random_state or 0, self.gamma, self.exact_cap)
        self.labels_ = np.asarray(report.coloring, dtype=int)
        self.coverage_ = report.achieved / g.n
        return self._finish(g, report)


class ThresholdRankIndependentSet(_PipelineEstimator):
    """Large independent set in a regular graph promised to contain one of size (1/2 - delta) n.

    ``labels_`` is the 0/1 indicator of the returned set.
    """

    def __init__(self, eps=0.2, delta=0.0, mode="auto", rounds=None, samples=200, random_state=0,
                 tol=1e-7, max_iter=200_000, exact_cap=INDEPENDENT_SET_CAP):
        self.eps = eps
        self.delta = delta
        self.mode = mode
        self.rounds = rounds
        self.samples = samples
        self.random_state = random_state
        self.tol = tol
        self.max_iter = max_iter
        self.exact_cap = exact_cap

    def fit(self, X, y=None):
        cfg = self._validate()
        check_scalar_in("delta", self.delta, 0, 0.5, low_closed=True)
        g = check_graph(X)
        report = solve_max_is(g, self.eps, self.delta, self.mode, cfg, self.rounds, self.samples,
                              self.random_state or 0, self.exact_cap)
        self.labels_ = np.zeros(g.n, dtype=int)
        self.labels_[list(report.independent_set)] = 1
        self.independent_set_ = np.asarray(report.independent_set, dtype=int)
        return self._finish(g, report)
