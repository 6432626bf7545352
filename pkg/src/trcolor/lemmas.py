"""Randomized property suites for the inequalities the pipelines rely on.

Each suite returns a ``SuiteResult``; ``worst_margin`` is the smallest
``rhs - lhs`` seen (negative means a violation) and ``violation`` holds the
first failing instance in JSON-friendly form.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .graph import complete_multipartite, make_rng, random_regular
from .pseudo import correlation_profile, exact_from_colorings, mi_from_joint
from .rounding import correlation_lower_bound, four_color_counterexample, overlap_counterexample
from .spectral import local_to_global_check, random_walk_spectrum

SUITES = ("corr-lb", "local-global", "pinsker", "conditioning", "four-color")


@dataclass
class SuiteResult:
    name: str
    trials: int
    failures: int
    worst_margin: float
    seconds: float = 0.0
    violation: dict | None = None
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.failures == 0

    def to_dict(self):
        return {
            "suite": self.name,
            "trials": self.trials,
            "failures": self.failures,
            "passed": self.passed,
            "worst_margin": self.worst_margin,
            "seconds": round(self.seconds, 3),
            "violation": self.violation,
            "details": self.details,
        }


def _sample_marginal(rng, gamma, eta, extreme):
    bot = rng.uniform(0, eta)
    cap = 0.5 + gamma
    mass = 1 - bot
    if extreme:
        # push mass onto as few colours as the cap allows
        first = min(cap, mass)
        second = min(cap, mass - first)
        colors = np.array([first, second, mass - first - second])
        colors = colors[rng.permutation(3)]
    else:
        while True:
            colors = rng.dirichlet(np.full(3, rng.uniform(0.2, 3.0))) * mass
            if colors.max() <= cap:
                break
    return np.append(colors, bot)


def corr_lb_suite(trials=100_000, seed=0) -> SuiteResult:
    """Colour overlap of two capped marginals never drops below ``1/4 - eta/2 - gamma``."""
    rng = make_rng(seed)
    t0 = time.perf_counter()
    failures, worst, violation = 0, math.inf, None
    proven_failures, proven_worst = 0, math.inf
    for i in range(trials):
        gamma = rng.uniform(1e-9, 0.25)
        eta = rng.uniform(1e-9, 0.25)
        px = _sample_marginal(rng, gamma, eta, rng.random() < 0.3)
        py = _sample_marginal(rng, gamma, eta, rng.random() < 0.3)
        res = correlation_lower_bound(px, py, gamma, eta)
        margin = res.value - res.bound
        worst = min(worst, margin)
        proven_worst = min(proven_worst, res.value - res.proven_bound)
        proven_failures += not res.proven_holds
        if not res.holds:
            failures += 1
            if violation is None:
                violation = {"px": px.tolist(), "py": py.tolist(), "gamma": gamma, "eta": eta,
                             "value": res.value, "bound": res.bound}
    tight = correlation_lower_bound((0.5, 0.5, 0, 0), (0, 0.5, 0.5, 0), 1e-15, 1e-15)
    cx = correlation_lower_bound(*overlap_counterexample())
    details = {"tightness_value": tight.value, "tightness_bound": tight.bound,
               "tightness_gap": tight.value - tight.bound,
               "proven_bound_failures": proven_failures, "proven_bound_worst_margin": proven_worst,
               "explicit_counterexample": {"value": cx.value, "bound": cx.bound, "proven_bound": cx.proven_bound}}
    return SuiteResult("corr-lb", trials, failures, worst, time.perf_counter() - t0, violation, details)


def _random_psd(rng, n, spectrum_vectors=None):
    if spectrum_vectors is not None and rng.random() < 0.3:
        # align with the top eigenvectors, where the inequality is tightest
        k = int(rng.integers(1, min(4, n) + 1))
        Z = spectrum_vectors[:, :k] * rng.uniform(0.1, 1.0, size=k)
        Z = Z + rng.normal(scale=rng.uniform(0, 0.05), size=Z.shape)
    else:
        Z = rng.normal(size=(n, int(rng.integers(1, n + 1))))
    M = Z @ Z.T
    return M * (n / np.trace(M))


def local_global_suite(trials=1000, seed=0, n_max=40, graphs=100) -> SuiteResult:
    """Edge average of a trace-``n`` PSD matrix against the threshold-rank bound."""
    rng = make_rng(seed)
    t0 = time.perf_counter()
    pool = []
    while len(pool) < graphs:
        n = int(rng.integers(6, n_max + 1))
        d = int(rng.choice([2, 3, 4, 5, 6]))
        if n * d % 2 or d >= n:
            continue
        g = random_regular(n, d, int(rng.integers(2**31)))
        w, V = np.linalg.eigh(g.adjacency_matrix() / d)
        spec = random_walk_spectrum(g)
        pool.append((g, spec, V[:, ::-1]))
    failures, worst, violation = 0, math.inf, None
    for i in range(trials):
        g, spec, V = pool[i % graphs]
        lam_sorted = spec.eigenvalues
        positive = [r for r in range(1, g.n) if 1e-9 < lam_sorted[r] < 1 - 1e-9]
        if not positive:
            continue
        r = int(rng.choice(positive))
        lo, hi = lam_sorted[r], lam_sorted[r - 1]
        lam = float(lo if rng.random() < 0.5 or hi - lo < 1e-9 else rng.uniform(lo, hi))
        M = _random_psd(rng, g.n, V)
        res = local_to_global_check(M, g, lam, r, spectrum=spec)
        worst = min(worst, res.margin())
        if not res.holds:
            failures += 1
            if violation is None:
                violation = {"graph_edges": [list(e) for e in g.edges], "n": g.n, "lam": lam, "r": r,
                             "lhs": res.lhs, "rhs": res.rhs}
    return SuiteResult("local-global", trials, failures, worst, time.perf_counter() - t0, violation)


def pinsker_suite(trials=10_000, seed=0) -> SuiteResult:
    """``||joint - product||_1 ** 2 <= 2 I(X; Y)`` on random joints."""
    rng = make_rng(seed)
    t0 = time.perf_counter()
    failures, worst, violation = 0, math.inf, None
    for _ in range(trials):
        s, t = rng.integers(2, 6, size=2)
        J = rng.dirichlet(np.full(s * t, rng.uniform(0.05, 3.0))).reshape(s, t)
        if rng.random() < 0.2:
            J[rng.random(J.shape) < 0.4] = 0.0
            if J.sum() == 0:
                J[0, 0] = 1.0
            J /= J.sum()
        l1 = float(np.abs(J - np.outer(J.sum(1), J.sum(0))).sum())
        mi = mi_from_joint(J)
        margin = 2 * mi + 1e-9 - l1 ** 2
        worst = min(worst, margin)
        if margin < 0:
            failures += 1
            if violation is None:
                violation = {"joint": J.tolist(), "l1": l1, "mutual_information": mi}
    return SuiteResult("pinsker", trials, failures, worst, time.perf_counter() - t0, violation)


def conditioning_suite(seed=0, samples=200, part_sizes=(2, 3, 4), rounds=(3, 4, 5)) -> SuiteResult:
    """Mean conditioned global correlation against ``ln(4) / (l - 1)`` on uniform colourings."""
    t0 = time.perf_counter()
    failures, worst, violation = 0, math.inf, None
    rows = []
    for m in part_sizes:
        pd = exact_from_colorings(complete_multipartite(3, m))
        for ell in rounds:
            prof = correlation_profile(pd, ell, samples, seed)
            mean = prof.mean(0)
            se = prof.std(0, ddof=1) / math.sqrt(samples)
            k = int(np.argmin(mean))
            bound = math.log(4) / (ell - 1)
            margin = float(np.max(bound + 3 * se - mean))
            worst = min(worst, margin)
            ok = bool((mean <= bound + 3 * se).any())
            rows.append({"m": m, "rounds": ell, "best_k": k, "mean": float(mean[k]), "bound": bound,
                         "se": float(se[k])})
            if not ok:
                failures += 1
                if violation is None:
                    violation = rows[-1]
    return SuiteResult("conditioning", len(rows), failures, worst, time.perf_counter() - t0, violation,
                       {"rows": rows})


def four_color_suite() -> SuiteResult:
    t0 = time.perf_counter()
    rep = four_color_counterexample()
    ok = rep.demonstrates_failure
    details = {"px": list(rep.px), "py": list(rep.py), "correlation": rep.correlation,
               "max_marginal": rep.max_marginal}
    return SuiteResult("four-color", 1, 0 if ok else 1, 0.5 - rep.max_marginal, time.perf_counter() - t0,
                       None if ok else details, details)


def run_suite(which, trials=None, seed=0) -> SuiteResult:
    if which == "corr-lb":
        return corr_lb_suite(trials or 100_000, seed)
    if which == "local-global":
        return local_global_suite(trials or 1000, seed)
    if which == "pinsker":
        return pinsker_suite(trials or 10_000, seed)
    if which == "conditioning":
        return conditioning_suite(seed, samples=trials or 200)
    if which == "four-color":
        return four_color_suite()
    raise ValueError(f"unknown suite {which!r}; choose from {SUITES}")
