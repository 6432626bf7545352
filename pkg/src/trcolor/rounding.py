"""Threshold rounding of (pseudo-)distributions and the end-to-end pipelines.

``solve_3coloring`` and ``solve_max_is`` run: spectrum and threshold rank,
a backend distribution (exact enumeration or the moment relaxation), the
conditioning search, threshold rounding, and an audit of every quantity the
correctness argument relies on.  The audit ends up in
``RoundingReport.diagnostics``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import BackendInconsistencyError, PreconditionError
from .graph import (
    COLORING_CAP,
    INDEPENDENT_SET_CAP,
    PartialColoring,
    edges_between,
    edges_within,
    is_independent_set,
    verify_partial_coloring,
)
from .pseudo import (
    conditioning_loop,
    exact_from_colorings,
    exact_from_independent_sets,
    global_correlation,
)
from .relaxation import SolverConfig, build_coloring_relaxation, build_is_relaxation, solve
from .spectral import random_walk_spectrum, threshold_rank

SLACK = 1e-12
EDGE_TOL = 1e-6
DELTA_CONSTANT = 20
T_EDGE_FLOOR = 1 / 50
EXACT_AUTO_LIMIT = 15


# ------------------------------------------------------------ lemma evaluators


@dataclass(frozen=True)
class BoundCheck:
    value: float
    bound: float
    holds: bool


@dataclass(frozen=True)
class OverlapBound(BoundCheck):
    """``bound`` is the stated ``1/4 - eta/2 - gamma``.

    The rearrangement argument only uses ``b2 + b3 = 1 - b1``, which drops
    the uncoloured mass of ``py``; without that step it yields
    ``1/4 - eta - gamma``, kept here as ``proven_bound``.
    """

    proven_bound: float = 0.0
    proven_holds: bool = True


def color_overlap(px, py, colors=3):
    return float(np.dot(np.asarray(px, float)[:colors], np.asarray(py, float)[:colors]))


def correlation_lower_bound(px, py, gamma, eta) -> OverlapBound:
    """Overlap ``sum_c px(c) py(c)`` of two colour marginals against ``1/4 - eta/2 - gamma``.

    ``px``/``py`` are distributions over (1, 2, 3, uncoloured).
    """
    if not 0 < gamma < 0.25:
        raise PreconditionError(f"gamma={gamma} outside (0, 1/4)")
    if not 0 < eta < 0.25:
        raise PreconditionError(f"eta={eta} outside (0, 1/4)")
    for name, p in (("px", px), ("py", py)):
        p = np.asarray(p, float)
        if p.shape != (4,):
            raise PreconditionError(f"{name} must have 4 entries")
        if (p < 0).any() or abs(p.sum() - 1) > 1e-9:
            raise PreconditionError(f"{name} is not a probability vector")
        if p[:3].max() > 0.5 + gamma:
            raise PreconditionError(f"{name} has a colour with probability {p[:3].max()} > 1/2 + gamma")
        if p[3] > eta:
            raise PreconditionError(f"{name} has uncoloured probability {p[3]} > eta")
    value = color_overlap(px, py)
    bound = 0.25 - eta / 2 - gamma
    proven = 0.25 - eta - gamma
    return OverlapBound(value, bound, value >= bound - 1e-12, proven, value >= proven - 1e-12)


def overlap_counterexample():
    """Marginals meeting every precondition whose overlap is below the stated bound.

    Overlap ``(1/2 - eta)**2`` against ``1/4 - eta/2 - gamma``; with
    ``eta = 1/8, gamma = 1/64`` that is 9/64 against 11/64 (exact in binary).
    """
    eta, gamma = 0.125, 1 / 64
    px = (0.5, 0.5 - eta, 0.0, eta)
    py = (0.0, 0.5 - eta, 0.5, eta)
    return px, py, gamma, eta


@dataclass(frozen=True)
class FourColorReport:
    px: tuple
    py: tuple
    correlation: float
    max_marginal: float

    @property
    def demonstrates_failure(self):
        return self.correlation == 0.0 and self.max_marginal <= 0.5


def four_color_counterexample() -> FourColorReport:
    """Two marginals over four colours, each at most 1/2 everywhere, with zero overlap."""
    px = (0.5, 0.5, 0.0, 0.0)
    py = (0.0, 0.0, 0.5, 0.5)
    corr = sum(a * b for a, b in zip(px, py))
    return FourColorReport(px, py, corr, max(max(px), max(py)))


@dataclass(frozen=True)
class EdgeLocalCorrelation:
    per_edge: np.ndarray
    per_edge_simplified: np.ndarray
    average: float
    average_simplified: float
    discrepancy: float


def edge_symbols_of(pd):
    """Symbols whose coincidence is forbidden on edges (colours, or the label 1)."""
    return tuple(i for i, a in enumerate(pd.alphabet) if a != 0) if len(pd.alphabet) > 2 else (1,)


def edge_local_correlation(pd, g, symbols=None) -> EdgeLocalCorrelation:
    """Squared covariances across edges, and the same with ``p_uv(a, a)`` taken as zero."""
    syms = list(edge_symbols_of(pd) if symbols is None else symbols)
    if g.m == 0:
        z = np.zeros(0)
        return EdgeLocalCorrelation(z, z, 0.0, 0.0, 0.0)
    e = np.asarray(g.edges)
    m = pd.marginals()
    P = pd.pairwise_all()
    pu, pv = m[e[:, 0]][:, syms], m[e[:, 1]][:, syms]
    same = P[e[:, 0], e[:, 1]][:, syms, syms]
    full = ((same - pu * pv) ** 2).sum(1)
    simple = ((pu * pv) ** 2).sum(1)
    return EdgeLocalCorrelation(full, simple, float(full.mean()), float(simple.mean()),
                                float(np.abs(full - simple).max()))


def verify_local_correlation_lemma(pd, g, r, lam, spectrum=None) -> BoundCheck:
    """Edge-averaged squared covariance (all symbols) against ``sqrt(2 r GC) + lam``."""
    s = spectrum if spectrum is not None else random_walk_spectrum(g)
    if threshold_rank(s, lam) > r:
        raise PreconditionError(f"graph has more than r={r} eigenvalues above {lam}")
    lhs = edge_local_correlation(pd, g, symbols=range(len(pd.alphabet))).average
    rhs = math.sqrt(2 * r * global_correlation(pd)) + lam
    return BoundCheck(lhs, rhs, lhs <= rhs + 1e-8)


# --------------------------------------------------------------------- reports


@dataclass
class RoundingReport:
    task: str
    n: int
    d: int
    gamma: float
    sets: dict
    valid: bool
    achieved: int
    coloring: tuple | None = None
    independent_set: tuple | None = None
    mode: str = "given"
    eps: float | None = None
    delta: float | None = None
    lam: float | None = None
    r: int | None = None
    global_correlation: float | None = None
    local_correlation: float | None = None
    target: float | None = None
    diagnostics: dict = field(default_factory=dict)
    conditioning: dict | None = None
    notes: list = field(default_factory=list)

    @property
    def guarantee_met(self):
        return self.target is None or self.achieved >= self.target - 1e-9

    @property
    def empirical(self):
        return self.mode == "sdp"

    def to_dict(self):
        out = {
            "task": self.task,
            "mode": self.mode,
            "n": self.n,
            "d": self.d,
            "eps": self.eps,
            "delta": self.delta,
            "lambda": self.lam,
            "r": self.r,
            "gamma": self.gamma,
            "global_correlation": self.global_correlation,
            "local_correlation": self.local_correlation,
            "sets": {k: list(v) for k, v in self.sets.items()},
        }
        if self.task == "coloring":
            out["coloring"] = list(self.coloring)
        else:
            out["independent_set"] = list(self.independent_set)
        out.update({
            "valid": self.valid,
            "target": self.target,
            "achieved": self.achieved,
            "guarantee_met": self.guarantee_met,
            "empirical": self.empirical,
            "diagnostics": self.diagnostics,
            "conditioning": self.conditioning,
            "notes": list(self.notes),
        })
        return out


def _above(values, threshold):
    return values >= threshold + SLACK


def _edge_count_identity(g, inner, outer):
    inner, outer = sorted(inner), sorted(outer)
    cross = edges_between(g, inner, outer)
    e_in, e_out = edges_within(g, inner), edges_within(g, outer)
    d = g.degree
    return {
        "e_cross": cross,
        "d_outer_minus_2e_outer": d * len(outer) - 2 * e_out,
        "d_inner_minus_2e_inner": d * len(inner) - 2 * e_in,
        "e_outer": e_out,
        "holds": cross == d * len(outer) - 2 * e_out == d * len(inner) - 2 * e_in,
    }


def _edge_residual(pd, g, syms):
    if g.m == 0:
        return 0.0
    e = np.asarray(g.edges)
    P = pd.pairwise_all()[e[:, 0], e[:, 1]]
    return float(np.abs(P[:, syms, syms]).max())


def round_3coloring(pd, g, gamma=0.001) -> RoundingReport:
    """Colour every vertex whose marginal on some colour is at least ``1/2 + gamma``."""
    if len(pd.alphabet) != 4:
        raise ValueError("expected a distribution over (1, 2, 3, uncoloured)")
    m = pd.marginals()
    n = g.n
    S_sets = [np.nonzero(_above(m[:, c], 0.5 + gamma))[0] for c in range(3)]
    colored = np.zeros(n, dtype=int)
    for c, members in enumerate(S_sets):
        if (colored[members] != 0).any():
            raise BackendInconsistencyError("a vertex exceeds 1/2 + gamma on two colours")
        colored[members] = c + 1
    S = set(np.nonzero(colored)[0].tolist())
    B = set(np.nonzero(_above(m[:, 3], gamma))[0].tolist()) - S
    T = set(range(n)) - S - B
    coloring = PartialColoring(colored.tolist())
    verdict = verify_partial_coloring(g, coloring)
    if not verdict.valid:
        raise BackendInconsistencyError(
            f"rounding produced monochromatic edges {verdict.violations[:5]}; "
            f"edge-constraint residual {_edge_residual(pd, g, [0, 1, 2]):.3e}")
    sets = {"B": sorted(B), "S1": S_sets[0].tolist(), "S2": S_sets[1].tolist(), "S3": S_sets[2].tolist(),
            "S": sorted(S), "T": sorted(T)}
    return RoundingReport("coloring", n, g.degree, gamma, sets, True, len(S), coloring=coloring.assignment)


def round_independent_set(pd, g, eps) -> RoundingReport:
    """Take every vertex with ``Pr[X_u = 1] >= 1/2 + eps/100``."""
    if tuple(pd.alphabet) != (0, 1):
        raise ValueError("expected a distribution over {0, 1}")
    gamma = eps / 100
    p1 = pd.marginals()[:, 1]
    S = np.nonzero(_above(p1, 0.5 + gamma))[0].tolist()
    A = np.nonzero(p1 <= eps / 2 + SLACK)[0].tolist()
    T = sorted(set(range(g.n)) - set(A))
    if not is_independent_set(g, S):
        raise BackendInconsistencyError(
            f"rounded set is not independent; edge residual {_edge_residual(pd, g, [1]):.3e}")
    sets = {"S": S, "A": A, "T": T}
    return RoundingReport("independent_set", g.n, g.degree, gamma, sets, True, len(S), independent_set=tuple(S))


# ------------------------------------------------------------------- pipelines


def default_rounds(r, lam):
    return max(4, min(math.ceil(r / lam ** 2), 12))


def _resolve_mode(mode, n):
    if mode == "auto":
        return "exact" if n <= EXACT_AUTO_LIMIT else "sdp"
    if mode not in ("exact", "sdp"):
        raise ValueError(f"unknown mode {mode!r}")
    return mode


def _conditioning_summary(tr):
    return {
        "target": tr.target,
        "rounds": tr.rounds,
        "samples": tr.samples,
        "seed": tr.seed,
        "initial_correlation": tr.initial_correlation,
        "sequences_evaluated": len(tr.sequences),
        "k": tr.best_k,
        "sequence": tr.best_sequence,
        "pins": [list(p) for p in tr.best_pins],
        "correlation": tr.best_correlation,
        "succeeded": tr.succeeded,
    }


def _m_stats(values, floor):
    if len(values) == 0:
        return {"count": 0, "min": None, "mean": None, "below_floor": 0, "floor": floor}
    return {"count": int(len(values)), "min": float(values.min()), "mean": float(values.mean()),
            "below_floor": int((values <= floor).sum()), "floor": floor}


def solve_3coloring(g, eps=0.1, delta=0.0, mode="auto", config=None, rounds=None, samples=200, seed=0,
                    gamma=0.001, exact_cap=COLORING_CAP, stop_at_target=None) -> RoundingReport:
    """Partial 3-colouring of a (delta-almost) 3-colourable regular graph."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if not 0 <= delta <= 1:
        raise ValueError("delta must lie in [0, 1]")
    mode = _resolve_mode(mode, g.n)
    config = config or SolverConfig()
    spec = random_walk_spectrum(g)
    lam = eps / 100
    r = threshold_rank(spec, lam)
    rounds = rounds or default_rounds(r, lam)
    target_gc = lam ** 2 / (2 * r)
    if mode == "exact":
        base = exact_from_colorings(g, delta, cap=exact_cap)
    else:
        base = solve(build_coloring_relaxation(g, delta), config)
    stop = (mode == "sdp") if stop_at_target is None else stop_at_target
    pd, tr = conditioning_loop(base, rounds, target_gc, samples, seed, stop_at_target=stop)
    rep = round_3coloring(pd, g, gamma)
    rep.mode, rep.eps, rep.delta, rep.lam, rep.r = mode, eps, delta, lam, r
    gc = global_correlation(pd)
    rep.global_correlation = gc
    rep.conditioning = _conditioning_summary(tr)

    m = pd.marginals()
    n, d = g.n, g.degree
    loc = edge_local_correlation(pd, g)
    rep.local_correlation = loc.average_simplified
    S, B, T = rep.sets["S"], rep.sets["B"], rep.sets["T"]
    Tset = set(T)
    in_T = np.array([u in Tset and v in Tset for u, v in g.edges], dtype=bool)
    lemma_floor = (0.25 - 1.5 * gamma) ** 2 / 3
    proven_floor = (0.25 - 2 * gamma) ** 2 / 3
    rep.target = (0.5 - eps) * n - DELTA_CONSTANT * delta * n
    if 0.5 - eps <= 0:
        rep.notes.append("degenerate target: (1/2 - eps) <= 0, any valid coloring meets it")
    if mode == "sdp":
        rep.notes.append("relaxation backend: coverage guarantee is measured, not proven, at this level")
    if not tr.succeeded:
        rep.notes.append(f"conditioning did not reach global correlation {target_gc:.3e}")
    SB = sorted(set(S) | set(B))
    ident = _edge_count_identity(g, SB, T)
    ident["two_e_T_lower_bound"] = (n - 2 * len(SB)) * d
    ident["two_e_T_bound_holds"] = 2 * ident["e_outer"] >= (n - 2 * len(SB)) * d
    local_bound = math.sqrt(2 * r * gc) + lam
    rep.diagnostics = {
        "per_edge_M_stats": {
            **_m_stats(loc.per_edge_simplified[in_T] if len(in_T) else np.zeros(0), T_EDGE_FLOOR),
            "lemma_floor": lemma_floor,
            "below_lemma_floor": int((loc.per_edge_simplified[in_T] < lemma_floor - 1e-6).sum())
            if len(in_T) else 0,
            "proven_floor": proven_floor,
            "below_proven_floor": int((loc.per_edge_simplified[in_T] < proven_floor - 1e-6).sum())
            if len(in_T) else 0,
            "max_edge_residual": _edge_residual(pd, g, [0, 1, 2]),
            "max_discrepancy": loc.discrepancy,
        },
        "markov_B_bound": {
            "size_B": len(B),
            "mass_bound": float(m[:, 3].sum() / gamma),
            "delta_bound": delta * n / gamma,
            "reporting_constant": DELTA_CONSTANT,
            "holds": bool(len(B) <= m[:, 3].sum() / gamma + 1e-9),
        },
        "edge_count_identity": ident,
        "local_correlation": {
            "measured": loc.average_simplified,
            "lemma_bound": local_bound,
            "eps_over_50": eps / 50,
            "lemma_holds": bool(loc.average <= local_bound + 1e-8),
            "T_edge_lower_bound": T_EDGE_FLOOR * 2 * ident["e_outer"] / (n * d) if d else 0.0,
            "size_bound_from_chain": (0.5 - eps) * n - len(B),
        },
    }
    return rep


def solve_max_is(g, eps=0.2, delta=0.0, mode="auto", config=None, rounds=None, samples=200, seed=0,
                 exact_cap=INDEPENDENT_SET_CAP, stop_at_target=None) -> RoundingReport:
    """Independent set of a regular graph that has one of size ``(1/2 - delta) n``."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if not 0 <= delta < 0.5:
        raise ValueError("delta must lie in [0, 1/2)")
    mode = _resolve_mode(mode, g.n)
    config = config or SolverConfig()
    spec = random_walk_spectrum(g)
    lam = eps ** 5 / 100
    r = threshold_rank(spec, lam)
    rounds = rounds or default_rounds(r, lam)
    target_gc = lam ** 2 / (2 * r)
    if mode == "exact":
        base = exact_from_independent_sets(g, delta, cap=exact_cap)
    else:
        base = solve(build_is_relaxation(g, delta), config)
    stop = (mode == "sdp") if stop_at_target is None else stop_at_target
    pd, tr = conditioning_loop(base, rounds, target_gc, samples, seed, stop_at_target=stop)
    rep = round_independent_set(pd, g, eps)
    rep.mode, rep.eps, rep.delta, rep.lam, rep.r = mode, eps, delta, lam, r
    gc = global_correlation(pd)
    rep.global_correlation = gc
    rep.conditioning = _conditioning_summary(tr)
    n, d = g.n, g.degree
    loc = edge_local_correlation(pd, g, symbols=(1,))
    rep.local_correlation = loc.average_simplified
    rep.target = (0.5 - 2 * delta - eps) * n
    if mode == "sdp" and lam < config.tolerance:
        rep.notes.append(f"lambda={lam:.3e} is below the solver tolerance: outside numerical reach")
    if not tr.succeeded:
        rep.notes.append(f"conditioning did not reach global correlation {target_gc:.3e}")
    S, A, T = rep.sets["S"], rep.sets["A"], rep.sets["T"]
    p1 = pd.marginals()[:, 1]
    Tset = set(T)
    outside_A = np.array([u in Tset and v in Tset for u, v in g.edges], dtype=bool)
    ident = _edge_count_identity(g, A, T)
    floor = (eps / 2) ** 4
    rep.diagnostics = {
        "per_edge_M_stats": {
            **_m_stats(loc.per_edge_simplified[outside_A] if len(outside_A) else np.zeros(0), floor),
            "violations_of_floor": int((loc.per_edge_simplified[outside_A] < floor - 1e-12).sum())
            if len(outside_A) else 0,
            "max_edge_residual": _edge_residual(pd, g, [1]),
        },
        "markov_B_bound": None,
        "edge_count_identity": ident,
        "mass_accounting": {
            "mass": float(p1.sum()),
            "required": (0.5 - delta) * n,
            "upper_bound": (eps / 2) * len(A) + len(S) + (0.5 + eps / 100) * (n - len(S) - len(A)),
            "size_A": len(A),
            "large_A_threshold": (0.5 - eps / 3) * n,
        },
        "local_correlation": {
            "measured": loc.average_simplified,
            "lemma_bound": math.sqrt(2 * r * gc) + lam,
            "eps5_over_50": eps ** 5 / 50,
            "eps5_over_24": eps ** 5 / 24,
            "T_edge_lower_bound": floor * 2 * ident["e_outer"] / (n * d) if d else 0.0,
        },
    }
    return rep
