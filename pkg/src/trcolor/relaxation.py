"""Level-2 moment relaxation for 3-colouring and independent set.

Variables are the marginals ``p_u(a)`` and pairwise joints ``p_uv(a, b)``,
arranged in a moment matrix of order ``1 + n*s`` indexed by ``{1}`` and
``(u, a)``.  Feasible points satisfy

* simplex and pairwise-consistency equalities,
* entrywise non-negativity (so every pairwise block is a distribution),
* edge constraints ``p_uv(a, a) = 0`` for the forbidden symbols,
* an optional budget row, and pins ``p_v(a) = 1``,
* positive semidefiniteness of the moment matrix.

:func:`solve` runs a consensus ADMM with three copies of the matrix: one
projected on the affine set, one on the PSD cone, one on the
non-negative/budget set.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
import scipy.linalg

from .exceptions import ConvergenceError, InfeasibleError, InfeasiblePinError
from .graph import Graph
from .pseudo import COLORING_ALPHABET, INDEPENDENT_SET_ALPHABET, PseudoDistribution

COLORING = "coloring"
INDEPENDENT_SET = "independent_set"


class RelaxationInfeasibleError(InfeasibleError):
    def __init__(self, message, report):
        self.report = report
        super().__init__(message)


@dataclass(frozen=True)
class LinearConstraint:
    kind: str
    terms: tuple
    sense: str
    rhs: float

    def residual(self, value_of):
        lhs = math.fsum(c * value_of(var) for var, c in self.terms)
        if self.sense == "=":
            return abs(lhs - self.rhs)
        if self.sense == "<=":
            return max(0.0, lhs - self.rhs)
        return max(0.0, self.rhs - lhs)


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 1e-7
    max_iter: int = 200_000
    rho: float = 1.0
    relaxation: float = 1.6
    check_every: int = 10
    balance_every: int = 50
    infeasibility_window: int = 2000
    snap: float = 1e-6
    warm_start: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not 0 < self.relaxation < 2:
            raise ValueError("relaxation must lie in (0, 2)")


@dataclass(frozen=True)
class RelaxationProblem:
    graph: Graph
    kind: str
    delta: float
    pins: tuple = ()

    def __post_init__(self):
        if self.kind not in (COLORING, INDEPENDENT_SET):
            raise ValueError(f"unknown problem kind {self.kind!r}")
        object.__setattr__(self, "pins", tuple(sorted((int(v), s) for v, s in self.pins)))

    @property
    def alphabet(self):
        return COLORING_ALPHABET if self.kind == COLORING else INDEPENDENT_SET_ALPHABET

    @property
    def n(self):
        return self.graph.n

    @property
    def size(self):
        return len(self.alphabet)

    @property
    def order(self):
        return 1 + self.n * self.size

    @property
    def edge_symbols(self):
        """Symbol indices that may not appear on both endpoints of an edge."""
        return (0, 1, 2) if self.kind == COLORING else (1,)

    @property
    def budget(self):
        """``(symbol_index, sense, rhs)`` or ``None``."""
        if self.kind == COLORING:
            return (3, "<=", self.delta * self.n) if self.delta > 0 else None
        return (1, ">=", (0.5 - self.delta) * self.n)

    @property
    def objective(self):
        """Coefficients of ``p_u(a)`` in the minimised objective, shape ``(n, s)``."""
        c = np.zeros((self.n, self.size))
        if self.kind == COLORING:
            c[:, 3] = 1.0
        return c

    def pin_indices(self):
        return tuple((v, self.alphabet.index(s)) for v, s in self.pins)

    def with_pins(self, pins):
        return replace(self, pins=tuple(self.pins) + tuple(pins))

    @cached_property
    def constraints(self):
        n, s, g = self.n, self.size, self.graph
        out = []
        for u in range(n):
            out.append(LinearConstraint("simplex", tuple((("p", u, a), 1.0) for a in range(s)), "=", 1.0))
        for u in range(n):
            for v in range(u + 1, n):
                for a in range(s):
                    terms = tuple((("q", u, v, a, b), 1.0) for b in range(s)) + ((("p", u, a), -1.0),)
                    out.append(LinearConstraint("consistency", terms, "=", 0.0))
                for b in range(s):
                    terms = tuple((("q", u, v, a, b), 1.0) for a in range(s)) + ((("p", v, b), -1.0),)
                    out.append(LinearConstraint("consistency", terms, "=", 0.0))
        for u, v in g.edges:
            for a in self.edge_symbols:
                out.append(LinearConstraint("edge", ((("q", u, v, a, a), 1.0),), "=", 0.0))
        if self.budget is not None:
            a, sense, rhs = self.budget
            out.append(LinearConstraint("budget", tuple((("p", u, a), 1.0) for u in range(n)), sense, rhs))
        for v, a in self.pin_indices():
            out.append(LinearConstraint("pin", ((("p", v, a), 1.0),), "=", 1.0))
        return out

    def residuals(self, marginals, pairwise):
        """Largest violation per constraint kind for given marginals / joints."""
        def value_of(var):
            if var[0] == "p":
                return float(marginals[var[1], var[2]])
            _, u, v, a, b = var
            return float(pairwise[u, v, a, b])

        worst = {}
        for c in self.constraints:
            worst[c.kind] = max(worst.get(c.kind, 0.0), c.residual(value_of))
        worst["nonnegativity"] = float(max(0.0, -np.min(marginals), -np.min(pairwise)))
        return worst

    def to_dict(self):
        return {
            "kind": self.kind,
            "n": self.n,
            "d": self.graph.degree,
            "delta": self.delta,
            "alphabet": list(self.alphabet),
            "pins": [list(p) for p in self.pins],
            "budget": None if self.budget is None else {
                "symbol": self.alphabet[self.budget[0]], "sense": self.budget[1], "rhs": self.budget[2]},
            "constraint_counts": _count_kinds(self.constraints),
        }


def _count_kinds(constraints):
    out = {}
    for c in constraints:
        out[c.kind] = out.get(c.kind, 0) + 1
    return out


def build_coloring_relaxation(g: Graph, delta: float = 0.0) -> RelaxationProblem:
    if not 0 <= delta <= 1:
        raise ValueError("delta must lie in [0, 1]")
    return RelaxationProblem(g, COLORING, float(delta))


def build_is_relaxation(g: Graph, delta: float = 0.0) -> RelaxationProblem:
    if not 0 <= delta < 0.5:
        raise ValueError("delta must lie in [0, 1/2)")
    return RelaxationProblem(g, INDEPENDENT_SET, float(delta))


# ---------------------------------------------------------------- moment matrix


class MomentMatrix:
    """Symmetric moment matrix over ``{1} ∪ {(u, a)}``."""

    def __init__(self, data, n, s):
        self.data = np.asarray(data, dtype=float)
        self.n, self.s = n, s
        if self.data.shape != (1 + n * s, 1 + n * s):
            raise ValueError("moment matrix has the wrong order")

    def index(self, u, a):
        return 1 + u * self.s + a

    @classmethod
    def from_parts(cls, marginals, pairwise):
        n, s = marginals.shape
        Z = np.zeros((1 + n * s, 1 + n * s))
        Z[0, 0] = 1.0
        Z[0, 1:] = Z[1:, 0] = marginals.ravel()
        Z[1:, 1:] = pairwise.transpose(0, 2, 1, 3).reshape(n * s, n * s)
        return cls(Z, n, s)

    @classmethod
    def from_distribution(cls, pd: PseudoDistribution):
        return cls.from_parts(pd.marginals(), pd.pairwise_all())

    def marginals(self):
        return self.data[0, 1:].reshape(self.n, self.s)

    def pairwise_all(self):
        n, s = self.n, self.s
        return self.data[1:, 1:].reshape(n, s, n, s).transpose(0, 2, 1, 3)

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.data)[0])

    def exclusivity_residual(self):
        blocks = self.pairwise_all()[np.arange(self.n), np.arange(self.n)]
        off = blocks - blocks * np.eye(self.s)
        return float(np.abs(off).max(initial=0.0))

    def diagonal_residual(self):
        d = np.diag(self.data)[1:].reshape(self.n, self.s)
        return float(np.abs(d - self.marginals()).max(initial=0.0))


# ------------------------------------------------------------------ ADMM pieces


def _pair_gram(mask):
    """``pinv(K K^T)`` for the row/column-sum operator restricted to ``mask``."""
    s = mask.shape[0]
    KKt = np.zeros((2 * s, 2 * s))
    KKt[:s, :s] = np.diag(mask.sum(1))
    KKt[s:, s:] = np.diag(mask.sum(0))
    KKt[:s, s:] = mask
    KKt[s:, :s] = mask.T
    return np.linalg.pinv(KKt)


def _project_sum(x, rhs, sense):
    """Project ``x`` onto ``{y >= 0, sum(y) <sense> rhs}``."""
    y = np.maximum(x, 0.0)
    total = y.sum()
    if (sense == "<=" and total <= rhs) or (sense == ">=" and total >= rhs):
        return y
    if sense == "<=" and rhs <= 0:
        return np.zeros_like(y)
    # find tau with sum(max(x - tau, 0)) == rhs
    srt = np.sort(x)[::-1]
    csum = np.cumsum(srt)
    k = np.arange(1, len(x) + 1)
    taus = (csum - rhs) / k
    ok = srt > taus
    j = np.nonzero(ok)[0][-1]
    return np.maximum(x - taus[j], 0.0)


class _Operators:
    """Projections for one problem; built once, reused every iteration."""

    def __init__(self, p: RelaxationProblem):
        n, s = p.n, p.size
        self.n, self.s, self.N = n, s, p.order
        A = p.graph.adjacency_matrix(bool)
        edge_mask = np.ones((s, s))
        for a in p.edge_symbols:
            edge_mask[a, a] = 0.0
        F = np.where(A[:, :, None, None], edge_mask, np.ones((s, s)))
        F[np.arange(n), np.arange(n)] = 0.0
        self.F = F
        G0, G1 = _pair_gram(np.ones((s, s))), _pair_gram(edge_mask)
        Gp = np.where(A[:, :, None, None], G1, G0)
        Gp[np.arange(n), np.arange(n)] = 0.0
        self.G = Gp
        GT = Gp.transpose(1, 0, 2, 3)
        off = 2.0 * (Gp[:, :, :s, s:] + GT[:, :, s:, :s])
        diag = 2.0 * (Gp[:, :, :s, :s].sum(1) + Gp[:, :, s:, s:].sum(0))
        H = off.transpose(0, 2, 1, 3).reshape(n * s, n * s).copy()
        for u in range(n):
            H[u * s:(u + 1) * s, u * s:(u + 1) * s] = diag[u] + 6.0 * np.eye(s)
        pinned = dict(p.pin_indices())
        rows, rhs = [], []
        for u in range(n):
            if u in pinned:
                for a in range(s):
                    r = np.zeros(n * s)
                    r[u * s + a] = 1.0
                    rows.append(r)
                    rhs.append(1.0 if a == pinned[u] else 0.0)
            else:
                r = np.zeros(n * s)
                r[u * s:(u + 1) * s] = 1.0
                rows.append(r)
                rhs.append(1.0)
        E = np.array(rows)
        m = len(rows)
        KKT = np.zeros((n * s + m, n * s + m))
        KKT[:n * s, :n * s] = H
        KKT[:n * s, n * s:] = E.T
        KKT[n * s:, :n * s] = E
        self.kkt = scipy.linalg.lu_factor(KKT)
        self.kkt_rhs = np.array(rhs)
        self.C = np.zeros((self.N, self.N))
        obj = p.objective.ravel()
        self.C[np.arange(1, self.N), np.arange(1, self.N)] = obj
        self.budget = None
        if p.budget is not None:
            a, sense, rhs_b = p.budget
            self.budget = (1 + np.arange(n) * s + a, sense, rhs_b)

    def blocks(self, M):
        n, s = self.n, self.s
        return M[1:, 1:].reshape(n, s, n, s).transpose(0, 2, 1, 3)

    def affine(self, M):
        """Frobenius projection of a symmetric matrix onto the affine constraints."""
        n, s = self.n, self.s
        a = M[0, 1:].reshape(n, s)
        b = np.diag(M)[1:].reshape(n, s)
        B = self.blocks(M) * self.F
        k = np.concatenate([B.sum(3), B.sum(2)], axis=2)
        Gk = np.einsum("uvij,uvj->uvi", self.G, k)
        f = 4.0 * a + 2.0 * b + 2.0 * Gk[:, :, :s].sum(1) + 2.0 * Gk[:, :, s:].sum(0)
        sol = scipy.linalg.lu_solve(self.kkt, np.concatenate([f.ravel(), self.kkt_rhs]))
        p = sol[:n * s].reshape(n, s)
        h = np.concatenate([np.broadcast_to(p[:, None, :], (n, n, s)),
                            np.broadcast_to(p[None, :, :], (n, n, s))], axis=2)
        ab = np.einsum("uvij,uvj->uvi", self.G, k - h)
        Q = (B - ab[:, :, :s, None] - ab[:, :, None, s:]) * self.F
        Q[np.arange(n), np.arange(n)] = p[:, :, None] * np.eye(s)
        Z = np.empty_like(M)
        Z[0, 0] = 1.0
        Z[0, 1:] = Z[1:, 0] = p.ravel()
        Z[1:, 1:] = Q.transpose(0, 2, 1, 3).reshape(n * s, n * s)
        return Z

    def nonneg(self, M):
        Y = np.maximum(M, 0.0)
        Y[0, 0] = M[0, 0]
        if self.budget is not None:
            idx, sense, rhs = self.budget
            Y[idx, idx] = _project_sum(M[idx, idx], rhs, sense)
        return Y

    @staticmethod
    def psd(M):
        w, V = np.linalg.eigh(M)
        w = np.maximum(w, 0.0)
        return (V * w) @ V.T


def _admm(ops: _Operators, cfg: SolverConfig):
    N, tol = ops.N, cfg.tolerance
    ws = cfg.warm_start
    X, Y, U1, U2, rho = np.zeros((N, N)), np.zeros((N, N)), np.zeros((N, N)), np.zeros((N, N)), cfg.rho
    if ws is not None and ws["X"].shape == (N, N):
        X, Y = ws["X"].copy(), ws["Y"].copy()
        if "U1" in ws:
            U1, U2, rho = ws["U1"].copy(), ws["U2"].copy(), ws["rho"]
    alpha = cfg.relaxation
    history = []
    r_prim = r_dual = math.inf
    it = 0
    z = X
    for it in range(1, cfg.max_iter + 1):
        z = ops.affine(0.5 * ((X - U1) + (Y - U2)) - ops.C / (2.0 * rho))
        z1 = alpha * z + (1 - alpha) * X
        z2 = alpha * z + (1 - alpha) * Y
        Xn = ops.psd(z1 + U1)
        Yn = ops.nonneg(z2 + U2)
        U1 += z1 - Xn
        U2 += z2 - Yn
        if it % cfg.check_every == 0 or it == cfg.max_iter:
            r_prim = math.sqrt(np.sum((z - Xn) ** 2) + np.sum((z - Yn) ** 2))
            r_dual = rho * math.sqrt(np.sum((Xn - X) ** 2) + np.sum((Yn - Y) ** 2))
            X, Y = Xn, Yn
            if r_prim <= tol and r_dual <= tol:
                break
            if it % cfg.infeasibility_window == 0:
                history.append(r_prim)
                if (len(history) >= 3 and r_prim > 1e3 * tol
                        and abs(history[-1] - history[-2]) <= 1e-3 * r_prim
                        and abs(history[-2] - history[-3]) <= 1e-3 * r_prim):
                    return z, X, Y, U1, U2, rho, it, r_prim, r_dual, "infeasible"
            if it % cfg.balance_every == 0:
                if r_prim > 10 * r_dual and rho < 1e4:
                    rho *= 2.0
                    U1 /= 2.0
                    U2 /= 2.0
                elif r_dual > 10 * r_prim and rho > 1e-4:
                    rho /= 2.0
                    U1 *= 2.0
                    U2 *= 2.0
        else:
            X, Y = Xn, Yn
    status = "converged" if (r_prim <= tol and r_dual <= tol) else "max_iter"
    return z, X, Y, U1, U2, rho, it, r_prim, r_dual, status


class RelaxationDistribution(PseudoDistribution):
    """Pseudo-distribution read off a solved relaxation.

    Probabilities within ``snap`` of 0 or 1 are rounded to the endpoint so
    that deterministic vertices carry exactly zero mutual information.
    Conditioning pins the vertex and re-solves from this solution.
    """

    def __init__(self, problem: RelaxationProblem, moment: MomentMatrix, config: SolverConfig, info, state):
        self.problem = problem
        self.moment = moment
        self.config = config
        self.info = info
        self._state = state
        self.alphabet = problem.alphabet
        self.n = problem.n
        self.tolerance = max(10 * config.tolerance, config.snap)
        snap = config.snap
        m = moment.marginals().copy()
        P = moment.pairwise_all().copy()
        m[np.abs(m) < snap] = 0.0
        m[np.abs(m - 1) < snap] = 1.0
        P[np.abs(P) < snap] = 0.0
        P[np.abs(P - 1) < snap] = 1.0
        P[m[:, None, :, None].repeat(self.n, 1).repeat(self.size, 3) == 0] = 0.0
        P[m[None, :, None, :].repeat(self.n, 0).repeat(self.size, 2) == 0] = 0.0
        P[np.arange(self.n), np.arange(self.n)] = m[:, :, None] * np.eye(self.size)
        self._m, self._P = m, P

    def marginals(self):
        return self._m

    def pairwise_all(self):
        return self._P

    def warm_start(self, duals=False):
        """Payload for a related solve.

        Only the primal iterates are passed on by default: after a pin the
        old duals and penalty are far from the new fixed point and were
        observed to slow convergence by an order of magnitude.
        """
        keys = ("X", "Y", "U1", "U2", "rho") if duals else ("X", "Y")
        return {k: self._state[k].copy() if isinstance(self._state[k], np.ndarray) else self._state[k] for k in keys}

    def _condition_index(self, v, index):
        return pin_and_resolve(self.problem, [(v, self.alphabet[index])], self.config, parent=self)

    def __repr__(self):
        return f"RelaxationDistribution(kind={self.problem.kind}, n={self.n}, pins={self.problem.pins})"


def solve(p: RelaxationProblem, cfg: SolverConfig | None = None) -> RelaxationDistribution:
    """Solve the relaxation; raises :class:`RelaxationInfeasibleError` or
    :class:`ConvergenceError` with the final residuals."""
    cfg = cfg or SolverConfig()
    ops = _Operators(p)
    z, X, Y, U1, U2, rho, it, r_prim, r_dual, status = _admm(ops, cfg)
    moment = MomentMatrix(z, p.n, p.size)
    min_eig = moment.min_eigenvalue()
    info = {
        "status": status,
        "iterations": it,
        "primal_residual": r_prim,
        "dual_residual": r_dual,
        "rho": rho,
        "min_eigenvalue": min_eig,
        "objective": float((p.objective * moment.marginals()).sum()),
        "dual_norm": float(rho * math.sqrt(np.sum(U1 ** 2) + np.sum(U2 ** 2))),
    }
    if status == "infeasible":
        raise RelaxationInfeasibleError(
            f"relaxation appears infeasible: primal residual stalled at {r_prim:.3e} with a growing dual", info)
    if status != "converged":
        raise ConvergenceError(f"ADMM hit the iteration cap ({it}) with residuals "
                               f"{r_prim:.3e}/{r_dual:.3e}", info)
    state = {"X": X, "Y": Y, "U1": U1, "U2": U2, "rho": rho}
    return RelaxationDistribution(p, moment, cfg, info, state)


def pin_and_resolve(p: RelaxationProblem, pins, cfg: SolverConfig | None = None, parent=None):
    """Add ``p_v(symbol) = 1`` for every pin and re-solve (warm-started from ``parent``)."""
    cfg = cfg or SolverConfig()
    pins = [(int(v), s) for v, s in pins]
    if not pins:
        return solve(p, cfg)
    merged = dict(p.pins)
    for v, s in pins:
        if s not in p.alphabet:
            raise ValueError(f"{s!r} is not in alphabet {p.alphabet}")
        if merged.get(v, s) != s:
            raise InfeasiblePinError(f"vertex {v} pinned to both {merged[v]!r} and {s!r}")
        merged[v] = s
    forbidden = {p.alphabet[a] for a in p.edge_symbols}
    for u, v in p.graph.edges:
        if u in merged and v in merged and merged[u] == merged[v] and merged[u] in forbidden:
            raise InfeasiblePinError(f"edge ({u}, {v}) pinned to the same symbol {merged[u]!r}")
    q = replace(p, pins=tuple(merged.items()))
    if parent is not None:
        cfg = replace(cfg, warm_start=parent.warm_start())
    return solve(q, cfg)
