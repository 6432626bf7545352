"""Random-walk spectra, threshold rank, and the local-to-global inequality.

The symmetric eigensolver is Householder reduction to tridiagonal form
followed by implicit-shift QL iterations, written against numpy arrays
only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ConvergenceError, PreconditionError, PSDViolationError, TraceViolationError

TIE_SLACK = 1e-12


class SymmetricMatrix:
    """Dense symmetric matrix kept as its packed upper triangle."""

    def __init__(self, data, check=True):
        a = np.asarray(data, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("expected a square matrix")
        if check and not np.allclose(a, a.T, rtol=0, atol=1e-12 * max(1.0, np.abs(a).max(initial=0))):
            raise ValueError("matrix is not symmetric")
        self.order = a.shape[0]
        self._iu = np.triu_indices(self.order)
        self.packed = a[self._iu].copy()

    def to_dense(self):
        out = np.zeros((self.order, self.order))
        out[self._iu] = self.packed
        out.T[self._iu] = self.packed
        return out

    def trace(self):
        return float(self.packed[self._iu[0] == self._iu[1]].sum())


def _as_dense(m):
    if isinstance(m, SymmetricMatrix):
        return m.to_dense()
    a = np.asarray(m, dtype=float)
    return (a + a.T) / 2


def tridiagonalize(a):
    """Householder reduction ``a = Q T Q^T``; returns ``(diag, offdiag, Q)``."""
    A = np.array(a, dtype=float)
    n = A.shape[0]
    Q = np.eye(n)
    for k in range(n - 2):
        x = A[k + 1:, k]
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        if x[0] > 0:
            alpha = -alpha
        v = x.copy()
        v[0] -= alpha
        vnorm2 = v @ v
        if vnorm2 == 0.0:
            continue
        beta = 2.0 / vnorm2
        sub = A[k + 1:, k + 1:]
        p = beta * (sub @ v)
        w = p - (beta / 2.0) * (p @ v) * v
        sub -= np.outer(v, w) + np.outer(w, v)
        A[k + 1:, k] = 0.0
        A[k, k + 1:] = 0.0
        A[k + 1, k] = A[k, k + 1] = alpha
        Q[:, k + 1:] -= beta * np.outer(Q[:, k + 1:] @ v, v)
    return np.diag(A).copy(), np.diag(A, -1).copy(), Q


def tridiagonal_ql(d, e, z=None, max_sweeps=60):
    """Implicit-shift QL on a symmetric tridiagonal matrix.

    ``d`` (length n) and ``e`` (length n-1) are consumed.  When ``z`` is
    given, its columns are rotated along so that on exit column ``i`` pairs
    with ``d[i]``.
    """
    d = np.array(d, dtype=float)
    n = len(d)
    ee = np.zeros(n)
    ee[: n - 1] = e
    eps = np.finfo(float).eps
    # absolute floor keeps deflation working when the diagonal underflows
    floor = eps * max(np.abs(d).max(initial=0.0), np.abs(ee).max(initial=0.0))
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(ee[m]) <= eps * dd or abs(ee[m]) <= floor:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > max_sweeps:
                raise ConvergenceError(f"QL iteration did not converge for eigenvalue {l}")
            g = (d[l + 1] - d[l]) / (2.0 * ee[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + ee[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            underflow = False
            for i in range(m - 1, l - 1, -1):
                f = s * ee[i]
                b = c * ee[i]
                r = math.hypot(f, g)
                ee[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    ee[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if z is not None:
                    zi1 = z[:, i + 1].copy()
                    z[:, i + 1] = s * z[:, i] + c * zi1
                    z[:, i] = c * z[:, i] - s * zi1
            if underflow:
                continue
            d[l] -= p
            ee[l] = g
            ee[m] = 0.0
    return d


def symmetric_eig(a, vectors=True):
    """Eigenpairs of a symmetric matrix, eigenvalues in descending order."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if n == 1:
        return (a[0].copy(), np.ones((1, 1))) if vectors else a[0].copy()
    scale = float(np.abs(a).max())
    if scale == 0.0:
        return (np.zeros(n), np.eye(n)) if vectors else np.zeros(n)
    # work at unit scale so tiny or huge inputs neither underflow nor overflow
    diag, off, Q = tridiagonalize(a / scale)
    z = Q if vectors else None
    w = tridiagonal_ql(diag, off, z) * scale
    order = np.argsort(-w, kind="stable")
    if not vectors:
        return w[order]
    return w[order], z[:, order]


def symmetric_eigvals(a):
    return symmetric_eig(a, vectors=False)


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = None

    def __len__(self):
        return len(self.eigenvalues)

    def to_list(self):
        return [float(x) for x in self.eigenvalues]


def random_walk_matrix(g):
    if g.degree == 0:
        raise ValueError("random walk undefined for a graph without edges")
    return g.adjacency_matrix() / g.degree


def random_walk_spectrum(g, vectors=False) -> Spectrum:
    W = random_walk_matrix(g)
    if vectors:
        w, V = symmetric_eig(W)
        return Spectrum(w, V)
    return Spectrum(symmetric_eigvals(W))


def threshold_rank(s, eps: float) -> int:
    """Number of eigenvalues strictly larger than ``eps`` (ties count as not larger)."""
    if not -1 < eps < 1:
        raise ValueError("eps must lie in (-1, 1)")
    lam = s.eigenvalues if isinstance(s, Spectrum) else np.asarray(s)
    return int(np.count_nonzero(lam > eps + TIE_SLACK))


@dataclass(frozen=True)
class LocalToGlobalResult:
    lhs: float
    rhs: float
    holds: bool
    in_stated_range: bool

    def margin(self):
        return self.rhs - self.lhs


def check_psd(m, tol=1e-8):
    w = symmetric_eigvals(m)
    scale = max(1.0, float(np.abs(w).max(initial=0.0)))
    if w[-1] < -tol * scale:
        raise PSDViolationError(float(w[-1]))
    return w


def local_to_global_check(m, g, lam: float, r: int, spectrum=None, psd_tol=1e-8) -> LocalToGlobalResult:
    """Edge average of ``m`` against ``(1-lam) sqrt(r * mean(m**2)) + lam``.

    ``m`` must be PSD with trace at most ``n``; the graph must have at most
    ``r`` random-walk eigenvalues above ``lam``.  Results with ``lam <= 0``
    are computed but flagged via ``in_stated_range``.
    """
    M = _as_dense(m)
    n = g.n
    if M.shape != (n, n):
        raise ValueError(f"matrix order {M.shape[0]} does not match n={n}")
    if not -1 < lam < 1:
        raise ValueError("lam must lie in (-1, 1)")
    check_psd(M, psd_tol)
    tr = float(np.trace(M))
    if tr > n * (1 + 1e-8):
        raise TraceViolationError(f"trace {tr:.6g} exceeds n={n}")
    s = spectrum if spectrum is not None else random_walk_spectrum(g)
    if threshold_rank(s, lam) > r:
        raise PreconditionError(
            f"graph has {threshold_rank(s, lam)} eigenvalues above {lam}, more than r={r}"
        )
    A = g.adjacency_matrix()
    lhs = float((M * A).sum() / (n * g.degree))
    rhs = float((1 - lam) * math.sqrt(r * float(np.mean(M * M))) + lam)
    return LocalToGlobalResult(lhs, rhs, lhs <= rhs + 1e-9, lam > 0)
