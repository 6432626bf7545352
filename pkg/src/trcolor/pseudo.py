"""Pseudo-distributions over vertex labellings and their information quantities.

A pseudo-distribution here exposes per-vertex marginals, pairwise joints and
a conditioning operation.  :class:`ExactDistribution` is a genuine
probability distribution over a finite support; the relaxation backend lives
in :mod:`trcolor.relaxation`.

All logarithms are natural, so mutual information is in nats.
"""
from __future__ import annotations

import abc
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import BackendInconsistencyError, InfeasibleError, ZeroProbabilityError
from .graph import (
    COLORING_CAP,
    INDEPENDENT_SET_CAP,
    UNASSIGNED,
    enumerate_independent_sets,
    enumerate_proper_colorings,
    make_rng,
)

# symbol order for colourings: colours 1, 2, 3, then "uncoloured"
COLORING_ALPHABET = (1, 2, 3, UNASSIGNED)
INDEPENDENT_SET_ALPHABET = (0, 1)

MI_CLIP = 1e-6
MIN_CONDITION_MASS = 1e-9


class PseudoDistribution(abc.ABC):
    alphabet: tuple
    n: int
    tolerance: float = 1e-9

    @abc.abstractmethod
    def marginals(self) -> np.ndarray:
        """Array of shape ``(n, |alphabet|)``."""

    @abc.abstractmethod
    def pairwise_all(self) -> np.ndarray:
        """Array ``P[u, v, a, b]`` of shape ``(n, n, s, s)``; ``P[u, u]`` is diagonal."""

    @abc.abstractmethod
    def _condition_index(self, v: int, index: int) -> "PseudoDistribution":
        ...

    @property
    def size(self):
        return len(self.alphabet)

    def symbol_index(self, symbol):
        try:
            return self.alphabet.index(symbol)
        except ValueError:
            raise ValueError(f"{symbol!r} is not in alphabet {self.alphabet}") from None

    def marginal(self, u):
        return self.marginals()[u]

    def pairwise(self, u, v):
        return self.pairwise_all()[u, v]

    def is_deterministic(self, v):
        return bool(self.marginal(v).max() >= 1 - max(self.tolerance, 1e-12))

    def condition(self, v, symbol) -> "PseudoDistribution":
        """Condition on ``X_v = symbol``."""
        idx = self.symbol_index(symbol)
        p = float(self.marginal(v)[idx])
        if p <= MIN_CONDITION_MASS:
            raise ZeroProbabilityError(f"Pr[X_{v} = {symbol}] = {p:.3g}")
        if p >= 1 - max(self.tolerance, 1e-12):
            return self
        return self._condition_index(v, idx)


class ExactDistribution(PseudoDistribution):
    """A probability distribution given by weighted assignments.

    ``support`` holds symbol *indices* into ``alphabet``, one row per
    assignment.
    """

    tolerance = 1e-12

    def __init__(self, support, weights, alphabet):
        support = np.asarray(support, dtype=np.int8)
        weights = np.asarray(weights, dtype=float)
        if support.ndim != 2 or len(support) == 0:
            raise ValueError("support must be a non-empty 2-D array")
        if weights.shape != (len(support),):
            raise ValueError("one weight per support row required")
        if (weights < 0).any():
            raise ValueError("weights must be non-negative")
        total = math.fsum(weights)
        if total <= 0:
            raise ValueError("weights sum to zero")
        self.support = support
        self.weights = weights / total
        self.alphabet = tuple(alphabet)
        self.n = support.shape[1]
        self._marg = None
        self._pair = None

    @classmethod
    def uniform(cls, support, alphabet):
        return cls(support, np.full(len(support), 1.0 / len(support)), alphabet)

    def _onehot(self):
        s = self.size
        Y = np.zeros((len(self.support), self.n * s))
        rows = np.repeat(np.arange(len(self.support)), self.n)
        cols = (np.arange(self.n) * s)[None, :] + self.support
        Y[rows, cols.ravel()] = 1.0
        return Y

    def marginals(self):
        if self._marg is None:
            self._marg = (self.weights @ self._onehot()).reshape(self.n, self.size)
        return self._marg

    def pairwise_all(self):
        if self._pair is None:
            Y = self._onehot()
            second = (Y * self.weights[:, None]).T @ Y
            s = self.size
            self._pair = second.reshape(self.n, s, self.n, s).transpose(0, 2, 1, 3).copy()
        return self._pair

    def pairwise(self, u, v):
        if self._pair is not None:
            return self._pair[u, v]
        s = self.size
        out = np.zeros((s, s))
        np.add.at(out, (self.support[:, u], self.support[:, v]), self.weights)
        return out

    def _condition_index(self, v, index):
        keep = self.support[:, v] == index
        return ExactDistribution(self.support[keep], self.weights[keep], self.alphabet)

    def entropy(self):
        w = self.weights[self.weights > 0]
        return float(-(w * np.log(w)).sum())

    def __repr__(self):
        return f"ExactDistribution(n={self.n}, support={len(self.support)}, alphabet={self.alphabet})"


def exact_from_colorings(g, delta=0.0, cap=COLORING_CAP) -> ExactDistribution:
    """Uniform distribution over proper partial 3-colourings leaving at most
    ``floor(delta * n)`` vertices uncoloured."""
    budget = math.floor(delta * g.n + 1e-9)
    labels = enumerate_proper_colorings(g, 3, budget, cap=cap)
    if len(labels) == 0:
        raise InfeasibleError(f"no proper 3-coloring with at most {budget} uncolored vertices")
    idx = np.where(labels == UNASSIGNED, 3, labels - 1)
    return ExactDistribution.uniform(idx, COLORING_ALPHABET)


def exact_from_independent_sets(g, delta=0.0, cap=INDEPENDENT_SET_CAP) -> ExactDistribution:
    """Uniform distribution over indicator vectors of independent sets of size
    at least ``(1/2 - delta) n``."""
    need = max(0, math.ceil((0.5 - delta) * g.n - 1e-9))
    sets = enumerate_independent_sets(g, need, cap=cap)
    if len(sets) == 0:
        raise InfeasibleError(f"no independent set of size >= {need}")
    return ExactDistribution.uniform(sets, INDEPENDENT_SET_ALPHABET)


# ------------------------------------------------------------- information measures


def _mi_terms(P, pu, pv):
    prod = pu[..., :, None] * pv[..., None, :]
    pos = P > 0
    bad = pos & (prod <= 0)
    if bad.any():
        raise BackendInconsistencyError("joint puts mass on a symbol with zero marginal")
    safe = np.where(pos, P, 1.0) / np.where(pos, prod, 1.0)
    return np.where(pos, P * np.log(safe), 0.0)


def _clip_mi(value):
    if value < -MI_CLIP:
        raise BackendInconsistencyError(f"mutual information {value:.3g} is negative beyond tolerance")
    return max(value, 0.0)


def mi_from_joint(joint, px=None, py=None) -> float:
    """Mutual information of a joint table; marginals default to its own sums."""
    P = np.asarray(joint, dtype=float)
    px = P.sum(1) if px is None else np.asarray(px, dtype=float)
    py = P.sum(0) if py is None else np.asarray(py, dtype=float)
    return _clip_mi(float(_mi_terms(P, px, py).sum()))


def mutual_information(pd: PseudoDistribution, u, v) -> float:
    m = pd.marginals()
    return mi_from_joint(pd.pairwise(u, v), m[u], m[v])


def mutual_information_matrix(pd: PseudoDistribution) -> np.ndarray:
    """``I(X_u; X_v)`` for all ordered pairs; the diagonal holds entropies."""
    P = pd.pairwise_all()
    m = pd.marginals()
    I = _mi_terms(P, m[:, None, :], m[None, :, :]).sum(axis=(2, 3))
    if I.min(initial=0.0) < -MI_CLIP:
        raise BackendInconsistencyError(f"mutual information {I.min():.3g} is negative beyond tolerance")
    return np.maximum(I, 0.0)


def global_correlation(pd: PseudoDistribution) -> float:
    """Mean of ``I(X_u; X_v)`` over independent uniform ``u, v`` (diagonal included)."""
    return float(mutual_information_matrix(pd).mean())


@dataclass(frozen=True)
class PinskerGap:
    l1_distance: float
    bound: float
    holds: bool


def pinsker_from_joint(joint, px=None, py=None) -> PinskerGap:
    P = np.asarray(joint, dtype=float)
    px = P.sum(1) if px is None else np.asarray(px, dtype=float)
    py = P.sum(0) if py is None else np.asarray(py, dtype=float)
    l1 = float(np.abs(P - np.outer(px, py)).sum())
    bound = math.sqrt(2 * mi_from_joint(P, px, py))
    return PinskerGap(l1, bound, l1 <= bound + 1e-9)


def pinsker_gap(pd: PseudoDistribution, u, v) -> PinskerGap:
    m = pd.marginals()
    return pinsker_from_joint(pd.pairwise(u, v), m[u], m[v])


def condition(pd: PseudoDistribution, v, symbol) -> PseudoDistribution:
    return pd.condition(v, symbol)


# ---------------------------------------------------------------- conditioning


class ConditioningExhaustedError(ZeroProbabilityError):
    pass


@dataclass
class ConditioningTranscript:
    target: float
    rounds: int
    samples: int
    seed: int
    initial_correlation: float
    best_sequence: int = -1
    best_k: int = 0
    best_correlation: float = math.inf
    best_pins: list = field(default_factory=list)
    sequences: list = field(default_factory=list)

    @property
    def succeeded(self):
        return self.best_correlation <= self.target

    def to_dict(self):
        return {
            "target": self.target,
            "rounds": self.rounds,
            "samples": self.samples,
            "seed": self.seed,
            "initial_correlation": self.initial_correlation,
            "succeeded": self.succeeded,
            "best": {
                "sequence": self.best_sequence,
                "k": self.best_k,
                "correlation": self.best_correlation,
                "pins": [list(p) for p in self.best_pins],
            },
            "sequences": [
                {"index": i, "steps": [{"vertex": v, "value": s, "correlation": c} for v, s, c in steps]}
                for i, steps in enumerate(self.sequences)
            ],
        }


def _draw_and_condition(pd, v, rng):
    """Sample a value for ``X_v`` from its marginal and condition on it,
    resampling among the remaining values when a conditioning fails."""
    p = np.clip(pd.marginal(v), 0.0, None).astype(float)
    tried = np.zeros(len(p), dtype=bool)
    while True:
        mass = np.where(tried, 0.0, p)
        mass[mass <= MIN_CONDITION_MASS] = 0.0
        total = mass.sum()
        if total <= 0:
            raise ConditioningExhaustedError(f"every value of X_{v} failed to condition")
        idx = int(rng.choice(len(p), p=mass / total))
        try:
            return pd.alphabet[idx], pd.condition(v, pd.alphabet[idx])
        except (ZeroProbabilityError, InfeasibleError):
            tried[idx] = True


def _run_sequences(pd, rounds, samples, seed, on_step=None, stop=None):
    """Shared driver: yields ``(sequence_index, steps)`` and calls
    ``on_step(i, k, pins, dist, corr)`` after every conditioning."""
    rng = make_rng(seed)
    cache = {}
    for i in range(samples):
        cur, pins, steps = pd, (), []
        for k in range(1, rounds + 1):
            v = int(rng.integers(pd.n))
            if cur.is_deterministic(v):
                sym = cur.alphabet[int(np.argmax(cur.marginal(v)))]
                nxt = cur
            else:
                sym, nxt = _draw_and_condition(cur, v, rng)
                key = frozenset(pins + ((v, sym),))
                if key in cache:
                    nxt = cache[key]
                else:
                    cache[key] = nxt
            pins = pins + ((v, sym),)
            cur = nxt
            corr = global_correlation(cur)
            steps.append((v, sym, corr))
            if on_step is not None:
                on_step(i, k, pins, cur, corr)
            if corr == 0.0:
                break
        yield i, steps
        if stop is not None and stop():
            return


def conditioning_loop(pd: PseudoDistribution, rounds: int, target: float, samples: int, seed: int = 0,
                      stop_at_target=False):
    """Search random conditioning sequences for a low global correlation.

    Each sequence picks vertices uniformly and values from the current
    marginals.  Over all sequences and prefixes ``k <= rounds`` the
    distribution with the smallest global correlation is returned (ties go
    to the shorter prefix), together with a transcript.
    """
    if rounds < 2:
        raise ValueError("rounds must be >= 2")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    gc0 = global_correlation(pd)
    tr = ConditioningTranscript(target, rounds, samples, int(seed), gc0,
                                best_sequence=-1, best_k=0, best_correlation=gc0)
    best = {"pd": pd}
    if gc0 == 0.0 or (stop_at_target and gc0 <= target):
        return pd, tr

    def on_step(i, k, pins, dist, corr):
        if corr < tr.best_correlation or (corr == tr.best_correlation and k < tr.best_k):
            tr.best_correlation, tr.best_k, tr.best_sequence = corr, k, i
            tr.best_pins = [tuple(p) for p in pins]
            best["pd"] = dist

    for _, steps in _run_sequences(pd, rounds, samples, seed, on_step,
                                   stop=(lambda: tr.succeeded) if stop_at_target else None):
        tr.sequences.append(steps)
    return best["pd"], tr


def correlation_profile(pd: PseudoDistribution, rounds: int, samples: int, seed: int = 0) -> np.ndarray:
    """Global correlation after each prefix of ``samples`` random sequences.

    Row ``i`` column ``k`` is the correlation after ``k`` conditionings of
    sequence ``i`` (column 0 is the unconditioned value).  Sequences that
    reach zero early are padded with zeros.
    """
    out = np.zeros((samples, rounds + 1))
    out[:, 0] = global_correlation(pd)
    for i, steps in _run_sequences(pd, rounds, samples, seed):
        for k, (_, _, c) in enumerate(steps, 1):
            out[i, k] = c
    return out
