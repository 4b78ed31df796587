"""Brute-force oracles over enumerable sequence domains.

Everything here refuses to run past a configurable enumeration budget; these
are desk-scale checks, not estimators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .corpus import Sequence, Vocabulary
from .models import SequentialModel, sequence_log_prob

DEFAULT_BUDGET = 2_000_000


class BudgetExceededError(ValueError):
    """Domain size exceeds the configured enumeration budget."""


def all_sequences(vocab: Vocabulary, length: int) -> list[Sequence]:
    """All n^N raw sequences in lexicographic token-id order."""
    n = vocab.n
    out = []
    for idx in range(n**length):
        ids = []
        rem = idx
        for _ in range(length):
            rem, t = divmod(rem, n)
            ids.append(t)
        out.append(Sequence.from_raw(tuple(reversed(ids))))
    return out


def sequence_index(vocab: Vocabulary, ids: tuple[int, ...]) -> int:
    idx = 0
    for t in ids:
        idx = idx * vocab.n + t
    return idx


@dataclass
class JointTable:
    """Explicit probabilities for every sequence, in lexicographic order."""

    vocab: Vocabulary
    length: int
    probs: np.ndarray

    def __post_init__(self) -> None:
        self.probs = np.asarray(self.probs, dtype=float)
        expected = self.vocab.n**self.length
        if self.probs.shape != (expected,):
            raise ValueError(f"need {expected} probabilities, got {self.probs.shape}")
        if np.any(self.probs < -1e-12):
            raise ValueError("negative probability")
        if abs(self.probs.sum() - 1.0) > 1e-9:
            raise ValueError("probabilities do not sum to 1")
        self._domain: list[Sequence] | None = None

    @property
    def domain(self) -> list[Sequence]:
        if self._domain is None:
            self._domain = all_sequences(self.vocab, self.length)
        return self._domain

    def prob_of(self, seq: Sequence) -> float:
        return float(self.probs[sequence_index(self.vocab, seq.token_ids)])

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("sequence,prob\n")
            for seq, p in zip(self.domain, self.probs):
                label = " ".join(self.vocab.token_of(t) for t in seq.token_ids)
                fh.write(f"{label},{p:.17g}\n")


def _check_shared(p: JointTable, q: JointTable) -> None:
    if p.vocab.tokens != q.vocab.tokens or p.length != q.length:
        raise ValueError("mismatched domains")


def enumerate_joint(
    model: SequentialModel, budget: int = DEFAULT_BUDGET
) -> JointTable:
    """Expand a sequential model into its full joint table by the chain rule."""
    n, N = model.vocab.n, model.length
    if n**N > budget:
        raise BudgetExceededError(f"enumeration budget exceeded: {n}^{N} > {budget}")
    level = np.zeros(1)  # log-probabilities of all prefixes of the current length
    prefixes: list[tuple[int, ...]] = [()]
    for _ in range(N):
        nxt = np.empty(len(prefixes) * n)
        nxt_prefixes: list[tuple[int, ...]] = []
        for i, prefix in enumerate(prefixes):
            dist = model.next_token_dist(prefix)
            with np.errstate(divide="ignore"):
                nxt[i * n : (i + 1) * n] = level[i] + np.log(dist)
            nxt_prefixes.extend(prefix + (t,) for t in range(n))
        level, prefixes = nxt, nxt_prefixes
    return JointTable(model.vocab, N, np.exp(level))


def kl_divergence(p: JointTable, q: JointTable) -> float:
    """KL(p || q) in nats; math.inf when q misses mass that p has."""
    _check_shared(p, q)
    support = p.probs > 0
    if np.any(q.probs[support] <= 0):
        return math.inf
    pp, qq = p.probs[support], q.probs[support]
    return float(np.sum(pp * (np.log(pp) - np.log(qq))))


def cross_entropy(p: JointTable, q: JointTable) -> float:
    """-sum_x p(x) log q(x) = entropy(p) + KL(p || q)."""
    _check_shared(p, q)
    support = p.probs > 0
    if np.any(q.probs[support] <= 0):
        return math.inf
    return float(-np.sum(p.probs[support] * np.log(q.probs[support])))


def total_variation(p: JointTable, q: JointTable) -> float:
    _check_shared(p, q)
    return float(0.5 * np.abs(p.probs - q.probs).sum())


def distinguishability_exhaustive(q: JointTable, p: JointTable, family):
    """Max advantage over a finite distinguisher family, with the argmax.

    Returns (value, distinguisher); value is d(q) restricted to the family.
    """
    _check_shared(p, q)
    family = list(family)
    if not family:
        raise ValueError("empty distinguisher family")
    from .distinguish import advantage_exact

    best_val, best_f = -math.inf, None
    for f in family:
        a = advantage_exact(f, p, q)
        if a > best_val:
            best_val, best_f = a, f
    return best_val, best_f


def all_indicator_distinguishers(vocab: Vocabulary, length: int, budget: int = 12):
    """Every 0/1-valued distinguisher over the domain (2^(n^N) of them)."""
    from .distinguish import Distinguisher

    size = vocab.n**length
    if size > budget:
        raise BudgetExceededError(f"indicator family budget exceeded: {size} > {budget}")
    out = []
    for mask in range(2**size):
        bits = tuple((mask >> i) & 1 for i in range(size))
        out.append(
            Distinguisher(
                lambda x, bits=bits, vocab=vocab: float(bits[sequence_index(vocab, x.token_ids)]),
                label=f"indicator-{mask:0{size}b}",
            )
        )
    return out


def finite_diff_gradient(
    scalar_field: Callable[[np.ndarray], float], theta: np.ndarray, h: float
) -> np.ndarray:
    """Central differences (F(theta + h e_i) - F(theta - h e_i)) / 2h."""
    if h <= 0:
        raise ValueError("h must be positive")
    theta = np.asarray(theta, dtype=float)
    grad = np.empty_like(theta)
    for i in range(theta.size):
        up = theta.copy()
        dn = theta.copy()
        up[i] += h
        dn[i] -= h
        grad[i] = (scalar_field(up) - scalar_field(dn)) / (2.0 * h)
    return grad
