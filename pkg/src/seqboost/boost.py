"""Multiplicative reweighting and the boosting loop against a distinguisher oracle.

A reweighting step multiplies each conditional by exp(-b g(prefix, token))
and renormalizes per prefix; repeating it against whatever the oracle finds
drives the model until the oracle can no longer distinguish it from the
sample by more than the threshold.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .corpus import Corpus, Vocabulary
from .distinguish import (
    StepDistinguisher,
    generalized_advantage,
    ngram_indicator,
    step_log_ratio,
    token_indicator,
)
from .exact import JointTable
from .models import LossReport, SequentialModel, log_loss


class ReweightedModel(SequentialModel):
    """A base model with an ordered list of (weight, step distinguisher) factors.

    Conditionals are the base conditionals times exp(-sum_t b_t g_t), with a
    per-prefix partition.  Computed in log space; an empty factor list leaves
    the base untouched.  ``partition_scale`` is a test hook that deliberately
    mis-scales the partition (1.0 in all real use).
    """

    def __init__(
        self,
        base: SequentialModel,
        factors: list[tuple[float, StepDistinguisher]] | None = None,
        memoize: bool = True,
        partition_scale: float = 1.0,
    ):
        if isinstance(base, ReweightedModel):
            factors = list(base.factors) + list(factors or [])
            base = base.base
        self.base = base
        self.factors = list(factors or [])
        self.vocab = base.vocab
        self.length = base.length
        self.memoize = memoize
        self.partition_scale = partition_scale
        self._cache: dict[tuple[int, ...], np.ndarray] = {}

    def next_token_dist(self, prefix: tuple[int, ...]) -> np.ndarray:
        if self.memoize and prefix in self._cache:
            return self._cache[prefix]
        base_dist = self.base.next_token_dist(prefix)
        if not self.factors:
            return base_dist
        n = self.vocab.n
        with np.errstate(divide="ignore"):
            logs = np.log(base_dist.astype(float))
        for w in range(n):
            if base_dist[w] <= 0.0:
                continue
            logs[w] -= sum(b * g(prefix + (w,)) for b, g in self.factors)
        finite = logs > -math.inf
        shift = logs[finite].max()
        weights = np.zeros(n)
        weights[finite] = np.exp(logs[finite] - shift)
        dist = weights / (weights.sum() * self.partition_scale)
        if self.memoize:
            self._cache[prefix] = dist
        return dist


def reweight_whole(q: JointTable, f, a: float) -> JointTable:
    """Whole-sequence update q'(x) = q(x) exp(-a f(x)) / Z over an explicit table."""
    if a < 0:
        raise ValueError("weight must be nonnegative")
    factors = np.array([math.exp(-a * f(x)) for x in q.domain])
    unnorm = q.probs * factors
    return JointTable(q.vocab, q.length, unnorm / unnorm.sum())


def reweight_stepwise(
    q: SequentialModel, g: StepDistinguisher, b: float, memoize: bool = True
) -> ReweightedModel:
    """Append one (b, g) factor; conditionals renormalize per prefix."""
    if b < 0:
        raise ValueError("weight must be nonnegative; flip the distinguisher instead")
    return ReweightedModel(q, [(b, g)], memoize=memoize)


@dataclass(frozen=True)
class BoostConfig:
    epsilon: float
    max_iters: int | None = None  # default: 10 x the iteration bound
    memoize: bool = True

    def __post_init__(self) -> None:
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.max_iters is not None and self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass(frozen=True)
class IterationRecord:
    t: int
    b: float
    log_loss: float
    oracle_seconds: float
    eval_seconds: float


@dataclass
class BoostTrace:
    initial_loss: float
    records: list[IterationRecord] = field(default_factory=list)
    termination: str = ""

    def to_csv_text(self, include_timings: bool = False) -> str:
        # Timings are zeroed by default so traces are byte-reproducible.
        lines = ["iter,b_t,log_loss,oracle_ms,eval_ms"]
        for r in self.records:
            oracle_ms = r.oracle_seconds * 1e3 if include_timings else 0.0
            eval_ms = r.eval_seconds * 1e3 if include_timings else 0.0
            lines.append(f"{r.t},{r.b:.17g},{r.log_loss:.17g},{oracle_ms:.17g},{eval_ms:.17g}")
        return "\n".join(lines) + "\n"


class MaxItersExceededError(RuntimeError):
    def __init__(self, trace: BoostTrace):
        super().__init__(f"boosting did not reach the threshold in {len(trace.records)} iterations")
        self.trace = trace


class Oracle(Protocol):
    def propose(self, q: SequentialModel, corpus: Corpus) -> StepDistinguisher: ...


def iteration_bound(initial_loss: float, length: int, epsilon: float) -> int:
    """ceil(2 L0 / (N eps^2)): max iterations before the loss would go negative."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if initial_loss < 0 or length < 1:
        raise ValueError("need initial_loss >= 0 and length >= 1")
    return math.ceil(2.0 * initial_loss / (length * epsilon**2))


def run_boost(
    q0: SequentialModel, corpus: Corpus, oracle: Oracle, config: BoostConfig
) -> tuple[ReweightedModel, BoostTrace]:
    """Boost q0 until the oracle's best distinguisher has advantage below epsilon.

    Each round asks the oracle for a distinguisher, measures its advantage
    b_t, stops if b_t < epsilon, and otherwise folds exp(-b_t g_t) into the
    model.  The returned model is epsilon-indistinguishable by this oracle.
    """
    loss0 = log_loss(q0, corpus).log_loss  # raises if any sequence is impossible
    trace = BoostTrace(initial_loss=loss0)
    cap = config.max_iters
    if cap is None:
        cap = max(1, 10 * iteration_bound(loss0, corpus.length, config.epsilon))
    model = ReweightedModel(q0, [], memoize=config.memoize)
    current_loss = loss0
    for t in range(cap):
        t0 = time.perf_counter()
        g = oracle.propose(model, corpus)
        t1 = time.perf_counter()
        b = generalized_advantage(g, corpus, model).value
        if b < config.epsilon:
            t2 = time.perf_counter()
            trace.records.append(IterationRecord(t, b, current_loss, t1 - t0, t2 - t1))
            trace.termination = "indistinguishable"
            return model, trace
        model = ReweightedModel(model, [(b, g)], memoize=config.memoize)
        current_loss = log_loss(model, corpus).log_loss
        t2 = time.perf_counter()
        trace.records.append(IterationRecord(t, b, current_loss, t1 - t0, t2 - t1))
    trace.termination = "max-iters"
    raise MaxItersExceededError(trace)


# ---------------------------------------------------------------------------
# Built-in oracles.


class TokenIndicatorOracle:
    """Search last-token indicators (and their flips) for the best advantage."""

    def propose(self, q: SequentialModel, corpus: Corpus) -> StepDistinguisher:
        best_b, best_g = -math.inf, None
        for tok in range(corpus.vocab.n):
            for flip in (False, True):
                g = token_indicator(corpus.vocab, tok, flip)
                b = generalized_advantage(g, corpus, q).value
                if b > best_b:
                    best_b, best_g = b, g
        assert best_g is not None
        return best_g


class NGramIndicatorOracle:
    """Search order-k context-token indicators over contexts seen in the corpus."""

    def __init__(self, order: int):
        if order < 1:
            raise ValueError("order must be >= 1")
        self.order = order

    def _contexts(self, corpus: Corpus) -> list[tuple[int, ...]]:
        k = self.order - 1
        seen: dict[tuple[int, ...], None] = {}
        for seq in corpus.sequences:
            for j in range(k, corpus.length):
                seen.setdefault(seq.prefix(j)[-k:] if k else (), None)
        return list(seen)

    def propose(self, q: SequentialModel, corpus: Corpus) -> StepDistinguisher:
        best_b, best_g = -math.inf, None
        for ctx in self._contexts(corpus):
            for tok in range(corpus.vocab.n):
                for flip in (False, True):
                    g = ngram_indicator(corpus.vocab, ctx, tok, flip)
                    b = generalized_advantage(g, corpus, q).value
                    if b > best_b:
                        best_b, best_g = b, g
        assert best_g is not None
        return best_g


class LogRatioOracle:
    """Distinguish via conditional log-ratios against a lower-loss reference model."""

    def __init__(self, reference: SequentialModel, ratio_cap: float = 1e6):
        self.reference = reference
        self.ratio_cap = ratio_cap

    def _bound(self, q: SequentialModel, corpus: Corpus) -> float:
        worst = 1.0
        for seq in corpus.sequences:
            for j in range(corpus.length):
                ctx = seq.prefix(j)
                dq = q.next_token_dist(ctx)
                dr = self.reference.next_token_dist(ctx)
                both = (dq > 0) & (dr > 0)
                if np.any(both):
                    r = dq[both] / dr[both]
                    worst = max(worst, float(r.max()), float((1.0 / r).max()))
        return min(max(worst, 1.0 + 1e-12), self.ratio_cap)

    def propose(self, q: SequentialModel, corpus: Corpus) -> StepDistinguisher:
        c = self._bound(q, corpus)
        g = step_log_ratio(q, self.reference, c)
        if generalized_advantage(g, corpus, q).value < 0:
            g = step_log_ratio(q, self.reference, c, flip=True)
        return g


def make_oracle(kind: str, order: int = 2, reference: SequentialModel | None = None) -> Oracle:
    if kind == "token-indicator":
        return TokenIndicatorOracle()
    if kind == "ngram-indicator":
        return NGramIndicatorOracle(order)
    if kind == "log-ratio":
        if reference is None:
            raise ValueError("log-ratio oracle needs a reference model")
        return LogRatioOracle(reference)
    raise ValueError(f"unknown oracle kind {kind!r}")
