"""Randomized property suites: every inequality the library promises,
checked on seeded random instances with explicit slack margins.

Each suite returns the minimum observed slack (how far the worst instance
was from violating its inequality); a negative slack means a violation.
"""

from __future__ import annotations

import math
import string
from dataclasses import dataclass

import numpy as np

from .boost import (
    BoostConfig,
    ReweightedModel,
    TokenIndicatorOracle,
    iteration_bound,
    run_boost,
)
from .corpus import Corpus, Sequence, Vocabulary
from .distinguish import (
    Distinguisher,
    StepDistinguisher,
    advantage_exact,
    bayes_optimal_distinguisher,
    generalized_advantage,
    log_ratio_distinguisher,
    minimal_ratio_bound,
    training_advantage,
)
from .exact import (
    JointTable,
    all_indicator_distinguishers,
    all_sequences,
    distinguishability_exhaustive,
    finite_diff_gradient,
    kl_divergence,
    sequence_index,
    total_variation,
)
from .models import LogLinearModel, TabularModel, UniformModel, kl_gradient, log_loss


@dataclass(frozen=True)
class PropertyResult:
    name: str
    instances: int
    min_slack: float
    passed: bool
    detail: str = ""


def make_vocab(n: int) -> Vocabulary:
    """An n-token vocabulary: the pad plus n-1 letters."""
    return Vocabulary.build(string.ascii_lowercase[: n - 1])


def random_table(rng: np.random.Generator, vocab: Vocabulary, length: int) -> JointTable:
    probs = rng.random(vocab.n**length) + 0.05
    return JointTable(vocab, length, probs / probs.sum())


def random_corpus(
    rng: np.random.Generator, vocab: Vocabulary, length: int, m: int
) -> Corpus:
    """m random sequences of content tokens, with genuinely padded tails."""
    seqs = []
    for _ in range(m):
        true_length = int(rng.integers(1, length + 1))
        ids = tuple(int(t) for t in rng.integers(1, vocab.n, size=true_length))
        seqs.append(Sequence.from_ids(ids, length))
    return Corpus(vocab, length, tuple(seqs))


def _table_loss(table: JointTable, corpus: Corpus) -> float:
    total = 0.0
    for seq in corpus.sequences:
        total -= math.log(table.prob_of(seq))
    return total / corpus.m


def random_step_distinguisher(
    rng: np.random.Generator, vocab: Vocabulary, length: int
) -> StepDistinguisher:
    values: dict[tuple[int, ...], float] = {}
    for j in range(1, length + 1):
        for seq in all_sequences(vocab, j):
            values[seq.token_ids] = float(rng.random())
    return StepDistinguisher(lambda prefix: values[prefix], label="random-step")


def whole_reweight_suite(count: int = 200, seed: int = 1) -> PropertyResult:
    """Reweighting by a distinguisher with advantage a drops the loss by >= a^2/2."""
    from .boost import reweight_whole

    rng = np.random.default_rng(seed)
    min_slack = math.inf
    for _ in range(count):
        vocab = make_vocab(int(rng.integers(2, 9)))
        q = random_table(rng, vocab, 1)
        corpus = random_corpus(rng, vocab, 1, int(rng.integers(3, 26)))
        fvals = rng.random(vocab.n)
        f = Distinguisher(lambda x, fv=fvals: float(fv[x.token_ids[0]]))
        a = training_advantage(f, corpus, TabularModel(vocab, 1, q.probs)).value
        if a < 0:
            fvals = 1.0 - fvals
            a = -a
        f = Distinguisher(lambda x, fv=fvals: float(fv[x.token_ids[0]]))
        q2 = reweight_whole(q, f, a)
        slack = _table_loss(q, corpus) - a * a / 2.0 - _table_loss(q2, corpus)
        min_slack = min(min_slack, slack)
    return PropertyResult("whole-sequence-reweight-bound", count, min_slack, min_slack >= -1e-9)


def stepwise_reweight_suite(
    count: int = 200, seed: int = 2, partition_scale: float = 1.0
) -> PropertyResult:
    """Step-wise reweighting by advantage b drops the loss by >= N b^2 / 2."""
    rng = np.random.default_rng(seed)
    min_slack = math.inf
    for _ in range(count):
        vocab = make_vocab(int(rng.integers(2, 6)))
        length = int(rng.integers(1, 4))
        q = TabularModel(vocab, length, random_table(rng, vocab, length).probs)
        corpus = random_corpus(rng, vocab, length, int(rng.integers(3, 16)))
        g = random_step_distinguisher(rng, vocab, length)
        b = generalized_advantage(g, corpus, q).value
        if b < 0:
            g = g.flipped()
            b = -b
        q2 = ReweightedModel(q, [(b, g)], partition_scale=partition_scale)
        slack = (
            log_loss(q, corpus).log_loss
            - length * b * b / 2.0
            - log_loss(q2, corpus).log_loss
        )
        min_slack = min(min_slack, slack)
    return PropertyResult("stepwise-reweight-bound", count, min_slack, min_slack >= -1e-9)


def log_ratio_suite(count: int = 200, seed: int = 3) -> PropertyResult:
    """The log-ratio distinguisher of two shared-support models stays in [0,1]
    and its advantage covers the loss gap divided by 2 log C."""
    rng = np.random.default_rng(seed)
    min_slack = math.inf
    for _ in range(count):
        vocab = make_vocab(int(rng.integers(2, 7)))
        length = int(rng.integers(1, 3))
        qt = random_table(rng, vocab, length)
        q2t = random_table(rng, vocab, length)
        corpus = random_corpus(rng, vocab, length, int(rng.integers(3, 16)))
        c = minimal_ratio_bound(qt, q2t)
        qm = TabularModel(vocab, length, qt.probs)
        q2m = TabularModel(vocab, length, q2t.probs)
        f = log_ratio_distinguisher(qm, q2m, c)
        for x in qt.domain:
            v = f(x)  # raises on a ratio violation
            assert 0.0 <= v <= 1.0
        alpha = training_advantage(f, corpus, qm).value
        gap = log_loss(qm, corpus).log_loss - log_loss(q2m, corpus).log_loss
        slack = alpha - gap / (2.0 * math.log(c))
        min_slack = min(min_slack, slack)
    return PropertyResult("log-ratio-advantage-bound", count, min_slack, min_slack >= -1e-9)


def kl_gradient_fd_suite(count: int = 50, seed: int = 4) -> PropertyResult:
    """Analytic KL gradient of log-linear models vs central finite differences."""
    rng = np.random.default_rng(seed)
    h = 1e-5
    tol = 1e-5
    min_slack = math.inf
    for _ in range(count):
        while True:
            n = int(rng.integers(2, 7))
            length = int(rng.integers(1, 4))
            if n**length <= 256:
                break
        vocab = make_vocab(n)
        d = int(rng.integers(1, 5))
        domain = all_sequences(vocab, length)
        fmat = rng.random((len(domain), d))
        features = lambda x, fm=fmat, v=vocab: fm[sequence_index(v, x.token_ids)]
        theta = rng.uniform(-2.0, 2.0, size=d)
        model = LogLinearModel(domain, features, theta, vocab=vocab, length=length)
        p = random_table(rng, vocab, length)
        analytic = kl_gradient(model, p)

        def field(th, base=model, pt=p):
            q = JointTable(base.vocab, base.length, base.with_theta(th).all_probs())
            return kl_divergence(pt, q)

        fd = finite_diff_gradient(field, theta, h)
        rel = np.abs(fd - analytic) / np.maximum(np.abs(analytic), 1e-6)
        min_slack = min(min_slack, tol - float(rel.max()))
    return PropertyResult("kl-gradient-finite-difference", count, min_slack, min_slack >= 0.0)


def pinsker_suite(count: int = 500, seed: int = 5) -> PropertyResult:
    """TVD <= sqrt(KL/2) on random table pairs."""
    rng = np.random.default_rng(seed)
    min_slack = math.inf
    for _ in range(count):
        vocab = make_vocab(int(rng.integers(2, 8)))
        length = int(rng.integers(1, 3))
        p = random_table(rng, vocab, length)
        q = random_table(rng, vocab, length)
        slack = math.sqrt(kl_divergence(p, q) / 2.0) + 1e-12 - total_variation(p, q)
        min_slack = min(min_slack, slack)
    return PropertyResult("pinsker", count, min_slack, min_slack >= 0.0)


def advantage_tvd_suite(count: int = 500, seed: int = 6) -> PropertyResult:
    """|advantage of any [0,1]-valued distinguisher| <= total variation."""
    rng = np.random.default_rng(seed)
    min_slack = math.inf
    for _ in range(count):
        vocab = make_vocab(int(rng.integers(2, 8)))
        length = int(rng.integers(1, 3))
        p = random_table(rng, vocab, length)
        q = random_table(rng, vocab, length)
        fvals = rng.random(vocab.n**length)
        f = Distinguisher(lambda x, fv=fvals, v=vocab: float(fv[sequence_index(v, x.token_ids)]))
        slack = total_variation(p, q) + 1e-12 - abs(advantage_exact(f, p, q))
        min_slack = min(min_slack, slack)
    return PropertyResult("advantage-below-tvd", count, min_slack, min_slack >= 0.0)


def bayes_tvd_suite(count: int = 100, seed: int = 7) -> PropertyResult:
    """The q>p indicator achieves advantage exactly equal to total variation."""
    rng = np.random.default_rng(seed)
    min_slack = math.inf
    for _ in range(count):
        vocab = make_vocab(int(rng.integers(2, 8)))
        length = int(rng.integers(1, 3))
        p = random_table(rng, vocab, length)
        q = random_table(rng, vocab, length)
        f = bayes_optimal_distinguisher(p, q)
        gap = abs(advantage_exact(f, p, q) - total_variation(p, q))
        min_slack = min(min_slack, 1e-12 - gap)
    return PropertyResult("bayes-optimal-equals-tvd", count, min_slack, min_slack >= 0.0)


def exhaustive_indicator_suite(count: int = 20, seed: int = 8) -> PropertyResult:
    """Max advantage over every indicator distinguisher equals total variation."""
    rng = np.random.default_rng(seed)
    min_slack = math.inf
    for _ in range(count):
        vocab, length = [(make_vocab(3), 1), (make_vocab(2), 3), (make_vocab(3), 2)][
            int(rng.integers(0, 3))
        ]
        p = random_table(rng, vocab, length)
        q = random_table(rng, vocab, length)
        family = all_indicator_distinguishers(vocab, length)
        value, _ = distinguishability_exhaustive(q, p, family)
        gap = abs(value - total_variation(p, q))
        min_slack = min(min_slack, 1e-12 - gap)
    return PropertyResult("exhaustive-indicators-equal-tvd", count, min_slack, min_slack >= 0.0)


def boost_termination_suite(
    count: int = 20, seed: int = 9, epsilon: float = 0.05
) -> PropertyResult:
    """Boosting terminates within the iteration bound and really is
    epsilon-indistinguishable by the oracle afterwards."""
    rng = np.random.default_rng(seed)
    oracle = TokenIndicatorOracle()
    min_slack = math.inf
    ok = True
    for _ in range(count):
        vocab = make_vocab(int(rng.integers(2, 6)))
        length = int(rng.integers(1, 4))
        corpus = random_corpus(rng, vocab, length, int(rng.integers(4, 13)))
        q0 = UniformModel(vocab, length)
        model, trace = run_boost(q0, corpus, oracle, BoostConfig(epsilon=epsilon))
        bound = iteration_bound(trace.initial_loss, length, epsilon)
        updates = sum(1 for r in trace.records if r.b >= epsilon)
        final_b = generalized_advantage(oracle.propose(model, corpus), corpus, model).value
        ok = ok and trace.termination == "indistinguishable" and final_b < epsilon
        min_slack = min(min_slack, float(bound - updates))
    return PropertyResult("boost-termination", count, min_slack, ok and min_slack >= 0.0)


def default_suites(stepwise_partition_scale: float = 1.0) -> list[PropertyResult]:
    return [
        whole_reweight_suite(),
        stepwise_reweight_suite(partition_scale=stepwise_partition_scale),
        log_ratio_suite(),
        kl_gradient_fd_suite(),
        pinsker_suite(),
        advantage_tvd_suite(),
        bayes_tvd_suite(),
        exhaustive_indicator_suite(),
        boost_termination_suite(),
    ]
