import math

import numpy as np
import pytest

from seqboost.boost import (
    BoostConfig,
    BoostTrace,
    IterationRecord,
    LogRatioOracle,
    MaxItersExceededError,
    NGramIndicatorOracle,
    ReweightedModel,
    TokenIndicatorOracle,
    iteration_bound,
    make_oracle,
    reweight_stepwise,
    reweight_whole,
    run_boost,
)
from seqboost.checks import make_vocab, random_corpus, random_table
from seqboost.corpus import Vocabulary
from seqboost.distinguish import (
    Distinguisher,
    StepDistinguisher,
    generalized_advantage,
    token_indicator,
)
from seqboost.exact import JointTable, enumerate_joint, total_variation
from seqboost.models import TabularModel, UniformModel, log_loss, ngram_mle_fit


def ab_table(pa, pb):
    return JointTable(Vocabulary.build(["a", "b"]), 1, np.array([0.0, pa, pb]))


class TestWholeReweight:
    def test_zero_weight_is_identity(self):
        q = ab_table(0.6, 0.4)
        f = Distinguisher(lambda x: 1.0 if x.token_ids[0] == 2 else 0.0)
        np.testing.assert_allclose(reweight_whole(q, f, 0.0).probs, q.probs)

    def test_constant_distinguisher_is_identity(self):
        q = ab_table(0.6, 0.4)
        f = Distinguisher(lambda x: 0.5)
        np.testing.assert_allclose(reweight_whole(q, f, 1.3).probs, q.probs, atol=1e-12)

    def test_hand_computed_update(self):
        # Downweighting b by e^{-ln 3} turns (1/2, 1/2) into (3/4, 1/4).
        q = ab_table(0.5, 0.5)
        f = Distinguisher(lambda x: 1.0 if x.token_ids[0] == 2 else 0.0)
        np.testing.assert_allclose(
            reweight_whole(q, f, math.log(3)).probs, [0.0, 0.75, 0.25], atol=1e-12
        )

    def test_negative_weight_rejected(self):
        q = ab_table(0.5, 0.5)
        with pytest.raises(ValueError):
            reweight_whole(q, Distinguisher(lambda x: 0.0), -0.1)

    def test_loss_drop_meets_quadratic_bound(self, aaab_corpus):
        # Reweighting uniform by a distinguisher with training advantage a
        # must cut the empirical loss by at least a^2 / 2.
        q = ab_table(0.5, 0.5)
        f = Distinguisher(lambda x: 1.0 if x.token_ids[0] == 2 else 0.0)
        a = 0.25
        q2 = reweight_whole(q, f, a)
        model = TabularModel(q.vocab, 1, q2.probs)
        new_loss = log_loss(model, aaab_corpus).log_loss
        assert new_loss <= math.log(2) - a**2 / 2 + 1e-12


class TestStepwiseReweight:
    def test_zero_weight_is_identity(self, ab_vocab, half_half):
        g = token_indicator(ab_vocab, 2)
        model = reweight_stepwise(half_half(), g, 0.0)
        np.testing.assert_allclose(model.next_token_dist(()), [0.0, 0.5, 0.5])

    def test_logistic_form_of_update(self, ab_vocab, half_half):
        b = 0.7
        g = token_indicator(ab_vocab, 2)
        model = reweight_stepwise(half_half(), g, b)
        expected_b = math.exp(-b) / (1 + math.exp(-b))
        np.testing.assert_allclose(
            model.next_token_dist(()), [0.0, 1 - expected_b, expected_b], atol=1e-12
        )

    def test_negative_weight_rejected(self, ab_vocab, half_half):
        with pytest.raises(ValueError, match="flip"):
            reweight_stepwise(half_half(), token_indicator(ab_vocab, 2), -0.5)

    def test_conditionals_stay_normalized(self):
        rng = np.random.default_rng(21)
        vocab = make_vocab(4)
        base = TabularModel(vocab, 3, random_table(rng, vocab, 3).probs)
        g = token_indicator(vocab, 1)
        model = reweight_stepwise(base, g, 0.8)
        corpus = random_corpus(rng, vocab, 3, 6)
        for seq in corpus.sequences:
            for j in range(3):
                dist = model.next_token_dist(seq.prefix(j))
                assert dist.min() >= 0.0
                assert dist.sum() == pytest.approx(1.0, abs=1e-9)

    def test_zero_probability_tokens_stay_zero(self, ab_vocab):
        base = UniformModel(ab_vocab, 2)
        model = reweight_stepwise(base, token_indicator(ab_vocab, 2), 1.0)
        assert model.next_token_dist(())[0] == 0.0
        np.testing.assert_allclose(model.next_token_dist((1, 0)), [1.0, 0.0, 0.0])

    def test_nested_factors_flatten(self, ab_vocab, half_half):
        g1 = token_indicator(ab_vocab, 1)
        g2 = token_indicator(ab_vocab, 2)
        model = reweight_stepwise(reweight_stepwise(half_half(), g1, 0.3), g2, 0.4)
        assert isinstance(model.base, type(half_half()))
        assert [b for b, _ in model.factors] == [0.3, 0.4]

    def test_factor_order_commutes(self, ab_vocab, half_half):
        g1 = token_indicator(ab_vocab, 1)
        g2 = token_indicator(ab_vocab, 2)
        m12 = ReweightedModel(half_half(), [(0.3, g1), (0.4, g2)])
        m21 = ReweightedModel(half_half(), [(0.4, g2), (0.3, g1)])
        np.testing.assert_allclose(m12.next_token_dist(()), m21.next_token_dist(()), atol=1e-12)

    def test_joint_of_reweighted_model_normalizes(self):
        rng = np.random.default_rng(22)
        vocab = make_vocab(3)
        base = TabularModel(vocab, 2, random_table(rng, vocab, 2).probs)
        model = reweight_stepwise(base, token_indicator(vocab, 2), 0.6)
        table = enumerate_joint(model)
        assert table.probs.sum() == pytest.approx(1.0, abs=1e-9)

    def test_memoization_returns_consistent_results(self, ab_vocab, half_half):
        g = token_indicator(ab_vocab, 2)
        cached = reweight_stepwise(half_half(), g, 0.5, memoize=True)
        fresh = reweight_stepwise(half_half(), g, 0.5, memoize=False)
        first = cached.next_token_dist(())
        np.testing.assert_allclose(cached.next_token_dist(()), first)
        np.testing.assert_allclose(fresh.next_token_dist(()), first, atol=1e-12)


class TestIterationBound:
    def test_hand_value(self):
        assert iteration_bound(math.log(2), 1, 0.1) == 139

    def test_zero_initial_loss(self):
        assert iteration_bound(0.0, 3, 0.1) == 0

    def test_halving_epsilon_quadruples_bound(self):
        big = iteration_bound(1.0, 2, 0.05)
        small = iteration_bound(1.0, 2, 0.1)
        assert big == pytest.approx(4 * small, abs=1)

    def test_validation(self):
        with pytest.raises(ValueError):
            iteration_bound(1.0, 1, 0.0)
        with pytest.raises(ValueError):
            iteration_bound(-1.0, 1, 0.1)


class ConstantOracle:
    def propose(self, q, corpus):
        return StepDistinguisher(lambda prefix: 0.5, label="constant-half")


class TestRunBoost:
    def test_constant_oracle_terminates_immediately(self, aaab_corpus, half_half):
        model, trace = run_boost(half_half(), aaab_corpus, ConstantOracle(), BoostConfig(0.01))
        assert trace.termination == "indistinguishable"
        assert len(trace.records) == 1
        assert trace.records[0].b == pytest.approx(0.0, abs=1e-12)
        assert trace.records[0].log_loss == pytest.approx(math.log(2))
        np.testing.assert_allclose(model.next_token_dist(()), [0.0, 0.5, 0.5])

    def test_unigram_boosting_converges_to_empirical(self, aaab_corpus, half_half):
        model, trace = run_boost(
            half_half(), aaab_corpus, TokenIndicatorOracle(), BoostConfig(0.005)
        )
        assert trace.termination == "indistinguishable"
        table = enumerate_joint(model)
        target = ab_table(0.75, 0.25)
        assert total_variation(table, target) <= 0.02
        mle_loss = 0.75 * math.log(4 / 3) + 0.25 * math.log(4)
        assert trace.records[-1].log_loss <= mle_loss + 0.01

    def test_each_iteration_meets_quadratic_drop(self, aaab_corpus, half_half):
        _, trace = run_boost(half_half(), aaab_corpus, TokenIndicatorOracle(), BoostConfig(0.01))
        n_pos = aaab_corpus.length
        prev = trace.initial_loss
        for rec in trace.records[:-1]:
            assert rec.log_loss <= prev - n_pos * rec.b**2 / 2 + 1e-9
            prev = rec.log_loss

    def test_loss_is_monotone_nonincreasing(self):
        rng = np.random.default_rng(23)
        vocab = make_vocab(3)
        corpus = random_corpus(rng, vocab, 2, 12)
        _, trace = run_boost(
            UniformModel(vocab, 2), corpus, NGramIndicatorOracle(2), BoostConfig(0.02)
        )
        losses = [trace.initial_loss] + [r.log_loss for r in trace.records]
        assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))

    def test_final_advantage_below_threshold(self, aaab_corpus, half_half):
        eps = 0.01
        model, trace = run_boost(
            half_half(), aaab_corpus, TokenIndicatorOracle(), BoostConfig(eps)
        )
        oracle = TokenIndicatorOracle()
        g = oracle.propose(model, aaab_corpus)
        assert generalized_advantage(g, aaab_corpus, model).value < eps

    def test_max_iters_raises_with_trace(self, aaab_corpus, half_half):
        with pytest.raises(MaxItersExceededError) as exc:
            run_boost(
                half_half(),
                aaab_corpus,
                TokenIndicatorOracle(),
                BoostConfig(1e-6, max_iters=1),
            )
        assert exc.value.trace.termination == "max-iters"
        assert len(exc.value.trace.records) == 1

    def test_log_ratio_oracle_reduces_loss(self, aaab_corpus, half_half):
        reference = ngram_mle_fit(aaab_corpus, order=1, lam=0.1)
        oracle = LogRatioOracle(reference)
        model, trace = run_boost(half_half(), aaab_corpus, oracle, BoostConfig(0.01))
        assert trace.records[-1].log_loss <= trace.initial_loss


class TestTraceCsv:
    def test_header_and_zeroed_timings(self):
        trace = BoostTrace(
            initial_loss=1.0,
            records=[IterationRecord(0, 0.25, 0.9, 0.5, 0.25)],
            termination="indistinguishable",
        )
        text = trace.to_csv_text()
        lines = text.splitlines()
        assert lines[0] == "iter,b_t,log_loss,oracle_ms,eval_ms"
        assert lines[1] == "0,0.25,0.90000000000000002,0,0"

    def test_timings_opt_in(self):
        trace = BoostTrace(initial_loss=1.0, records=[IterationRecord(0, 0.25, 0.9, 0.5, 0.25)])
        line = trace.to_csv_text(include_timings=True).splitlines()[1]
        assert line.split(",")[3] == "500"


class TestOracleFactory:
    def test_kinds(self, half_half):
        assert isinstance(make_oracle("token-indicator"), TokenIndicatorOracle)
        assert isinstance(make_oracle("ngram-indicator", order=3), NGramIndicatorOracle)
        assert isinstance(make_oracle("log-ratio", reference=half_half()), LogRatioOracle)

    def test_log_ratio_requires_reference(self):
        with pytest.raises(ValueError, match="reference"):
            make_oracle("log-ratio")

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown"):
            make_oracle("quantum")


class TestBoostConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            BoostConfig(0.0)
        with pytest.raises(ValueError):
            BoostConfig(0.1, max_iters=0)
