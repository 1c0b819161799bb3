#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "anssel/error.hpp"
#include "anssel/metrics.hpp"
#include "anssel/rng.hpp"
#include "oracles.hpp"

namespace anssel {
namespace {

Question question_with_labels(const std::string& id, const std::vector<bool>& labels) {
  Question q{id, "q " + id, {}};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    q.candidates.push_back({"a" + std::to_string(i), "answer", labels[i]});
  }
  return q;
}

// Scores that place candidate i at rank ranks[i] (1-based).
std::vector<double> scores_for_ranks(const std::vector<std::size_t>& ranks) {
  std::vector<double> s;
  for (auto r : ranks) s.push_back(1.0 / static_cast<double>(r));
  return s;
}

TEST(RankCandidatesTest, SortsDescendingWithStableTies) {
  const Question q = question_with_labels("q", {false, true, false});
  const std::vector<double> s = {0.1, 0.9, 0.5};
  const RankedList r = rank_candidates(q, s);
  ASSERT_EQ(r.entries.size(), 3u);
  EXPECT_EQ(r.entries[0].answer_id, "a1");
  EXPECT_EQ(r.entries[1].answer_id, "a2");
  EXPECT_EQ(r.entries[2].answer_id, "a0");

  const std::vector<double> flat = {0.3, 0.3, 0.3};
  const RankedList t = rank_candidates(q, flat);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(t.entries[i].original_index, i);

  const Question one = question_with_labels("o", {true});
  EXPECT_EQ(rank_candidates(one, std::vector<double>{0.2}).entries.size(), 1u);
  EXPECT_THROW(rank_candidates(q, std::vector<double>{0.1}), DataError);
}

TEST(ReciprocalRankTest, Definition) {
  const Question q = question_with_labels("q", {false, false, false, true, false});
  EXPECT_DOUBLE_EQ(reciprocal_rank(rank_candidates(q, scores_for_ranks({1, 2, 3, 4, 5}))), 0.25);
  EXPECT_DOUBLE_EQ(reciprocal_rank(rank_candidates(q, scores_for_ranks({2, 3, 4, 1, 5}))), 1.0);
  const Question none = question_with_labels("n", {false, false});
  EXPECT_DOUBLE_EQ(reciprocal_rank(rank_candidates(none, std::vector<double>{0.1, 0.2})), 0.0);
}

TEST(AveragePrecisionTest, Definition) {
  const Question perfect = question_with_labels("p", {true, true, false});
  EXPECT_DOUBLE_EQ(average_precision(rank_candidates(perfect, scores_for_ranks({1, 2, 3}))), 1.0);
  const Question q = question_with_labels("q", {true, false, true, false, false});
  EXPECT_NEAR(average_precision(rank_candidates(q, scores_for_ranks({1, 2, 3, 4, 5}))),
              0.5 * (1.0 + 2.0 / 3.0), 1e-9);
  const Question none = question_with_labels("n", {false, false, false});
  EXPECT_DOUBLE_EQ(average_precision(rank_candidates(none, scores_for_ranks({1, 2, 3}))), 0.0);
}

TEST(MetricPropertiesTest, RandomQuestions) {
  Rng rng(77);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 1 + rng.below(10);
    std::vector<bool> labels(n);
    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = rng.uniform() < 0.4;
      scores[i] = std::floor(rng.uniform() * 6.0) / 6.0;  // frequent ties
    }
    const Question q = question_with_labels("q", labels);
    const RankedList r = rank_candidates(q, scores);
    const double rr = reciprocal_rank(r);
    const double ap = average_precision(r);
    ASSERT_GE(rr, 0.0);
    ASSERT_LE(rr, 1.0);
    ASSERT_GE(ap, 0.0);
    ASSERT_LE(ap, 1.0);
    EXPECT_DOUBLE_EQ(rr, oracle::reciprocal_rank(labels, scores));
    EXPECT_NEAR(ap, oracle::average_precision(labels, scores), 1e-12);
    const auto npos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
    if (npos > 0) EXPECT_GE(rr, 1.0 / static_cast<double>(n));
    if (npos == 1) EXPECT_DOUBLE_EQ(ap, rr);

    // Strictly increasing transform keeps the ranking and the metrics.
    std::vector<double> warped(n);
    std::transform(scores.begin(), scores.end(), warped.begin(),
                   [](double s) { return std::exp(3.0 * s) - 7.0; });
    const RankedList w = rank_candidates(q, warped);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_EQ(w.entries[i].answer_id, r.entries[i].answer_id);
    }
    EXPECT_EQ(reciprocal_rank(w), rr);
    EXPECT_EQ(average_precision(w), ap);
  }
}

TEST(EvaluateTest, HandComputedMrr) {
  Dataset d;
  d.questions.push_back(question_with_labels("q1", {true, false, false, false}));
  d.questions.push_back(question_with_labels("q2", {false, true, false, false}));
  d.questions.push_back(question_with_labels("q3", {false, false, false, true}));
  const EvalReport r = evaluate(d, FilterMode::kRequirePositive, [](const Question& q) {
    std::vector<double> s(q.candidates.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = -static_cast<double>(i);
    return s;
  });
  EXPECT_NEAR(r.mrr, (1.0 + 0.5 + 0.25) / 3.0, 1e-9);
  EXPECT_NEAR(r.map, r.mrr, 1e-12);  // single positive per question
  EXPECT_EQ(r.num_questions_scored, 3u);
  EXPECT_EQ(r.num_questions_skipped, 0u);
}

TEST(EvaluateTest, PerfectRankingAndSkips) {
  Dataset d;
  d.questions.push_back(question_with_labels("q1", {true, false, true}));
  d.questions.push_back(question_with_labels("q2", {false, false}));
  auto label_scorer = [](const Question& q) {
    std::vector<double> s;
    for (const auto& c : q.candidates) s.push_back(c.label ? 1.0 : 0.0);
    return s;
  };
  const EvalReport clean = evaluate(d, FilterMode::kRequirePositive, label_scorer);
  EXPECT_EQ(clean.mrr, 1.0);
  EXPECT_EQ(clean.map, 1.0);
  EXPECT_EQ(clean.num_questions_skipped, 1u);
  const EvalReport raw = evaluate(d, FilterMode::kKeepAll, label_scorer);
  EXPECT_EQ(raw.num_questions_scored, 2u);
  EXPECT_DOUBLE_EQ(raw.mrr, 0.5);

  Dataset empty;
  empty.questions.push_back(question_with_labels("z", {false}));
  EXPECT_THROW(evaluate(empty, FilterMode::kRequirePositive, label_scorer), DataError);
}

TEST(EvaluateTest, JsonAndRunFile) {
  Dataset d;
  d.questions.push_back(question_with_labels("q1", {false, true}));
  const EvalReport r = evaluate(d, FilterMode::kRequireBoth, [](const Question&) {
    return std::vector<double>{0.25, 0.75};
  });
  const auto j = to_json(r);
  EXPECT_EQ(j.begin().key(), "mrr");
  EXPECT_EQ(j["filter_mode"], "require_both");
  EXPECT_EQ(j["per_question"][0]["question_id"], "q1");
  EXPECT_EQ(j["per_question"][0]["num_candidates"], 2);
  std::ostringstream run;
  write_trec_run(r, run, "tag");
  EXPECT_EQ(run.str(), "q1 Q0 a1 1 0.75 tag\nq1 Q0 a0 2 0.25 tag\n");
}

TEST(EvaluateTest, ModelBackedMatchesScorePair) {
  const std::vector<std::string> texts = {"who wrote hamlet", "shakespeare did", "paris"};
  const Vocab vocab = build_vocab(texts, 1);
  ModelConfig cfg;
  cfg.vocab_size = vocab.size();
  cfg.hidden_size = 16;
  cfg.num_heads = 2;
  cfg.ffn_size = 32;
  cfg.max_len = 16;
  cfg.seed = 3;
  const auto params = init_params<double>(cfg);
  Dataset d;
  d.questions.push_back(Question{"q", "who wrote hamlet",
                                 {{"a0", "paris", false}, {"a1", "shakespeare did", true}}});
  const EvalReport r = evaluate(params, vocab, d, FilterMode::kRequirePositive);
  ASSERT_EQ(r.rankings.size(), 1u);
  for (const auto& e : r.rankings[0].entries) {
    const double direct =
        score_pair(params, vocab, "who wrote hamlet", d.questions[0].candidates[e.original_index].text);
    EXPECT_EQ(e.score, direct);
  }
  const Vocab other = build_vocab(std::vector<std::string>{"x"}, 1);
  EXPECT_THROW(evaluate(params, other, d, FilterMode::kRequirePositive), DataError);
}

}  // namespace
}  // namespace anssel
