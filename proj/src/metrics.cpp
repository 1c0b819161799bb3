#include "anssel/metrics.hpp"

#include <algorithm>
#include <iomanip>
#include <numeric>
#include <ostream>

#include "anssel/error.hpp"

namespace anssel {

RankedList rank_candidates(const Question& question, std::span<const double> scores) {
  if (scores.size() != question.candidates.size()) {
    throw DataError("question " + question.question_id + ": " + std::to_string(scores.size()) +
                    " scores for " + std::to_string(question.candidates.size()) + " candidates");
  }
  RankedList ranked{question.question_id, {}};
  ranked.entries.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& c = question.candidates[i];
    ranked.entries.push_back(RankedEntry{c.answer_id, scores[i], c.label, i});
  }
  std::stable_sort(ranked.entries.begin(), ranked.entries.end(),
                   [](const RankedEntry& a, const RankedEntry& b) { return a.score > b.score; });
  return ranked;
}

double reciprocal_rank(const RankedList& ranked) {
  for (std::size_t i = 0; i < ranked.entries.size(); ++i) {
    if (ranked.entries[i].label) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

double average_precision(const RankedList& ranked) {
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ranked.entries.size(); ++i) {
    if (!ranked.entries[i].label) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  return hits == 0 ? 0.0 : sum / static_cast<double>(hits);
}

EvalReport evaluate(const Dataset& dataset, FilterMode mode, const CandidateScorer& scorer) {
  const Dataset kept = filter_evaluable(dataset, mode);
  if (kept.questions.empty()) {
    throw DataError("no questions left to evaluate after filter " +
                    std::string(to_string(mode)));
  }
  EvalReport report;
  report.filter_mode = mode;
  report.num_questions_skipped = dataset.questions.size() - kept.questions.size();
  for (const auto& q : kept.questions) {
    const std::vector<double> scores = scorer(q);
    RankedList ranked = rank_candidates(q, scores);
    report.per_question.push_back(QuestionResult{q.question_id, reciprocal_rank(ranked),
                                                 average_precision(ranked), q.candidates.size(),
                                                 q.num_positive()});
    report.rankings.push_back(std::move(ranked));
  }
  report.num_questions_scored = report.per_question.size();
  double rr = 0.0;
  double ap = 0.0;
  for (const auto& r : report.per_question) {
    rr += r.reciprocal_rank;
    ap += r.average_precision;
  }
  report.mrr = rr / static_cast<double>(report.num_questions_scored);
  report.map = ap / static_cast<double>(report.num_questions_scored);
  return report;
}

template <typename T>
EvalReport evaluate(const ModelParams<T>& params, const Vocab& vocab, const Dataset& dataset,
                    FilterMode mode, TruncationPolicy policy) {
  if (vocab.size() != params.config().vocab_size) {
    throw DataError("vocab has " + std::to_string(vocab.size()) + " tokens but the model expects " +
                    std::to_string(params.config().vocab_size));
  }
  return evaluate(dataset, mode, [&](const Question& q) {
    std::vector<EncodedPair> batch;
    batch.reserve(q.candidates.size());
    for (const auto& c : q.candidates) {
      batch.push_back(encode_pair(vocab, q.text, c.text, params.config().max_len, policy));
    }
    const std::vector<T> scores = score_batch(params, batch);
    return std::vector<double>(scores.begin(), scores.end());
  });
}

template EvalReport evaluate<float>(const ModelParams<float>&, const Vocab&, const Dataset&,
                                    FilterMode, TruncationPolicy);
template EvalReport evaluate<double>(const ModelParams<double>&, const Vocab&, const Dataset&,
                                     FilterMode, TruncationPolicy);

nlohmann::ordered_json to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["mrr"] = report.mrr;
  j["map"] = report.map;
  j["num_questions_scored"] = report.num_questions_scored;
  j["num_questions_skipped"] = report.num_questions_skipped;
  j["filter_mode"] = to_string(report.filter_mode);
  auto per = nlohmann::ordered_json::array();
  for (const auto& r : report.per_question) {
    nlohmann::ordered_json q;
    q["question_id"] = r.question_id;
    q["reciprocal_rank"] = r.reciprocal_rank;
    q["average_precision"] = r.average_precision;
    q["num_candidates"] = r.num_candidates;
    q["num_positive"] = r.num_positive;
    per.push_back(std::move(q));
  }
  j["per_question"] = std::move(per);
  return j;
}

void write_trec_run(const EvalReport& report, std::ostream& out, std::string_view run_tag) {
  const auto old_precision = out.precision();
  out << std::setprecision(9);
  for (const auto& ranked : report.rankings) {
    for (std::size_t i = 0; i < ranked.entries.size(); ++i) {
      const auto& e = ranked.entries[i];
      out << ranked.question_id << " Q0 " << e.answer_id << ' ' << (i + 1) << ' ' << e.score
          << ' ' << run_tag << '\n';
    }
  }
  out.precision(old_precision);
}

}  // namespace anssel
