#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "anssel/corpus.hpp"
#include "anssel/model.hpp"
#include "anssel/textenc.hpp"

namespace anssel {

struct RankedEntry {
  std::string answer_id;
  double score = 0.0;
  bool label = false;
  std::size_t original_index = 0;
};

// Candidates sorted by descending score; equal scores keep candidate order.
struct RankedList {
  std::string question_id;
  std::vector<RankedEntry> entries;
};

RankedList rank_candidates(const Question& question, std::span<const double> scores);

// 1 / (1-based rank of the first positive), 0 without positives.
double reciprocal_rank(const RankedList& ranked);

// Mean over positives of precision at each positive's rank, 0 without
// positives.
double average_precision(const RankedList& ranked);

struct QuestionResult {
  std::string question_id;
  double reciprocal_rank = 0.0;
  double average_precision = 0.0;
  std::size_t num_candidates = 0;
  std::size_t num_positive = 0;
};

struct EvalReport {
  std::vector<QuestionResult> per_question;
  double mrr = 0.0;
  double map = 0.0;
  std::size_t num_questions_scored = 0;
  std::size_t num_questions_skipped = 0;
  FilterMode filter_mode = FilterMode::kRequirePositive;
  // Rankings behind per_question, same order. Not part of the JSON form.
  std::vector<RankedList> rankings;
};

// Returns one score per candidate of the question, in candidate order.
using CandidateScorer = std::function<std::vector<double>(const Question&)>;

// Filters with `mode`, scores and ranks every remaining question, and
// averages RR / AP over the scored questions. Throws DataError when nothing
// is left after filtering or the scorer returns the wrong number of scores.
EvalReport evaluate(const Dataset& dataset, FilterMode mode, const CandidateScorer& scorer);

// Model-backed evaluation: each question's candidates are scored as one
// eval-mode batch.
template <typename T>
EvalReport evaluate(const ModelParams<T>& params, const Vocab& vocab, const Dataset& dataset,
                    FilterMode mode, TruncationPolicy policy = TruncationPolicy::kAnswerFirst);

nlohmann::ordered_json to_json(const EvalReport& report);

// TREC run format: question_id Q0 answer_id rank score run_tag
void write_trec_run(const EvalReport& report, std::ostream& out, std::string_view run_tag);

}  // namespace anssel
