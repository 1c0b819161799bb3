#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace anssel {

struct CandidateAnswer {
  std::string answer_id;
  std::string text;
  bool label = false;

  bool operator==(const CandidateAnswer&) const = default;
};

struct Question {
  std::string question_id;
  std::string text;
  // Order is significant: it is the tie-break key when ranking.
  std::vector<CandidateAnswer> candidates;

  std::size_t num_positive() const;
  std::size_t num_negative() const { return candidates.size() - num_positive(); }

  bool operator==(const Question&) const = default;
};

enum class Split { kTrain, kDev, kTest };

struct Dataset {
  std::string name;
  Split split = Split::kTest;
  std::vector<Question> questions;

  bool operator==(const Dataset&) const = default;
};

struct DatasetStats {
  std::size_t num_questions = 0;
  std::size_t num_candidates = 0;
  std::size_t num_positive = 0;
  std::size_t num_negative = 0;
  // Questions with at least one positive and one negative candidate.
  std::size_t num_answerable = 0;
  // Sum over questions of positives x negatives.
  std::size_t num_train_pairs = 0;

  bool operator==(const DatasetStats&) const = default;
};

enum class FilterMode { kKeepAll, kRequirePositive, kRequireBoth };

std::string_view to_string(Split split);
Split parse_split(std::string_view name);
std::string_view to_string(FilterMode mode);
FilterMode parse_filter_mode(std::string_view name);

// Checks every Dataset/Question/CandidateAnswer invariant; throws DataError
// naming the offending question (and answer) on the first violation.
void validate(const Dataset& dataset);

// Reads canonical JSONL: one question object per line with the keys
// question_id, question_text and candidates[{answer_id, text, label}].
// Blank lines and lines starting with '#' are skipped. Unknown keys are
// ignored and reported through `warnings` when it is non-null. Errors carry
// the 1-based line number.
Dataset parse_canonical(std::istream& in, std::vector<std::string>* warnings = nullptr);

// Writes one line per question. When `header_comment` is non-empty it is
// emitted first as a '#' comment line (parse_canonical skips it).
void write_canonical(const Dataset& dataset, std::ostream& out,
                     std::string_view header_comment = {});

Dataset load_canonical(const std::string& path, std::vector<std::string>* warnings = nullptr);
void save_canonical(const Dataset& dataset, const std::string& path,
                    std::string_view header_comment = {});

// Converts 4-column TSV (question_id, question_text, answer_text, label 0|1)
// into a Dataset. Rows of one question must be contiguous; answer ids are
// assigned a0, a1, ... in row order.
Dataset convert_tsv(std::istream& in);

DatasetStats compute_stats(const Dataset& dataset);
nlohmann::ordered_json to_json(const DatasetStats& stats);

Dataset filter_evaluable(const Dataset& dataset, FilterMode mode);

}  // namespace anssel
