#include "anssel/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include <json.hpp>

#include "anssel/error.hpp"

namespace anssel {

namespace {

using ordered_json = nlohmann::ordered_json;

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
  });
}

std::string require_string(const nlohmann::json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw DataError("line " + std::to_string(line) + ": missing field '" + key + "'");
  }
  if (!it->is_string()) {
    throw DataError("line " + std::to_string(line) + ": field '" + key + "' must be a string");
  }
  return it->get<std::string>();
}

void warn_unknown(const nlohmann::json& obj, std::initializer_list<std::string_view> known,
                  std::string_view where, std::size_t line, std::vector<std::string>* warnings) {
  if (warnings == nullptr) return;
  for (const auto& [key, value] : obj.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      warnings->push_back("line " + std::to_string(line) + ": ignoring unknown field '" + key +
                          "' in " + std::string(where));
    }
  }
}

Question parse_question(const nlohmann::json& obj, std::size_t line,
                        std::vector<std::string>* warnings) {
  if (!obj.is_object()) {
    throw DataError("line " + std::to_string(line) + ": expected a JSON object");
  }
  warn_unknown(obj, {"question_id", "question_text", "candidates"}, "question", line, warnings);
  Question q;
  q.question_id = require_string(obj, "question_id", line);
  q.text = require_string(obj, "question_text", line);
  auto cands = obj.find("candidates");
  if (cands == obj.end() || !cands->is_array()) {
    throw DataError("line " + std::to_string(line) + ": 'candidates' must be an array");
  }
  for (const auto& c : *cands) {
    if (!c.is_object()) {
      throw DataError("line " + std::to_string(line) + ": candidate must be an object");
    }
    warn_unknown(c, {"answer_id", "text", "label"}, "candidate", line, warnings);
    CandidateAnswer a;
    a.answer_id = require_string(c, "answer_id", line);
    a.text = require_string(c, "text", line);
    auto label = c.find("label");
    if (label == c.end() || !label->is_boolean()) {
      throw DataError("line " + std::to_string(line) + ": question " + q.question_id +
                      " answer " + a.answer_id + ": 'label' must be a boolean");
    }
    a.label = label->get<bool>();
    q.candidates.push_back(std::move(a));
  }
  return q;
}

void validate_question(const Question& q) {
  if (q.question_id.empty()) throw DataError("question with empty question_id");
  if (blank(q.text)) throw DataError("question " + q.question_id + ": empty question text");
  if (q.candidates.empty()) throw DataError("question " + q.question_id + ": no candidates");
  std::unordered_set<std::string_view> ids;
  for (const auto& a : q.candidates) {
    if (a.answer_id.empty()) {
      throw DataError("question " + q.question_id + ": candidate with empty answer_id");
    }
    if (!ids.insert(a.answer_id).second) {
      throw DataError("question " + q.question_id + ": duplicate answer_id " + a.answer_id);
    }
    if (blank(a.text)) {
      throw DataError("question " + q.question_id + " answer " + a.answer_id + ": empty text");
    }
  }
}

}  // namespace

std::size_t Question::num_positive() const {
  return static_cast<std::size_t>(
      std::count_if(candidates.begin(), candidates.end(), [](const auto& a) { return a.label; }));
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "test";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "dev") return Split::kDev;
  if (name == "test") return Split::kTest;
  throw ConfigError("unknown split '" + std::string(name) + "'");
}

std::string_view to_string(FilterMode mode) {
  switch (mode) {
    case FilterMode::kKeepAll: return "keep_all";
    case FilterMode::kRequirePositive: return "require_positive";
    case FilterMode::kRequireBoth: return "require_both";
  }
  return "keep_all";
}

FilterMode parse_filter_mode(std::string_view name) {
  if (name == "keep_all") return FilterMode::kKeepAll;
  if (name == "require_positive") return FilterMode::kRequirePositive;
  if (name == "require_both") return FilterMode::kRequireBoth;
  throw ConfigError("unknown filter mode '" + std::string(name) + "'");
}

void validate(const Dataset& dataset) {
  std::unordered_set<std::string_view> ids;
  for (const auto& q : dataset.questions) {
    validate_question(q);
    if (!ids.insert(q.question_id).second) {
      throw DataError("duplicate question_id " + q.question_id);
    }
  }
}

Dataset parse_canonical(std::istream& in, std::vector<std::string>* warnings) {
  Dataset dataset;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (blank(line) || line.front() == '#') continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
    }
    Question q = parse_question(obj, line_no, warnings);
    try {
      validate_question(q);
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!ids.insert(q.question_id).second) {
      throw DataError("line " + std::to_string(line_no) + ": duplicate question_id " +
                      q.question_id);
    }
    dataset.questions.push_back(std::move(q));
  }
  if (in.bad()) throw DataError("read failure after line " + std::to_string(line_no));
  return dataset;
}

void write_canonical(const Dataset& dataset, std::ostream& out, std::string_view header_comment) {
  if (!header_comment.empty()) out << "# " << header_comment << '\n';
  for (const auto& q : dataset.questions) {
    ordered_json obj;
    obj["question_id"] = q.question_id;
    obj["question_text"] = q.text;
    auto cands = ordered_json::array();
    for (const auto& a : q.candidates) {
      ordered_json c;
      c["answer_id"] = a.answer_id;
      c["text"] = a.text;
      c["label"] = a.label;
      cands.push_back(std::move(c));
    }
    obj["candidates"] = std::move(cands);
    out << obj.dump() << '\n';
  }
  if (!out) throw DataError("write failure");
}

Dataset load_canonical(const std::string& path, std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return parse_canonical(in, warnings);
}

void save_canonical(const Dataset& dataset, const std::string& path,
                    std::string_view header_comment) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  write_canonical(dataset, out, header_comment);
}

Dataset convert_tsv(std::istream& in) {
  Dataset dataset;
  std::unordered_set<std::string> finished;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    for (;;) {
      std::size_t tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (cols.size() != 4) {
      throw DataError("line " + std::to_string(line_no) + ": expected 4 tab-separated columns, got " +
                      std::to_string(cols.size()));
    }
    if (cols[3] != "0" && cols[3] != "1") {
      throw DataError("line " + std::to_string(line_no) + ": label must be 0 or 1");
    }
    const std::string& qid = cols[0];
    if (dataset.questions.empty() || dataset.questions.back().question_id != qid) {
      if (!dataset.questions.empty()) finished.insert(dataset.questions.back().question_id);
      if (finished.count(qid) != 0) {
        throw DataError("line " + std::to_string(line_no) + ": rows of question " + qid +
                        " are not contiguous");
      }
      dataset.questions.push_back(Question{qid, cols[1], {}});
    } else if (dataset.questions.back().text != cols[1]) {
      throw DataError("line " + std::to_string(line_no) + ": question " + qid +
                      " has inconsistent question text");
    }
    auto& q = dataset.questions.back();
    q.candidates.push_back(
        CandidateAnswer{"a" + std::to_string(q.candidates.size()), cols[2], cols[3] == "1"});
  }
  try {
    validate(dataset);
  } catch (const DataError& e) {
    throw DataError(std::string("tsv: ") + e.what());
  }
  return dataset;
}

DatasetStats compute_stats(const Dataset& dataset) {
  DatasetStats s;
  s.num_questions = dataset.questions.size();
  for (const auto& q : dataset.questions) {
    const std::size_t pos = q.num_positive();
    const std::size_t neg = q.candidates.size() - pos;
    s.num_candidates += q.candidates.size();
    s.num_positive += pos;
    s.num_negative += neg;
    if (pos > 0 && neg > 0) ++s.num_answerable;
    s.num_train_pairs += pos * neg;
  }
  return s;
}

nlohmann::ordered_json to_json(const DatasetStats& s) {
  nlohmann::ordered_json j;
  j["num_questions"] = s.num_questions;
  j["num_candidates"] = s.num_candidates;
  j["num_positive"] = s.num_positive;
  j["num_negative"] = s.num_negative;
  j["num_answerable"] = s.num_answerable;
  j["num_train_pairs"] = s.num_train_pairs;
  return j;
}

Dataset filter_evaluable(const Dataset& dataset, FilterMode mode) {
  Dataset out{dataset.name, dataset.split, {}};
  for (const auto& q : dataset.questions) {
    const std::size_t pos = q.num_positive();
    const std::size_t neg = q.candidates.size() - pos;
    if (mode != FilterMode::kKeepAll && pos == 0) continue;
    if (mode == FilterMode::kRequireBoth && neg == 0) continue;
    out.questions.push_back(q);
  }
  return out;
}

}  // namespace anssel
