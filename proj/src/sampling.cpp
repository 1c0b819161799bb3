#include "anssel/sampling.hpp"

#include <istream>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include "anssel/error.hpp"
#include "anssel/rng.hpp"

namespace anssel {

std::string_view to_string(SamplingStrategy strategy) {
  return strategy == SamplingStrategy::kCrossProduct ? "cross_product" : "sampled_k";
}

SamplingStrategy parse_sampling_strategy(std::string_view name) {
  if (name == "cross_product") return SamplingStrategy::kCrossProduct;
  if (name == "sampled_k") return SamplingStrategy::kSampledK;
  throw ConfigError("unknown sampling strategy '" + std::string(name) + "'");
}

void SamplingConfig::validate() const {
  if (k < 1) throw ConfigError("sampling.k must be >= 1");
}

TripleSet generate_triples(const Dataset& dataset, const SamplingConfig& config) {
  config.validate();
  TripleSet out;
  Rng rng(config.seed);
  for (const auto& q : dataset.questions) {
    std::vector<const CandidateAnswer*> positives;
    std::vector<const CandidateAnswer*> negatives;
    for (const auto& a : q.candidates) (a.label ? positives : negatives).push_back(&a);
    if (positives.empty() || negatives.empty()) {
      ++out.num_degenerate_questions;
      continue;
    }
    for (const auto* p : positives) {
      if (config.strategy == SamplingStrategy::kCrossProduct) {
        for (const auto* n : negatives) {
          out.triples.push_back({q.question_id, p->answer_id, n->answer_id});
        }
        continue;
      }
      std::vector<std::size_t> idx(negatives.size());
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      const std::size_t take = std::min(config.k, idx.size());
      for (std::size_t i = 0; i < take; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
        std::swap(idx[i], idx[j]);
        out.triples.push_back({q.question_id, p->answer_id, negatives[idx[i]]->answer_id});
      }
    }
  }
  return out;
}

std::vector<TrainingTriple> shuffle_triples(std::vector<TrainingTriple> triples,
                                            std::uint64_t seed) {
  Rng rng(seed);
  rng.shuffle(triples);
  return triples;
}

void validate_triples(const Dataset& dataset, const std::vector<TrainingTriple>& triples) {
  std::unordered_map<std::string_view, const Question*> by_id;
  for (const auto& q : dataset.questions) by_id.emplace(q.question_id, &q);
  auto find_label = [](const Question& q, const std::string& id) -> int {
    for (const auto& a : q.candidates) {
      if (a.answer_id == id) return a.label ? 1 : 0;
    }
    return -1;
  };
  for (const auto& t : triples) {
    auto it = by_id.find(t.question_id);
    if (it == by_id.end()) throw DataError("triple references unknown question " + t.question_id);
    if (t.positive_id == t.negative_id) {
      throw DataError("triple for " + t.question_id + " uses " + t.positive_id + " twice");
    }
    if (find_label(*it->second, t.positive_id) != 1) {
      throw DataError("triple for " + t.question_id + ": " + t.positive_id + " is not a positive");
    }
    if (find_label(*it->second, t.negative_id) != 0) {
      throw DataError("triple for " + t.question_id + ": " + t.negative_id + " is not a negative");
    }
  }
}

void write_triples_tsv(const std::vector<TrainingTriple>& triples, std::ostream& out) {
  for (const auto& t : triples) {
    out << t.question_id << '\t' << t.positive_id << '\t' << t.negative_id << '\n';
  }
}

std::vector<TrainingTriple> read_triples_tsv(std::istream& in) {
  std::vector<TrainingTriple> triples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto a = line.find('\t');
    auto b = a == std::string::npos ? a : line.find('\t', a + 1);
    if (b == std::string::npos || line.find('\t', b + 1) != std::string::npos) {
      throw DataError("triples line " + std::to_string(line_no) + ": expected 3 columns");
    }
    triples.push_back({line.substr(0, a), line.substr(a + 1, b - a - 1), line.substr(b + 1)});
  }
  return triples;
}

}  // namespace anssel
