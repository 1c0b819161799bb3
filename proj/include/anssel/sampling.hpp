#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "anssel/corpus.hpp"

namespace anssel {

// One (question, positive answer, negative answer) training example.
struct TrainingTriple {
  std::string question_id;
  std::string positive_id;
  std::string negative_id;

  bool operator==(const TrainingTriple&) const = default;
  auto operator<=>(const TrainingTriple&) const = default;
};

enum class SamplingStrategy { kCrossProduct, kSampledK };

std::string_view to_string(SamplingStrategy strategy);
SamplingStrategy parse_sampling_strategy(std::string_view name);

struct SamplingConfig {
  SamplingStrategy strategy = SamplingStrategy::kCrossProduct;
  std::size_t k = 1;  // negatives per positive, sampled_k only
  std::uint64_t seed = 0;

  void validate() const;
};

struct TripleSet {
  std::vector<TrainingTriple> triples;
  // Questions lacking a positive or a negative; they contribute nothing.
  std::size_t num_degenerate_questions = 0;
};

// cross_product: every (positive, negative) pair, ordered by question, then
// positive, then negative candidate order.
// sampled_k: for each positive, min(k, #negatives) negatives drawn without
// replacement (partial Fisher-Yates over the negative list, one Rng stream
// seeded with config.seed and consumed in question/positive order).
TripleSet generate_triples(const Dataset& dataset, const SamplingConfig& config);

std::vector<TrainingTriple> shuffle_triples(std::vector<TrainingTriple> triples,
                                            std::uint64_t seed);

// Throws DataError if a triple does not reference a positive and a negative
// candidate of one question in `dataset`.
void validate_triples(const Dataset& dataset, const std::vector<TrainingTriple>& triples);

// Audit format: question_id \t positive_id \t negative_id, one per line.
void write_triples_tsv(const std::vector<TrainingTriple>& triples, std::ostream& out);
std::vector<TrainingTriple> read_triples_tsv(std::istream& in);

}  // namespace anssel
