#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "anssel/corpus.hpp"

namespace anssel {

// Marker-token corpus where the only relevance signal is a shared token:
// each question carries one marker "mk<i>"; its positives carry the same
// marker and its negatives carry a different one. Question and answer
// filler words come from disjoint pools, so counting tokens shared between
// question and answer ranks every positive first. With shared_answer_context
// all candidates of a question use the same filler words and marker slot,
// so a positive and a negative differ in the marker token only. Without
// random_marker_slot the marker is the first word of every text.
struct SeparableCorpusOptions {
  std::size_t num_questions = 50;
  std::size_t num_markers = 8;
  std::size_t min_positives = 1;
  std::size_t max_positives = 2;
  std::size_t num_negatives = 3;
  std::size_t question_fillers = 4;
  std::size_t answer_fillers = 3;
  bool shared_answer_context = true;
  bool random_marker_slot = false;
  std::uint64_t seed = 1;
  std::string id_prefix = "q";
};

Dataset make_separable_corpus(const SeparableCorpusOptions& options);

}  // namespace anssel
