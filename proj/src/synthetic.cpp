#include "anssel/synthetic.hpp"

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "anssel/error.hpp"
#include "anssel/rng.hpp"

namespace anssel {

namespace {

constexpr std::array<std::string_view, 16> kQuestionWords = {
    "what", "which", "who",   "where", "when",  "how",   "does",  "did",
    "is",   "was",   "tell",  "name",  "find",  "show",  "give",  "explain"};

constexpr std::array<std::string_view, 24> kAnswerWords = {
    "river",  "stone",  "green", "north", "castle", "engine", "silver", "forest",
    "winter", "harbor", "plain", "tower", "garden", "bridge", "copper", "desert",
    "island", "valley", "cloud", "mill",  "lantern", "canal", "meadow", "quarry"};

std::vector<std::string> draw_words(Rng& rng, std::span<const std::string_view> pool,
                                    std::size_t count) {
  std::vector<std::string> words;
  for (std::size_t i = 0; i < count; ++i) words.emplace_back(pool[rng.below(pool.size())]);
  return words;
}

std::string join_with_marker(const std::vector<std::string>& words, std::size_t slot,
                             const std::string& marker) {
  std::string out;
  for (std::size_t i = 0; i <= words.size(); ++i) {
    const std::string& w = i == slot ? marker : words[i < slot ? i : i - 1];
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

}  // namespace

Dataset make_separable_corpus(const SeparableCorpusOptions& o) {
  if (o.num_markers < 2) throw ConfigError("separable corpus needs at least 2 markers");
  if (o.min_positives < 1 || o.max_positives < o.min_positives || o.num_negatives < 1) {
    throw ConfigError("separable corpus needs >= 1 positive and >= 1 negative per question");
  }
  Rng rng(o.seed);
  Dataset ds{"separable", Split::kTrain, {}};
  for (std::size_t qi = 0; qi < o.num_questions; ++qi) {
    const std::size_t marker = rng.below(o.num_markers);
    const std::string mk = "mk" + std::to_string(marker);
    Question q;
    q.question_id = o.id_prefix + std::to_string(qi);
    q.text = join_with_marker(draw_words(rng, kQuestionWords, o.question_fillers),
                              o.random_marker_slot ? rng.below(o.question_fillers + 1) : 0, mk);
    const std::size_t npos = o.min_positives + rng.below(o.max_positives - o.min_positives + 1);

    std::vector<std::string> context = draw_words(rng, kAnswerWords, o.answer_fillers);
    auto draw_slot = [&] { return o.random_marker_slot ? rng.below(o.answer_fillers + 1) : 0; };
    std::size_t slot = draw_slot();
    auto answer = [&](const std::string& m) {
      if (!o.shared_answer_context) {
        context = draw_words(rng, kAnswerWords, o.answer_fillers);
        slot = draw_slot();
      }
      return join_with_marker(context, slot, m);
    };
    std::vector<CandidateAnswer> cands;
    for (std::size_t i = 0; i < npos; ++i) cands.push_back({"", answer(mk), true});
    for (std::size_t i = 0; i < o.num_negatives; ++i) {
      std::size_t other = rng.below(o.num_markers - 1);
      if (other >= marker) ++other;
      cands.push_back({"", answer("mk" + std::to_string(other)), false});
    }
    rng.shuffle(cands);
    for (std::size_t i = 0; i < cands.size(); ++i) cands[i].answer_id = "a" + std::to_string(i);
    q.candidates = std::move(cands);
    ds.questions.push_back(std::move(q));
  }
  return ds;
}

}  // namespace anssel
