#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace anssel {

using TokenId = std::int32_t;

inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kUnkId = 1;
inline constexpr TokenId kClsId = 2;
inline constexpr TokenId kSepId = 3;
inline constexpr std::size_t kNumReserved = 4;
inline constexpr std::size_t kDefaultMaxLen = 128;
inline constexpr std::size_t kMinMaxLen = 8;

// Lowercases (ASCII, Latin-1, Greek and Cyrillic capitals), splits on
// Unicode whitespace, and emits every punctuation code point as its own
// token. Invalid UTF-8 bytes are passed through as part of a word.
std::vector<std::string> tokenize(std::string_view text);

class Vocab {
 public:
  // Only the four reserved tokens.
  Vocab();

  // Tokens from `tokens` in order become ids 4, 5, ...; duplicates or
  // reserved spellings throw DataError.
  static Vocab from_tokens(std::span<const std::string> tokens);

  std::size_t size() const { return id_to_token_.size(); }
  TokenId id(std::string_view token) const;  // kUnkId when absent
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const;

  // One token per line, line index = id.
  void write(std::ostream& out) const;
  static Vocab read(std::istream& in);
  void save(const std::string& path) const;
  static Vocab load(const std::string& path);

  bool operator==(const Vocab& other) const { return id_to_token_ == other.id_to_token_; }

 private:
  void add(std::string token);

  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, TokenId> token_to_id_;
};

// Keeps tokens with corpus frequency >= min_freq. Ids follow descending
// frequency, then byte-lexicographic order.
Vocab build_vocab(std::span<const std::string> texts, std::size_t min_freq = 1);

enum class TruncationPolicy { kAnswerFirst, kLongestFirst };

std::string_view to_string(TruncationPolicy policy);
TruncationPolicy parse_truncation_policy(std::string_view name);

struct EncodedPair {
  std::vector<TokenId> token_ids;
  std::vector<std::uint8_t> segment_ids;
  std::vector<std::uint8_t> attention_mask;

  std::size_t max_len() const { return token_ids.size(); }
  // Number of leading non-PAD positions.
  std::size_t length() const;

  bool operator==(const EncodedPair&) const = default;
};

// Packs [CLS] question [SEP] answer [SEP] followed by PAD up to max_len.
// Overlong input is trimmed according to `policy`; answer_first removes
// answer tokens down to one before touching the question. Throws
// ConfigError when max_len < kMinMaxLen.
EncodedPair encode_pair(const Vocab& vocab, std::string_view question, std::string_view answer,
                        std::size_t max_len = kDefaultMaxLen,
                        TruncationPolicy policy = TruncationPolicy::kAnswerFirst);

// Checks the layout invariants (CLS first, mask prefix, segments); throws
// DataError describing the first violation.
void check_layout(const EncodedPair& pair);

}  // namespace anssel
