#include "anssel/textenc.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "anssel/error.hpp"

namespace anssel {

namespace {

constexpr std::array<std::string_view, kNumReserved> kReserved = {"[PAD]", "[UNK]", "[CLS]",
                                                                  "[SEP]"};

// Decodes one code point starting at `i`; on malformed input returns the
// single byte value and advances by one.
char32_t decode_utf8(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) -> int {
    if (i + k >= s.size()) return -1;
    auto b = static_cast<unsigned char>(s[i + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int len = (b0 & 0xE0) == 0xC0 ? 2 : (b0 & 0xF0) == 0xE0 ? 3 : (b0 & 0xF8) == 0xF0 ? 4 : 0;
  if (len == 0) {
    ++i;
    return b0;
  }
  char32_t cp = b0 & (0x7F >> len);
  for (int k = 1; k < len; ++k) {
    int c = cont(static_cast<std::size_t>(k));
    if (c < 0) {
      ++i;
      return b0;
    }
    cp = (cp << 6) | static_cast<char32_t>(c);
  }
  i += static_cast<std::size_t>(len);
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// Unicode White_Space property.
bool is_space(char32_t c) {
  return (c >= 0x09 && c <= 0x0D) || c == 0x20 || c == 0x85 || c == 0xA0 || c == 0x1680 ||
         (c >= 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029 || c == 0x202F ||
         c == 0x205F || c == 0x3000;
}

bool is_punct(char32_t c) {
  if (c < 0x80) {
    return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
           (c >= 0x7B && c <= 0x7E);
  }
  switch (c) {
    case 0xA1: case 0xA7: case 0xAB: case 0xB6: case 0xB7: case 0xBB: case 0xBF:
      return true;
    default:
      break;
  }
  return (c >= 0x2010 && c <= 0x2027) || (c >= 0x2030 && c <= 0x205E) ||
         (c >= 0x3001 && c <= 0x3003) || (c >= 0x3008 && c <= 0x3011) ||
         (c >= 0xFF01 && c <= 0xFF0F);
}

char32_t to_lower(char32_t c) {
  if (c >= 'A' && c <= 'Z') return c + 32;
  if ((c >= 0xC0 && c <= 0xDE && c != 0xD7)) return c + 32;
  if (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) return c + 32;
  if (c >= 0x410 && c <= 0x42F) return c + 32;
  if (c >= 0x400 && c <= 0x40F) return c + 80;
  return c;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (std::size_t i = 0; i < text.size();) {
    const std::size_t start = i;
    const char32_t cp = decode_utf8(text, i);
    if (is_space(cp)) {
      flush();
    } else if (is_punct(cp)) {
      flush();
      std::string p;
      append_utf8(p, cp);
      tokens.push_back(std::move(p));
    } else if (i - start == 1 && cp >= 0x80) {
      current.push_back(text[start]);  // stray byte, keep verbatim
    } else {
      append_utf8(current, to_lower(cp));
    }
  }
  flush();
  return tokens;
}

Vocab::Vocab() {
  for (auto r : kReserved) add(std::string(r));
}

void Vocab::add(std::string token) {
  auto id = static_cast<TokenId>(id_to_token_.size());
  if (!token_to_id_.emplace(token, id).second) {
    throw DataError("duplicate vocab token '" + token + "'");
  }
  id_to_token_.push_back(std::move(token));
}

Vocab Vocab::from_tokens(std::span<const std::string> tokens) {
  Vocab v;
  for (const auto& t : tokens) {
    if (t.empty()) throw DataError("empty vocab token");
    v.add(t);
  }
  return v;
}

TokenId Vocab::id(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  return it == token_to_id_.end() ? kUnkId : it->second;
}

bool Vocab::contains(std::string_view token) const {
  return token_to_id_.count(std::string(token)) != 0;
}

const std::string& Vocab::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
    throw DataError("token id " + std::to_string(id) + " out of range");
  }
  return id_to_token_[static_cast<std::size_t>(id)];
}

void Vocab::write(std::ostream& out) const {
  for (const auto& t : id_to_token_) out << t << '\n';
}

Vocab Vocab::read(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  if (lines.size() < kNumReserved) throw DataError("vocab file has fewer than 4 lines");
  for (std::size_t i = 0; i < kNumReserved; ++i) {
    if (lines[i] != kReserved[i]) {
      throw DataError("vocab line " + std::to_string(i + 1) + " must be " +
                      std::string(kReserved[i]));
    }
  }
  return from_tokens(std::span(lines).subspan(kNumReserved));
}

void Vocab::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  write(out);
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return read(in);
}

Vocab build_vocab(std::span<const std::string> texts, std::size_t min_freq) {
  if (min_freq < 1) throw ConfigError("min_freq must be >= 1");
  std::map<std::string, std::size_t> counts;
  for (const auto& text : texts) {
    for (auto& tok : tokenize(text)) ++counts[std::move(tok)];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [tok, n] : counts) {
    if (n >= min_freq) kept.emplace_back(tok, n);
  }
  // counts is lexicographically ordered already; stable_sort keeps that
  // order inside each frequency class.
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens;
  tokens.reserve(kept.size());
  for (auto& [tok, n] : kept) tokens.push_back(std::move(tok));
  return Vocab::from_tokens(tokens);
}

std::string_view to_string(TruncationPolicy policy) {
  return policy == TruncationPolicy::kAnswerFirst ? "answer_first" : "longest_first";
}

TruncationPolicy parse_truncation_policy(std::string_view name) {
  if (name == "answer_first") return TruncationPolicy::kAnswerFirst;
  if (name == "longest_first") return TruncationPolicy::kLongestFirst;
  throw ConfigError("unknown truncation policy '" + std::string(name) + "'");
}

std::size_t EncodedPair::length() const {
  return static_cast<std::size_t>(std::count(attention_mask.begin(), attention_mask.end(), 1));
}

EncodedPair encode_pair(const Vocab& vocab, std::string_view question, std::string_view answer,
                        std::size_t max_len, TruncationPolicy policy) {
  if (max_len < kMinMaxLen) {
    throw ConfigError("max_len " + std::to_string(max_len) + " is below the minimum of " +
                      std::to_string(kMinMaxLen));
  }
  auto q = tokenize(question);
  auto a = tokenize(answer);
  const std::size_t budget = max_len - 3;
  std::size_t q_keep = q.size();
  std::size_t a_keep = a.size();
  if (q_keep + a_keep > budget) {
    if (policy == TruncationPolicy::kAnswerFirst) {
      const std::size_t a_floor = std::min<std::size_t>(a_keep, 1);
      a_keep = std::max(a_floor, budget > q_keep ? budget - q_keep : 0);
      q_keep = std::min(q_keep, budget - a_keep);
    } else {
      while (q_keep + a_keep > budget) {
        if (a_keep >= q_keep) {
          --a_keep;
        } else {
          --q_keep;
        }
      }
    }
  }

  EncodedPair out;
  out.token_ids.assign(max_len, kPadId);
  out.segment_ids.assign(max_len, 0);
  out.attention_mask.assign(max_len, 0);
  std::size_t pos = 0;
  auto put = [&](TokenId id, std::uint8_t segment) {
    out.token_ids[pos] = id;
    out.segment_ids[pos] = segment;
    out.attention_mask[pos] = 1;
    ++pos;
  };
  put(kClsId, 0);
  for (std::size_t i = 0; i < q_keep; ++i) put(vocab.id(q[i]), 0);
  put(kSepId, 0);
  for (std::size_t i = 0; i < a_keep; ++i) put(vocab.id(a[i]), 1);
  put(kSepId, 1);
  return out;
}

void check_layout(const EncodedPair& pair) {
  const std::size_t n = pair.token_ids.size();
  if (pair.segment_ids.size() != n || pair.attention_mask.size() != n) {
    throw DataError("encoded pair has inconsistent sequence lengths");
  }
  if (n == 0 || pair.token_ids[0] != kClsId || pair.attention_mask[0] != 1) {
    throw DataError("encoded pair must start with [CLS]");
  }
  bool in_padding = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (pair.attention_mask[i] > 1 || pair.segment_ids[i] > 1) {
      throw DataError("mask and segment ids must be 0 or 1");
    }
    if (pair.attention_mask[i] == 0) {
      in_padding = true;
      if (pair.segment_ids[i] != 0) throw DataError("segment id must be 0 on padding");
    } else if (in_padding) {
      throw DataError("attention mask is not a prefix of ones");
    }
  }
}

}  // namespace anssel
