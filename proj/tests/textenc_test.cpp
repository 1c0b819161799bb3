#include <sstream>

#include <gtest/gtest.h>

#include "anssel/error.hpp"
#include "anssel/rng.hpp"
#include "anssel/textenc.hpp"

namespace anssel {
namespace {

using Tokens = std::vector<std::string>;

TEST(TokenizeTest, Rules) {
  EXPECT_EQ(tokenize("Who wrote Hamlet?"), (Tokens{"who", "wrote", "hamlet", "?"}));
  EXPECT_EQ(tokenize(""), Tokens{});
  EXPECT_EQ(tokenize("state-of-the-art"), (Tokens{"state", "-", "of", "-", "the", "-", "art"}));
  EXPECT_EQ(tokenize("  a\t\nb\xC2\xA0" "c\xE3\x80\x80" "d "), (Tokens{"a", "b", "c", "d"}));
  EXPECT_EQ(tokenize("\xC3\x89T\xC3\x89 \xD0\x9C\xD0\x98\xD0\xA0"),
            (Tokens{"\xC3\xA9t\xC3\xA9", "\xD0\xBC\xD0\xB8\xD1\x80"}));
  EXPECT_EQ(tokenize("\xE2\x80\x9Cquoted\xE2\x80\x9D"),
            (Tokens{"\xE2\x80\x9C", "quoted", "\xE2\x80\x9D"}));
  EXPECT_EQ(tokenize("it's"), (Tokens{"it", "'", "s"}));
}

TEST(BuildVocabTest, DeterministicIds) {
  const std::vector<std::string> texts = {"a a b"};
  const Vocab v = build_vocab(texts, 1);
  EXPECT_EQ(v.size(), 6u);
  EXPECT_EQ(v.id("a"), 4);
  EXPECT_EQ(v.id("b"), 5);
  EXPECT_EQ(v.token(kClsId), "[CLS]");

  const Vocab v2 = build_vocab(texts, 2);
  EXPECT_EQ(v2.size(), 5u);
  EXPECT_FALSE(v2.contains("b"));
  EXPECT_EQ(v2.id("b"), kUnkId);

  EXPECT_EQ(build_vocab(std::vector<std::string>{}, 1).size(), kNumReserved);
  EXPECT_THROW(build_vocab(texts, 0), ConfigError);
}

TEST(BuildVocabTest, TiesBrokenLexicographically) {
  const std::vector<std::string> texts = {"zeta beta", "beta alpha zeta gamma"};
  const Vocab v = build_vocab(texts, 1);
  EXPECT_EQ(v.token(4), "beta");
  EXPECT_EQ(v.token(5), "zeta");
  EXPECT_EQ(v.token(6), "alpha");
  EXPECT_EQ(v.token(7), "gamma");
}

TEST(VocabFileTest, RoundTripAndValidation) {
  const std::vector<std::string> texts = {"who wrote hamlet ?"};
  const Vocab v = build_vocab(texts, 1);
  std::stringstream io;
  v.write(io);
  EXPECT_EQ(io.str().substr(0, 24), "[PAD]\n[UNK]\n[CLS]\n[SEP]\n");
  EXPECT_EQ(Vocab::read(io), v);
  std::istringstream bad("[UNK]\n[PAD]\n[CLS]\n[SEP]\n");
  EXPECT_THROW(Vocab::read(bad), DataError);
  std::istringstream dup("[PAD]\n[UNK]\n[CLS]\n[SEP]\nx\nx\n");
  EXPECT_THROW(Vocab::read(dup), DataError);
}

class EncodePairTest : public ::testing::Test {
 protected:
  Vocab vocab = build_vocab(std::vector<std::string>{"who wrote hamlet shakespeare ?"}, 1);
};

TEST_F(EncodePairTest, LayoutWithPadding) {
  const EncodedPair p = encode_pair(vocab, "who wrote hamlet", "shakespeare wrote hamlet", 16);
  const TokenId who = vocab.id("who"), wrote = vocab.id("wrote"), hamlet = vocab.id("hamlet"),
                sh = vocab.id("shakespeare");
  EXPECT_EQ(p.token_ids, (std::vector<TokenId>{kClsId, who, wrote, hamlet, kSepId, sh, wrote,
                                               hamlet, kSepId, 0, 0, 0, 0, 0, 0, 0}));
  EXPECT_EQ(p.segment_ids, (std::vector<std::uint8_t>{0, 0, 0, 0, 0, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0}));
  EXPECT_EQ(p.attention_mask,
            (std::vector<std::uint8_t>{1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0}));
  EXPECT_NO_THROW(check_layout(p));
}

TEST_F(EncodePairTest, ExactFitHasNoPadding) {
  const EncodedPair p = encode_pair(vocab, "who wrote hamlet", "shakespeare wrote hamlet", 9);
  EXPECT_EQ(p.length(), 9u);
  EXPECT_TRUE(std::all_of(p.attention_mask.begin(), p.attention_mask.end(),
                          [](auto m) { return m == 1; }));
}

TEST_F(EncodePairTest, AnswerTruncatedFirst) {
  std::string answer;
  for (int i = 0; i < 20; ++i) answer += "w" + std::to_string(i) + " ";
  const EncodedPair p = encode_pair(vocab, "who wrote hamlet", answer, 12);
  EXPECT_EQ(p.length(), 12u);
  EXPECT_EQ(std::count(p.segment_ids.begin(), p.segment_ids.end(), 1), 7);  // 6 tokens + SEP
  EXPECT_EQ(p.token_ids[4], kSepId);
  EXPECT_EQ(p.token_ids[11], kSepId);
  EXPECT_EQ(p.token_ids[5], kUnkId);
}

TEST_F(EncodePairTest, LongQuestionKeepsOneAnswerToken) {
  std::string q;
  for (int i = 0; i < 30; ++i) q += "who ";
  const EncodedPair p = encode_pair(vocab, q, "shakespeare wrote", 10);
  EXPECT_EQ(p.length(), 10u);
  EXPECT_EQ(p.token_ids[7], kSepId);
  EXPECT_EQ(p.token_ids[8], vocab.id("shakespeare"));
  EXPECT_EQ(p.token_ids[9], kSepId);
}

TEST_F(EncodePairTest, LongestFirstBalances) {
  std::string q, a;
  for (int i = 0; i < 10; ++i) q += "who ";
  for (int i = 0; i < 10; ++i) a += "hamlet ";
  const EncodedPair p = encode_pair(vocab, q, a, 13, TruncationPolicy::kLongestFirst);
  EXPECT_EQ(p.token_ids[6], kSepId);  // 5 question tokens
  EXPECT_EQ(p.token_ids[12], kSepId);  // 5 answer tokens
}

TEST_F(EncodePairTest, RejectsTinyMaxLen) {
  EXPECT_THROW(encode_pair(vocab, "a", "b", 7), ConfigError);
}

TEST_F(EncodePairTest, InvariantsOnRandomText) {
  Rng rng(12);
  const std::vector<std::string> words = {"who", "wrote", "hamlet", "?", "shakespeare"};
  for (int trial = 0; trial < 300; ++trial) {
    auto sentence = [&](std::size_t n) {
      std::string s;
      for (std::size_t i = 0; i < n; ++i) s += words[rng.below(words.size())] + " ";
      return s;
    };
    const std::string q = sentence(1 + rng.below(12));
    const std::string a = sentence(1 + rng.below(25));
    const std::size_t max_len = 8 + rng.below(30);
    const EncodedPair p = encode_pair(vocab, q, a, max_len);
    ASSERT_EQ(p.max_len(), max_len);
    ASSERT_NO_THROW(check_layout(p));
    EXPECT_EQ(std::count(p.token_ids.begin(), p.token_ids.begin() + p.length(), kSepId), 2);
    for (std::size_t i = 0; i < max_len; ++i) {
      if (p.attention_mask[i] == 0) EXPECT_EQ(p.segment_ids[i], 0);
    }
    // Decode the kept tokens and encode again.
    std::string dq, da;
    for (std::size_t i = 1; i < p.length() - 1; ++i) {
      if (p.token_ids[i] == kSepId) continue;
      (p.segment_ids[i] == 0 ? dq : da) += vocab.token(p.token_ids[i]) + " ";
    }
    EXPECT_EQ(encode_pair(vocab, dq, da, max_len), p);
  }
}

}  // namespace
}  // namespace anssel
