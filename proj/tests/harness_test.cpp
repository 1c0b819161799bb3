#include <cmath>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "anssel/checkpoint.hpp"
#include "anssel/error.hpp"
#include "anssel/harness.hpp"
#include "anssel/metrics.hpp"
#include "anssel/optimizer.hpp"
#include "anssel/synthetic.hpp"

namespace anssel {
namespace {

ModelConfig small_model() {
  ModelConfig c;
  c.hidden_size = 16;
  c.num_layers = 1;
  c.num_heads = 2;
  c.ffn_size = 32;
  c.max_len = 16;
  c.seed = 5;
  return c;
}

TrainConfig small_train_config() {
  TrainConfig c;
  c.model = small_model();
  c.batch_size = 4;
  c.num_epochs = 2;
  c.base_seed = 11;
  return c;
}

Dataset one_triple_dataset() {
  return Dataset{"one", Split::kTrain,
                 {Question{"q", "who wrote hamlet", {{"p", "shakespeare", true},
                                                     {"n", "dickens", false}}}}};
}

TEST(OptimizerTest, SgdStep) {
  ModelConfig c = small_model();
  c.vocab_size = 5;
  ModelParams<double> p(c);
  Gradients<double> g(c);
  p.values()[0] = 1.0;
  g.values()[0] = 0.5;
  OptimizerState state;
  optimizer_step(p, g, state, OptimizerConfig{OptimizerKind::kSgd, 0.1});
  EXPECT_DOUBLE_EQ(p.values()[0], 0.95);
  EXPECT_EQ(state.step, 1u);

  const auto before = p;
  Gradients<double> zero(c);
  optimizer_step(p, zero, state, OptimizerConfig{OptimizerKind::kSgd, 0.1});
  EXPECT_TRUE(p == before);
}

TEST(OptimizerTest, AdamFirstStepIsLearningRateTimesSign) {
  ModelConfig c = small_model();
  c.vocab_size = 5;
  ModelParams<double> p(c);
  Gradients<double> g(c);
  g.values()[0] = 0.3;
  g.values()[1] = -2.0;
  OptimizerState state;
  const OptimizerConfig cfg{OptimizerKind::kAdam, 1e-3, 0.9, 0.999, 1e-8};
  optimizer_step(p, g, state, cfg);
  // m_hat = g, v_hat = g^2 after bias correction: update = lr * g / (|g| + eps).
  EXPECT_NEAR(p.values()[0], -1e-3 * 0.3 / (0.3 + 1e-8), 1e-15);
  EXPECT_NEAR(p.values()[1], 1e-3 * 2.0 / (2.0 + 1e-8), 1e-15);
  EXPECT_EQ(p.values()[2], 0.0);
  // With a constant gradient later steps keep the same magnitude.
  optimizer_step(p, g, state, cfg);
  EXPECT_NEAR(p.values()[0], -2e-3, 1e-9);
}

TEST(OptimizerTest, RejectsMismatchedShapes) {
  ModelConfig a = small_model();
  a.vocab_size = 5;
  ModelConfig b = a;
  b.vocab_size = 6;
  ModelParams<float> p(a);
  Gradients<float> g(b);
  OptimizerState state;
  EXPECT_THROW(optimizer_step(p, g, state, OptimizerConfig{}), Error);
}

TEST(CheckpointTest, RoundTripIsBitwise) {
  ModelConfig c = small_model();
  c.vocab_size = 9;
  const auto params = init_params<float>(c);
  const nlohmann::ordered_json train = to_json(small_train_config());
  std::stringstream io;
  write_checkpoint(params, io, &train);
  const std::string bytes = io.str();
  EXPECT_EQ(bytes.substr(0, 8), "ANSSELCK");
  const Checkpoint ck = read_checkpoint(io);
  EXPECT_TRUE(ck.params == params);
  ASSERT_TRUE(ck.train_config.has_value());
  EXPECT_EQ(*ck.train_config, train);

  std::stringstream again;
  write_checkpoint(ck.params, again, &*ck.train_config);
  EXPECT_EQ(again.str(), bytes);
}

TEST(CheckpointTest, CorruptionIsDetected) {
  ModelConfig c = small_model();
  c.vocab_size = 9;
  std::stringstream io;
  write_checkpoint(init_params<float>(c), io);
  const std::string good = io.str();

  std::string bad_magic = good;
  bad_magic[0] = 'X';
  std::istringstream m(bad_magic);
  EXPECT_THROW(read_checkpoint(m), DataError);

  std::string bad_version = good;
  bad_version[8] = 9;
  std::istringstream v(bad_version);
  try {
    read_checkpoint(v);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }

  std::istringstream truncated(good.substr(0, good.size() - 3));
  EXPECT_THROW(read_checkpoint(truncated), DataError);
  std::istringstream trailing(good + "x");
  EXPECT_THROW(read_checkpoint(trailing), DataError);
}

TEST(TrainConfigTest, JsonRoundTripAndOverrides) {
  TrainConfig c = small_train_config();
  c.sampling.strategy = SamplingStrategy::kSampledK;
  c.sampling.k = 3;
  c.optimizer = OptimizerKind::kSgd;
  c.filter_mode = FilterMode::kRequireBoth;
  const auto j = to_json(c);
  const TrainConfig back = train_config_from_json(j);
  EXPECT_EQ(to_json(back), j);

  std::vector<std::string> warnings;
  const auto partial = nlohmann::json::parse(R"({"num_epochs": 5, "loss": {"margin": 0.3}, "bogus": 1})");
  const TrainConfig p = train_config_from_json(partial, &warnings);
  EXPECT_EQ(p.num_epochs, 5u);
  EXPECT_EQ(p.loss.margin, 0.3);
  EXPECT_EQ(p.loss.lambda1, 0.5);
  EXPECT_EQ(p.batch_size, TrainConfig{}.batch_size);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("bogus"), std::string::npos);

  EXPECT_THROW(train_config_from_json(nlohmann::json::parse(R"({"num_epochs": "x"})")),
               ConfigError);
  EXPECT_THROW(train_config_from_json(nlohmann::json::parse(R"({"optimizer": "rmsprop"})")),
               ConfigError);
}

TEST(TrainConfigTest, Validation) {
  TrainConfig c = small_train_config();
  c.num_epochs = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_train_config();
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_train_config();
  c.learning_rate = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(TrainTest, SingleTripleSingleStep) {
  TrainConfig c = small_train_config();
  c.num_epochs = 1;
  c.batch_size = 1;
  const auto r = train<float>(c, one_triple_dataset(), Dataset{});
  ASSERT_EQ(r.history.steps.size(), 1u);
  EXPECT_EQ(r.history.steps[0].step, 1u);
  EXPECT_TRUE(r.history.evals.empty());
  EXPECT_EQ(r.params.config().vocab_size, r.vocab.size());
}

TEST(TrainTest, VocabSizeMismatchRejected) {
  TrainConfig c = small_train_config();
  c.model.vocab_size = 99;
  EXPECT_THROW(train<float>(c, one_triple_dataset(), Dataset{}), ConfigError);
}

TEST(TrainTest, NoPairsRejected) {
  Dataset d{"", Split::kTrain, {Question{"q", "x", {{"a", "y", true}}}}};
  EXPECT_THROW(train<float>(small_train_config(), d, Dataset{}), DataError);
}

TEST(TrainTest, DivergenceAborts) {
  TrainConfig c = small_train_config();
  c.optimizer = OptimizerKind::kSgd;
  c.learning_rate = 1e38;
  EXPECT_THROW(train<float>(c, one_triple_dataset(), Dataset{}), NumericalError);
}

TEST(TrainTest, DeterministicAndLogsEvals) {
  SeparableCorpusOptions o;
  o.num_questions = 8;
  const Dataset tr = make_separable_corpus(o);
  o.seed = 2;
  o.num_questions = 4;
  o.id_prefix = "h";
  const Dataset dev = make_separable_corpus(o);
  TrainConfig c = small_train_config();
  c.eval_every = 3;
  const auto a = train<float>(c, tr, dev);
  const auto b = train<float>(c, tr, dev);
  EXPECT_TRUE(a.params == b.params);
  EXPECT_EQ(a.vocab, b.vocab);
  ASSERT_EQ(a.history.steps.size(), b.history.steps.size());
  for (std::size_t i = 0; i < a.history.steps.size(); ++i) {
    EXPECT_EQ(a.history.steps[i].loss, b.history.steps[i].loss);
    if (i > 0) EXPECT_GT(a.history.steps[i].step, a.history.steps[i - 1].step);
  }
  ASSERT_FALSE(a.history.evals.empty());
  EXPECT_EQ(a.history.evals[0].step, 3u);
  EXPECT_EQ(a.history.epoch_mean_loss.size(), 2u);

  std::stringstream sa, sb;
  write_checkpoint(a.params, sa);
  write_checkpoint(b.params, sb);
  EXPECT_EQ(sa.str(), sb.str());

  TrainConfig other = c;
  other.base_seed = 12;
  EXPECT_FALSE(train<float>(other, tr, dev).params == a.params);
}

TEST(TrainTest, SampledKTrains) {
  SeparableCorpusOptions o;
  o.num_questions = 6;
  TrainConfig c = small_train_config();
  c.sampling = SamplingConfig{SamplingStrategy::kSampledK, 1, 3};
  const auto r = train<double>(c, make_separable_corpus(o), Dataset{});
  // 6 questions, 1-2 positives each, one negative per positive, batch 4.
  EXPECT_GE(r.history.steps.size(), 2u * 2u);
  EXPECT_TRUE(r.params.all_finite());
}

TEST(SeparableCorpusTest, TokenOverlapRuleIsPerfect) {
  SeparableCorpusOptions o;
  const Dataset d = make_separable_corpus(o);
  EXPECT_NO_THROW(validate(d));
  EXPECT_EQ(d.questions.size(), 50u);
  const EvalReport r = evaluate(d, FilterMode::kRequirePositive, [](const Question& q) {
    const auto qt = tokenize(q.text);
    const std::set<std::string> qs(qt.begin(), qt.end());
    std::vector<double> s;
    for (const auto& c : q.candidates) {
      double shared = 0;
      for (const auto& t : tokenize(c.text)) shared += qs.count(t);
      s.push_back(shared);
    }
    return s;
  });
  EXPECT_EQ(r.mrr, 1.0);
  EXPECT_EQ(r.map, 1.0);
  for (const auto& q : d.questions) {
    EXPECT_GE(q.num_positive(), 1u);
    EXPECT_GE(q.num_negative(), 1u);
  }
}

}  // namespace
}  // namespace anssel
