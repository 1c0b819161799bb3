#include "anssel/harness.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "anssel/checkpoint.hpp"
#include "anssel/error.hpp"
#include "anssel/metrics.hpp"
#include "anssel/rng.hpp"

namespace anssel {

namespace {

template <typename U>
void read_key(const nlohmann::json& j, const char* key, U& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<U>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

std::string read_string(const nlohmann::json& j, const char* key, std::string_view fallback) {
  std::string s(fallback);
  read_key(j, key, s);
  return s;
}

void warn_unknown(const nlohmann::json& j, std::initializer_list<std::string_view> known,
                  const std::string& where, std::vector<std::string>* warnings) {
  if (warnings == nullptr || !j.is_object()) return;
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      warnings->push_back("ignoring unknown config key '" + where + key + "'");
    }
  }
}

// Candidate indices of one training triple.
struct IndexedTriple {
  std::size_t question;
  std::size_t positive;
  std::size_t negative;
};

}  // namespace

OptimizerConfig TrainConfig::optimizer_config() const {
  return OptimizerConfig{optimizer, learning_rate, adam_beta1, adam_beta2, adam_epsilon};
}

void TrainConfig::validate() const {
  loss.validate();
  sampling.validate();
  optimizer_config().validate();
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (num_epochs < 1) throw ConfigError("num_epochs must be >= 1");
  if (min_freq < 1) throw ConfigError("min_freq must be >= 1");
  ModelConfig probe = model;
  if (probe.vocab_size == 0) probe.vocab_size = kNumReserved;
  probe.validate();
}

nlohmann::ordered_json to_json(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["model"] = to_json(c.model);
  j["loss"] = {{"lambda1", c.loss.lambda1},
               {"lambda2", c.loss.lambda2},
               {"margin", c.loss.margin},
               {"epsilon", c.loss.epsilon}};
  j["sampling"] = {{"strategy", to_string(c.sampling.strategy)},
                   {"k", c.sampling.k},
                   {"seed", c.sampling.seed}};
  j["optimizer"] = to_string(c.optimizer);
  j["learning_rate"] = c.learning_rate;
  j["adam_beta1"] = c.adam_beta1;
  j["adam_beta2"] = c.adam_beta2;
  j["adam_epsilon"] = c.adam_epsilon;
  j["batch_size"] = c.batch_size;
  j["num_epochs"] = c.num_epochs;
  j["eval_every"] = c.eval_every;
  j["base_seed"] = c.base_seed;
  j["filter_mode"] = to_string(c.filter_mode);
  j["min_freq"] = c.min_freq;
  j["truncation"] = to_string(c.truncation);
  return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j, std::vector<std::string>* warnings) {
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  warn_unknown(j,
               {"model", "loss", "sampling", "optimizer", "learning_rate", "adam_beta1",
                "adam_beta2", "adam_epsilon", "batch_size", "num_epochs", "eval_every",
                "base_seed", "filter_mode", "min_freq", "truncation"},
               "", warnings);
  TrainConfig c;
  if (auto it = j.find("model"); it != j.end()) {
    warn_unknown(*it,
                 {"vocab_size", "hidden_size", "num_layers", "num_heads", "ffn_size", "max_len",
                  "dropout_rate", "seed"},
                 "model.", warnings);
    c.model = model_config_from_json(*it);
  }
  if (auto it = j.find("loss"); it != j.end()) {
    if (!it->is_object()) throw ConfigError("'loss' must be an object");
    warn_unknown(*it, {"lambda1", "lambda2", "margin", "epsilon"}, "loss.", warnings);
    read_key(*it, "lambda1", c.loss.lambda1);
    read_key(*it, "lambda2", c.loss.lambda2);
    read_key(*it, "margin", c.loss.margin);
    read_key(*it, "epsilon", c.loss.epsilon);
  }
  if (auto it = j.find("sampling"); it != j.end()) {
    if (!it->is_object()) throw ConfigError("'sampling' must be an object");
    warn_unknown(*it, {"strategy", "k", "seed"}, "sampling.", warnings);
    c.sampling.strategy = parse_sampling_strategy(
        read_string(*it, "strategy", to_string(c.sampling.strategy)));
    read_key(*it, "k", c.sampling.k);
    read_key(*it, "seed", c.sampling.seed);
  }
  c.optimizer = parse_optimizer_kind(read_string(j, "optimizer", to_string(c.optimizer)));
  read_key(j, "learning_rate", c.learning_rate);
  read_key(j, "adam_beta1", c.adam_beta1);
  read_key(j, "adam_beta2", c.adam_beta2);
  read_key(j, "adam_epsilon", c.adam_epsilon);
  read_key(j, "batch_size", c.batch_size);
  read_key(j, "num_epochs", c.num_epochs);
  read_key(j, "eval_every", c.eval_every);
  read_key(j, "base_seed", c.base_seed);
  c.filter_mode = parse_filter_mode(read_string(j, "filter_mode", to_string(c.filter_mode)));
  read_key(j, "min_freq", c.min_freq);
  c.truncation = parse_truncation_policy(read_string(j, "truncation", to_string(c.truncation)));
  return c;
}

nlohmann::ordered_json to_json(const TrainHistory& h) {
  nlohmann::ordered_json j;
  auto steps = nlohmann::ordered_json::array();
  for (const auto& s : h.steps) steps.push_back({{"step", s.step}, {"loss", s.loss}});
  auto evals = nlohmann::ordered_json::array();
  for (const auto& e : h.evals) {
    evals.push_back({{"step", e.step}, {"epoch", e.epoch}, {"mrr", e.mrr}, {"map", e.map}});
  }
  j["steps"] = std::move(steps);
  j["evals"] = std::move(evals);
  j["epoch_mean_loss"] = h.epoch_mean_loss;
  j["epoch_seconds"] = h.epoch_seconds;
  return j;
}

template <typename T>
TrainResult<T> train(const TrainConfig& config, const Dataset& train_set, const Dataset& dev_set,
                     const TrainLogger& log) {
  config.validate();
  validate(train_set);
  validate(dev_set);

  std::vector<std::string> texts;
  for (const auto& q : train_set.questions) {
    texts.push_back(q.text);
    for (const auto& c : q.candidates) texts.push_back(c.text);
  }
  Vocab vocab = build_vocab(texts, config.min_freq);

  ModelConfig model_config = config.model;
  if (model_config.vocab_size == 0) {
    model_config.vocab_size = vocab.size();
  } else if (model_config.vocab_size != vocab.size()) {
    throw ConfigError("model.vocab_size " + std::to_string(model_config.vocab_size) +
                      " does not match the built vocab size " + std::to_string(vocab.size()));
  }
  ModelParams<T> params = init_params<T>(model_config);

  // Every (question, candidate) arm is encoded once up front.
  std::vector<std::vector<EncodedPair>> encoded(train_set.questions.size());
  std::unordered_map<std::string, std::size_t> question_index;
  std::vector<std::unordered_map<std::string, std::size_t>> answer_index(
      train_set.questions.size());
  for (std::size_t qi = 0; qi < train_set.questions.size(); ++qi) {
    const Question& q = train_set.questions[qi];
    question_index.emplace(q.question_id, qi);
    for (std::size_t ci = 0; ci < q.candidates.size(); ++ci) {
      encoded[qi].push_back(
          encode_pair(vocab, q.text, q.candidates[ci].text, model_config.max_len,
                      config.truncation));
      answer_index[qi].emplace(q.candidates[ci].answer_id, ci);
    }
  }
  auto index_triples = [&](const std::vector<TrainingTriple>& triples) {
    std::vector<IndexedTriple> out;
    out.reserve(triples.size());
    for (const auto& t : triples) {
      const std::size_t qi = question_index.at(t.question_id);
      out.push_back({qi, answer_index[qi].at(t.positive_id), answer_index[qi].at(t.negative_id)});
    }
    return out;
  };

  const bool resample = config.sampling.strategy == SamplingStrategy::kSampledK;
  TripleSet base = generate_triples(train_set, config.sampling);
  if (base.triples.empty()) throw DataError("training set yields no (positive, negative) pairs");

  const bool have_dev = !filter_evaluable(dev_set, config.filter_mode).questions.empty();
  const OptimizerConfig opt = config.optimizer_config();
  OptimizerState state;
  TrainHistory history;
  std::size_t step = 0;

  auto run_eval = [&](std::size_t epoch) {
    if (!have_dev) return;
    const EvalReport r = evaluate(params, vocab, dev_set, config.filter_mode, config.truncation);
    history.evals.push_back(EvalRecord{step, epoch, r.mrr, r.map});
    if (log) {
      std::ostringstream msg;
      msg << "epoch " << epoch << " step " << step << " dev_mrr " << r.mrr << " dev_map "
          << r.map;
      log(msg.str());
    }
  };

  for (std::size_t epoch = 0; epoch < config.num_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<TrainingTriple> triples = base.triples;
    if (resample && epoch > 0) {
      SamplingConfig sc = config.sampling;
      sc.seed = config.sampling.seed + epoch;
      triples = generate_triples(train_set, sc).triples;
    }
    const std::vector<IndexedTriple> order =
        index_triples(shuffle_triples(std::move(triples), config.base_seed + epoch));

    double epoch_loss = 0.0;
    std::size_t epoch_batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::size_t b = end - start;
      ++step;

      // Fused batch: all positive arms, then all negative arms.
      std::vector<EncodedPair> batch;
      batch.reserve(2 * b);
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(encoded[order[i].question][order[i].positive]);
      }
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(encoded[order[i].question][order[i].negative]);
      }
      ForwardResult<T> fwd = forward(params, batch, true, derive_seed(config.base_seed, step));
      std::vector<double> yp(fwd.scores.begin(), fwd.scores.begin() + static_cast<long>(b));
      std::vector<double> yn(fwd.scores.begin() + static_cast<long>(b), fwd.scores.end());
      const BatchLoss loss = batch_loss(yp, yn, config.loss);
      if (!std::isfinite(loss.mean_loss)) {
        throw NumericalError("non-finite loss at step " + std::to_string(step));
      }
      std::vector<T> score_grads(2 * b);
      for (std::size_t i = 0; i < b; ++i) {
        score_grads[i] = static_cast<T>(loss.grads[i].d_positive);
        score_grads[b + i] = static_cast<T>(loss.grads[i].d_negative);
      }
      const Gradients<T> grads = backward(params, fwd.cache, std::span<const T>(score_grads));
      optimizer_step(params, grads, state, opt);
      if (!params.all_finite()) {
        throw NumericalError("non-finite parameter after step " + std::to_string(step));
      }
      history.steps.push_back(StepRecord{step, loss.mean_loss});
      epoch_loss += loss.mean_loss;
      ++epoch_batches;
      if (config.eval_every > 0 && step % config.eval_every == 0) run_eval(epoch);
    }
    history.epoch_mean_loss.push_back(epoch_loss / static_cast<double>(epoch_batches));
    history.epoch_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    if (log) {
      std::ostringstream msg;
      msg << "epoch " << epoch << " step " << step << " loss " << history.epoch_mean_loss.back();
      log(msg.str());
    }
    if (config.eval_every == 0 || step % config.eval_every != 0) run_eval(epoch);
  }
  return TrainResult<T>{std::move(vocab), std::move(params), std::move(history)};
}

template TrainResult<float> train<float>(const TrainConfig&, const Dataset&, const Dataset&,
                                         const TrainLogger&);
template TrainResult<double> train<double>(const TrainConfig&, const Dataset&, const Dataset&,
                                           const TrainLogger&);

void save_run(const TrainConfig& config, const TrainResult<float>& result,
              const std::string& out_dir) {
  namespace fs = std::filesystem;
  const fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + out_dir + ": " + ec.message());
  TrainConfig effective = config;
  effective.model.vocab_size = result.vocab.size();
  const auto cfg_json = to_json(effective);
  save_checkpoint(result.params, (dir / "model.ckpt").string(), &cfg_json);
  result.vocab.save((dir / "vocab.txt").string());
  for (const auto& [name, j] : {std::pair{"history.json", to_json(result.history)},
                                std::pair{"config.json", cfg_json}}) {
    std::ofstream out(dir / name);
    if (!out) throw DataError("cannot write " + (dir / name).string());
    out << j.dump(2) << '\n';
  }
}

TrainConfig load_train_config(const std::string& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + " is not valid JSON: " + e.what());
  }
  return train_config_from_json(j, warnings);
}

LoadedModel load_model(const std::string& checkpoint_path, const std::string& vocab_path) {
  Checkpoint ck = load_checkpoint(checkpoint_path);
  LoadedModel m{std::move(ck.params), Vocab::load(vocab_path), {}};
  if (m.vocab.size() != m.params.config().vocab_size) {
    throw DataError("vocab " + vocab_path + " has " + std::to_string(m.vocab.size()) +
                    " tokens but the checkpoint expects " +
                    std::to_string(m.params.config().vocab_size));
  }
  if (ck.train_config) m.config = train_config_from_json(*ck.train_config);
  m.config.model = m.params.config();
  return m;
}

}  // namespace anssel
