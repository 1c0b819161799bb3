#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "anssel/corpus.hpp"
#include "anssel/model.hpp"
#include "anssel/objective.hpp"
#include "anssel/optimizer.hpp"
#include "anssel/sampling.hpp"
#include "anssel/textenc.hpp"

namespace anssel {

struct TrainConfig {
  ModelConfig model;  // vocab_size 0 means "take it from the built vocab"
  LossConfig loss;
  SamplingConfig sampling;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::size_t batch_size = 16;
  std::size_t num_epochs = 3;
  std::size_t eval_every = 0;  // steps; 0 = only at epoch ends
  std::uint64_t base_seed = 0;
  FilterMode filter_mode = FilterMode::kRequirePositive;
  std::size_t min_freq = 1;
  TruncationPolicy truncation = TruncationPolicy::kAnswerFirst;

  OptimizerConfig optimizer_config() const;
  void validate() const;
};

nlohmann::ordered_json to_json(const TrainConfig& config);
// Starts from defaults and overrides every key present. Unknown keys are
// reported through `warnings`.
TrainConfig train_config_from_json(const nlohmann::json& j,
                                   std::vector<std::string>* warnings = nullptr);

struct StepRecord {
  std::size_t step = 0;
  double loss = 0.0;
};

struct EvalRecord {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double mrr = 0.0;
  double map = 0.0;
};

struct TrainHistory {
  std::vector<StepRecord> steps;
  std::vector<EvalRecord> evals;
  std::vector<double> epoch_mean_loss;
  std::vector<double> epoch_seconds;  // wall clock, excluded from determinism
};

nlohmann::ordered_json to_json(const TrainHistory& history);

template <typename T>
struct TrainResult {
  Vocab vocab;
  ModelParams<T> params;
  TrainHistory history;
};

// Progress lines ("epoch 2 step 140 loss 0.1234", dev evals) go here.
using TrainLogger = std::function<void(const std::string&)>;

// Pairwise fine-tuning loop. Builds the vocab from train_set texts,
// initializes the encoder, then per epoch shuffles the triples with seed
// base_seed + epoch and, per batch, scores the (q, p) and (q, n) arms with
// one shared parameter set in a fused forward, applies the pairwise loss,
// backpropagates both arms into one gradient and takes one optimizer step.
// Dev MRR/MAP is logged every eval_every steps and at each epoch end when
// dev_set has evaluable questions. Throws NumericalError on a non-finite
// loss or parameter.
template <typename T>
TrainResult<T> train(const TrainConfig& config, const Dataset& train_set, const Dataset& dev_set,
                     const TrainLogger& log = {});

// Reads a TrainConfig JSON file. Throws ConfigError when unreadable.
TrainConfig load_train_config(const std::string& path,
                              std::vector<std::string>* warnings = nullptr);

struct LoadedModel {
  ModelParams<float> params;
  Vocab vocab;
  TrainConfig config;  // defaults when the checkpoint carries none
};

// Checkpoint plus vocab; throws DataError when their vocab sizes disagree.
LoadedModel load_model(const std::string& checkpoint_path, const std::string& vocab_path);

// Writes model.ckpt (with the effective config in its header), vocab.txt,
// history.json and config.json into out_dir, creating it if needed.
void save_run(const TrainConfig& config, const TrainResult<float>& result,
              const std::string& out_dir);

}  // namespace anssel
