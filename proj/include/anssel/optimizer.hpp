#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "anssel/model.hpp"

namespace anssel {

enum class OptimizerKind { kAdam, kSgd };

std::string_view to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(std::string_view name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

// Adam moments (kept in double regardless of parameter precision) and the
// number of updates applied so far.
struct OptimizerState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step = 0;
};

// sgd:  theta -= lr * g
// adam: m = b1 m + (1 - b1) g;  v = b2 v + (1 - b2) g^2;
//       theta -= lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
template <typename T>
void optimizer_step(ModelParams<T>& params, const Gradients<T>& grads, OptimizerState& state,
                    const OptimizerConfig& config);

}  // namespace anssel
