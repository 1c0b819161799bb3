#include "anssel/optimizer.hpp"

#include <cmath>
#include <string>

#include "anssel/error.hpp"

namespace anssel {

std::string_view to_string(OptimizerKind kind) {
  return kind == OptimizerKind::kAdam ? "adam" : "sgd";
}

OptimizerKind parse_optimizer_kind(std::string_view name) {
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "sgd") return OptimizerKind::kSgd;
  throw ConfigError("unknown optimizer '" + std::string(name) + "'");
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("adam_epsilon must be > 0");
}

template <typename T>
void optimizer_step(ModelParams<T>& params, const Gradients<T>& grads, OptimizerState& state,
                    const OptimizerConfig& config) {
  if (params.size() != grads.size() || !(params.config() == grads.config())) {
    throw Error("optimizer_step: gradients do not match parameter shapes");
  }
  auto theta = params.values();
  auto g = grads.values();
  ++state.step;
  if (config.kind == OptimizerKind::kSgd) {
    for (std::size_t i = 0; i < theta.size(); ++i) {
      theta[i] = static_cast<T>(static_cast<double>(theta[i]) -
                                config.learning_rate * static_cast<double>(g[i]));
    }
    return;
  }
  if (state.first_moment.size() != theta.size()) {
    state.first_moment.assign(theta.size(), 0.0);
    state.second_moment.assign(theta.size(), 0.0);
  }
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(config.beta1, t);
  const double bc2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double gi = static_cast<double>(g[i]);
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = config.beta1 * m + (1.0 - config.beta1) * gi;
    v = config.beta2 * v + (1.0 - config.beta2) * gi * gi;
    const double update = config.learning_rate * (m / bc1) / (std::sqrt(v / bc2) + config.epsilon);
    theta[i] = static_cast<T>(static_cast<double>(theta[i]) - update);
  }
}

template void optimizer_step<float>(ModelParams<float>&, const Gradients<float>&,
                                    OptimizerState&, const OptimizerConfig&);
template void optimizer_step<double>(ModelParams<double>&, const Gradients<double>&,
                                     OptimizerState&, const OptimizerConfig&);

}  // namespace anssel
