#include "anssel/objective.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "anssel/error.hpp"

namespace anssel {

void LossConfig::validate() const {
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) throw ConfigError("lambda1/lambda2 must be >= 0");
  if (!(lambda1 + lambda2 > 0.0)) throw ConfigError("lambda1 + lambda2 must be > 0");
  if (!(margin > 0.0 && margin < 1.0)) throw ConfigError("margin must lie in (0, 1)");
  if (!(epsilon > 0.0 && epsilon < 1e-3)) throw ConfigError("epsilon must lie in (0, 1e-3)");
}

namespace {
double clamp_score(double y, double eps) { return std::clamp(y, eps, 1.0 - eps); }
}  // namespace

double pairwise_loss(double yp, double yn, const LossConfig& config) {
  const double p = clamp_score(yp, config.epsilon);
  const double n = clamp_score(yn, config.epsilon);
  const double xent = -(std::log(p) + std::log1p(-n));
  const double hinge = std::max(0.0, config.margin - p + n);
  return config.lambda1 * xent + config.lambda2 * hinge;
}

LossGrad pairwise_loss_grad(double yp, double yn, const LossConfig& config) {
  const double p = clamp_score(yp, config.epsilon);
  const double n = clamp_score(yn, config.epsilon);
  const bool hinge_active = config.margin - p + n > 0.0;
  LossGrad g;
  g.d_positive = -config.lambda1 / p - (hinge_active ? config.lambda2 : 0.0);
  g.d_negative = config.lambda1 / (1.0 - n) + (hinge_active ? config.lambda2 : 0.0);
  return g;
}

BatchLoss batch_loss(std::span<const double> yps, std::span<const double> yns,
                     const LossConfig& config) {
  if (yps.size() != yns.size()) {
    throw Error("batch_loss: " + std::to_string(yps.size()) + " positive scores vs " +
                std::to_string(yns.size()) + " negative scores");
  }
  if (yps.empty()) throw Error("batch_loss: empty batch");
  const double inv_n = 1.0 / static_cast<double>(yps.size());
  BatchLoss out;
  out.grads.reserve(yps.size());
  double total = 0.0;
  for (std::size_t i = 0; i < yps.size(); ++i) {
    total += pairwise_loss(yps[i], yns[i], config);
    LossGrad g = pairwise_loss_grad(yps[i], yns[i], config);
    g.d_positive *= inv_n;
    g.d_negative *= inv_n;
    out.grads.push_back(g);
  }
  out.mean_loss = total * inv_n;
  return out;
}

}  // namespace anssel
