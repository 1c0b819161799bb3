#pragma once

#include <span>
#include <vector>

namespace anssel {

// Weights of the composite pairwise loss
//   L = -lambda1 (log yp + log(1 - yn)) + lambda2 max(0, margin - yp + yn)
// where yp / yn are the positive / negative scores, clamped to
// [epsilon, 1 - epsilon] before the logs.
struct LossConfig {
  double lambda1 = 0.5;
  double lambda2 = 0.5;
  double margin = 0.2;
  double epsilon = 1e-7;

  void validate() const;
  bool operator==(const LossConfig&) const = default;
};

struct LossGrad {
  double d_positive = 0.0;
  double d_negative = 0.0;
};

double pairwise_loss(double yp, double yn, const LossConfig& config);

// Analytic derivative. The hinge contributes only while
// margin - yp + yn > 0 (subgradient 0 at the kink). The log terms are
// differentiated at the clamped score, so outside [epsilon, 1 - epsilon]
// they still push toward separation.
LossGrad pairwise_loss_grad(double yp, double yn, const LossConfig& config);

struct BatchLoss {
  double mean_loss = 0.0;
  std::vector<LossGrad> grads;  // already scaled by 1/N
};

BatchLoss batch_loss(std::span<const double> yps, std::span<const double> yns,
                     const LossConfig& config);

}  // namespace anssel
