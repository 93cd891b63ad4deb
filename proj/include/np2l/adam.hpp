#pragma once

#include <cstddef>
#include <vector>

#include "np2l/autograd.hpp"

namespace np2l {

struct AdamOptions {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Coupled L2: weight_decay * param is added to the gradient before the
  /// moment update (the classic Adam + L2 form, not AdamW).
  double weight_decay = 0.0;
};

/// Adam with bias correction:
///   g  <- grad + wd * p
///   m  <- b1 m + (1 - b1) g
///   v  <- b2 v + (1 - b2) g^2
///   p  <- p - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
class Adam {
 public:
  Adam(std::vector<ad::Tensor> params, AdamOptions options);

  /// Throws std::logic_error if any parameter has no gradient.
  void step();
  void zero_grad();

  std::size_t steps() const { return t_; }
  const AdamOptions& options() const { return options_; }
  const std::vector<Matrix>& first_moments() const { return m_; }
  const std::vector<Matrix>& second_moments() const { return v_; }

 private:
  std::vector<ad::Tensor> params_;
  AdamOptions options_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  std::size_t t_ = 0;
};

}  // namespace np2l
