#include "np2l/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace np2l {

Adam::Adam(std::vector<ad::Tensor> params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  if (options_.lr <= 0.0) throw std::invalid_argument("Adam: learning rate must be positive");
  if (options_.weight_decay < 0.0) throw std::invalid_argument("Adam: negative weight decay");
  for (const auto& p : params_) {
    if (!p.is_leaf() || !p.requires_grad())
      throw std::invalid_argument("Adam: every parameter must be a trainable leaf");
    m_.emplace_back(p.rows(), p.cols());
    v_.emplace_back(p.rows(), p.cols());
  }
}

void Adam::step() {
  for (const auto& p : params_)
    if (!p.has_grad()) throw std::logic_error("Adam::step: parameter without gradient");

  ++t_;
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Matrix& w = params_[k].mutable_value();
    const Matrix& grad = params_[k].grad();
    Matrix& m = m_[k];
    Matrix& v = v_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double g = grad[i] + options_.weight_decay * w[i];
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      w[i] -= options_.lr * m_hat / (std::sqrt(v_hat) + options_.eps);
    }
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace np2l
