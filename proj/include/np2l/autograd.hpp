#pragma once

// Minimal reverse-mode differentiation over 2-D matrices.
//
// A Tensor is a handle to a node in a dynamically built tape. Leaves are
// created with Tensor::parameter (trainable) or Tensor::constant. Every op
// checks its forward result for NaN/Inf and throws NumericError on failure.
//
// backward() accumulates into the grad of every reachable parameter; calling
// it twice without zero_grad() sums both contributions. Sparse operands and
// linear operators are held by shared_ptr so a tape never dangles.

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "np2l/matrix.hpp"

namespace np2l {

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace ad {

struct Node {
  Matrix value;
  Matrix grad;  // empty until the first backward pass that reaches this node
  bool requires_grad = false;
  bool leaf = true;
  std::string op;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(const Node&)> backward_fn;
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor parameter(Matrix value);
  static Tensor constant(Matrix value);

  bool defined() const { return node_ != nullptr; }
  const Matrix& value() const { return node_->value; }
  /// Mutable access for optimizers; only valid on leaves.
  Matrix& mutable_value();
  const Matrix& grad() const { return node_->grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  bool requires_grad() const { return node_->requires_grad; }
  bool is_leaf() const { return node_->leaf; }
  std::size_t rows() const { return node_->value.rows(); }
  std::size_t cols() const { return node_->value.cols(); }
  const std::string& op() const { return node_->op; }

  /// Value of a 1x1 tensor.
  double item() const;
  void zero_grad();

  /// Reverse sweep from a scalar loss. Throws std::invalid_argument if the
  /// tensor is not 1x1 and std::logic_error if no parameter is reachable.
  void backward() const;

  const std::shared_ptr<Node>& node() const { return node_; }
  static Tensor from_node(std::shared_ptr<Node> n) { return Tensor(std::move(n)); }

 private:
  explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}
  std::shared_ptr<Node> node_;
};

/// Adds g into a node's gradient, allocating it on first use.
void accumulate(Node& node, const Matrix& g);

// --- linear algebra -------------------------------------------------------
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
/// s * d for a constant sparse s; differentiable with respect to d.
Tensor spmm(const SparseRef& s, const Tensor& d);
/// op(d) for a constant linear operator; differentiable with respect to d.
Tensor propagate(const OperatorRef& op, const Tensor& d);

// --- elementwise ------------------------------------------------------------
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor square(const Tensor& a);

// --- structural -------------------------------------------------------------
/// gate (n x 1) broadcast across the columns of h (n x d).
Tensor mul_column(const Tensor& gate, const Tensor& h);
/// Rows scaled to L2 norm `target`; zero rows stay zero.
Tensor row_normalize(const Tensor& a, double target);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t count);

// --- reductions and losses ------------------------------------------------
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

struct NodePair {
  std::uint32_t u;
  std::uint32_t v;
  friend bool operator==(const NodePair&, const NodePair&) = default;
  friend auto operator<=>(const NodePair&, const NodePair&) = default;
};

/// out[p] = <z[u_p], z[v_p]>, an m x 1 column of inner-product logits.
Tensor pair_dot(const Tensor& z, const std::vector<NodePair>& pairs);
/// Mean binary cross entropy between sigmoid(logits) and targets, computed in
/// the log-sum-exp stable form max(x,0) - x*t + log(1 + exp(-|x|)).
Tensor bce_with_logits(const Tensor& logits, const Matrix& targets);
/// Mean softmax cross entropy over the listed rows.
Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels,
                             const std::vector<std::uint32_t>& rows);

}  // namespace ad
}  // namespace np2l
