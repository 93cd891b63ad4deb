#pragma once

#include <memory>

#include "np2l/encoders.hpp"
#include "np2l/np2e.hpp"

namespace np2l {

// ---------------------------------------------------------------------------
// Negative-edge aggregation without materializing N

using NegativeRef = std::shared_ptr<const NegativeEdges>;

/// out_v = (1 / |N(v)|) sum_{u in N(v)} h_u over E^-, zero when v has no
/// negative neighbor. Transpose is N D^{-1}.
class NegativeMeanOperator final : public LinearOperator {
 public:
  explicit NegativeMeanOperator(NegativeRef neg) : neg_(std::move(neg)) {}
  std::size_t rows() const override { return neg_->num_nodes(); }
  std::size_t cols() const override { return neg_->num_nodes(); }
  Matrix apply(const Matrix& x) const override;
  Matrix apply_transpose(const Matrix& x) const override;

 private:
  NegativeRef neg_;
};

/// D^{-1/2} (N + I) D^{-1/2} with D the degree of N + I; symmetric.
class NegativeSymOperator final : public LinearOperator {
 public:
  explicit NegativeSymOperator(NegativeRef neg);
  std::size_t rows() const override { return neg_->num_nodes(); }
  std::size_t cols() const override { return neg_->num_nodes(); }
  Matrix apply(const Matrix& x) const override;
  Matrix apply_transpose(const Matrix& x) const override { return apply(x); }

 private:
  NegativeRef neg_;
  std::vector<double> inv_sqrt_;
};

/// Mean of H over each node's E^- neighbors.
Matrix negative_aggregation_over_cliques(const NegativeEdges& neg, const Matrix& h);

/// Views of a signed graph consumed by the layers below.
struct SignedViews {
  OperatorRef pos_mean;  // row-mean over E^+
  OperatorRef neg_mean;  // row-mean over E^-
  OperatorRef pos_sym;   // GCN normalization of E^+
  OperatorRef neg_sym;   // GCN normalization of E^-
};

SignedViews make_signed_views(const SignedGraph& s);

// ---------------------------------------------------------------------------
// SGCN

/// One signed layer. Each weight is (3 d_in) x d_out, read as three row
/// blocks applied to [positive-neighbor mean, negative-neighbor mean, self]:
///   pos' = act(W_pos [P pos, N neg, pos])
///   neg' = act(W_neg [P neg, N pos, neg])
struct SgcnLayer {
  ad::Tensor w_pos;
  ad::Tensor w_neg;
  Activation act = Activation::ReLU;

  std::size_t in_dim() const { return w_pos.rows() / 3; }
  std::size_t out_dim() const { return w_pos.cols(); }
};

SgcnLayer make_sgcn_layer(std::size_t in, std::size_t out, Activation act, Rng& rng);

struct SgcnState {
  ad::Tensor pos;
  ad::Tensor neg;
};

/// First layer, both states seeded from the sparse features.
SgcnState sgcn_layer_forward(const SgcnLayer& layer, const SparseRef& x, const OperatorRef& pos_mean,
                             const OperatorRef& neg_mean);
SgcnState sgcn_layer_forward(const SgcnLayer& layer, const SgcnState& in, const OperatorRef& pos_mean,
                             const OperatorRef& neg_mean);

/// Stacked layers; the result is [pos, neg] of the last layer.
ad::Tensor sgcn_forward(const std::vector<SgcnLayer>& layers, const SignedGraph& s, const SparseRef& x);

/// Stacked SGCN layers, ReLU between layers and none after the last.
/// Output width is twice the per-stream width `dims.out`. The VGAE head adds
/// a second last layer for log sigma^2.
class SgcnEncoder final : public Encoder {
 public:
  SgcnEncoder(SparseRef x, OperatorRef pos_mean, OperatorRef neg_mean, EncoderDims dims, Head head,
              Rng& rng, int layers = 2);
  EncoderOutput encode() const override;
  std::vector<NamedTensor> parameters() const override;
  std::size_t output_dim() const override { return 2 * dims_.out; }
  Head head() const override { return head_; }

 private:
  SparseRef x_;
  OperatorRef pos_mean_, neg_mean_;
  EncoderDims dims_;
  Head head_;
  std::vector<SgcnLayer> layers_;
  SgcnLayer logvar_;
};

// ---------------------------------------------------------------------------
// Two-stream wrapper

enum class GateMode {
  Learned,  // a = sigmoid(f(X, A^-) W_att), one scalar per node
  Closed,   // a = 0: positive stream only
  Open,     // a = 1: negative stream only
};

/// Z = (1 - a) f(X, A^+) + a f(X, A^-). The same base weights run over both
/// views unless a separate negative-stream encoder is supplied.
class TwoStreamEncoder final : public Encoder {
 public:
  TwoStreamEncoder(std::shared_ptr<AdjacencyEncoder> base, OperatorRef pos_adj, OperatorRef neg_adj,
                   GateMode gate, Rng& gate_rng, std::shared_ptr<AdjacencyEncoder> neg_base = nullptr);
  EncoderOutput encode() const override;
  std::vector<NamedTensor> parameters() const override;
  std::size_t output_dim() const override { return base_->output_dim(); }
  Head head() const override { return base_->head(); }

  /// Per-node gate values for the current weights (n x 1).
  Matrix gate_values() const;
  const ad::Tensor& gate_weight() const { return w_att_; }
  GateMode gate_mode() const { return gate_; }

 private:
  ad::Tensor gate(const ad::Tensor& neg_out) const;

  std::shared_ptr<AdjacencyEncoder> base_;
  std::shared_ptr<AdjacencyEncoder> neg_base_;
  OperatorRef pos_adj_, neg_adj_;
  GateMode gate_;
  ad::Tensor w_att_;
};

/// Blend with an explicit gate tensor (n x 1): (1 - a) pos + a neg.
ad::Tensor two_stream_blend(const ad::Tensor& a, const ad::Tensor& pos, const ad::Tensor& neg);

}  // namespace np2l
