#include "np2l/signed_gnn.hpp"

#include <cmath>
#include <stdexcept>

namespace np2l {

using ad::Tensor;

namespace {

void check_rows(const Matrix& x, std::size_t n, const char* who) {
  if (x.rows() != n)
    throw std::invalid_argument(std::string(who) + ": expected " + std::to_string(n) + " rows, got " +
                                std::to_string(x.rows()));
}

void scale_rows(Matrix& x, const std::vector<double>& s) {
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (double& v : x.row(r)) v *= s[r];
}

std::vector<double> inverse_degrees(const NegativeEdges& neg) {
  std::vector<double> inv(neg.num_nodes(), 0.0);
  for (std::size_t v = 0; v < inv.size(); ++v)
    if (neg.degree(static_cast<NodeId>(v)) > 0) inv[v] = 1.0 / static_cast<double>(neg.degree(static_cast<NodeId>(v)));
  return inv;
}

}  // namespace

Matrix NegativeMeanOperator::apply(const Matrix& x) const {
  check_rows(x, neg_->num_nodes(), "NegativeMeanOperator");
  Matrix out = neg_->aggregate_sum(x);
  scale_rows(out, inverse_degrees(*neg_));
  return out;
}

Matrix NegativeMeanOperator::apply_transpose(const Matrix& x) const {
  check_rows(x, neg_->num_nodes(), "NegativeMeanOperator");
  Matrix scaled = x;
  scale_rows(scaled, inverse_degrees(*neg_));
  return neg_->aggregate_sum(scaled);
}

NegativeSymOperator::NegativeSymOperator(NegativeRef neg) : neg_(std::move(neg)) {
  inv_sqrt_.resize(neg_->num_nodes());
  for (std::size_t v = 0; v < inv_sqrt_.size(); ++v)
    inv_sqrt_[v] = 1.0 / std::sqrt(static_cast<double>(neg_->degree(static_cast<NodeId>(v)) + 1));
}

Matrix NegativeSymOperator::apply(const Matrix& x) const {
  check_rows(x, neg_->num_nodes(), "NegativeSymOperator");
  Matrix scaled = x;
  scale_rows(scaled, inv_sqrt_);
  Matrix out = neg_->aggregate_sum(scaled);
  out += scaled;
  scale_rows(out, inv_sqrt_);
  return out;
}

Matrix negative_aggregation_over_cliques(const NegativeEdges& neg, const Matrix& h) {
  return NegativeMeanOperator(std::make_shared<NegativeEdges>(neg)).apply(h);
}

SignedViews make_signed_views(const SignedGraph& s) {
  auto neg = std::make_shared<const NegativeEdges>(s.negative);
  SignedViews v;
  v.pos_mean = std::make_shared<SparseMatrix>(mean_adjacency(s.positive));
  v.pos_sym = std::make_shared<SparseMatrix>(gcn_normalized_adjacency(s.positive));
  v.neg_mean = std::make_shared<NegativeMeanOperator>(neg);
  v.neg_sym = std::make_shared<NegativeSymOperator>(neg);
  return v;
}

// ---------------------------------------------------------------------------

SgcnLayer make_sgcn_layer(std::size_t in, std::size_t out, Activation act, Rng& rng) {
  SgcnLayer l;
  l.w_pos = glorot(3 * in, out, rng);
  l.w_neg = glorot(3 * in, out, rng);
  l.act = act;
  return l;
}

namespace {

struct Blocks {
  Tensor nbr, cross, self;
};

Blocks split(const Tensor& w, std::size_t in) {
  return {ad::slice_rows(w, 0, in), ad::slice_rows(w, in, in), ad::slice_rows(w, 2 * in, in)};
}

}  // namespace

SgcnState sgcn_layer_forward(const SgcnLayer& layer, const SparseRef& x, const OperatorRef& pos_mean,
                             const OperatorRef& neg_mean) {
  const std::size_t in = layer.in_dim();
  if (x->cols() != in)
    throw std::invalid_argument("sgcn: input width " + std::to_string(x->cols()) + ", layer expects " +
                                std::to_string(in));
  const Blocks p = split(layer.w_pos, in);
  const Blocks q = split(layer.w_neg, in);
  // Both states start at X, so P X W = P (X W).
  SgcnState out;
  out.pos = activate(ad::add(ad::add(ad::propagate(pos_mean, ad::spmm(x, p.nbr)),
                                     ad::propagate(neg_mean, ad::spmm(x, p.cross))),
                             ad::spmm(x, p.self)),
                     layer.act);
  out.neg = activate(ad::add(ad::add(ad::propagate(pos_mean, ad::spmm(x, q.nbr)),
                                     ad::propagate(neg_mean, ad::spmm(x, q.cross))),
                             ad::spmm(x, q.self)),
                     layer.act);
  return out;
}

SgcnState sgcn_layer_forward(const SgcnLayer& layer, const SgcnState& in, const OperatorRef& pos_mean,
                             const OperatorRef& neg_mean) {
  const std::size_t d = layer.in_dim();
  if (in.pos.cols() != d || in.neg.cols() != d)
    throw std::invalid_argument("sgcn: state width does not match layer");
  const Blocks p = split(layer.w_pos, d);
  const Blocks q = split(layer.w_neg, d);
  SgcnState out;
  out.pos = activate(ad::add(ad::add(ad::matmul(ad::propagate(pos_mean, in.pos), p.nbr),
                                     ad::matmul(ad::propagate(neg_mean, in.neg), p.cross)),
                             ad::matmul(in.pos, p.self)),
                     layer.act);
  out.neg = activate(ad::add(ad::add(ad::matmul(ad::propagate(pos_mean, in.neg), q.nbr),
                                     ad::matmul(ad::propagate(neg_mean, in.pos), q.cross)),
                             ad::matmul(in.neg, q.self)),
                     layer.act);
  return out;
}

Tensor sgcn_forward(const std::vector<SgcnLayer>& layers, const SignedGraph& s, const SparseRef& x) {
  if (layers.empty()) throw std::invalid_argument("sgcn_forward: no layers");
  if (x->rows() != s.num_nodes()) throw std::invalid_argument("sgcn_forward: feature rows differ from node count");
  const SignedViews v = make_signed_views(s);
  SgcnState st = sgcn_layer_forward(layers.front(), x, v.pos_mean, v.neg_mean);
  for (std::size_t i = 1; i < layers.size(); ++i) st = sgcn_layer_forward(layers[i], st, v.pos_mean, v.neg_mean);
  return ad::concat_cols({st.pos, st.neg});
}

SgcnEncoder::SgcnEncoder(SparseRef x, OperatorRef pos_mean, OperatorRef neg_mean, EncoderDims dims,
                         Head head, Rng& rng, int layers)
    : x_(std::move(x)),
      pos_mean_(std::move(pos_mean)),
      neg_mean_(std::move(neg_mean)),
      dims_(dims),
      head_(head) {
  if (layers < 1) throw std::invalid_argument("SgcnEncoder: need at least one layer");
  if (dims_.in == 0) dims_.in = x_->cols();
  if (dims_.in != x_->cols()) throw std::invalid_argument("SgcnEncoder: input width mismatch");
  std::size_t in = dims_.in;
  for (int l = 0; l < layers; ++l) {
    const bool last = l + 1 == layers;
    const std::size_t out = last ? dims_.out : dims_.hidden;
    layers_.push_back(make_sgcn_layer(in, out, last ? Activation::None : Activation::ReLU, rng));
    if (last && head_ == Head::VGAE) logvar_ = make_sgcn_layer(in, out, Activation::None, rng);
    in = out;
  }
}

EncoderOutput SgcnEncoder::encode() const {
  SgcnState st = sgcn_layer_forward(layers_.front(), x_, pos_mean_, neg_mean_);
  SgcnState before_last = st;
  for (std::size_t i = 1; i < layers_.size(); ++i) {
    before_last = st;
    st = sgcn_layer_forward(layers_[i], st, pos_mean_, neg_mean_);
  }
  EncoderOutput out;
  out.mu = ad::concat_cols({st.pos, st.neg});
  if (head_ == Head::VGAE) {
    const SgcnState lv = layers_.size() == 1
                             ? sgcn_layer_forward(logvar_, x_, pos_mean_, neg_mean_)
                             : sgcn_layer_forward(logvar_, before_last, pos_mean_, neg_mean_);
    out.logvar = ad::concat_cols({lv.pos, lv.neg});
  }
  return out;
}

std::vector<NamedTensor> SgcnEncoder::parameters() const {
  std::vector<NamedTensor> p;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    p.push_back({"sgcn." + std::to_string(i) + ".w_pos", layers_[i].w_pos});
    p.push_back({"sgcn." + std::to_string(i) + ".w_neg", layers_[i].w_neg});
  }
  if (head_ == Head::VGAE) {
    p.push_back({"sgcn.logvar.w_pos", logvar_.w_pos});
    p.push_back({"sgcn.logvar.w_neg", logvar_.w_neg});
  }
  return p;
}

// ---------------------------------------------------------------------------

Tensor two_stream_blend(const Tensor& a, const Tensor& pos, const Tensor& neg) {
  const Tensor keep = ad::add_scalar(ad::scale(a, -1.0), 1.0);
  return ad::add(ad::mul_column(keep, pos), ad::mul_column(a, neg));
}

TwoStreamEncoder::TwoStreamEncoder(std::shared_ptr<AdjacencyEncoder> base, OperatorRef pos_adj,
                                   OperatorRef neg_adj, GateMode gate, Rng& gate_rng,
                                   std::shared_ptr<AdjacencyEncoder> neg_base)
    : base_(std::move(base)),
      neg_base_(std::move(neg_base)),
      pos_adj_(std::move(pos_adj)),
      neg_adj_(std::move(neg_adj)),
      gate_(gate) {
  if (!base_) throw std::invalid_argument("TwoStreamEncoder: missing base encoder");
  if (neg_base_ && neg_base_->output_dim() != base_->output_dim())
    throw std::invalid_argument("TwoStreamEncoder: stream widths differ");
  if (pos_adj_->rows() != neg_adj_->rows())
    throw std::invalid_argument("TwoStreamEncoder: adjacency views differ in size");
  w_att_ = glorot(base_->output_dim(), 1, gate_rng);
}

Tensor TwoStreamEncoder::gate(const Tensor& neg_out) const {
  return ad::sigmoid(ad::matmul(neg_out, w_att_));
}

EncoderOutput TwoStreamEncoder::encode() const {
  const AdjacencyEncoder& neg_model = neg_base_ ? *neg_base_ : *base_;
  switch (gate_) {
    case GateMode::Closed: return base_->encode_with(pos_adj_);
    case GateMode::Open: return neg_model.encode_with(neg_adj_);
    case GateMode::Learned: break;
  }
  const EncoderOutput p = base_->encode_with(pos_adj_);
  const EncoderOutput q = neg_model.encode_with(neg_adj_);
  const Tensor a = gate(q.mu);
  EncoderOutput out;
  out.mu = two_stream_blend(a, p.mu, q.mu);
  if (p.logvar.defined()) out.logvar = two_stream_blend(a, p.logvar, q.logvar);
  return out;
}

std::vector<NamedTensor> TwoStreamEncoder::parameters() const {
  std::vector<NamedTensor> p;
  if (gate_ != GateMode::Open || !neg_base_) p = base_->parameters();
  if (neg_base_ && gate_ != GateMode::Closed) {
    for (auto t : neg_base_->parameters()) {
      t.name = "neg." + t.name;
      p.push_back(std::move(t));
    }
  }
  if (gate_ == GateMode::Learned) p.push_back({"two_stream.w_att", w_att_});
  return p;
}

Matrix TwoStreamEncoder::gate_values() const {
  switch (gate_) {
    case GateMode::Closed: return Matrix(pos_adj_->rows(), 1, 0.0);
    case GateMode::Open: return Matrix(pos_adj_->rows(), 1, 1.0);
    case GateMode::Learned: break;
  }
  const AdjacencyEncoder& neg_model = neg_base_ ? *neg_base_ : *base_;
  return gate(neg_model.encode_with(neg_adj_).mu).value();
}

}  // namespace np2l
