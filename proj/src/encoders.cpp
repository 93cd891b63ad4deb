#include "np2l/encoders.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <stdexcept>

#include "np2l/adam.hpp"

namespace np2l {

using ad::Tensor;

Tensor activate(const Tensor& x, Activation act) {
  return act == Activation::ReLU ? ad::relu(x) : x;
}

Tensor glorot(std::size_t in, std::size_t out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(in + out));
  Matrix w(in, out);
  for (double& v : w.data()) v = rng.uniform(-a, a);
  return Tensor::parameter(std::move(w));
}

// ---------------------------------------------------------------------------
// layers

Tensor GcnLayer::forward(const Tensor& h) const {
  if (h.rows() != adj->cols()) {
    throw std::invalid_argument("gcn_forward: H has " + std::to_string(h.rows()) +
                                " rows, adjacency is " + shape_string(adj->rows(), adj->cols()));
  }
  return activate(ad::propagate(adj, ad::matmul(h, weight)), act);
}

Tensor GcnLayer::forward(const SparseRef& x) const {
  if (x->rows() != adj->cols()) {
    throw std::invalid_argument("gcn_forward: X has " + std::to_string(x->rows()) +
                                " rows, adjacency is " + shape_string(adj->rows(), adj->cols()));
  }
  return activate(ad::propagate(adj, ad::spmm(x, weight)), act);
}

Tensor gcn_forward(const GcnLayer& layer, const Tensor& h) { return layer.forward(h); }

Tensor GncnLayer::forward(const Tensor& z) const {
  if (z.rows() != adj->cols()) {
    throw std::invalid_argument("gncn_forward: Z has " + std::to_string(z.rows()) +
                                " rows, adjacency is " + shape_string(adj->rows(), adj->cols()));
  }
  return ad::propagate(adj, ad::row_normalize(z, scale));
}

Tensor gncn_forward(const GncnLayer& layer, const Tensor& z, const Graph& g) {
  GncnLayer bound{layer.scale, std::make_shared<SparseMatrix>(gcn_normalized_adjacency(g))};
  return bound.forward(z);
}

// ---------------------------------------------------------------------------
// encoders

GcnEncoder::GcnEncoder(SparseRef x, OperatorRef adj, EncoderDims dims, Head head, Rng& rng)
    : AdjacencyEncoder(std::move(adj)), x_(std::move(x)), dims_(dims), head_(head) {
  if (dims_.in == 0) dims_.in = x_->cols();
  if (dims_.in != x_->cols()) throw std::invalid_argument("GcnEncoder: input width mismatch");
  w0_ = glorot(dims_.in, dims_.hidden, rng);
  w_mu_ = glorot(dims_.hidden, dims_.out, rng);
  if (head_ == Head::VGAE) w_logvar_ = glorot(dims_.hidden, dims_.out, rng);
}

EncoderOutput GcnEncoder::encode_with(const OperatorRef& adj) const {
  const GcnLayer first{w0_, adj, Activation::ReLU};
  const Tensor h = first.forward(x_);
  EncoderOutput out;
  out.mu = GcnLayer{w_mu_, adj, Activation::None}.forward(h);
  if (head_ == Head::VGAE) out.logvar = GcnLayer{w_logvar_, adj, Activation::None}.forward(h);
  return out;
}

std::vector<NamedTensor> GcnEncoder::parameters() const {
  std::vector<NamedTensor> p{{"gcn.w0", w0_}, {"gcn.w_mu", w_mu_}};
  if (head_ == Head::VGAE) p.push_back({"gcn.w_logvar", w_logvar_});
  return p;
}

GncnEncoder::GncnEncoder(SparseRef x, OperatorRef adj, EncoderDims dims, Head head, double scale,
                         Rng& rng)
    : AdjacencyEncoder(std::move(adj)), x_(std::move(x)), dims_(dims), head_(head), scale_(scale) {
  if (!(scale_ > 0.0)) throw std::invalid_argument("GncnEncoder: scale must be positive");
  if (dims_.in == 0) dims_.in = x_->cols();
  if (dims_.in != x_->cols()) throw std::invalid_argument("GncnEncoder: input width mismatch");
  w_mu_ = glorot(dims_.in, dims_.out, rng);
  if (head_ == Head::VGAE) w_logvar_ = glorot(dims_.in, dims_.out, rng);
}

EncoderOutput GncnEncoder::encode_with(const OperatorRef& adj) const {
  EncoderOutput out;
  out.mu = GncnLayer{scale_, adj}.forward(ad::spmm(x_, w_mu_));
  if (head_ == Head::VGAE) out.logvar = ad::propagate(adj, ad::spmm(x_, w_logvar_));
  return out;
}

std::vector<NamedTensor> GncnEncoder::parameters() const {
  std::vector<NamedTensor> p{{"gncn.w_mu", w_mu_}};
  if (head_ == Head::VGAE) p.push_back({"gncn.w_logvar", w_logvar_});
  return p;
}

// ---------------------------------------------------------------------------
// losses

ReconTargets dense_targets(const Graph& g) {
  ReconTargets t;
  t.dense = g.adjacency().to_dense();
  return t;
}

ReconTargets sampled_targets(const Graph& g, Rng& rng) {
  const std::size_t n = g.num_nodes();
  ReconTargets t;
  t.positives = g.edges();
  const std::size_t available = n * (n - 1) / 2 - g.num_edges();
  if (available == 0) return t;
  t.negatives.reserve(t.positives.size());
  while (t.negatives.size() < t.positives.size()) {
    const auto a = static_cast<NodeId>(rng.below(n));
    const auto b = static_cast<NodeId>(rng.below(n));
    if (a == b || g.has_edge(a, b)) continue;
    t.negatives.push_back(canonical(a, b));
  }
  return t;
}

namespace {

Tensor loss_on_logits(const Tensor& logits, const Matrix& targets, ReconLoss kind) {
  if (kind == ReconLoss::BCE) return ad::bce_with_logits(logits, targets);
  return ad::mean(ad::square(ad::sub(ad::sigmoid(logits), Tensor::constant(targets))));
}

}  // namespace

Tensor reconstruction_loss(const Tensor& z, const ReconTargets& t, ReconLoss kind) {
  if (t.dense) {
    if (t.dense->rows() != z.rows() || t.dense->cols() != z.rows())
      throw std::invalid_argument("reconstruction_loss: dense target does not match Z");
    return loss_on_logits(ad::matmul(z, ad::transpose(z)), *t.dense, kind);
  }
  std::vector<NodePair> pairs = t.positives;
  pairs.insert(pairs.end(), t.negatives.begin(), t.negatives.end());
  if (pairs.empty()) throw std::invalid_argument("reconstruction_loss: no target entries");
  Matrix targets(pairs.size(), 1, 0.0);
  for (std::size_t i = 0; i < t.positives.size(); ++i) targets[i] = 1.0;
  return loss_on_logits(ad::pair_dot(z, pairs), targets, kind);
}

Tensor gae_loss(const Tensor& z, const ReconTargets& t, ReconLoss kind) {
  return reconstruction_loss(z, t, kind);
}

Tensor kl_divergence(const Tensor& mu, const Tensor& logvar) {
  if (!mu.value().same_shape(logvar.value()))
    throw std::invalid_argument("kl_divergence: mu and logvar shapes differ");
  // 1 + logvar - mu^2 - exp(logvar)
  const Tensor inner =
      ad::sub(ad::sub(ad::add_scalar(logvar, 1.0), ad::square(mu)), ad::exp(logvar));
  return ad::scale(ad::sum(inner), -0.5 / static_cast<double>(mu.rows()));
}

Tensor reparameterize(const Tensor& mu, const Tensor& logvar, const Matrix& eps) {
  const Tensor sigma = ad::exp(ad::scale(logvar, 0.5));
  return ad::add(mu, ad::mul(sigma, Tensor::constant(eps)));
}

Matrix gaussian_noise(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.normal();
  return m;
}

Tensor vgae_loss(const EncoderOutput& out, const Matrix& eps, const ReconTargets& t,
                 double kl_weight, ReconLoss kind) {
  if (!out.logvar.defined()) throw std::invalid_argument("vgae_loss: encoder has no logvar head");
  const double w = kl_weight < 0.0 ? 1.0 / static_cast<double>(out.mu.rows()) : kl_weight;
  const Tensor z = reparameterize(out.mu, out.logvar, eps);
  return ad::add(reconstruction_loss(z, t, kind), ad::scale(kl_divergence(out.mu, out.logvar), w));
}

// ---------------------------------------------------------------------------
// training

TrainResult train_embedding(Encoder& model, const Graph& train_graph, const TrainConfig& cfg) {
  if (cfg.epochs < 0) throw std::invalid_argument("train_embedding: negative epoch count");
  std::vector<Tensor> params;
  for (const auto& p : model.parameters()) params.push_back(p.tensor);
  Adam opt(params, AdamOptions{.lr = cfg.lr, .weight_decay = cfg.weight_decay});
  Rng sampler = Rng::derive(cfg.seed, "train_embedding.sampling");
  Rng noise = Rng::derive(cfg.seed, "train_embedding.noise");
  const ReconTargets dense = cfg.dense_loss ? dense_targets(train_graph) : ReconTargets{};

  TrainResult result;
  result.best_score = -std::numeric_limits<double>::infinity();
  if (cfg.epochs == 0 || !cfg.validate) result.z = model.encode().mu.value();
  if (cfg.epochs == 0 && cfg.validate) {
    result.best_score = cfg.validate(result.z);
    result.best_epoch = 0;
  }

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    opt.zero_grad();
    try {
      const ReconTargets targets = cfg.dense_loss ? dense : sampled_targets(train_graph, sampler);
      const EncoderOutput out = model.encode();
      Tensor loss;
      if (model.head() == Head::VGAE) {
        const Matrix eps = gaussian_noise(out.mu.rows(), out.mu.cols(), noise);
        loss = vgae_loss(out, eps, targets, cfg.kl_weight, cfg.loss);
      } else {
        loss = gae_loss(out.mu, targets, cfg.loss);
      }
      result.losses.push_back(loss.item());
      loss.backward();
      opt.step();
    } catch (const NumericError& e) {
      throw NumericError("train_embedding: epoch " + std::to_string(epoch) + ": " + e.what());
    }
    if (cfg.validate) {
      Matrix z = model.encode().mu.value();
      const double score = cfg.validate(z);
      if (score > result.best_score) {
        result.best_score = score;
        result.best_epoch = epoch;
        result.z = std::move(z);
      }
    }
  }
  if (!cfg.validate && cfg.epochs > 0) {
    result.z = model.encode().mu.value();
    result.best_epoch = cfg.epochs;
  }
  return result;
}

void write_embeddings_csv(const Matrix& z, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << std::setprecision(17);
  for (std::size_t r = 0; r < z.rows(); ++r) {
    for (std::size_t c = 0; c < z.cols(); ++c) {
      if (c) out << ',';
      out << z(r, c);
    }
    out << '\n';
  }
}

}  // namespace np2l
