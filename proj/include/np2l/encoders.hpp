#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "np2l/autograd.hpp"
#include "np2l/graph.hpp"
#include "np2l/rng.hpp"

namespace np2l {

enum class Activation { None, ReLU };

ad::Tensor activate(const ad::Tensor& x, Activation act);

/// Glorot-uniform (in x out) trainable weight.
ad::Tensor glorot(std::size_t in, std::size_t out, Rng& rng);

/// One graph convolution act(A_hat * H * W), no bias.
struct GcnLayer {
  ad::Tensor weight;
  OperatorRef adj;  // normalized adjacency, usually gcn_normalized_adjacency
  Activation act = Activation::ReLU;

  ad::Tensor forward(const ad::Tensor& h) const;
  /// Same map with a constant sparse input (node features).
  ad::Tensor forward(const SparseRef& x) const;
};

ad::Tensor gcn_forward(const GcnLayer& layer, const ad::Tensor& h);

/// Norm-rescale then propagate:
///   L_v = s * Z_v / |Z_v|   (L_v = 0 when Z_v = 0)
///   Z'_v = L_v / (d_v + 1) + sum_{u in N(v)} L_u / sqrt((d_v + 1)(d_u + 1))
/// which is A_hat * L with the self-loop normalized adjacency.
struct GncnLayer {
  double scale = 1.8;
  OperatorRef adj;

  ad::Tensor forward(const ad::Tensor& z) const;
};

/// Builds A_hat from `g` and applies one GNCN step.
ad::Tensor gncn_forward(const GncnLayer& layer, const ad::Tensor& z, const Graph& g);

// ---------------------------------------------------------------------------
// Encoders

enum class Head { GAE, VGAE, None };

struct NamedTensor {
  std::string name;
  ad::Tensor tensor;
};

struct EncoderOutput {
  ad::Tensor mu;      // embedding (GAE) or posterior mean (VGAE)
  ad::Tensor logvar;  // VGAE only; undefined otherwise
};

/// Node encoder with its graph views and input features bound at construction.
class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual EncoderOutput encode() const = 0;
  virtual std::vector<NamedTensor> parameters() const = 0;
  virtual std::size_t output_dim() const = 0;
  virtual Head head() const = 0;
};

/// Encoder whose weights can run over any adjacency view; the two-stream
/// wrapper evaluates one of these on the positive and the negative view.
class AdjacencyEncoder : public Encoder {
 public:
  explicit AdjacencyEncoder(OperatorRef adj) : adj_(std::move(adj)) {}
  EncoderOutput encode() const override { return encode_with(adj_); }
  virtual EncoderOutput encode_with(const OperatorRef& adj) const = 0;
  const OperatorRef& adjacency() const { return adj_; }

 private:
  OperatorRef adj_;
};

struct EncoderDims {
  std::size_t in = 0;
  std::size_t hidden = 128;
  std::size_t out = 128;
};

/// Two stacked GCN layers, ReLU between them, none after. For VGAE the first
/// layer is shared and two second-layer heads produce mu and log sigma^2.
class GcnEncoder final : public AdjacencyEncoder {
 public:
  GcnEncoder(SparseRef x, OperatorRef adj, EncoderDims dims, Head head, Rng& rng);
  EncoderOutput encode_with(const OperatorRef& adj) const override;
  std::vector<NamedTensor> parameters() const override;
  std::size_t output_dim() const override { return dims_.out; }
  Head head() const override { return head_; }

 private:
  SparseRef x_;
  EncoderDims dims_;
  Head head_;
  ad::Tensor w0_, w_mu_, w_logvar_;
};

/// Linear projection followed by one GNCN propagation. The VGAE variant
/// propagates a second, unnormalized projection as log sigma^2.
class GncnEncoder final : public AdjacencyEncoder {
 public:
  GncnEncoder(SparseRef x, OperatorRef adj, EncoderDims dims, Head head, double scale, Rng& rng);
  EncoderOutput encode_with(const OperatorRef& adj) const override;
  std::vector<NamedTensor> parameters() const override;
  std::size_t output_dim() const override { return dims_.out; }
  Head head() const override { return head_; }
  double scale() const { return scale_; }

 private:
  SparseRef x_;
  EncoderDims dims_;
  Head head_;
  double scale_;
  ad::Tensor w_mu_, w_logvar_;
};

// ---------------------------------------------------------------------------
// Reconstruction losses

enum class ReconLoss { BCE, MSE };

/// Entries of A the decoder is scored against: either the dense n x n target
/// or sampled positive/negative pairs.
struct ReconTargets {
  std::optional<Matrix> dense;  // n x n adjacency when set
  std::vector<NodePair> positives;
  std::vector<NodePair> negatives;
};

/// Exact dense targets: every ordered entry (i, j) of A, diagonal included.
ReconTargets dense_targets(const Graph& g);
/// Each undirected edge once as a positive plus an equal number of
/// uniformly drawn non-edges (i != j).
ReconTargets sampled_targets(const Graph& g, Rng& rng);

/// Mean loss between A_ij and sigmoid(z_i . z_j) over the target entries.
ad::Tensor reconstruction_loss(const ad::Tensor& z, const ReconTargets& t,
                               ReconLoss kind = ReconLoss::BCE);

/// GAE objective.
ad::Tensor gae_loss(const ad::Tensor& z, const ReconTargets& t, ReconLoss kind = ReconLoss::BCE);

/// Non-negative Gaussian KL to N(0, I), averaged over nodes:
///   -(1/2n) sum_i sum_d (1 + logvar - mu^2 - exp(logvar))
ad::Tensor kl_divergence(const ad::Tensor& mu, const ad::Tensor& logvar);

/// z = mu + exp(logvar / 2) * eps with constant eps.
ad::Tensor reparameterize(const ad::Tensor& mu, const ad::Tensor& logvar, const Matrix& eps);

/// Standard-normal noise of the given shape.
Matrix gaussian_noise(std::size_t rows, std::size_t cols, Rng& rng);

/// VGAE objective: reconstruction(z) + kl_weight * KL with z reparameterized
/// from eps. kl_weight < 0 selects 1/n.
ad::Tensor vgae_loss(const EncoderOutput& out, const Matrix& eps, const ReconTargets& t,
                     double kl_weight = -1.0, ReconLoss kind = ReconLoss::BCE);

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  int epochs = 200;
  double lr = 0.01;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
  bool dense_loss = false;
  ReconLoss loss = ReconLoss::BCE;
  double kl_weight = -1.0;
  /// Optional model-selection score evaluated on the noise-free embedding after
  /// every epoch; the returned embedding is the best-scoring one.
  std::function<double(const Matrix& z)> validate;
};

struct TrainResult {
  Matrix z;  // mu for VGAE
  std::vector<double> losses;
  int best_epoch = -1;
  double best_score = 0.0;
};

/// Unsupervised reconstruction training on `train_graph` (the graph whose
/// edges are targets). Throws NumericError if the loss goes non-finite.
TrainResult train_embedding(Encoder& model, const Graph& train_graph, const TrainConfig& cfg);

/// Writes one embedding per line, comma-separated.
void write_embeddings_csv(const Matrix& z, const std::string& path);

}  // namespace np2l
