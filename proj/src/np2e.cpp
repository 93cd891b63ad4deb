#include "np2l/np2e.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "np2l/rng.hpp"

namespace np2l {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

struct Assignment {
  std::vector<int> label;
  std::vector<double> dist;  // squared distance to the assigned center
  double inertia = 0.0;
};

Assignment assign(const Matrix& z, const Matrix& centers) {
  const std::size_t n = z.rows();
  const std::size_t k = centers.rows();
  Assignment a;
  a.label.assign(n, 0);
  a.dist.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (std::size_t j = 0; j < k; ++j) {
      const double d = squared_distance(z.row(i), centers.row(j));
      if (d < best) {
        best = d;
        arg = static_cast<int>(j);
      }
    }
    a.label[i] = arg;
    a.dist[i] = best;
    a.inertia += best;
  }
  return a;
}

Matrix plus_plus_seeds(const Matrix& z, std::size_t k, Rng& rng) {
  const std::size_t n = z.rows();
  const std::size_t d = z.cols();
  Matrix centers(k, d);
  std::vector<bool> chosen(n, false);
  auto take = [&](std::size_t row, std::size_t idx) {
    chosen[idx] = true;
    std::copy(z.row(idx).begin(), z.row(idx).end(), centers.row(row).begin());
  };
  take(0, static_cast<std::size_t>(rng.below(n)));
  std::vector<double> closest(n);
  for (std::size_t i = 0; i < n; ++i) closest[i] = squared_distance(z.row(i), centers.row(0));

  for (std::size_t c = 1; c < k; ++c) {
    const double total = std::accumulate(closest.begin(), closest.end(), 0.0);
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double cum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (closest[i] <= 0.0) continue;
        cum += closest[i];
        pick = i;
        if (cum > target) break;
      }
    } else {
      // all remaining points coincide with a center
      for (std::size_t i = 0; i < n && pick == n; ++i)
        if (!chosen[i]) pick = i;
    }
    take(c, pick);
    for (std::size_t i = 0; i < n; ++i)
      closest[i] = std::min(closest[i], squared_distance(z.row(i), centers.row(c)));
  }
  return centers;
}

ClusterModel lloyd(const Matrix& z, Matrix centers, const KMeansOptions& opts, double tol_abs) {
  const std::size_t n = z.rows();
  const std::size_t k = centers.rows();
  const std::size_t d = z.cols();
  ClusterModel m;
  m.k = static_cast<int>(k);

  Assignment a = assign(z, centers);
  m.inertia_history.push_back(a.inertia);
  for (int it = 1; it <= opts.max_iter; ++it) {
    m.iterations = it;
    Matrix next(k, d, 0.0);
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(a.label[i]);
      ++count[c];
      auto dst = next.row(c);
      const auto src = z.row(i);
      for (std::size_t f = 0; f < d; ++f) dst[f] += src[f];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] == 0) continue;
      for (double& v : next.row(c)) v /= static_cast<double>(count[c]);
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] != 0) continue;
      std::size_t far = 0;
      for (std::size_t i = 1; i < n; ++i)
        if (a.dist[i] > a.dist[far]) far = i;
      std::copy(z.row(far).begin(), z.row(far).end(), next.row(c).begin());
      a.dist[far] = 0.0;
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) shift += squared_distance(next.row(c), centers.row(c));
    centers = std::move(next);
    a = assign(z, centers);
    m.inertia_history.push_back(a.inertia);
    if (shift <= tol_abs) break;
  }
  m.centers = std::move(centers);
  m.assignment = std::move(a.label);
  m.inertia = a.inertia;
  return m;
}

}  // namespace

ClusterModel kmeans(const Matrix& z, int k, const KMeansOptions& opts) {
  if (k < 1 || static_cast<std::size_t>(k) > z.rows())
    throw std::invalid_argument("kmeans: need n >= k >= 1 (n=" + std::to_string(z.rows()) +
                                ", k=" + std::to_string(k) + ")");
  if (!z.all_finite()) throw NumericError("kmeans: embedding has non-finite entries");
  if (opts.n_init < 1 || opts.max_iter < 0) throw std::invalid_argument("kmeans: bad options");

  const std::size_t n = z.rows();
  const std::size_t d = z.cols();
  double mean_var = 0.0;
  for (std::size_t f = 0; f < d; ++f) {
    double mu = 0.0;
    for (std::size_t i = 0; i < n; ++i) mu += z(i, f);
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (z(i, f) - mu) * (z(i, f) - mu);
    mean_var += var / static_cast<double>(n);
  }
  if (d > 0) mean_var /= static_cast<double>(d);
  const double tol_abs = opts.tol * mean_var;

  ClusterModel best;
  for (int r = 0; r < opts.n_init; ++r) {
    Rng rng = Rng::derive(opts.seed, "kmeans.init." + std::to_string(r));
    ClusterModel m = lloyd(z, plus_plus_seeds(z, static_cast<std::size_t>(k), rng), opts, tol_abs);
    if (r == 0 || m.inertia < best.inertia) best = std::move(m);
  }
  return best;
}

Matrix distance_matrix(const Matrix& z, const Matrix& centers) {
  if (z.cols() != centers.cols())
    throw std::invalid_argument("distance_matrix: dimension mismatch");
  Matrix out(z.rows(), centers.rows());
  for (std::size_t i = 0; i < z.rows(); ++i)
    for (std::size_t j = 0; j < centers.rows(); ++j)
      out(i, j) = squared_distance(z.row(i), centers.row(j));
  return out;
}

// ---------------------------------------------------------------------------

Matrix PartialLabelAssignment::dense() const {
  Matrix p(masks.size(), static_cast<std::size_t>(k), 0.0);
  for (std::size_t i = 0; i < masks.size(); ++i)
    for (int j = 0; j < k; ++j)
      if (masks[i] >> j & 1U) p(i, static_cast<std::size_t>(j)) = 1.0;
  return p;
}

PartialLabelAssignment partial_labels(const Matrix& distances, int o) {
  const std::size_t k = distances.cols();
  if (k == 0 || k > static_cast<std::size_t>(kMaxClusters))
    throw std::invalid_argument("partial_labels: need 1 <= k <= 64, got " + std::to_string(k));
  if (o < 1 || static_cast<std::size_t>(o) > k)
    throw std::invalid_argument("partial_labels: o=" + std::to_string(o) + " outside [1, " +
                                std::to_string(k) + "]");
  if (!distances.all_finite()) throw NumericError("partial_labels: non-finite distance");

  PartialLabelAssignment p;
  p.k = static_cast<int>(k);
  p.o = o;
  p.masks.resize(distances.rows());
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < distances.rows(); ++i) {
    const auto row = distances.row(i);
    std::iota(idx.begin(), idx.end(), 0);
    std::partial_sort(idx.begin(), idx.begin() + o, idx.end(), [&](std::size_t a, std::size_t b) {
      return row[a] < row[b] || (row[a] == row[b] && a < b);
    });
    LabelMask m = 0;
    for (int j = 0; j < o; ++j) m |= LabelMask{1} << idx[static_cast<std::size_t>(j)];
    p.masks[i] = m;
  }
  return p;
}

PartialLabelAssignment partial_labels_from_dense(const Matrix& dense) {
  const std::size_t k = dense.cols();
  if (k == 0 || k > static_cast<std::size_t>(kMaxClusters))
    throw std::invalid_argument("partial_labels_from_dense: need 1 <= k <= 64");
  PartialLabelAssignment p;
  p.k = static_cast<int>(k);
  p.masks.resize(dense.rows());
  for (std::size_t i = 0; i < dense.rows(); ++i) {
    LabelMask m = 0;
    for (std::size_t j = 0; j < k; ++j) {
      const double v = dense(i, j);
      if (v != 0.0 && v != 1.0) throw std::invalid_argument("partial_labels_from_dense: entries must be 0/1");
      if (v == 1.0) m |= LabelMask{1} << j;
    }
    const int count = std::popcount(m);
    if (count == 0) throw std::invalid_argument("partial_labels_from_dense: empty row " + std::to_string(i));
    if (i == 0) p.o = count;
    else if (count != p.o) throw std::invalid_argument("partial_labels_from_dense: rows differ in size");
    p.masks[i] = m;
  }
  return p;
}

// ---------------------------------------------------------------------------

NegativeRelation::NegativeRelation(PartialLabelAssignment p) : p_(std::move(p)) {
  for (LabelMask m : p_.masks)
    if (m == 0) throw std::invalid_argument("NegativeRelation: node with no partial label");
  distinct_ = p_.masks;
  std::sort(distinct_.begin(), distinct_.end());
  distinct_.erase(std::unique(distinct_.begin(), distinct_.end()), distinct_.end());
  for (std::size_t a = 0; a < distinct_.size(); ++a)
    for (std::size_t b = a + 1; b < distinct_.size(); ++b)
      if ((distinct_[a] & distinct_[b]) == 0) incompatible_.emplace_back(distinct_[a], distinct_[b]);
}

Matrix NegativeRelation::dense() const {
  const std::size_t n = num_nodes();
  Matrix out(n, n, 0.0);
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = 0; j < n; ++j)
      if (negative(i, j)) out(i, j) = 1.0;
  return out;
}

NegativeRelation negative_relation(const PartialLabelAssignment& p) { return NegativeRelation(p); }

// ---------------------------------------------------------------------------

NegativeEdges::NegativeEdges(std::vector<LabelMask> masks, std::vector<int> tags,
                             std::vector<NodePair> excluded)
    : masks_(std::move(masks)), tags_(std::move(tags)) {
  const std::size_t n = masks_.size();
  if (tags_.empty()) tags_.assign(n, -1);
  if (tags_.size() != n) throw std::invalid_argument("NegativeEdges: tag count differs from node count");
  for (LabelMask m : masks_)
    if (m == 0) throw std::invalid_argument("NegativeEdges: node with an empty mask");

  std::map<std::pair<LabelMask, int>, std::size_t> ids;
  for (NodeId v = 0; v < n; ++v) ids.emplace(std::make_pair(masks_[v], tags_[v] < 0 ? -1 : tags_[v]), 0);
  for (auto& [key, id] : ids) {
    id = group_mask_.size();
    group_mask_.push_back(key.first);
    group_tag_.push_back(key.second);
  }
  members_.resize(group_mask_.size());
  group_of_.resize(n);
  for (NodeId v = 0; v < n; ++v) {
    const std::size_t g = ids.at({masks_[v], tags_[v] < 0 ? -1 : tags_[v]});
    group_of_[v] = g;
    members_[g].push_back(v);
  }
  partners_.resize(group_mask_.size());
  for (std::size_t g = 0; g < group_mask_.size(); ++g)
    for (std::size_t h = 0; h < group_mask_.size(); ++h) {
      if ((group_mask_[g] & group_mask_[h]) != 0) continue;
      if (group_tag_[g] >= 0 && group_tag_[g] == group_tag_[h]) continue;
      partners_[g].push_back(h);
    }

  for (const NodePair& p : excluded) {
    if (p.u >= n || p.v >= n) throw std::invalid_argument("NegativeEdges: excluded pair out of range");
    if (is_candidate(p.u, p.v)) excluded_.push_back(canonical(p.u, p.v));
  }
  std::sort(excluded_.begin(), excluded_.end());
  excluded_.erase(std::unique(excluded_.begin(), excluded_.end()), excluded_.end());

  excl_offsets_.assign(n + 1, 0);
  for (const NodePair& p : excluded_) {
    ++excl_offsets_[p.u + 1];
    ++excl_offsets_[p.v + 1];
  }
  for (std::size_t v = 0; v < n; ++v) excl_offsets_[v + 1] += excl_offsets_[v];
  excl_adj_.resize(excl_offsets_[n]);
  std::vector<std::size_t> fill(excl_offsets_.begin(), excl_offsets_.end() - 1);
  for (const NodePair& p : excluded_) {
    excl_adj_[fill[p.u]++] = p.v;
    excl_adj_[fill[p.v]++] = p.u;
  }

  degree_.assign(n, 0);
  std::vector<std::size_t> group_degree(group_mask_.size(), 0);
  for (std::size_t g = 0; g < group_mask_.size(); ++g)
    for (std::size_t h : partners_[g]) group_degree[g] += members_[h].size();
  std::size_t total = 0;
  for (NodeId v = 0; v < n; ++v) {
    degree_[v] = group_degree[group_of_[v]] - (excl_offsets_[v + 1] - excl_offsets_[v]);
    total += degree_[v];
  }
  count_ = total / 2;
}

bool NegativeEdges::tagged() const {
  return std::any_of(tags_.begin(), tags_.end(), [](int t) { return t >= 0; });
}

bool NegativeEdges::is_candidate(NodeId i, NodeId j) const {
  if (i == j) return false;
  if ((masks_[i] & masks_[j]) != 0) return false;
  return !(tags_[i] >= 0 && tags_[i] == tags_[j]);
}

bool NegativeEdges::contains(NodeId i, NodeId j) const {
  if (i >= num_nodes() || j >= num_nodes()) return false;
  if (!is_candidate(i, j)) return false;
  return !std::binary_search(excluded_.begin(), excluded_.end(), canonical(i, j));
}

std::vector<NodeId> NegativeEdges::neighbors(NodeId v) const {
  std::vector<NodeId> out;
  out.reserve(degree_[v]);
  for (std::size_t h : partners_[group_of_[v]])
    out.insert(out.end(), members_[h].begin(), members_[h].end());
  std::sort(out.begin(), out.end());
  std::vector<NodeId> drop(excl_adj_.begin() + static_cast<std::ptrdiff_t>(excl_offsets_[v]),
                           excl_adj_.begin() + static_cast<std::ptrdiff_t>(excl_offsets_[v + 1]));
  std::sort(drop.begin(), drop.end());
  std::vector<NodeId> kept;
  kept.reserve(out.size());
  std::set_difference(out.begin(), out.end(), drop.begin(), drop.end(), std::back_inserter(kept));
  return kept;
}

std::vector<NodePair> NegativeEdges::materialize() const {
  std::vector<NodePair> out;
  out.reserve(count_);
  for (NodeId v = 0; v < num_nodes(); ++v)
    for (NodeId u : neighbors(v))
      if (u > v) out.push_back({v, u});
  return out;
}

Matrix NegativeEdges::aggregate_sum(const Matrix& h) const {
  const std::size_t n = num_nodes();
  if (h.rows() != n)
    throw std::invalid_argument("NegativeEdges::aggregate_sum: expected " + std::to_string(n) +
                                " rows, got " + std::to_string(h.rows()));
  const std::size_t d = h.cols();
  const std::size_t ng = num_groups();
  Matrix group_sum(ng, d, 0.0);
  for (NodeId v = 0; v < n; ++v) {
    auto dst = group_sum.row(group_of_[v]);
    const auto src = h.row(v);
    for (std::size_t f = 0; f < d; ++f) dst[f] += src[f];
  }
  Matrix partner_sum(ng, d, 0.0);
  for (std::size_t g = 0; g < ng; ++g) {
    auto dst = partner_sum.row(g);
    for (std::size_t p : partners_[g]) {
      const auto src = group_sum.row(p);
      for (std::size_t f = 0; f < d; ++f) dst[f] += src[f];
    }
  }
  Matrix out(n, d);
  for (NodeId v = 0; v < n; ++v) {
    auto dst = out.row(v);
    const auto base = partner_sum.row(group_of_[v]);
    std::copy(base.begin(), base.end(), dst.begin());
    for (std::size_t e = excl_offsets_[v]; e < excl_offsets_[v + 1]; ++e) {
      const auto src = h.row(excl_adj_[e]);
      for (std::size_t f = 0; f < d; ++f) dst[f] -= src[f];
    }
  }
  return out;
}

NegativeEdges NegativeEdges::retagged(std::vector<int> tags) const {
  if (tagged()) throw std::logic_error("NegativeEdges: already filtered by labels");
  return NegativeEdges(masks_, std::move(tags), excluded_);
}

// ---------------------------------------------------------------------------

SignedGraph build_signed_graph(const Graph& g, const NegativeRelation& n,
                               const std::vector<NodePair>& exclude) {
  if (g.num_nodes() != n.num_nodes())
    throw std::invalid_argument("build_signed_graph: graph has " + std::to_string(g.num_nodes()) +
                                " nodes, relation has " + std::to_string(n.num_nodes()));
  SignedGraph s;
  std::vector<NodePair> kept;
  for (const NodePair& e : g.edges()) (n.negative(e.u, e.v) ? s.dropped : kept).push_back(e);
  s.positive = Graph(g.num_nodes(), std::move(kept));
  std::vector<NodePair> excluded = s.dropped;
  excluded.insert(excluded.end(), exclude.begin(), exclude.end());
  s.negative = NegativeEdges(n.partial().masks, {}, std::move(excluded));
  return s;
}

Matrix signed_adjacency_dense(const SignedGraph& s) {
  const std::size_t n = s.num_nodes();
  Matrix a(n, n, 0.0);
  for (const NodePair& e : s.positive.edges()) a(e.u, e.v) = a(e.v, e.u) = 1.0;
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = 0; j < n; ++j)
      if (s.negative.contains(i, j)) a(i, j) = -1.0;
  return a;
}

// ---------------------------------------------------------------------------

RecallReport recall_score(const PartialLabelAssignment& p, const LabelVector& y,
                          RecallDenominator mode) {
  if (p.size() != y.size())
    throw std::invalid_argument("recall_score: " + std::to_string(p.size()) + " partial labels vs " +
                                std::to_string(y.size()) + " labels");
  y.validate();
  const auto c = static_cast<std::size_t>(y.num_classes);

  std::map<LabelMask, std::vector<std::uint64_t>> hist;
  for (std::size_t v = 0; v < p.size(); ++v) {
    auto& h = hist[p.masks[v]];
    if (h.empty()) h.assign(c, 0);
    ++h[static_cast<std::size_t>(y.y[v])];
  }
  std::vector<LabelMask> masks;
  std::vector<std::vector<std::uint64_t>> counts;
  std::vector<std::uint64_t> sizes;
  for (auto& [m, h] : hist) {
    masks.push_back(m);
    sizes.push_back(std::accumulate(h.begin(), h.end(), std::uint64_t{0}));
    counts.push_back(std::move(h));
  }

  std::uint64_t hits = 0;
  std::uint64_t predicted = 0;
  for (std::size_t a = 0; a < masks.size(); ++a)
    for (std::size_t b = 0; b < masks.size(); ++b) {
      if ((masks[a] & masks[b]) == 0) continue;
      predicted += sizes[a] * sizes[b];
      for (std::size_t l = 0; l < c; ++l) hits += counts[a][l] * counts[b][l];
    }
  std::uint64_t truth = 0;
  for (std::size_t n_l : y.class_counts()) truth += static_cast<std::uint64_t>(n_l) * n_l;

  RecallReport r;
  r.o = p.o;
  r.k = p.k;
  r.mode = mode;
  r.numerator = hits;
  r.denominator = mode == RecallDenominator::GroundTruthPairs ? truth : predicted;
  r.recall = r.denominator == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(r.denominator);
  return r;
}

// ---------------------------------------------------------------------------

EncoderKind encoder_kind_from_string(const std::string& s) {
  if (s == "gae-gcn") return EncoderKind::GaeGcn;
  if (s == "vgae-gcn") return EncoderKind::VgaeGcn;
  if (s == "gae-gncn") return EncoderKind::GaeGncn;
  if (s == "vgae-gncn") return EncoderKind::VgaeGncn;
  throw std::invalid_argument("unknown encoder '" + s + "' (gae-gcn, vgae-gcn, gae-gncn, vgae-gncn)");
}

std::string to_string(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::GaeGcn: return "gae-gcn";
    case EncoderKind::VgaeGcn: return "vgae-gcn";
    case EncoderKind::GaeGncn: return "gae-gncn";
    case EncoderKind::VgaeGncn: return "vgae-gncn";
  }
  return "?";
}

Matrix np2e_embedding(const Graph& g, const FeatureMatrix& x, const Np2eConfig& cfg) {
  if (x.rows() != g.num_nodes())
    throw std::invalid_argument("np2e: feature rows do not match node count");
  auto features = std::make_shared<SparseMatrix>(x.x);
  auto adj = std::make_shared<SparseMatrix>(gcn_normalized_adjacency(g));
  EncoderDims dims = cfg.dims;
  dims.in = x.cols();
  Rng init = Rng::derive(cfg.train.seed, "np2e.init");
  TrainConfig train = cfg.train;
  train.validate = nullptr;

  std::unique_ptr<Encoder> model;
  switch (cfg.encoder) {
    case EncoderKind::GaeGcn:
    case EncoderKind::VgaeGcn:
      model = std::make_unique<GcnEncoder>(features, adj, dims,
                                           cfg.encoder == EncoderKind::GaeGcn ? Head::GAE : Head::VGAE, init);
      break;
    case EncoderKind::GaeGncn:
    case EncoderKind::VgaeGncn:
      model = std::make_unique<GncnEncoder>(features, adj, dims,
                                            cfg.encoder == EncoderKind::GaeGncn ? Head::GAE : Head::VGAE,
                                            cfg.gncn_scale, init);
      break;
  }
  return train_embedding(*model, g, train).z;
}

Np2eResult np2e_from_embedding(const Graph& g, Matrix z, int k, int o, const Np2eConfig& cfg,
                               const LabelVector* labels) {
  if (z.rows() != g.num_nodes())
    throw std::invalid_argument("np2e: embedding rows do not match node count");
  if (k < 1 || k > kMaxClusters) throw std::invalid_argument("np2e: k must lie in [1, 64]");
  if (o < 1 || o > k)
    throw std::invalid_argument("np2e: o=" + std::to_string(o) + " outside [1, " + std::to_string(k) + "]");
  Np2eResult r;
  r.embedding = std::move(z);
  r.clusters = kmeans(r.embedding, k, cfg.kmeans);
  r.distances = distance_matrix(r.embedding, r.clusters.centers);
  r.partial = partial_labels(r.distances, o);
  r.relation = negative_relation(r.partial);
  r.signed_graph = build_signed_graph(g, r.relation, cfg.exclude);
  if (labels) r.recall = recall_score(r.partial, *labels);
  return r;
}

Np2eResult run_np2e(const Graph& g, const FeatureMatrix& x, int k, int o, const Np2eConfig& cfg,
                    const LabelVector* labels) {
  if (o < 1 || o > k)
    throw std::invalid_argument("np2e: o=" + std::to_string(o) + " outside [1, " + std::to_string(k) + "]");
  return np2e_from_embedding(g, np2e_embedding(g, x, cfg), k, o, cfg, labels);
}

}  // namespace np2l
