#pragma once
// Shared helpers for unit and acceptance tests: random instances, dense
// reference implementations and a central finite-difference checker.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "np2l/autograd.hpp"
#include "np2l/graph.hpp"
#include "np2l/matrix.hpp"
#include "np2l/np2e.hpp"
#include "np2l/rng.hpp"

namespace np2l::testing {

inline Graph random_graph(std::size_t n, double p, Rng& rng) {
  std::vector<NodePair> e;
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = u + 1; v < n; ++v)
      if (rng.uniform() < p) e.push_back({u, v});
  return Graph(n, std::move(e));
}

inline Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (double& v : m.data()) v = rng.uniform(-scale, scale);
  return m;
}

inline SparseMatrix random_sparse(std::size_t r, std::size_t c, double density, Rng& rng) {
  std::vector<Triplet> t;
  for (std::uint32_t i = 0; i < r; ++i)
    for (std::uint32_t j = 0; j < c; ++j)
      if (rng.uniform() < density) t.push_back({i, j, rng.uniform(0.5, 1.5)});
  return SparseMatrix::from_triplets(r, c, std::move(t));
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

/// Dense D^-1/2 (A + I) D^-1/2 built entry by entry.
inline Matrix dense_gcn_norm(const Graph& g) {
  const std::size_t n = g.num_nodes();
  Matrix a(n, n, 0.0);
  for (const auto& e : g.edges()) a(e.u, e.v) = a(e.v, e.u) = 1.0;
  for (std::size_t i = 0; i < n; ++i) a(i, i) += 1.0;
  std::vector<double> d(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) d[i] += a(i, j);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) /= std::sqrt(d[i] * d[j]);
  return a;
}

/// Relative-or-absolute agreement used by every gradient check.
inline bool grad_close(double analytic, double numeric, double rel_tol = 1e-4, double abs_tol = 1e-9) {
  const double diff = std::abs(analytic - numeric);
  if (diff <= abs_tol) return true;
  return diff / std::max(std::abs(analytic), std::abs(numeric)) <= rel_tol;
}

struct GradCheckResult {
  std::size_t checked = 0;
  std::size_t failures = 0;
  double worst_rel = 0.0;
  std::string worst;
};

/// Central differences on up to `max_entries` entries per parameter (all
/// entries when the parameter is smaller). `loss` must be deterministic.
inline GradCheckResult grad_check(const std::vector<ad::Tensor>& params, const std::function<ad::Tensor()>& loss,
                                  Rng& rng, std::size_t max_entries = 40, double h = 1e-5) {
  for (auto p : params) p.zero_grad();
  loss().backward();
  std::vector<Matrix> analytic;
  for (const auto& p : params) analytic.push_back(p.has_grad() ? p.grad() : Matrix(p.rows(), p.cols(), 0.0));

  GradCheckResult r;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    ad::Tensor p = params[pi];
    const std::size_t size = p.value().size();
    std::vector<std::size_t> idx(size);
    for (std::size_t i = 0; i < size; ++i) idx[i] = i;
    if (size > max_entries) {
      rng.shuffle(idx);
      idx.resize(max_entries);
    }
    for (std::size_t i : idx) {
      const double orig = p.value()[i];
      p.mutable_value()[i] = orig + h;
      const double up = loss().item();
      p.mutable_value()[i] = orig - h;
      const double down = loss().item();
      p.mutable_value()[i] = orig;
      const double numeric = (up - down) / (2 * h);
      const double a = analytic[pi][i];
      ++r.checked;
      // relative error is reported for entries of meaningful magnitude; the
      // pass rule below also accepts tiny absolute differences near zero
      const double mag = std::max(std::abs(a), std::abs(numeric));
      const double rel = mag < 1e-7 ? 0.0 : std::abs(a - numeric) / mag;
      if (rel > r.worst_rel) {
        r.worst_rel = rel;
        r.worst = "param " + std::to_string(pi) + "[" + std::to_string(i) + "] analytic " + std::to_string(a) +
                  " numeric " + std::to_string(numeric);
      }
      if (!grad_close(a, numeric)) ++r.failures;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Dense brute-force oracles for the compressed negative-edge machinery.

/// n x n 0/1 adjacency of E^- built pair by pair: masks compared through
/// explicit cluster loops, tags and exclusions applied afterwards.
struct DenseSigned {
  std::vector<NodePair> positive, dropped, negative;
  Matrix neg;  // symmetric 0/1
};

inline bool masks_overlap(LabelMask a, LabelMask b, int k) {
  for (int c = 0; c < k; ++c)
    if ((a >> c & 1U) && (b >> c & 1U)) return true;
  return false;
}

inline DenseSigned dense_signed_oracle(const Graph& g, const std::vector<LabelMask>& masks, int k,
                                       const std::vector<int>& tags, const std::vector<NodePair>& exclude) {
  const std::size_t n = masks.size();
  Matrix held(n, n, 0.0);
  for (const auto& p : exclude) held(p.u, p.v) = held(p.v, p.u) = 1.0;
  DenseSigned out;
  out.neg = Matrix(n, n, 0.0);
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j) {
      const bool negative = !masks_overlap(masks[i], masks[j], k);
      if (g.has_edge(i, j)) {
        (negative ? out.dropped : out.positive).push_back({i, j});
        continue;
      }
      if (!negative) continue;
      if (!tags.empty() && tags[i] >= 0 && tags[i] == tags[j]) continue;
      if (held(i, j) != 0.0) continue;
      out.negative.push_back({i, j});
      out.neg(i, j) = out.neg(j, i) = 1.0;
    }
  return out;
}

struct DenseQuality {
  std::uint64_t count = 0, wrong = 0, bridging = 0, wrong_train = 0;
};

inline DenseQuality dense_quality_oracle(const Matrix& neg, const std::vector<int>& y, const std::vector<bool>& train) {
  DenseQuality q;
  for (std::size_t i = 0; i < neg.rows(); ++i)
    for (std::size_t j = i + 1; j < neg.cols(); ++j) {
      if (neg(i, j) == 0.0) continue;
      ++q.count;
      if (y[i] == y[j]) ++q.wrong;
      if (train[i] != train[j]) ++q.bridging;
      if (y[i] == y[j] && train[i] && train[j]) ++q.wrong_train;
    }
  return q;
}

/// Recall from explicit M = Y Y^T and S = P P^T over all ordered pairs.
inline double dense_recall_oracle(const std::vector<LabelMask>& masks, int k, const std::vector<int>& y,
                                  bool predicted_denominator) {
  const std::size_t n = masks.size();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (int c = 0; c < k; ++c) s += static_cast<double>((masks[i] >> c & 1U) * (masks[j] >> c & 1U));
      const double m = y[i] == y[j] ? 1.0 : 0.0;
      if (m * s > 0) num += 1.0;
      den += predicted_denominator ? (s > 0 ? 1.0 : 0.0) : m;
    }
  return num / den;
}

/// Random partial labels with `k` clusters, `o` per node, from random distances.
inline PartialLabelAssignment random_partial(std::size_t n, int k, int o, Rng& rng) {
  return partial_labels(random_matrix(n, static_cast<std::size_t>(k), rng), o);
}

}  // namespace np2l::testing
