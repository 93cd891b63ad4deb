#include "np2l/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace np2l {

NodePair canonical(NodeId a, NodeId b) { return a < b ? NodePair{a, b} : NodePair{b, a}; }

Graph::Graph(std::size_t n, std::vector<NodePair> edges) : n_(n) {
  edges_.reserve(edges.size());
  for (const auto& e : edges) {
    if (e.u >= n || e.v >= n) {
      throw std::invalid_argument("Graph: edge (" + std::to_string(e.u) + "," +
                                  std::to_string(e.v) + ") references a node >= n=" +
                                  std::to_string(n));
    }
    if (e.u == e.v) continue;
    edges_.push_back(canonical(e.u, e.v));
  }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());

  std::vector<std::size_t> deg(n, 0);
  for (const auto& e : edges_) {
    ++deg[e.u];
    ++deg[e.v];
  }
  offsets_.assign(n + 1, 0);
  for (std::size_t v = 0; v < n; ++v) offsets_[v + 1] = offsets_[v] + deg[v];
  adj_.resize(offsets_[n]);
  std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for (const auto& e : edges_) {
    adj_[cursor[e.u]++] = e.v;
    adj_[cursor[e.v]++] = e.u;
  }
  for (std::size_t v = 0; v < n; ++v)
    std::sort(adj_.begin() + static_cast<std::ptrdiff_t>(offsets_[v]),
              adj_.begin() + static_cast<std::ptrdiff_t>(offsets_[v + 1]));
}

bool Graph::has_edge(NodeId a, NodeId b) const {
  if (a >= n_ || b >= n_) return false;
  const auto nb = neighbors(a);
  return std::binary_search(nb.begin(), nb.end(), b);
}

SparseMatrix Graph::adjacency() const {
  std::vector<Triplet> t;
  t.reserve(adj_.size());
  for (NodeId v = 0; v < n_; ++v)
    for (NodeId u : neighbors(v)) t.push_back({v, u, 1.0});
  return SparseMatrix::from_triplets(n_, n_, std::move(t));
}

SparseMatrix gcn_normalized_adjacency(const Graph& g) {
  const std::size_t n = g.num_nodes();
  std::vector<double> inv_sqrt(n);
  for (NodeId v = 0; v < n; ++v)
    inv_sqrt[v] = 1.0 / std::sqrt(static_cast<double>(g.degree(v) + 1));
  std::vector<Triplet> t;
  t.reserve(2 * g.num_edges() + n);
  for (NodeId v = 0; v < n; ++v) {
    t.push_back({v, v, inv_sqrt[v] * inv_sqrt[v]});
    for (NodeId u : g.neighbors(v)) t.push_back({v, u, inv_sqrt[v] * inv_sqrt[u]});
  }
  return SparseMatrix::from_triplets(n, n, std::move(t));
}

SparseMatrix mean_adjacency(const Graph& g) {
  const std::size_t n = g.num_nodes();
  std::vector<Triplet> t;
  t.reserve(2 * g.num_edges());
  for (NodeId v = 0; v < n; ++v) {
    const double w = g.degree(v) == 0 ? 0.0 : 1.0 / static_cast<double>(g.degree(v));
    for (NodeId u : g.neighbors(v)) t.push_back({v, u, w});
  }
  return SparseMatrix::from_triplets(n, n, std::move(t));
}

void LabelVector::validate() const {
  if (num_classes <= 0) throw std::invalid_argument("LabelVector: num_classes must be positive");
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 0 || y[i] >= num_classes) {
      throw std::invalid_argument("LabelVector: node " + std::to_string(i) + " has class " +
                                  std::to_string(y[i]) + " outside [0," +
                                  std::to_string(num_classes) + ")");
    }
  }
}

std::vector<std::size_t> LabelVector::class_counts() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (int c : y) ++counts[static_cast<std::size_t>(c)];
  return counts;
}

}  // namespace np2l
