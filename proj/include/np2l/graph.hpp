#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "np2l/autograd.hpp"
#include "np2l/matrix.hpp"

namespace np2l {

using NodeId = std::uint32_t;
using ad::NodePair;

/// Canonical undirected pair with u < v.
NodePair canonical(NodeId a, NodeId b);

/// Undirected, unweighted simple graph. Edges are stored once as canonical
/// (u < v) pairs in sorted order; the symmetric CSR adjacency is derived.
class Graph {
 public:
  Graph() = default;
  /// Symmetrizes and deduplicates `edges` and drops self-loops.
  /// Throws std::invalid_argument if an endpoint is >= n.
  Graph(std::size_t n, std::vector<NodePair> edges);

  std::size_t num_nodes() const { return n_; }
  /// Undirected edge count.
  std::size_t num_edges() const { return edges_.size(); }
  /// Directed adjacency entries (2 * num_edges).
  std::size_t num_directed_entries() const { return 2 * edges_.size(); }

  const std::vector<NodePair>& edges() const { return edges_; }
  std::span<const NodeId> neighbors(NodeId v) const {
    return {adj_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
  }
  std::size_t degree(NodeId v) const { return offsets_[v + 1] - offsets_[v]; }
  bool has_edge(NodeId a, NodeId b) const;

  /// Symmetric 0/1 adjacency A.
  SparseMatrix adjacency() const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<NodePair> edges_;
  std::vector<std::size_t> offsets_{0};
  std::vector<NodeId> adj_;
};

/// D^{-1/2} (A + I) D^{-1/2} with D the degree of A + I.
SparseMatrix gcn_normalized_adjacency(const Graph& g);
/// Row-normalized A (mean over neighbors); isolated rows stay empty.
SparseMatrix mean_adjacency(const Graph& g);

/// Node attributes X (n x m). Stored sparsely since bag-of-words features are
/// mostly zero; the dense view is exact.
struct FeatureMatrix {
  SparseMatrix x;

  std::size_t rows() const { return x.rows(); }
  std::size_t cols() const { return x.cols(); }
  Matrix to_dense() const { return x.to_dense(); }
  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;
};

struct LabelVector {
  std::vector<int> y;
  int num_classes = 0;

  std::size_t size() const { return y.size(); }
  /// Throws std::invalid_argument if any id is outside [0, num_classes).
  void validate() const;
  std::vector<std::size_t> class_counts() const;
  friend bool operator==(const LabelVector&, const LabelVector&) = default;
};

}  // namespace np2l
