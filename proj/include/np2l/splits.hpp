#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "np2l/graph.hpp"

namespace np2l {

/// Held-out edge partition for link prediction. Positive sets partition the
/// graph's edges; negative sets are non-edges of the full graph, sampled
/// without replacement and fixed at split time.
struct EdgeSplit {
  double alpha = 0.8;
  std::vector<NodePair> train_edges;
  std::vector<NodePair> val_edges;
  std::vector<NodePair> test_edges;
  std::vector<NodePair> val_neg;
  std::vector<NodePair> test_neg;

  /// Graph on train edges only; this is what encoders see.
  Graph train_graph(std::size_t n) const { return Graph(n, train_edges); }
  /// Every val/test pair, positive and negative.
  std::vector<NodePair> held_out_pairs() const;
};

/// Counts are (n_train, n_val, n_test) with n_val = round(2(1-alpha)/3 |E|),
/// n_test = round((1-alpha)/3 |E|) and n_train taking the remainder.
EdgeSplit split_edges(const Graph& g, double alpha, std::uint64_t seed);

enum class SplitStrategy {
  PerClass622 = 1,        // each class split 6:2:2
  BalancedTrainOnly = 2,  // equal per-class train counts, rest halved into val/test
  Random622 = 3,          // global 6:2:2
};

SplitStrategy split_strategy_from_int(int s);

struct NodeSplit {
  SplitStrategy strategy = SplitStrategy::Random622;
  std::vector<bool> train_mask;
  std::vector<bool> val_mask;
  std::vector<bool> test_mask;

  std::vector<std::uint32_t> train_nodes() const;
  std::vector<std::uint32_t> val_nodes() const;
  std::vector<std::uint32_t> test_nodes() const;
};

NodeSplit split_nodes(const LabelVector& labels, SplitStrategy strategy, std::uint64_t seed);

}  // namespace np2l
