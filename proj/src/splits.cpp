#include "np2l/splits.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "np2l/rng.hpp"

namespace np2l {

std::vector<NodePair> EdgeSplit::held_out_pairs() const {
  std::vector<NodePair> out;
  out.reserve(val_edges.size() + test_edges.size() + val_neg.size() + test_neg.size());
  for (const auto* set : {&val_edges, &test_edges, &val_neg, &test_neg})
    out.insert(out.end(), set->begin(), set->end());
  return out;
}

EdgeSplit split_edges(const Graph& g, double alpha, std::uint64_t seed) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("split_edges: alpha must lie in (0, 1)");
  const std::size_t m = g.num_edges();
  if (m < 10) throw std::invalid_argument("split_edges: graph needs at least 10 edges");

  const auto n_val = static_cast<std::size_t>(std::llround(2.0 * (1.0 - alpha) / 3.0 * m));
  const auto n_test = static_cast<std::size_t>(std::llround((1.0 - alpha) / 3.0 * m));
  if (n_val == 0 || n_test == 0 || n_val + n_test >= m)
    throw std::invalid_argument("split_edges: graph too small to populate train/val/test");

  Rng rng = Rng::derive(seed, "split_edges");
  std::vector<NodePair> edges = g.edges();
  rng.shuffle(edges);

  EdgeSplit s;
  s.alpha = alpha;
  s.val_edges.assign(edges.begin(), edges.begin() + static_cast<std::ptrdiff_t>(n_val));
  s.test_edges.assign(edges.begin() + static_cast<std::ptrdiff_t>(n_val),
                      edges.begin() + static_cast<std::ptrdiff_t>(n_val + n_test));
  s.train_edges.assign(edges.begin() + static_cast<std::ptrdiff_t>(n_val + n_test), edges.end());
  for (auto* set : {&s.train_edges, &s.val_edges, &s.test_edges}) std::sort(set->begin(), set->end());

  const std::size_t n = g.num_nodes();
  const std::size_t total_pairs = n * (n - 1) / 2;
  if (total_pairs - m < n_val + n_test)
    throw std::invalid_argument("split_edges: not enough non-edges for negative sampling");

  std::set<NodePair> taken;
  auto sample = [&](std::size_t count) {
    std::vector<NodePair> out;
    out.reserve(count);
    while (out.size() < count) {
      const auto a = static_cast<NodeId>(rng.below(n));
      const auto b = static_cast<NodeId>(rng.below(n));
      if (a == b || g.has_edge(a, b)) continue;
      const NodePair p = canonical(a, b);
      if (taken.insert(p).second) out.push_back(p);
    }
    return out;
  };
  s.val_neg = sample(n_val);
  s.test_neg = sample(n_test);
  return s;
}

SplitStrategy split_strategy_from_int(int s) {
  switch (s) {
    case 1: return SplitStrategy::PerClass622;
    case 2: return SplitStrategy::BalancedTrainOnly;
    case 3: return SplitStrategy::Random622;
    default: throw std::invalid_argument("split strategy must be 1, 2 or 3");
  }
}

namespace {

std::vector<std::uint32_t> mask_nodes(const std::vector<bool>& mask) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t i = 0; i < mask.size(); ++i)
    if (mask[i]) out.push_back(i);
  return out;
}

std::size_t round_count(double x) { return static_cast<std::size_t>(std::llround(x)); }

}  // namespace

std::vector<std::uint32_t> NodeSplit::train_nodes() const { return mask_nodes(train_mask); }
std::vector<std::uint32_t> NodeSplit::val_nodes() const { return mask_nodes(val_mask); }
std::vector<std::uint32_t> NodeSplit::test_nodes() const { return mask_nodes(test_mask); }

NodeSplit split_nodes(const LabelVector& labels, SplitStrategy strategy, std::uint64_t seed) {
  labels.validate();
  const std::size_t n = labels.size();
  NodeSplit s;
  s.strategy = strategy;
  s.train_mask.assign(n, false);
  s.val_mask.assign(n, false);
  s.test_mask.assign(n, false);
  Rng rng = Rng::derive(seed, "split_nodes");

  std::vector<std::vector<std::uint32_t>> by_class(static_cast<std::size_t>(labels.num_classes));
  for (std::uint32_t v = 0; v < n; ++v) by_class[static_cast<std::size_t>(labels.y[v])].push_back(v);

  if (strategy != SplitStrategy::Random622) {
    for (std::size_t c = 0; c < by_class.size(); ++c) {
      if (by_class[c].size() < 5) {
        throw std::invalid_argument("split_nodes: class " + std::to_string(c) + " has " +
                                    std::to_string(by_class[c].size()) +
                                    " members; strategies 1 and 2 need at least 5");
      }
    }
  }

  switch (strategy) {
    case SplitStrategy::PerClass622:
      for (auto& members : by_class) {
        rng.shuffle(members);
        const std::size_t c = members.size();
        const std::size_t n_train = round_count(0.6 * static_cast<double>(c));
        const std::size_t n_val = round_count(0.2 * static_cast<double>(c));
        for (std::size_t i = 0; i < c; ++i) {
          if (i < n_train) s.train_mask[members[i]] = true;
          else if (i < n_train + n_val) s.val_mask[members[i]] = true;
          else s.test_mask[members[i]] = true;
        }
      }
      break;
    case SplitStrategy::BalancedTrainOnly: {
      std::size_t min_count = n;
      for (const auto& members : by_class) min_count = std::min(min_count, members.size());
      const auto per_class = static_cast<std::size_t>(std::floor(0.6 * static_cast<double>(min_count)));
      std::vector<std::uint32_t> rest;
      for (auto& members : by_class) {
        rng.shuffle(members);
        for (std::size_t i = 0; i < members.size(); ++i) {
          if (i < per_class) s.train_mask[members[i]] = true;
          else rest.push_back(members[i]);
        }
      }
      std::sort(rest.begin(), rest.end());
      rng.shuffle(rest);
      const std::size_t n_val = rest.size() / 2;
      for (std::size_t i = 0; i < rest.size(); ++i)
        (i < n_val ? s.val_mask : s.test_mask)[rest[i]] = true;
      break;
    }
    case SplitStrategy::Random622: {
      std::vector<std::uint32_t> order(n);
      for (std::uint32_t v = 0; v < n; ++v) order[v] = v;
      rng.shuffle(order);
      const std::size_t n_train = round_count(0.6 * static_cast<double>(n));
      const std::size_t n_val = round_count(0.2 * static_cast<double>(n));
      for (std::size_t i = 0; i < n; ++i) {
        if (i < n_train) s.train_mask[order[i]] = true;
        else if (i < n_train + n_val) s.val_mask[order[i]] = true;
        else s.test_mask[order[i]] = true;
      }
      break;
    }
  }
  return s;
}

}  // namespace np2l
