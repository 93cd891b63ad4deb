#include "np2l/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace np2l {

AucAp eval_auc_ap(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("eval_auc_ap: scores and labels differ in length");
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw std::invalid_argument("eval_auc_ap: labels must be 0/1");
    if (!std::isfinite(scores[i])) throw std::invalid_argument("eval_auc_ap: non-finite score");
    n_pos += static_cast<std::size_t>(labels[i]);
  }
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("eval_auc_ap: need both positive and negative labels");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  // Walk tie groups from the highest score down.
  AucAp out;
  double tp = 0.0, fp = 0.0, prev_recall = 0.0;
  double auc_sum = 0.0;  // sum over positives of (#negatives below + half the tied negatives)
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    double gp = 0.0, gn = 0.0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] ? gp : gn) += 1.0;
      ++j;
    }
    const double neg_below = static_cast<double>(n_neg) - fp - gn;
    auc_sum += gp * (neg_below + 0.5 * gn);
    tp += gp;
    fp += gn;
    const double recall = tp / static_cast<double>(n_pos);
    out.ap += (recall - prev_recall) * (tp / (tp + fp));
    prev_recall = recall;
    i = j;
  }
  out.auc = auc_sum / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
  return out;
}

std::vector<double> pair_scores(const Matrix& z, const std::vector<NodePair>& pairs) {
  std::vector<double> s(pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    if (pairs[p].u >= z.rows() || pairs[p].v >= z.rows())
      throw std::invalid_argument("pair_scores: node id out of range");
    const auto a = z.row(pairs[p].u);
    const auto b = z.row(pairs[p].v);
    double dot = 0.0;
    for (std::size_t f = 0; f < a.size(); ++f) dot += a[f] * b[f];
    s[p] = dot;
  }
  return s;
}

AucAp link_auc_ap(const Matrix& z, const std::vector<NodePair>& pos, const std::vector<NodePair>& neg) {
  std::vector<double> scores = pair_scores(z, pos);
  const std::vector<double> ns = pair_scores(z, neg);
  scores.insert(scores.end(), ns.begin(), ns.end());
  std::vector<int> labels(pos.size(), 1);
  labels.resize(pos.size() + neg.size(), 0);
  return eval_auc_ap(scores, labels);
}

double accuracy(const Matrix& logits, const std::vector<int>& labels, const std::vector<std::uint32_t>& rows) {
  if (rows.empty()) throw std::invalid_argument("accuracy: no rows");
  std::size_t hit = 0;
  for (std::uint32_t r : rows) {
    if (r >= logits.rows() || r >= labels.size()) throw std::invalid_argument("accuracy: row out of range");
    const auto row = logits.row(r);
    const auto best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    hit += best == labels[r] ? 1 : 0;
  }
  return static_cast<double>(hit) / static_cast<double>(rows.size());
}

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd m;
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - m.mean) * (x - m.mean);
  m.std = std::sqrt(var / static_cast<double>(xs.size()));
  return m;
}

// ---------------------------------------------------------------------------

EdgeQuality edge_quality_report(const SignedGraph& s, const LabelVector& y, const std::vector<bool>& train_mask) {
  const NegativeEdges& neg = s.negative;
  const std::size_t n = neg.num_nodes();
  if (y.size() != n || train_mask.size() != n)
    throw std::invalid_argument("edge_quality_report: labels/mask do not match node count");
  y.validate();
  const auto c = static_cast<std::size_t>(y.num_classes);
  const std::size_t ng = neg.num_groups();

  std::vector<std::vector<std::uint64_t>> lab(ng, std::vector<std::uint64_t>(c, 0));
  std::vector<std::vector<std::uint64_t>> train_lab(ng, std::vector<std::uint64_t>(c, 0));
  std::vector<std::uint64_t> size(ng, 0), train(ng, 0);
  for (NodeId v = 0; v < n; ++v) {
    const std::size_t g = neg.group_of(v);
    const auto l = static_cast<std::size_t>(y.y[v]);
    ++lab[g][l];
    ++size[g];
    if (train_mask[v]) {
      ++train_lab[g][l];
      ++train[g];
    }
  }

  // Ordered sums over partner blocks count each pair twice.
  std::uint64_t wrong2 = 0, bridging2 = 0, wrong_train2 = 0;
  for (std::size_t g = 0; g < ng; ++g)
    for (std::size_t h : neg.partners(g)) {
      for (std::size_t l = 0; l < c; ++l) {
        wrong2 += lab[g][l] * lab[h][l];
        wrong_train2 += train_lab[g][l] * train_lab[h][l];
      }
      bridging2 += train[g] * (size[h] - train[h]) + (size[g] - train[g]) * train[h];
    }

  EdgeQuality q;
  q.wrong = wrong2 / 2;
  q.bridging = bridging2 / 2;
  q.wrong_train = wrong_train2 / 2;
  for (const NodePair& p : neg.excluded()) {
    const bool same = y.y[p.u] == y.y[p.v];
    q.wrong -= same ? 1 : 0;
    q.wrong_train -= same && train_mask[p.u] && train_mask[p.v] ? 1 : 0;
    q.bridging -= train_mask[p.u] != train_mask[p.v] ? 1 : 0;
  }
  q.negative_edges = neg.count();
  q.empty = q.negative_edges == 0;
  if (!q.empty) {
    q.wrong_ratio = static_cast<double>(q.wrong) / static_cast<double>(q.negative_edges);
    q.bridging_ratio = static_cast<double>(q.bridging) / static_cast<double>(q.negative_edges);
  }
  return q;
}

SignedGraph sgcn_plus_filter(const SignedGraph& s, const LabelVector& y, const std::vector<bool>& train_mask) {
  const std::size_t n = s.num_nodes();
  if (y.size() != n || train_mask.size() != n)
    throw std::invalid_argument("sgcn_plus_filter: labels/mask do not match node count");
  y.validate();
  std::vector<int> tags(n, -1);
  for (std::size_t v = 0; v < n; ++v)
    if (train_mask[v]) tags[v] = y.y[v];
  SignedGraph out;
  out.positive = s.positive;
  out.dropped = s.dropped;
  out.negative = s.negative.retagged(std::move(tags));
  return out;
}

}  // namespace np2l
