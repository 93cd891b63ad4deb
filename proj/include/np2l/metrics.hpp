#pragma once

#include <cstdint>
#include <vector>

#include "np2l/graph.hpp"
#include "np2l/np2e.hpp"

namespace np2l {

struct AucAp {
  double auc = 0.0;
  double ap = 0.0;
};

/// ROC AUC (ties count one half) and average precision
///   AP = sum_t (R_t - R_{t-1}) P_t
/// over distinct score thresholds in descending order.
/// Throws std::invalid_argument unless both classes are present.
AucAp eval_auc_ap(const std::vector<double>& scores, const std::vector<int>& labels);

/// Inner-product logits z_u . z_v for each pair.
std::vector<double> pair_scores(const Matrix& z, const std::vector<NodePair>& pairs);

/// AUC/AP of positive pairs against negative pairs under z.
AucAp link_auc_ap(const Matrix& z, const std::vector<NodePair>& pos, const std::vector<NodePair>& neg);

/// Fraction of `rows` whose argmax logit (lowest index on ties) equals the label.
double accuracy(const Matrix& logits, const std::vector<int>& labels, const std::vector<std::uint32_t>& rows);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

MeanStd mean_std(const std::vector<double>& xs);

// ---------------------------------------------------------------------------

struct EdgeQuality {
  std::uint64_t negative_edges = 0;
  std::uint64_t wrong = 0;        // same label at both ends
  std::uint64_t bridging = 0;     // exactly one end in the train set
  std::uint64_t wrong_train = 0;  // same label, both ends in the train set
  double wrong_ratio = 0.0;
  double bridging_ratio = 0.0;
  bool empty = true;
};

/// Wrong and bridging negative-edge ratios, computed per group pair without
/// expanding E^-. An empty E^- yields zero ratios with `empty` set.
EdgeQuality edge_quality_report(const SignedGraph& s, const LabelVector& y, const std::vector<bool>& train_mask);

/// Removes every E^- pair whose endpoints are both train nodes with the same
/// label. Positive edges are untouched.
SignedGraph sgcn_plus_filter(const SignedGraph& s, const LabelVector& y, const std::vector<bool>& train_mask);

}  // namespace np2l
