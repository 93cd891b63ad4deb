#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "np2l/encoders.hpp"
#include "np2l/graph.hpp"
#include "np2l/matrix.hpp"

namespace np2l {

// ---------------------------------------------------------------------------
// K-means

struct KMeansOptions {
  std::uint64_t seed = 0;
  int max_iter = 300;
  /// Stop once the summed squared center shift falls below tol times the
  /// mean per-column variance of the data.
  double tol = 1e-4;
  /// Independent k-means++ restarts; the lowest final inertia wins.
  int n_init = 10;
};

struct ClusterModel {
  Matrix centers;  // k x d
  int k = 0;
  std::vector<int> assignment;
  double inertia = 0.0;
  /// Inertia after every assignment step of the selected restart.
  std::vector<double> inertia_history;
  int iterations = 0;
};

/// Lloyd iterations from k-means++ seeds. An empty cluster is reseeded at the
/// point farthest from its current center (lowest index on ties).
ClusterModel kmeans(const Matrix& z, int k, const KMeansOptions& opts = {});

/// D_ij = |z_i - c_j|^2.
Matrix distance_matrix(const Matrix& z, const Matrix& centers);

// ---------------------------------------------------------------------------
// Partial labels

/// Set of cluster ids as a bit mask (bit j = cluster j). Supports k <= 64.
using LabelMask = std::uint64_t;

inline constexpr int kMaxClusters = 64;

struct PartialLabelAssignment {
  std::vector<LabelMask> masks;  // one per node
  int k = 0;
  int o = 0;

  std::size_t size() const { return masks.size(); }
  /// n x k 0/1 matrix P.
  Matrix dense() const;
};

/// The o clusters with the smallest distance per row; ties go to the lower
/// cluster index.
PartialLabelAssignment partial_labels(const Matrix& distances, int o);

/// Masks from an explicit 0/1 matrix (tests and tooling).
PartialLabelAssignment partial_labels_from_dense(const Matrix& p);

// ---------------------------------------------------------------------------
// Negative relation

/// N_ij = 1 iff the partial-label sets of i and j are disjoint.
class NegativeRelation {
 public:
  NegativeRelation() = default;
  explicit NegativeRelation(PartialLabelAssignment p);

  std::size_t num_nodes() const { return p_.size(); }
  int k() const { return p_.k; }
  int o() const { return p_.o; }
  LabelMask mask_of(NodeId v) const { return p_.masks[v]; }
  const PartialLabelAssignment& partial() const { return p_; }
  /// Distinct masks present, ascending.
  const std::vector<LabelMask>& distinct_masks() const { return distinct_; }
  /// Unordered pairs (a < b) of present masks with a & b == 0.
  const std::vector<std::pair<LabelMask, LabelMask>>& incompatible_pairs() const {
    return incompatible_;
  }
  bool negative(NodeId i, NodeId j) const { return (p_.masks[i] & p_.masks[j]) == 0; }
  /// Dense n x n N (small n only).
  Matrix dense() const;

 private:
  PartialLabelAssignment p_;
  std::vector<LabelMask> distinct_;
  std::vector<std::pair<LabelMask, LabelMask>> incompatible_;
};

NegativeRelation negative_relation(const PartialLabelAssignment& p);

// ---------------------------------------------------------------------------
// Negative edge set

/// E^- in compressed form. Nodes are grouped by (mask, tag); every pair of
/// groups with disjoint masks and not sharing a non-negative tag forms a
/// complete bipartite block of candidate pairs. A sorted list of excluded
/// candidate pairs (dropped positives, held-out pairs) is subtracted.
///
/// Tags are -1 by default. The SGCN+ filter tags each train node with its
/// label so that same-label train pairs stop being candidates.
class NegativeEdges {
 public:
  NegativeEdges() = default;
  NegativeEdges(std::vector<LabelMask> masks, std::vector<int> tags, std::vector<NodePair> excluded);

  std::size_t num_nodes() const { return group_of_.size(); }
  std::size_t num_groups() const { return group_mask_.size(); }
  std::size_t group_of(NodeId v) const { return group_of_[v]; }
  LabelMask group_mask(std::size_t g) const { return group_mask_[g]; }
  int group_tag(std::size_t g) const { return group_tag_[g]; }
  const std::vector<NodeId>& group_members(std::size_t g) const { return members_[g]; }
  const std::vector<std::size_t>& partners(std::size_t g) const { return partners_[g]; }
  const std::vector<int>& tags() const { return tags_; }
  const std::vector<LabelMask>& masks() const { return masks_; }
  bool tagged() const;

  /// Candidate pairs removed from the blocks, canonical and sorted.
  const std::vector<NodePair>& excluded() const { return excluded_; }

  bool is_candidate(NodeId i, NodeId j) const;
  bool contains(NodeId i, NodeId j) const;
  std::size_t degree(NodeId v) const { return degree_[v]; }
  const std::vector<std::size_t>& degrees() const { return degree_; }
  /// Undirected edge count |E^-|.
  std::size_t count() const { return count_; }
  bool empty() const { return count_ == 0; }

  /// Neighbors of v in E^-, ascending (materialized on demand).
  std::vector<NodeId> neighbors(NodeId v) const;
  /// All of E^- as canonical pairs, sorted. Size is count(); use sparingly.
  std::vector<NodePair> materialize() const;

  /// out_v = sum over E^- neighbors u of h_u.
  Matrix aggregate_sum(const Matrix& h) const;

  /// Same masks and exclusions with new tags. Throws std::logic_error if
  /// this set is already tagged.
  NegativeEdges retagged(std::vector<int> tags) const;

 private:
  std::vector<LabelMask> masks_;
  std::vector<int> tags_;
  std::vector<std::size_t> group_of_;
  std::vector<LabelMask> group_mask_;
  std::vector<int> group_tag_;
  std::vector<std::vector<NodeId>> members_;
  std::vector<std::vector<std::size_t>> partners_;
  std::vector<NodePair> excluded_;
  std::vector<std::size_t> excl_offsets_;  // CSR over excluded, both directions
  std::vector<NodeId> excl_adj_;
  std::vector<std::size_t> degree_;
  std::size_t count_ = 0;
};

/// Signed graph: E^+ kept as a plain graph, E^- compressed. Positive edges
/// whose endpoints are negatively related are dropped from both sets.
struct SignedGraph {
  Graph positive;
  NegativeEdges negative;
  std::vector<NodePair> dropped;

  std::size_t num_nodes() const { return positive.num_nodes(); }
};

/// E^+ = {(i,j) in E : N_ij = 0}, dropped = {(i,j) in E : N_ij = 1},
/// E^- = {(i,j) not in E : N_ij = 1} minus `exclude`.
SignedGraph build_signed_graph(const Graph& g, const NegativeRelation& n,
                               const std::vector<NodePair>& exclude = {});

/// Dense A - N update (small n only): +1 on E^+, -1 on E^-, 0 elsewhere.
Matrix signed_adjacency_dense(const SignedGraph& s);

// ---------------------------------------------------------------------------
// Recall

enum class RecallDenominator {
  GroundTruthPairs,  // |M|_0, pairs with equal labels
  PredictedPairs,    // |S|_0, pairs with overlapping partial labels
};

struct RecallReport {
  double recall = 0.0;
  int o = 0;
  int k = 0;
  RecallDenominator mode = RecallDenominator::GroundTruthPairs;
  std::uint64_t numerator = 0;
  std::uint64_t denominator = 0;
};

/// sum_ij sign(M_ij S_ij) / denominator over all ordered pairs, diagonal
/// included, with M = Y Y^T and S = P P^T.
RecallReport recall_score(const PartialLabelAssignment& p, const LabelVector& y,
                          RecallDenominator mode = RecallDenominator::GroundTruthPairs);

// ---------------------------------------------------------------------------
// Pipeline

enum class EncoderKind { GaeGcn, VgaeGcn, GaeGncn, VgaeGncn };

EncoderKind encoder_kind_from_string(const std::string& s);
std::string to_string(EncoderKind kind);

struct Np2eConfig {
  EncoderKind encoder = EncoderKind::GaeGcn;
  EncoderDims dims;
  double gncn_scale = 1.8;
  TrainConfig train;
  KMeansOptions kmeans;
  /// Node pairs kept out of E^- (held-out link prediction pairs).
  std::vector<NodePair> exclude;
};

struct Np2eResult {
  Matrix embedding;
  ClusterModel clusters;
  Matrix distances;
  PartialLabelAssignment partial;
  NegativeRelation relation;
  SignedGraph signed_graph;
  std::optional<RecallReport> recall;
};

/// Trains the configured auto-encoder on g and returns its embedding.
Matrix np2e_embedding(const Graph& g, const FeatureMatrix& x, const Np2eConfig& cfg);

/// Clustering onward from a fixed embedding.
Np2eResult np2e_from_embedding(const Graph& g, Matrix z, int k, int o, const Np2eConfig& cfg,
                               const LabelVector* labels = nullptr);

/// Full pipeline: embedding, k-means, top-o partial labels, negative relation,
/// signed graph. The recall report is filled when labels are given and is
/// never used by training.
Np2eResult run_np2e(const Graph& g, const FeatureMatrix& x, int k, int o, const Np2eConfig& cfg,
                    const LabelVector* labels = nullptr);

}  // namespace np2l
