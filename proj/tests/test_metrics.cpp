#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "np2l/checkpoint.hpp"
#include "np2l/metrics.hpp"
#include "support.hpp"

using namespace np2l;
using namespace np2l::testing;

namespace {

double pair_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] != 1 || y[j] != 0) continue;
      pairs += 1.0;
      wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
    }
  return wins / pairs;
}

/// Step-interpolated AP from precision and recall counted at each distinct
/// threshold by brute force.
double brute_ap(const std::vector<double>& s, const std::vector<int>& y) {
  std::vector<double> thresholds(s);
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  double positives = 0.0;
  for (int v : y) positives += v;
  double ap = 0.0, prev_recall = 0.0;
  for (double t : thresholds) {
    double tp = 0.0, predicted = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s[i] >= t) {
        predicted += 1.0;
        tp += y[i];
      }
    const double recall = tp / positives;
    ap += (recall - prev_recall) * (tp / predicted);
    prev_recall = recall;
  }
  return ap;
}

}  // namespace

TEST_CASE("AUC and AP examples") {
  AucAp a = eval_auc_ap({0.9, 0.8, 0.4, 0.3}, {1, 0, 1, 0});
  CHECK(a.auc == 0.75);
  CHECK(a.auc == pair_auc({0.9, 0.8, 0.4, 0.3}, {1, 0, 1, 0}));
  CHECK(a.ap == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0));
  AucAp perfect = eval_auc_ap({5, 4, 1, 0}, {1, 1, 0, 0});
  CHECK(perfect.auc == 1.0);
  CHECK(perfect.ap == 1.0);
  CHECK(eval_auc_ap({2, 2, 2, 2, 2}, {1, 0, 1, 0, 0}).auc == 0.5);
  CHECK_THROWS_AS(eval_auc_ap({1, 2}, {1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(eval_auc_ap({1, 2}, {0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(eval_auc_ap({1, 2}, {0}), std::invalid_argument);
}

TEST_CASE("AUC and AP agree with brute force on random tied scores") {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(60);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.below(8));  // heavy ties
      y[i] = static_cast<int>(rng.below(2));
    }
    y[0] = 1;
    y[1] = 0;
    AucAp a = eval_auc_ap(s, y);
    CHECK(a.auc == doctest::Approx(pair_auc(s, y)).epsilon(1e-12));
    CHECK(a.ap == doctest::Approx(brute_ap(s, y)).epsilon(1e-12));
  }
}

TEST_CASE("pair scores are inner products") {
  Matrix z = Matrix::from_rows({{1, 2}, {3, -1}, {0, 4}});
  CHECK(pair_scores(z, {{0, 1}, {1, 2}}) == std::vector<double>{1.0, -4.0});
  AucAp a = link_auc_ap(z, {{0, 2}}, {{1, 2}});
  CHECK(a.auc == 1.0);
}

TEST_CASE("accuracy uses the first maximal logit") {
  Matrix logits = Matrix::from_rows({{1, 1, 0}, {0, 2, 1}, {3, 0, 0}});
  CHECK(accuracy(logits, {0, 1, 1}, {0, 1, 2}) == doctest::Approx(2.0 / 3.0));
  CHECK(accuracy(logits, {1, 1, 1}, {0}) == 0.0);
  CHECK(accuracy(logits, {0, 1, 0}, {1, 2}) == 1.0);
}

TEST_CASE("mean and population standard deviation") {
  MeanStd m = mean_std({1, 2, 3, 4});
  CHECK(m.mean == 2.5);
  CHECK(m.std == doctest::Approx(std::sqrt(1.25)));
  CHECK(mean_std({7}).std == 0.0);
}

// ---------------------------------------------------------------------------
// edge quality and SGCN+

TEST_CASE("edge quality matches the dense oracle on 200-node instances") {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 20 + rng.below(181);
    Graph g = random_graph(n, 4.0 / n, rng);
    const int k = 2 + static_cast<int>(rng.below(5));
    const int c = 2 + static_cast<int>(rng.below(4));
    PartialLabelAssignment p = random_partial(n, k, 1 + static_cast<int>(rng.below(k)), rng);
    std::vector<NodePair> exclude;
    for (int e = 0; e < 20; ++e) {
      const auto a = static_cast<NodeId>(rng.below(n)), b = static_cast<NodeId>(rng.below(n));
      if (a != b) exclude.push_back({a, b});
    }
    SignedGraph s = build_signed_graph(g, NegativeRelation(p), exclude);
    LabelVector y;
    y.num_classes = c;
    std::vector<bool> train(n);
    for (std::size_t i = 0; i < n; ++i) {
      y.y.push_back(static_cast<int>(rng.below(c)));
      train[i] = rng.uniform() < 0.6;
    }
    DenseSigned d = dense_signed_oracle(g, p.masks, k, {}, exclude);
    DenseQuality o = dense_quality_oracle(d.neg, y.y, train);
    EdgeQuality q = edge_quality_report(s, y, train);
    CHECK(q.negative_edges == o.count);
    CHECK(q.wrong == o.wrong);
    CHECK(q.bridging == o.bridging);
    CHECK(q.wrong_train == o.wrong_train);
    if (o.count > 0) {
      CHECK(q.wrong_ratio == static_cast<double>(o.wrong) / o.count);
      CHECK(q.bridging_ratio == static_cast<double>(o.bridging) / o.count);
    }

    SignedGraph f = sgcn_plus_filter(s, y, train);
    std::vector<int> tags(n, -1);
    for (std::size_t i = 0; i < n; ++i)
      if (train[i]) tags[i] = y.y[i];
    DenseSigned df = dense_signed_oracle(g, p.masks, k, tags, exclude);
    CHECK(f.negative.materialize() == df.negative);
    DenseQuality of = dense_quality_oracle(df.neg, y.y, train);
    EdgeQuality qf = edge_quality_report(f, y, train);
    CHECK(qf.negative_edges == of.count);
    CHECK(qf.wrong == of.wrong);
    CHECK(qf.bridging == of.bridging);
    CHECK(qf.wrong_train == 0);
    // filtered set is a subset; positive edges untouched
    auto before = s.negative.materialize(), after = f.negative.materialize();
    CHECK(std::includes(before.begin(), before.end(), after.begin(), after.end()));
    CHECK(f.positive == s.positive);
    CHECK(f.dropped == s.dropped);
  }
}

TEST_CASE("edge quality trivial cases") {
  // two label groups on disjoint masks: every negative edge crosses classes
  PartialLabelAssignment p{{1, 1, 2, 2}, 2, 1};
  SignedGraph s = build_signed_graph(Graph(4, {}), NegativeRelation(p));
  LabelVector y{{0, 0, 1, 1}, 2};
  EdgeQuality q = edge_quality_report(s, y, {true, true, true, true});
  CHECK(q.negative_edges == 4);
  CHECK(q.wrong_ratio == 0.0);
  CHECK(q.bridging_ratio == 0.0);
  EdgeQuality half = edge_quality_report(s, y, {true, true, false, false});
  CHECK(half.bridging_ratio == 1.0);

  PartialLabelAssignment all{{3, 3}, 2, 2};
  EdgeQuality empty = edge_quality_report(build_signed_graph(Graph(2, {}), NegativeRelation(all)), LabelVector{{0, 1}, 2},
                                          {true, false});
  CHECK(empty.empty);
  CHECK(empty.wrong_ratio == 0.0);
  CHECK(empty.bridging_ratio == 0.0);
}

TEST_CASE("SGCN+ examples") {
  PartialLabelAssignment p{{1, 2}, 2, 1};
  SignedGraph s = build_signed_graph(Graph(2, {}), NegativeRelation(p));
  REQUIRE(s.negative.count() == 1);
  SignedGraph f = sgcn_plus_filter(s, LabelVector{{0, 0}, 1}, {true, true});
  CHECK(f.negative.empty());
  SignedGraph kept = sgcn_plus_filter(s, LabelVector{{0, 1}, 2}, {true, true});
  CHECK(kept.negative.materialize() == s.negative.materialize());
  SignedGraph untrained = sgcn_plus_filter(s, LabelVector{{0, 0}, 1}, {true, false});
  CHECK(untrained.negative.count() == 1);
  CHECK_THROWS_AS(sgcn_plus_filter(f, LabelVector{{0, 0}, 1}, {true, true}), std::logic_error);
}

// ---------------------------------------------------------------------------
// checkpoints

TEST_CASE("checkpoint round trip") {
  namespace fs = std::filesystem;
  Rng rng(3);
  const fs::path path = fs::temp_directory_path() / "np2l_test_ckpt.txt";
  ad::Tensor a = ad::Tensor::parameter(random_matrix(3, 4, rng));
  ad::Tensor b = ad::Tensor::parameter(random_matrix(2, 1, rng));
  const Matrix a0 = a.value(), b0 = b.value();
  write_checkpoint(path, {{"layer.a", a}, {"layer.b", b}});
  std::vector<StoredTensor> stored = read_checkpoint(path);
  REQUIRE(stored.size() == 2);
  CHECK(stored[0].name == "layer.a");
  CHECK(stored[0].value == a0);
  a.mutable_value().fill(0.0);
  b.mutable_value().fill(0.0);
  load_checkpoint(path, {{"layer.b", b}, {"layer.a", a}});
  CHECK(a.value() == a0);
  CHECK(b.value() == b0);
  ad::Tensor wrong = ad::Tensor::parameter(Matrix(4, 3));
  CHECK_THROWS(load_checkpoint(path, {{"layer.a", wrong}}));
  CHECK_THROWS(load_checkpoint(path, {{"layer.c", wrong}}));
}
