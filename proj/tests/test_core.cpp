#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "np2l/dataset.hpp"
#include "np2l/graph.hpp"
#include "np2l/matrix.hpp"
#include "np2l/splits.hpp"
#include "support.hpp"

using namespace np2l;
using namespace np2l::testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("np2l_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p);
  out << s;
}

void write_triangle(const fs::path& dir) {
  write_text(dir / "edges.tsv", "0\t1\n1\t2\n2\t0\n1\t0\n");
  write_text(dir / "features.csv", "1,0\n0,1\n1,1\n");
  write_text(dir / "labels.txt", "0\n1\n0\n");
  write_text(dir / "manifest.json", R"({"name":"tri","n":3,"m":2,"num_classes":2,"directed_edges":6})");
}

}  // namespace

TEST_CASE("matmul variants agree with the naive triple loop") {
  Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t r = 1 + rng.below(9), k = 1 + rng.below(9), c = 1 + rng.below(9);
    Matrix a = random_matrix(r, k, rng), b = random_matrix(k, c, rng);
    CHECK(max_abs_diff(matmul(a, b), naive_matmul(a, b)) < 1e-12);
    CHECK(max_abs_diff(matmul_tn(a.transposed(), b), naive_matmul(a, b)) < 1e-12);
    CHECK(max_abs_diff(matmul_nt(a, b.transposed()), naive_matmul(a, b)) < 1e-12);
  }
}

TEST_CASE("sparse from_triplets sums duplicates and drops zeros") {
  auto s = SparseMatrix::from_triplets(2, 3, {{0, 2, 1.0}, {0, 2, 2.0}, {1, 0, 1.0}, {1, 0, -1.0}, {0, 0, 4.0}});
  CHECK(s.nnz() == 2);
  CHECK(s.at(0, 2) == 3.0);
  CHECK(s.at(0, 0) == 4.0);
  CHECK(s.at(1, 0) == 0.0);
  CHECK(s.row_cols(0)[0] == 0);
  CHECK(s.row_cols(0)[1] == 2);
}

TEST_CASE("sparse products match dense multiplication up to 64x64") {
  Rng rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t r = 1 + rng.below(64), c = 1 + rng.below(64), d = 1 + rng.below(8);
    SparseMatrix s = random_sparse(r, c, rng.uniform(0.0, 0.3), rng);
    Matrix x = random_matrix(c, d, rng);
    CHECK(max_abs_diff(s.apply(x), naive_matmul(s.to_dense(), x)) < 1e-12);
    Matrix y = random_matrix(r, d, rng);
    CHECK(max_abs_diff(s.apply_transpose(y), naive_matmul(s.to_dense().transposed(), y)) < 1e-12);
    CHECK(s.transposed().to_dense() == s.to_dense().transposed());
    CHECK(SparseMatrix::from_dense(s.to_dense()) == s);
  }
}

TEST_CASE("sparse identity, annihilation and shape errors") {
  Rng rng(3);
  Matrix d = random_matrix(5, 3, rng);
  CHECK(SparseMatrix::identity(5).apply(d) == d);
  SparseMatrix zero(4, 5);
  Matrix out = zero.apply(d);
  CHECK(out.rows() == 4);
  for (double v : out.data()) CHECK(v == 0.0);
  CHECK_THROWS_AS(SparseMatrix::identity(4).apply(d), std::invalid_argument);
}

TEST_CASE("path adjacency times one-hot columns gives neighbor indicators") {
  Graph g(3, {{0, 1}, {1, 2}});
  Matrix eye = Matrix::identity(3);
  Matrix out = g.adjacency().apply(eye);
  CHECK(out == Matrix::from_rows({{0, 1, 0}, {1, 0, 1}, {0, 1, 0}}));
}

TEST_CASE("graph construction symmetrizes, deduplicates and drops self-loops") {
  Graph g(4, {{1, 0}, {0, 1}, {2, 2}, {3, 1}, {1, 3}});
  CHECK(g.num_edges() == 2);
  CHECK(g.num_directed_entries() == 4);
  CHECK(g.has_edge(0, 1));
  CHECK(g.has_edge(1, 0));
  CHECK_FALSE(g.has_edge(2, 2));
  CHECK(g.degree(1) == 2);
  SparseMatrix a = g.adjacency();
  CHECK(a.to_dense() == a.to_dense().transposed());
  CHECK_THROWS_AS(Graph(3, {{0, 3}}), std::invalid_argument);
}

TEST_CASE("gcn normalization matches the dense formula") {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    Graph g = random_graph(1 + rng.below(30), 0.2, rng);
    CHECK(max_abs_diff(gcn_normalized_adjacency(g).to_dense(), dense_gcn_norm(g)) < 1e-14);
  }
}

TEST_CASE("mean adjacency rows sum to one except isolated nodes") {
  Graph g(4, {{0, 1}, {0, 2}});
  Matrix m = mean_adjacency(g).to_dense();
  CHECK(m(0, 1) == doctest::Approx(0.5));
  CHECK(m(0, 2) == doctest::Approx(0.5));
  CHECK(m(1, 0) == 1.0);
  for (std::size_t j = 0; j < 4; ++j) CHECK(m(3, j) == 0.0);
}

TEST_CASE("label validation rejects out-of-range classes") {
  LabelVector y{{0, 1, 2}, 2};
  CHECK_THROWS_AS(y.validate(), std::invalid_argument);
  LabelVector ok{{0, 1, 1}, 2};
  CHECK_NOTHROW(ok.validate());
  CHECK(ok.class_counts() == std::vector<std::size_t>{1, 2});
}

TEST_CASE("triangle toy dataset loads as a symmetric 3-cycle") {
  fs::path dir = scratch_dir("triangle");
  write_triangle(dir);
  Dataset ds = load_dataset_dir(dir);
  CHECK(ds.graph.num_nodes() == 3);
  CHECK(ds.graph.num_edges() == 3);
  CHECK(ds.features.cols() == 2);
  CHECK(ds.labels.num_classes == 2);
  Matrix a = ds.graph.adjacency().to_dense();
  CHECK(a == a.transposed());
  // loading twice gives identical structures
  Dataset again = load_dataset(dir.parent_path(), dir.filename().string());
  CHECK(again.graph == ds.graph);
  CHECK(again.features == ds.features);
  CHECK(again.labels == ds.labels);
}

TEST_CASE("dataset loader errors") {
  fs::path dir = scratch_dir("bad");
  write_triangle(dir);
  SUBCASE("missing file") {
    fs::remove(dir / "labels.txt");
    CHECK_THROWS_AS(load_dataset_dir(dir), DatasetError);
  }
  SUBCASE("edge index beyond n") {
    write_text(dir / "edges.tsv", "0\t1\n1\t5\n");
    CHECK_THROWS_AS(load_dataset_dir(dir), DatasetError);
  }
  SUBCASE("class id out of range") {
    write_text(dir / "labels.txt", "0\n1\n2\n");
    CHECK_THROWS_AS(load_dataset_dir(dir), DatasetError);
  }
  SUBCASE("feature width mismatch") {
    write_text(dir / "features.csv", "1,0\n0,1,1\n1,1\n");
    CHECK_THROWS_AS(load_dataset_dir(dir), DatasetError);
  }
  SUBCASE("manifest edge count mismatch") {
    write_text(dir / "edges.tsv", "0\t1\n1\t2\n");
    CHECK_THROWS_AS(load_dataset_dir(dir), DatasetError);
  }
  SUBCASE("unknown dataset") { CHECK_THROWS_AS(load_dataset(dir, "nope"), DatasetError); }
}

TEST_CASE("synthetic dataset round-trips through the on-disk format") {
  SyntheticSpec spec;
  spec.nodes_per_class = 10;
  spec.num_classes = 3;
  Dataset ds = make_synthetic_dataset(spec);
  fs::path dir = scratch_dir("roundtrip");
  write_dataset(ds, dir / "synthetic");
  CHECK(dataset_available(dir, "synthetic"));
  Dataset back = load_dataset(dir, "synthetic");
  CHECK(back.graph == ds.graph);
  CHECK(back.features == ds.features);
  CHECK(back.labels == ds.labels);
  CHECK(make_synthetic_dataset(spec).graph == ds.graph);
}

TEST_CASE("10-edge ring splits 8/1/1, verified disjoint exhaustively") {
  std::vector<NodePair> ring;
  for (NodeId i = 0; i < 10; ++i) ring.push_back({i, static_cast<NodeId>((i + 1) % 10)});
  Graph g(10, ring);
  EdgeSplit s = split_edges(g, 0.8, 0);
  CHECK(s.train_edges.size() == 8);
  CHECK(s.val_edges.size() == 1);
  CHECK(s.test_edges.size() == 1);
  CHECK(s.val_neg.size() == 1);
  CHECK(s.test_neg.size() == 1);
  std::vector<const std::vector<NodePair>*> sets{&s.train_edges, &s.val_edges, &s.test_edges};
  std::set<NodePair> all;
  for (auto* a : sets)
    for (auto* b : sets)
      if (a != b)
        for (const auto& e : *a)
          for (const auto& f : *b) CHECK_FALSE(e == f);
  for (auto* a : sets) all.insert(a->begin(), a->end());
  CHECK(std::vector<NodePair>(all.begin(), all.end()) == g.edges());
  for (const auto* neg : {&s.val_neg, &s.test_neg})
    for (const auto& e : *neg) {
      CHECK_FALSE(g.has_edge(e.u, e.v));
      CHECK(e.u != e.v);
    }
}

TEST_CASE("edge split fractions, partition and determinism") {
  Rng rng(5);
  Graph g = random_graph(120, 0.1, rng);
  const std::size_t m = g.num_edges();
  EdgeSplit a = split_edges(g, 0.8, 7);
  CHECK(a.val_edges.size() == static_cast<std::size_t>(std::llround(m * 0.4 / 3)));
  CHECK(a.test_edges.size() == static_cast<std::size_t>(std::llround(m * 0.2 / 3)));
  CHECK(a.train_edges.size() + a.val_edges.size() + a.test_edges.size() == m);
  CHECK(a.val_neg.size() == a.val_edges.size());
  CHECK(a.test_neg.size() == a.test_edges.size());
  std::set<NodePair> negs(a.val_neg.begin(), a.val_neg.end());
  negs.insert(a.test_neg.begin(), a.test_neg.end());
  CHECK(negs.size() == a.val_neg.size() + a.test_neg.size());
  EdgeSplit b = split_edges(g, 0.8, 7);
  CHECK(a.test_edges == b.test_edges);
  CHECK(a.val_neg == b.val_neg);
  EdgeSplit c = split_edges(g, 0.8, 8);
  CHECK(a.test_edges != c.test_edges);
  CHECK(a.train_graph(120).num_edges() == a.train_edges.size());
  CHECK(a.held_out_pairs().size() == 2 * (a.val_edges.size() + a.test_edges.size()));
}

TEST_CASE("edge split errors") {
  std::vector<NodePair> few;
  for (NodeId i = 0; i < 9; ++i) few.push_back({i, i + 1});
  CHECK_THROWS_AS(split_edges(Graph(10, few), 0.8, 0), std::invalid_argument);
  Rng rng(6);
  Graph g = random_graph(30, 0.3, rng);
  CHECK_THROWS_AS(split_edges(g, 0.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(split_edges(g, 1.0, 0), std::invalid_argument);
}

namespace {
std::size_t count_in(const std::vector<bool>& mask) { return std::count(mask.begin(), mask.end(), true); }

void check_disjoint_cover(const NodeSplit& s, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const int hits = s.train_mask[i] + s.val_mask[i] + s.test_mask[i];
    CHECK(hits <= 1);
  }
}
}  // namespace

TEST_CASE("node split strategy 1 on two classes of five is 3/1/1 per class") {
  LabelVector y{{0, 0, 0, 0, 0, 1, 1, 1, 1, 1}, 2};
  NodeSplit s = split_nodes(y, SplitStrategy::PerClass622, 0);
  check_disjoint_cover(s, 10);
  for (int c = 0; c < 2; ++c) {
    std::size_t tr = 0, va = 0, te = 0;
    for (std::size_t i = 0; i < 10; ++i) {
      if (y.y[i] != c) continue;
      tr += s.train_mask[i];
      va += s.val_mask[i];
      te += s.test_mask[i];
    }
    CHECK(tr == 3);
    CHECK(va == 1);
    CHECK(te == 1);
  }
}

TEST_CASE("node split strategy 3 on 100 nodes is 60/20/20") {
  LabelVector y;
  y.num_classes = 3;
  for (int i = 0; i < 100; ++i) y.y.push_back(i % 3);
  NodeSplit s = split_nodes(y, SplitStrategy::Random622, 1);
  check_disjoint_cover(s, 100);
  CHECK(count_in(s.train_mask) == 60);
  CHECK(count_in(s.val_mask) == 20);
  CHECK(count_in(s.test_mask) == 20);
  NodeSplit again = split_nodes(y, SplitStrategy::Random622, 1);
  CHECK(again.train_mask == s.train_mask);
}

TEST_CASE("node split strategy 2 gives equal per-class train counts") {
  LabelVector y;
  y.num_classes = 3;
  const int sizes[] = {11, 30, 52};
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < sizes[c]; ++i) y.y.push_back(c);
  NodeSplit s = split_nodes(y, SplitStrategy::BalancedTrainOnly, 2);
  check_disjoint_cover(s, y.size());
  std::vector<std::size_t> per_class(3, 0);
  for (auto v : s.train_nodes()) ++per_class[y.y[v]];
  for (int c = 0; c < 3; ++c) CHECK(per_class[c] == 6);  // floor(0.6 * 11)
  const std::size_t rest = y.size() - 18;
  CHECK(s.val_nodes().size() + s.test_nodes().size() == rest);
  CHECK(s.val_nodes().size() >= rest / 2);
  CHECK(s.val_nodes().size() <= rest / 2 + 1);
}

TEST_CASE("node split rejects tiny classes") {
  LabelVector y{{0, 0, 0, 0, 0, 1, 1}, 2};
  CHECK_THROWS_AS(split_nodes(y, SplitStrategy::PerClass622, 0), std::invalid_argument);
  CHECK_THROWS_AS(split_strategy_from_int(4), std::invalid_argument);
}
