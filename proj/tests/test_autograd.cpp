#include <cmath>

#include "doctest.h"
#include "np2l/adam.hpp"
#include "np2l/autograd.hpp"
#include "np2l/encoders.hpp"
#include "support.hpp"

using namespace np2l;
using namespace np2l::testing;
using ad::Tensor;

namespace {

Tensor param(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  return Tensor::parameter(random_matrix(r, c, rng, scale));
}

/// Weighted sum with a fixed random weight so every output entry gets a
/// distinct upstream gradient.
Tensor probe(const Tensor& t, std::uint64_t seed) {
  Rng rng(seed);
  return ad::sum(ad::mul(t, Tensor::constant(random_matrix(t.rows(), t.cols(), rng))));
}

void expect_grads(const std::vector<Tensor>& params, const std::function<Tensor()>& loss) {
  Rng rng(99);
  GradCheckResult r = grad_check(params, loss, rng, 1000);
  INFO(r.worst);
  CHECK(r.checked > 0);
  CHECK(r.failures == 0);
}

}  // namespace

TEST_CASE("sum of W has all-ones gradient") {
  Rng rng(1);
  Tensor w = param(3, 4, rng);
  ad::sum(w).backward();
  for (double g : w.grad().data()) CHECK(g == 1.0);
}

TEST_CASE("backward accumulates without zero_grad") {
  Rng rng(2);
  Tensor w = param(2, 2, rng);
  ad::sum(w).backward();
  ad::sum(w).backward();
  for (double g : w.grad().data()) CHECK(g == 2.0);
  w.zero_grad();
  ad::sum(ad::scale(w, 3.0)).backward();
  for (double g : w.grad().data()) CHECK(g == 3.0);
}

TEST_CASE("parameter outside the loss keeps a zero gradient") {
  Rng rng(3);
  Tensor w = param(2, 2, rng), v = param(2, 2, rng);
  ad::sum(v).backward();
  CHECK_FALSE(w.has_grad());
}

TEST_CASE("backward errors") {
  Rng rng(4);
  Tensor w = param(2, 2, rng);
  CHECK_THROWS_AS(w.backward(), std::invalid_argument);
  Tensor c = Tensor::constant(Matrix(1, 1, 2.0));
  CHECK_THROWS_AS(ad::scale(c, 2.0).backward(), std::logic_error);
}

TEST_CASE("non-finite forward results raise NumericError") {
  Tensor big = Tensor::parameter(Matrix(1, 1, 1000.0));
  CHECK_THROWS_AS(ad::exp(big), NumericError);
}

TEST_CASE("elementwise ops pass finite-difference checks") {
  Rng rng(5);
  Tensor a = param(4, 3, rng), b = param(4, 3, rng);
  expect_grads({a, b}, [&] { return probe(ad::add(a, b), 1); });
  expect_grads({a, b}, [&] { return probe(ad::sub(a, b), 2); });
  expect_grads({a, b}, [&] { return probe(ad::mul(a, b), 3); });
  expect_grads({a}, [&] { return probe(ad::scale(a, -1.7), 4); });
  expect_grads({a}, [&] { return probe(ad::add_scalar(a, 0.3), 5); });
  expect_grads({a}, [&] { return probe(ad::relu(a), 6); });
  expect_grads({a}, [&] { return probe(ad::sigmoid(a), 7); });
  expect_grads({a}, [&] { return probe(ad::exp(a), 8); });
  expect_grads({a}, [&] { return probe(ad::square(a), 9); });
  expect_grads({a}, [&] { return ad::mean(ad::square(a)); });
}

TEST_CASE("linear algebra ops pass finite-difference checks") {
  Rng rng(6);
  Tensor a = param(5, 3, rng), b = param(3, 4, rng);
  expect_grads({a, b}, [&] { return probe(ad::matmul(a, b), 10); });
  expect_grads({a}, [&] { return probe(ad::transpose(a), 11); });
  auto s = std::make_shared<const SparseMatrix>(random_sparse(6, 5, 0.4, rng));
  expect_grads({a}, [&] { return probe(ad::spmm(s, a), 12); });
  OperatorRef op = s;
  expect_grads({a}, [&] { return probe(ad::propagate(op, a), 13); });
}

TEST_CASE("structural ops pass finite-difference checks") {
  Rng rng(7);
  Tensor g = param(5, 1, rng), h = param(5, 3, rng), k = param(5, 2, rng);
  expect_grads({g, h}, [&] { return probe(ad::mul_column(g, h), 14); });
  expect_grads({h}, [&] { return probe(ad::row_normalize(h, 1.8), 15); });
  expect_grads({h, k}, [&] { return probe(ad::concat_cols({h, k, h}), 16); });
  expect_grads({h}, [&] { return probe(ad::slice_rows(h, 1, 3), 17); });
}

TEST_CASE("row_normalize keeps zero rows at zero") {
  Matrix m = Matrix::from_rows({{3, 4}, {0, 0}});
  Tensor t = Tensor::parameter(m);
  Tensor out = ad::row_normalize(t, 2.0);
  CHECK(out.value()(0, 0) == doctest::Approx(1.2));
  CHECK(out.value()(0, 1) == doctest::Approx(1.6));
  CHECK(out.value()(1, 0) == 0.0);
  ad::sum(out).backward();
  CHECK(t.grad().all_finite());
}

TEST_CASE("loss ops pass finite-difference checks") {
  Rng rng(8);
  Tensor z = param(6, 3, rng);
  std::vector<NodePair> pairs{{0, 1}, {2, 5}, {3, 3}, {4, 0}};
  expect_grads({z}, [&] { return probe(ad::pair_dot(z, pairs), 18); });
  Tensor logits = param(6, 1, rng, 3.0);
  Matrix t = Matrix::from_rows({{1}, {0}, {1}, {1}, {0}, {0}});
  expect_grads({logits}, [&] { return ad::bce_with_logits(logits, t); });
  Tensor cls = param(6, 4, rng, 2.0);
  std::vector<int> labels{0, 3, 2, 1, 1, 0};
  std::vector<std::uint32_t> rows{0, 2, 3, 5};
  expect_grads({cls}, [&] { return ad::softmax_cross_entropy(cls, labels, rows); });
}

TEST_CASE("bce_with_logits matches the naive formula and stays finite") {
  Tensor x = Tensor::parameter(Matrix::from_rows({{0.3}, {-2.0}, {800.0}, {-800.0}}));
  Matrix t = Matrix::from_rows({{1}, {0}, {1}, {0}});
  const double naive = (-std::log(1 / (1 + std::exp(-0.3))) - std::log(1 - 1 / (1 + std::exp(2.0)))) / 4;
  CHECK(ad::bce_with_logits(x, t).item() == doctest::Approx(naive).epsilon(1e-12));
}

TEST_CASE("softmax cross entropy equals -log softmax at the label") {
  Tensor x = Tensor::parameter(Matrix::from_rows({{1, 2, 3}}));
  const double z = std::exp(1) + std::exp(2) + std::exp(3);
  CHECK(ad::softmax_cross_entropy(x, {0}, {0}).item() == doctest::Approx(-std::log(std::exp(1) / z)));
}

TEST_CASE("two-layer GCN with BCE on a 20-node graph passes the gradient check") {
  Rng rng(9);
  Graph g = random_graph(20, 0.2, rng);
  auto x = std::make_shared<const SparseMatrix>(random_sparse(20, 8, 0.3, rng));
  GcnEncoder enc(x, std::make_shared<const SparseMatrix>(gcn_normalized_adjacency(g)), {8, 8, 6}, Head::GAE, rng);
  Rng sample(10);
  ReconTargets t = sampled_targets(g, sample);
  std::vector<Tensor> params;
  for (auto& p : enc.parameters()) params.push_back(p.tensor);
  Rng pick(11);
  GradCheckResult r = grad_check(params, [&] { return gae_loss(enc.encode().mu, t); }, pick, 100);
  INFO(r.worst);
  CHECK(r.checked >= 100);
  CHECK(r.failures == 0);
}

// ---------------------------------------------------------------------------
// Adam

namespace {

/// Scalar reference implementation of one Adam step.
struct ScalarAdam {
  double lr, b1 = 0.9, b2 = 0.999, eps = 1e-8, wd = 0.0;
  double m = 0.0, v = 0.0;
  int t = 0;
  double step(double p, double g) {
    g += wd * p;
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    return p - lr * mh / (std::sqrt(vh) + eps);
  }
};

}  // namespace

TEST_CASE("adam with zero gradient and no decay leaves parameters unchanged") {
  Tensor w = Tensor::parameter(Matrix::from_rows({{1.5, -2.0}}));
  Adam opt({w}, {.lr = 0.01});
  ad::sum(ad::scale(w, 0.0)).backward();
  opt.step();
  CHECK(w.value() == Matrix::from_rows({{1.5, -2.0}}));
}

TEST_CASE("adam matches an independent scalar implementation") {
  Tensor w = Tensor::parameter(Matrix(1, 1, 0.5));
  AdamOptions o;
  o.lr = 0.01;
  o.weight_decay = 0.1;
  Adam opt({w}, o);
  ScalarAdam ref{.lr = 0.01, .wd = 0.1};
  double p = 0.5;
  for (int i = 0; i < 5; ++i) {
    opt.zero_grad();
    // loss = w^3 so the gradient changes every step
    ad::sum(ad::mul(ad::square(w), w)).backward();
    const double g = 3 * p * p;
    opt.step();
    p = ref.step(p, g);
    CHECK(w.value()[0] == doctest::Approx(p).epsilon(1e-14));
  }
}

TEST_CASE("first adam step with grad 1 moves by about lr") {
  Tensor w = Tensor::parameter(Matrix(1, 1, 0.0));
  Adam opt({w}, {.lr = 0.01});
  ad::sum(w).backward();
  opt.step();
  ScalarAdam ref{.lr = 0.01};
  CHECK(w.value()[0] == doctest::Approx(ref.step(0.0, 1.0)).epsilon(1e-15));
  CHECK(w.value()[0] == doctest::Approx(-0.01).epsilon(1e-6));
}

TEST_CASE("weight decay alone shrinks parameters toward zero") {
  Tensor w = Tensor::parameter(Matrix::from_rows({{2.0, -3.0}}));
  Adam opt({w}, {.lr = 0.01, .weight_decay = 1e-3});
  for (int i = 0; i < 3; ++i) {
    opt.zero_grad();
    ad::sum(ad::scale(w, 0.0)).backward();
    opt.step();
  }
  CHECK(w.value()[0] < 2.0);
  CHECK(w.value()[0] > 0.0);
  CHECK(w.value()[1] > -3.0);
  CHECK(w.value()[1] < 0.0);
}

TEST_CASE("adam step without gradients throws") {
  Tensor w = Tensor::parameter(Matrix(1, 1, 1.0));
  Adam opt({w}, {});
  CHECK_THROWS_AS(opt.step(), std::logic_error);
}

TEST_CASE("adam is bit-deterministic") {
  auto run = [] {
    Rng rng(12);
    Tensor w = Tensor::parameter(random_matrix(3, 3, rng));
    Adam opt({w}, {.lr = 0.05, .weight_decay = 0.01});
    for (int i = 0; i < 10; ++i) {
      opt.zero_grad();
      ad::sum(ad::square(ad::matmul(w, w))).backward();
      opt.step();
    }
    return w.value();
  };
  CHECK(run() == run());
}
