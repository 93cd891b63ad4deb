#include "np2l/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace np2l::ad {

namespace {

using NodePtr = std::shared_ptr<Node>;

void check_finite(const std::string& op, const Matrix& m) {
  if (!m.all_finite()) throw NumericError(op + ": non-finite value in forward result");
}

Tensor make_result(std::string op, Matrix value, std::vector<NodePtr> inputs,
                   std::function<void(const Node&)> backward_fn) {
  check_finite(op, value);
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->op = std::move(op);
  n->leaf = false;
  n->requires_grad = std::any_of(inputs.begin(), inputs.end(),
                                 [](const NodePtr& p) { return p->requires_grad; });
  if (n->requires_grad) {
    n->inputs = std::move(inputs);
    n->backward_fn = std::move(backward_fn);
  }
  return Tensor::from_node(std::move(n));
}

void require_same_shape(const std::string& op, const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(op + ": shape mismatch " + shape_string(a.rows(), a.cols()) +
                                " vs " + shape_string(b.rows(), b.cols()));
  }
}

void accumulate_if(const NodePtr& n, const Matrix& g) {
  if (n->requires_grad) accumulate(*n, g);
}

}  // namespace

// ---------------------------------------------------------------------------

Tensor Tensor::parameter(Matrix value) {
  check_finite("parameter", value);
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = true;
  n->op = "parameter";
  return Tensor(std::move(n));
}

Tensor Tensor::constant(Matrix value) {
  check_finite("constant", value);
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->op = "constant";
  return Tensor(std::move(n));
}

Matrix& Tensor::mutable_value() {
  if (!node_->leaf) throw std::logic_error("mutable_value: tensor is not a leaf");
  return node_->value;
}

double Tensor::item() const {
  if (rows() != 1 || cols() != 1) {
    throw std::invalid_argument("item: tensor is " + shape_string(rows(), cols()));
  }
  return node_->value[0];
}

void Tensor::zero_grad() { node_->grad = Matrix(); }

void accumulate(Node& node, const Matrix& g) {
  if (node.grad.empty()) {
    node.grad = g;
  } else {
    node.grad += g;
  }
}

void Tensor::backward() const {
  if (rows() != 1 || cols() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got " +
                                shape_string(rows(), cols()));
  }
  if (!node_->requires_grad) {
    throw std::logic_error("backward: loss is detached from every parameter");
  }

  // Iterative post-order DFS; `order` ends with the root.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->inputs.size()) {
      Node* child = n->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  // Intermediate gradients are per-sweep; only leaves accumulate across calls.
  for (Node* n : order)
    if (!n->leaf) n->grad = Matrix();
  accumulate(*node_, Matrix(1, 1, 1.0));

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->leaf || n->grad.empty()) continue;
    n->backward_fn(*n);
  }
}

// ---------------------------------------------------------------------------
// linear algebra

Tensor matmul(const Tensor& a, const Tensor& b) {
  auto an = a.node();
  auto bn = b.node();
  return make_result("matmul", np2l::matmul(a.value(), b.value()), {an, bn},
                     [an, bn](const Node& self) {
                       if (an->requires_grad) accumulate(*an, matmul_nt(self.grad, bn->value));
                       if (bn->requires_grad) accumulate(*bn, matmul_tn(an->value, self.grad));
                     });
}

Tensor transpose(const Tensor& a) {
  auto an = a.node();
  return make_result("transpose", a.value().transposed(), {an}, [an](const Node& self) {
    accumulate(*an, self.grad.transposed());
  });
}

Tensor spmm(const SparseRef& s, const Tensor& d) {
  if (!s) throw std::invalid_argument("spmm: null sparse operand");
  OperatorRef op = s;
  return propagate(op, d);
}

Tensor propagate(const OperatorRef& op, const Tensor& d) {
  if (!op) throw std::invalid_argument("propagate: null operator");
  auto dn = d.node();
  return make_result("propagate", op->apply(d.value()), {dn}, [op, dn](const Node& self) {
    accumulate(*dn, op->apply_transpose(self.grad));
  });
}

// ---------------------------------------------------------------------------
// elementwise

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a.value(), b.value());
  auto an = a.node();
  auto bn = b.node();
  return make_result("add", a.value() + b.value(), {an, bn}, [an, bn](const Node& self) {
    accumulate_if(an, self.grad);
    accumulate_if(bn, self.grad);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a.value(), b.value());
  auto an = a.node();
  auto bn = b.node();
  return make_result("sub", a.value() - b.value(), {an, bn}, [an, bn](const Node& self) {
    accumulate_if(an, self.grad);
    if (bn->requires_grad) accumulate(*bn, self.grad * -1.0);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a.value(), b.value());
  auto an = a.node();
  auto bn = b.node();
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return make_result("mul", std::move(out), {an, bn}, [an, bn](const Node& self) {
    if (an->requires_grad) {
      Matrix g = self.grad;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] *= bn->value[i];
      accumulate(*an, g);
    }
    if (bn->requires_grad) {
      Matrix g = self.grad;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] *= an->value[i];
      accumulate(*bn, g);
    }
  });
}

Tensor scale(const Tensor& a, double s) {
  auto an = a.node();
  return make_result("scale", a.value() * s, {an},
                     [an, s](const Node& self) { accumulate(*an, self.grad * s); });
}

Tensor add_scalar(const Tensor& a, double s) {
  auto an = a.node();
  Matrix out = a.value();
  for (double& v : out.data()) v += s;
  return make_result("add_scalar", std::move(out), {an},
                     [an](const Node& self) { accumulate(*an, self.grad); });
}

Tensor relu(const Tensor& a) {
  auto an = a.node();
  Matrix out = a.value();
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return make_result("relu", std::move(out), {an}, [an](const Node& self) {
    Matrix g = self.grad;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (!(an->value[i] > 0.0)) g[i] = 0.0;
    accumulate(*an, g);
  });
}

namespace {
double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}
}  // namespace

Tensor sigmoid(const Tensor& a) {
  auto an = a.node();
  Matrix out = a.value();
  for (double& v : out.data()) v = stable_sigmoid(v);
  return make_result("sigmoid", std::move(out), {an}, [an](const Node& self) {
    const auto& y = self.value;
    Matrix g = self.grad;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= y[i] * (1.0 - y[i]);
    accumulate(*an, g);
  });
}

Tensor exp(const Tensor& a) {
  auto an = a.node();
  Matrix out = a.value();
  for (double& v : out.data()) v = std::exp(v);
  return make_result("exp", std::move(out), {an}, [an](const Node& self) {
    Matrix g = self.grad;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= self.value[i];
    accumulate(*an, g);
  });
}

Tensor square(const Tensor& a) {
  auto an = a.node();
  Matrix out = a.value();
  for (double& v : out.data()) v *= v;
  return make_result("square", std::move(out), {an}, [an](const Node& self) {
    Matrix g = self.grad;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= 2.0 * an->value[i];
    accumulate(*an, g);
  });
}

// ---------------------------------------------------------------------------
// structural

Tensor mul_column(const Tensor& gate, const Tensor& h) {
  if (gate.cols() != 1 || gate.rows() != h.rows()) {
    throw std::invalid_argument("mul_column: gate " + shape_string(gate.rows(), gate.cols()) +
                                " does not broadcast over " + shape_string(h.rows(), h.cols()));
  }
  auto gn = gate.node();
  auto hn = h.node();
  Matrix out = h.value();
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (double& v : out.row(r)) v *= gate.value()[r];
  return make_result("mul_column", std::move(out), {gn, hn}, [gn, hn](const Node& self) {
    const std::size_t rows = self.grad.rows();
    const std::size_t cols = self.grad.cols();
    if (gn->requires_grad) {
      Matrix g(rows, 1);
      for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < cols; ++c) s += self.grad(r, c) * hn->value(r, c);
        g[r] = s;
      }
      accumulate(*gn, g);
    }
    if (hn->requires_grad) {
      Matrix g = self.grad;
      for (std::size_t r = 0; r < rows; ++r)
        for (double& v : g.row(r)) v *= gn->value[r];
      accumulate(*hn, g);
    }
  });
}

Tensor row_normalize(const Tensor& a, double target) {
  auto an = a.node();
  const Matrix& x = a.value();
  Matrix out(x.rows(), x.cols());
  std::vector<double> norms(x.rows(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double sq = 0.0;
    for (double v : x.row(r)) sq += v * v;
    norms[r] = std::sqrt(sq);
    if (norms[r] > 0.0) {
      const double f = target / norms[r];
      for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) = x(r, c) * f;
    }
  }
  return make_result(
      "row_normalize", std::move(out), {an}, [an, norms, target](const Node& self) {
        // d(s x/|x|) = s/|x| (g - u (u.g)), u = x/|x|
        const Matrix& x = an->value;
        Matrix g(x.rows(), x.cols());
        for (std::size_t r = 0; r < x.rows(); ++r) {
          if (norms[r] == 0.0) continue;
          double ug = 0.0;
          for (std::size_t c = 0; c < x.cols(); ++c) ug += x(r, c) * self.grad(r, c);
          ug /= norms[r];
          const double f = target / norms[r];
          for (std::size_t c = 0; c < x.cols(); ++c)
            g(r, c) = f * (self.grad(r, c) - x(r, c) / norms[r] * ug);
        }
        accumulate(*an, g);
      });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  std::vector<NodePtr> inputs;
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw std::invalid_argument("concat_cols: row count mismatch");
    offsets.push_back(cols);
    cols += p.cols();
    inputs.push_back(p.node());
  }
  Matrix out(rows, cols);
  for (std::size_t k = 0; k < parts.size(); ++k)
    for (std::size_t r = 0; r < rows; ++r)
      std::copy(parts[k].value().row(r).begin(), parts[k].value().row(r).end(),
                out.row(r).begin() + static_cast<std::ptrdiff_t>(offsets[k]));
  auto in_copy = inputs;
  return make_result("concat_cols", std::move(out), std::move(inputs),
                     [in_copy, offsets](const Node& self) {
                       for (std::size_t k = 0; k < in_copy.size(); ++k) {
                         if (!in_copy[k]->requires_grad) continue;
                         Matrix g(self.grad.rows(), in_copy[k]->value.cols());
                         for (std::size_t r = 0; r < g.rows(); ++r)
                           for (std::size_t c = 0; c < g.cols(); ++c)
                             g(r, c) = self.grad(r, offsets[k] + c);
                         accumulate(*in_copy[k], g);
                       }
                     });
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t count) {
  if (begin + count > a.rows()) throw std::invalid_argument("slice_rows: out of range");
  auto an = a.node();
  Matrix out(count, a.cols());
  for (std::size_t r = 0; r < count; ++r)
    std::copy(a.value().row(begin + r).begin(), a.value().row(begin + r).end(),
              out.row(r).begin());
  return make_result("slice_rows", std::move(out), {an}, [an, begin](const Node& self) {
    Matrix g(an->value.rows(), an->value.cols());
    for (std::size_t r = 0; r < self.grad.rows(); ++r)
      std::copy(self.grad.row(r).begin(), self.grad.row(r).end(), g.row(begin + r).begin());
    accumulate(*an, g);
  });
}

// ---------------------------------------------------------------------------
// reductions and losses

Tensor sum(const Tensor& a) {
  auto an = a.node();
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return make_result("sum", Matrix(1, 1, s), {an}, [an](const Node& self) {
    accumulate(*an, Matrix(an->value.rows(), an->value.cols(), self.grad[0]));
  });
}

Tensor mean(const Tensor& a) {
  if (a.value().size() == 0) throw std::invalid_argument("mean: empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Tensor pair_dot(const Tensor& z, const std::vector<NodePair>& pairs) {
  const Matrix& zv = z.value();
  for (const auto& p : pairs) {
    if (p.u >= zv.rows() || p.v >= zv.rows())
      throw std::invalid_argument("pair_dot: node id out of range");
  }
  Matrix out(pairs.size(), 1);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto a = zv.row(pairs[k].u);
    const auto b = zv.row(pairs[k].v);
    double s = 0.0;
    for (std::size_t c = 0; c < zv.cols(); ++c) s += a[c] * b[c];
    out[k] = s;
  }
  auto zn = z.node();
  return make_result("pair_dot", std::move(out), {zn}, [zn, pairs](const Node& self) {
    const Matrix& zv = zn->value;
    Matrix g(zv.rows(), zv.cols());
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const double gk = self.grad[k];
      if (gk == 0.0) continue;
      auto gu = g.row(pairs[k].u);
      auto gv = g.row(pairs[k].v);
      const auto zu = zv.row(pairs[k].u);
      const auto zw = zv.row(pairs[k].v);
      for (std::size_t c = 0; c < zv.cols(); ++c) {
        gu[c] += gk * zw[c];
        gv[c] += gk * zu[c];
      }
    }
    accumulate(*zn, g);
  });
}

Tensor bce_with_logits(const Tensor& logits, const Matrix& targets) {
  require_same_shape("bce_with_logits", logits.value(), targets);
  if (targets.size() == 0) throw std::invalid_argument("bce_with_logits: empty input");
  const Matrix& x = logits.value();
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    total += std::max(xi, 0.0) - xi * targets[i] + std::log1p(std::exp(-std::abs(xi)));
  }
  const double inv = 1.0 / static_cast<double>(x.size());
  auto ln = logits.node();
  return make_result("bce_with_logits", Matrix(1, 1, total * inv), {ln},
                     [ln, targets, inv](const Node& self) {
                       Matrix g(targets.rows(), targets.cols());
                       for (std::size_t i = 0; i < g.size(); ++i)
                         g[i] = (stable_sigmoid(ln->value[i]) - targets[i]) * inv * self.grad[0];
                       accumulate(*ln, g);
                     });
}

Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels,
                             const std::vector<std::uint32_t>& rows) {
  const Matrix& x = logits.value();
  if (labels.size() != x.rows())
    throw std::invalid_argument("softmax_cross_entropy: label count != logit rows");
  if (rows.empty()) throw std::invalid_argument("softmax_cross_entropy: no rows selected");
  Matrix probs(rows.size(), x.cols());
  double total = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const std::uint32_t r = rows[k];
    const int y = labels[r];
    if (y < 0 || static_cast<std::size_t>(y) >= x.cols())
      throw std::invalid_argument("softmax_cross_entropy: label out of range");
    double mx = x(r, 0);
    for (double v : x.row(r)) mx = std::max(mx, v);
    double z = 0.0;
    for (double v : x.row(r)) z += std::exp(v - mx);
    const double log_z = mx + std::log(z);
    for (std::size_t c = 0; c < x.cols(); ++c) probs(k, c) = std::exp(x(r, c) - log_z);
    total += log_z - x(r, static_cast<std::size_t>(y));
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  auto ln = logits.node();
  return make_result("softmax_cross_entropy", Matrix(1, 1, total * inv), {ln},
                     [ln, probs, labels, rows, inv](const Node& self) {
                       Matrix g(ln->value.rows(), ln->value.cols());
                       const double s = inv * self.grad[0];
                       for (std::size_t k = 0; k < rows.size(); ++k) {
                         auto gr = g.row(rows[k]);
                         for (std::size_t c = 0; c < gr.size(); ++c) gr[c] += probs(k, c) * s;
                         gr[static_cast<std::size_t>(labels[rows[k]])] -= s;
                       }
                       accumulate(*ln, g);
                     });
}

}  // namespace np2l::ad
