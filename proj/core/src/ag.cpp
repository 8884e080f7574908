#include "slt/ag.hpp"

#include <cmath>
#include <unordered_set>

#include "slt/errors.hpp"

namespace slt::ag {

namespace {

Var make_node(Matrix value, std::vector<Var> parents, std::function<void(Node&)> backprop) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->parents = std::move(parents);
  for (const auto& p : n->parents) {
    if (p->requires_grad) {
      n->requires_grad = true;
      break;
    }
  }
  if (n->requires_grad) n->backprop = std::move(backprop);
  return n;
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (a->value.rows() != b->value.rows() || a->value.cols() != b->value.cols()) {
    throw DimensionMismatch(std::string(op) + ": " + std::to_string(a->value.rows()) + "x" +
                            std::to_string(a->value.cols()) + " vs " +
                            std::to_string(b->value.rows()) + "x" +
                            std::to_string(b->value.cols()));
  }
}

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

}  // namespace

Var constant(Matrix m) {
  auto n = std::make_shared<Node>();
  n->value = std::move(m);
  return n;
}

Var leaf(Matrix m, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->value = std::move(m);
  n->requires_grad = requires_grad;
  return n;
}

Var scalar_const(double v) { return constant(Matrix::Constant(1, 1, v)); }

double scalar(const Var& v) {
  if (v->value.rows() != 1 || v->value.cols() != 1) {
    throw DimensionMismatch("scalar() on a non-1x1 value");
  }
  return v->value(0, 0);
}

Var add(const Var& a, const Var& b) {
  check_same_shape(a, b, "add");
  return make_node(a->value + b->value, {a, b}, [a, b](Node& self) {
    if (a->requires_grad) a->ensure_grad() += self.grad;
    if (b->requires_grad) b->ensure_grad() += self.grad;
  });
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a, b, "sub");
  return make_node(a->value - b->value, {a, b}, [a, b](Node& self) {
    if (a->requires_grad) a->ensure_grad() += self.grad;
    if (b->requires_grad) b->ensure_grad() -= self.grad;
  });
}

Var cmul(const Var& a, const Var& b) {
  check_same_shape(a, b, "cmul");
  return make_node(a->value.cwiseProduct(b->value), {a, b}, [a, b](Node& self) {
    if (a->requires_grad) a->ensure_grad() += self.grad.cwiseProduct(b->value);
    if (b->requires_grad) b->ensure_grad() += self.grad.cwiseProduct(a->value);
  });
}

Var cdiv(const Var& a, const Var& b) {
  check_same_shape(a, b, "cdiv");
  return make_node(a->value.cwiseQuotient(b->value), {a, b}, [a, b](Node& self) {
    if (a->requires_grad) a->ensure_grad() += self.grad.cwiseQuotient(b->value);
    if (b->requires_grad) {
      b->ensure_grad() -=
          self.grad.cwiseProduct(a->value).cwiseQuotient(b->value.cwiseProduct(b->value));
    }
  });
}

Var neg(const Var& a) {
  return make_node(-a->value, {a}, [a](Node& self) {
    if (a->requires_grad) a->ensure_grad() -= self.grad;
  });
}

Var scale(const Var& a, double c) {
  return make_node(a->value * c, {a}, [a, c](Node& self) {
    if (a->requires_grad) a->ensure_grad() += self.grad * c;
  });
}

Var add_rowvec(const Var& x, const Var& row) {
  if (row->value.rows() != 1 || row->value.cols() != x->value.cols()) {
    throw DimensionMismatch("add_rowvec: row must be 1x" + std::to_string(x->value.cols()));
  }
  Matrix out = x->value;
  out.rowwise() += row->value.row(0);
  return make_node(std::move(out), {x, row}, [x, row](Node& self) {
    if (x->requires_grad) x->ensure_grad() += self.grad;
    if (row->requires_grad) row->ensure_grad() += self.grad.colwise().sum();
  });
}

Var div_colvec(const Var& x, const Var& col) {
  if (col->value.cols() != 1 || col->value.rows() != x->value.rows()) {
    throw DimensionMismatch("div_colvec: col must be " + std::to_string(x->value.rows()) + "x1");
  }
  Matrix out = x->value;
  for (Eigen::Index i = 0; i < out.rows(); ++i) out.row(i) /= col->value(i, 0);
  return make_node(std::move(out), {x, col}, [x, col](Node& self) {
    if (x->requires_grad) {
      Matrix& g = x->ensure_grad();
      for (Eigen::Index i = 0; i < g.rows(); ++i) g.row(i) += self.grad.row(i) / col->value(i, 0);
    }
    if (col->requires_grad) {
      Matrix& g = col->ensure_grad();
      for (Eigen::Index i = 0; i < g.rows(); ++i) {
        const double c = col->value(i, 0);
        g(i, 0) -= self.grad.row(i).cwiseProduct(x->value.row(i)).sum() / (c * c);
      }
    }
  });
}

Var mul_scalar(const Var& x, const Var& s) {
  if (s->value.rows() != 1 || s->value.cols() != 1) throw DimensionMismatch("mul_scalar: s not 1x1");
  return make_node(x->value * s->value(0, 0), {x, s}, [x, s](Node& self) {
    if (x->requires_grad) x->ensure_grad() += self.grad * s->value(0, 0);
    if (s->requires_grad) s->ensure_grad()(0, 0) += self.grad.cwiseProduct(x->value).sum();
  });
}

Var div_scalar(const Var& x, const Var& s) {
  if (s->value.rows() != 1 || s->value.cols() != 1) throw DimensionMismatch("div_scalar: s not 1x1");
  const double sv = s->value(0, 0);
  return make_node(x->value / sv, {x, s}, [x, s](Node& self) {
    const double v = s->value(0, 0);
    if (x->requires_grad) x->ensure_grad() += self.grad / v;
    if (s->requires_grad) {
      s->ensure_grad()(0, 0) -= self.grad.cwiseProduct(x->value).sum() / (v * v);
    }
  });
}

Var square(const Var& a) {
  return make_node(a->value.cwiseProduct(a->value), {a}, [a](Node& self) {
    if (a->requires_grad) a->ensure_grad() += 2.0 * self.grad.cwiseProduct(a->value);
  });
}

Var sqrt_elem(const Var& a) {
  Matrix out = a->value.cwiseSqrt();
  return make_node(out, {a}, [a, out](Node& self) {
    if (a->requires_grad) {
      a->ensure_grad() += 0.5 * self.grad.cwiseQuotient(out);
    }
  });
}

Var matmul(const Var& a, const Var& b) {
  if (a->value.cols() != b->value.rows()) {
    throw DimensionMismatch("matmul: " + std::to_string(a->value.rows()) + "x" +
                            std::to_string(a->value.cols()) + " * " +
                            std::to_string(b->value.rows()) + "x" +
                            std::to_string(b->value.cols()));
  }
  return make_node(a->value * b->value, {a, b}, [a, b](Node& self) {
    if (a->requires_grad) a->ensure_grad().noalias() += self.grad * b->value.transpose();
    if (b->requires_grad) b->ensure_grad().noalias() += a->value.transpose() * self.grad;
  });
}

Var transpose(const Var& a) {
  return make_node(a->value.transpose(), {a}, [a](Node& self) {
    if (a->requires_grad) a->ensure_grad() += self.grad.transpose();
  });
}

Var slice_rows(const Var& x, int first, int count) {
  if (first < 0 || count < 0 || first + count > x->value.rows()) {
    throw DimensionMismatch("slice_rows out of range");
  }
  return make_node(x->value.middleRows(first, count), {x}, [x, first, count](Node& self) {
    if (x->requires_grad) x->ensure_grad().middleRows(first, count) += self.grad;
  });
}

Var slice_cols(const Var& x, int first, int count) {
  if (first < 0 || count < 0 || first + count > x->value.cols()) {
    throw DimensionMismatch("slice_cols out of range");
  }
  return make_node(x->value.middleCols(first, count), {x}, [x, first, count](Node& self) {
    if (x->requires_grad) x->ensure_grad().middleCols(first, count) += self.grad;
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionMismatch("concat_cols: empty");
  Eigen::Index rows = parts[0]->value.rows();
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    if (p->value.rows() != rows) throw DimensionMismatch("concat_cols: row mismatch");
    cols += p->value.cols();
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p->value.cols()) = p->value;
    at += p->value.cols();
  }
  return make_node(std::move(out), parts, [parts](Node& self) {
    Eigen::Index at = 0;
    for (const auto& p : parts) {
      if (p->requires_grad) p->ensure_grad() += self.grad.middleCols(at, p->value.cols());
      at += p->value.cols();
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionMismatch("concat_rows: empty");
  Eigen::Index cols = parts[0]->value.cols();
  Eigen::Index rows = 0;
  for (const auto& p : parts) {
    if (p->value.cols() != cols) throw DimensionMismatch("concat_rows: col mismatch");
    rows += p->value.rows();
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleRows(at, p->value.rows()) = p->value;
    at += p->value.rows();
  }
  return make_node(std::move(out), parts, [parts](Node& self) {
    Eigen::Index at = 0;
    for (const auto& p : parts) {
      if (p->requires_grad) p->ensure_grad() += self.grad.middleRows(at, p->value.rows());
      at += p->value.rows();
    }
  });
}

Var shift_rows(const Var& x, int offset) {
  const Eigen::Index rows = x->value.rows();
  Matrix out = Matrix::Zero(rows, x->value.cols());
  for (Eigen::Index i = 0; i < rows; ++i) {
    Eigen::Index src = i - offset;
    if (src >= 0 && src < rows) out.row(i) = x->value.row(src);
  }
  return make_node(std::move(out), {x}, [x, offset, rows](Node& self) {
    if (!x->requires_grad) return;
    Matrix& g = x->ensure_grad();
    for (Eigen::Index i = 0; i < rows; ++i) {
      Eigen::Index src = i - offset;
      if (src >= 0 && src < rows) g.row(src) += self.grad.row(i);
    }
  });
}

Var gather_rows(const Var& table, const std::vector<int>& ids) {
  Matrix out(static_cast<Eigen::Index>(ids.size()), table->value.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table->value.rows()) {
      throw DimensionMismatch("gather_rows: id out of range");
    }
    out.row(static_cast<Eigen::Index>(i)) = table->value.row(ids[i]);
  }
  return make_node(std::move(out), {table}, [table, ids](Node& self) {
    if (!table->requires_grad) return;
    Matrix& g = table->ensure_grad();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      g.row(ids[i]) += self.grad.row(static_cast<Eigen::Index>(i));
    }
  });
}

Var sum_all(const Var& x) {
  return make_node(Matrix::Constant(1, 1, x->value.sum()), {x}, [x](Node& self) {
    if (x->requires_grad) x->ensure_grad().array() += self.grad(0, 0);
  });
}

Var softmax_rows(const Var& x) {
  Matrix out = x->value;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double m = out.row(i).maxCoeff();
    out.row(i) = (out.row(i).array() - m).exp();
    out.row(i) /= out.row(i).sum();
  }
  return make_node(out, {x}, [x, out](Node& self) {
    if (!x->requires_grad) return;
    Matrix& g = x->ensure_grad();
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      const double dot = self.grad.row(i).cwiseProduct(out.row(i)).sum();
      g.row(i) += (self.grad.row(i).array() - dot).matrix().cwiseProduct(out.row(i));
    }
  });
}

Var layer_norm_rows(const Var& x, const Var& gamma, const Var& beta, double eps) {
  const Eigen::Index rows = x->value.rows();
  const Eigen::Index cols = x->value.cols();
  if (gamma->value.cols() != cols || beta->value.cols() != cols || gamma->value.rows() != 1 ||
      beta->value.rows() != 1) {
    throw DimensionMismatch("layer_norm_rows: gamma/beta must be 1x" + std::to_string(cols));
  }
  Matrix xhat(rows, cols);
  Eigen::VectorXd inv_std(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double mean = x->value.row(i).mean();
    const double var = (x->value.row(i).array() - mean).square().mean();
    inv_std(i) = 1.0 / std::sqrt(var + eps);
    xhat.row(i) = (x->value.row(i).array() - mean) * inv_std(i);
  }
  Matrix out = xhat;
  for (Eigen::Index i = 0; i < rows; ++i) {
    out.row(i) = out.row(i).cwiseProduct(gamma->value.row(0)) + beta->value.row(0);
  }
  return make_node(std::move(out), {x, gamma, beta},
                   [x, gamma, beta, xhat, inv_std](Node& self) {
                     const Eigen::Index rows = xhat.rows();
                     const Eigen::Index cols = xhat.cols();
                     if (gamma->requires_grad) {
                       gamma->ensure_grad() += self.grad.cwiseProduct(xhat).colwise().sum();
                     }
                     if (beta->requires_grad) beta->ensure_grad() += self.grad.colwise().sum();
                     if (!x->requires_grad) return;
                     Matrix& g = x->ensure_grad();
                     const double n = static_cast<double>(cols);
                     for (Eigen::Index i = 0; i < rows; ++i) {
                       Eigen::RowVectorXd dxhat =
                           self.grad.row(i).cwiseProduct(gamma->value.row(0));
                       const double mean_dxhat = dxhat.mean();
                       const double mean_dxhat_xhat = dxhat.cwiseProduct(xhat.row(i)).sum() / n;
                       g.row(i) += inv_std(i) * (dxhat.array() - mean_dxhat -
                                                 xhat.row(i).array() * mean_dxhat_xhat)
                                       .matrix();
                     }
                   });
}

Var gelu(const Var& x) {
  Matrix out = x->value.unaryExpr(
      [](double v) { return 0.5 * v * (1.0 + std::erf(v * kInvSqrt2)); });
  return make_node(std::move(out), {x}, [x](Node& self) {
    if (!x->requires_grad) return;
    Matrix d = x->value.unaryExpr([](double v) {
      const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
      const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
      return cdf + v * pdf;
    });
    x->ensure_grad() += self.grad.cwiseProduct(d);
  });
}

Var tanh_elem(const Var& x) {
  Matrix out = x->value.array().tanh();
  return make_node(out, {x}, [x, out](Node& self) {
    if (!x->requires_grad) return;
    x->ensure_grad() += self.grad.cwiseProduct((1.0 - out.array().square()).matrix());
  });
}

Var cross_entropy_rows(const Var& logits, const std::vector<int>& targets) {
  const Eigen::Index rows = logits->value.rows();
  if (static_cast<Eigen::Index>(targets.size()) != rows) {
    throw DimensionMismatch("cross_entropy_rows: one target per row required");
  }
  Matrix probs = logits->value;
  double nll = 0.0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (targets[i] < 0 || targets[i] >= logits->value.cols()) {
      throw DimensionMismatch("cross_entropy_rows: target id out of range");
    }
    const double m = probs.row(i).maxCoeff();
    const double lse = m + std::log((probs.row(i).array() - m).exp().sum());
    nll += lse - probs(i, targets[i]);
    probs.row(i) = (probs.row(i).array() - lse).exp();
  }
  return make_node(Matrix::Constant(1, 1, nll), {logits}, [logits, probs, targets](Node& self) {
    if (!logits->requires_grad) return;
    const double g = self.grad(0, 0);
    Matrix d = probs;
    for (Eigen::Index i = 0; i < d.rows(); ++i) d(i, targets[i]) -= 1.0;
    logits->ensure_grad() += g * d;
  });
}

void backward(const Var& root, const Matrix& seed) {
  if (!root->requires_grad) return;
  if (seed.rows() != root->value.rows() || seed.cols() != root->value.cols()) {
    throw DimensionMismatch("backward: seed shape");
  }
  // post-order DFS, then run backprop in reverse topological order
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.get(), 0);
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Node* p = node->parents[idx].get();
      ++idx;
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root->ensure_grad() += seed;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backprop) {
      n->ensure_grad();
      n->backprop(*n);
    }
  }
}

void backward(const Var& root) {
  if (root->value.rows() != 1 || root->value.cols() != 1) {
    throw DimensionMismatch("backward without seed requires a scalar root");
  }
  backward(root, Matrix::Constant(1, 1, 1.0));
}

}  // namespace slt::ag
