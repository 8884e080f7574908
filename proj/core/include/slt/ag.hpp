#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace slt::ag {

using Matrix = Eigen::MatrixXd;

// Reverse-mode autodiff over dense double matrices, define-by-run.
//
// A graph is whatever set of Nodes is reachable from the Var you call
// backward() on; there is no global tape. Scalars are 1x1 matrices.
class Node {
 public:
  Matrix value;
  Matrix grad;  // allocated on first touch, same shape as value
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;  // reads this->grad, accumulates into parents

  Matrix& ensure_grad() {
    if (grad.rows() != value.rows() || grad.cols() != value.cols()) {
      grad = Matrix::Zero(value.rows(), value.cols());
    }
    return grad;
  }
};

using Var = std::shared_ptr<Node>;

Var constant(Matrix m);
Var leaf(Matrix m, bool requires_grad = true);
Var scalar_const(double v);

double scalar(const Var& v);  // requires 1x1

// elementwise / broadcast
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var cmul(const Var& a, const Var& b);
Var cdiv(const Var& a, const Var& b);
Var neg(const Var& a);
Var scale(const Var& a, double c);
Var add_rowvec(const Var& x, const Var& row);   // row: 1 x cols
Var div_colvec(const Var& x, const Var& col);   // col: rows x 1, divides row i by col(i)
Var mul_scalar(const Var& x, const Var& s);     // s: 1x1
Var div_scalar(const Var& x, const Var& s);     // s: 1x1
Var square(const Var& a);
Var sqrt_elem(const Var& a);

// structure
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var slice_rows(const Var& x, int first, int count);
Var slice_cols(const Var& x, int first, int count);
Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var shift_rows(const Var& x, int offset);  // rows move down by offset (zero fill)
Var gather_rows(const Var& table, const std::vector<int>& ids);

// reductions / nonlinearities
Var sum_all(const Var& x);  // 1x1
Var softmax_rows(const Var& x);
Var layer_norm_rows(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);
Var gelu(const Var& x);
Var tanh_elem(const Var& x);

// -sum_i log softmax(logits_i)[targets[i]]; returns 1x1
Var cross_entropy_rows(const Var& logits, const std::vector<int>& targets);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return matmul(a, b); }

// Accumulates gradients into every reachable node with requires_grad, seeding
// d(root)/d(root) = 1. root must be scalar unless seed is supplied.
void backward(const Var& root);
void backward(const Var& root, const Matrix& seed);

}  // namespace slt::ag
