#include "slt/losses.hpp"

#include <cmath>

#include "slt/errors.hpp"

namespace slt {

using ag::Matrix;
using ag::Var;

void LossWeights::validate() const {
  if (lambda_sem < 0 || lambda_ce < 0 || lambda_ae < 0 || lambda_nce < 0 || alpha_mse < 0 ||
      beta_cos < 0) {
    throw ConfigError("loss weights must be non-negative");
  }
  if (tau <= 0) throw ConfigError("tau must be positive");
}

void Batch::validate() const {
  if (z_list.empty()) throw DataError("batch is empty");
  if (z_list.size() != s_list.size()) throw DimensionMismatch("batch z/s lengths differ");
  const int d = z_list.front().dim();
  for (const auto& v : z_list) {
    if (v.dim() != d) throw DimensionMismatch("inconsistent z dimension in batch");
  }
  for (const auto& v : s_list) {
    if (v.dim() != d) throw DimensionMismatch("inconsistent s dimension in batch");
  }
}

namespace {

void check_pair(const Var& z, const Var& s) {
  if (z->value.rows() != 1 || s->value.rows() != 1 || z->value.cols() != s->value.cols()) {
    throw DimensionMismatch("loss expects 1xd vectors of equal dimension");
  }
}

Var row_const(const SemanticVector& v) { return ag::constant(v.values.transpose()); }

}  // namespace

Var semantic_mse_graph(const Var& z, const Var& s) {
  check_pair(z, s);
  return ag::sum_all(ag::square(ag::sub(z, s)));
}

Var cosine_loss_graph(const Var& z, const Var& s) {
  check_pair(z, s);
  if (z->value.norm() == 0.0) throw ZeroVector("cosine_loss: z");
  if (s->value.norm() == 0.0) throw ZeroVector("cosine_loss: s");
  Var dot = ag::sum_all(ag::cmul(z, s));
  Var nz = ag::sqrt_elem(ag::sum_all(ag::square(z)));
  Var ns = ag::sqrt_elem(ag::sum_all(ag::square(s)));
  Var cos = ag::cdiv(dot, ag::cmul(nz, ns));
  return ag::sub(ag::scalar_const(1.0), cos);
}

Var combined_sem_graph(const Var& z, const Var& s, double alpha_mse, double beta_cos) {
  // keep the disabled branch out of the graph so its gradient is exactly absent
  if (beta_cos == 0.0) return ag::scale(semantic_mse_graph(z, s), alpha_mse);
  if (alpha_mse == 0.0) return ag::scale(cosine_loss_graph(z, s), beta_cos);
  return ag::add(ag::scale(semantic_mse_graph(z, s), alpha_mse),
                 ag::scale(cosine_loss_graph(z, s), beta_cos));
}

Var info_nce_graph(const std::vector<Var>& z_rows, const std::vector<Var>& s_rows, double tau,
                   bool normalize) {
  if (z_rows.empty() || z_rows.size() != s_rows.size()) {
    throw DimensionMismatch("info_nce needs equally many z and s rows");
  }
  if (tau <= 0) throw ConfigError("tau must be positive");
  const int n = static_cast<int>(z_rows.size());
  Var z = n == 1 ? z_rows[0] : ag::concat_rows(z_rows);
  Var s = n == 1 ? s_rows[0] : ag::concat_rows(s_rows);
  if (normalize) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (z->value.row(i).norm() == 0.0) throw ZeroVector("info_nce: z row");
      if (s->value.row(i).norm() == 0.0) throw ZeroVector("info_nce: s row");
    }
    Var ones = ag::constant(Matrix::Ones(z->value.cols(), 1));
    z = ag::div_colvec(z, ag::sqrt_elem(ag::matmul(ag::square(z), ones)));
    s = ag::div_colvec(s, ag::sqrt_elem(ag::matmul(ag::square(s), ones)));
  }
  Var sims = ag::scale(ag::matmul(z, ag::transpose(s)), 1.0 / tau);
  std::vector<int> diagonal(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) diagonal[static_cast<std::size_t>(i)] = i;
  Var both = ag::add(ag::cross_entropy_rows(sims, diagonal),
                     ag::cross_entropy_rows(ag::transpose(sims), diagonal));
  return ag::scale(both, 1.0 / (2.0 * n));
}

double semantic_mse(const SemanticVector& z, const SemanticVector& s) {
  return ag::scalar(semantic_mse_graph(row_const(z), row_const(s)));
}

double cosine_loss(const SemanticVector& z, const SemanticVector& s) {
  return ag::scalar(cosine_loss_graph(row_const(z), row_const(s)));
}

double combined_sem(const SemanticVector& z, const SemanticVector& s, double alpha_mse,
                    double beta_cos) {
  return ag::scalar(combined_sem_graph(row_const(z), row_const(s), alpha_mse, beta_cos));
}

double info_nce(const Batch& batch, double tau, bool normalize) {
  batch.validate();
  std::vector<Var> z_rows;
  std::vector<Var> s_rows;
  z_rows.reserve(batch.z_list.size());
  s_rows.reserve(batch.s_list.size());
  for (const auto& v : batch.z_list) z_rows.push_back(row_const(v));
  for (const auto& v : batch.s_list) s_rows.push_back(row_const(v));
  return ag::scalar(info_nce_graph(z_rows, s_rows, tau, normalize));
}

double joint_loss(const LossComponents& components, const LossWeights& w) {
  w.validate();
  double total = 0.0;
  if (w.lambda_sem != 0.0) total += w.lambda_sem * components.sem;
  if (w.lambda_ce != 0.0) total += w.lambda_ce * components.ce;
  if (w.lambda_ae != 0.0) total += w.lambda_ae * components.ae;
  if (w.lambda_nce != 0.0) total += w.lambda_nce * components.nce;
  return total;
}

}  // namespace slt
