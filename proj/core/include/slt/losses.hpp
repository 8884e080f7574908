#pragma once

#include <vector>

#include "slt/ag.hpp"
#include "slt/semantic_space.hpp"

namespace slt {

// All coefficients of the training objective. alpha_mse/beta_cos weight the
// two terms inside the semantic alignment loss; the lambdas combine the four
// top-level components; tau is the contrastive temperature.
struct LossWeights {
  double lambda_sem = 1.0;
  double lambda_ce = 0.1;
  double lambda_ae = 1.0;
  double lambda_nce = 0.0;
  double alpha_mse = 7000.0;
  double beta_cos = 2.7;
  double tau = 0.07;
  bool normalize_nce = true;

  void validate() const;
};

// Index-aligned pairs of video- and text-derived vectors.
struct Batch {
  std::vector<SemanticVector> z_list;
  std::vector<SemanticVector> s_list;

  void validate() const;
};

struct LossComponents {
  double sem = 0.0;
  double ce = 0.0;
  double ae = 0.0;
  double nce = 0.0;
};

// --- graph-level (rows are 1 x d) ---------------------------------------------

ag::Var semantic_mse_graph(const ag::Var& z, const ag::Var& s);
ag::Var cosine_loss_graph(const ag::Var& z, const ag::Var& s);
ag::Var combined_sem_graph(const ag::Var& z, const ag::Var& s, double alpha_mse, double beta_cos);
ag::Var info_nce_graph(const std::vector<ag::Var>& z_rows, const std::vector<ag::Var>& s_rows,
                       double tau, bool normalize);

// --- value-level ----------------------------------------------------------------

double semantic_mse(const SemanticVector& z, const SemanticVector& s);
double cosine_loss(const SemanticVector& z, const SemanticVector& s);
double combined_sem(const SemanticVector& z, const SemanticVector& s, double alpha_mse,
                    double beta_cos);
double info_nce(const Batch& batch, double tau, bool normalize);

// lambda_sem*sem + lambda_ce*ce + lambda_ae*ae + lambda_nce*nce; zero-weight
// components are skipped entirely, so a disabled term contributes neither
// value nor gradient.
double joint_loss(const LossComponents& components, const LossWeights& w);

}  // namespace slt
