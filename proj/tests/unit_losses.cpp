#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "slt/errors.hpp"
#include "slt/losses.hpp"
#include "slt/rng.hpp"

using namespace slt;
using ag::Matrix;

namespace {

SemanticVector vec(std::initializer_list<double> values) {
  SemanticVector v;
  v.values.resize(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v.values(i++) = x;
  return v;
}

SemanticVector random_vec(int d, RngStream& rng) {
  SemanticVector v;
  v.values.resize(d);
  for (int i = 0; i < d; ++i) v.values(i) = rng.next_normal();
  return v;
}

}  // namespace

TEST_CASE("semantic mse basics") {
  const SemanticVector z = vec({1.0, 0.0, 0.0});
  const SemanticVector s = vec({0.0, 1.0, 0.0});
  CHECK(semantic_mse(z, z) == 0.0);
  CHECK(semantic_mse(z, s) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(semantic_mse(s, z) == semantic_mse(z, s));

  RngStream rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const SemanticVector a = random_vec(8, rng);
    SemanticVector b = a;
    CHECK(semantic_mse(a, b) == 0.0);
    b.values(trial % 8) += 1e-9;
    CHECK(semantic_mse(a, b) > 0.0);  // zero iff equal
  }
  CHECK_THROWS_AS(semantic_mse(z, vec({1.0, 2.0})), DimensionMismatch);
}

TEST_CASE("cosine loss basics") {
  const SemanticVector z = vec({0.3, -0.7, 0.2});
  CHECK(cosine_loss(z, z) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(cosine_loss(vec({1, 0, 0}), vec({0, 1, 0})) == doctest::Approx(1.0));
  CHECK(cosine_loss(vec({1, 0, 0}), vec({-1, 0, 0})) == doctest::Approx(2.0));
  CHECK_THROWS_AS(cosine_loss(vec({0, 0, 0}), z), ZeroVector);

  RngStream rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const SemanticVector a = random_vec(6, rng);
    const SemanticVector b = random_vec(6, rng);
    const double scale = std::exp(rng.next_normal());  // positive
    SemanticVector scaled = a;
    scaled.values *= scale;
    CHECK(std::abs(cosine_loss(scaled, b) - cosine_loss(a, b)) < 1e-9);
  }
}

TEST_CASE("combined loss degenerates to its parts") {
  RngStream rng(3);
  const SemanticVector z = random_vec(8, rng);
  const SemanticVector s = random_vec(8, rng);
  CHECK(combined_sem(z, s, 3.0, 0.0) == doctest::Approx(3.0 * semantic_mse(z, s)));
  CHECK(combined_sem(z, s, 0.0, 2.0) == doctest::Approx(2.0 * cosine_loss(z, s)));
  CHECK(combined_sem(z, s, 7000.0, 2.7) ==
        doctest::Approx(7000.0 * semantic_mse(z, s) + 2.7 * cosine_loss(z, s)));
}

TEST_CASE("default weights follow the reported training configuration") {
  const LossWeights w;
  CHECK(w.lambda_ce == 0.1);
  CHECK(w.lambda_sem == 1.0);
  CHECK(w.lambda_nce == 0.0);
  CHECK(w.alpha_mse == 7000.0);
  CHECK(w.beta_cos == 2.7);
}

TEST_CASE("info_nce singleton batch is zero") {
  Batch batch;
  batch.z_list = {vec({0.6, 0.8})};
  batch.s_list = {vec({0.0, 1.0})};
  CHECK(info_nce(batch, 1.0, true) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("info_nce two orthonormal matched pairs at tau=1") {
  Batch batch;
  batch.z_list = {vec({1.0, 0.0}), vec({0.0, 1.0})};
  batch.s_list = {vec({1.0, 0.0}), vec({0.0, 1.0})};
  const double expected = std::log(1.0 + std::exp(-1.0));
  CHECK(std::abs(info_nce(batch, 1.0, true) - expected) < 1e-9);
}

TEST_CASE("info_nce is invariant under joint permutation and matches enumeration") {
  RngStream rng(4);
  Batch batch;
  std::vector<std::vector<double>> z_raw, s_raw;
  for (int i = 0; i < 5; ++i) {
    const SemanticVector z = random_vec(6, rng);
    const SemanticVector s = random_vec(6, rng);
    batch.z_list.push_back(z);
    batch.s_list.push_back(s);
    z_raw.emplace_back(z.values.data(), z.values.data() + 6);
    s_raw.emplace_back(s.values.data(), s.values.data() + 6);
  }
  for (const bool normalize : {true, false}) {
    const double mine = info_nce(batch, 0.7, normalize);
    const double brute = oracle::brute_force_info_nce(z_raw, s_raw, 0.7, normalize);
    CHECK(mine == doctest::Approx(brute).epsilon(1e-12));
  }

  Batch permuted;
  const std::vector<std::size_t> perm{3, 0, 4, 1, 2};
  for (std::size_t i : perm) {
    permuted.z_list.push_back(batch.z_list[i]);
    permuted.s_list.push_back(batch.s_list[i]);
  }
  CHECK(info_nce(permuted, 0.7, true) == doctest::Approx(info_nce(batch, 0.7, true)).epsilon(1e-12));

  // with normalization, rescaling any single vector changes nothing
  Batch rescaled = batch;
  rescaled.z_list[2].values *= 17.0;
  CHECK(info_nce(rescaled, 0.7, true) == doctest::Approx(info_nce(batch, 0.7, true)).epsilon(1e-12));

  Batch zero = batch;
  zero.z_list[0].values.setZero();
  CHECK_THROWS_AS(info_nce(zero, 0.7, true), ZeroVector);
}

TEST_CASE("joint loss combines with weights and skips disabled terms") {
  LossWeights w;
  w.lambda_sem = 1.0;
  w.lambda_ce = 0.1;
  w.lambda_ae = 0.5;
  w.lambda_nce = 0.0;
  const LossComponents c{2.0, 3.0, 4.0, 1000.0};  // nce value must not matter
  CHECK(joint_loss(c, w) == doctest::Approx(2.0 + 0.3 + 2.0));
  LossWeights all_zero;
  all_zero.lambda_sem = all_zero.lambda_ce = all_zero.lambda_ae = all_zero.lambda_nce = 0.0;
  CHECK(joint_loss(c, all_zero) == 0.0);
  LossWeights bad;
  bad.tau = 0.0;
  CHECK_THROWS_AS(joint_loss(c, bad), ConfigError);
}

TEST_CASE("analytic gradients of every loss match finite differences at 1e-6") {
  RngStream rng(5);
  const int d = 8;
  const int n = 4;

  // pack z and s of a batch into one flat vector for the oracle
  std::vector<double> x;
  for (int i = 0; i < 2 * n * d; ++i) x.push_back(rng.next_normal());

  auto unpack = [&](const std::vector<double>& flat) {
    std::vector<Matrix> z_rows, s_rows;
    for (int i = 0; i < n; ++i) {
      Matrix z(1, d), s(1, d);
      for (int j = 0; j < d; ++j) {
        z(0, j) = flat[static_cast<std::size_t>(i * d + j)];
        s(0, j) = flat[static_cast<std::size_t>((n + i) * d + j)];
      }
      z_rows.push_back(z);
      s_rows.push_back(s);
    }
    return std::make_pair(z_rows, s_rows);
  };

  struct Case {
    std::string name;
    std::function<ag::Var(const std::vector<ag::Var>&, const std::vector<ag::Var>&)> build;
  };
  const LossWeights w;
  std::vector<Case> cases;
  cases.push_back({"mse", [](const auto& z, const auto& s) {
                     return semantic_mse_graph(z[0], s[0]);
                   }});
  cases.push_back({"cosine", [](const auto& z, const auto& s) {
                     return cosine_loss_graph(z[1], s[1]);
                   }});
  cases.push_back({"combined", [](const auto& z, const auto& s) {
                     return combined_sem_graph(z[2], s[2], 7000.0, 2.7);
                   }});
  cases.push_back({"nce_norm", [](const auto& z, const auto& s) {
                     return info_nce_graph(z, s, 0.07, true);
                   }});
  cases.push_back({"nce_raw", [](const auto& z, const auto& s) {
                     return info_nce_graph(z, s, 0.5, false);
                   }});

  for (const auto& test_case : cases) {
    CAPTURE(test_case.name);
    auto value_at = [&]() {
      auto [z_raw, s_raw] = unpack(x);
      std::vector<ag::Var> z_rows, s_rows;
      for (const auto& m : z_raw) z_rows.push_back(ag::constant(m));
      for (const auto& m : s_raw) s_rows.push_back(ag::constant(m));
      return ag::scalar(test_case.build(z_rows, s_rows));
    };
    auto [z_raw, s_raw] = unpack(x);
    std::vector<ag::Var> z_rows, s_rows;
    for (const auto& m : z_raw) z_rows.push_back(ag::leaf(m));
    for (const auto& m : s_raw) s_rows.push_back(ag::leaf(m));
    ag::Var loss = test_case.build(z_rows, s_rows);
    ag::backward(loss);

    std::vector<double> analytic(x.size(), 0.0);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) {
        if (z_rows[static_cast<std::size_t>(i)]->grad.size() > 0) {
          analytic[static_cast<std::size_t>(i * d + j)] =
              z_rows[static_cast<std::size_t>(i)]->grad(0, j);
        }
        if (s_rows[static_cast<std::size_t>(i)]->grad.size() > 0) {
          analytic[static_cast<std::size_t>((n + i) * d + j)] =
              s_rows[static_cast<std::size_t>(i)]->grad(0, j);
        }
      }
    }
    const auto check = oracle::finite_diff_vector(x, analytic, value_at, 1e-6);
    CHECK(check.max_rel_err < 1e-6);
  }

  // the joint combination is linear in its scalar components, so its exact
  // gradient is the weight vector itself
  LossWeights weights;
  weights.lambda_sem = 1.0;
  weights.lambda_ce = 0.1;
  weights.lambda_ae = 0.8;
  weights.lambda_nce = 0.3;
  std::vector<double> components{2.0, 5.0, 1.5, 0.9};
  const std::vector<double> lambdas{weights.lambda_sem, weights.lambda_ce, weights.lambda_ae,
                                    weights.lambda_nce};
  auto joint_value = [&]() {
    return joint_loss(LossComponents{components[0], components[1], components[2], components[3]},
                      weights);
  };
  const auto joint_check = oracle::finite_diff_vector(components, lambdas, joint_value, 1e-6);
  CHECK(joint_check.max_rel_err < 1e-6);
}
