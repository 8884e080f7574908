// Independent oracles used by the unit and acceptance suites. Everything in
// this header recomputes expected values from first principles and stays off
// the implementation paths it checks.

#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "slt/nn.hpp"

namespace oracle {

using Matrix = slt::ag::Matrix;

struct GradCheck {
  double max_rel_err = 0.0;
  std::string worst = "";
};

// Central finite differences over every entry of every named tensor. loss()
// must recompute the scalar from the store's current values. Entries where
// both gradients are below `zero_floor` count as matching.
template <typename LossFn>
GradCheck finite_diff_check(slt::nn::ParameterStore& store,
                            const std::map<std::string, Matrix>& analytic, LossFn loss,
                            double h = 1e-5, double zero_floor = 1e-7) {
  GradCheck result;
  for (const auto& [name, grad] : analytic) {
    Matrix& w = store.at(name);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        const double saved = w(i, j);
        w(i, j) = saved + h;
        const double up = loss();
        w(i, j) = saved - h;
        const double down = loss();
        w(i, j) = saved;
        const double fd = (up - down) / (2.0 * h);
        const double a = grad(i, j);
        const double denom = std::max(std::abs(fd), std::abs(a));
        double rel;
        if (denom < zero_floor) {
          rel = 0.0;
        } else {
          rel = std::abs(fd - a) / denom;
        }
        if (rel > result.max_rel_err) {
          result.max_rel_err = rel;
          result.worst = name + "(" + std::to_string(i) + "," + std::to_string(j) + ")";
        }
      }
    }
  }
  return result;
}

// Same oracle over a free vector of doubles (loss inputs rather than params).
template <typename LossFn>
GradCheck finite_diff_vector(std::vector<double>& x, const std::vector<double>& analytic,
                             LossFn loss, double h = 1e-6, double zero_floor = 1e-9) {
  GradCheck result;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = loss();
    x[i] = saved - h;
    const double down = loss();
    x[i] = saved;
    const double fd = (up - down) / (2.0 * h);
    const double a = analytic[i];
    const double denom = std::max(std::abs(fd), std::abs(a));
    const double rel = denom < zero_floor ? 0.0 : std::abs(fd - a) / denom;
    if (rel > result.max_rel_err) {
      result.max_rel_err = rel;
      result.worst = "x[" + std::to_string(i) + "]";
    }
  }
  return result;
}

// ---- brute-force corpus BLEU -------------------------------------------------
// Direct O(n^2) n-gram matching (no hash maps), mteval-style exponential
// smoothing, brevity penalty, 4-gram. Orders the corpus cannot support are
// dropped from the geometric mean.

inline double brute_force_bleu(const std::vector<std::vector<int>>& hyps,
                               const std::vector<std::vector<int>>& refs) {
  long hyp_len = 0, ref_len = 0;
  double correct[4] = {0, 0, 0, 0};
  double total[4] = {0, 0, 0, 0};
  for (std::size_t p = 0; p < hyps.size(); ++p) {
    const auto& h = hyps[p];
    const auto& r = refs[p];
    hyp_len += static_cast<long>(h.size());
    ref_len += static_cast<long>(r.size());
    for (int n = 1; n <= 4; ++n) {
      const int hn = static_cast<int>(h.size()) - n + 1;
      const int rn = static_cast<int>(r.size()) - n + 1;
      if (hn <= 0) continue;
      std::vector<bool> hyp_used(static_cast<std::size_t>(hn), false);
      std::vector<bool> ref_used(rn > 0 ? static_cast<std::size_t>(rn) : 0, false);
      total[n - 1] += hn;
      // clipped matching: each reference n-gram may be claimed once
      for (int i = 0; i < hn; ++i) {
        for (int j = 0; j < rn; ++j) {
          if (ref_used[static_cast<std::size_t>(j)]) continue;
          bool same = true;
          for (int k = 0; k < n; ++k) {
            if (h[static_cast<std::size_t>(i + k)] != r[static_cast<std::size_t>(j + k)]) {
              same = false;
              break;
            }
          }
          if (same) {
            ref_used[static_cast<std::size_t>(j)] = true;
            correct[n - 1] += 1.0;
            break;
          }
        }
      }
    }
  }
  if (hyp_len == 0) return 0.0;
  double log_p = 0.0;
  int orders = 0;
  double smooth = 1.0;
  for (int n = 0; n < 4; ++n) {
    if (total[n] == 0) continue;
    ++orders;
    if (correct[n] == 0) {
      smooth *= 2.0;
      log_p += std::log(1.0 / (smooth * total[n]));
    } else {
      log_p += std::log(correct[n] / total[n]);
    }
  }
  if (orders == 0) return 0.0;
  const double bp = hyp_len >= ref_len
                        ? 1.0
                        : std::exp(1.0 - static_cast<double>(ref_len) / hyp_len);
  return 100.0 * bp * std::exp(log_p / orders);
}

// ---- recursive memoized LCS (distinct from the DP in the implementation) -----

inline int lcs_memo(const std::vector<int>& a, const std::vector<int>& b, std::size_t i,
                    std::size_t j, std::vector<std::vector<int>>& memo) {
  if (i == 0 || j == 0) return 0;
  int& slot = memo[i][j];
  if (slot >= 0) return slot;
  if (a[i - 1] == b[j - 1]) {
    slot = lcs_memo(a, b, i - 1, j - 1, memo) + 1;
  } else {
    slot = std::max(lcs_memo(a, b, i - 1, j, memo), lcs_memo(a, b, i, j - 1, memo));
  }
  return slot;
}

inline double brute_force_rouge_l(const std::vector<int>& hyp, const std::vector<int>& ref) {
  if (hyp.empty()) return 0.0;
  std::vector<std::vector<int>> memo(hyp.size() + 1, std::vector<int>(ref.size() + 1, -1));
  const double l = lcs_memo(hyp, ref, hyp.size(), ref.size(), memo);
  if (l == 0) return 0.0;
  const double p = l / static_cast<double>(hyp.size());
  const double r = l / static_cast<double>(ref.size());
  return 2.0 * p * r / (p + r);
}

// ---- direct softmax enumeration for the contrastive loss ----------------------

inline double brute_force_info_nce(const std::vector<std::vector<double>>& z,
                                   const std::vector<std::vector<double>>& s, double tau,
                                   bool normalize) {
  const std::size_t n = z.size();
  auto unit = [&](std::vector<double> v) {
    if (!normalize) return v;
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    return v;
  };
  std::vector<std::vector<double>> zh, sh;
  for (const auto& v : z) zh.push_back(unit(v));
  for (const auto& v : s) sh.push_back(unit(v));
  auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += a[i] * b[i];
    return d;
  };
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double denom_zs = 0.0, denom_sz = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      denom_zs += std::exp(dot(zh[i], sh[j]) / tau);
      denom_sz += std::exp(dot(sh[i], zh[j]) / tau);
    }
    loss += -std::log(std::exp(dot(zh[i], sh[i]) / tau) / denom_zs);
    loss += -std::log(std::exp(dot(sh[i], zh[i]) / tau) / denom_sz);
  }
  return loss / (2.0 * static_cast<double>(n));
}

}  // namespace oracle
