#include "slt/augmentation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "slt/errors.hpp"

namespace slt {

void AugmentationConfig::validate() const {
  if (frame_mask_ratio < 0.0 || frame_mask_ratio > 1.0) {
    throw ConfigError("frame_mask_ratio must be in [0,1]");
  }
  if (frame_dropout_prob < 0.0 || frame_dropout_prob >= 1.0) {
    throw ConfigError("frame_dropout_prob must be in [0,1)");
  }
  if (add_noise_std < 0.0) throw ConfigError("add_noise_std must be >= 0");
  if (shuffle_window < 1) throw ConfigError("shuffle_window must be >= 1");
}

bool AugmentationConfig::is_identity() const {
  return frame_mask_ratio == 0.0 && frame_dropout_prob == 0.0 && add_noise_std == 0.0 &&
         shuffle_window == 1;
}

FeatureSequence mask_frames(const FeatureSequence& f, double ratio, RngStream& rng) {
  if (ratio < 0.0 || ratio > 1.0) throw ConfigError("mask ratio must be in [0,1]");
  const int t = f.length();
  const int count = static_cast<int>(std::floor(ratio * t));
  FeatureSequence out = f;
  if (count == 0) return out;
  // uniform choice of `count` distinct timesteps: partial Fisher-Yates
  std::vector<int> order(static_cast<std::size_t>(t));
  std::iota(order.begin(), order.end(), 0);
  for (int i = 0; i < count; ++i) {
    const int j = i + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(t - i)));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  for (int i = 0; i < count; ++i) {
    out.spatial.row(order[static_cast<std::size_t>(i)]).setZero();
    out.motion.row(order[static_cast<std::size_t>(i)]).setZero();
  }
  return out;
}

FeatureSequence drop_frames(const FeatureSequence& f, double prob, RngStream& rng) {
  if (prob < 0.0 || prob >= 1.0) throw ConfigError("dropout prob must be in [0,1)");
  const int t = f.length();
  std::vector<int> kept;
  kept.reserve(static_cast<std::size_t>(t));
  for (int i = 0; i < t; ++i) {
    if (!rng.next_bernoulli(prob)) kept.push_back(i);
  }
  if (kept.empty()) kept.push_back(static_cast<int>(rng.next_below(static_cast<std::uint64_t>(t))));
  FeatureSequence out;
  out.sample_id = f.sample_id;
  out.spatial.resize(static_cast<Eigen::Index>(kept.size()), f.spatial.cols());
  out.motion.resize(static_cast<Eigen::Index>(kept.size()), f.motion.cols());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    out.spatial.row(static_cast<Eigen::Index>(i)) = f.spatial.row(kept[i]);
    out.motion.row(static_cast<Eigen::Index>(i)) = f.motion.row(kept[i]);
  }
  return out;
}

FeatureSequence add_noise(const FeatureSequence& f, double stddev, RngStream& rng) {
  if (stddev < 0.0) throw ConfigError("noise std must be >= 0");
  FeatureSequence out = f;
  if (stddev == 0.0) return out;
  for (Eigen::Index i = 0; i < out.spatial.rows(); ++i) {
    for (Eigen::Index j = 0; j < out.spatial.cols(); ++j) {
      out.spatial(i, j) += rng.next_normal(stddev);
    }
    for (Eigen::Index j = 0; j < out.motion.cols(); ++j) {
      out.motion(i, j) += rng.next_normal(stddev);
    }
  }
  return out;
}

FeatureSequence shuffle_window(const FeatureSequence& f, int w, RngStream& rng) {
  if (w < 1) throw ConfigError("shuffle window must be >= 1");
  const int t = f.length();
  std::vector<int> order(static_cast<std::size_t>(t));
  std::iota(order.begin(), order.end(), 0);
  for (int start = 0; start < t; start += w) {
    const int len = std::min(w, t - start);
    // Fisher-Yates within the block
    for (int i = len; i > 1; --i) {
      const int j = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(i)));
      std::swap(order[static_cast<std::size_t>(start + i - 1)],
                order[static_cast<std::size_t>(start + j)]);
    }
  }
  FeatureSequence out = f;
  for (int i = 0; i < t; ++i) {
    out.spatial.row(i) = f.spatial.row(order[static_cast<std::size_t>(i)]);
    out.motion.row(i) = f.motion.row(order[static_cast<std::size_t>(i)]);
  }
  return out;
}

Sentence sample_target(const TranslationSet& targets, RngStream& rng) {
  targets.validate();
  const std::size_t k = rng.next_below(targets.entries.size());
  auto it = targets.entries.begin();
  std::advance(it, static_cast<long>(k));
  return it->second;
}

std::pair<FeatureSequence, Sentence> coupled_augment(const TrainingSample& sample,
                                                     const AugmentationConfig& cfg,
                                                     const RngStream& rng) {
  cfg.validate();
  RngStream feature_rng = rng.fork("features");
  RngStream target_rng = rng.fork("target");
  FeatureSequence f = mask_frames(sample.features, cfg.frame_mask_ratio, feature_rng);
  f = drop_frames(f, cfg.frame_dropout_prob, feature_rng);
  f = add_noise(f, cfg.add_noise_std, feature_rng);
  f = shuffle_window(f, cfg.shuffle_window, feature_rng);
  return {std::move(f), sample_target(sample.targets, target_rng)};
}

RngStream augmentation_stream(std::uint64_t master_seed, const std::string& sample_id, int epoch) {
  return RngStream(master_seed)
      .fork("augment")
      .fork(sample_id)
      .fork(static_cast<std::uint64_t>(epoch));
}

}  // namespace slt
