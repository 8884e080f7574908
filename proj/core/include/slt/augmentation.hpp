#pragma once

#include <utility>

#include "slt/datamodel.hpp"
#include "slt/rng.hpp"

namespace slt {

struct AugmentationConfig {
  double frame_mask_ratio = 0.2;
  double frame_dropout_prob = 0.2;
  double add_noise_std = 0.04;
  int shuffle_window = 3;

  void validate() const;
  bool is_identity() const;
};

// Replaces exactly floor(ratio*T) distinct uniformly chosen timesteps by zero
// vectors in both streams. T is unchanged.
FeatureSequence mask_frames(const FeatureSequence& f, double ratio, RngStream& rng);

// Removes each timestep independently with probability prob; if every
// timestep would be removed, one uniformly chosen timestep is kept.
FeatureSequence drop_frames(const FeatureSequence& f, double prob, RngStream& rng);

// Adds i.i.d. zero-mean Gaussian noise of the given std to every entry.
FeatureSequence add_noise(const FeatureSequence& f, double stddev, RngStream& rng);

// Partitions timesteps into consecutive blocks of length w (last may be
// shorter) and permutes uniformly within each block.
FeatureSequence shuffle_window(const FeatureSequence& f, int w, RngStream& rng);

// Uniform draw over the K entries of the translation set.
Sentence sample_target(const TranslationSet& targets, RngStream& rng);

// One augmented variant per iteration: mask -> dropout -> noise -> window
// shuffle on the features, plus one sampled target sentence. Feature and
// target draws come from independent sub-streams.
std::pair<FeatureSequence, Sentence> coupled_augment(const TrainingSample& sample,
                                                     const AugmentationConfig& cfg,
                                                     const RngStream& rng);

// The stream all per-sample augmentation draws derive from.
RngStream augmentation_stream(std::uint64_t master_seed, const std::string& sample_id, int epoch);

}  // namespace slt
