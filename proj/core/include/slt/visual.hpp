#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "slt/decoder.hpp"
#include "slt/nn.hpp"
#include "slt/semantic_space.hpp"

namespace slt {

struct FusedSequence {
  Matrix values;  // T x D_h
};

struct ContextSequence {
  Matrix values;  // T x d_enc
  std::vector<bool> padding_mask;  // true = masked row, excluded from pooling
};

enum class PoolingMode { kMean, kAttention, kShallowDecoder };

PoolingMode parse_pooling_mode(const std::string& text);
std::string pooling_mode_name(PoolingMode mode);

struct VisualHyper {
  int d_s = 32;
  int d_m = 32;
  int d_h = 64;        // fused width; also the encoder width
  int enc_layers = 2;
  int heads = 4;
  int ffn_mult = 4;
  int conv_kernel = 3;  // odd, same padding
  int pool_layers = 3;  // shallow-decoder pooling depth
  int d = 64;           // semantic output dimension
  bool use_positional = true;

  bool operator==(const VisualHyper&) const = default;
};

// Fusion block, transformer encoder and pooling head in one parameter store.
struct VisualParams {
  VisualHyper hyper;
  nn::ParameterStore store;
};

// init_pool_from, when given, copies the first pool_layers decoder layers and
// the EOS embedding into the shallow-decoder pooling head (the head is then
// trained independently). Requires decoder width == d_h.
VisualParams init_visual_params(const VisualHyper& hyper, std::uint64_t seed,
                                const DecoderParams* init_pool_from = nullptr);

// --- graph-building forward (training path) ----------------------------------

ag::Var fuse_graph(nn::ParamGraph& g, const ag::Var& spatial, const ag::Var& motion,
                   const VisualHyper& hyper);
ag::Var encode_graph(nn::ParamGraph& g, const ag::Var& fused,
                     const std::vector<bool>& padding_mask, const VisualHyper& hyper);
ag::Var pool_graph(nn::ParamGraph& g, const ag::Var& context,
                   const std::vector<bool>& padding_mask, PoolingMode mode,
                   const VisualHyper& hyper);
ag::Var video_embedding_graph(nn::ParamGraph& g, const FeatureSequence& features,
                              PoolingMode mode, const VisualParams& params);

// --- value-level operations ----------------------------------------------------

// Per-timestep fusion: same-padding 1-D convolution over time followed by a
// residual MLP. Length-preserving.
FusedSequence fuse(const FeatureSequence& features, const VisualParams& params);

ContextSequence encode(const FusedSequence& fused, const VisualParams& params,
                       const std::vector<bool>& padding_mask = {});

SemanticVector pool(const ContextSequence& context, PoolingMode mode, const VisualParams& params);

SemanticVector video_to_embedding(const FeatureSequence& features, const VisualParams& params,
                                  PoolingMode mode);

}  // namespace slt
