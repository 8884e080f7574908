#include "slt/visual.hpp"

#include <cmath>

#include "slt/errors.hpp"

namespace slt {

using ag::Matrix;
using ag::Var;

PoolingMode parse_pooling_mode(const std::string& text) {
  if (text == "mean") return PoolingMode::kMean;
  if (text == "attention") return PoolingMode::kAttention;
  if (text == "shallow_decoder") return PoolingMode::kShallowDecoder;
  throw ConfigError("unknown pooling mode '" + text + "'");
}

std::string pooling_mode_name(PoolingMode mode) {
  switch (mode) {
    case PoolingMode::kMean: return "mean";
    case PoolingMode::kAttention: return "attention";
    case PoolingMode::kShallowDecoder: return "shallow_decoder";
  }
  return "?";
}

VisualParams init_visual_params(const VisualHyper& hyper, std::uint64_t seed,
                                const DecoderParams* init_pool_from) {
  if (hyper.conv_kernel < 1 || hyper.conv_kernel % 2 == 0) {
    throw ConfigError("conv_kernel must be odd and >= 1");
  }
  VisualParams params;
  params.hyper = hyper;
  RngStream rng = RngStream(seed).fork("visual");
  nn::ParameterStore& s = params.store;

  const int conv_in = hyper.d_s + hyper.d_m;
  for (int t = 0; t < hyper.conv_kernel; ++t) {
    const std::string name = "vis.fuse.conv.t" + std::to_string(t) + ".w";
    s.add(name, conv_in, hyper.d_h);
    s.init_xavier(name, rng);
  }
  s.add("vis.fuse.conv.b", 1, hyper.d_h);
  nn::add_feed_forward(s, "vis.fuse.mlp", hyper.d_h, 2 * hyper.d_h, rng);

  for (int l = 0; l < hyper.enc_layers; ++l) {
    nn::add_encoder_layer(s, "vis.enc.layer" + std::to_string(l), hyper.d_h,
                          hyper.d_h * hyper.ffn_mult, rng);
  }
  nn::add_layer_norm(s, "vis.enc.final_ln", hyper.d_h);

  // pooling head: learned attention query, shallow decoder, shared projection
  s.add("vis.pool.query", 1, hyper.d_h);
  s.init_normal("vis.pool.query", 0.1, rng);
  s.add("vis.pool.tok", 1, hyper.d_h);
  s.init_normal("vis.pool.tok", 0.02, rng);
  for (int l = 0; l < hyper.pool_layers; ++l) {
    nn::add_decoder_layer(s, "vis.pool.layer" + std::to_string(l), hyper.d_h,
                          hyper.d_h * hyper.ffn_mult, rng);
  }
  nn::add_layer_norm(s, "vis.pool.final_ln", hyper.d_h);
  nn::add_linear(s, "vis.pool.proj", hyper.d_h, hyper.d, rng);

  if (init_pool_from != nullptr) {
    const DecoderParams& dec = *init_pool_from;
    if (dec.hyper.width != hyper.d_h) {
      throw DimensionMismatch("pooling head width " + std::to_string(hyper.d_h) +
                              " differs from decoder width " + std::to_string(dec.hyper.width));
    }
    if (dec.hyper.layers < hyper.pool_layers) {
      throw ConfigError("decoder has fewer layers than pool_layers");
    }
    if (dec.hyper.ffn_mult != hyper.ffn_mult) {
      throw DimensionMismatch("pooling head ffn width differs from decoder ffn width");
    }
    s.at("vis.pool.tok") = dec.store.at("dec.embed").row(kEos);
    for (int l = 0; l < hyper.pool_layers; ++l) {
      const std::string src = "dec.layer" + std::to_string(l);
      const std::string dst = "vis.pool.layer" + std::to_string(l);
      for (const char* part :
           {".self.q.w", ".self.q.b", ".self.k.w", ".self.k.b", ".self.v.w", ".self.v.b",
            ".self.o.w", ".self.o.b", ".cross.q.w", ".cross.q.b", ".cross.k.w", ".cross.k.b",
            ".cross.v.w", ".cross.v.b", ".cross.o.w", ".cross.o.b", ".ffn.in.w", ".ffn.in.b",
            ".ffn.out.w", ".ffn.out.b", ".ln1.gamma", ".ln1.beta", ".ln2.gamma", ".ln2.beta",
            ".ln3.gamma", ".ln3.beta"}) {
        s.at(dst + part) = dec.store.at(src + part);
      }
    }
    s.at("vis.pool.final_ln.gamma") = dec.store.at("dec.final_ln.gamma");
    s.at("vis.pool.final_ln.beta") = dec.store.at("dec.final_ln.beta");
  }
  return params;
}

// --- forward graphs -------------------------------------------------------------

Var fuse_graph(nn::ParamGraph& g, const Var& spatial, const Var& motion,
               const VisualHyper& hyper) {
  if (spatial->value.cols() != hyper.d_s || motion->value.cols() != hyper.d_m) {
    throw DimensionMismatch("feature widths do not match fusion parameters");
  }
  if (spatial->value.rows() != motion->value.rows()) {
    throw DimensionMismatch("spatial and motion lengths differ");
  }
  Var x = ag::concat_cols({spatial, motion});
  const int radius = hyper.conv_kernel / 2;
  Var conv;
  for (int t = 0; t < hyper.conv_kernel; ++t) {
    // tap t applies weight to x_{i + t - radius}
    Var shifted = ag::shift_rows(x, radius - t);
    Var term = ag::matmul(shifted, g("vis.fuse.conv.t" + std::to_string(t) + ".w"));
    conv = (t == 0) ? term : ag::add(conv, term);
  }
  conv = ag::add_rowvec(conv, g("vis.fuse.conv.b"));
  return ag::add(conv, nn::feed_forward(g, "vis.fuse.mlp", conv));
}

namespace {

std::vector<bool> normalized_mask(std::vector<bool> mask, Eigen::Index rows) {
  if (mask.empty()) mask.assign(static_cast<std::size_t>(rows), false);
  if (static_cast<Eigen::Index>(mask.size()) != rows) {
    throw DimensionMismatch("padding mask length differs from sequence length");
  }
  return mask;
}

int unmasked_count(const std::vector<bool>& mask) {
  int n = 0;
  for (bool b : mask) {
    if (!b) ++n;
  }
  return n;
}

}  // namespace

Var encode_graph(nn::ParamGraph& g, const Var& fused, const std::vector<bool>& padding_mask,
                 const VisualHyper& hyper) {
  const Eigen::Index rows = fused->value.rows();
  const std::vector<bool> mask = normalized_mask(padding_mask, rows);
  Var x = fused;
  if (hyper.use_positional) {
    x = ag::add(x, ag::constant(nn::sinusoidal_positions(static_cast<int>(rows), hyper.d_h)));
  }
  std::optional<Matrix> bias;
  if (unmasked_count(mask) != static_cast<int>(mask.size())) {
    bias = nn::padding_mask_bias(static_cast<int>(rows), mask);
  }
  for (int l = 0; l < hyper.enc_layers; ++l) {
    x = nn::encoder_layer(g, "vis.enc.layer" + std::to_string(l), x, hyper.heads, bias);
  }
  return nn::layer_norm(g, "vis.enc.final_ln", x);
}

Var pool_graph(nn::ParamGraph& g, const Var& context, const std::vector<bool>& padding_mask,
               PoolingMode mode, const VisualHyper& hyper) {
  const Eigen::Index rows = context->value.rows();
  const std::vector<bool> mask = normalized_mask(padding_mask, rows);
  const int kept = unmasked_count(mask);
  if (kept == 0) throw AllFramesMasked();

  Var pooled;
  switch (mode) {
    case PoolingMode::kMean: {
      Matrix weights = Matrix::Zero(1, rows);
      for (Eigen::Index i = 0; i < rows; ++i) {
        if (!mask[static_cast<std::size_t>(i)]) weights(0, i) = 1.0 / kept;
      }
      pooled = ag::matmul(ag::constant(weights), context);
      break;
    }
    case PoolingMode::kAttention: {
      Var scores = ag::transpose(ag::matmul(context, ag::transpose(g("vis.pool.query"))));
      scores = ag::scale(scores, 1.0 / std::sqrt(static_cast<double>(hyper.d_h)));
      Matrix bias = Matrix::Zero(1, rows);
      for (Eigen::Index i = 0; i < rows; ++i) {
        if (mask[static_cast<std::size_t>(i)]) bias(0, i) = nn::kMaskBias;
      }
      Var att = ag::softmax_rows(ag::add(scores, ag::constant(bias)));
      pooled = ag::matmul(att, context);
      break;
    }
    case PoolingMode::kShallowDecoder: {
      // single special-token query cross-attending to the (position-tagged)
      // encoder outputs; the first decoder output is the sentence embedding
      Var memory = context;
      if (hyper.use_positional) {
        memory = ag::add(memory, ag::constant(nn::sinusoidal_positions(static_cast<int>(rows),
                                                                       hyper.d_h)));
      }
      std::optional<Matrix> cross_bias;
      if (kept != static_cast<int>(mask.size())) {
        cross_bias = nn::padding_mask_bias(1, mask);
      }
      Var x = g.raw("vis.pool.tok");
      for (int l = 0; l < hyper.pool_layers; ++l) {
        x = nn::decoder_layer(g, "vis.pool.layer" + std::to_string(l), x, memory, hyper.heads,
                              std::nullopt, cross_bias);
      }
      pooled = nn::layer_norm(g, "vis.pool.final_ln", x);
      break;
    }
  }
  return nn::linear(g, "vis.pool.proj", pooled);
}

Var video_embedding_graph(nn::ParamGraph& g, const FeatureSequence& features, PoolingMode mode,
                          const VisualParams& params) {
  features.validate();
  Var spatial = ag::constant(features.spatial);
  Var motion = ag::constant(features.motion);
  Var fused = fuse_graph(g, spatial, motion, params.hyper);
  Var context = encode_graph(g, fused, {}, params.hyper);
  return pool_graph(g, context, {}, mode, params.hyper);
}

// --- value-level wrappers --------------------------------------------------------

FusedSequence fuse(const FeatureSequence& features, const VisualParams& params) {
  features.validate();
  nn::ParamGraph g(params.store);
  Var out = fuse_graph(g, ag::constant(features.spatial), ag::constant(features.motion),
                       params.hyper);
  return FusedSequence{out->value};
}

ContextSequence encode(const FusedSequence& fused, const VisualParams& params,
                       const std::vector<bool>& padding_mask) {
  nn::ParamGraph g(params.store);
  const std::vector<bool> mask = normalized_mask(padding_mask, fused.values.rows());
  Var out = encode_graph(g, ag::constant(fused.values), mask, params.hyper);
  return ContextSequence{out->value, mask};
}

SemanticVector pool(const ContextSequence& context, PoolingMode mode, const VisualParams& params) {
  nn::ParamGraph g(params.store);
  Var out = pool_graph(g, ag::constant(context.values), context.padding_mask, mode, params.hyper);
  return SemanticVector{out->value.row(0).transpose()};
}

SemanticVector video_to_embedding(const FeatureSequence& features, const VisualParams& params,
                                  PoolingMode mode) {
  nn::ParamGraph g(params.store);
  Var out = video_embedding_graph(g, features, mode, params);
  return SemanticVector{out->value.row(0).transpose()};
}

}  // namespace slt
