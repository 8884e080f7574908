#include "slt/lora.hpp"

#include "slt/errors.hpp"

namespace slt {

void LoRAConfig::validate() const {
  if (r < 1) throw ConfigError("LoRA rank must be >= 1");
  if (alpha <= 0.0) throw ConfigError("LoRA alpha must be > 0");
}

nn::ParameterStore apply_lora(const nn::ParameterStore& params, const LoRAConfig& cfg,
                              std::uint64_t seed) {
  cfg.validate();
  nn::ParameterStore adapted = params;
  RngStream rng = RngStream(seed).fork("lora");
  for (const auto& target : cfg.targets) {
    adapted.attach_adapter(target, cfg.r, cfg.alpha, rng);
  }
  return adapted;
}

VisualParams apply_lora(const VisualParams& params, const LoRAConfig& cfg, std::uint64_t seed) {
  VisualParams out;
  out.hyper = params.hyper;
  out.store = apply_lora(params.store, cfg, seed);
  return out;
}

DecoderParams apply_lora(const DecoderParams& params, const LoRAConfig& cfg, std::uint64_t seed) {
  DecoderParams out;
  out.hyper = params.hyper;
  out.language_tokens = params.language_tokens;
  out.store = apply_lora(params.store, cfg, seed);
  return out;
}

std::size_t lora_parameter_count(const nn::ParameterStore& params, const LoRAConfig& cfg) {
  std::size_t n = 0;
  for (const auto& target : cfg.targets) {
    const auto& w = params.at(target);
    n += static_cast<std::size_t>(cfg.r) *
         static_cast<std::size_t>(w.rows() + w.cols());
  }
  return n;
}

}  // namespace slt
