#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slt/decoder.hpp"
#include "slt/visual.hpp"

namespace slt {

struct LoRAConfig {
  int r = 16;
  double alpha = 32.0;
  std::vector<std::string> targets;

  void validate() const;
};

// Replaces each target W by W + (alpha/r) * A * B with A random-small and B
// zero-initialized; only A and B are trainable afterwards. Returns an adapted
// copy; the base forward is bit-identical until B moves off zero.
nn::ParameterStore apply_lora(const nn::ParameterStore& params, const LoRAConfig& cfg,
                              std::uint64_t seed);
VisualParams apply_lora(const VisualParams& params, const LoRAConfig& cfg, std::uint64_t seed);
DecoderParams apply_lora(const DecoderParams& params, const LoRAConfig& cfg, std::uint64_t seed);

// Sum over targets of r * (d_in + d_out).
std::size_t lora_parameter_count(const nn::ParameterStore& params, const LoRAConfig& cfg);

}  // namespace slt
