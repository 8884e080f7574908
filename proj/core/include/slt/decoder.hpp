#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slt/nn.hpp"
#include "slt/semantic_space.hpp"

namespace slt {

struct DecoderHyper {
  int d = 64;        // semantic dimension of the conditioning vector
  int width = 64;    // model width
  int layers = 4;
  int heads = 4;
  int ffn_mult = 4;
  int vocab = 0;     // set from the registry at construction
  bool use_positional = true;

  bool operator==(const DecoderHyper&) const = default;
};

// Autoregressive transformer decoder conditioned on a semantic vector (a
// single cross-attention memory slot) and a target-language prefix token.
// The vocabulary covers every registered language's word tokens plus
// PAD/BOS/EOS and one token per language; language_tokens snapshots the
// registry's tag -> language-token-id mapping.
struct DecoderParams {
  DecoderHyper hyper;
  nn::ParameterStore store;
  std::map<LanguageTag, int> language_tokens;

  int language_token(const LanguageTag& lang) const;
};

DecoderParams init_decoder_params(DecoderHyper hyper, const LanguageRegistry& registry,
                                  std::uint64_t seed);

// Graph-building pieces, shared by training and the public scalar ops.
// input_ids start with (BOS, language token); logits has one row per input
// position.
ag::Var decoder_logits(nn::ParamGraph& g, const ag::Var& semantic, const std::vector<int>& input_ids,
                       const DecoderParams& params);

// -sum_t log p(y_t | y_<t, v, lang) over exactly the tokens of y
// (append_eos additionally scores the end-of-sequence continuation; training
// uses that variant so generation learns to stop).
ag::Var teacher_forced_nll_graph(nn::ParamGraph& g, const ag::Var& semantic, const Sentence& y,
                                 const LanguageTag& lang, const DecoderParams& params,
                                 bool append_eos = false);

double teacher_forced_nll(const SemanticVector& v, const Sentence& y, const LanguageTag& lang,
                          const DecoderParams& params);

// Definitional identity: teacher_forced_nll(embed_text(y), y, lang).
double autoencode_nll(const Sentence& y, const LanguageTag& lang, const DecoderParams& params,
                      const SpaceConfig& cfg);

struct DecodeMode {
  enum Kind { kGreedy, kBeam } kind = kGreedy;
  int beam_width = 1;

  static DecodeMode greedy() { return {kGreedy, 1}; }
  static DecodeMode beam(int width) { return {kBeam, width}; }
};

DecodeMode parse_decode_mode(const std::string& text);  // "greedy" | "beam4"

// Autoregressive generation from (BOS, language token), stopping at EOS or
// max_len generated tokens. Deterministic; ties break toward lower token ids.
Sentence decode(const SemanticVector& v, const LanguageTag& lang, const DecoderParams& params,
                const LanguageRegistry& registry, int max_len, DecodeMode mode = DecodeMode::greedy());

}  // namespace slt
