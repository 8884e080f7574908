#include "slt/decoder.hpp"

#include <algorithm>
#include <cmath>

#include "slt/errors.hpp"

namespace slt {

using ag::Matrix;
using ag::Var;

int DecoderParams::language_token(const LanguageTag& lang) const {
  auto it = language_tokens.find(lang);
  if (it == language_tokens.end()) throw UnknownLanguage(lang.id);
  return it->second;
}

DecoderParams init_decoder_params(DecoderHyper hyper, const LanguageRegistry& registry,
                                  std::uint64_t seed) {
  hyper.vocab = registry.vocab_size();
  DecoderParams params;
  params.hyper = hyper;
  for (const auto& tag : registry.languages()) {
    params.language_tokens[tag] = registry.language_token(tag);
  }
  RngStream rng = RngStream(seed).fork("decoder");
  nn::ParameterStore& s = params.store;
  s.add("dec.embed", hyper.vocab, hyper.width);
  s.init_normal("dec.embed", 0.02, rng);
  nn::add_linear(s, "dec.mem_proj", hyper.d, hyper.width, rng);
  for (int l = 0; l < hyper.layers; ++l) {
    nn::add_decoder_layer(s, "dec.layer" + std::to_string(l), hyper.width,
                          hyper.width * hyper.ffn_mult, rng);
  }
  nn::add_layer_norm(s, "dec.final_ln", hyper.width);
  nn::add_linear(s, "dec.out", hyper.width, hyper.vocab, rng);
  return params;
}

Var decoder_logits(nn::ParamGraph& g, const Var& semantic, const std::vector<int>& input_ids,
                   const DecoderParams& params) {
  if (semantic->value.rows() != 1 || semantic->value.cols() != params.hyper.d) {
    throw DimensionMismatch("decoder conditioning vector must be 1x" +
                            std::to_string(params.hyper.d));
  }
  const int len = static_cast<int>(input_ids.size());
  Var memory = nn::linear(g, "dec.mem_proj", semantic);
  Var x = ag::gather_rows(g.raw("dec.embed"), input_ids);
  if (params.hyper.use_positional) {
    x = ag::add(x, ag::constant(nn::sinusoidal_positions(len, params.hyper.width)));
  }
  const std::optional<Matrix> causal = nn::causal_mask_bias(len);
  for (int l = 0; l < params.hyper.layers; ++l) {
    x = nn::decoder_layer(g, "dec.layer" + std::to_string(l), x, memory, params.hyper.heads,
                          causal, std::nullopt);
  }
  x = nn::layer_norm(g, "dec.final_ln", x);
  return nn::linear(g, "dec.out", x);
}

namespace {

std::vector<int> teacher_inputs(const std::vector<int>& targets, int lang_token) {
  std::vector<int> input_ids;
  input_ids.reserve(targets.size() + 1);
  input_ids.push_back(kBos);
  input_ids.push_back(lang_token);
  for (std::size_t i = 0; i + 1 < targets.size(); ++i) input_ids.push_back(targets[i]);
  return input_ids;
}

}  // namespace

Var teacher_forced_nll_graph(nn::ParamGraph& g, const Var& semantic, const Sentence& y,
                             const LanguageTag& lang, const DecoderParams& params,
                             bool append_eos) {
  if (y.tokens.empty()) throw DataError("teacher forcing requires a non-empty sentence");
  std::vector<int> targets = y.tokens;
  if (append_eos) targets.push_back(kEos);
  const std::vector<int> input_ids = teacher_inputs(targets, params.language_token(lang));
  Var logits = decoder_logits(g, semantic, input_ids, params);
  // row 0 is the BOS position (it would predict the given language token);
  // rows 1..T score the targets
  Var scored = ag::slice_rows(logits, 1, static_cast<int>(targets.size()));
  return ag::cross_entropy_rows(scored, targets);
}

double teacher_forced_nll(const SemanticVector& v, const Sentence& y, const LanguageTag& lang,
                          const DecoderParams& params) {
  if (v.dim() != params.hyper.d) {
    throw DimensionMismatch("semantic vector has dim " + std::to_string(v.dim()) +
                            ", decoder expects " + std::to_string(params.hyper.d));
  }
  nn::ParamGraph g(params.store);
  Var vv = ag::constant(v.values.transpose());
  return ag::scalar(teacher_forced_nll_graph(g, vv, y, lang, params));
}

double autoencode_nll(const Sentence& y, const LanguageTag& lang, const DecoderParams& params,
                      const SpaceConfig& cfg) {
  return teacher_forced_nll(embed_text(y, cfg), y, lang, params);
}

DecodeMode parse_decode_mode(const std::string& text) {
  if (text == "greedy") return DecodeMode::greedy();
  if (text.rfind("beam", 0) == 0) {
    const int width = text.size() > 4 ? std::stoi(text.substr(4)) : 4;
    if (width < 1) throw ConfigError("beam width must be >= 1");
    return DecodeMode::beam(width);
  }
  throw ConfigError("unknown decode mode '" + text + "' (expected greedy or beam<k>)");
}

namespace {

Eigen::RowVectorXd last_row_log_softmax(const Matrix& logits) {
  Eigen::RowVectorXd row = logits.row(logits.rows() - 1);
  const double m = row.maxCoeff();
  const double lse = m + std::log((row.array() - m).exp().sum());
  return (row.array() - lse).matrix();
}

Matrix run_decoder_values(const std::vector<int>& input_ids, const SemanticVector& v,
                          const DecoderParams& params) {
  nn::ParamGraph g(params.store);
  Var vv = ag::constant(v.values.transpose());
  return decoder_logits(g, vv, input_ids, params)->value;
}

struct Hypothesis {
  std::vector<int> tokens;  // generated tokens, EOS excluded
  double logp = 0.0;
  bool finished = false;
};

}  // namespace

Sentence decode(const SemanticVector& v, const LanguageTag& lang, const DecoderParams& params,
                const LanguageRegistry& registry, int max_len, DecodeMode mode) {
  if (v.dim() != params.hyper.d) {
    throw DimensionMismatch("semantic vector has dim " + std::to_string(v.dim()) +
                            ", decoder expects " + std::to_string(params.hyper.d));
  }
  if (max_len < 1) throw ConfigError("decode max_len must be >= 1");
  const int lang_token = params.language_token(lang);
  const int beam = mode.kind == DecodeMode::kGreedy ? 1 : mode.beam_width;

  std::vector<Hypothesis> beams{Hypothesis{}};
  for (int step = 0; step < max_len; ++step) {
    bool all_finished = true;
    std::vector<Hypothesis> candidates;
    for (const auto& hyp : beams) {
      if (hyp.finished) {
        candidates.push_back(hyp);
        continue;
      }
      all_finished = false;
      std::vector<int> input_ids{kBos, lang_token};
      input_ids.insert(input_ids.end(), hyp.tokens.begin(), hyp.tokens.end());
      const Eigen::RowVectorXd logp = last_row_log_softmax(run_decoder_values(input_ids, v, params));

      // top `beam` continuations, ties toward lower ids
      std::vector<int> order(static_cast<std::size_t>(logp.size()));
      for (int i = 0; i < logp.size(); ++i) order[static_cast<std::size_t>(i)] = i;
      std::stable_sort(order.begin(), order.end(),
                       [&](int a, int b) { return logp(a) > logp(b); });
      for (int k = 0; k < beam && k < static_cast<int>(order.size()); ++k) {
        Hypothesis next = hyp;
        next.logp += logp(order[static_cast<std::size_t>(k)]);
        if (order[static_cast<std::size_t>(k)] == kEos) {
          next.finished = true;
        } else {
          next.tokens.push_back(order[static_cast<std::size_t>(k)]);
        }
        candidates.push_back(std::move(next));
      }
    }
    if (all_finished) break;
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Hypothesis& a, const Hypothesis& b) { return a.logp > b.logp; });
    if (static_cast<int>(candidates.size()) > beam) candidates.resize(static_cast<std::size_t>(beam));
    beams = std::move(candidates);
  }

  const Hypothesis* best = &beams.front();
  for (const auto& h : beams) {
    if (h.logp > best->logp) best = &h;
  }
  Sentence out;
  out.language = lang;
  out.tokens = best->tokens;
  out.raw_text = registry.detokenize(out.tokens);
  return out;
}

}  // namespace slt
