#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "slt/checkpoint.hpp"
#include "slt/datamodel.hpp"
#include "slt/decoder.hpp"
#include "slt/translation.hpp"

namespace slt {

// Corpus-level BLEU: 4-gram modified precision with brevity penalty and
// exponential smoothing of zero n-gram counts, single reference, in [0,100].
double bleu(const std::vector<Sentence>& hypotheses, const std::vector<Sentence>& references);

// LCS-based F-measure (beta = 1) on tokens, in [0,1].
double rouge_l(const Sentence& hyp, const Sentence& ref);

// Cosine of the two text embeddings, in [-1,1]. Symmetric.
double semantic_score(const Sentence& hyp, const Sentence& ref, const SpaceConfig& cfg);

struct LanguageScores {
  double bleu = 0.0;
  double rouge_l = 0.0;
  double semantic_score = 0.0;
  int sample_count = 0;
  int provider_references = 0;  // references synthesized by the provider
  int invalid_hypotheses = 0;   // hypotheses that could not be embedded
};

struct SampleRecord {
  std::string sample_id;
  std::string language;
  std::string reference;
  std::string hypothesis;
  double rouge_l = 0.0;
  double semantic_score = 0.0;
  bool reference_from_provider = false;
};

struct EvalReport {
  std::map<std::string, LanguageScores> per_language;
  std::vector<SampleRecord> samples;

  std::string to_json_string() const;
  std::string render_table() const;
};

struct EvalOptions {
  DecodeMode decode_mode = DecodeMode::greedy();
  int max_decode_len = 24;
  int threads = 1;                              // scoring parallelism; results are order-stable
  const TranslationProvider* provider = nullptr;  // fallback reference source
  bool keep_samples = true;
};

// Decodes every sample into every requested language and scores hypotheses
// against references from the TranslationSet (or the provider when absent).
EvalReport evaluate(const Checkpoint& checkpoint, const CorpusManifest& manifest,
                    const std::vector<LanguageTag>& languages, const EvalOptions& options = {});

void write_eval_report(const EvalReport& report, const std::filesystem::path& dir,
                       bool dump_samples);
// Minimal bar chart of per-language BLEU as an SVG file.
void write_score_svg(const EvalReport& report, const std::filesystem::path& path);

}  // namespace slt
