#include "slt/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "slt/errors.hpp"
#include "slt/losses.hpp"
#include "slt/visual.hpp"

namespace slt {

using nlohmann::json;

namespace {

constexpr int kMaxOrder = 4;

// hashable n-gram key over token ids
std::string ngram_key(const std::vector<int>& tokens, std::size_t start, int n) {
  std::string key;
  for (int k = 0; k < n; ++k) {
    key += std::to_string(tokens[start + static_cast<std::size_t>(k)]);
    key += ',';
  }
  return key;
}

}  // namespace

double bleu(const std::vector<Sentence>& hypotheses, const std::vector<Sentence>& references) {
  if (hypotheses.empty() || references.empty()) throw EmptyCorpus("bleu needs sentence pairs");
  if (hypotheses.size() != references.size()) {
    throw DimensionMismatch("bleu: hypothesis and reference counts differ");
  }
  long hyp_len = 0;
  long ref_len = 0;
  double correct[kMaxOrder] = {0, 0, 0, 0};
  double total[kMaxOrder] = {0, 0, 0, 0};

  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    const Sentence& hyp = hypotheses[i];
    const Sentence& ref = references[i];
    if (hyp.language != ref.language) {
      throw LanguageMismatch("pair " + std::to_string(i) + ": '" + hyp.language.id + "' vs '" +
                             ref.language.id + "'");
    }
    hyp_len += static_cast<long>(hyp.tokens.size());
    ref_len += static_cast<long>(ref.tokens.size());
    for (int n = 1; n <= kMaxOrder; ++n) {
      if (static_cast<int>(hyp.tokens.size()) < n) break;
      std::map<std::string, int> ref_counts;
      if (static_cast<int>(ref.tokens.size()) >= n) {
        for (std::size_t s = 0; s + static_cast<std::size_t>(n) <= ref.tokens.size(); ++s) {
          ++ref_counts[ngram_key(ref.tokens, s, n)];
        }
      }
      std::map<std::string, int> hyp_counts;
      for (std::size_t s = 0; s + static_cast<std::size_t>(n) <= hyp.tokens.size(); ++s) {
        ++hyp_counts[ngram_key(hyp.tokens, s, n)];
      }
      for (const auto& [key, count] : hyp_counts) {
        total[n - 1] += count;
        auto it = ref_counts.find(key);
        if (it != ref_counts.end()) correct[n - 1] += std::min(count, it->second);
      }
    }
  }

  if (hyp_len == 0) return 0.0;

  double log_precision = 0.0;
  int effective_order = 0;
  double smooth = 1.0;
  for (int n = 0; n < kMaxOrder; ++n) {
    if (total[n] == 0) continue;  // corpus too short for this order
    ++effective_order;
    if (correct[n] == 0) {
      smooth *= 2.0;  // exponential smoothing of zero counts
      log_precision += std::log(1.0 / (smooth * total[n]));
    } else {
      log_precision += std::log(correct[n] / total[n]);
    }
  }
  if (effective_order == 0) return 0.0;

  const double brevity =
      hyp_len >= ref_len ? 1.0
                         : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
  return 100.0 * brevity * std::exp(log_precision / effective_order);
}

double rouge_l(const Sentence& hyp, const Sentence& ref) {
  if (ref.tokens.empty()) throw EmptyReference();
  if (hyp.tokens.empty()) return 0.0;
  const std::size_t n = hyp.tokens.size();
  const std::size_t m = ref.tokens.size();
  std::vector<std::vector<int>> lcs(n + 1, std::vector<int>(m + 1, 0));
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      lcs[i][j] = hyp.tokens[i - 1] == ref.tokens[j - 1]
                      ? lcs[i - 1][j - 1] + 1
                      : std::max(lcs[i - 1][j], lcs[i][j - 1]);
    }
  }
  const double l = lcs[n][m];
  if (l == 0) return 0.0;
  const double precision = l / static_cast<double>(n);
  const double recall = l / static_cast<double>(m);
  return 2.0 * precision * recall / (precision + recall);
}

double semantic_score(const Sentence& hyp, const Sentence& ref, const SpaceConfig& cfg) {
  const SemanticVector a = embed_text(hyp, cfg);
  const SemanticVector b = embed_text(ref, cfg);
  // paraphrases land on the same point exactly; report the exact cosine
  // rather than losing the last bit to sqrt round-off
  if (a.values == b.values) return 1.0;
  return 1.0 - cosine_loss(a, b);
}

// --- harness ------------------------------------------------------------------------

namespace {

struct WorkItem {
  std::size_t sample_index;
  Sentence hypothesis;
};

}  // namespace

EvalReport evaluate(const Checkpoint& checkpoint, const CorpusManifest& manifest,
                    const std::vector<LanguageTag>& languages, const EvalOptions& options) {
  if (manifest.size() == 0) throw EmptyCorpus("evaluate: empty manifest");
  if (languages.empty()) throw ConfigError("evaluate: no languages requested");
  const SpaceConfig space = checkpoint.space();
  const PoolingMode mode = parse_pooling_mode(checkpoint.pooling_mode);
  for (const auto& lang : languages) {
    if (!space.registry.has(lang)) throw UnknownLanguage(lang.id);
  }

  // references first, so a missing one fails before any decoding work
  std::vector<std::vector<std::pair<Sentence, bool>>> references(manifest.size());
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const ManifestRecord& record = manifest.records[i];
    for (const auto& lang : languages) {
      if (record.targets.has(lang)) {
        references[i].emplace_back(record.targets.entries.at(lang), false);
      } else if (options.provider != nullptr && options.provider->supports(lang)) {
        references[i].emplace_back(options.provider->translate(record.targets.origin(), lang),
                                   true);
      } else {
        throw MissingReference(record.sample_id, lang.id);
      }
    }
  }

  // decode every sample into every language (parallel over samples, results
  // stored by index so the outcome is thread-count independent)
  std::vector<std::vector<Sentence>> hypotheses(manifest.size());
  const int threads = std::max(1, options.threads);
  auto worker = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      TrainingSample sample = load_training_sample(manifest, i);
      const SemanticVector z = video_to_embedding(sample.features, checkpoint.visual, mode);
      for (const auto& lang : languages) {
        hypotheses[i].push_back(decode(z, lang, checkpoint.decoder, space.registry,
                                       options.max_decode_len, options.decode_mode));
      }
    }
  };
  if (threads == 1) {
    worker(0, manifest.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (manifest.size() + threads - 1) / static_cast<std::size_t>(threads);
    for (int t = 0; t < threads; ++t) {
      const std::size_t begin = static_cast<std::size_t>(t) * chunk;
      const std::size_t end = std::min(manifest.size(), begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(worker, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  EvalReport report;
  for (std::size_t li = 0; li < languages.size(); ++li) {
    const LanguageTag& lang = languages[li];
    std::vector<Sentence> hyp_list;
    std::vector<Sentence> ref_list;
    LanguageScores scores;
    double rouge_sum = 0.0;
    double semantic_sum = 0.0;
    for (std::size_t i = 0; i < manifest.size(); ++i) {
      const Sentence& hyp = hypotheses[i][li];
      const auto& [ref, from_provider] = references[i][li];
      hyp_list.push_back(hyp);
      ref_list.push_back(ref);
      const double rouge = rouge_l(hyp, ref);
      double semantic = 0.0;
      bool valid = true;
      if (hyp.tokens.empty()) {
        valid = false;
      } else {
        try {
          semantic = semantic_score(hyp, ref, space);
        } catch (const UnknownToken&) {
          valid = false;  // hypothesis wandered out of the language's lexicon
        }
      }
      rouge_sum += rouge;
      semantic_sum += semantic;
      ++scores.sample_count;
      if (from_provider) ++scores.provider_references;
      if (!valid) ++scores.invalid_hypotheses;
      if (options.keep_samples) {
        report.samples.push_back(SampleRecord{manifest.records[i].sample_id, lang.id,
                                              ref.raw_text, hyp.raw_text, rouge, semantic,
                                              from_provider});
      }
    }
    scores.bleu = bleu(hyp_list, ref_list);
    scores.rouge_l = rouge_sum / static_cast<double>(manifest.size());
    scores.semantic_score = semantic_sum / static_cast<double>(manifest.size());
    report.per_language[lang.id] = scores;
  }
  return report;
}

std::string EvalReport::to_json_string() const {
  json langs = json::object();
  for (const auto& [lang, s] : per_language) {
    langs[lang] = json{{"bleu", s.bleu},
                       {"rouge_l", s.rouge_l},
                       {"semantic_score", s.semantic_score},
                       {"sample_count", s.sample_count},
                       {"provider_references", s.provider_references},
                       {"invalid_hypotheses", s.invalid_hypotheses}};
  }
  json samples = json::array();
  for (const auto& s : this->samples) {
    samples.push_back(json{{"sample_id", s.sample_id},
                           {"language", s.language},
                           {"reference", s.reference},
                           {"hypothesis", s.hypothesis},
                           {"rouge_l", s.rouge_l},
                           {"semantic_score", s.semantic_score},
                           {"reference_from_provider", s.reference_from_provider}});
  }
  return json{{"per_language", langs}, {"samples", samples}}.dump(2);
}

std::string EvalReport::render_table() const {
  std::ostringstream out;
  out << "language        bleu   rouge_l  semantic  samples  provider_refs  invalid\n";
  for (const auto& [lang, s] : per_language) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-14s %6.2f   %6.4f   %7.4f  %7d  %13d  %7d\n",
                  lang.c_str(), s.bleu, s.rouge_l, s.semantic_score, s.sample_count,
                  s.provider_references, s.invalid_hypotheses);
    out << line;
  }
  return out.str();
}

void write_eval_report(const EvalReport& report, const std::filesystem::path& dir,
                       bool dump_samples) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "report.json");
    if (!out) throw DataError("cannot write eval report in " + dir.string());
    if (dump_samples) {
      out << report.to_json_string() << "\n";
    } else {
      EvalReport trimmed = report;
      trimmed.samples.clear();
      out << trimmed.to_json_string() << "\n";
    }
  }
  {
    std::ofstream out(dir / "report.txt");
    out << report.render_table();
  }
  if (dump_samples) {
    std::ofstream out(dir / "samples.txt");
    for (const auto& s : report.samples) {
      out << "[" << s.language << "] " << s.sample_id
          << (s.reference_from_provider ? " (provider reference)" : "") << "\n"
          << "  ref:  " << s.reference << "\n"
          << "  pred: " << s.hypothesis << "\n";
    }
  }
}

void write_score_svg(const EvalReport& report, const std::filesystem::path& path) {
  const int bar_height = 24;
  const int gap = 10;
  const int width = 480;
  const int height = static_cast<int>(report.per_language.size()) * (bar_height + gap) + gap;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write svg: " + path.string());
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
      << "'>\n";
  int y = gap;
  for (const auto& [lang, s] : report.per_language) {
    const int bar = static_cast<int>(s.bleu / 100.0 * (width - 160));
    out << "<rect x='120' y='" << y << "' width='" << bar << "' height='" << bar_height
        << "' fill='#4878a8'/>\n";
    out << "<text x='8' y='" << y + bar_height - 7 << "' font-size='13' font-family='monospace'>"
        << lang << "</text>\n";
    out << "<text x='" << 126 + bar << "' y='" << y + bar_height - 7
        << "' font-size='13' font-family='monospace'>";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", s.bleu);
    out << buf << "</text>\n";
    y += bar_height + gap;
  }
  out << "</svg>\n";
}

}  // namespace slt
