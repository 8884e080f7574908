#pragma once

#include <Eigen/Dense>
#include <compare>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace slt {

class TranslationProvider;

using Matrix = Eigen::MatrixXd;

struct LanguageTag {
  std::string id;
  auto operator<=>(const LanguageTag&) const = default;
};

// Per-timestep spatial and motion feature vectors for one sign video.
struct FeatureSequence {
  Matrix spatial;  // T x D_s
  Matrix motion;   // T x D_m
  std::string sample_id;

  int length() const { return static_cast<int>(spatial.rows()); }
  void validate() const;  // T >= 1, matching T, finite values
};

struct Sentence {
  std::vector<int> tokens;  // global vocabulary ids, length >= 1
  LanguageTag language;
  std::string raw_text;

  bool operator==(const Sentence&) const = default;
};

// K parallel sentences keyed by language. The origin language is the one the
// sample was annotated in; the rest are translations.
struct TranslationSet {
  std::map<LanguageTag, Sentence> entries;
  LanguageTag origin_language;

  const Sentence& origin() const;
  bool has(const LanguageTag& lang) const { return entries.count(lang) > 0; }
  void validate() const;  // K >= 1 and origin present

  bool operator==(const TranslationSet&) const = default;
};

struct TrainingSample {
  FeatureSequence features;
  TranslationSet targets;
  std::string corpus_id;
};

// One manifest line: everything about a sample except the feature payload.
struct ManifestRecord {
  std::string sample_id;
  std::string feature_path;  // relative to the manifest's directory
  std::string split;
  std::string corpus_id;
  TranslationSet targets;

  bool operator==(const ManifestRecord&) const = default;
};

struct CorpusManifest {
  std::vector<ManifestRecord> records;
  std::string split = "train";
  std::map<std::string, std::string> metadata;
  std::filesystem::path dir;  // resolution base for feature paths; not serialized

  std::size_t size() const { return records.size(); }
  std::filesystem::path feature_file(std::size_t index) const;
  bool structurally_equal(const CorpusManifest& other) const;
};

// --- feature files -----------------------------------------------------------
// Flat binary layout: magic "SLTF", u32 version, u32 T, u32 D_s, u32 D_m,
// u32 float width in bytes (8), then the row-major spatial block followed by
// the row-major motion block. Little-endian doubles.

void write_features(const std::filesystem::path& path, const FeatureSequence& features);
FeatureSequence read_features(const std::filesystem::path& path);

// --- manifests -----------------------------------------------------------------
// Line-delimited JSON, one record per sample. An optional first line of the
// form {"metadata": {...}, "split": "..."} carries manifest-level fields.
// The first entry in each record's target list is the origin language.

CorpusManifest load_manifest(const std::filesystem::path& path);
void write_manifest(const CorpusManifest& manifest, const std::filesystem::path& path);

// Materializes one sample (reads its feature file).
TrainingSample load_training_sample(const CorpusManifest& manifest, std::size_t index);

// Union of all input manifests with every TranslationSet extended (via the
// provider) to cover target_languages. Idempotent when nothing is missing.
CorpusManifest fuse_corpora(const std::vector<CorpusManifest>& manifests,
                            const std::vector<LanguageTag>& target_languages,
                            const TranslationProvider& provider);

}  // namespace slt
