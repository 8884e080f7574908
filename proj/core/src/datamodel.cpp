#include "slt/datamodel.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>

#include <json.hpp>

#include "slt/errors.hpp"
#include "slt/translation.hpp"

namespace slt {

using nlohmann::json;

void FeatureSequence::validate() const {
  if (spatial.rows() < 1) throw DataError("feature sequence '" + sample_id + "' has T < 1");
  if (spatial.rows() != motion.rows()) {
    throw DimensionMismatch("spatial and motion length differ for sample '" + sample_id + "'");
  }
  if (!spatial.allFinite() || !motion.allFinite()) {
    throw DataError("feature sequence '" + sample_id + "' contains non-finite values");
  }
}

const Sentence& TranslationSet::origin() const {
  auto it = entries.find(origin_language);
  if (it == entries.end()) {
    throw DataError("translation set lacks its origin language '" + origin_language.id + "'");
  }
  return it->second;
}

void TranslationSet::validate() const {
  if (entries.empty()) throw DataError("translation set is empty");
  if (entries.count(origin_language) == 0) {
    throw DataError("origin language '" + origin_language.id + "' missing from translation set");
  }
  for (const auto& [lang, sentence] : entries) {
    if (sentence.tokens.empty()) {
      throw DataError("empty sentence for language '" + lang.id + "'");
    }
    if (sentence.language != lang) {
      throw LanguageMismatch("entry keyed '" + lang.id + "' holds a sentence tagged '" +
                             sentence.language.id + "'");
    }
  }
}

std::filesystem::path CorpusManifest::feature_file(std::size_t index) const {
  std::filesystem::path p = records.at(index).feature_path;
  if (p.is_absolute()) return p;
  return dir / p;
}

bool CorpusManifest::structurally_equal(const CorpusManifest& other) const {
  return records == other.records && split == other.split && metadata == other.metadata;
}

// --- feature files -----------------------------------------------------------

namespace {

constexpr char kFeatureMagic[4] = {'S', 'L', 'T', 'F'};
constexpr std::uint32_t kFeatureVersion = 1;

void write_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::ifstream& in, const std::filesystem::path& path) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw DataError("truncated feature file: " + path.string());
  return v;
}

void write_block(std::ofstream& out, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
  }
}

Matrix read_block(std::ifstream& in, std::uint32_t rows, std::uint32_t cols,
                  const std::filesystem::path& path) {
  Matrix m(rows, cols);
  for (std::uint32_t i = 0; i < rows; ++i) {
    for (std::uint32_t j = 0; j < cols; ++j) {
      double v = 0.0;
      in.read(reinterpret_cast<char*>(&v), sizeof(v));
      if (!in) throw DataError("truncated feature file: " + path.string());
      m(i, j) = v;
    }
  }
  return m;
}

}  // namespace

void write_features(const std::filesystem::path& path, const FeatureSequence& features) {
  features.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open feature file for writing: " + path.string());
  out.write(kFeatureMagic, sizeof(kFeatureMagic));
  write_u32(out, kFeatureVersion);
  write_u32(out, static_cast<std::uint32_t>(features.spatial.rows()));
  write_u32(out, static_cast<std::uint32_t>(features.spatial.cols()));
  write_u32(out, static_cast<std::uint32_t>(features.motion.cols()));
  write_u32(out, sizeof(double));
  write_block(out, features.spatial);
  write_block(out, features.motion);
  if (!out) throw DataError("failed writing feature file: " + path.string());
}

FeatureSequence read_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open feature file: " + path.string());
  char magic[4];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kFeatureMagic, sizeof(magic)) != 0) {
    throw DataError("bad magic in feature file: " + path.string());
  }
  const std::uint32_t version = read_u32(in, path);
  if (version != kFeatureVersion) {
    throw DataError("unsupported feature file version " + std::to_string(version) + ": " +
                    path.string());
  }
  const std::uint32_t t = read_u32(in, path);
  const std::uint32_t d_s = read_u32(in, path);
  const std::uint32_t d_m = read_u32(in, path);
  const std::uint32_t width = read_u32(in, path);
  if (width != sizeof(double)) {
    throw DataError("unsupported float width " + std::to_string(width) + ": " + path.string());
  }
  FeatureSequence fs;
  fs.sample_id = path.stem().string();
  fs.spatial = read_block(in, t, d_s, path);
  fs.motion = read_block(in, t, d_m, path);
  fs.validate();
  return fs;
}

// --- manifests -----------------------------------------------------------------

namespace {

json sentence_to_json(const Sentence& s) {
  return json{{"language", s.language.id}, {"text", s.raw_text}, {"tokens", s.tokens}};
}

Sentence sentence_from_json(const json& j, std::size_t line) {
  if (!j.contains("language") || !j.contains("text") || !j.contains("tokens")) {
    throw MalformedRecord(line, "target needs language, text and tokens");
  }
  Sentence s;
  s.language.id = j.at("language").get<std::string>();
  s.raw_text = j.at("text").get<std::string>();
  s.tokens = j.at("tokens").get<std::vector<int>>();
  if (s.tokens.empty()) throw MalformedRecord(line, "target token list is empty");
  return s;
}

json record_to_json(const ManifestRecord& r) {
  json targets = json::array();
  targets.push_back(sentence_to_json(r.targets.origin()));
  for (const auto& [lang, sentence] : r.targets.entries) {
    if (lang != r.targets.origin_language) targets.push_back(sentence_to_json(sentence));
  }
  return json{{"sample_id", r.sample_id},
              {"feature_path", r.feature_path},
              {"split", r.split},
              {"corpus_id", r.corpus_id},
              {"targets", targets}};
}

ManifestRecord record_from_json(const json& j, std::size_t line) {
  for (const char* field : {"sample_id", "feature_path", "split", "corpus_id", "targets"}) {
    if (!j.contains(field)) throw MalformedRecord(line, std::string("missing field ") + field);
  }
  ManifestRecord r;
  r.sample_id = j.at("sample_id").get<std::string>();
  r.feature_path = j.at("feature_path").get<std::string>();
  r.split = j.at("split").get<std::string>();
  r.corpus_id = j.at("corpus_id").get<std::string>();
  const json& targets = j.at("targets");
  if (!targets.is_array() || targets.empty()) {
    throw MalformedRecord(line, "targets must be a non-empty list");
  }
  for (std::size_t i = 0; i < targets.size(); ++i) {
    Sentence s = sentence_from_json(targets[i], line);
    if (i == 0) r.targets.origin_language = s.language;
    if (r.targets.entries.count(s.language) > 0) {
      throw MalformedRecord(line, "duplicate target language '" + s.language.id + "'");
    }
    r.targets.entries.emplace(s.language, std::move(s));
  }
  return r;
}

}  // namespace

CorpusManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest: " + path.string());
  CorpusManifest manifest;
  manifest.dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");

  std::set<std::string> seen_ids;
  std::string text_line;
  std::size_t line_no = 0;
  bool split_seen = false;
  while (std::getline(in, text_line)) {
    ++line_no;
    if (text_line.empty()) continue;
    json j;
    try {
      j = json::parse(text_line);
    } catch (const json::exception& e) {
      throw MalformedRecord(line_no, e.what());
    }
    if (line_no == 1 && j.contains("metadata") && !j.contains("sample_id")) {
      manifest.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
      if (j.contains("split")) {
        manifest.split = j.at("split").get<std::string>();
        split_seen = true;
      }
      continue;
    }
    ManifestRecord r = record_from_json(j, line_no);
    if (!seen_ids.insert(r.sample_id).second) throw DuplicateSampleId(r.sample_id);
    if (!split_seen) {
      manifest.split = r.split;
      split_seen = true;
    } else if (r.split != manifest.split) {
      throw MalformedRecord(line_no, "split '" + r.split + "' differs from manifest split '" +
                                         manifest.split + "'");
    }
    r.targets.validate();
    manifest.records.push_back(std::move(r));
  }
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const auto p = manifest.feature_file(i);
    if (!std::filesystem::exists(p)) {
      throw MissingFeatureFile(manifest.records[i].sample_id, p.string());
    }
  }
  return manifest;
}

void write_manifest(const CorpusManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open manifest for writing: " + path.string());
  if (!manifest.metadata.empty()) {
    out << json{{"metadata", manifest.metadata}, {"split", manifest.split}}.dump() << "\n";
  }
  for (const auto& r : manifest.records) out << record_to_json(r).dump() << "\n";
  if (!out) throw DataError("failed writing manifest: " + path.string());
}

TrainingSample load_training_sample(const CorpusManifest& manifest, std::size_t index) {
  const ManifestRecord& r = manifest.records.at(index);
  TrainingSample sample;
  sample.features = read_features(manifest.feature_file(index));
  sample.features.sample_id = r.sample_id;
  sample.targets = r.targets;
  sample.corpus_id = r.corpus_id;
  return sample;
}

CorpusManifest fuse_corpora(const std::vector<CorpusManifest>& manifests,
                            const std::vector<LanguageTag>& target_languages,
                            const TranslationProvider& provider) {
  if (manifests.empty()) throw DataError("fuse_corpora: no manifests given");
  for (const auto& lang : target_languages) {
    if (!provider.supports(lang)) throw UnsupportedLanguage(lang.id);
  }
  CorpusManifest fused;
  fused.split = manifests.front().split;
  fused.metadata = manifests.front().metadata;
  fused.dir = manifests.front().dir;
  std::set<std::string> seen_ids;
  for (const auto& m : manifests) {
    if (m.split != fused.split) {
      throw DataError("fuse_corpora: mixed splits '" + fused.split + "' and '" + m.split + "'");
    }
    for (std::size_t i = 0; i < m.records.size(); ++i) {
      ManifestRecord r = m.records[i];
      if (!seen_ids.insert(r.sample_id).second) throw DuplicateSampleId(r.sample_id);
      // keep feature paths resolvable from the fused manifest's directory
      r.feature_path = std::filesystem::absolute(m.feature_file(i)).lexically_normal().string();
      for (const auto& lang : target_languages) {
        if (r.targets.has(lang)) continue;
        try {
          Sentence t = provider.translate(r.targets.origin(), lang);
          r.targets.entries.emplace(lang, std::move(t));
        } catch (const DataError& e) {
          throw DataError("fuse_corpora: sample '" + r.sample_id + "': " + e.what());
        }
      }
      fused.records.push_back(std::move(r));
    }
  }
  return fused;
}

}  // namespace slt
