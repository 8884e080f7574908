#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <limits>

#include "slt/datamodel.hpp"
#include "slt/errors.hpp"
#include "slt/rng.hpp"
#include "slt/synthetic.hpp"
#include "slt/translation.hpp"

using namespace slt;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("slt_dm_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

SynthSpec tiny_spec() {
  return SynthSpec::from_json_string(R"({
    "corpus_id": "tiny",
    "d": 16, "d_s": 6, "d_m": 4,
    "languages": [{"tag": "toy_a", "suffix": "_a"}, {"tag": "toy_b", "suffix": "_b"}],
    "categories": [
      {"name": "time", "concepts": ["today", "tomorrow"]},
      {"name": "weather", "concepts": ["sun", "rain", "wind"]}
    ],
    "templates": [["time", "weather"]],
    "splits": {"train": 6, "dev": 2}
  })");
}

}  // namespace

TEST_CASE("feature file round-trip is bit exact") {
  const fs::path dir = temp_dir("feat");
  RngStream rng(3);
  FeatureSequence f;
  f.sample_id = "s0";
  f.spatial.resize(4, 3);
  f.motion.resize(4, 2);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 3; ++j) f.spatial(i, j) = rng.next_normal();
    for (int j = 0; j < 2; ++j) f.motion(i, j) = rng.next_normal();
  }
  write_features(dir / "s0.feat", f);
  const FeatureSequence g = read_features(dir / "s0.feat");
  CHECK(g.spatial == f.spatial);
  CHECK(g.motion == f.motion);
  fs::remove_all(dir);
}

TEST_CASE("feature validation rejects bad shapes and values") {
  FeatureSequence f;
  f.sample_id = "bad";
  f.spatial = Matrix::Zero(0, 3);
  f.motion = Matrix::Zero(0, 2);
  CHECK_THROWS_AS(f.validate(), DataError);
  f.spatial = Matrix::Zero(2, 3);
  f.motion = Matrix::Zero(3, 2);
  CHECK_THROWS_AS(f.validate(), DimensionMismatch);
  f.motion = Matrix::Zero(2, 2);
  f.spatial(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(f.validate(), DataError);
}

TEST_CASE("empty manifest file loads as a valid zero-sample manifest") {
  const fs::path dir = temp_dir("empty");
  std::ofstream(dir / "empty.jsonl").close();
  const CorpusManifest m = load_manifest(dir / "empty.jsonl");
  CHECK(m.size() == 0);
  fs::remove_all(dir);
}

TEST_CASE("manifest referencing a nonexistent feature file fails") {
  const fs::path dir = temp_dir("missing");
  std::ofstream out(dir / "m.jsonl");
  out << R"({"sample_id":"a","feature_path":"features/a.feat","split":"train","corpus_id":"c",)"
      << R"("targets":[{"language":"toy_a","text":"x","tokens":[5]}]})"
      << "\n";
  out.close();
  CHECK_THROWS_AS(load_manifest(dir / "m.jsonl"), MissingFeatureFile);
  fs::remove_all(dir);
}

TEST_CASE("duplicate sample ids and malformed records are rejected") {
  const fs::path dir = temp_dir("dup");
  const std::string record =
      R"({"sample_id":"a","feature_path":"a.feat","split":"train","corpus_id":"c",)"
      R"("targets":[{"language":"toy_a","text":"x","tokens":[5]}]})";
  {
    std::ofstream out(dir / "dup.jsonl");
    out << record << "\n" << record << "\n";
  }
  std::ofstream(dir / "a.feat").close();
  CHECK_THROWS_AS(load_manifest(dir / "dup.jsonl"), DuplicateSampleId);

  {
    std::ofstream out(dir / "bad.jsonl");
    out << "{not json}\n";
  }
  CHECK_THROWS_AS(load_manifest(dir / "bad.jsonl"), MalformedRecord);

  {
    std::ofstream out(dir / "short.jsonl");
    out << R"({"sample_id":"a","feature_path":"a.feat"})" << "\n";
  }
  CHECK_THROWS_AS(load_manifest(dir / "short.jsonl"), MalformedRecord);
  fs::remove_all(dir);
}

TEST_CASE("manifest write-then-load reproduces the structural content") {
  const fs::path dir = temp_dir("roundtrip");
  SyntheticCorpus corpus = generate_synthetic_corpus(tiny_spec(), 11, dir);
  const CorpusManifest& original = corpus.manifests.at("train");
  write_manifest(original, dir / "copy.jsonl");
  const CorpusManifest reloaded = load_manifest(dir / "copy.jsonl");
  CHECK(reloaded.structurally_equal(original));
  fs::remove_all(dir);
}

TEST_CASE("generation is deterministic and parallel by construction") {
  const fs::path dir1 = temp_dir("gen1");
  const fs::path dir2 = temp_dir("gen2");
  SyntheticCorpus c1 = generate_synthetic_corpus(tiny_spec(), 5, dir1);
  SyntheticCorpus c2 = generate_synthetic_corpus(tiny_spec(), 5, dir2);
  CHECK(c1.manifests.at("train").structurally_equal(c2.manifests.at("train")));

  for (std::size_t i = 0; i < c1.manifests.at("train").size(); ++i) {
    const FeatureSequence a = read_features(c1.manifests.at("train").feature_file(i));
    const FeatureSequence b = read_features(c2.manifests.at("train").feature_file(i));
    CHECK(a.spatial == b.spatial);
    CHECK(a.motion == b.motion);
  }

  // K = 2 parallel sentences per sample; concept sequences align via lexicons
  for (const auto& record : c1.manifests.at("train").records) {
    CHECK(record.targets.entries.size() == 2);
    const auto seq_a = c1.space.concept_sequence(record.targets.entries.at(LanguageTag{"toy_a"}));
    const auto seq_b = c1.space.concept_sequence(record.targets.entries.at(LanguageTag{"toy_b"}));
    CHECK(seq_a == seq_b);
  }
  fs::remove_all(dir1);
  fs::remove_all(dir2);
}

TEST_CASE("lexicon mapping reproduces the parallel sentence exactly") {
  const fs::path dir = temp_dir("lexmap");
  SynthSpec spec = tiny_spec();
  spec.splits = {{"train", 100}};
  SyntheticCorpus corpus = generate_synthetic_corpus(spec, 23, dir);
  LexiconTranslationProvider provider(corpus.space);
  for (const auto& record : corpus.manifests.at("train").records) {
    const Sentence& a = record.targets.entries.at(LanguageTag{"toy_a"});
    const Sentence& b = record.targets.entries.at(LanguageTag{"toy_b"});
    CHECK(provider.translate(a, LanguageTag{"toy_b"}) == b);
  }
  fs::remove_all(dir);
}

TEST_CASE("degenerate spec: one concept still generates parallel singletons") {
  SynthSpec spec = SynthSpec::from_json_string(R"({
    "corpus_id": "one",
    "d": 8, "d_s": 4, "d_m": 4,
    "languages": [{"tag": "toy_a", "suffix": "_a"}, {"tag": "toy_b", "suffix": "_b"}],
    "categories": [{"name": "only", "concepts": ["thing"]}],
    "templates": [["only"]],
    "splits": {"train": 4}
  })");
  const fs::path dir = temp_dir("one");
  SyntheticCorpus corpus = generate_synthetic_corpus(spec, 2, dir);
  for (const auto& record : corpus.manifests.at("train").records) {
    CHECK(record.targets.entries.size() == 2);
    for (const auto& [lang, sentence] : record.targets.entries) {
      CHECK(sentence.tokens.size() == 1);
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("spec validation errors") {
  CHECK_THROWS_AS(SynthSpec::from_json_string(R"({
    "languages": [{"tag": "a", "suffix": "_a"}],
    "categories": [{"name": "c", "concepts": ["x"]}],
    "templates": [["c"]]
  })"),
                  ConfigError);  // one language only
  CHECK_THROWS_AS(SynthSpec::from_json_string(R"({
    "languages": [{"tag": "a"}, {"tag": "b", "suffix": "_b"}],
    "categories": [{"name": "c", "concepts": ["x"]}],
    "templates": [["c"]]
  })"),
                  EmptyLexicon);  // no suffix, no lexicon
}

TEST_CASE("concept without motif is detected") {
  MotifBank bank;
  bank.motif_len = 2;
  bank.motifs["known"] = {Matrix::Zero(2, 3), Matrix::Zero(2, 2)};
  RngStream rng(1);
  CHECK_THROWS_AS(features_for_concepts(bank, {"known", "unknown"}, 0.0, rng),
                  ConceptWithoutMotif);
}

TEST_CASE("fuse_corpora unions samples and extends translation sets") {
  const fs::path dir = temp_dir("fuse");
  SynthSpec spec_a = tiny_spec();
  spec_a.corpus_id = "corpA";
  spec_a.splits = {{"train", 3}};
  SynthSpec spec_b = tiny_spec();
  spec_b.corpus_id = "corpB";
  spec_b.splits = {{"train", 5}};
  SyntheticCorpus ca = generate_synthetic_corpus(spec_a, 1, dir / "a");
  SyntheticCorpus cb = generate_synthetic_corpus(spec_b, 2, dir / "b");
  // corpus B annotated in toy_a only (simulates a monolingual corpus)
  CorpusManifest mono_b = cb.manifests.at("train");
  for (auto& record : mono_b.records) {
    record.targets.entries.erase(LanguageTag{"toy_b"});
  }

  LexiconTranslationProvider provider(ca.space);

  // idempotence: requested languages already present -> output equals input
  CorpusManifest same = fuse_corpora({ca.manifests.at("train")}, {LanguageTag{"toy_a"}}, provider);
  CHECK(same.size() == 3);
  for (std::size_t i = 0; i < same.size(); ++i) {
    CHECK(same.records[i].targets == ca.manifests.at("train").records[i].targets);
  }

  // union of disjoint manifests: 3 + 5 = 8, every set extended to toy_b
  CorpusManifest fused =
      fuse_corpora({ca.manifests.at("train"), mono_b}, {LanguageTag{"toy_b"}}, provider);
  CHECK(fused.size() == 8);
  for (const auto& record : fused.records) {
    REQUIRE(record.targets.has(LanguageTag{"toy_b"}));
    const Sentence expect = provider.translate(record.targets.origin(), LanguageTag{"toy_b"});
    CHECK(record.targets.entries.at(LanguageTag{"toy_b"}) == expect);
    CHECK((record.corpus_id == "corpA" || record.corpus_id == "corpB"));
  }

  CHECK_THROWS_AS(fuse_corpora({ca.manifests.at("train")}, {LanguageTag{"nope"}}, provider),
                  UnsupportedLanguage);
  fs::remove_all(dir);
}
