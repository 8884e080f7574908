#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "slt/datamodel.hpp"
#include "slt/rng.hpp"
#include "slt/semantic_space.hpp"

namespace slt {

// Toy corpus description. Sentences are built from templates of category
// slots; every category owns a disjoint set of concepts, so a bag of concepts
// always recovers the slot order. Each language maps concepts to tokens
// bijectively (either via an explicit lexicon or by suffixing the concept
// name), which makes parallel sentences exact translations of one another.
struct SynthSpec {
  struct Language {
    LanguageTag tag;
    std::string suffix;                                // used when lexicon is empty
    std::map<std::string, std::string> lexicon;        // concept -> token
  };
  struct Slot {
    std::string category;
    bool optional = false;
  };
  struct Category {
    std::string name;
    std::vector<std::string> concepts;
  };

  std::string corpus_id = "toy";
  int d = 64;
  int d_s = 32;
  int d_m = 32;
  int motif_len = 3;
  double jitter_std = 0.01;
  double optional_keep_prob = 0.5;
  std::vector<Language> languages;
  std::vector<Category> categories;
  std::vector<std::vector<Slot>> templates;
  std::map<std::string, int> splits;  // split name -> sample count

  std::vector<std::string> concept_inventory() const;  // category order, then listed order
  std::string token_for(const Language& lang, const std::string& concept_name) const;
  void validate() const;

  static SynthSpec from_json_string(const std::string& text);
  static SynthSpec from_json_file(const std::filesystem::path& path);
  std::string to_json_string() const;
};

// Fixed per-concept feature fragments, drawn once from the seed.
struct MotifBank {
  int motif_len = 0;
  std::map<std::string, std::pair<Matrix, Matrix>> motifs;  // concept -> (spatial, motion)
};

MotifBank draw_motifs(const SynthSpec& spec, std::uint64_t seed);

// Concatenated motifs for the concept sequence plus Gaussian jitter.
FeatureSequence features_for_concepts(const MotifBank& bank,
                                      const std::vector<std::string>& concepts,
                                      double jitter_std, RngStream& rng);

struct SyntheticCorpus {
  SpaceConfig space;
  std::map<std::string, CorpusManifest> manifests;  // per split
};

// Writes feature files, one manifest per split and the space file under
// out_dir. Deterministic function of (spec, seed).
SyntheticCorpus generate_synthetic_corpus(const SynthSpec& spec, std::uint64_t seed,
                                          const std::filesystem::path& out_dir);

// The space implied by a spec (registry, lexicons, projection); usable
// without generating any samples.
SpaceConfig build_space(const SynthSpec& spec, std::uint64_t seed);

}  // namespace slt
