#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "slt/datamodel.hpp"

namespace slt {

struct SemanticVector {
  Eigen::VectorXd values;

  int dim() const { return static_cast<int>(values.size()); }
  bool operator==(const SemanticVector& o) const { return values == o.values; }
};

// Special token ids shared by every language.
enum SpecialToken : int { kPad = 0, kBos = 1, kEos = 2, kNumSpecials = 3 };

// Global vocabulary over all registered languages: specials, then one token
// per LanguageTag, then one block of word tokens per language. Registration
// order fixes all ids.
class LanguageRegistry {
 public:
  int register_language(const LanguageTag& tag, std::vector<std::string> tokens);

  bool has(const LanguageTag& tag) const { return index_.count(tag) > 0; }
  int language_count() const { return static_cast<int>(languages_.size()); }
  int vocab_size() const { return vocab_size_; }
  std::vector<LanguageTag> languages() const;

  int language_token(const LanguageTag& tag) const;
  int token_id(const LanguageTag& tag, const std::string& token) const;
  const std::string& token_string(int global_id) const;
  bool is_word_token(const LanguageTag& tag, int global_id) const;
  int first_word_id(const LanguageTag& tag) const;
  const std::vector<std::string>& tokens_of(const LanguageTag& tag) const;

  Sentence make_sentence(const LanguageTag& tag, const std::vector<std::string>& words) const;
  Sentence tokenize(const LanguageTag& tag, const std::string& text) const;
  std::string detokenize(const std::vector<int>& tokens) const;

 private:
  struct Entry {
    LanguageTag tag;
    int lang_token_id = -1;
    int first_word_id = -1;
    std::vector<std::string> tokens;
    std::map<std::string, int> local_of_token;
  };
  const Entry& entry(const LanguageTag& tag) const;

  std::vector<Entry> languages_;
  std::map<LanguageTag, int> index_;
  std::vector<std::string> id_to_string_;
  int vocab_size_ = kNumSpecials;
};

// The frozen language-agnostic space: a concept inventory, per-language
// token->concept lexicons, and a fixed isometric projection of normalized
// concept counts into R^d. Parallel sentences embed to identical points by
// construction.
struct SpaceConfig {
  int d = 64;
  std::vector<std::string> concepts;
  LanguageRegistry registry;
  // lexicons[lang][local_word_index] = concept index
  std::map<LanguageTag, std::vector<int>> lexicons;
  // concept_directions row k is the unit vector concept k maps to; rows are
  // mutually orthonormal so the projection preserves norms and inner products
  Matrix concept_directions;  // |concepts| x d

  int concept_count() const { return static_cast<int>(concepts.size()); }
  int concept_of_token(const LanguageTag& lang, int global_token_id) const;
  std::vector<int> concept_sequence(const Sentence& sentence) const;
  void validate(double tol = 1e-6) const;

  std::string to_json_string() const;
  static SpaceConfig from_json_string(const std::string& text);
};

void save_space(const SpaceConfig& cfg, const std::filesystem::path& path);
SpaceConfig load_space(const std::filesystem::path& path);

// Builds orthonormal concept directions from a seeded Gaussian draw (requires
// d >= concept count).
Matrix make_concept_directions(int concept_count, int d, std::uint64_t seed);

// The frozen text encoder: L2-normalized concept counts through the
// orthonormal projection. Language-agnostic and deterministic.
SemanticVector embed_text(const Sentence& sentence, const SpaceConfig& cfg);

// Seam for swapping the analytic space for a real multilingual sentence
// encoder/decoder (an external service or a ported checkpoint). Declared so
// callers can program against it; no implementation ships in this build.
class SemanticBackend {
 public:
  virtual ~SemanticBackend() = default;
  virtual SemanticVector embed_text(const Sentence& sentence) const = 0;
  virtual Sentence decode(const SemanticVector& v, const LanguageTag& lang,
                          int max_len) const = 0;
};

}  // namespace slt
