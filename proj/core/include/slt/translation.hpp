#pragma once

#include <string>
#include <vector>

#include "slt/datamodel.hpp"
#include "slt/semantic_space.hpp"

namespace slt {

// Source of target-language translations for target augmentation and corpus
// fusion. Implementations must be safe for concurrent translate() calls.
class TranslationProvider {
 public:
  virtual ~TranslationProvider() = default;
  virtual bool supports(const LanguageTag& lang) const = 0;
  virtual std::vector<LanguageTag> supported_languages() const = 0;
  // Output language equals the requested tag.
  virtual Sentence translate(const Sentence& sentence, const LanguageTag& target) const = 0;
};

// Deterministic toy provider: tokens go through the source language's concept
// lexicon and out through the target language's. Meaning-preserving by
// construction, so embed_text(translate(y, l)) == embed_text(y) exactly.
class LexiconTranslationProvider : public TranslationProvider {
 public:
  explicit LexiconTranslationProvider(SpaceConfig space) : space_(std::move(space)) {}

  bool supports(const LanguageTag& lang) const override;
  std::vector<LanguageTag> supported_languages() const override;
  Sentence translate(const Sentence& sentence, const LanguageTag& target) const override;

  const SpaceConfig& space() const { return space_; }

 private:
  SpaceConfig space_;
};

// Wire contract of the remote machine-translation service: POST a JSON body
// {"text": ..., "src": ..., "tgt": ...} and read back {"text": ...}. The
// encode/decode halves are plain functions so the contract is testable
// without a network.
std::string encode_translation_request(const std::string& text, const LanguageTag& src,
                                       const LanguageTag& tgt);
std::string decode_translation_response(const std::string& body);

struct RemoteProviderConfig {
  std::string endpoint;  // e.g. http://localhost:8080/translate
  int timeout_ms = 5000;
  int retries = 2;
  std::vector<LanguageTag> languages;
};

// Declared for wiring real MT services behind the provider interface. This
// build ships it as a stub: translate() always fails, keeping the test suite
// hermetic.
class RemoteTranslationProvider : public TranslationProvider {
 public:
  explicit RemoteTranslationProvider(RemoteProviderConfig cfg) : cfg_(std::move(cfg)) {}

  bool supports(const LanguageTag& lang) const override;
  std::vector<LanguageTag> supported_languages() const override { return cfg_.languages; }
  [[noreturn]] Sentence translate(const Sentence& sentence, const LanguageTag& target) const override;

 private:
  RemoteProviderConfig cfg_;
};

// Extends every TranslationSet in the manifest to cover the requested
// languages. Already-present entries are left untouched (idempotent).
CorpusManifest augment_targets(const CorpusManifest& manifest,
                               const std::vector<LanguageTag>& languages,
                               const TranslationProvider& provider);

}  // namespace slt
