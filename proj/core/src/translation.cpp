#include "slt/translation.hpp"

#include <json.hpp>

#include "slt/errors.hpp"

namespace slt {

using nlohmann::json;

bool LexiconTranslationProvider::supports(const LanguageTag& lang) const {
  return space_.lexicons.count(lang) > 0;
}

std::vector<LanguageTag> LexiconTranslationProvider::supported_languages() const {
  std::vector<LanguageTag> out;
  for (const auto& [lang, lex] : space_.lexicons) out.push_back(lang);
  return out;
}

Sentence LexiconTranslationProvider::translate(const Sentence& sentence,
                                               const LanguageTag& target) const {
  if (!supports(target)) throw UnsupportedLanguage(target.id);
  if (sentence.language == target) return sentence;
  const std::vector<int> concepts = space_.concept_sequence(sentence);
  // invert the target lexicon: concept index -> local token index
  const std::vector<int>& lex = space_.lexicons.at(target);
  std::vector<int> token_of_concept(static_cast<std::size_t>(space_.concept_count()), -1);
  for (std::size_t local = 0; local < lex.size(); ++local) {
    if (token_of_concept[static_cast<std::size_t>(lex[local])] < 0) {
      token_of_concept[static_cast<std::size_t>(lex[local])] = static_cast<int>(local);
    }
  }
  std::vector<std::string> words;
  words.reserve(concepts.size());
  for (int c : concepts) {
    const int local = token_of_concept[static_cast<std::size_t>(c)];
    if (local < 0) {
      throw UnknownToken(space_.concepts[static_cast<std::size_t>(c)], target.id);
    }
    words.push_back(space_.registry.tokens_of(target)[static_cast<std::size_t>(local)]);
  }
  return space_.registry.make_sentence(target, words);
}

std::string encode_translation_request(const std::string& text, const LanguageTag& src,
                                       const LanguageTag& tgt) {
  return json{{"text", text}, {"src", src.id}, {"tgt", tgt.id}}.dump();
}

std::string decode_translation_response(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw DataError(std::string("bad translation response: ") + e.what());
  }
  if (!j.contains("text")) throw DataError("translation response lacks 'text'");
  return j.at("text").get<std::string>();
}

bool RemoteTranslationProvider::supports(const LanguageTag& lang) const {
  for (const auto& l : cfg_.languages) {
    if (l == lang) return true;
  }
  return false;
}

Sentence RemoteTranslationProvider::translate(const Sentence& sentence,
                                              const LanguageTag& target) const {
  (void)sentence;
  throw DataError("remote translation provider '" + cfg_.endpoint +
                  "' is a stub in this build; requested target '" + target.id + "'");
}

CorpusManifest augment_targets(const CorpusManifest& manifest,
                               const std::vector<LanguageTag>& languages,
                               const TranslationProvider& provider) {
  for (const auto& lang : languages) {
    if (!provider.supports(lang)) throw UnsupportedLanguage(lang.id);
  }
  CorpusManifest out = manifest;
  for (auto& record : out.records) {
    for (const auto& lang : languages) {
      if (record.targets.has(lang)) continue;
      try {
        record.targets.entries.emplace(lang, provider.translate(record.targets.origin(), lang));
      } catch (const DataError& e) {
        throw DataError("augment_targets: sample '" + record.sample_id + "': " + e.what());
      }
    }
  }
  return out;
}

}  // namespace slt
