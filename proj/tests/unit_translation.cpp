#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <filesystem>

#include "slt/errors.hpp"
#include "slt/synthetic.hpp"
#include "slt/translation.hpp"

using namespace slt;
namespace fs = std::filesystem;

namespace {

SpaceConfig demo_space() {
  SynthSpec spec = SynthSpec::from_json_string(R"({
    "d": 16, "d_s": 4, "d_m": 4,
    "languages": [
      {"tag": "toy_a", "suffix": "_a"},
      {"tag": "toy_b", "suffix": "_b"},
      {"tag": "toy_c", "suffix": "_c"}
    ],
    "categories": [
      {"name": "time", "concepts": ["today", "tomorrow"]},
      {"name": "weather", "concepts": ["sun", "rain"]}
    ],
    "templates": [["time", "weather"]]
  })");
  return build_space(spec, 9);
}

}  // namespace

TEST_CASE("translating into the sentence's own language is the identity") {
  const SpaceConfig space = demo_space();
  LexiconTranslationProvider provider(space);
  const Sentence y = space.registry.make_sentence(LanguageTag{"toy_a"}, {"today_a", "rain_a"});
  CHECK(provider.translate(y, LanguageTag{"toy_a"}) == y);
}

TEST_CASE("bijective lexicons round-trip exactly") {
  const SpaceConfig space = demo_space();
  LexiconTranslationProvider provider(space);
  const Sentence y =
      space.registry.make_sentence(LanguageTag{"toy_a"}, {"tomorrow_a", "sun_a"});
  const Sentence there = provider.translate(y, LanguageTag{"toy_b"});
  CHECK(there.language.id == "toy_b");
  CHECK(there.raw_text == "tomorrow_b sun_b");
  const Sentence back = provider.translate(there, LanguageTag{"toy_a"});
  CHECK(back == y);
}

TEST_CASE("translations embed to the same point as the source") {
  const SpaceConfig space = demo_space();
  LexiconTranslationProvider provider(space);
  const Sentence y = space.registry.make_sentence(LanguageTag{"toy_c"}, {"today_c", "sun_c"});
  for (const char* lang : {"toy_a", "toy_b"}) {
    const Sentence t = provider.translate(y, LanguageTag{lang});
    CHECK(embed_text(t, space).values == embed_text(y, space).values);
  }
}

TEST_CASE("unsupported language raises") {
  const SpaceConfig space = demo_space();
  LexiconTranslationProvider provider(space);
  CHECK(!provider.supports(LanguageTag{"deu_Latn"}));
  const Sentence y = space.registry.make_sentence(LanguageTag{"toy_a"}, {"sun_a"});
  CHECK_THROWS_AS(provider.translate(y, LanguageTag{"deu_Latn"}), UnsupportedLanguage);
  CHECK(provider.supported_languages().size() == 3);
}

TEST_CASE("augment_targets covers requested languages and is idempotent") {
  const fs::path dir = fs::temp_directory_path() / ("slt_tr_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  SynthSpec spec = SynthSpec::from_json_string(R"({
    "corpus_id": "mono",
    "d": 16, "d_s": 4, "d_m": 4,
    "languages": [
      {"tag": "toy_a", "suffix": "_a"},
      {"tag": "toy_b", "suffix": "_b"},
      {"tag": "toy_c", "suffix": "_c"},
      {"tag": "toy_d", "suffix": "_d"}
    ],
    "categories": [
      {"name": "time", "concepts": ["today", "tomorrow"]},
      {"name": "weather", "concepts": ["sun", "rain"]}
    ],
    "templates": [["time", "weather"]],
    "splits": {"train": 5}
  })");
  SyntheticCorpus corpus = generate_synthetic_corpus(spec, 13, dir);
  LexiconTranslationProvider provider(corpus.space);

  // shrink to K=1 (origin only), then extend by three languages -> K=4
  CorpusManifest mono = corpus.manifests.at("train");
  for (auto& record : mono.records) {
    const Sentence origin = record.targets.origin();
    record.targets.entries.clear();
    record.targets.entries.emplace(origin.language, origin);
  }
  const std::vector<LanguageTag> extra{LanguageTag{"toy_b"}, LanguageTag{"toy_c"},
                                       LanguageTag{"toy_d"}};
  const CorpusManifest extended = augment_targets(mono, extra, provider);
  for (const auto& record : extended.records) {
    CHECK(record.targets.entries.size() == 4);
    for (const auto& [lang, sentence] : record.targets.entries) {
      CHECK(embed_text(sentence, corpus.space).values ==
            embed_text(record.targets.origin(), corpus.space).values);
    }
  }

  // idempotence: nothing changes when everything is already present
  const CorpusManifest again = augment_targets(extended, extra, provider);
  CHECK(again.structurally_equal(extended));

  CHECK_THROWS_AS(augment_targets(mono, {LanguageTag{"martian"}}, provider),
                  UnsupportedLanguage);
  fs::remove_all(dir);
}

TEST_CASE("remote provider wire contract encodes and decodes") {
  const std::string body =
      encode_translation_request("today sun", LanguageTag{"toy_a"}, LanguageTag{"toy_b"});
  CHECK(body.find("\"text\":\"today sun\"") != std::string::npos);
  CHECK(body.find("\"src\":\"toy_a\"") != std::string::npos);
  CHECK(body.find("\"tgt\":\"toy_b\"") != std::string::npos);

  CHECK(decode_translation_response(R"({"text": "heute sonne"})") == "heute sonne");
  CHECK_THROWS_AS(decode_translation_response("not json"), DataError);
  CHECK_THROWS_AS(decode_translation_response(R"({"other": 1})"), DataError);
}

TEST_CASE("remote provider ships as a hermetic stub") {
  RemoteProviderConfig cfg;
  cfg.endpoint = "http://localhost:9999/translate";
  cfg.languages = {LanguageTag{"toy_a"}, LanguageTag{"toy_b"}};
  RemoteTranslationProvider provider(cfg);
  CHECK(provider.supports(LanguageTag{"toy_a"}));
  CHECK(!provider.supports(LanguageTag{"toy_x"}));
  Sentence y;
  y.language = LanguageTag{"toy_a"};
  y.tokens = {5};
  y.raw_text = "x";
  CHECK_THROWS_AS(provider.translate(y, LanguageTag{"toy_b"}), DataError);
}
