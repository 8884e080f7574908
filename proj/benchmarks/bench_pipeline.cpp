#include <benchmark/benchmark.h>

#include "slt/augmentation.hpp"
#include "slt/decoder.hpp"
#include "slt/rng.hpp"
#include "slt/synthetic.hpp"
#include "slt/training.hpp"
#include "slt/visual.hpp"

namespace {

using namespace slt;

SynthSpec bench_spec() {
  return SynthSpec::from_json_string(R"({
    "corpus_id": "bench", "d": 64, "d_s": 32, "d_m": 32,
    "languages": [
      {"tag": "toy_a", "suffix": "_a"}, {"tag": "toy_b", "suffix": "_b"},
      {"tag": "toy_c", "suffix": "_c"}
    ],
    "categories": [
      {"name": "time",    "concepts": ["today", "tomorrow", "tonight", "morning"]},
      {"name": "weather", "concepts": ["sun", "rain", "wind", "snow", "fog"]},
      {"name": "degree",  "concepts": ["strong", "weak", "mild"]},
      {"name": "place",   "concepts": ["north", "south", "coast", "valley"]}
    ],
    "templates": [[{"category": "time"}, {"category": "degree", "optional": true},
                   {"category": "weather"}, {"category": "place"}]]
  })");
}

struct Fixture {
  SpaceConfig space;
  DecoderParams decoder;
  VisualParams visual;
  FeatureSequence features;
  Sentence sentence;

  Fixture() {
    SynthSpec spec = bench_spec();
    space = build_space(spec, 1);
    DecoderHyper dh;
    decoder = init_decoder_params(dh, space.registry, 1);
    VisualHyper vh;
    visual = init_visual_params(vh, 1, &decoder);
    const MotifBank bank = draw_motifs(spec, 1);
    RngStream rng(2);
    features = features_for_concepts(bank, {"today", "strong", "rain", "coast"}, 0.01, rng);
    features.sample_id = "bench";
    sentence = space.registry.make_sentence(
        LanguageTag{"toy_a"}, {"today_a", "strong_a", "rain_a", "coast_a"});
  }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

void BM_EmbedText(benchmark::State& state) {
  Fixture& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(embed_text(f.sentence, f.space));
  }
}
BENCHMARK(BM_EmbedText);

void BM_VideoToEmbedding(benchmark::State& state) {
  Fixture& f = fixture();
  const PoolingMode mode = static_cast<PoolingMode>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(video_to_embedding(f.features, f.visual, mode));
  }
  state.SetLabel(pooling_mode_name(mode));
}
BENCHMARK(BM_VideoToEmbedding)->Arg(0)->Arg(1)->Arg(2);

void BM_TeacherForcedNll(benchmark::State& state) {
  Fixture& f = fixture();
  const SemanticVector v = embed_text(f.sentence, f.space);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        teacher_forced_nll(v, f.sentence, f.sentence.language, f.decoder));
  }
}
BENCHMARK(BM_TeacherForcedNll);

void BM_GreedyDecode(benchmark::State& state) {
  Fixture& f = fixture();
  const SemanticVector v = embed_text(f.sentence, f.space);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        decode(v, f.sentence.language, f.decoder, f.space.registry, 12));
  }
}
BENCHMARK(BM_GreedyDecode);

void BM_CoupledAugment(benchmark::State& state) {
  Fixture& f = fixture();
  TrainingSample sample;
  sample.features = f.features;
  sample.targets.origin_language = f.sentence.language;
  sample.targets.entries[f.sentence.language] = f.sentence;
  const AugmentationConfig cfg;
  std::uint64_t epoch = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        coupled_augment(sample, cfg, augmentation_stream(1, "bench", static_cast<int>(epoch++))));
  }
}
BENCHMARK(BM_CoupledAugment);

}  // namespace

BENCHMARK_MAIN();
