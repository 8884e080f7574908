#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "slt/decoder.hpp"
#include "slt/errors.hpp"
#include "slt/synthetic.hpp"

using namespace slt;

namespace {

SpaceConfig demo_space() {
  SynthSpec spec = SynthSpec::from_json_string(R"({
    "d": 12, "d_s": 4, "d_m": 4,
    "languages": [{"tag": "toy_a", "suffix": "_a"}, {"tag": "toy_b", "suffix": "_b"}],
    "categories": [
      {"name": "time", "concepts": ["today", "tomorrow"]},
      {"name": "weather", "concepts": ["sun", "rain"]}
    ],
    "templates": [["time", "weather"]]
  })");
  return build_space(spec, 3);
}

DecoderHyper small_hyper() {
  DecoderHyper h;
  h.d = 12;
  h.width = 16;
  h.layers = 2;
  h.heads = 2;
  h.ffn_mult = 2;
  return h;
}

}  // namespace

TEST_CASE("all-zero parameters give a uniform distribution: nll = T_y ln V") {
  const SpaceConfig space = demo_space();
  DecoderParams params = init_decoder_params(small_hyper(), space.registry, 5);
  for (const auto& name : params.store.names()) params.store.at(name).setZero();
  // keep layer norms affine-neutral
  for (const auto& name : params.store.names()) {
    if (name.size() > 6 && name.rfind(".gamma") == name.size() - 6) params.store.at(name).setOnes();
  }
  const Sentence y =
      space.registry.make_sentence(LanguageTag{"toy_a"}, {"today_a", "sun_a", "rain_a", "sun_a"});
  const SemanticVector v{Eigen::VectorXd::Zero(12)};
  const double nll = teacher_forced_nll(v, y, LanguageTag{"toy_a"}, params);
  CHECK(nll == doctest::Approx(4.0 * std::log(space.registry.vocab_size())).epsilon(1e-12));
}

TEST_CASE("logits forced to a delta on the gold tokens give nll ~ 0") {
  const SpaceConfig space = demo_space();
  const Sentence y = space.registry.make_sentence(LanguageTag{"toy_a"}, {"sun_a", "rain_a"});
  ag::Matrix logits = ag::Matrix::Zero(2, space.registry.vocab_size());
  logits(0, y.tokens[0]) = 200.0;
  logits(1, y.tokens[1]) = 200.0;
  const double nll = ag::scalar(ag::cross_entropy_rows(ag::constant(logits), y.tokens));
  CHECK(nll == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(nll >= 0.0);
}

TEST_CASE("autoencode_nll is the definitional composition") {
  const SpaceConfig space = demo_space();
  DecoderParams params = init_decoder_params(small_hyper(), space.registry, 9);
  const Sentence y = space.registry.make_sentence(LanguageTag{"toy_b"}, {"tomorrow_b", "rain_b"});
  const double direct = autoencode_nll(y, LanguageTag{"toy_b"}, params, space);
  const double composed =
      teacher_forced_nll(embed_text(y, space), y, LanguageTag{"toy_b"}, params);
  CHECK(direct == composed);
}

TEST_CASE("nll value is finite and dimension mismatch raises") {
  const SpaceConfig space = demo_space();
  DecoderParams params = init_decoder_params(small_hyper(), space.registry, 1);
  const Sentence y = space.registry.make_sentence(LanguageTag{"toy_a"}, {"sun_a"});
  const SemanticVector wrong{Eigen::VectorXd::Zero(5)};
  CHECK_THROWS_AS(teacher_forced_nll(wrong, y, LanguageTag{"toy_a"}, params), DimensionMismatch);
  const SemanticVector ok{Eigen::VectorXd::Zero(12)};
  CHECK(std::isfinite(teacher_forced_nll(ok, y, LanguageTag{"toy_a"}, params)));
  CHECK_THROWS_AS(teacher_forced_nll(ok, y, LanguageTag{"xx"}, params), UnknownLanguage);
}

TEST_CASE("teacher-forced nll gradients match finite differences") {
  const SpaceConfig space = demo_space();
  DecoderParams params = init_decoder_params(small_hyper(), space.registry, 21);
  const Sentence y = space.registry.make_sentence(LanguageTag{"toy_a"}, {"today_a", "rain_a"});
  const Eigen::VectorXd v = embed_text(y, space).values;

  auto loss_value = [&]() {
    nn::ParamGraph g(params.store);
    return ag::scalar(teacher_forced_nll_graph(g, ag::constant(v.transpose()), y,
                                               LanguageTag{"toy_a"}, params));
  };
  nn::ParamGraph g(params.store);
  ag::Var loss =
      teacher_forced_nll_graph(g, ag::constant(v.transpose()), y, LanguageTag{"toy_a"}, params);
  ag::backward(loss);
  std::map<std::string, Matrix> analytic;
  for (const auto& [name, leaf] : g.leaves()) {
    if (leaf->grad.size() > 0) analytic[name] = leaf->grad;
  }
  REQUIRE(!analytic.empty());
  // the nll is O(10), so h = 1e-4 keeps the central difference out of
  // cancellation noise on the smallest gradient entries
  const auto check = oracle::finite_diff_check(params.store, analytic, loss_value, 1e-4);
  CHECK(check.max_rel_err < 1e-4);
}

TEST_CASE("greedy decode is deterministic and beam(1) matches it") {
  const SpaceConfig space = demo_space();
  DecoderParams params = init_decoder_params(small_hyper(), space.registry, 33);
  const SemanticVector v = embed_text(
      space.registry.make_sentence(LanguageTag{"toy_a"}, {"today_a", "sun_a"}), space);

  const Sentence g1 = decode(v, LanguageTag{"toy_a"}, params, space.registry, 8);
  const Sentence g2 = decode(v, LanguageTag{"toy_a"}, params, space.registry, 8);
  CHECK(g1 == g2);
  const Sentence b1 =
      decode(v, LanguageTag{"toy_a"}, params, space.registry, 8, DecodeMode::beam(1));
  CHECK(b1 == g1);
  CHECK(static_cast<int>(g1.tokens.size()) <= 8);
}

TEST_CASE("decode honors max_len and rejects bad arguments") {
  const SpaceConfig space = demo_space();
  DecoderParams params = init_decoder_params(small_hyper(), space.registry, 4);
  const SemanticVector v{Eigen::VectorXd::Zero(12)};
  const Sentence out = decode(v, LanguageTag{"toy_b"}, params, space.registry, 3);
  CHECK(static_cast<int>(out.tokens.size()) <= 3);
  CHECK_THROWS_AS(decode(v, LanguageTag{"toy_b"}, params, space.registry, 0), ConfigError);
  const SemanticVector bad{Eigen::VectorXd::Zero(3)};
  CHECK_THROWS_AS(decode(bad, LanguageTag{"toy_b"}, params, space.registry, 4),
                  DimensionMismatch);
}

TEST_CASE("decode mode parsing") {
  CHECK(parse_decode_mode("greedy").kind == DecodeMode::kGreedy);
  CHECK(parse_decode_mode("beam4").beam_width == 4);
  CHECK_THROWS_AS(parse_decode_mode("nonsense"), ConfigError);
  CHECK_THROWS_AS(parse_decode_mode("beam0"), ConfigError);
}
