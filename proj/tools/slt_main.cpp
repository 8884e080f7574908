// Operator entry point: corpus generation, target augmentation, training,
// evaluation, single-sample translation and augmentation inspection. All
// hyperparameters live in config files; flags only select files, paths and
// seeds. Log verbosity comes from the SLT_LOG environment variable.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "slt/augmentation.hpp"
#include "slt/checkpoint.hpp"
#include "slt/datamodel.hpp"
#include "slt/errors.hpp"
#include "slt/evaluation.hpp"
#include "slt/log.hpp"
#include "slt/synthetic.hpp"
#include "slt/training.hpp"
#include "slt/translation.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitRuntime = 4;

std::vector<slt::LanguageTag> parse_langs(const std::string& csv) {
  std::vector<slt::LanguageTag> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(slt::LanguageTag{item});
  }
  if (out.empty()) throw slt::ConfigError("--langs needs a comma-separated list");
  return out;
}

void copy_config_snapshot(const fs::path& config, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  fs::copy_file(config, out_dir / config.filename(), fs::copy_options::overwrite_existing);
}

int run_gen_data(const fs::path& spec_path, std::uint64_t seed, const fs::path& out) {
  slt::SynthSpec spec = slt::SynthSpec::from_json_file(spec_path);
  copy_config_snapshot(spec_path, out);
  slt::SyntheticCorpus corpus = slt::generate_synthetic_corpus(spec, seed, out);
  std::size_t total = 0;
  for (const auto& [split, manifest] : corpus.manifests) {
    std::printf("%s: %zu samples -> %s\n", split.c_str(), manifest.size(),
                (out / (split + ".jsonl")).string().c_str());
    total += manifest.size();
  }
  std::printf("space: %d concepts, %d languages, d=%d -> %s\n", corpus.space.concept_count(),
              corpus.space.registry.language_count(), corpus.space.d,
              (out / "space.json").string().c_str());
  std::printf("wrote %zu feature files under %s\n", total, (out / "features").string().c_str());
  return kExitOk;
}

int run_augment_targets(const fs::path& manifest_path, const fs::path& space_path,
                        const std::string& langs_csv, const fs::path& out) {
  slt::CorpusManifest manifest = slt::load_manifest(manifest_path);
  slt::SpaceConfig space = slt::load_space(space_path);
  slt::LexiconTranslationProvider provider(space);
  slt::CorpusManifest augmented = slt::augment_targets(manifest, parse_langs(langs_csv), provider);
  // keep feature paths resolvable from the output location
  if (fs::absolute(out).parent_path() != fs::absolute(manifest_path).parent_path()) {
    for (std::size_t i = 0; i < augmented.records.size(); ++i) {
      augmented.records[i].feature_path =
          fs::absolute(manifest.feature_file(i)).lexically_normal().string();
    }
  }
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  slt::write_manifest(augmented, out);
  std::printf("augmented %zu samples -> %s\n", augmented.size(), out.string().c_str());
  return kExitOk;
}

int run_train(const fs::path& config_path, std::optional<std::uint64_t> seed,
              std::optional<fs::path> out) {
  slt::TrainConfig cfg = slt::TrainConfig::from_json_file(config_path);
  if (seed.has_value()) cfg.master_seed = *seed;
  if (out.has_value()) cfg.out_dir = *out;
  if (cfg.out_dir.empty()) throw slt::ConfigError("no out_dir in config and no --out given");
  copy_config_snapshot(config_path, cfg.out_dir);
  slt::Checkpoint best = slt::train(cfg);
  std::printf("best checkpoint: epoch %d -> %s\n", best.epoch,
              (cfg.out_dir / "best.ckpt").string().c_str());
  if (!best.metrics_history.empty()) {
    std::printf("last epoch record: %s\n", best.metrics_history.back().c_str());
  }
  return kExitOk;
}

fs::path manifest_for_split(const slt::Checkpoint& ckpt, const std::string& split) {
  if (ckpt.config_json.empty()) {
    throw slt::ConfigError("checkpoint carries no config; pass --manifest explicitly");
  }
  slt::TrainConfig cfg = slt::TrainConfig::from_json_string(ckpt.config_json);
  if (split == "dev" && cfg.dev_manifest.has_value()) return *cfg.dev_manifest;
  if (split == "test" && cfg.test_manifest.has_value()) return *cfg.test_manifest;
  if (split == "train" && !cfg.train_manifests.empty()) return cfg.train_manifests.front();
  throw slt::ConfigError("checkpoint config has no manifest for split '" + split + "'");
}

int run_evaluate(const fs::path& ckpt_path, const std::string& split, const std::string& langs_csv,
                 const std::string& mode, std::optional<fs::path> manifest_path,
                 std::optional<fs::path> out, bool dump_samples, bool plots, int threads) {
  slt::Checkpoint ckpt = slt::load_checkpoint(ckpt_path);
  const fs::path mpath =
      manifest_path.has_value() ? *manifest_path : manifest_for_split(ckpt, split);
  slt::CorpusManifest manifest = slt::load_manifest(mpath);
  slt::SpaceConfig space = ckpt.space();
  slt::LexiconTranslationProvider provider(space);

  slt::EvalOptions options;
  options.decode_mode = slt::parse_decode_mode(mode);
  options.provider = &provider;
  options.threads = threads;
  if (!ckpt.config_json.empty()) {
    options.max_decode_len =
        slt::TrainConfig::from_json_string(ckpt.config_json).eval_max_decode_len;
  }

  slt::EvalReport report = slt::evaluate(ckpt, manifest, parse_langs(langs_csv), options);
  std::printf("%s", report.render_table().c_str());
  const fs::path report_dir = out.value_or(ckpt_path.parent_path() / ("eval_" + split));
  slt::write_eval_report(report, report_dir, dump_samples);
  if (plots) slt::write_score_svg(report, report_dir / "bleu.svg");
  std::printf("report -> %s\n", report_dir.string().c_str());
  return kExitOk;
}

int run_translate(const fs::path& ckpt_path, const fs::path& features_path,
                  const std::string& langs_csv, const std::string& mode,
                  std::optional<fs::path> out) {
  slt::Checkpoint ckpt = slt::load_checkpoint(ckpt_path);
  slt::SpaceConfig space = ckpt.space();
  slt::FeatureSequence features = slt::read_features(features_path);
  const slt::SemanticVector z =
      slt::video_to_embedding(features, ckpt.visual, slt::parse_pooling_mode(ckpt.pooling_mode));
  std::string text;
  for (const auto& lang : parse_langs(langs_csv)) {
    slt::Sentence hyp =
        slt::decode(z, lang, ckpt.decoder, space.registry, 24, slt::parse_decode_mode(mode));
    std::printf("[%s] %s\n", lang.id.c_str(), hyp.raw_text.c_str());
    text += "[" + lang.id + "] " + hyp.raw_text + "\n";
  }
  if (out.has_value()) {
    std::ofstream f(*out);
    f << text;
  }
  return kExitOk;
}

int run_inspect_augment(const fs::path& config_path, std::optional<std::uint64_t> seed,
                        int sample_limit) {
  slt::TrainConfig cfg = slt::TrainConfig::from_json_file(config_path);
  if (seed.has_value()) cfg.master_seed = *seed;
  if (cfg.train_manifests.empty()) throw slt::ConfigError("config lists no train manifests");
  slt::CorpusManifest manifest = slt::load_manifest(cfg.train_manifests.front());
  const std::size_t n = std::min<std::size_t>(
      manifest.size(), sample_limit > 0 ? static_cast<std::size_t>(sample_limit) : 8);
  if (n == 0) throw slt::EmptyCorpus(cfg.train_manifests.front().string());

  std::printf("augmentation: mask_ratio=%.3f dropout=%.3f noise_std=%.3f window=%d\n",
              cfg.aug.frame_mask_ratio, cfg.aug.frame_dropout_prob, cfg.aug.add_noise_std,
              cfg.aug.shuffle_window);
  std::printf("%-28s %6s %6s %8s %10s %s\n", "sample", "T_in", "T_out", "zeroed", "delta_rms",
              "target");
  for (std::size_t i = 0; i < n; ++i) {
    slt::TrainingSample sample = slt::load_training_sample(manifest, i);
    slt::RngStream rng =
        slt::augmentation_stream(cfg.master_seed, sample.features.sample_id, /*epoch=*/0);
    auto [aug, target] = slt::coupled_augment(sample, cfg.aug, rng);
    int zeroed = 0;
    for (Eigen::Index r = 0; r < aug.spatial.rows(); ++r) {
      if (aug.spatial.row(r).isZero(0.0) && aug.motion.row(r).isZero(0.0)) ++zeroed;
    }
    // with dropout or shuffling active the rows no longer align, so the rms
    // delta is only meaningful when T is preserved and order untouched
    double delta_rms = 0.0;
    if (aug.length() == sample.features.length()) {
      const slt::Matrix d = aug.spatial - sample.features.spatial;
      delta_rms = std::sqrt(d.array().square().mean());
    }
    std::printf("%-28s %6d %6d %8d %10.4f [%s] %s\n", sample.features.sample_id.c_str(),
                sample.features.length(), aug.length(), zeroed, delta_rms,
                target.language.id.c_str(), target.raw_text.c_str());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"embedding-supervised sign language translation toolkit"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic multilingual sign corpus");
  std::string gen_spec;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  gen->add_option("--spec,--config", gen_spec, "corpus spec (json)")->required();
  gen->add_option("--seed", gen_seed, "generation seed")->required();
  gen->add_option("--out", gen_out, "output directory")->required();

  auto* aug = app.add_subcommand("augment-targets", "extend manifests with translated targets");
  std::string aug_manifest, aug_space, aug_langs, aug_out;
  aug->add_option("--manifest", aug_manifest, "input manifest")->required();
  aug->add_option("--space", aug_space, "space file (registry + lexicons)")->required();
  aug->add_option("--langs", aug_langs, "comma-separated language tags")->required();
  aug->add_option("--out", aug_out, "output manifest path")->required();

  auto* train_cmd = app.add_subcommand("train", "run the training loop from a config");
  std::string train_config, train_out;
  std::int64_t train_seed = -1;
  train_cmd->add_option("--config", train_config, "training config (json)")->required();
  train_cmd->add_option("--seed", train_seed, "master seed override");
  train_cmd->add_option("--out", train_out, "run directory override");

  auto* eval_cmd = app.add_subcommand("evaluate", "decode a split and score it");
  std::string eval_ckpt, eval_split = "dev", eval_langs, eval_mode = "greedy", eval_manifest,
              eval_out;
  bool eval_dump = false, eval_plots = false;
  int eval_threads = 1;
  eval_cmd->add_option("--ckpt", eval_ckpt, "checkpoint file")->required();
  eval_cmd->add_option("--split", eval_split, "dev|test|train (resolved from the checkpoint)");
  eval_cmd->add_option("--langs", eval_langs, "comma-separated language tags")->required();
  eval_cmd->add_option("--mode", eval_mode, "greedy or beam<k>");
  eval_cmd->add_option("--manifest", eval_manifest, "explicit manifest path (overrides --split)");
  eval_cmd->add_option("--out", eval_out, "report directory");
  eval_cmd->add_flag("--dump-samples", eval_dump, "write per-sample reference/prediction pairs");
  eval_cmd->add_flag("--plots", eval_plots, "emit bleu.svg bar chart");
  eval_cmd->add_option("--threads", eval_threads, "scoring parallelism");

  auto* tr = app.add_subcommand("translate", "decode one feature file");
  std::string tr_ckpt, tr_features, tr_langs, tr_mode = "greedy", tr_out;
  tr->add_option("--ckpt", tr_ckpt, "checkpoint file")->required();
  tr->add_option("--features", tr_features, "feature file")->required();
  tr->add_option("--langs", tr_langs, "target language tags")->required();
  tr->add_option("--mode", tr_mode, "greedy or beam<k>");
  tr->add_option("--out", tr_out, "write translations to this file");

  auto* ia = app.add_subcommand("inspect-augment", "show before/after augmentation statistics");
  std::string ia_config;
  std::int64_t ia_seed = -1;
  int ia_samples = 8;
  ia->add_option("--config", ia_config, "training config (json)")->required();
  ia->add_option("--seed", ia_seed, "seed override");
  ia->add_option("--samples", ia_samples, "number of samples to show");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (gen->parsed()) return run_gen_data(gen_spec, gen_seed, gen_out);
    if (aug->parsed()) return run_augment_targets(aug_manifest, aug_space, aug_langs, aug_out);
    if (train_cmd->parsed()) {
      return run_train(train_config,
                       train_seed >= 0 ? std::optional<std::uint64_t>(train_seed) : std::nullopt,
                       train_out.empty() ? std::nullopt : std::optional<fs::path>(train_out));
    }
    if (eval_cmd->parsed()) {
      return run_evaluate(
          eval_ckpt, eval_split, eval_langs, eval_mode,
          eval_manifest.empty() ? std::nullopt : std::optional<fs::path>(eval_manifest),
          eval_out.empty() ? std::nullopt : std::optional<fs::path>(eval_out), eval_dump,
          eval_plots, eval_threads);
    }
    if (tr->parsed()) {
      return run_translate(tr_ckpt, tr_features, tr_langs, tr_mode,
                           tr_out.empty() ? std::nullopt : std::optional<fs::path>(tr_out));
    }
    if (ia->parsed()) {
      return run_inspect_augment(
          ia_config, ia_seed >= 0 ? std::optional<std::uint64_t>(ia_seed) : std::nullopt,
          ia_samples);
    }
  } catch (const slt::ConfigError& e) {
    slt::log::error(std::string("config error: ") + e.what());
    return kExitConfig;
  } catch (const slt::DataError& e) {
    slt::log::error(std::string("data error: ") + e.what());
    return kExitData;
  } catch (const std::exception& e) {
    slt::log::error(std::string("runtime error: ") + e.what());
    return kExitRuntime;
  }
  return kExitConfig;
}
