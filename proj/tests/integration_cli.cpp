// End-to-end exercises of the command-line binary: every subcommand on a tiny
// corpus, plus the categorized exit codes.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const char* kCli = SLT_CLI_PATH;

int run(const std::string& args) {
  const std::string cmd = std::string(kCli) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path work_dir() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("slt_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

const std::string kSpec = R"({
  "corpus_id": "cli",
  "d": 24, "d_s": 6, "d_m": 6,
  "languages": [{"tag": "toy_a", "suffix": "_a"}, {"tag": "toy_b", "suffix": "_b"}],
  "categories": [
    {"name": "time", "concepts": ["today", "tomorrow", "tonight"]},
    {"name": "weather", "concepts": ["sun", "rain", "wind"]}
  ],
  "templates": [["time", "weather"]],
  "splits": {"train": 16, "dev": 6, "test": 6}
})";

std::string train_config(const fs::path& corpus, const fs::path& out) {
  return std::string(R"({
  "model": {"d": 24, "width": 24, "dec_layers": 2, "heads": 2, "ffn_mult": 2,
            "d_s": 6, "d_m": 6, "d_h": 24, "enc_layers": 1, "pool_layers": 1},
  "loss_weights": {"lambda_sem": 1.0, "lambda_ce": 0.1, "lambda_ae": 1.0, "lambda_nce": 0.0,
                   "alpha_mse": 100.0, "beta_cos": 2.7},
  "augmentation": {"frame_mask_ratio": 0.1, "frame_dropout_prob": 0.1,
                   "add_noise_std": 0.02, "shuffle_window": 2},
  "scope": {"visual": "full", "decoder": "full"},
  "batch_size": 4, "grad_accum_steps": 1, "epochs": 2, "patience": 0,
  "lr_schedule": {"type": "constant", "lr": 0.001},
  "master_seed": 5, "pooling_mode": "mean", "eval_max_decode_len": 8,
  "train_manifests": [")") +
         (corpus / "train.jsonl").string() + R"("], "dev_manifest": ")" +
         (corpus / "dev.jsonl").string() + R"(", "test_manifest": ")" +
         (corpus / "test.jsonl").string() + R"(", "space": ")" +
         (corpus / "space.json").string() + R"(", "out_dir": ")" + out.string() + R"("})";
}

}  // namespace

TEST_CASE("gen-data is reproducible and the full pipeline runs") {
  const fs::path dir = work_dir();
  write_file(dir / "spec.json", kSpec);

  REQUIRE(run("gen-data --spec " + (dir / "spec.json").string() + " --seed 7 --out " +
              (dir / "c1").string()) == 0);
  REQUIRE(run("gen-data --spec " + (dir / "spec.json").string() + " --seed 7 --out " +
              (dir / "c2").string()) == 0);

  // identical bytes for manifests and features across reruns
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  };
  CHECK(slurp(dir / "c1" / "train.jsonl") == slurp(dir / "c2" / "train.jsonl"));
  CHECK(slurp(dir / "c1" / "space.json") == slurp(dir / "c2" / "space.json"));
  CHECK(slurp(dir / "c1" / "features" / "cli-train-000000.feat") ==
        slurp(dir / "c2" / "features" / "cli-train-000000.feat"));
  // config snapshot lands in the run directory
  CHECK(fs::exists(dir / "c1" / "spec.json"));

  // augment-targets is a no-op here (both languages present) but must succeed
  REQUIRE(run("augment-targets --manifest " + (dir / "c1" / "train.jsonl").string() +
              " --space " + (dir / "c1" / "space.json").string() + " --langs toy_a,toy_b --out " +
              (dir / "c1" / "train_aug.jsonl").string()) == 0);
  CHECK(fs::exists(dir / "c1" / "train_aug.jsonl"));

  write_file(dir / "train.json", train_config(dir / "c1", dir / "run"));
  REQUIRE(run("train --config " + (dir / "train.json").string()) == 0);
  CHECK(fs::exists(dir / "run" / "best.ckpt"));
  CHECK(fs::exists(dir / "run" / "metrics.jsonl"));
  CHECK(fs::exists(dir / "run" / "train_config.json"));

  REQUIRE(run("evaluate --ckpt " + (dir / "run" / "best.ckpt").string() +
              " --split dev --langs toy_a,toy_b --mode greedy --dump-samples --plots --out " +
              (dir / "run" / "eval").string()) == 0);
  CHECK(fs::exists(dir / "run" / "eval" / "report.json"));
  CHECK(fs::exists(dir / "run" / "eval" / "report.txt"));
  CHECK(fs::exists(dir / "run" / "eval" / "samples.txt"));
  CHECK(fs::exists(dir / "run" / "eval" / "bleu.svg"));

  REQUIRE(run("translate --ckpt " + (dir / "run" / "best.ckpt").string() + " --features " +
              (dir / "c1" / "features" / "cli-dev-000000.feat").string() +
              " --langs toy_a,toy_b --out " + (dir / "run" / "translation.txt").string()) == 0);
  CHECK(fs::exists(dir / "run" / "translation.txt"));

  REQUIRE(run("inspect-augment --config " + (dir / "train.json").string() + " --samples 4") == 0);
}

TEST_CASE("beam decode mode works through the cli") {
  const fs::path dir = work_dir();
  REQUIRE(fs::exists(dir / "run" / "best.ckpt"));
  CHECK(run("evaluate --ckpt " + (dir / "run" / "best.ckpt").string() +
            " --split dev --langs toy_a --mode beam2 --out " +
            (dir / "run" / "eval_beam").string()) == 0);
}

TEST_CASE("error categories map to exit codes") {
  const fs::path dir = work_dir();
  // invalid json config -> config error (2)
  write_file(dir / "broken.json", "{ not json");
  CHECK(run("train --config " + (dir / "broken.json").string()) == 2);
  // config pointing at a missing manifest -> data error (3)
  write_file(dir / "missing.json",
             train_config(dir / "does_not_exist", dir / "run_missing"));
  CHECK(run("train --config " + (dir / "missing.json").string()) == 3);
  // unknown flag -> cli parse error (2)
  CHECK(run("train --nonsense") == 2);
  // missing subcommand -> 2
  CHECK(run("") == 2);
  // unreadable checkpoint -> data error (3)
  write_file(dir / "junk.ckpt", "junk");
  CHECK(run("evaluate --ckpt " + (dir / "junk.ckpt").string() + " --langs toy_a") == 3);
}

TEST_CASE("cleanup") {
  fs::remove_all(work_dir());
  CHECK(true);
}
