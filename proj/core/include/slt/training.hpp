#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "slt/augmentation.hpp"
#include "slt/checkpoint.hpp"
#include "slt/datamodel.hpp"
#include "slt/decoder.hpp"
#include "slt/lora.hpp"
#include "slt/losses.hpp"
#include "slt/visual.hpp"

namespace slt {

struct LrSchedule {
  enum Kind { kConstant, kCosine } kind = kConstant;
  double lr = 3e-4;  // constant value, or the cosine peak

  // Cosine decays from the peak at step 0 to ~0 at the final step.
  double at(int step, int total_steps) const;
};

// Which parameter groups move during training.
struct TrainScope {
  enum Mode { kFull, kLora, kFrozen };
  Mode visual = kFull;
  Mode decoder = kLora;
};

TrainScope::Mode parse_scope_mode(const std::string& text);
std::string scope_mode_name(TrainScope::Mode mode);

struct TrainConfig {
  LossWeights loss_weights;
  AugmentationConfig aug;
  LoRAConfig lora;  // targets; empty targets = attention projections of LoRA-scoped stores
  TrainScope scope;
  int batch_size = 4;
  int grad_accum_steps = 2;
  int epochs = 30;
  int patience = 5;
  LrSchedule lr_schedule;
  std::uint64_t master_seed = 0;
  PoolingMode pooling_mode = PoolingMode::kShallowDecoder;
  VisualHyper visual_hyper;
  DecoderHyper decoder_hyper;
  std::vector<std::filesystem::path> train_manifests;
  std::optional<std::filesystem::path> dev_manifest;
  std::optional<std::filesystem::path> test_manifest;
  std::filesystem::path space_path;
  std::optional<std::filesystem::path> finetune_from;
  // When non-empty, restrict each sample's targets to these languages (the
  // K=1 single-target ablation uses a one-element list).
  std::vector<LanguageTag> train_languages;
  std::filesystem::path out_dir;
  int eval_max_decode_len = 24;

  void validate() const;
  std::string to_json_string() const;
  static TrainConfig from_json_string(const std::string& text,
                                      const std::filesystem::path& base_dir = ".");
  static TrainConfig from_json_file(const std::filesystem::path& path);
  std::string config_hash() const;
};

// AdamW with decoupled weight decay; decay applies to matrices only (vectors
// such as biases, norms and queries are exempt).
class AdamW {
 public:
  AdamW(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8, double weight_decay = 0.01)
      : beta1_(beta1), beta2_(beta2), eps_(eps), weight_decay_(weight_decay) {}

  void apply(const std::string& key, Matrix& param, const Matrix& grad, double lr);
  void begin_step() { ++t_; }

  std::int64_t step_count() const { return t_; }
  std::map<std::string, Matrix>& moments_m() { return m_; }
  std::map<std::string, Matrix>& moments_v() { return v_; }
  void restore(std::map<std::string, Matrix> m, std::map<std::string, Matrix> v, std::int64_t t);

 private:
  double beta1_, beta2_, eps_, weight_decay_;
  std::int64_t t_ = 0;
  std::map<std::string, Matrix> m_;
  std::map<std::string, Matrix> v_;
};

struct TrainState {
  VisualParams visual;
  DecoderParams decoder;
  SpaceConfig space;
  AdamW optimizer;
  int optimizer_steps = 0;
};

struct StepMetrics {
  int step = 0;
  double lr = 0.0;
  double loss = 0.0;
  double sem = 0.0;
  double ce = 0.0;
  double ae = 0.0;
  double nce = 0.0;
  double mse_raw = 0.0;     // unweighted ||z-s||^2, logged for regime tracking
  double cosine_raw = 0.0;  // unweighted cosine loss

  std::string to_json_line() const;
};

TrainState init_train_state(const TrainConfig& cfg);

// One optimizer update over a batch: per sample coupled augmentation, video
// embedding, sampled-target text embedding, the loss components and their
// combination; honors gradient accumulation (the batch is cut into
// grad_accum_steps micro-batches).
StepMetrics train_step(const std::vector<TrainingSample>& batch, TrainState& state,
                       const TrainConfig& cfg, int epoch, int total_steps);

// Full loop: epochs, per-epoch dev semantic score, best-checkpoint selection,
// early stopping, metric logs under cfg.out_dir. Reproducible from
// master_seed.
Checkpoint train(const TrainConfig& cfg);

// Stage 1 on the fusion of >= 2 corpora, stage 2 from the stage-1 checkpoint.
// Rejects stage configs whose dims or vocab disagree.
Checkpoint pretrain_then_finetune(const TrainConfig& pretrain_cfg, const TrainConfig& finetune_cfg);

// Mean cosine similarity between video embeddings and origin-text embeddings
// over a manifest (the checkpoint-selection score).
double dev_semantic_score(const CorpusManifest& manifest, const VisualParams& visual,
                          const SpaceConfig& space, PoolingMode mode);

}  // namespace slt
