#include "slt/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "slt/errors.hpp"
#include "slt/log.hpp"
#include "slt/translation.hpp"

namespace slt {

using nlohmann::json;

double LrSchedule::at(int step, int total_steps) const {
  if (kind == kConstant) return lr;
  if (total_steps <= 1) return lr;
  const double progress = static_cast<double>(step) / static_cast<double>(total_steps);
  return lr * 0.5 * (1.0 + std::cos(3.141592653589793 * std::min(1.0, progress)));
}

TrainScope::Mode parse_scope_mode(const std::string& text) {
  if (text == "full") return TrainScope::kFull;
  if (text == "lora") return TrainScope::kLora;
  if (text == "frozen") return TrainScope::kFrozen;
  throw ConfigError("unknown scope mode '" + text + "' (expected full|lora|frozen)");
}

std::string scope_mode_name(TrainScope::Mode mode) {
  switch (mode) {
    case TrainScope::kFull: return "full";
    case TrainScope::kLora: return "lora";
    case TrainScope::kFrozen: return "frozen";
  }
  return "?";
}

void TrainConfig::validate() const {
  loss_weights.validate();
  aug.validate();
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (grad_accum_steps < 1) throw ConfigError("grad_accum_steps must be >= 1");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (lr_schedule.lr <= 0) throw ConfigError("learning rate must be > 0");
  if (train_manifests.empty()) throw ConfigError("no training manifests configured");
  if (!finetune_from.has_value() && space_path.empty()) {
    throw ConfigError("either space_path or finetune_from must be set");
  }
}

// --- config (de)serialization ---------------------------------------------------

namespace {

json lr_to_json(const LrSchedule& s) {
  return json{{"type", s.kind == LrSchedule::kConstant ? "constant" : "cosine"}, {"lr", s.lr}};
}

LrSchedule lr_from_json(const json& j) {
  LrSchedule s;
  const std::string type = j.value("type", "constant");
  if (type == "constant") {
    s.kind = LrSchedule::kConstant;
  } else if (type == "cosine") {
    s.kind = LrSchedule::kCosine;
  } else {
    throw ConfigError("unknown lr schedule '" + type + "'");
  }
  if (j.contains("lr")) s.lr = j.at("lr").get<double>();
  if (j.contains("peak_lr")) s.lr = j.at("peak_lr").get<double>();
  return s;
}

std::filesystem::path resolved(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_absolute()) return path;
  return base / path;
}

}  // namespace

std::string TrainConfig::to_json_string() const {
  json weights{{"lambda_sem", loss_weights.lambda_sem}, {"lambda_ce", loss_weights.lambda_ce},
               {"lambda_ae", loss_weights.lambda_ae},   {"lambda_nce", loss_weights.lambda_nce},
               {"alpha_mse", loss_weights.alpha_mse},   {"beta_cos", loss_weights.beta_cos},
               {"tau", loss_weights.tau},               {"normalize_nce", loss_weights.normalize_nce}};
  json augj{{"frame_mask_ratio", aug.frame_mask_ratio},
            {"frame_dropout_prob", aug.frame_dropout_prob},
            {"add_noise_std", aug.add_noise_std},
            {"shuffle_window", aug.shuffle_window}};
  json loraj{{"r", lora.r}, {"alpha", lora.alpha}, {"targets", lora.targets}};
  json model{{"d", decoder_hyper.d},
             {"width", decoder_hyper.width},
             {"dec_layers", decoder_hyper.layers},
             {"heads", decoder_hyper.heads},
             {"ffn_mult", decoder_hyper.ffn_mult},
             {"d_s", visual_hyper.d_s},
             {"d_m", visual_hyper.d_m},
             {"d_h", visual_hyper.d_h},
             {"enc_layers", visual_hyper.enc_layers},
             {"conv_kernel", visual_hyper.conv_kernel},
             {"pool_layers", visual_hyper.pool_layers},
             {"use_positional", visual_hyper.use_positional}};
  json manifests = json::array();
  for (const auto& p : train_manifests) manifests.push_back(p.string());
  json langs = json::array();
  for (const auto& l : train_languages) langs.push_back(l.id);
  json j{{"loss_weights", weights},
         {"augmentation", augj},
         {"lora", loraj},
         {"model", model},
         {"scope", {{"visual", scope_mode_name(scope.visual)}, {"decoder", scope_mode_name(scope.decoder)}}},
         {"batch_size", batch_size},
         {"grad_accum_steps", grad_accum_steps},
         {"epochs", epochs},
         {"patience", patience},
         {"lr_schedule", lr_to_json(lr_schedule)},
         {"master_seed", master_seed},
         {"pooling_mode", pooling_mode_name(pooling_mode)},
         {"train_manifests", manifests},
         {"space", space_path.string()},
         {"train_languages", langs},
         {"eval_max_decode_len", eval_max_decode_len},
         {"out_dir", out_dir.string()}};
  if (dev_manifest.has_value()) j["dev_manifest"] = dev_manifest->string();
  if (test_manifest.has_value()) j["test_manifest"] = test_manifest->string();
  if (finetune_from.has_value()) j["finetune_from"] = finetune_from->string();
  return j.dump(2);
}

TrainConfig TrainConfig::from_json_string(const std::string& text,
                                          const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad training config json: ") + e.what());
  }
  TrainConfig cfg;
  try {
    if (j.contains("loss_weights")) {
      const json& w = j.at("loss_weights");
      cfg.loss_weights.lambda_sem = w.value("lambda_sem", cfg.loss_weights.lambda_sem);
      cfg.loss_weights.lambda_ce = w.value("lambda_ce", cfg.loss_weights.lambda_ce);
      cfg.loss_weights.lambda_ae = w.value("lambda_ae", cfg.loss_weights.lambda_ae);
      cfg.loss_weights.lambda_nce = w.value("lambda_nce", cfg.loss_weights.lambda_nce);
      cfg.loss_weights.alpha_mse = w.value("alpha_mse", cfg.loss_weights.alpha_mse);
      cfg.loss_weights.beta_cos = w.value("beta_cos", cfg.loss_weights.beta_cos);
      cfg.loss_weights.tau = w.value("tau", cfg.loss_weights.tau);
      cfg.loss_weights.normalize_nce = w.value("normalize_nce", cfg.loss_weights.normalize_nce);
    }
    if (j.contains("augmentation")) {
      const json& a = j.at("augmentation");
      cfg.aug.frame_mask_ratio = a.value("frame_mask_ratio", cfg.aug.frame_mask_ratio);
      cfg.aug.frame_dropout_prob = a.value("frame_dropout_prob", cfg.aug.frame_dropout_prob);
      cfg.aug.add_noise_std = a.value("add_noise_std", cfg.aug.add_noise_std);
      cfg.aug.shuffle_window = a.value("shuffle_window", cfg.aug.shuffle_window);
    }
    if (j.contains("lora")) {
      const json& l = j.at("lora");
      cfg.lora.r = l.value("r", cfg.lora.r);
      cfg.lora.alpha = l.value("alpha", cfg.lora.alpha);
      if (l.contains("targets")) cfg.lora.targets = l.at("targets").get<std::vector<std::string>>();
    }
    if (j.contains("model")) {
      const json& m = j.at("model");
      cfg.decoder_hyper.d = m.value("d", cfg.decoder_hyper.d);
      cfg.decoder_hyper.width = m.value("width", cfg.decoder_hyper.width);
      cfg.decoder_hyper.layers = m.value("dec_layers", cfg.decoder_hyper.layers);
      cfg.decoder_hyper.heads = m.value("heads", cfg.decoder_hyper.heads);
      cfg.decoder_hyper.ffn_mult = m.value("ffn_mult", cfg.decoder_hyper.ffn_mult);
      cfg.visual_hyper.d_s = m.value("d_s", cfg.visual_hyper.d_s);
      cfg.visual_hyper.d_m = m.value("d_m", cfg.visual_hyper.d_m);
      cfg.visual_hyper.d_h = m.value("d_h", cfg.visual_hyper.d_h);
      cfg.visual_hyper.enc_layers = m.value("enc_layers", cfg.visual_hyper.enc_layers);
      cfg.visual_hyper.conv_kernel = m.value("conv_kernel", cfg.visual_hyper.conv_kernel);
      cfg.visual_hyper.pool_layers = m.value("pool_layers", cfg.visual_hyper.pool_layers);
      cfg.visual_hyper.use_positional = m.value("use_positional", cfg.visual_hyper.use_positional);
      cfg.visual_hyper.heads = cfg.decoder_hyper.heads;
      cfg.visual_hyper.ffn_mult = cfg.decoder_hyper.ffn_mult;
      cfg.visual_hyper.d = cfg.decoder_hyper.d;
    }
    if (j.contains("scope")) {
      cfg.scope.visual = parse_scope_mode(j.at("scope").value("visual", "full"));
      cfg.scope.decoder = parse_scope_mode(j.at("scope").value("decoder", "lora"));
    }
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.grad_accum_steps = j.value("grad_accum_steps", cfg.grad_accum_steps);
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.patience = j.value("patience", cfg.patience);
    if (j.contains("lr_schedule")) cfg.lr_schedule = lr_from_json(j.at("lr_schedule"));
    cfg.master_seed = j.value("master_seed", cfg.master_seed);
    if (j.contains("pooling_mode")) {
      cfg.pooling_mode = parse_pooling_mode(j.at("pooling_mode").get<std::string>());
    }
    for (const auto& p : j.value("train_manifests", std::vector<std::string>{})) {
      cfg.train_manifests.push_back(resolved(base_dir, p));
    }
    if (j.contains("dev_manifest")) {
      cfg.dev_manifest = resolved(base_dir, j.at("dev_manifest").get<std::string>());
    }
    if (j.contains("test_manifest")) {
      cfg.test_manifest = resolved(base_dir, j.at("test_manifest").get<std::string>());
    }
    if (j.contains("space")) cfg.space_path = resolved(base_dir, j.at("space").get<std::string>());
    if (j.contains("finetune_from")) {
      cfg.finetune_from = resolved(base_dir, j.at("finetune_from").get<std::string>());
    }
    for (const auto& l : j.value("train_languages", std::vector<std::string>{})) {
      cfg.train_languages.push_back(LanguageTag{l});
    }
    cfg.eval_max_decode_len = j.value("eval_max_decode_len", cfg.eval_max_decode_len);
    if (j.contains("out_dir")) cfg.out_dir = resolved(base_dir, j.at("out_dir").get<std::string>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad training config: ") + e.what());
  }
  return cfg;
}

TrainConfig TrainConfig::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open training config: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  // relative manifest/space paths resolve against the working directory, so
  // one config works for any run location
  return from_json_string(ss.str(), ".");
}

std::string TrainConfig::config_hash() const {
  // FNV-1a over the canonical json
  const std::string text = to_json_string();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex << h;
  return out.str();
}

// --- optimizer -------------------------------------------------------------------

void AdamW::apply(const std::string& key, Matrix& param, const Matrix& grad, double lr) {
  auto [mit, m_new] = m_.try_emplace(key, Matrix::Zero(param.rows(), param.cols()));
  auto [vit, v_new] = v_.try_emplace(key, Matrix::Zero(param.rows(), param.cols()));
  Matrix& m = mit->second;
  Matrix& v = vit->second;
  m = beta1_ * m + (1.0 - beta1_) * grad;
  v = beta2_ * v + (1.0 - beta2_) * grad.cwiseProduct(grad);
  const double bias1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bias2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const Matrix mhat = m / bias1;
  Matrix denom = (v / bias2).cwiseSqrt();
  denom.array() += eps_;
  param -= lr * mhat.cwiseQuotient(denom);
  if (param.rows() > 1 && param.cols() > 1) param -= lr * weight_decay_ * param;
}

void AdamW::restore(std::map<std::string, Matrix> m, std::map<std::string, Matrix> v,
                    std::int64_t t) {
  m_ = std::move(m);
  v_ = std::move(v);
  t_ = t;
}

// --- state initialization ----------------------------------------------------------

namespace {

// default adapter targets: query and value projections of every attention
// block (the classic LoRA placement)
std::vector<std::string> default_lora_targets(const nn::ParameterStore& store) {
  std::vector<std::string> out;
  for (const auto& name : store.names()) {
    const bool attention = name.find(".self.") != std::string::npos ||
                           name.find(".cross.") != std::string::npos ||
                           name.find(".attn.") != std::string::npos;
    const bool qv = name.size() > 4 && (name.rfind(".q.w") == name.size() - 4 ||
                                        name.rfind(".v.w") == name.size() - 4);
    if (attention && qv) out.push_back(name);
  }
  return out;
}

LoRAConfig scoped_lora(const LoRAConfig& cfg, const nn::ParameterStore& store,
                       const std::string& prefix) {
  LoRAConfig out;
  out.r = cfg.r;
  out.alpha = cfg.alpha;
  for (const auto& t : cfg.targets) {
    if (t.rfind(prefix, 0) == 0) out.targets.push_back(t);
  }
  if (out.targets.empty()) out.targets = default_lora_targets(store);
  return out;
}

void freeze_all(nn::ParameterStore& store) {
  for (const auto& name : store.names()) store.set_trainable(name, false);
}

TranslationSet filtered_targets(const TranslationSet& targets,
                                const std::vector<LanguageTag>& languages) {
  if (languages.empty()) return targets;
  TranslationSet out;
  for (const auto& lang : languages) {
    auto it = targets.entries.find(lang);
    if (it != targets.entries.end()) out.entries.emplace(*it);
  }
  if (out.entries.empty()) {
    throw DataError("language filter removed every target of a sample");
  }
  out.origin_language = out.entries.count(targets.origin_language) > 0
                            ? targets.origin_language
                            : out.entries.begin()->first;
  return out;
}

std::vector<TrainingSample> load_all_samples(const std::vector<CorpusManifest>& manifests,
                                             const std::vector<LanguageTag>& languages) {
  std::vector<TrainingSample> samples;
  for (const auto& m : manifests) {
    for (std::size_t i = 0; i < m.size(); ++i) {
      TrainingSample s = load_training_sample(m, i);
      s.targets = filtered_targets(s.targets, languages);
      samples.push_back(std::move(s));
    }
  }
  if (samples.empty()) throw EmptyCorpus("no training samples");
  return samples;
}

}  // namespace

TrainState init_train_state(const TrainConfig& cfg) {
  cfg.validate();
  TrainState state;
  if (cfg.finetune_from.has_value()) {
    Checkpoint base = load_checkpoint(*cfg.finetune_from);
    state.space = base.space();
    if (base.decoder.hyper.d != cfg.decoder_hyper.d ||
        base.decoder.hyper.width != cfg.decoder_hyper.width ||
        base.decoder.hyper.layers != cfg.decoder_hyper.layers) {
      throw ConfigError("finetune checkpoint decoder dims disagree with the config");
    }
    if (base.decoder.hyper.vocab != state.space.registry.vocab_size()) {
      throw ConfigError("finetune checkpoint vocabulary disagrees with its space");
    }
    state.visual = std::move(base.visual);
    state.decoder = std::move(base.decoder);
    state.optimizer.restore({}, {}, 0);  // fresh optimizer for the new stage
  } else {
    state.space = load_space(cfg.space_path);
    DecoderHyper dh = cfg.decoder_hyper;
    state.decoder = init_decoder_params(dh, state.space.registry, cfg.master_seed);
    VisualHyper vh = cfg.visual_hyper;
    state.visual = init_visual_params(vh, cfg.master_seed, &state.decoder);
  }
  if (state.visual.hyper.d != state.space.d || state.decoder.hyper.d != state.space.d) {
    throw ConfigError("model semantic dimension disagrees with the space");
  }

  switch (cfg.scope.visual) {
    case TrainScope::kFull: break;
    case TrainScope::kFrozen: freeze_all(state.visual.store); break;
    case TrainScope::kLora:
      if (state.visual.store.adapters().empty()) {
        state.visual.store = apply_lora(state.visual.store,
                                        scoped_lora(cfg.lora, state.visual.store, "vis."),
                                        cfg.master_seed);
      }
      break;
  }
  switch (cfg.scope.decoder) {
    case TrainScope::kFull: break;
    case TrainScope::kFrozen: freeze_all(state.decoder.store); break;
    case TrainScope::kLora:
      if (state.decoder.store.adapters().empty()) {
        state.decoder.store = apply_lora(state.decoder.store,
                                         scoped_lora(cfg.lora, state.decoder.store, "dec."),
                                         cfg.master_seed);
      }
      break;
  }
  return state;
}

// --- the step ---------------------------------------------------------------------

std::string StepMetrics::to_json_line() const {
  return json{{"step", step}, {"lr", lr},   {"loss", loss}, {"sem", sem},          {"ce", ce},
              {"ae", ae},     {"nce", nce}, {"mse", mse_raw}, {"cos", cosine_raw}}
      .dump();
}

namespace {

struct GradAccumulator {
  std::map<std::string, Matrix> grads;

  void collect(const nn::ParamGraph& graph, const nn::ParameterStore& store,
               const std::string& prefix) {
    for (const auto& [name, leaf] : graph.leaves()) {
      if (!store.trainable(name) || !leaf->requires_grad) continue;
      if (leaf->grad.size() == 0) continue;
      auto [it, inserted] = grads.try_emplace(prefix + name, leaf->grad);
      if (!inserted) it->second += leaf->grad;
    }
  }
};

void check_finite(double v, const std::string& what, const std::string& sample_ids) {
  if (!std::isfinite(v)) {
    throw NonFiniteLoss(what + " is " + std::to_string(v) + " on samples [" + sample_ids + "]");
  }
}

}  // namespace

StepMetrics train_step(const std::vector<TrainingSample>& batch, TrainState& state,
                       const TrainConfig& cfg, int epoch, int total_steps) {
  if (batch.empty()) throw DataError("train_step: empty batch");
  const LossWeights& w = cfg.loss_weights;
  w.validate();
  const bool need_z = w.lambda_sem != 0.0 || w.lambda_ce != 0.0 || w.lambda_nce != 0.0;

  StepMetrics metrics;
  metrics.step = state.optimizer_steps;
  metrics.lr = cfg.lr_schedule.at(state.optimizer_steps, total_steps);

  GradAccumulator accum;
  const int micro_count =
      static_cast<int>((batch.size() + cfg.batch_size - 1) / static_cast<std::size_t>(cfg.batch_size));

  std::string sample_ids;
  for (const auto& s : batch) {
    if (!sample_ids.empty()) sample_ids += ",";
    sample_ids += s.features.sample_id;
  }

  double sum_loss = 0, sum_sem = 0, sum_ce = 0, sum_ae = 0, sum_nce = 0, sum_mse = 0, sum_cos = 0;

  for (int micro = 0; micro < micro_count; ++micro) {
    const std::size_t begin = static_cast<std::size_t>(micro) * cfg.batch_size;
    const std::size_t end = std::min(batch.size(), begin + cfg.batch_size);
    const int n = static_cast<int>(end - begin);

    nn::ParamGraph vis_graph(state.visual.store);
    nn::ParamGraph dec_graph(state.decoder.store);

    std::vector<ag::Var> micro_terms;
    std::vector<ag::Var> z_rows, s_rows;
    for (std::size_t i = begin; i < end; ++i) {
      const TrainingSample& sample = batch[i];
      RngStream rng =
          augmentation_stream(cfg.master_seed, sample.features.sample_id, epoch);
      auto [features, target] = coupled_augment(sample, cfg.aug, rng);

      ag::Var s_const = ag::constant(embed_text(target, state.space).values.transpose());
      ag::Var z;
      if (need_z) {
        z = video_embedding_graph(vis_graph, features, cfg.pooling_mode, state.visual);
        z_rows.push_back(z);
        s_rows.push_back(s_const);
        // regime diagnostics, logged but never asserted
        SemanticVector zv{z->value.row(0).transpose()};
        SemanticVector sv{s_const->value.row(0).transpose()};
        sum_mse += semantic_mse(zv, sv);
        sum_cos += cosine_loss(zv, sv);
      }
      if (w.lambda_sem != 0.0) {
        ag::Var sem = combined_sem_graph(z, s_const, w.alpha_mse, w.beta_cos);
        sum_sem += ag::scalar(sem);
        micro_terms.push_back(ag::scale(sem, w.lambda_sem));
      }
      if (w.lambda_ce != 0.0) {
        ag::Var ce = teacher_forced_nll_graph(dec_graph, z, target, target.language,
                                              state.decoder, /*append_eos=*/true);
        sum_ce += ag::scalar(ce);
        micro_terms.push_back(ag::scale(ce, w.lambda_ce));
      }
      if (w.lambda_ae != 0.0) {
        ag::Var ae = teacher_forced_nll_graph(dec_graph, s_const, target, target.language,
                                              state.decoder, /*append_eos=*/true);
        sum_ae += ag::scalar(ae);
        micro_terms.push_back(ag::scale(ae, w.lambda_ae));
      }
    }
    if (w.lambda_nce != 0.0) {
      ag::Var nce = info_nce_graph(z_rows, s_rows, w.tau, w.normalize_nce);
      sum_nce += ag::scalar(nce) * n;  // logged per-sample like the others
      micro_terms.push_back(ag::scale(nce, w.lambda_nce * n));
    }
    if (!micro_terms.empty()) {
      ag::Var micro_loss = micro_terms[0];
      for (std::size_t k = 1; k < micro_terms.size(); ++k) {
        micro_loss = ag::add(micro_loss, micro_terms[k]);
      }
      micro_loss = ag::scale(micro_loss, 1.0 / n);
      const double value = ag::scalar(micro_loss);
      check_finite(value, "loss", sample_ids);
      sum_loss += value * n;
      ag::backward(micro_loss);
      accum.collect(vis_graph, state.visual.store, "visual/");
      accum.collect(dec_graph, state.decoder.store, "decoder/");
    }
  }

  const double inv_n = 1.0 / static_cast<double>(batch.size());
  metrics.loss = sum_loss * inv_n;
  metrics.sem = sum_sem * inv_n;
  metrics.ce = sum_ce * inv_n;
  metrics.ae = sum_ae * inv_n;
  metrics.nce = sum_nce * inv_n;
  metrics.mse_raw = need_z ? sum_mse * inv_n : 0.0;
  metrics.cosine_raw = need_z ? sum_cos * inv_n : 0.0;
  check_finite(metrics.loss, "batch loss", sample_ids);

  if (!accum.grads.empty()) {
    state.optimizer.begin_step();
    for (auto& [key, grad] : accum.grads) {
      grad /= static_cast<double>(micro_count);
      Matrix& param = key.rfind("visual/", 0) == 0 ? state.visual.store.at(key.substr(7))
                                                   : state.decoder.store.at(key.substr(8));
      state.optimizer.apply(key, param, grad, metrics.lr);
    }
  }
  ++state.optimizer_steps;
  return metrics;
}

// --- full loop -----------------------------------------------------------------------

double dev_semantic_score(const CorpusManifest& manifest, const VisualParams& visual,
                          const SpaceConfig& space, PoolingMode mode) {
  if (manifest.size() == 0) throw EmptyCorpus("dev manifest");
  double total = 0.0;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    TrainingSample sample = load_training_sample(manifest, i);
    const SemanticVector z = video_to_embedding(sample.features, visual, mode);
    const SemanticVector s = embed_text(sample.targets.origin(), space);
    total += 1.0 - cosine_loss(z, s);
  }
  return total / static_cast<double>(manifest.size());
}

namespace {

Checkpoint snapshot(const TrainState& state, const TrainConfig& cfg, int epoch,
                    const std::vector<std::string>& history) {
  Checkpoint ckpt;
  ckpt.visual = state.visual;
  ckpt.decoder = state.decoder;
  ckpt.opt_step = state.optimizer.step_count();
  ckpt.epoch = epoch;
  ckpt.pooling_mode = pooling_mode_name(cfg.pooling_mode);
  ckpt.config_hash = cfg.config_hash();
  ckpt.config_json = cfg.to_json_string();
  ckpt.space_json = state.space.to_json_string();
  ckpt.metrics_history = history;
  return ckpt;
}

}  // namespace

Checkpoint train(const TrainConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);
  {
    std::ofstream snapshot_out(cfg.out_dir / "train_config.json");
    snapshot_out << cfg.to_json_string() << "\n";
  }

  std::vector<CorpusManifest> manifests;
  for (const auto& p : cfg.train_manifests) manifests.push_back(load_manifest(p));
  std::vector<TrainingSample> samples = load_all_samples(manifests, cfg.train_languages);
  std::optional<CorpusManifest> dev;
  if (cfg.dev_manifest.has_value()) dev = load_manifest(*cfg.dev_manifest);

  TrainState state = init_train_state(cfg);

  const int effective_batch = cfg.batch_size * cfg.grad_accum_steps;
  const int steps_per_epoch =
      static_cast<int>((samples.size() + effective_batch - 1) / static_cast<std::size_t>(effective_batch));
  const int total_steps = std::max(1, steps_per_epoch * cfg.epochs);

  std::ofstream metrics_out(cfg.out_dir / "metrics.jsonl");
  if (!metrics_out) throw DataError("cannot open metrics log in " + cfg.out_dir.string());

  std::vector<std::string> history;
  double best_score = -2.0;
  int best_epoch = -1;
  int since_best = 0;
  Checkpoint best = snapshot(state, cfg, 0, history);

  RngStream order_rng = RngStream(cfg.master_seed).fork("batch_order");
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    RngStream epoch_rng = order_rng.fork(static_cast<std::uint64_t>(epoch));
    epoch_rng.shuffle(order);

    double epoch_loss = 0.0;
    int epoch_steps = 0;
    for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(effective_batch)) {
      std::vector<TrainingSample> batch;
      const std::size_t stop = std::min(order.size(), at + static_cast<std::size_t>(effective_batch));
      for (std::size_t k = at; k < stop; ++k) batch.push_back(samples[order[k]]);
      StepMetrics m = train_step(batch, state, cfg, epoch, total_steps);
      metrics_out << m.to_json_line() << "\n";
      epoch_loss += m.loss;
      ++epoch_steps;
    }
    epoch_loss /= std::max(1, epoch_steps);

    double score = 0.0;
    if (dev.has_value()) {
      score = dev_semantic_score(*dev, state.visual, state.space, cfg.pooling_mode);
    } else {
      score = -epoch_loss;  // fall back to training loss when no dev split exists
    }
    history.push_back(json{{"epoch", epoch}, {"train_loss", epoch_loss}, {"dev_semantic", score}}
                          .dump());
    log::info("epoch " + std::to_string(epoch) + " loss " + std::to_string(epoch_loss) +
              " dev_semantic " + std::to_string(score));

    // ties go to the later epoch: a stage that only trains the decoder (dev
    // semantic score flat) must still surface its final state as "best"
    if (score >= best_score) {
      best_score = score;
      best_epoch = epoch;
      since_best = 0;
      best = snapshot(state, cfg, epoch, history);
      save_checkpoint(best, cfg.out_dir / "best.ckpt");
    } else {
      ++since_best;
      if (cfg.patience > 0 && since_best >= cfg.patience) {
        log::info("early stop after epoch " + std::to_string(epoch) + " (best " +
                  std::to_string(best_epoch) + ")");
        break;
      }
    }
  }

  best.metrics_history = history;
  Checkpoint last = snapshot(state, cfg, cfg.epochs - 1, history);
  last.opt_m = state.optimizer.moments_m();
  last.opt_v = state.optimizer.moments_v();
  save_checkpoint(last, cfg.out_dir / "last.ckpt");
  save_checkpoint(best, cfg.out_dir / "best.ckpt");
  return best;
}

Checkpoint pretrain_then_finetune(const TrainConfig& pretrain_cfg,
                                  const TrainConfig& finetune_cfg) {
  if (pretrain_cfg.train_manifests.size() < 2) {
    throw ConfigError("pretraining expects at least 2 corpora to fuse");
  }
  if (pretrain_cfg.decoder_hyper.d != finetune_cfg.decoder_hyper.d ||
      pretrain_cfg.decoder_hyper.width != finetune_cfg.decoder_hyper.width ||
      pretrain_cfg.decoder_hyper.layers != finetune_cfg.decoder_hyper.layers) {
    throw ConfigError("pretrain and finetune model dims disagree");
  }

  // Stage 1: fuse the corpora, re-aligning every sample with the requested
  // target languages through the lexicon provider.
  TrainConfig stage1 = pretrain_cfg;
  std::filesystem::create_directories(stage1.out_dir);
  {
    SpaceConfig space = load_space(pretrain_cfg.space_path);
    LexiconTranslationProvider provider(space);
    std::vector<CorpusManifest> manifests;
    for (const auto& p : pretrain_cfg.train_manifests) manifests.push_back(load_manifest(p));
    std::vector<LanguageTag> targets = pretrain_cfg.train_languages;
    CorpusManifest fused = fuse_corpora(manifests, targets, provider);
    fused.dir = stage1.out_dir;
    write_manifest(fused, stage1.out_dir / "fused.jsonl");
    stage1.train_manifests = {stage1.out_dir / "fused.jsonl"};
  }
  Checkpoint stage1_best = train(stage1);

  if (finetune_cfg.epochs == 0) return stage1_best;

  TrainConfig stage2 = finetune_cfg;
  stage2.finetune_from = stage1.out_dir / "best.ckpt";
  // vocabulary compatibility is checked inside init_train_state via the space
  return train(stage2);
}

}  // namespace slt
