#include "slt/nn.hpp"

#include <cmath>

#include "slt/errors.hpp"

namespace slt::nn {

Matrix& ParameterStore::add(const std::string& name, int rows, int cols, bool trainable) {
  auto [it, inserted] = params_.emplace(name, Param{Matrix::Zero(rows, cols), trainable});
  if (!inserted) throw ComputeError("parameter '" + name + "' registered twice");
  return it->second.value;
}

Matrix& ParameterStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw UnknownTargetName(name);
  return it->second.value;
}

const Matrix& ParameterStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw UnknownTargetName(name);
  return it->second.value;
}

bool ParameterStore::trainable(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw UnknownTargetName(name);
  return it->second.trainable;
}

void ParameterStore::set_trainable(const std::string& name, bool value) {
  auto it = params_.find(name);
  if (it == params_.end()) throw UnknownTargetName(name);
  it->second.trainable = value;
}

void ParameterStore::attach_adapter(const std::string& target, int rank, double alpha,
                                    RngStream rng) {
  auto it = params_.find(target);
  if (it == params_.end()) throw UnknownTargetName(target);
  if (adapters_.count(target) > 0) throw ComputeError("adapter on '" + target + "' already attached");
  const int in = static_cast<int>(it->second.value.rows());
  const int out = static_cast<int>(it->second.value.cols());
  Matrix& a = add(target + ".lora_a", in, rank, true);
  add(target + ".lora_b", rank, out, true);
  RngStream s = rng.fork(target);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = s.next_normal(0.02);
  }
  it->second.trainable = false;
  adapters_[target] = Adapter{alpha / static_cast<double>(rank), rank};
}

void ParameterStore::restore_adapter(const std::string& target, int rank, double scale) {
  auto it = params_.find(target);
  if (it == params_.end()) throw UnknownTargetName(target);
  if (!has(target + ".lora_a") || !has(target + ".lora_b")) {
    throw UnknownTargetName(target + ".lora_a/.lora_b");
  }
  it->second.trainable = false;
  adapters_[target] = Adapter{scale, rank};
}

std::vector<std::string> ParameterStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [k, v] : params_) out.push_back(k);
  return out;
}

std::vector<std::string> ParameterStore::trainable_names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : params_) {
    if (v.trainable) out.push_back(k);
  }
  return out;
}

std::size_t ParameterStore::trainable_count() const {
  std::size_t n = 0;
  for (const auto& [k, v] : params_) {
    if (v.trainable) n += static_cast<std::size_t>(v.value.size());
  }
  return n;
}

void ParameterStore::init_normal(const std::string& name, double stddev, RngStream rng) {
  Matrix& m = at(name);
  RngStream s = rng.fork(name);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = s.next_normal(stddev);
  }
}

void ParameterStore::init_xavier(const std::string& name, RngStream rng) {
  Matrix& m = at(name);
  const double stddev = std::sqrt(2.0 / static_cast<double>(m.rows() + m.cols()));
  init_normal(name, stddev, rng);
}

Var ParamGraph::raw(const std::string& name) {
  auto it = leaves_.find(name);
  if (it != leaves_.end()) return it->second;
  Var v = ag::leaf(store_->at(name), store_->trainable(name));
  leaves_.emplace(name, v);
  return v;
}

Var ParamGraph::operator()(const std::string& name) {
  Var base = raw(name);
  auto ad = store_->adapters().find(name);
  if (ad == store_->adapters().end()) return base;
  Var a = raw(name + ".lora_a");
  Var b = raw(name + ".lora_b");
  return ag::add(base, ag::scale(ag::matmul(a, b), ad->second.scale));
}

// --- blocks ------------------------------------------------------------------

Var linear(ParamGraph& g, const std::string& prefix, const Var& x, bool bias) {
  Var y = ag::matmul(x, g(prefix + ".w"));
  if (bias) y = ag::add_rowvec(y, g(prefix + ".b"));
  return y;
}

Var layer_norm(ParamGraph& g, const std::string& prefix, const Var& x) {
  return ag::layer_norm_rows(x, g(prefix + ".gamma"), g(prefix + ".beta"));
}

Var multi_head_attention(ParamGraph& g, const std::string& prefix, const Var& queries,
                         const Var& keys_values, int heads,
                         const std::optional<Matrix>& mask_bias) {
  const int width = static_cast<int>(queries->value.cols());
  if (width % heads != 0) throw DimensionMismatch("attention width not divisible by heads");
  const int head_dim = width / heads;
  const double att_scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

  Var q = linear(g, prefix + ".q", queries);
  Var k = linear(g, prefix + ".k", keys_values);
  Var v = linear(g, prefix + ".v", keys_values);

  std::vector<Var> head_outs;
  head_outs.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    Var qh = ag::slice_cols(q, h * head_dim, head_dim);
    Var kh = ag::slice_cols(k, h * head_dim, head_dim);
    Var vh = ag::slice_cols(v, h * head_dim, head_dim);
    Var scores = ag::scale(ag::matmul(qh, ag::transpose(kh)), att_scale);
    if (mask_bias.has_value()) scores = ag::add(scores, ag::constant(*mask_bias));
    Var att = ag::softmax_rows(scores);
    head_outs.push_back(ag::matmul(att, vh));
  }
  Var merged = heads == 1 ? head_outs[0] : ag::concat_cols(head_outs);
  return linear(g, prefix + ".o", merged);
}

Var feed_forward(ParamGraph& g, const std::string& prefix, const Var& x) {
  return linear(g, prefix + ".out", ag::gelu(linear(g, prefix + ".in", x)));
}

Var encoder_layer(ParamGraph& g, const std::string& prefix, const Var& x, int heads,
                  const std::optional<Matrix>& self_mask) {
  Var normed = layer_norm(g, prefix + ".ln1", x);
  Var h = ag::add(x, multi_head_attention(g, prefix + ".attn", normed, normed, heads, self_mask));
  return ag::add(h, feed_forward(g, prefix + ".ffn", layer_norm(g, prefix + ".ln2", h)));
}

Var decoder_layer(ParamGraph& g, const std::string& prefix, const Var& x, const Var& memory,
                  int heads, const std::optional<Matrix>& self_mask,
                  const std::optional<Matrix>& cross_mask) {
  Var normed = layer_norm(g, prefix + ".ln1", x);
  Var h = ag::add(x, multi_head_attention(g, prefix + ".self", normed, normed, heads, self_mask));
  h = ag::add(h, multi_head_attention(g, prefix + ".cross", layer_norm(g, prefix + ".ln2", h),
                                      memory, heads, cross_mask));
  return ag::add(h, feed_forward(g, prefix + ".ffn", layer_norm(g, prefix + ".ln3", h)));
}

Matrix sinusoidal_positions(int length, int width) {
  Matrix pe = Matrix::Zero(length, width);
  for (int pos = 0; pos < length; ++pos) {
    for (int i = 0; i < width; i += 2) {
      const double angle = pos / std::pow(10000.0, static_cast<double>(i) / width);
      pe(pos, i) = std::sin(angle);
      if (i + 1 < width) pe(pos, i + 1) = std::cos(angle);
    }
  }
  return pe;
}

Matrix causal_mask_bias(int length) {
  Matrix m = Matrix::Zero(length, length);
  for (int i = 0; i < length; ++i) {
    for (int j = i + 1; j < length; ++j) m(i, j) = kMaskBias;
  }
  return m;
}

Matrix padding_mask_bias(int query_rows, const std::vector<bool>& key_padded) {
  Matrix m = Matrix::Zero(query_rows, static_cast<Eigen::Index>(key_padded.size()));
  for (std::size_t j = 0; j < key_padded.size(); ++j) {
    if (key_padded[j]) m.col(static_cast<Eigen::Index>(j)).setConstant(kMaskBias);
  }
  return m;
}

// --- registration -------------------------------------------------------------

void add_linear(ParameterStore& store, const std::string& prefix, int in, int out, RngStream rng,
                bool bias) {
  store.add(prefix + ".w", in, out);
  store.init_xavier(prefix + ".w", rng);
  if (bias) store.add(prefix + ".b", 1, out);
}

void add_layer_norm(ParameterStore& store, const std::string& prefix, int width) {
  store.add(prefix + ".gamma", 1, width).setOnes();
  store.add(prefix + ".beta", 1, width);
}

void add_attention(ParameterStore& store, const std::string& prefix, int width, RngStream rng) {
  add_linear(store, prefix + ".q", width, width, rng);
  add_linear(store, prefix + ".k", width, width, rng);
  add_linear(store, prefix + ".v", width, width, rng);
  add_linear(store, prefix + ".o", width, width, rng);
}

void add_feed_forward(ParameterStore& store, const std::string& prefix, int width, int hidden,
                      RngStream rng) {
  add_linear(store, prefix + ".in", width, hidden, rng);
  add_linear(store, prefix + ".out", hidden, width, rng);
}

void add_encoder_layer(ParameterStore& store, const std::string& prefix, int width, int hidden,
                       RngStream rng) {
  add_layer_norm(store, prefix + ".ln1", width);
  add_attention(store, prefix + ".attn", width, rng);
  add_layer_norm(store, prefix + ".ln2", width);
  add_feed_forward(store, prefix + ".ffn", width, hidden, rng);
}

void add_decoder_layer(ParameterStore& store, const std::string& prefix, int width, int hidden,
                       RngStream rng) {
  add_layer_norm(store, prefix + ".ln1", width);
  add_attention(store, prefix + ".self", width, rng);
  add_layer_norm(store, prefix + ".ln2", width);
  add_attention(store, prefix + ".cross", width, rng);
  add_layer_norm(store, prefix + ".ln3", width);
  add_feed_forward(store, prefix + ".ffn", width, hidden, rng);
}

}  // namespace slt::nn
