#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "slt/ag.hpp"
#include "slt/rng.hpp"

namespace slt::nn {

using ag::Matrix;
using ag::Var;

// Named dense parameters. Keys are dotted paths ("dec.layer0.self.wq").
// Low-rank adapters live in the same store under "<target>.lora_a/.lora_b";
// when a target is adapted its base tensor is frozen and the effective weight
// becomes base + scale * lora_a * lora_b.
class ParameterStore {
 public:
  struct Adapter {
    double scale = 0.0;
    int rank = 0;
  };

  Matrix& add(const std::string& name, int rows, int cols, bool trainable = true);
  bool has(const std::string& name) const { return params_.count(name) > 0; }
  Matrix& at(const std::string& name);
  const Matrix& at(const std::string& name) const;
  bool trainable(const std::string& name) const;
  void set_trainable(const std::string& name, bool value);

  // W + (alpha/r) * A * B with A ~ N(0, 0.02) sized in x r and B zero r x out.
  // Freezes the base tensor. Throws UnknownTargetName for absent targets.
  void attach_adapter(const std::string& target, int rank, double alpha, RngStream rng);
  // Re-registers an adapter whose lora_a/lora_b tensors are already present
  // (checkpoint reload path).
  void restore_adapter(const std::string& target, int rank, double scale);
  bool adapted(const std::string& name) const { return adapters_.count(name) > 0; }
  const std::map<std::string, Adapter>& adapters() const { return adapters_; }

  std::vector<std::string> names() const;            // sorted
  std::vector<std::string> trainable_names() const;  // sorted
  std::size_t trainable_count() const;               // total trainable scalars

  void init_normal(const std::string& name, double stddev, RngStream rng);
  void init_xavier(const std::string& name, RngStream rng);

 private:
  struct Param {
    Matrix value;
    bool trainable = true;
  };
  std::map<std::string, Param> params_;
  std::map<std::string, Adapter> adapters_;
};

// Per-forward bridge from a ParameterStore into an autodiff graph. Leaves are
// created once per name and cached so the optimizer can read their gradients
// after backward().
class ParamGraph {
 public:
  explicit ParamGraph(const ParameterStore& store) : store_(&store) {}

  // Effective weight: the raw leaf, or base + scale * lora_a * lora_b.
  Var operator()(const std::string& name);

  // Raw leaf without adapter composition (used for embeddings lookups etc.).
  Var raw(const std::string& name);

  const std::map<std::string, Var>& leaves() const { return leaves_; }

 private:
  const ParameterStore* store_;
  std::map<std::string, Var> leaves_;
};

// --- building blocks --------------------------------------------------------

// Row-vector convention: activations are T x width, y = x W + b.
Var linear(ParamGraph& g, const std::string& prefix, const Var& x, bool bias = true);
Var layer_norm(ParamGraph& g, const std::string& prefix, const Var& x);

// Multi-head attention. mask_bias, when present, is added to every head's
// pre-softmax scores (use large negatives to mask).
Var multi_head_attention(ParamGraph& g, const std::string& prefix, const Var& queries,
                         const Var& keys_values, int heads,
                         const std::optional<Matrix>& mask_bias);

Var feed_forward(ParamGraph& g, const std::string& prefix, const Var& x);

// Pre-LN residual blocks.
Var encoder_layer(ParamGraph& g, const std::string& prefix, const Var& x, int heads,
                  const std::optional<Matrix>& self_mask);
Var decoder_layer(ParamGraph& g, const std::string& prefix, const Var& x, const Var& memory,
                  int heads, const std::optional<Matrix>& self_mask,
                  const std::optional<Matrix>& cross_mask);

Matrix sinusoidal_positions(int length, int width);
Matrix causal_mask_bias(int length);
// column j gets -inf-ish bias where padded[j] is true
Matrix padding_mask_bias(int query_rows, const std::vector<bool>& key_padded);

// parameter registration (init is deterministic per-name via rng forks)
void add_linear(ParameterStore& store, const std::string& prefix, int in, int out, RngStream rng,
                bool bias = true);
void add_layer_norm(ParameterStore& store, const std::string& prefix, int width);
void add_attention(ParameterStore& store, const std::string& prefix, int width, RngStream rng);
void add_feed_forward(ParameterStore& store, const std::string& prefix, int width, int hidden,
                      RngStream rng);
void add_encoder_layer(ParameterStore& store, const std::string& prefix, int width, int hidden,
                       RngStream rng);
void add_decoder_layer(ParameterStore& store, const std::string& prefix, int width, int hidden,
                       RngStream rng);

constexpr double kMaskBias = -1e30;

}  // namespace slt::nn
