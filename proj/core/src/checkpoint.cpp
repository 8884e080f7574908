#include "slt/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "slt/errors.hpp"

namespace slt {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'S', 'L', 'T', 'C', 'K', 'P', 'T', '1'};

json hyper_to_json(const VisualHyper& h) {
  return json{{"d_s", h.d_s},       {"d_m", h.d_m},
              {"d_h", h.d_h},       {"enc_layers", h.enc_layers},
              {"heads", h.heads},   {"ffn_mult", h.ffn_mult},
              {"conv_kernel", h.conv_kernel}, {"pool_layers", h.pool_layers},
              {"d", h.d},           {"use_positional", h.use_positional}};
}

VisualHyper visual_hyper_from_json(const json& j) {
  VisualHyper h;
  h.d_s = j.at("d_s");
  h.d_m = j.at("d_m");
  h.d_h = j.at("d_h");
  h.enc_layers = j.at("enc_layers");
  h.heads = j.at("heads");
  h.ffn_mult = j.at("ffn_mult");
  h.conv_kernel = j.at("conv_kernel");
  h.pool_layers = j.at("pool_layers");
  h.d = j.at("d");
  h.use_positional = j.at("use_positional");
  return h;
}

json hyper_to_json(const DecoderHyper& h) {
  return json{{"d", h.d},           {"width", h.width},   {"layers", h.layers},
              {"heads", h.heads},   {"ffn_mult", h.ffn_mult}, {"vocab", h.vocab},
              {"use_positional", h.use_positional}};
}

DecoderHyper decoder_hyper_from_json(const json& j) {
  DecoderHyper h;
  h.d = j.at("d");
  h.width = j.at("width");
  h.layers = j.at("layers");
  h.heads = j.at("heads");
  h.ffn_mult = j.at("ffn_mult");
  h.vocab = j.at("vocab");
  h.use_positional = j.at("use_positional");
  return h;
}

struct TensorRef {
  std::string name;
  const Matrix* matrix;
};

json adapters_to_json(const nn::ParameterStore& store) {
  json out = json::object();
  for (const auto& [target, adapter] : store.adapters()) {
    out[target] = json{{"rank", adapter.rank}, {"scale", adapter.scale}};
  }
  return out;
}

void restore_adapters(nn::ParameterStore& store, const json& j) {
  for (const auto& [target, ad] : j.items()) {
    store.restore_adapter(target, ad.at("rank").get<int>(), ad.at("scale").get<double>());
  }
}

void write_doubles(std::ofstream& out, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
  }
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::vector<TensorRef> tensors;
  for (const auto& name : ckpt.visual.store.names()) {
    tensors.push_back({"visual/" + name, &ckpt.visual.store.at(name)});
  }
  for (const auto& name : ckpt.decoder.store.names()) {
    tensors.push_back({"decoder/" + name, &ckpt.decoder.store.at(name)});
  }
  for (const auto& [name, m] : ckpt.opt_m) tensors.push_back({"opt/m/" + name, &m});
  for (const auto& [name, m] : ckpt.opt_v) tensors.push_back({"opt/v/" + name, &m});

  json manifest = json::array();
  std::uint64_t offset = 0;
  for (const auto& t : tensors) {
    manifest.push_back({{"name", t.name},
                        {"rows", t.matrix->rows()},
                        {"cols", t.matrix->cols()},
                        {"offset", offset}});
    offset += static_cast<std::uint64_t>(t.matrix->size()) * sizeof(double);
  }
  json language_tokens = json::object();
  for (const auto& [tag, id] : ckpt.decoder.language_tokens) language_tokens[tag.id] = id;
  json header{{"tensors", manifest},
              {"visual_hyper", hyper_to_json(ckpt.visual.hyper)},
              {"decoder_hyper", hyper_to_json(ckpt.decoder.hyper)},
              {"visual_adapters", adapters_to_json(ckpt.visual.store)},
              {"decoder_adapters", adapters_to_json(ckpt.decoder.store)},
              {"language_tokens", language_tokens},
              {"opt_step", ckpt.opt_step},
              {"epoch", ckpt.epoch},
              {"pooling_mode", ckpt.pooling_mode},
              {"config_hash", ckpt.config_hash},
              {"config_json", ckpt.config_json},
              {"space", ckpt.space_json},
              {"metrics_history", ckpt.metrics_history}};
  const std::string header_text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open checkpoint for writing: " + path.string());
  out.write(kMagic, sizeof(kMagic));
  const std::uint32_t version = 1;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  const std::uint64_t header_len = header_text.size();
  out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  for (const auto& t : tensors) write_doubles(out, *t.matrix);
  if (!out) throw DataError("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    throw DataError("bad magic in checkpoint: " + path.string());
  }
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (!in || version != 1) throw DataError("unsupported checkpoint version");
  std::uint64_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  std::string header_text(header_len, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw DataError("truncated checkpoint header: " + path.string());

  json header;
  try {
    header = json::parse(header_text);
  } catch (const json::exception& e) {
    throw DataError(std::string("bad checkpoint header: ") + e.what());
  }

  Checkpoint ckpt;
  ckpt.visual.hyper = visual_hyper_from_json(header.at("visual_hyper"));
  ckpt.decoder.hyper = decoder_hyper_from_json(header.at("decoder_hyper"));
  for (const auto& [tag, id] : header.at("language_tokens").items()) {
    ckpt.decoder.language_tokens[LanguageTag{tag}] = id.get<int>();
  }
  ckpt.opt_step = header.at("opt_step").get<std::int64_t>();
  ckpt.epoch = header.at("epoch").get<int>();
  ckpt.pooling_mode = header.at("pooling_mode").get<std::string>();
  ckpt.config_hash = header.at("config_hash").get<std::string>();
  ckpt.config_json = header.at("config_json").get<std::string>();
  ckpt.space_json = header.at("space").get<std::string>();
  ckpt.metrics_history = header.at("metrics_history").get<std::vector<std::string>>();

  for (const auto& entry : header.at("tensors")) {
    const std::string name = entry.at("name").get<std::string>();
    const int rows = entry.at("rows").get<int>();
    const int cols = entry.at("cols").get<int>();
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) {
        double v = 0.0;
        in.read(reinterpret_cast<char*>(&v), sizeof(v));
        m(i, j) = v;
      }
    }
    if (!in) throw DataError("truncated checkpoint tensors: " + path.string());
    if (name.rfind("visual/", 0) == 0) {
      ckpt.visual.store.add(name.substr(7), rows, cols) = m;
    } else if (name.rfind("decoder/", 0) == 0) {
      ckpt.decoder.store.add(name.substr(8), rows, cols) = m;
    } else if (name.rfind("opt/m/", 0) == 0) {
      ckpt.opt_m.emplace(name.substr(6), std::move(m));
    } else if (name.rfind("opt/v/", 0) == 0) {
      ckpt.opt_v.emplace(name.substr(6), std::move(m));
    } else {
      throw DataError("unknown tensor group in checkpoint: " + name);
    }
  }
  restore_adapters(ckpt.visual.store, header.at("visual_adapters"));
  restore_adapters(ckpt.decoder.store, header.at("decoder_adapters"));
  return ckpt;
}

}  // namespace slt
