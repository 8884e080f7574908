#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "slt/decoder.hpp"
#include "slt/visual.hpp"

namespace slt {

// Full training state: visual and decoder parameters (bases plus any low-rank
// deltas), optimizer moments, bookkeeping and an embedded copy of the space
// so evaluation is self-contained. Save/load round-trips are bit-exact.
struct Checkpoint {
  VisualParams visual;
  DecoderParams decoder;
  std::map<std::string, Matrix> opt_m;  // keyed "visual/<name>" or "decoder/<name>"
  std::map<std::string, Matrix> opt_v;
  std::int64_t opt_step = 0;
  int epoch = 0;
  std::string pooling_mode = "shallow_decoder";
  std::string config_hash;
  std::string config_json;  // training config snapshot
  std::string space_json;
  std::vector<std::string> metrics_history;  // one serialized record per epoch

  SpaceConfig space() const { return SpaceConfig::from_json_string(space_json); }
};

// Named-tensor archive: magic, version, a JSON manifest of names -> shapes and
// offsets, then raw little-endian doubles.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace slt
