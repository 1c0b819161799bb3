#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "anssel/model.hpp"

namespace anssel {

struct TrainConfig;

// Binary checkpoint layout (all integers little-endian):
//   8 bytes   magic "ANSSELCK"
//   u32       format version (kCheckpointVersion)
//   u32       header length in bytes
//   header    UTF-8 JSON {"model": ModelConfig, "train": TrainConfig?}
//   u64       parameter count
//   f32 * n   flat parameters in ParamLayout order
inline constexpr char kCheckpointMagic[8] = {'A', 'N', 'S', 'S', 'E', 'L', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams<float> params;
  // Present when the checkpoint was written by the training harness.
  std::optional<nlohmann::ordered_json> train_config;
};

nlohmann::ordered_json to_json(const ModelConfig& config);
// Missing keys keep their defaults; non-object input throws ConfigError.
ModelConfig model_config_from_json(const nlohmann::json& j);

void write_checkpoint(const ModelParams<float>& params, std::ostream& out,
                      const nlohmann::ordered_json* train_config = nullptr);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const ModelParams<float>& params, const std::string& path,
                     const nlohmann::ordered_json* train_config = nullptr);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace anssel
