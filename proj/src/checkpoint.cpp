#include "anssel/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "anssel/error.hpp"

namespace anssel {

namespace {

template <typename U>
void put_le(std::ostream& out, U value) {
  std::array<char, sizeof(U)> bytes{};
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename U>
U get_le(std::istream& in, const char* what) {
  std::array<unsigned char, sizeof(U)> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw DataError(std::string("checkpoint truncated while reading ") + what);
  }
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
  return value;
}

template <typename U>
U get_or(const nlohmann::json& j, const char* key, U fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  try {
    return it->get<U>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("model config key '") + key + "' has the wrong type");
  }
}

}  // namespace

nlohmann::ordered_json to_json(const ModelConfig& c) {
  nlohmann::ordered_json j;
  j["vocab_size"] = c.vocab_size;
  j["hidden_size"] = c.hidden_size;
  j["num_layers"] = c.num_layers;
  j["num_heads"] = c.num_heads;
  j["ffn_size"] = c.ffn_size;
  j["max_len"] = c.max_len;
  j["dropout_rate"] = c.dropout_rate;
  j["seed"] = c.seed;
  return j;
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("model config must be a JSON object");
  ModelConfig c;
  c.vocab_size = get_or(j, "vocab_size", c.vocab_size);
  c.hidden_size = get_or(j, "hidden_size", c.hidden_size);
  c.num_layers = get_or(j, "num_layers", c.num_layers);
  c.num_heads = get_or(j, "num_heads", c.num_heads);
  c.ffn_size = get_or(j, "ffn_size", c.ffn_size);
  c.max_len = get_or(j, "max_len", c.max_len);
  c.dropout_rate = get_or(j, "dropout_rate", c.dropout_rate);
  c.seed = get_or(j, "seed", c.seed);
  return c;
}

void write_checkpoint(const ModelParams<float>& params, std::ostream& out,
                      const nlohmann::ordered_json* train_config) {
  nlohmann::ordered_json header;
  header["model"] = to_json(params.config());
  if (train_config != nullptr) header["train"] = *train_config;
  const std::string text = header.dump();
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  put_le<std::uint64_t>(out, params.size());
  for (float v : params.values()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  if (!out) throw DataError("checkpoint write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  char magic[sizeof(kCheckpointMagic)];
  if (!in.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw DataError("not an anssel checkpoint (bad magic)");
  }
  const auto version = get_le<std::uint32_t>(in, "version");
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint format version " + std::to_string(version) +
                    " (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  const auto header_len = get_le<std::uint32_t>(in, "header length");
  std::string text(header_len, '\0');
  if (!in.read(text.data(), header_len)) throw DataError("checkpoint truncated in header");
  nlohmann::ordered_json header;
  try {
    header = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }
  if (!header.contains("model")) throw DataError("checkpoint header lacks 'model'");
  ModelConfig config;
  try {
    config = model_config_from_json(header["model"]);
    config.validate();
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint model config invalid: ") + e.what());
  }
  Checkpoint ckpt{ModelParams<float>(config), std::nullopt};
  if (header.contains("train")) ckpt.train_config = header["train"];
  const auto count = get_le<std::uint64_t>(in, "parameter count");
  if (count != ckpt.params.size()) {
    throw DataError("checkpoint holds " + std::to_string(count) + " parameters, config implies " +
                    std::to_string(ckpt.params.size()));
  }
  for (float& v : ckpt.params.values()) {
    v = std::bit_cast<float>(get_le<std::uint32_t>(in, "parameters"));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw DataError("checkpoint has trailing bytes");
  }
  return ckpt;
}

void save_checkpoint(const ModelParams<float>& params, const std::string& path,
                     const nlohmann::ordered_json* train_config) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  write_checkpoint(params, out, train_config);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return read_checkpoint(in);
}

}  // namespace anssel
