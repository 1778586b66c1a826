#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "polar/config.hpp"
#include "polar/model.hpp"
#include "polar/vocab.hpp"

namespace polar {

// Single-file container: a magic line, a JSON metadata line (config, role
// inventory, vocabulary, parameter manifest), then raw host-endian doubles
// in manifest order. Roundtrips bit-exactly.
inline constexpr const char* kCheckpointMagic = "POLARCK1";

struct LoadedCheckpoint {
  ModelConfig config;
  std::vector<std::string> roles;
  std::vector<std::string> vocab_tokens;
  std::vector<std::pair<std::string, Tensor>> params;
};

inline void save_checkpoint(const std::string& path, const PolarModel& model, const Vocab& vocab) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  auto params = model.collect_all_params();
  nlohmann::json manifest = nlohmann::json::array();
  for (const auto& [name, val] : params)
    manifest.push_back({{"name", name}, {"shape", val.shape()}});
  nlohmann::json meta = {{"version", 1},
                         {"config", model_config_json(model.config())},
                         {"config_hash", config_hash(model.config())},
                         {"roles", model.tagset().roles},
                         {"vocab", vocab.tokens()},
                         {"params", manifest}};
  out << kCheckpointMagic << "\n" << meta.dump() << "\n";
  for (const auto& [name, val] : params) {
    const Tensor& t = val.tensor();
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("write failed for checkpoint " + path);
}

inline LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path);
  std::string magic, meta_line;
  if (!std::getline(in, magic) || magic != kCheckpointMagic)
    throw std::runtime_error(path + ": not a checkpoint file (bad magic)");
  if (!std::getline(in, meta_line)) throw std::runtime_error(path + ": truncated checkpoint metadata");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(meta_line);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": corrupt checkpoint metadata: " + e.what());
  }
  if (meta.at("version").get<int>() != 1)
    throw std::runtime_error(path + ": unsupported checkpoint version " +
                             std::to_string(meta.at("version").get<int>()));
  LoadedCheckpoint ck;
  ck.config = model_config_from_json(meta.at("config"));
  if (meta.at("config_hash").get<std::string>() != config_hash(ck.config))
    throw std::runtime_error(path + ": config hash mismatch, checkpoint corrupt");
  ck.roles = meta.at("roles").get<std::vector<std::string>>();
  ck.vocab_tokens = meta.at("vocab").get<std::vector<std::string>>();
  for (const auto& entry : meta.at("params")) {
    std::string name = entry.at("name").get<std::string>();
    Tensor t = Tensor::zeros(entry.at("shape").get<std::vector<int>>());
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    if (!in) throw std::runtime_error(path + ": truncated parameter array '" + name + "'");
    ck.params.emplace_back(std::move(name), std::move(t));
  }
  return ck;
}

// Overwrites the freshly initialized parameters with the stored arrays.
inline void restore_params(PolarModel& model, const LoadedCheckpoint& ck) {
  auto params = model.collect_all_params();
  if (params.size() != ck.params.size())
    throw std::runtime_error("checkpoint holds " + std::to_string(ck.params.size()) +
                             " parameter arrays, model expects " + std::to_string(params.size()));
  for (size_t i = 0; i < params.size(); ++i) {
    if (params[i].first != ck.params[i].first)
      throw std::runtime_error("checkpoint parameter '" + ck.params[i].first +
                               "' does not match model parameter '" + params[i].first + "'");
    if (params[i].second.shape() != ck.params[i].second.shape)
      throw std::runtime_error("checkpoint parameter '" + ck.params[i].first + "' has shape " +
                               ck.params[i].second.shape_str() + ", model expects " +
                               params[i].second.tensor().shape_str());
    params[i].second.tensor() = ck.params[i].second;
  }
}

// Rebuild the model a checkpoint was saved from.
inline PolarModel model_from_checkpoint(const LoadedCheckpoint& ck) {
  Rng rng(0);  // initialization is immediately overwritten
  PolarModel model(ck.config, Tagset(ck.roles), rng);
  restore_params(model, ck);
  return model;
}

}  // namespace polar
