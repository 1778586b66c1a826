#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "polar/model.hpp"
#include "polar/synthetic.hpp"

namespace polar {

// Everything a run needs: corpora, model dimensions, optimizer settings,
// ablation and mode flags, and the synthetic-data recipe (gen.* keys).
struct RunConfig {
  std::string train_path;
  std::string dev_path;
  std::string test_path;
  std::string checkpoint_dir = "checkpoints";
  std::string init_checkpoint;  // warm-start weights; architecture comes from the checkpoint

  ModelConfig model;
  GeneratorConfig gen;

  double lr = 5e-4;
  double lr_decay = 1.0;  // per-epoch multiplier on the task-phase learning rate
  double weight_decay = 1e-5;
  int epochs = 10;
  int psp_epochs = 2;
  int batch_size = 8;
  uint64_t seed = 7;
  double early_stop_f1 = 0.995;  // stop once dev F1_all reaches this; > 1 disables

  bool no_psp = false;
  bool bert_style_pairing = false;
  bool stochastic_edges = true;    // sample edge noise during training
  bool deterministic_eval = true;  // median noise at inference

  // Model dimensions are validated when the model is built, after data-derived
  // fields (vocab size, speaker count, sequence length) are filled in.
  void validate() const {
    if (lr <= 0.0 || weight_decay < 0.0 || lr_decay <= 0.0 || lr_decay > 1.0)
      throw std::invalid_argument("config: invalid optimizer settings");
    if (epochs < 1 || psp_epochs < 0 || batch_size < 1)
      throw std::invalid_argument("config: epochs and batch size must be positive");
  }
};

namespace detail {

inline int parse_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' needs an integer, got '" + v + "'");
  }
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' needs a number, got '" + v + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config: key '" + key + "' needs true/false, got '" + v + "'");
}

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

}  // namespace detail

inline void apply_config_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  using detail::parse_bool;
  using detail::parse_double;
  using detail::parse_int;
  if (key == "train") cfg.train_path = value;
  else if (key == "dev") cfg.dev_path = value;
  else if (key == "test") cfg.test_path = value;
  else if (key == "checkpoint_dir") cfg.checkpoint_dir = value;
  else if (key == "init_checkpoint") cfg.init_checkpoint = value;
  else if (key == "lr") cfg.lr = parse_double(key, value);
  else if (key == "lr_decay") cfg.lr_decay = parse_double(key, value);
  else if (key == "weight_decay") cfg.weight_decay = parse_double(key, value);
  else if (key == "epochs") cfg.epochs = parse_int(key, value);
  else if (key == "psp_epochs") cfg.psp_epochs = parse_int(key, value);
  else if (key == "batch_size") cfg.batch_size = parse_int(key, value);
  else if (key == "seed") cfg.seed = static_cast<uint64_t>(parse_int(key, value));
  else if (key == "early_stop_f1") cfg.early_stop_f1 = parse_double(key, value);
  else if (key == "dropout") cfg.model.dropout = parse_double(key, value);
  else if (key == "alpha_init_raw") cfg.model.alpha_init_raw = parse_double(key, value);
  else if (key == "no_pgi") cfg.model.no_pgi = parse_bool(key, value);
  else if (key == "no_prune") cfg.model.no_prune = parse_bool(key, value);
  else if (key == "no_gate") cfg.model.no_gate = parse_bool(key, value);
  else if (key == "no_psp") cfg.no_psp = parse_bool(key, value);
  else if (key == "bert_style_pairing") cfg.bert_style_pairing = parse_bool(key, value);
  else if (key == "stochastic_edges") cfg.stochastic_edges = parse_bool(key, value);
  else if (key == "deterministic_eval") cfg.deterministic_eval = parse_bool(key, value);
  else if (key == "encoder.layers") cfg.model.encoder.layers = parse_int(key, value);
  else if (key == "encoder.heads") cfg.model.encoder.heads = parse_int(key, value);
  else if (key == "encoder.d_h") cfg.model.encoder.d_h = parse_int(key, value);
  else if (key == "encoder.d_word") cfg.model.encoder.d_word = parse_int(key, value);
  else if (key == "encoder.d_pos") cfg.model.encoder.d_pos = parse_int(key, value);
  else if (key == "encoder.d_speaker") cfg.model.encoder.d_speaker = parse_int(key, value);
  else if (key == "encoder.d_prd") cfg.model.encoder.d_prd = parse_int(key, value);
  else if (key == "encoder.max_len") cfg.model.encoder.max_len = parse_int(key, value);
  else if (key == "inducer.d_score") cfg.model.inducer.d_score = parse_int(key, value);
  else if (key == "inducer.d_hidden") cfg.model.inducer.d_hidden = parse_int(key, value);
  else if (key == "inducer.shared_row_noise") cfg.model.inducer.shared_row_noise = parse_bool(key, value);
  else if (key == "inducer.row_normalize_scores")
    cfg.model.inducer.row_normalize_scores = parse_bool(key, value);
  else if (key == "inducer.columnwise_prune") cfg.model.inducer.columnwise_prune = parse_bool(key, value);
  else if (key == "gcn.layers") cfg.model.gcn.layers = parse_int(key, value);
  else if (key == "gcn.hidden") cfg.model.gcn.hidden = parse_int(key, value);
  else if (key == "gen.dialogues") cfg.gen.dialogues = parse_int(key, value);
  else if (key == "gen.min_utterances") cfg.gen.min_utterances = parse_int(key, value);
  else if (key == "gen.max_utterances") cfg.gen.max_utterances = parse_int(key, value);
  else if (key == "gen.vocab_size") cfg.gen.vocab_size = parse_int(key, value);
  else if (key == "gen.role_count") cfg.gen.role_count = parse_int(key, value);
  else if (key == "gen.predicate_classes") cfg.gen.predicate_classes = parse_int(key, value);
  else if (key == "gen.cross_fraction") cfg.gen.cross_fraction = parse_double(key, value);
  else if (key == "gen.pronoun_rate") cfg.gen.pronoun_rate = parse_double(key, value);
  else if (key == "gen.decoy_rate") cfg.gen.decoy_rate = parse_double(key, value);
  else if (key == "gen.duplicate_rate") cfg.gen.duplicate_rate = parse_double(key, value);
  else if (key == "gen.background_types") cfg.gen.background_types = parse_int(key, value);
  else throw std::invalid_argument("config: unknown key '" + key + "'");
}

// Plain-text config: one `key = value` per line, # starts a comment.
inline std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file " + path);
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
    std::string key = detail::trim(line.substr(0, eq));
    std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
    entries.emplace_back(std::move(key), std::move(value));
  }
  return entries;
}

inline void apply_config_file(RunConfig& cfg, const std::string& path) {
  for (const auto& [key, value] : read_config_file(path)) apply_config_key(cfg, key, value);
}

inline nlohmann::json model_config_json(const ModelConfig& m) {
  return {{"encoder",
           {{"vocab_size", m.encoder.vocab_size}, {"d_pos", m.encoder.d_pos},
            {"d_speaker", m.encoder.d_speaker}, {"d_word", m.encoder.d_word},
            {"d_prd", m.encoder.d_prd}, {"layers", m.encoder.layers}, {"heads", m.encoder.heads},
            {"d_h", m.encoder.d_h}, {"ffn_mult", m.encoder.ffn_mult}, {"max_len", m.encoder.max_len},
            {"max_speakers", m.encoder.max_speakers}, {"speaker_blind", m.encoder.speaker_blind}}},
          {"inducer",
           {{"d_score", m.inducer.d_score}, {"d_hidden", m.inducer.d_hidden}, {"eps", m.inducer.eps},
            {"l", m.inducer.l}, {"r", m.inducer.r}, {"shared_row_noise", m.inducer.shared_row_noise},
            {"row_normalize_scores", m.inducer.row_normalize_scores},
            {"columnwise_prune", m.inducer.columnwise_prune}}},
          {"gcn", {{"layers", m.gcn.layers}, {"hidden", m.gcn.hidden}, {"degree_eps", m.gcn.degree_eps}}},
          {"dropout", m.dropout},
          {"alpha_init_raw", m.alpha_init_raw},
          {"no_pgi", m.no_pgi},
          {"no_prune", m.no_prune},
          {"no_gate", m.no_gate}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig m;
  const auto& e = j.at("encoder");
  m.encoder.vocab_size = e.at("vocab_size").get<int>();
  m.encoder.d_pos = e.at("d_pos").get<int>();
  m.encoder.d_speaker = e.at("d_speaker").get<int>();
  m.encoder.d_word = e.at("d_word").get<int>();
  m.encoder.d_prd = e.at("d_prd").get<int>();
  m.encoder.layers = e.at("layers").get<int>();
  m.encoder.heads = e.at("heads").get<int>();
  m.encoder.d_h = e.at("d_h").get<int>();
  m.encoder.ffn_mult = e.at("ffn_mult").get<int>();
  m.encoder.max_len = e.at("max_len").get<int>();
  m.encoder.max_speakers = e.at("max_speakers").get<int>();
  m.encoder.speaker_blind = e.at("speaker_blind").get<bool>();
  const auto& i = j.at("inducer");
  m.inducer.d_score = i.at("d_score").get<int>();
  m.inducer.d_hidden = i.at("d_hidden").get<int>();
  m.inducer.eps = i.at("eps").get<double>();
  m.inducer.l = i.at("l").get<double>();
  m.inducer.r = i.at("r").get<double>();
  m.inducer.shared_row_noise = i.at("shared_row_noise").get<bool>();
  m.inducer.row_normalize_scores = i.at("row_normalize_scores").get<bool>();
  m.inducer.columnwise_prune = i.at("columnwise_prune").get<bool>();
  const auto& g = j.at("gcn");
  m.gcn.layers = g.at("layers").get<int>();
  m.gcn.hidden = g.at("hidden").get<int>();
  m.gcn.degree_eps = g.at("degree_eps").get<double>();
  m.dropout = j.at("dropout").get<double>();
  m.alpha_init_raw = j.at("alpha_init_raw").get<double>();
  m.no_pgi = j.at("no_pgi").get<bool>();
  m.no_prune = j.at("no_prune").get<bool>();
  m.no_gate = j.at("no_gate").get<bool>();
  return m;
}

inline std::string config_hash(const ModelConfig& m) {
  std::string s = model_config_json(m).dump();
  uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

}  // namespace polar
