#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "polar/checkpoint.hpp"
#include "polar/config.hpp"
#include "polar/evaluate.hpp"
#include "polar/synthetic.hpp"
#include "polar/train.hpp"

namespace {

// options shared by every subcommand: config file, generic key=value
// overrides, and the common path/seed flags
struct CommonOpts {
  std::string config_file;
  std::vector<std::string> sets;
  std::optional<std::string> train, dev, test, checkpoint_dir, init_checkpoint;
  std::optional<uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_file, "key=value config file");
  cmd->add_option("--set", o.sets, "config override as key=value, repeatable");
  cmd->add_option("--seed", o.seed, "random seed");
}

void add_paths(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--train", o.train, "training corpus path");
  cmd->add_option("--dev", o.dev, "development corpus path");
  cmd->add_option("--test", o.test, "test corpus path");
  cmd->add_option("--checkpoint-dir", o.checkpoint_dir, "checkpoint output directory");
  cmd->add_option("--init-checkpoint", o.init_checkpoint, "warm-start checkpoint path");
}

polar::RunConfig build_config(const CommonOpts& o) {
  polar::RunConfig cfg;
  if (!o.config_file.empty()) polar::apply_config_file(cfg, o.config_file);
  for (const std::string& kv : o.sets) {
    size_t eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    polar::apply_config_key(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.train) cfg.train_path = *o.train;
  if (o.dev) cfg.dev_path = *o.dev;
  if (o.test) cfg.test_path = *o.test;
  if (o.checkpoint_dir) cfg.checkpoint_dir = *o.checkpoint_dir;
  if (o.init_checkpoint) cfg.init_checkpoint = *o.init_checkpoint;
  if (o.seed) cfg.seed = *o.seed;
  return cfg;
}

void require_exists(const std::string& path, const std::string& what) {
  if (!std::filesystem::exists(path))
    throw std::runtime_error(what + " path does not exist: " + path);
}

// loads model + vocabulary + tagset from a checkpoint and verifies the
// corpus role inventory is covered
struct LoadedModel {
  polar::LoadedCheckpoint ck;
  polar::PolarModel model;
  polar::Vocab vocab;

  explicit LoadedModel(const std::string& path)
      : ck(polar::load_checkpoint(path)), model(polar::model_from_checkpoint(ck)),
        vocab(polar::Vocab::build(ck.vocab_tokens)) {}

  void check_roles(const polar::Corpus& corpus) const {
    for (const std::string& role : corpus.roles)
      if (std::find(ck.roles.begin(), ck.roles.end(), role) == ck.roles.end())
        throw std::runtime_error("tagset mismatch: corpus role '" + role +
                                 "' is not in the checkpoint tagset");
  }
};

int cmd_gen_data(const CommonOpts& common, const std::string& out_dir,
                 std::optional<int> dialogues) {
  polar::RunConfig cfg = build_config(common);
  if (dialogues) cfg.gen.dialogues = *dialogues;
  polar::Corpus corpus = polar::gen_synthetic(cfg.gen, cfg.seed);

  size_t total = corpus.dialogues.size();
  size_t n_train = total * 8 / 10, n_dev = total / 10;
  auto slice = [&](size_t from, size_t count) {
    polar::Corpus part;
    part.roles = corpus.roles;
    part.num_speakers = corpus.num_speakers;
    part.dialogues.assign(corpus.dialogues.begin() + static_cast<long>(from),
                          corpus.dialogues.begin() + static_cast<long>(from + count));
    return part;
  };

  std::filesystem::create_directories(out_dir);
  polar::save_corpus(out_dir + "/train.jsonl", slice(0, n_train));
  polar::save_corpus(out_dir + "/dev.jsonl", slice(n_train, n_dev));
  polar::save_corpus(out_dir + "/test.jsonl", slice(n_train + n_dev, total - n_train - n_dev));
  std::cout << "wrote " << n_train << " train / " << n_dev << " dev / "
            << total - n_train - n_dev << " test dialogues to " << out_dir << "\n";
  return 0;
}

int run_training(const CommonOpts& common, const std::string& metrics_path, bool psp_only) {
  polar::RunConfig cfg = build_config(common);
  require_exists(cfg.train_path, "training corpus");
  require_exists(cfg.dev_path, "development corpus");
  polar::Trainer trainer(cfg);

  std::filesystem::create_directories(cfg.checkpoint_dir);
  std::string mpath = metrics_path.empty() ? cfg.checkpoint_dir + "/metrics.jsonl" : metrics_path;
  std::ofstream metrics(mpath);
  if (!metrics) throw std::runtime_error("cannot open metrics log for writing: " + mpath);

  polar::TrainOutcome out = trainer.run(psp_only, &metrics, &std::cout);
  if (psp_only) {
    std::cout << "pronoun accuracy " << out.psp_accuracy << "; checkpoint " << out.checkpoint_path
              << "\n";
  } else {
    std::cout << "best dev F1_all " << out.best_dev_f1 << " at epoch " << out.best_epoch
              << "; checkpoint " << out.checkpoint_path << "\n";
  }
  std::cout << "metrics log " << mpath << "\n";
  return 0;
}

std::vector<polar::Prediction> predict_all(const LoadedModel& lm, const polar::Corpus& corpus,
                                           bool deterministic, uint64_t seed) {
  lm.check_roles(corpus);
  std::vector<polar::Prediction> preds;
  polar::Rng rng(seed);
  for (const polar::Dialogue& d : corpus.dialogues) {
    polar::NodeSequence seq = polar::linearize(d, lm.model.tagset());
    preds.push_back(polar::predict_sequence(lm.model, lm.vocab, d, seq, deterministic, rng));
  }
  return preds;
}

int cmd_evaluate(const std::string& checkpoint, const std::string& data,
                 const std::string& report_path, bool gold_passthrough) {
  require_exists(data, "corpus");
  polar::Corpus corpus = polar::load_corpus(data);

  std::vector<polar::Prediction> preds;
  if (gold_passthrough) {
    for (const polar::Dialogue& d : corpus.dialogues) preds.push_back({d.dialogue_id, d.roles});
  } else {
    if (checkpoint.empty())
      throw std::runtime_error("evaluate needs --checkpoint (or --gold-passthrough)");
    require_exists(checkpoint, "checkpoint");
    LoadedModel lm(checkpoint);
    preds = predict_all(lm, corpus, true, 0);
  }

  polar::EvalReport report = polar::evaluate(preds, corpus);
  std::cout << polar::eval_report_text(report);
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    if (!out) throw std::runtime_error("cannot write report: " + report_path);
    out << polar::eval_report_json(report).dump(2) << "\n";
  }
  return 0;
}

int cmd_predict(const std::string& checkpoint, const std::string& data, const std::string& out_path,
                bool stochastic, uint64_t seed) {
  require_exists(checkpoint, "checkpoint");
  require_exists(data, "corpus");
  LoadedModel lm(checkpoint);
  polar::Corpus corpus = polar::load_corpus(data);
  std::vector<polar::Prediction> preds = predict_all(lm, corpus, !stochastic, seed);
  polar::save_predictions(out_path, preds);
  std::cout << "wrote " << preds.size() << " predictions to " << out_path << "\n";
  return 0;
}

void dump_matrix(std::ostream& os, const char* title, const polar::Tensor& m,
                 const polar::NodeSequence& seq, bool with_support) {
  int k = m.shape[0];
  os << title << "\n";
  os << std::setw(14) << "";
  for (int j = 0; j < k; ++j) {
    std::string h = seq.nodes[static_cast<size_t>(j)].surface;
    if (j == seq.predicate_node) h += "*";
    if (h.size() > 13) h = h.substr(0, 13);
    os << std::setw(14) << h;
  }
  os << "\n";
  for (int i = 0; i < k; ++i) {
    std::string h = seq.nodes[static_cast<size_t>(i)].surface;
    if (h.size() > 13) h = h.substr(0, 13);
    os << std::setw(14) << std::left << h << std::right;
    int support = 0;
    for (int j = 0; j < k; ++j) {
      os << std::setw(14) << std::fixed << std::setprecision(9) << m.at(i, j);
      if (m.at(i, j) != 0.0) ++support;
    }
    if (with_support) os << "  support=" << support;
    os << "\n";
  }
}

int cmd_inspect_graph(const std::string& checkpoint, const std::string& data,
                      const std::string& dialogue_id, const std::string& out_path) {
  require_exists(checkpoint, "checkpoint");
  require_exists(data, "corpus");
  LoadedModel lm(checkpoint);
  polar::Corpus corpus = polar::load_corpus(data);
  lm.check_roles(corpus);

  const polar::Dialogue* target = nullptr;
  if (dialogue_id.empty()) {
    if (corpus.dialogues.empty()) throw std::runtime_error("corpus is empty");
    target = &corpus.dialogues.front();
  } else {
    for (const polar::Dialogue& d : corpus.dialogues)
      if (d.dialogue_id == dialogue_id) target = &d;
    if (!target) throw std::runtime_error("dialogue '" + dialogue_id + "' not found in corpus");
  }

  polar::NodeSequence seq = polar::linearize(*target, lm.model.tagset());
  polar::Tape tape(false);
  polar::Rng rng(0);
  polar::ForwardResult res =
      lm.model.forward(tape, seq, lm.vocab, false, polar::EdgeMode::deterministic, rng);

  std::ostringstream os;
  os << "dialogue " << target->dialogue_id << "\n";
  os << "K=" << seq.K() << " nodes, predicate node " << seq.predicate_node << " ("
     << seq.nodes[static_cast<size_t>(seq.predicate_node)].surface << ")\n";
  dump_matrix(os, "E_raw", res.e_raw.tensor(), seq, false);
  if (lm.model.config().no_prune) {
    os << "E_pruned\npruning disabled\n";
  } else {
    os << std::defaultfloat << std::setprecision(6);
    os << "alpha " << lm.model.alpha() << "\n";
    dump_matrix(os, "E_pruned", res.e_pruned.tensor(), seq, true);
  }

  if (out_path.empty()) {
    std::cout << os.str();
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write graph dump: " + out_path);
    out << os.str();
    std::cout << "wrote graph dump to " << out_path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"latent-graph conversational semantic role labeler"};
  app.require_subcommand(1);

  CommonOpts gen_common;
  std::string gen_out = "data";
  std::optional<int> gen_dialogues;
  CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic corpus split 8:1:1");
  add_common(gen, gen_common);
  gen->add_option("--out", gen_out, "output directory");
  gen->add_option("--dialogues", gen_dialogues, "total dialogue count before splitting");

  CommonOpts psp_common;
  std::string psp_metrics;
  CLI::App* psp = app.add_subcommand("psp-pretrain", "pretrain the encoder on pronoun-speaker prediction");
  add_common(psp, psp_common);
  add_paths(psp, psp_common);
  psp->add_option("--metrics", psp_metrics, "metrics log path (JSON lines)");

  CommonOpts train_common;
  std::string train_metrics;
  CLI::App* train = app.add_subcommand("train", "train the tagger, saving the best-dev checkpoint");
  add_common(train, train_common);
  add_paths(train, train_common);
  train->add_option("--metrics", train_metrics, "metrics log path (JSON lines)");
  for (const char* flag : {"no_pgi", "no_prune", "no_gate", "no_psp", "bert_style_pairing"}) {
    std::string name = "--" + std::string(flag);
    for (char& c : name) if (c == '_') c = '-';
    train->add_flag_callback(
        name, [&train_common, flag] { train_common.sets.push_back(std::string(flag) + "=true"); },
        "ablation flag");
  }

  std::string eval_checkpoint, eval_data, eval_report;
  bool eval_gold = false;
  CLI::App* eval = app.add_subcommand("evaluate", "run deterministic inference and report span P/R/F1");
  eval->add_option("--checkpoint", eval_checkpoint, "model checkpoint");
  eval->add_option("--data", eval_data, "gold corpus path")->required();
  eval->add_option("--report", eval_report, "write the report as JSON to this path");
  eval->add_flag("--gold-passthrough", eval_gold, "score the gold annotations against themselves");

  std::string pred_checkpoint, pred_data, pred_out;
  bool pred_stochastic = false;
  uint64_t pred_seed = 0;
  CLI::App* pred = app.add_subcommand("predict", "write span predictions for a corpus");
  pred->add_option("--checkpoint", pred_checkpoint, "model checkpoint")->required();
  pred->add_option("--data", pred_data, "corpus path")->required();
  pred->add_option("--out", pred_out, "predictions output path")->required();
  pred->add_flag("--stochastic", pred_stochastic, "sample edge noise instead of the median");
  pred->add_option("--seed", pred_seed, "seed for stochastic inference");

  std::string ig_checkpoint, ig_data, ig_dialogue, ig_out;
  CLI::App* ig = app.add_subcommand("inspect-graph", "dump raw and pruned edge matrices for one dialogue");
  ig->add_option("--checkpoint", ig_checkpoint, "model checkpoint")->required();
  ig->add_option("--data", ig_data, "corpus path")->required();
  ig->add_option("--dialogue", ig_dialogue, "dialogue id (default: first in the corpus)");
  ig->add_option("--out", ig_out, "dump output path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(gen_common, gen_out, gen_dialogues);
    if (psp->parsed()) return run_training(psp_common, psp_metrics, true);
    if (train->parsed()) return run_training(train_common, train_metrics, false);
    if (eval->parsed()) return cmd_evaluate(eval_checkpoint, eval_data, eval_report, eval_gold);
    if (pred->parsed()) return cmd_predict(pred_checkpoint, pred_data, pred_out, pred_stochastic, pred_seed);
    if (ig->parsed()) return cmd_inspect_graph(ig_checkpoint, ig_data, ig_dialogue, ig_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
