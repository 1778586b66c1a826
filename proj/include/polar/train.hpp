#pragma once

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "polar/adam.hpp"
#include "polar/checkpoint.hpp"
#include "polar/config.hpp"
#include "polar/evaluate.hpp"
#include "polar/model.hpp"

namespace polar {

inline Prediction predict_sequence(const PolarModel& model, const Vocab& vocab, const Dialogue& d,
                                   const NodeSequence& seq, bool deterministic, Rng& rng) {
  Tape tape(false);
  ForwardResult fwd = model.forward(tape, seq, vocab, false,
                                    deterministic ? EdgeMode::deterministic : EdgeMode::stochastic, rng);
  TransitionMask mask(model.tagset());
  std::vector<int> labels = viterbi_decode(fwd.log_probs.tensor(), mask);
  std::vector<NodeSpan> node_spans = spans_from_tags(labels, model.tagset());
  return {d.dialogue_id, node_spans_to_utterance(seq, node_spans, model.tagset())};
}

inline double pronoun_accuracy(const PolarModel& model, const Vocab& vocab,
                               const std::vector<NodeSequence>& seqs) {
  long correct = 0, total = 0;
  for (const NodeSequence& seq : seqs) {
    if (seq.pronoun_nodes.empty()) continue;
    Tape tape(false);
    Value x = model.encoder().embed(tape, seq, vocab, EmbedMode::psp);
    Value h = model.encoder().contextualize(tape, x);
    Value rows = tape.gather_rows(h, seq.pronoun_nodes);
    Value logits =
        tape.add(tape.matmul(rows, model.encoder().psp_head_w()), model.encoder().psp_head_b());
    const Tensor& lg = logits.tensor();
    for (size_t i = 0; i < seq.pronoun_nodes.size(); ++i) {
      int best = 0;
      for (int s = 1; s < lg.shape[1]; ++s)
        if (lg.at(static_cast<int>(i), s) > lg.at(static_cast<int>(i), best)) best = s;
      if (best == seq.pronoun_referents[i]) ++correct;
      ++total;
    }
  }
  return total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

struct TrainOutcome {
  double best_dev_f1 = -1.0;
  double best_dev_f1_cross = -1.0;  // cross-utterance F1 at the best epoch
  int best_epoch = -1;
  std::string checkpoint_path;
  double psp_accuracy = -1.0;
  std::vector<double> alpha_steps;  // alpha after every optimizer step
  std::vector<nlohmann::json> records;
};

// Seeded end-to-end training: optional PSP pretraining of the shared
// encoder, then task training with per-epoch dev evaluation and best-dev
// checkpointing. All randomness flows through one Rng.
class Trainer {
 public:
  explicit Trainer(RunConfig cfg) : cfg_(std::move(cfg)), rng_(cfg_.seed) {
    cfg_.validate();
    if (cfg_.train_path.empty() || cfg_.dev_path.empty())
      throw std::invalid_argument("config: train and dev corpus paths are required");
    train_ = load_corpus(cfg_.train_path);
    dev_ = load_corpus(cfg_.dev_path);
    if (train_.size() == 0) throw std::invalid_argument("training corpus is empty");

    Tagset tagset(train_.roles);
    for (const Dialogue& d : train_.dialogues) train_seqs_.push_back(linearize(d, tagset));
    for (const Dialogue& d : dev_.dialogues) dev_seqs_.push_back(linearize(d, tagset));
    int max_k = 0;
    for (const NodeSequence& s : train_seqs_) max_k = std::max(max_k, s.K());
    for (const NodeSequence& s : dev_seqs_) max_k = std::max(max_k, s.K());

    if (!cfg_.init_checkpoint.empty()) {
      LoadedCheckpoint ck = load_checkpoint(cfg_.init_checkpoint);
      if (ck.roles != train_.roles)
        throw std::runtime_error("tagset mismatch: checkpoint roles differ from corpus roles");
      if (max_k > ck.config.encoder.max_len)
        throw std::runtime_error("linearized length " + std::to_string(max_k) +
                                 " exceeds the checkpoint's encoder.max_len");
      vocab_.emplace(Vocab::build(ck.vocab_tokens));
      cfg_.model = ck.config;
      model_.emplace(cfg_.model, tagset, rng_);
      restore_params(*model_, ck);
    } else {
      vocab_.emplace(Vocab::build(corpus_token_inventory(train_)));
      cfg_.model.encoder.vocab_size = vocab_->size();
      cfg_.model.encoder.speaker_blind = cfg_.bert_style_pairing;
      int speakers = std::max(train_.num_speakers, dev_.num_speakers);
      cfg_.model.encoder.max_speakers = std::max(cfg_.model.encoder.max_speakers, speakers);
      cfg_.model.encoder.max_len = std::max(cfg_.model.encoder.max_len, max_k);
      model_.emplace(cfg_.model, tagset, rng_);
    }
  }

  const PolarModel& model() const { return *model_; }
  const Vocab& vocab() const { return *vocab_; }
  const RunConfig& config() const { return cfg_; }

  TrainOutcome run(bool psp_only, std::ostream* metrics, std::ostream* info) {
    TrainOutcome out;
    std::filesystem::create_directories(cfg_.checkpoint_dir);
    if (!cfg_.no_psp && cfg_.psp_epochs > 0) psp_phase(out, metrics, info);
    if (psp_only) {
      out.checkpoint_path = cfg_.checkpoint_dir + "/psp.ckpt";
      save_checkpoint(out.checkpoint_path, *model_, *vocab_);
      return out;
    }
    task_phase(out, metrics, info);
    return out;
  }

  std::pair<EvalReport, double> evaluate_dev() { return evaluate_split(dev_, dev_seqs_); }

 private:
  void emit(TrainOutcome& out, const nlohmann::json& rec, std::ostream* metrics) {
    out.records.push_back(rec);
    if (metrics) *metrics << rec.dump() << "\n" << std::flush;
  }

  void psp_phase(TrainOutcome& out, std::ostream* metrics, std::ostream* info) {
    std::vector<int> with_pronouns;
    for (size_t i = 0; i < train_seqs_.size(); ++i)
      if (!train_seqs_[i].pronoun_nodes.empty()) with_pronouns.push_back(static_cast<int>(i));
    if (with_pronouns.empty()) {
      if (info) *info << "psp: no pronoun-labeled dialogues, skipping pretraining\n";
      return;
    }
    auto named = model_->collect_psp_params();
    std::vector<Value> params;
    for (auto& [name, v] : named) params.push_back(v);
    Adam opt(params, AdamOptions{cfg_.lr, 0.9, 0.999, 1e-8, cfg_.weight_decay});

    for (int epoch = 1; epoch <= cfg_.psp_epochs; ++epoch) {
      rng_.shuffle(with_pronouns);
      double loss_sum = 0.0;
      long batches = 0;
      for (size_t pos = 0; pos < with_pronouns.size(); pos += static_cast<size_t>(cfg_.batch_size)) {
        size_t stop = std::min(with_pronouns.size(), pos + static_cast<size_t>(cfg_.batch_size));
        opt.zero_grad();
        double batch_loss = 0.0;
        for (size_t k = pos; k < stop; ++k) {
          Tape tape;
          Value loss = model_->psp_forward(tape, train_seqs_[static_cast<size_t>(with_pronouns[k])],
                                           *vocab_, true, rng_);
          loss = tape.scale(loss, 1.0 / static_cast<double>(stop - pos));
          batch_loss += loss.tensor().item() * static_cast<double>(stop - pos);
          tape.backward(loss);
        }
        check_finite(batch_loss, epoch, "psp batch");
        opt.step();
        loss_sum += batch_loss / static_cast<double>(stop - pos);
        ++batches;
      }
      double acc = pronoun_accuracy(*model_, *vocab_, dev_seqs_);
      out.psp_accuracy = acc;
      nlohmann::json rec = {{"phase", "psp"},
                            {"epoch", epoch},
                            {"train_loss", loss_sum / static_cast<double>(batches)},
                            {"dev_pronoun_accuracy", acc}};
      emit(out, rec, metrics);
      if (info)
        *info << "psp epoch " << epoch << ": loss " << loss_sum / static_cast<double>(batches)
              << ", dev pronoun accuracy " << acc << "\n";
    }
  }

  void task_phase(TrainOutcome& out, std::ostream* metrics, std::ostream* info) {
    auto named = model_->collect_params();
    std::vector<Value> params;
    for (auto& [name, v] : named) params.push_back(v);
    Adam opt(params, AdamOptions{cfg_.lr, 0.9, 0.999, 1e-8, cfg_.weight_decay});
    std::vector<int> order(train_seqs_.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    out.checkpoint_path = cfg_.checkpoint_dir + "/best.ckpt";

    for (int epoch = 1; epoch <= cfg_.epochs; ++epoch) {
      opt.set_lr(cfg_.lr * std::pow(cfg_.lr_decay, epoch - 1));
      rng_.shuffle(order);
      double loss_sum = 0.0;
      long seen = 0;
      for (size_t pos = 0; pos < order.size(); pos += static_cast<size_t>(cfg_.batch_size)) {
        size_t stop = std::min(order.size(), pos + static_cast<size_t>(cfg_.batch_size));
        opt.zero_grad();
        for (size_t k = pos; k < stop; ++k) {
          const NodeSequence& seq = train_seqs_[static_cast<size_t>(order[k])];
          Tape tape;
          ForwardResult fwd = model_->forward(
              tape, seq, *vocab_, true,
              cfg_.stochastic_edges ? EdgeMode::stochastic : EdgeMode::deterministic, rng_);
          Value loss = sequence_loss(tape, fwd.log_probs, seq.gold_labels);
          double v = loss.tensor().item();
          if (!std::isfinite(v))
            throw std::runtime_error("training diverged: non-finite loss at epoch " +
                                     std::to_string(epoch) + " on dialogue '" +
                                     train_.dialogues[static_cast<size_t>(order[k])].dialogue_id + "'");
          loss_sum += v;
          ++seen;
          loss = tape.scale(loss, 1.0 / static_cast<double>(stop - pos));
          tape.backward(loss);
        }
        opt.step();
        out.alpha_steps.push_back(model_->alpha());
      }
      auto [report, dev_loss] = evaluate_split(dev_, dev_seqs_);
      double f1 = report.all.f1();
      nlohmann::json rec = {{"phase", "task"},
                            {"epoch", epoch},
                            {"train_loss", loss_sum / static_cast<double>(seen)},
                            {"dev_loss", dev_loss},
                            {"dev_f1_all", f1},
                            {"dev_f1_cross", report.cross.f1()},
                            {"dev_f1_intra", report.intra.f1()},
                            {"alpha", model_->alpha()}};
      emit(out, rec, metrics);
      if (info)
        *info << "epoch " << epoch << ": train loss " << loss_sum / static_cast<double>(seen)
              << ", dev F1 all " << f1 << " cross " << report.cross.f1() << " intra "
              << report.intra.f1() << ", alpha " << model_->alpha() << "\n";
      if (f1 > out.best_dev_f1) {
        out.best_dev_f1 = f1;
        out.best_dev_f1_cross = report.cross.f1();
        out.best_epoch = epoch;
        save_checkpoint(out.checkpoint_path, *model_, *vocab_);
      }
      if (f1 >= cfg_.early_stop_f1) {
        if (info) *info << "early stop: dev F1 " << f1 << " reached target " << cfg_.early_stop_f1 << "\n";
        break;
      }
    }
    if (out.best_epoch < 0) {
      save_checkpoint(out.checkpoint_path, *model_, *vocab_);
    }
  }

  std::pair<EvalReport, double> evaluate_split(const Corpus& corpus,
                                               const std::vector<NodeSequence>& seqs) {
    std::vector<Prediction> preds;
    double loss_sum = 0.0;
    TransitionMask mask(model_->tagset());
    for (size_t i = 0; i < seqs.size(); ++i) {
      Tape tape(false);
      ForwardResult fwd = model_->forward(
          tape, seqs[i], *vocab_, false,
          cfg_.deterministic_eval ? EdgeMode::deterministic : EdgeMode::stochastic, rng_);
      loss_sum += sequence_loss(tape, fwd.log_probs, seqs[i].gold_labels).tensor().item();
      std::vector<int> labels = viterbi_decode(fwd.log_probs.tensor(), mask);
      std::vector<NodeSpan> node_spans = spans_from_tags(labels, model_->tagset());
      preds.push_back({corpus.dialogues[i].dialogue_id,
                       node_spans_to_utterance(seqs[i], node_spans, model_->tagset())});
    }
    return {evaluate(preds, corpus), seqs.empty() ? 0.0 : loss_sum / static_cast<double>(seqs.size())};
  }

  void check_finite(double v, int epoch, const std::string& where) const {
    if (!std::isfinite(v))
      throw std::runtime_error("training diverged: non-finite loss at epoch " + std::to_string(epoch) +
                               " (" + where + ")");
  }

  RunConfig cfg_;
  Rng rng_;
  Corpus train_, dev_;
  std::optional<Vocab> vocab_;
  std::optional<PolarModel> model_;
  std::vector<NodeSequence> train_seqs_, dev_seqs_;
};

}  // namespace polar
