#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "polar/encoder.hpp"
#include "polar/entmax.hpp"
#include "polar/gcn.hpp"
#include "polar/inducer.hpp"
#include "polar/tagger.hpp"

namespace polar {

struct ModelConfig {
  EncoderConfig encoder;
  InducerConfig inducer;
  GcnConfig gcn;
  double dropout = 0.5;
  double alpha_init_raw = 0.0;  // 1 + sigmoid(0) = 1.5
  bool no_pgi = false;
  bool no_prune = false;
  bool no_gate = false;

  void validate() const {
    encoder.validate();
    inducer.validate();
    gcn.validate();
    if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("ModelConfig: dropout must be in [0,1)");
  }
};

struct ForwardResult {
  Value log_probs;  // K x |labels|
  Value e_raw;      // K x K edge gates
  Value e_pruned;   // undefined when pruning is disabled
};

// Full pipeline: embed -> contextualize -> predicate-centered attention ->
// HardKuma edge gates -> entmax pruning -> GCN -> gated fusion -> tagger.
class PolarModel {
 public:
  PolarModel(ModelConfig cfg, Tagset tagset, Rng& rng)
      : cfg_(std::move(cfg)), tagset_(std::move(tagset)), encoder_(cfg_.encoder, rng),
        heads_(cfg_.encoder.d_h, cfg_.inducer, rng), gcn_(cfg_.encoder.d_h, cfg_.gcn, rng) {
    cfg_.validate();
    alpha_raw_ = make_param(Tensor::scalar(cfg_.alpha_init_raw));
    w_align_ = make_param(glorot(cfg_.encoder.d_h, cfg_.gcn.hidden, rng));
    if (!cfg_.no_gate) w_gate_ = make_param(Tensor::zeros({2 * cfg_.gcn.hidden, cfg_.gcn.hidden}));
    w_cls_ = make_param(glorot(cfg_.gcn.hidden, tagset_.num_labels(), rng));
    b_cls_ = make_param(Tensor::zeros({tagset_.num_labels()}));
  }

  const ModelConfig& config() const { return cfg_; }
  const Tagset& tagset() const { return tagset_; }
  const Encoder& encoder() const { return encoder_; }
  double alpha() const { return AlphaParam::alpha_of(alpha_raw_.tensor().item()); }
  const Value& alpha_raw() const { return alpha_raw_; }

  ForwardResult forward(Tape& tape, const NodeSequence& seq, const Vocab& vocab, bool train,
                        EdgeMode edge_mode, Rng& rng) const {
    Value x = encoder_.embed(tape, seq, vocab, EmbedMode::task);
    x = tape.dropout(x, cfg_.dropout, train, rng);
    Value h = encoder_.contextualize(tape, x);

    Value hp = h;
    if (!cfg_.no_pgi) hp = pgi_attend(tape, h, seq.predicate_node).context;
    auto [a, b] = heads_(tape, hp);
    Tensor noise = edge_noise(seq.K(), edge_mode, cfg_.inducer, rng);
    ForwardResult res;
    res.e_raw = induce(tape, a, b, noise, cfg_.inducer);
    Value e = res.e_raw;
    if (!cfg_.no_prune) {
      res.e_pruned = prune(tape, res.e_raw, alpha_raw_, cfg_.inducer);
      e = res.e_pruned;
    }

    Value r = gcn_(tape, h, e);
    Value h_aligned = tape.matmul(h, w_align_);
    Value fused = cfg_.no_gate ? additive_fusion(tape, r, h_aligned)
                               : gated_fusion(tape, r, h_aligned, w_gate_);
    fused = tape.dropout(fused, cfg_.dropout, train, rng);
    res.log_probs = classify(tape, fused, w_cls_, b_cls_);
    return res;
  }

  // Speaker-prediction objective over the shared encoder.
  Value psp_forward(Tape& tape, const NodeSequence& seq, const Vocab& vocab, bool train,
                    Rng& rng) const {
    Value x = encoder_.embed(tape, seq, vocab, EmbedMode::psp);
    x = tape.dropout(x, cfg_.dropout, train, rng);
    Value h = encoder_.contextualize(tape, x);
    h = tape.dropout(h, cfg_.dropout, train, rng);
    return psp_loss(tape, h, seq.pronoun_nodes, seq.pronoun_referents, encoder_.psp_head_w(),
                    encoder_.psp_head_b());
  }

  // Parameters the task loss reaches. The PSP head belongs to the
  // pretraining objective, and alpha only matters while pruning is on;
  // neither gets a task gradient otherwise.
  std::vector<std::pair<std::string, Value>> collect_params() const {
    std::vector<std::pair<std::string, Value>> out;
    encoder_.collect_params("encoder", out, false);
    heads_.collect_params("heads", out);
    if (!cfg_.no_prune) out.emplace_back("alpha_raw", alpha_raw_);
    gcn_.collect_params("gcn", out);
    out.emplace_back("w_align", w_align_);
    if (!cfg_.no_gate) out.emplace_back("w_gate", w_gate_);
    out.emplace_back("w_cls", w_cls_);
    out.emplace_back("b_cls", b_cls_);
    return out;
  }

  // Parameters updated during the PSP pretraining phase.
  std::vector<std::pair<std::string, Value>> collect_psp_params() const {
    std::vector<std::pair<std::string, Value>> out;
    encoder_.collect_params("encoder", out);
    return out;
  }

  // Every parameter, for serialization.
  std::vector<std::pair<std::string, Value>> collect_all_params() const {
    std::vector<std::pair<std::string, Value>> out;
    encoder_.collect_params("encoder", out);
    heads_.collect_params("heads", out);
    out.emplace_back("alpha_raw", alpha_raw_);
    gcn_.collect_params("gcn", out);
    out.emplace_back("w_align", w_align_);
    if (!cfg_.no_gate) out.emplace_back("w_gate", w_gate_);
    out.emplace_back("w_cls", w_cls_);
    out.emplace_back("b_cls", b_cls_);
    return out;
  }

 private:
  ModelConfig cfg_;
  Tagset tagset_;
  Encoder encoder_;
  ParamHeads heads_;
  GcnStack gcn_;
  Value alpha_raw_, w_align_, w_gate_, w_cls_, b_cls_;
};

}  // namespace polar
