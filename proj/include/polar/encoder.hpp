#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "polar/autograd.hpp"
#include "polar/dialogue.hpp"
#include "polar/init.hpp"
#include "polar/vocab.hpp"

namespace polar {

struct EncoderConfig {
  int vocab_size = 0;
  int d_pos = 24;
  int d_speaker = 12;
  int d_word = 48;
  int d_prd = 12;
  int layers = 2;
  int heads = 4;
  int d_h = 96;
  int ffn_mult = 2;
  int max_len = 160;
  int max_speakers = 8;
  bool speaker_blind = false;  // plain-PLM fallback: one shared speaker row for every node

  int d_in() const { return d_pos + d_speaker + d_word + d_prd; }

  void validate() const {
    if (vocab_size <= 0) throw std::invalid_argument("EncoderConfig: vocab_size must be positive");
    if (d_h % heads != 0) throw std::invalid_argument("EncoderConfig: d_h not divisible by head count");
    if (layers < 0 || heads <= 0 || max_len <= 0 || max_speakers < 2)
      throw std::invalid_argument("EncoderConfig: invalid dimensions");
  }
};

enum class EmbedMode { task, psp };

// Embedding + small self-attention stack standing in for a pretrained
// dialogue encoder. PSP and task mode share every weight; only the predicate
// channel row differs, so the pretrained stack transfers across modes.
class Encoder {
 public:
  Encoder(EncoderConfig cfg, Rng& rng) : cfg_(cfg) {
    cfg_.validate();
    word_ = make_param(uniform_init({cfg_.vocab_size, cfg_.d_word}, 0.1, rng));
    speaker_ = make_param(uniform_init({cfg_.max_speakers, cfg_.d_speaker}, 0.1, rng));
    pos_ = make_param(uniform_init({cfg_.max_len, cfg_.d_pos}, 0.1, rng));
    prd_ = make_param(uniform_init({3, cfg_.d_prd}, 0.1, rng));  // rows: no, yes, absent
    w_in_ = make_param(glorot(cfg_.d_in(), cfg_.d_h, rng));
    for (int l = 0; l < cfg_.layers; ++l) {
      Layer lay;
      lay.wq = make_param(glorot(cfg_.d_h, cfg_.d_h, rng));
      lay.wk = make_param(glorot(cfg_.d_h, cfg_.d_h, rng));
      lay.wv = make_param(glorot(cfg_.d_h, cfg_.d_h, rng));
      lay.wo = make_param(glorot(cfg_.d_h, cfg_.d_h, rng));
      int ffn = cfg_.d_h * cfg_.ffn_mult;
      lay.w1 = make_param(glorot(cfg_.d_h, ffn, rng));
      lay.b1 = make_param(Tensor::zeros({ffn}));
      lay.w2 = make_param(glorot(ffn, cfg_.d_h, rng));
      lay.b2 = make_param(Tensor::zeros({cfg_.d_h}));
      layers_.push_back(std::move(lay));
    }
    w_psp_ = make_param(glorot(cfg_.d_h, cfg_.max_speakers, rng));
    b_psp_ = make_param(Tensor::zeros({cfg_.max_speakers}));
  }

  const EncoderConfig& config() const { return cfg_; }

  // per node: [position ; speaker ; word ; predicate-indicator]
  Value embed(Tape& tape, const NodeSequence& seq, const Vocab& vocab, EmbedMode mode) const {
    if (vocab.size() != cfg_.vocab_size)
      throw std::invalid_argument("embed: vocabulary size " + std::to_string(vocab.size()) +
                                  " does not match table " + std::to_string(cfg_.vocab_size));
    std::vector<int> word_idx, spk_idx, pos_idx, prd_idx;
    for (const DialogueNode& n : seq.nodes) {
      word_idx.push_back(vocab.id(n.surface));
      if (n.speaker < 0 || n.speaker >= cfg_.max_speakers)
        throw std::out_of_range("embed: speaker id " + std::to_string(n.speaker) + " exceeds table of " +
                                std::to_string(cfg_.max_speakers));
      spk_idx.push_back(cfg_.speaker_blind ? 0 : n.speaker);
      if (n.position >= cfg_.max_len)
        throw std::out_of_range("embed: sequence length " + std::to_string(seq.K()) +
                                " exceeds position table of " + std::to_string(cfg_.max_len));
      pos_idx.push_back(n.position);
      prd_idx.push_back(mode == EmbedMode::psp ? 2 : (n.is_predicate ? 1 : 0));
    }
    return tape.concat_cols({tape.gather_rows(pos_, pos_idx), tape.gather_rows(speaker_, spk_idx),
                             tape.gather_rows(word_, word_idx), tape.gather_rows(prd_, prd_idx)});
  }

  // input projection + L post-norm self-attention blocks
  Value contextualize(Tape& tape, const Value& X) const {
    Value h = tape.matmul(X, w_in_);
    int dh = cfg_.d_h / cfg_.heads;
    double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    for (const Layer& lay : layers_) {
      Value q = tape.matmul(h, lay.wq);
      Value k = tape.matmul(h, lay.wk);
      Value v = tape.matmul(h, lay.wv);
      std::vector<Value> heads;
      for (int hd = 0; hd < cfg_.heads; ++hd) {
        Value qh = tape.slice_cols(q, hd * dh, (hd + 1) * dh);
        Value kh = tape.slice_cols(k, hd * dh, (hd + 1) * dh);
        Value vh = tape.slice_cols(v, hd * dh, (hd + 1) * dh);
        Value attn = tape.softmax_rows(tape.scale(tape.matmul(qh, tape.transpose(kh)), inv_sqrt));
        heads.push_back(tape.matmul(attn, vh));
      }
      Value ctx = tape.matmul(tape.concat_cols(heads), lay.wo);
      h = tape.layer_norm_rows(tape.add(h, ctx));
      Value ffn = tape.add(
          tape.matmul(tape.relu(tape.add(tape.matmul(h, lay.w1), lay.b1)), lay.w2), lay.b2);
      h = tape.layer_norm_rows(tape.add(h, ffn));
    }
    return h;
  }

  const Value& psp_head_w() const { return w_psp_; }
  const Value& psp_head_b() const { return b_psp_; }

  void collect_params(const std::string& prefix, std::vector<std::pair<std::string, Value>>& out,
                      bool include_psp_head = true) const {
    out.emplace_back(prefix + ".word", word_);
    out.emplace_back(prefix + ".speaker", speaker_);
    out.emplace_back(prefix + ".pos", pos_);
    out.emplace_back(prefix + ".prd", prd_);
    out.emplace_back(prefix + ".w_in", w_in_);
    for (size_t l = 0; l < layers_.size(); ++l) {
      std::string lp = prefix + ".l" + std::to_string(l);
      out.emplace_back(lp + ".wq", layers_[l].wq);
      out.emplace_back(lp + ".wk", layers_[l].wk);
      out.emplace_back(lp + ".wv", layers_[l].wv);
      out.emplace_back(lp + ".wo", layers_[l].wo);
      out.emplace_back(lp + ".w1", layers_[l].w1);
      out.emplace_back(lp + ".b1", layers_[l].b1);
      out.emplace_back(lp + ".w2", layers_[l].w2);
      out.emplace_back(lp + ".b2", layers_[l].b2);
    }
    if (include_psp_head) {
      out.emplace_back(prefix + ".w_psp", w_psp_);
      out.emplace_back(prefix + ".b_psp", b_psp_);
    }
  }

 private:
  struct Layer {
    Value wq, wk, wv, wo, w1, b1, w2, b2;
  };

  EncoderConfig cfg_;
  Value word_, speaker_, pos_, prd_, w_in_;
  std::vector<Layer> layers_;
  Value w_psp_, b_psp_;
};

// Mean cross-entropy of a linear speaker classifier at pronoun positions.
inline Value psp_loss(Tape& tape, const Value& H, const std::vector<int>& pronoun_nodes,
                      const std::vector<int>& referents, const Value& W, const Value& b) {
  if (pronoun_nodes.empty())
    throw std::invalid_argument("psp_loss: no labeled pronoun positions in this dialogue");
  if (pronoun_nodes.size() != referents.size())
    throw std::invalid_argument("psp_loss: pronoun/referent count mismatch");
  for (int r : referents)
    if (r < 0 || r >= W.shape()[1])
      throw std::out_of_range("psp_loss: referent speaker id " + std::to_string(r) +
                              " outside classifier range");
  Value rows = tape.gather_rows(H, pronoun_nodes);
  Value lp = tape.log_softmax_rows(tape.add(tape.matmul(rows, W), b));
  return tape.scale(tape.mean_pick_rows(lp, referents), -1.0);
}

}  // namespace polar
