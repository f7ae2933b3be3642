#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aqg/graph.hpp"
#include "aqg/tensor.hpp"
#include "aqg/textprep.hpp"

namespace aqg {

enum class Arch { kBiGru, kBiLstm, kTransformer };
enum class AttentionKind { kBahdanau, kLuong };

std::string to_string(Arch a);
std::string to_string(AttentionKind a);
Arch arch_from_string(const std::string& s);
AttentionKind attention_from_string(const std::string& s);

struct ModelConfig {
  Arch arch = Arch::kBiGru;
  AttentionKind attention = AttentionKind::kBahdanau;  // RNN only
  bool use_copy = false;
  bool use_coverage = false;
  bool uncased = false;
  int word_dim = 300;
  int ans_dim = 4;
  int case_dim = 4;
  int pos_dim = 16;
  int ne_dim = 16;
  int hidden = 128;
  int layers = 1;  // encoder depth (RNN) / stack depth (transformer)
  int heads = 4;   // transformer
  double coverage_weight = 1.0;
  bool coverage_in_score = true;
  double dropout = 0.0;

  int feature_dim() const { return ans_dim + case_dim + pos_dim + ne_dim; }
  int input_dim() const { return word_dim + feature_dim(); }
  // Throws ConfigError (e.g. transformer + coverage).
  void validate() const;

  nlohmann::ordered_json to_json() const;
  static ModelConfig from_json(const nlohmann::ordered_json& j);
};

// Open-ended tag label set; id 0 is the unknown tag.
class TagVocab {
 public:
  TagVocab() { add("UNK-TAG"); }
  int id(const std::string& tag) const {
    auto it = map_.find(tag);
    return it == map_.end() ? 0 : it->second;
  }
  int add(const std::string& tag) {
    auto it = map_.find(tag);
    if (it != map_.end()) return it->second;
    int id = static_cast<int>(tags_.size());
    map_.emplace(tag, id);
    tags_.push_back(tag);
    return id;
  }
  int size() const { return static_cast<int>(tags_.size()); }
  const std::vector<std::string>& tags() const { return tags_; }

 private:
  std::vector<std::string> tags_;
  std::map<std::string, int> map_;
};

// Example resolved to ids. Extended ids cover vocab + this example's
// source OOV tokens (ids >= |V|).
struct EncodedExample {
  std::vector<int> src_ids;      // base vocab, UNK for OOV
  std::vector<int> src_ext_ids;  // base id, or |V| + per-example OOV index
  std::vector<std::string> src_tokens;
  std::vector<std::string> oov_tokens;
  std::vector<int> ans, case_feat, pos_ids, ne_ids;
  std::vector<int> tgt_in;   // SOS, then gold base ids (teacher forcing)
  std::vector<int> tgt_out;  // gold ids + EOS; extended ids when copying
  int ext_vocab_size = 0;

  std::string surface(int ext_id, const Vocabulary& vocab) const;
};

EncodedExample encode_example(const PreparedExample& ex,
                              const Vocabulary& vocab, const TagVocab& pos,
                              const TagVocab& ne, bool use_copy);

struct ModelParams {
  // std::map keeps the iteration order stable across runs.
  std::map<std::string, Parameter> table;

  Parameter& create(const std::string& name, int rows, int cols);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  std::vector<Parameter*> all();
  void zero_grads();
};

// One decoding step's observable output.
struct StepResult {
  std::vector<double> probs;  // extended vocab (base only when no copy)
  std::vector<double> attn;   // over source positions
  double p_gen = 1.0;
  std::vector<double> coverage;  // after this step (RNN coverage only)
};

struct DecoderState {
  Tensor h, c;              // RNN
  std::vector<int> prefix;  // transformer: base-vocab prefix incl. SOS
  Tensor coverage;          // 1 x L
};

class Seq2SeqModel;

// Anything beam search can drive: a decoding step function plus an
// initial state.
class Stepper {
 public:
  virtual ~Stepper() = default;
  virtual DecoderState initial() const = 0;
  virtual StepResult step(const DecoderState& state, int prev_token,
                          DecoderState* next) const = 0;
  virtual int ext_vocab_size() const = 0;
};

// Read-only per-example decoding handle; source is encoded once.
class DecodingSession : public Stepper {
 public:
  DecodingSession(const Seq2SeqModel& model, const EncodedExample& ex);
  DecoderState initial() const override;
  // prev_token is an extended-vocab id; OOV ids embed as UNK.
  StepResult step(const DecoderState& state, int prev_token,
                  DecoderState* next) const override;
  int ext_vocab_size() const override;
  const EncodedExample& example() const { return ex_; }

 private:
  const Seq2SeqModel& model_;
  EncodedExample ex_;
  Tensor enc_h_;       // L x enc_width
  Tensor dec_init_h_;  // RNN
  Tensor dec_init_c_;
};

class Seq2SeqModel {
 public:
  // Deterministic for a fixed seed. `embeddings` may be null (random init);
  // otherwise its row count must equal vocab_size.
  Seq2SeqModel(ModelConfig cfg, int vocab_size, int pos_vocab_size,
               int ne_vocab_size, const EmbeddingMatrix* embeddings,
               uint32_t seed);

  const ModelConfig& config() const { return cfg_; }
  ModelParams& params() { return params_; }
  const ModelParams& params() const { return params_; }
  int vocab_size() const { return vocab_size_; }
  int pos_vocab_size() const { return pos_vocab_size_; }
  int ne_vocab_size() const { return ne_vocab_size_; }

  // Mean loss over the batch (NLL + coverage term when enabled);
  // accumulates into parameter grads when asked.
  double batch_loss(const std::vector<EncodedExample>& batch, bool with_grads);
  double example_loss(const EncodedExample& ex, bool with_grads);

  // Encoder output matrix (row per source position); test/diagnostic surface.
  Tensor encoder_matrix(const EncodedExample& ex);

  // Attention weights and context for an arbitrary decoder state / encoder
  // matrix (diagnostic; RNN only). `coverage` may be null.
  std::pair<Tensor, Tensor> attend_debug(const Tensor& state,
                                         const Tensor& enc_matrix,
                                         const Tensor* coverage);

 private:
  friend class DecodingSession;
  ModelConfig cfg_;
  int vocab_size_, pos_vocab_size_, ne_vocab_size_;
  ModelParams params_;

  struct Build;  // graph-construction helpers (model.cpp)
};

}  // namespace aqg
