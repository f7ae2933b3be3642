#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "aqg/model.hpp"

namespace aqg {

enum class Optimizer { kSgd, kAdam };

struct TrainConfig {
  int epochs = 20;
  int batch_size = 16;
  Optimizer optimizer = Optimizer::kAdam;
  double lr = 1e-3;
  double clip_norm = 5.0;
  uint32_t seed = 42;
  int patience = 0;  // 0 disables early stopping
  double validation_fraction = 0.1;
};

struct EpochStats {
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct Checkpoint {
  int version = 1;
  ModelConfig config;
  std::vector<std::string> vocab_tokens;  // includes the 4 specials
  std::vector<std::string> pos_tags, ne_tags;
  uint64_t vocab_fingerprint = 0;
  std::map<std::string, Tensor> params;
  std::vector<EpochStats> history;
};

Checkpoint make_checkpoint(const Seq2SeqModel& model, const Vocabulary& vocab,
                           const TagVocab& pos, const TagVocab& ne,
                           std::vector<EpochStats> history);

// Single file: JSON text header (version, config, fingerprint, history)
// terminated by a newline + NUL, then length-prefixed little-endian f64
// tensor payloads. Round-trips bit-exactly.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
// Throws DataError on corruption, unsupported version, or (when given) a
// fingerprint mismatch.
Checkpoint load_checkpoint(const std::string& path,
                           std::optional<uint64_t> expected_fingerprint = {});

Seq2SeqModel model_from_checkpoint(const Checkpoint& ckpt);
Vocabulary vocab_from_checkpoint(const Checkpoint& ckpt);
TagVocab pos_vocab_from_checkpoint(const Checkpoint& ckpt);
TagVocab ne_vocab_from_checkpoint(const Checkpoint& ckpt);

// Seeded shuffle, then partition; `fraction` is the first (train) share.
template <typename T>
std::pair<std::vector<T>, std::vector<T>> split_train_val(
    const std::vector<T>& xs, double fraction, uint32_t seed) {
  std::vector<size_t> order(xs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  size_t n_train = static_cast<size_t>(
      std::llround(fraction * static_cast<double>(xs.size())));
  n_train = std::min(n_train, xs.size());
  std::pair<std::vector<T>, std::vector<T>> out;
  for (size_t i = 0; i < order.size(); ++i)
    (i < n_train ? out.first : out.second).push_back(xs[order[i]]);
  return out;
}

struct TrainResult {
  std::vector<EpochStats> history;
  bool diverged = false;
  double best_val_loss = 0.0;
  int best_epoch = -1;
};

// Teacher-forced training with gradient-norm clipping and best-validation
// parameter retention. On return the model holds the best parameters.
// Divergence (NaN loss) stops training; the last good parameters survive.
TrainResult train(Seq2SeqModel& model,
                  const std::vector<EncodedExample>& train_set,
                  const std::vector<EncodedExample>& val_set,
                  const TrainConfig& cfg);

}  // namespace aqg
