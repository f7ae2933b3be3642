#include "aqg/train.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "aqg/errors.hpp"

namespace aqg {

// ---------------------------------------------------------------------------
// Checkpoint I/O

Checkpoint make_checkpoint(const Seq2SeqModel& model, const Vocabulary& vocab,
                           const TagVocab& pos, const TagVocab& ne,
                           std::vector<EpochStats> history) {
  Checkpoint ck;
  ck.config = model.config();
  ck.vocab_tokens = vocab.tokens();
  ck.pos_tags = pos.tags();
  ck.ne_tags = ne.tags();
  ck.vocab_fingerprint = vocab.fingerprint();
  for (const auto& [name, p] : model.params().table) ck.params[name] = p.value;
  ck.history = std::move(history);
  return ck;
}

namespace {

constexpr char kMagic[] = "AQGCKPT";

void write_u64(std::ostream& out, uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), 8);
}

uint64_t read_u64(std::istream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  if (!in) throw DataError("checkpoint: truncated file");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  nlohmann::ordered_json header;
  header["version"] = ckpt.version;
  header["config"] = ckpt.config.to_json();
  header["vocab_fingerprint"] = ckpt.vocab_fingerprint;
  header["vocab"] = ckpt.vocab_tokens;
  header["pos_tags"] = ckpt.pos_tags;
  header["ne_tags"] = ckpt.ne_tags;
  nlohmann::ordered_json hist = nlohmann::ordered_json::array();
  for (const auto& e : ckpt.history)
    hist.push_back({{"train_loss", e.train_loss}, {"val_loss", e.val_loss}});
  header["history"] = hist;
  header["n_params"] = ckpt.params.size();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  out << kMagic << "\n" << header.dump() << "\n";
  out.put('\0');
  for (const auto& [name, t] : ckpt.params) {
    write_u64(out, name.size());
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u64(out, static_cast<uint64_t>(t.rows()));
    write_u64(out, static_cast<uint64_t>(t.cols()));
    write_u64(out, t.size() * sizeof(double));
    // doubles are stored little-endian; this build assumes an LE host
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!out) throw IoError("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path,
                           std::optional<uint64_t> expected_fingerprint) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  std::string magic, header_line;
  if (!std::getline(in, magic) || magic != kMagic)
    throw DataError("checkpoint: bad magic in " + path);
  if (!std::getline(in, header_line))
    throw DataError("checkpoint: missing header");
  if (in.get() != '\0') throw DataError("checkpoint: malformed header end");

  nlohmann::ordered_json header;
  try {
    header = nlohmann::ordered_json::parse(header_line);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("checkpoint: bad header JSON: ") + e.what());
  }
  Checkpoint ck;
  ck.version = header.at("version").get<int>();
  if (ck.version != 1)
    throw DataError("checkpoint: unsupported version " +
                    std::to_string(ck.version));
  ck.config = ModelConfig::from_json(header.at("config"));
  ck.vocab_fingerprint = header.at("vocab_fingerprint").get<uint64_t>();
  ck.vocab_tokens = header.at("vocab").get<std::vector<std::string>>();
  ck.pos_tags = header.at("pos_tags").get<std::vector<std::string>>();
  ck.ne_tags = header.at("ne_tags").get<std::vector<std::string>>();
  for (const auto& e : header.at("history"))
    ck.history.push_back(
        {e.at("train_loss").get<double>(), e.at("val_loss").get<double>()});
  size_t n_params = header.at("n_params").get<size_t>();

  if (expected_fingerprint && *expected_fingerprint != ck.vocab_fingerprint)
    throw DataError("checkpoint: vocabulary fingerprint mismatch");

  for (size_t i = 0; i < n_params; ++i) {
    uint64_t name_len = read_u64(in);
    std::string name(name_len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(name_len));
    uint64_t rows = read_u64(in), cols = read_u64(in), bytes = read_u64(in);
    if (!in || bytes != rows * cols * sizeof(double))
      throw DataError("checkpoint: corrupt tensor header for " + name);
    Tensor t(static_cast<int>(rows), static_cast<int>(cols));
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(bytes));
    if (!in) throw DataError("checkpoint: truncated tensor payload for " + name);
    ck.params.emplace(std::move(name), std::move(t));
  }
  // verify the recorded fingerprint matches the stored vocabulary
  Vocabulary v = Vocabulary::from_tokens(ck.vocab_tokens);
  if (v.fingerprint() != ck.vocab_fingerprint)
    throw DataError("checkpoint: stored vocabulary does not match fingerprint");
  return ck;
}

Vocabulary vocab_from_checkpoint(const Checkpoint& ckpt) {
  return Vocabulary::from_tokens(ckpt.vocab_tokens);
}

TagVocab pos_vocab_from_checkpoint(const Checkpoint& ckpt) {
  TagVocab tv;
  for (const auto& t : ckpt.pos_tags) tv.add(t);
  return tv;
}

TagVocab ne_vocab_from_checkpoint(const Checkpoint& ckpt) {
  TagVocab tv;
  for (const auto& t : ckpt.ne_tags) tv.add(t);
  return tv;
}

Seq2SeqModel model_from_checkpoint(const Checkpoint& ckpt) {
  Seq2SeqModel model(ckpt.config, static_cast<int>(ckpt.vocab_tokens.size()),
                     static_cast<int>(ckpt.pos_tags.size()),
                     static_cast<int>(ckpt.ne_tags.size()), nullptr, 0);
  for (auto& [name, p] : model.params().table) {
    auto it = ckpt.params.find(name);
    if (it == ckpt.params.end())
      throw DataError("checkpoint: missing parameter " + name);
    if (!(it->second.shape == p.value.shape))
      throw DataError("checkpoint: shape mismatch for " + name);
    p.value = it->second;
  }
  if (ckpt.params.size() != model.params().table.size())
    throw DataError("checkpoint: parameter set mismatch");
  return model;
}

// ---------------------------------------------------------------------------
// Optimizers

namespace {

class AdamState {
 public:
  void step(std::vector<Parameter*>& params, double lr) {
    if (m_.empty()) {
      for (auto* p : params) {
        m_.push_back(Tensor(p->value.rows(), p->value.cols()));
        v_.push_back(Tensor(p->value.rows(), p->value.cols()));
      }
    }
    ++t_;
    double b1c = 1.0 - std::pow(kBeta1, t_);
    double b2c = 1.0 - std::pow(kBeta2, t_);
    for (size_t i = 0; i < params.size(); ++i) {
      Parameter* p = params[i];
      for (size_t j = 0; j < p->value.size(); ++j) {
        double gr = p->grad.data[j];
        m_[i].data[j] = kBeta1 * m_[i].data[j] + (1.0 - kBeta1) * gr;
        v_[i].data[j] = kBeta2 * v_[i].data[j] + (1.0 - kBeta2) * gr * gr;
        double mhat = m_[i].data[j] / b1c;
        double vhat = v_[i].data[j] / b2c;
        p->value.data[j] -= lr * mhat / (std::sqrt(vhat) + kEps);
      }
    }
  }

 private:
  static constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  std::vector<Tensor> m_, v_;
  long long t_ = 0;
};

void clip_global_norm(std::vector<Parameter*>& params, double max_norm) {
  if (max_norm <= 0.0) return;
  double sq = 0.0;
  for (auto* p : params)
    for (double gv : p->grad.data) sq += gv * gv;
  double norm = std::sqrt(sq);
  if (norm > max_norm) {
    double scale = max_norm / norm;
    for (auto* p : params)
      for (auto& gv : p->grad.data) gv *= scale;
  }
}

}  // namespace

TrainResult train(Seq2SeqModel& model,
                  const std::vector<EncodedExample>& train_set,
                  const std::vector<EncodedExample>& val_set,
                  const TrainConfig& cfg) {
  if (train_set.empty()) throw InputError("train: empty training set");
  TrainResult result;
  auto params = model.params().all();
  AdamState adam;

  auto eval_loss = [&](const std::vector<EncodedExample>& xs) {
    if (xs.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& ex : xs) sum += model.example_loss(ex, false);
    return sum / xs.size();
  };

  std::map<std::string, Tensor> best_params;
  auto snapshot = [&]() {
    best_params.clear();
    for (const auto& [name, p] : model.params().table)
      best_params[name] = p.value;
  };
  auto restore = [&]() {
    if (best_params.empty()) return;
    for (auto& [name, p] : model.params().table) p.value = best_params[name];
  };

  double best_val = 1e300;
  int bad_epochs = 0;
  std::vector<size_t> order(train_set.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::mt19937 rng(cfg.seed + static_cast<uint32_t>(epoch));
    std::shuffle(order.begin(), order.end(), rng);

    double epoch_sum = 0.0;
    size_t n_batches = 0;
    bool diverged = false;
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(cfg.batch_size)) {
      std::vector<EncodedExample> batch;
      for (size_t i = start;
           i < std::min(order.size(), start + cfg.batch_size); ++i)
        batch.push_back(train_set[order[i]]);
      model.params().zero_grads();
      double loss = model.batch_loss(batch, true);
      if (std::isnan(loss) || std::isinf(loss)) {
        diverged = true;
        break;
      }
      clip_global_norm(params, cfg.clip_norm);
      if (cfg.optimizer == Optimizer::kAdam) {
        adam.step(params, cfg.lr);
      } else {
        for (auto* p : params)
          for (size_t j = 0; j < p->value.size(); ++j)
            p->value.data[j] -= cfg.lr * p->grad.data[j];
      }
      epoch_sum += loss;
      ++n_batches;
    }
    if (diverged) {
      result.diverged = true;
      break;
    }

    EpochStats st;
    st.train_loss = n_batches ? epoch_sum / n_batches : 0.0;
    st.val_loss = val_set.empty() ? st.train_loss : eval_loss(val_set);
    result.history.push_back(st);

    if (st.val_loss < best_val) {
      best_val = st.val_loss;
      result.best_epoch = epoch;
      bad_epochs = 0;
      snapshot();
    } else {
      ++bad_epochs;
      if (cfg.patience > 0 && bad_epochs >= cfg.patience) break;
    }
  }

  restore();
  result.best_val_loss = best_val;
  return result;
}

}  // namespace aqg
