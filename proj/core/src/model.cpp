#include "aqg/model.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "aqg/errors.hpp"

namespace aqg {

using Var = Graph::Var;

// ---------------------------------------------------------------------------
// Config

std::string to_string(Arch a) {
  switch (a) {
    case Arch::kBiGru: return "bigru";
    case Arch::kBiLstm: return "bilstm";
    case Arch::kTransformer: return "transformer";
  }
  return "?";
}

std::string to_string(AttentionKind a) {
  return a == AttentionKind::kBahdanau ? "bahdanau" : "luong";
}

Arch arch_from_string(const std::string& s) {
  if (s == "bigru") return Arch::kBiGru;
  if (s == "bilstm") return Arch::kBiLstm;
  if (s == "transformer") return Arch::kTransformer;
  throw ConfigError("unknown arch: " + s);
}

AttentionKind attention_from_string(const std::string& s) {
  if (s == "bahdanau") return AttentionKind::kBahdanau;
  if (s == "luong") return AttentionKind::kLuong;
  throw ConfigError("unknown attention: " + s);
}

void ModelConfig::validate() const {
  if (arch == Arch::kTransformer && use_coverage)
    throw ConfigError(
        "coverage is not available with the transformer attention");
  if (hidden <= 0 || word_dim <= 0 || layers <= 0)
    throw ConfigError("model dimensions must be positive");
  if (arch == Arch::kTransformer && hidden % heads != 0)
    throw ConfigError("hidden must be divisible by heads");
  if (coverage_weight < 0.0)
    throw ConfigError("coverage_weight must be >= 0");
}

nlohmann::ordered_json ModelConfig::to_json() const {
  nlohmann::ordered_json j;
  j["arch"] = to_string(arch);
  j["attention"] = to_string(attention);
  j["use_copy"] = use_copy;
  j["use_coverage"] = use_coverage;
  j["uncased"] = uncased;
  j["word_dim"] = word_dim;
  j["ans_dim"] = ans_dim;
  j["case_dim"] = case_dim;
  j["pos_dim"] = pos_dim;
  j["ne_dim"] = ne_dim;
  j["hidden"] = hidden;
  j["layers"] = layers;
  j["heads"] = heads;
  j["coverage_weight"] = coverage_weight;
  j["coverage_in_score"] = coverage_in_score;
  j["dropout"] = dropout;
  return j;
}

ModelConfig ModelConfig::from_json(const nlohmann::ordered_json& j) {
  ModelConfig c;
  c.arch = arch_from_string(j.at("arch").get<std::string>());
  c.attention = attention_from_string(j.at("attention").get<std::string>());
  c.use_copy = j.at("use_copy").get<bool>();
  c.use_coverage = j.at("use_coverage").get<bool>();
  c.uncased = j.at("uncased").get<bool>();
  c.word_dim = j.at("word_dim").get<int>();
  c.ans_dim = j.at("ans_dim").get<int>();
  c.case_dim = j.at("case_dim").get<int>();
  c.pos_dim = j.at("pos_dim").get<int>();
  c.ne_dim = j.at("ne_dim").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.layers = j.at("layers").get<int>();
  c.heads = j.at("heads").get<int>();
  c.coverage_weight = j.at("coverage_weight").get<double>();
  c.coverage_in_score = j.at("coverage_in_score").get<bool>();
  c.dropout = j.at("dropout").get<double>();
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Encoding examples

std::string EncodedExample::surface(int ext_id, const Vocabulary& vocab) const {
  if (ext_id < vocab.size()) return vocab.token(ext_id);
  return oov_tokens.at(static_cast<size_t>(ext_id - vocab.size()));
}

EncodedExample encode_example(const PreparedExample& ex,
                              const Vocabulary& vocab, const TagVocab& pos,
                              const TagVocab& ne, bool use_copy) {
  ex.validate();
  EncodedExample out;
  out.src_tokens = ex.src;
  out.ans = ex.ans;
  out.case_feat = ex.case_feat;
  for (const auto& t : ex.pos) out.pos_ids.push_back(pos.id(t));
  for (const auto& t : ex.ne) out.ne_ids.push_back(ne.id(t));
  for (const auto& tok : ex.src) {
    int id = vocab.id(tok);
    out.src_ids.push_back(id);
    if (id != Vocabulary::kUnk) {
      out.src_ext_ids.push_back(id);
    } else {
      auto it = std::find(out.oov_tokens.begin(), out.oov_tokens.end(), tok);
      int oov = it == out.oov_tokens.end()
                    ? static_cast<int>(out.oov_tokens.size())
                    : static_cast<int>(it - out.oov_tokens.begin());
      if (it == out.oov_tokens.end()) out.oov_tokens.push_back(tok);
      out.src_ext_ids.push_back(vocab.size() + oov);
    }
  }
  out.ext_vocab_size =
      use_copy ? vocab.size() + static_cast<int>(out.oov_tokens.size())
               : vocab.size();

  // Step t consumes tgt_in[t] and predicts tgt_out[t]; there are
  // |tgt| + 1 steps (each gold token, then EOS).
  out.tgt_in.push_back(Vocabulary::kSos);
  for (const auto& tok : ex.tgt) {
    int id = vocab.id(tok);
    out.tgt_in.push_back(id);
    int out_id = id;
    if (id == Vocabulary::kUnk && use_copy) {
      auto it = std::find(out.oov_tokens.begin(), out.oov_tokens.end(), tok);
      if (it != out.oov_tokens.end())
        out_id =
            vocab.size() + static_cast<int>(it - out.oov_tokens.begin());
    }
    out.tgt_out.push_back(out_id);
  }
  out.tgt_out.push_back(Vocabulary::kEos);
  return out;
}

// ---------------------------------------------------------------------------
// Params

Parameter& ModelParams::create(const std::string& name, int rows, int cols) {
  auto [it, fresh] = table.emplace(name, Parameter(name, Tensor(rows, cols)));
  assert(fresh);
  (void)fresh;
  return it->second;
}

Parameter& ModelParams::get(const std::string& name) {
  auto it = table.find(name);
  if (it == table.end()) throw ConfigError("unknown parameter: " + name);
  return it->second;
}

const Parameter& ModelParams::get(const std::string& name) const {
  auto it = table.find(name);
  if (it == table.end()) throw ConfigError("unknown parameter: " + name);
  return it->second;
}

std::vector<Parameter*> ModelParams::all() {
  std::vector<Parameter*> out;
  for (auto& [k, v] : table) out.push_back(&v);
  return out;
}

void ModelParams::zero_grads() {
  for (auto& [k, v] : table) v.zero_grad();
}

// ---------------------------------------------------------------------------
// Graph construction

struct Seq2SeqModel::Build {
  Graph& G;
  ModelParams& P;
  const ModelConfig& cfg;
  int vocab_size;
  std::map<std::string, Var> cache;

  Build(Graph& g, ModelParams& p, const ModelConfig& c, int v)
      : G(g), P(p), cfg(c), vocab_size(v) {}

  Var p(const std::string& name) {
    auto it = cache.find(name);
    if (it != cache.end()) return it->second;
    Var v = G.param(&P.get(name));
    cache.emplace(name, v);
    return v;
  }

  Var zeros(int r, int c) { return G.constant(Tensor(r, c)); }

  // Word + feature embeddings, one row per source position.
  Var source_embeddings(const EncodedExample& ex) {
    std::vector<Var> parts = {
        G.rows_of(p("emb.word"), ex.src_ids),
        G.rows_of(p("emb.ans"), ex.ans),
        G.rows_of(p("emb.case"), ex.case_feat),
        G.rows_of(p("emb.pos"), ex.pos_ids),
        G.rows_of(p("emb.ne"), ex.ne_ids),
    };
    return G.concat_cols(parts);
  }

  bool is_lstm() const { return cfg.arch == Arch::kBiLstm; }

  // One recurrent cell step. Returns {h', c'}; c ignored for GRU.
  std::pair<Var, Var> cell(const std::string& prefix, Var x, Var h, Var c) {
    auto lin = [&](const std::string& gate) {
      Var xw = G.matmul(x, p(prefix + ".W" + gate));
      Var hu = G.matmul(h, p(prefix + ".U" + gate));
      return G.add(G.add(xw, hu), p(prefix + ".b" + gate));
    };
    if (!is_lstm()) {
      Var z = G.sigmoid(lin("z"));
      Var r = G.sigmoid(lin("r"));
      Var xw = G.matmul(x, p(prefix + ".Wh"));
      Var rh = G.mul(r, h);
      Var hu = G.matmul(rh, p(prefix + ".Uh"));
      Var htil = G.tanh_(G.add(G.add(xw, hu), p(prefix + ".bh")));
      Var keep = G.mul(G.affine(z, -1.0, 1.0), h);
      Var hn = G.add(keep, G.mul(z, htil));
      return {hn, c};
    }
    Var i = G.sigmoid(lin("i"));
    Var f = G.sigmoid(lin("f"));
    Var o = G.sigmoid(lin("o"));
    Var ctil = G.tanh_(lin("c"));
    Var cn = G.add(G.mul(f, c), G.mul(i, ctil));
    Var hn = G.mul(o, G.tanh_(cn));
    return {hn, cn};
  }

  struct Encoded {
    Var H;  // L x 2h (RNN) or L x d (transformer)
    Var dec_h0, dec_c0;
  };

  Encoded encode_rnn(const EncodedExample& ex) {
    int L = static_cast<int>(ex.src_ids.size());
    if (L == 0) throw InputError("encode: empty source");
    Var X = source_embeddings(ex);
    Var layer_in = X;
    std::vector<Var> fwd(L), bwd(L);
    for (int l = 0; l < cfg.layers; ++l) {
      std::string fp = "enc.l" + std::to_string(l) + ".fwd";
      std::string bp = "enc.l" + std::to_string(l) + ".bwd";
      Var h = zeros(1, cfg.hidden), c = zeros(1, cfg.hidden);
      for (int i = 0; i < L; ++i) {
        auto [hn, cn] = cell(fp, G.rows_of(layer_in, {i}), h, c);
        h = hn;
        c = cn;
        fwd[i] = h;
      }
      h = zeros(1, cfg.hidden);
      c = zeros(1, cfg.hidden);
      for (int i = L - 1; i >= 0; --i) {
        auto [hn, cn] = cell(bp, G.rows_of(layer_in, {i}), h, c);
        h = hn;
        c = cn;
        bwd[i] = h;
      }
      std::vector<Var> rows;
      rows.reserve(L);
      for (int i = 0; i < L; ++i)
        rows.push_back(G.concat_cols({fwd[i], bwd[i]}));
      layer_in = G.concat_rows(rows);
    }
    Encoded enc;
    enc.H = layer_in;
    Var finals = G.concat_cols({fwd[L - 1], bwd[0]});
    enc.dec_h0 =
        G.tanh_(G.add(G.matmul(finals, p("dec.init.Wh")), p("dec.init.bh")));
    if (is_lstm())
      enc.dec_c0 =
          G.tanh_(G.add(G.matmul(finals, p("dec.init.Wc")), p("dec.init.bc")));
    else
      enc.dec_c0 = zeros(1, cfg.hidden);
    return enc;
  }

  // Sinusoidal position encodings as a constant.
  Tensor positions(int len, int d) {
    Tensor t(len, d);
    for (int pos = 0; pos < len; ++pos)
      for (int i = 0; i < d; ++i) {
        double angle = pos / std::pow(10000.0, 2.0 * (i / 2) / d);
        t.at(pos, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
      }
    return t;
  }

  // Multi-head attention. Returns output (Tq x d); attn_avg (Tq x L) out
  // parameter gets the head-averaged weights.
  Var mha(const std::string& prefix, Var q_in, Var kv_in, const Tensor* mask,
          Var* attn_avg_out) {
    int dk = cfg.hidden / cfg.heads;
    std::vector<Var> heads_out;
    Var attn_sum;
    for (int h = 0; h < cfg.heads; ++h) {
      std::string hp = prefix + ".h" + std::to_string(h);
      Var Q = G.matmul(q_in, p(hp + ".Wq"));
      Var K = G.matmul(kv_in, p(hp + ".Wk"));
      Var V = G.matmul(kv_in, p(hp + ".Wv"));
      Var S = G.affine(G.matmul(Q, K, false, true), 1.0 / std::sqrt(dk), 0.0);
      if (mask) S = G.add(S, G.constant(*mask));
      Var A = G.softmax(S);
      heads_out.push_back(G.matmul(A, V));
      attn_sum = attn_sum.valid() ? G.add(attn_sum, A) : A;
    }
    if (attn_avg_out)
      *attn_avg_out = G.affine(attn_sum, 1.0 / cfg.heads, 0.0);
    Var O = G.matmul(G.concat_cols(heads_out), p(prefix + ".Wo"));
    return G.add_rowvec(O, p(prefix + ".bo"));
  }

  Var ffn(const std::string& prefix, Var x) {
    Var h = G.relu(G.add_rowvec(G.matmul(x, p(prefix + ".W1")),
                                p(prefix + ".b1")));
    return G.add_rowvec(G.matmul(h, p(prefix + ".W2")), p(prefix + ".b2"));
  }

  Var post_norm(const std::string& ln, Var x, Var sub) {
    return G.layer_norm(G.add(x, sub), p(ln + ".g"), p(ln + ".b"));
  }

  Var encode_transformer(const EncodedExample& ex) {
    int L = static_cast<int>(ex.src_ids.size());
    if (L == 0) throw InputError("encode: empty source");
    Var X = source_embeddings(ex);
    Var H = G.add_rowvec(G.matmul(X, p("tf.in.W")), p("tf.in.b"));
    H = G.add(H, G.constant(positions(L, cfg.hidden)));
    for (int l = 0; l < cfg.layers; ++l) {
      std::string lp = "tf.enc.l" + std::to_string(l);
      Var a = mha(lp + ".self", H, H, nullptr, nullptr);
      H = post_norm(lp + ".ln1", H, a);
      H = post_norm(lp + ".ln2", H, ffn(lp + ".ffn", H));
    }
    return H;
  }

  Tensor causal_mask(int t) {
    Tensor m(t, t);
    for (int i = 0; i < t; ++i)
      for (int j = i + 1; j < t; ++j) m.at(i, j) = -1e9;
    return m;
  }

  struct TfDecoded {
    Var reps;        // T x d
    Var cross_attn;  // T x L, final layer, head-averaged
  };

  TfDecoded transformer_decoder(const std::vector<int>& prefix_base_ids,
                                Var Henc) {
    int T = static_cast<int>(prefix_base_ids.size());
    assert(T > 0);
    Var Y0 = G.rows_of(p("emb.word"), prefix_base_ids);
    Var Y = G.add_rowvec(G.matmul(Y0, p("tf.dec_in.W")), p("tf.dec_in.b"));
    Y = G.add(Y, G.constant(positions(T, cfg.hidden)));
    Tensor mask = causal_mask(T);
    TfDecoded out;
    for (int l = 0; l < cfg.layers; ++l) {
      std::string lp = "tf.dec.l" + std::to_string(l);
      Var s = mha(lp + ".self", Y, Y, &mask, nullptr);
      Y = post_norm(lp + ".ln1", Y, s);
      Var cross_avg;
      Var c = mha(lp + ".cross", Y, Henc, nullptr, &cross_avg);
      Y = post_norm(lp + ".ln2", Y, c);
      Y = post_norm(lp + ".ln3", Y, ffn(lp + ".ffn", Y));
      if (l == cfg.layers - 1) out.cross_attn = cross_avg;
    }
    out.reps = Y;
    return out;
  }

  // Attention over encoder rows. Returns {weights (1 x L), context}.
  std::pair<Var, Var> attend(Var s, Var H, Var coverage) {
    Var e;
    if (cfg.attention == AttentionKind::kBahdanau) {
      Var base = G.add_rowvec(G.matmul(H, p("attn.U")),
                              G.matmul(s, p("attn.W")));
      base = G.add_rowvec(base, p("attn.b"));
      if (cfg.use_coverage && cfg.coverage_in_score && coverage.valid()) {
        Var covW = G.matmul(G.transpose(coverage), p("attn.wc"));
        base = G.add(base, covW);
      }
      e = G.matmul(p("attn.v"), G.tanh_(base), false, true);
    } else {
      e = G.matmul(G.matmul(s, p("attn.W")), H, false, true);
    }
    Var a = G.softmax(e);
    Var ctx = G.matmul(a, H);
    return {a, ctx};
  }

  // L x ext one-hot scatter matrix for the copy distribution.
  Tensor copy_matrix(const EncodedExample& ex) {
    Tensor m(static_cast<int>(ex.src_ext_ids.size()), ex.ext_vocab_size);
    for (size_t i = 0; i < ex.src_ext_ids.size(); ++i)
      m.at(static_cast<int>(i), ex.src_ext_ids[i]) = 1.0;
    return m;
  }

  struct RnnStep {
    Var h, c;
    Var attn, context, p_gen, p_final;
    Var cov_next, cov_loss;
  };

  RnnStep rnn_step(const EncodedExample& ex, int prev_base_id, Var h, Var c,
                   Var H, Var coverage, Var copyM) {
    RnnStep st;
    Var x = G.rows_of(p("emb.word"), {prev_base_id});
    auto [hn, cn] = cell("dec.cell", x, h, c);
    st.h = hn;
    st.c = cn;
    auto [a, ctx] = attend(hn, H, coverage);
    st.attn = a;
    st.context = ctx;
    Var sc = G.concat_cols({hn, ctx});
    Var p_vocab =
        G.softmax(G.add(G.matmul(sc, p("out.W")), p("out.b")));
    if (cfg.use_copy) {
      Var gen_in = G.concat_cols({ctx, hn, x});
      st.p_gen = G.sigmoid(G.add(G.matmul(gen_in, p("copy.w")), p("copy.b")));
      int n_oov = ex.ext_vocab_size - vocab_size;
      Var p_ext = n_oov > 0
                      ? G.concat_cols({p_vocab, zeros(1, n_oov)})
                      : p_vocab;
      Var gen_part = G.scale_var(p_ext, st.p_gen);
      Var copy_dist = G.matmul(a, copyM);
      Var copy_part = G.scale_var(copy_dist, G.affine(st.p_gen, -1.0, 1.0));
      st.p_final = G.add(gen_part, copy_part);
    } else {
      st.p_final = p_vocab;
    }
    if (cfg.use_coverage && coverage.valid()) {
      st.cov_loss = G.sum_all(G.emin(a, coverage));
      st.cov_next = G.add(coverage, a);
    }
    return st;
  }
};

// ---------------------------------------------------------------------------
// Model

namespace {

void init_cell_params(ModelParams& P, const std::string& prefix, int in_dim,
                      int hidden, bool lstm, std::mt19937& rng) {
  for (const auto& gate : lstm ? std::vector<std::string>{"i", "f", "o", "c"}
                               : std::vector<std::string>{"z", "r", "h"}) {
    xavier_fill(P.create(prefix + ".W" + gate, in_dim, hidden).value, rng);
    xavier_fill(P.create(prefix + ".U" + gate, hidden, hidden).value, rng);
    P.create(prefix + ".b" + gate, 1, hidden);
  }
}

}  // namespace

Seq2SeqModel::Seq2SeqModel(ModelConfig cfg, int vocab_size, int pos_vocab_size,
                           int ne_vocab_size, const EmbeddingMatrix* embeddings,
                           uint32_t seed)
    : cfg_(cfg),
      vocab_size_(vocab_size),
      pos_vocab_size_(std::max(1, pos_vocab_size)),
      ne_vocab_size_(std::max(1, ne_vocab_size)) {
  cfg_.validate();
  if (embeddings && embeddings->matrix.rows() != vocab_size)
    throw ConfigError("embedding row count does not match vocabulary size");
  std::mt19937 rng(seed);
  int h = cfg_.hidden;

  auto& word = params_.create("emb.word", vocab_size, cfg_.word_dim);
  if (embeddings) {
    word.value = embeddings->matrix;
  } else {
    uniform_fill(word.value, -0.1, 0.1, rng);
    for (int c = 0; c < cfg_.word_dim; ++c)
      word.value.at(Vocabulary::kPad, c) = 0.0;
  }
  uniform_fill(params_.create("emb.ans", 2, cfg_.ans_dim).value, -0.1, 0.1, rng);
  uniform_fill(params_.create("emb.case", 2, cfg_.case_dim).value, -0.1, 0.1,
               rng);
  uniform_fill(params_.create("emb.pos", pos_vocab_size_, cfg_.pos_dim).value,
               -0.1, 0.1, rng);
  uniform_fill(params_.create("emb.ne", ne_vocab_size_, cfg_.ne_dim).value,
               -0.1, 0.1, rng);

  bool lstm = cfg_.arch == Arch::kBiLstm;
  if (cfg_.arch != Arch::kTransformer) {
    for (int l = 0; l < cfg_.layers; ++l) {
      int in_dim = l == 0 ? cfg_.input_dim() : 2 * h;
      init_cell_params(params_, "enc.l" + std::to_string(l) + ".fwd", in_dim,
                       h, lstm, rng);
      init_cell_params(params_, "enc.l" + std::to_string(l) + ".bwd", in_dim,
                       h, lstm, rng);
    }
    init_cell_params(params_, "dec.cell", cfg_.word_dim, h, lstm, rng);
    xavier_fill(params_.create("dec.init.Wh", 2 * h, h).value, rng);
    params_.create("dec.init.bh", 1, h);
    if (lstm) {
      xavier_fill(params_.create("dec.init.Wc", 2 * h, h).value, rng);
      params_.create("dec.init.bc", 1, h);
    }
    if (cfg_.attention == AttentionKind::kBahdanau) {
      xavier_fill(params_.create("attn.W", h, h).value, rng);
      xavier_fill(params_.create("attn.U", 2 * h, h).value, rng);
      params_.create("attn.b", 1, h);
      xavier_fill(params_.create("attn.v", 1, h).value, rng);
      if (cfg_.use_coverage && cfg_.coverage_in_score)
        xavier_fill(params_.create("attn.wc", 1, h).value, rng);
    } else {
      xavier_fill(params_.create("attn.W", h, 2 * h).value, rng);
    }
    xavier_fill(params_.create("out.W", 3 * h, vocab_size).value, rng);
    params_.create("out.b", 1, vocab_size);
    if (cfg_.use_copy) {
      xavier_fill(params_.create("copy.w", 3 * h + cfg_.word_dim, 1).value,
                  rng);
      params_.create("copy.b", 1, 1);
    }
  } else {
    int d = h, dk = d / cfg_.heads, ff = 2 * d;
    xavier_fill(params_.create("tf.in.W", cfg_.input_dim(), d).value, rng);
    params_.create("tf.in.b", 1, d);
    xavier_fill(params_.create("tf.dec_in.W", cfg_.word_dim, d).value, rng);
    params_.create("tf.dec_in.b", 1, d);
    auto make_mha = [&](const std::string& prefix) {
      for (int hd = 0; hd < cfg_.heads; ++hd) {
        std::string hp = prefix + ".h" + std::to_string(hd);
        xavier_fill(params_.create(hp + ".Wq", d, dk).value, rng);
        xavier_fill(params_.create(hp + ".Wk", d, dk).value, rng);
        xavier_fill(params_.create(hp + ".Wv", d, dk).value, rng);
      }
      xavier_fill(params_.create(prefix + ".Wo", d, d).value, rng);
      params_.create(prefix + ".bo", 1, d);
    };
    auto make_ln = [&](const std::string& prefix) {
      auto& g = params_.create(prefix + ".g", 1, d);
      std::fill(g.value.data.begin(), g.value.data.end(), 1.0);
      params_.create(prefix + ".b", 1, d);
    };
    auto make_ffn = [&](const std::string& prefix) {
      xavier_fill(params_.create(prefix + ".W1", d, ff).value, rng);
      params_.create(prefix + ".b1", 1, ff);
      xavier_fill(params_.create(prefix + ".W2", ff, d).value, rng);
      params_.create(prefix + ".b2", 1, d);
    };
    for (int l = 0; l < cfg_.layers; ++l) {
      std::string ep = "tf.enc.l" + std::to_string(l);
      make_mha(ep + ".self");
      make_ln(ep + ".ln1");
      make_ln(ep + ".ln2");
      make_ffn(ep + ".ffn");
      std::string dp = "tf.dec.l" + std::to_string(l);
      make_mha(dp + ".self");
      make_mha(dp + ".cross");
      make_ln(dp + ".ln1");
      make_ln(dp + ".ln2");
      make_ln(dp + ".ln3");
      make_ffn(dp + ".ffn");
    }
    xavier_fill(params_.create("tf.out.W", d, vocab_size).value, rng);
    params_.create("tf.out.b", 1, vocab_size);
    if (cfg_.use_copy) {
      xavier_fill(params_.create("tf.copy.w", 2 * d, 1).value, rng);
      params_.create("tf.copy.b", 1, 1);
    }
  }
}

double Seq2SeqModel::example_loss(const EncodedExample& ex, bool with_grads) {
  if (ex.tgt_out.empty()) throw InputError("example with empty target");
  Graph G;
  Build B(G, params_, cfg_, vocab_size_);
  int T = static_cast<int>(ex.tgt_out.size());

  Var loss_sum, cov_sum;
  if (cfg_.arch != Arch::kTransformer) {
    auto enc = B.encode_rnn(ex);
    Var h = enc.dec_h0, c = enc.dec_c0;
    Var coverage = cfg_.use_coverage
                       ? G.constant(Tensor(1, static_cast<int>(ex.src_ids.size())))
                       : Var{};
    Var copyM = cfg_.use_copy ? G.constant(B.copy_matrix(ex)) : Var{};
    for (int t = 0; t < T; ++t) {
      int prev = ex.tgt_in[t];
      if (prev >= vocab_size_) prev = Vocabulary::kUnk;
      auto st = B.rnn_step(ex, prev, h, c, enc.H, coverage, copyM);
      h = st.h;
      c = st.c;
      Var pick = G.gather(st.p_final, {{0, ex.tgt_out[t]}});
      Var lt = G.affine(G.log_(pick), -1.0, 0.0);
      loss_sum = loss_sum.valid() ? G.add(loss_sum, lt) : lt;
      if (cfg_.use_coverage) {
        cov_sum = cov_sum.valid() ? G.add(cov_sum, st.cov_loss) : st.cov_loss;
        coverage = st.cov_next;
      }
    }
  } else {
    Var Henc = B.encode_transformer(ex);
    std::vector<int> prefix;
    for (int id : ex.tgt_in)
      prefix.push_back(id >= vocab_size_ ? Vocabulary::kUnk : id);
    auto dec = B.transformer_decoder(prefix, Henc);
    Var logits = G.add_rowvec(G.matmul(dec.reps, B.p("tf.out.W")),
                              B.p("tf.out.b"));
    Var p_vocab = G.softmax(logits);
    Var copyM = cfg_.use_copy ? G.constant(B.copy_matrix(ex)) : Var{};
    int n_oov = ex.ext_vocab_size - vocab_size_;
    for (int t = 0; t < T; ++t) {
      Var prow = G.rows_of(p_vocab, {t});
      Var p_final = prow;
      if (cfg_.use_copy) {
        Var a_row = G.rows_of(dec.cross_attn, {t});
        Var ctx = G.matmul(a_row, Henc);
        Var y = G.rows_of(dec.reps, {t});
        Var p_gen = G.sigmoid(G.add(
            G.matmul(G.concat_cols({y, ctx}), B.p("tf.copy.w")),
            B.p("tf.copy.b")));
        Var p_ext = n_oov > 0 ? G.concat_cols({prow, B.zeros(1, n_oov)}) : prow;
        Var gen_part = G.scale_var(p_ext, p_gen);
        Var copy_part =
            G.scale_var(G.matmul(a_row, copyM), G.affine(p_gen, -1.0, 1.0));
        p_final = G.add(gen_part, copy_part);
      }
      Var pick = G.gather(p_final, {{0, ex.tgt_out[t]}});
      Var lt = G.affine(G.log_(pick), -1.0, 0.0);
      loss_sum = loss_sum.valid() ? G.add(loss_sum, lt) : lt;
    }
  }

  Var total = G.affine(loss_sum, 1.0 / T, 0.0);
  if (cov_sum.valid())
    total = G.add(total, G.affine(cov_sum, cfg_.coverage_weight / T, 0.0));
  double value = G.value(total).data[0];
  if (with_grads) {
    G.backward(total);
    G.flush_grads();
  }
  return value;
}

double Seq2SeqModel::batch_loss(const std::vector<EncodedExample>& batch,
                                bool with_grads) {
  if (batch.empty()) throw InputError("empty batch");
  double sum = 0.0;
  for (const auto& ex : batch) sum += example_loss(ex, with_grads);
  if (with_grads) {
    // grads of the mean, not the sum
    double inv = 1.0 / batch.size();
    for (auto* p : params_.all())
      for (auto& gv : p->grad.data) gv *= inv;
  }
  return sum / batch.size();
}

Tensor Seq2SeqModel::encoder_matrix(const EncodedExample& ex) {
  Graph G;
  Build B(G, params_, cfg_, vocab_size_);
  Var H = cfg_.arch == Arch::kTransformer ? B.encode_transformer(ex)
                                          : B.encode_rnn(ex).H;
  return G.value(H);
}

std::pair<Tensor, Tensor> Seq2SeqModel::attend_debug(const Tensor& state,
                                                     const Tensor& enc_matrix,
                                                     const Tensor* coverage) {
  Graph G;
  Build B(G, params_, cfg_, vocab_size_);
  Var cov = coverage ? G.constant(*coverage) : Var{};
  auto [a, ctx] =
      B.attend(G.constant(state), G.constant(enc_matrix), cov);
  return {G.value(a), G.value(ctx)};
}

// ---------------------------------------------------------------------------
// DecodingSession

DecodingSession::DecodingSession(const Seq2SeqModel& model,
                                 const EncodedExample& ex)
    : model_(model), ex_(ex) {
  Graph G;
  auto& m = const_cast<Seq2SeqModel&>(model_);
  Seq2SeqModel::Build B(G, m.params_, m.cfg_, m.vocab_size_);
  if (m.cfg_.arch != Arch::kTransformer) {
    auto enc = B.encode_rnn(ex_);
    enc_h_ = G.value(enc.H);
    dec_init_h_ = G.value(enc.dec_h0);
    dec_init_c_ = G.value(enc.dec_c0);
  } else {
    enc_h_ = G.value(B.encode_transformer(ex_));
  }
}

int DecodingSession::ext_vocab_size() const { return ex_.ext_vocab_size; }

DecoderState DecodingSession::initial() const {
  DecoderState st;
  st.h = dec_init_h_;
  st.c = dec_init_c_;
  st.coverage = Tensor(1, static_cast<int>(ex_.src_ids.size()));
  return st;
}

StepResult DecodingSession::step(const DecoderState& state, int prev_token,
                                 DecoderState* next) const {
  auto& m = const_cast<Seq2SeqModel&>(model_);
  const ModelConfig& cfg = m.cfg_;
  Graph G;
  Seq2SeqModel::Build B(G, m.params_, cfg, m.vocab_size_);
  StepResult out;
  int prev_base =
      prev_token >= m.vocab_size_ ? Vocabulary::kUnk : prev_token;

  if (cfg.arch != Arch::kTransformer) {
    Var H = G.constant(enc_h_);
    Var h = G.constant(state.h), c = G.constant(state.c);
    Var coverage = cfg.use_coverage ? G.constant(state.coverage) : Var{};
    Var copyM = cfg.use_copy ? G.constant(B.copy_matrix(ex_)) : Var{};
    auto st = B.rnn_step(ex_, prev_base, h, c, H, coverage, copyM);
    out.probs = G.value(st.p_final).data;
    out.attn = G.value(st.attn).data;
    out.p_gen = cfg.use_copy ? G.value(st.p_gen).data[0] : 1.0;
    if (cfg.use_coverage) out.coverage = G.value(st.cov_next).data;
    if (next) {
      next->h = G.value(st.h);
      next->c = G.value(st.c);
      next->coverage =
          cfg.use_coverage ? G.value(st.cov_next) : state.coverage;
      next->prefix = state.prefix;
    }
  } else {
    std::vector<int> prefix = state.prefix;
    prefix.push_back(prev_base);
    Var Henc = G.constant(enc_h_);
    auto dec = B.transformer_decoder(prefix, Henc);
    int t = static_cast<int>(prefix.size()) - 1;
    Var y = G.rows_of(dec.reps, {t});
    Var logits = G.add(G.matmul(y, B.p("tf.out.W")), B.p("tf.out.b"));
    Var prow = G.softmax(logits);
    Var a_row = G.rows_of(dec.cross_attn, {t});
    if (cfg.use_copy) {
      int n_oov = ex_.ext_vocab_size - m.vocab_size_;
      Var ctx = G.matmul(a_row, Henc);
      Var p_gen = G.sigmoid(
          G.add(G.matmul(G.concat_cols({y, ctx}), B.p("tf.copy.w")),
                B.p("tf.copy.b")));
      Var p_ext = n_oov > 0 ? G.concat_cols({prow, B.zeros(1, n_oov)}) : prow;
      Var copyM = G.constant(B.copy_matrix(ex_));
      Var p_final =
          G.add(G.scale_var(p_ext, p_gen),
                G.scale_var(G.matmul(a_row, copyM), G.affine(p_gen, -1.0, 1.0)));
      out.probs = G.value(p_final).data;
      out.p_gen = G.value(p_gen).data[0];
    } else {
      out.probs = G.value(prow).data;
      out.p_gen = 1.0;
    }
    out.attn = G.value(a_row).data;
    if (next) {
      next->prefix = prefix;
      next->coverage = state.coverage;
    }
  }
  return out;
}

}  // namespace aqg
