// aqg: repair translated QA corpora, prepare training data, train and run
// question-generation models, and score generated output.

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "aqg/corpus.hpp"
#include "aqg/decode.hpp"
#include "aqg/errors.hpp"
#include "aqg/metrics.hpp"
#include "aqg/model.hpp"
#include "aqg/repair.hpp"
#include "aqg/textprep.hpp"
#include "aqg/train.hpp"

namespace {

using aqg::DataError;
using nlohmann::json;
using nlohmann::ordered_json;

// Binds CLI options so a --config JSON file can fill any flag the user did
// not pass explicitly (flags always win).
class ConfigBinder {
 public:
  explicit ConfigBinder(CLI::App* cmd) : cmd_(cmd) {
    cmd->add_option("--config", config_path_,
                    "JSON config file; explicit flags override its values");
  }

  template <typename T>
  CLI::Option* opt(const std::string& flag, T& var, const std::string& desc) {
    CLI::Option* o = cmd_->add_option(flag, var, desc);
    bind(o, [&var](const json& j) { var = j.get<T>(); });
    return o;
  }

  CLI::Option* flag(const std::string& name, bool& var,
                    const std::string& desc) {
    CLI::Option* o = cmd_->add_flag(name, var, desc);
    bind(o, [&var](const json& j) { var = j.get<bool>(); });
    return o;
  }

  // Call after parsing: merge the config file, then echo the resolved view.
  void resolve() {
    if (!config_path_.empty()) {
      std::ifstream in(config_path_);
      if (!in) throw aqg::IoError("cannot open config: " + config_path_);
      json cfg;
      try {
        cfg = json::parse(in);
      } catch (const json::parse_error& e) {
        throw aqg::ParseError("config " + config_path_ + ": " + e.what());
      }
      for (auto& [o, setter] : bound_) {
        std::string key = key_of(o);
        if (!key.empty() && o->count() == 0 && cfg.contains(key))
          setter(cfg.at(key));
      }
      for (auto it = cfg.begin(); it != cfg.end(); ++it) {
        bool known = false;
        for (auto& [o, setter] : bound_)
          if (key_of(o) == it.key()) known = true;
        if (!known)
          std::cerr << "[aqg] warning: config key '" << it.key()
                    << "' is not a flag of this subcommand\n";
      }
    }
  }

  void echo(const std::string& subcommand,
            const std::function<void(ordered_json&)>& fill) const {
    ordered_json resolved;
    resolved["subcommand"] = subcommand;
    fill(resolved);
    std::cerr << "[aqg] resolved config: " << resolved.dump() << "\n";
  }

 private:
  static std::string key_of(CLI::Option* o) {
    auto names = o->get_lnames();
    return names.empty() ? std::string() : names.front();
  }
  void bind(CLI::Option* o, std::function<void(const json&)> setter) {
    bound_.emplace_back(o, std::move(setter));
  }
  CLI::App* cmd_;
  std::string config_path_;
  std::vector<std::pair<CLI::Option*, std::function<void(const json&)>>> bound_;
};

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw aqg::IoError("cannot open " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

void write_lines(const std::vector<std::string>& lines,
                 const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw aqg::IoError("cannot write " + path);
  for (const auto& l : lines) out << l << "\n";
}

std::string join(const std::vector<std::string>& tokens) {
  std::string s;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) s.push_back(' ');
    s += tokens[i];
  }
  return s;
}

// ---------------------------------------------------------------------------
// Shared option bundles

struct ModelFlags {
  std::string arch = "bigru";
  std::string attention = "bahdanau";
  bool copy = false;
  bool coverage = false;
  bool uncased = false;
  int word_dim = 300;
  int hidden = 128;
  int layers = 1;
  int heads = 4;
  double coverage_weight = 1.0;

  void add(ConfigBinder& b) {
    b.opt("--arch", arch, "bigru | bilstm | transformer");
    b.opt("--attention", attention, "bahdanau | luong (RNN only)");
    b.flag("--copy", copy, "enable the copy (pointer-generator) mechanism");
    b.flag("--coverage", coverage, "enable the coverage mechanism (RNN only)");
    b.flag("--uncased", uncased, "model works on lowercased text");
    b.opt("--word-dim", word_dim, "word embedding dimension");
    b.opt("--hidden", hidden, "hidden size");
    b.opt("--layers", layers, "encoder / stack depth");
    b.opt("--heads", heads, "transformer attention heads");
    b.opt("--coverage-weight", coverage_weight, "coverage loss weight");
  }

  aqg::ModelConfig to_config() const {
    aqg::ModelConfig cfg;
    cfg.arch = aqg::arch_from_string(arch);
    cfg.attention = aqg::attention_from_string(attention);
    cfg.use_copy = copy;
    cfg.use_coverage = coverage;
    cfg.uncased = uncased;
    cfg.word_dim = word_dim;
    cfg.hidden = hidden;
    cfg.layers = layers;
    cfg.heads = heads;
    cfg.coverage_weight = coverage_weight;
    cfg.validate();
    return cfg;
  }
};

struct TrainFlags {
  int epochs = 20;
  int batch_size = 16;
  double lr = 1e-3;
  std::string optimizer = "adam";
  double clip_norm = 5.0;
  uint32_t seed = 42;
  int patience = 0;
  int vocab_size = 50000;
  std::string embeddings;

  void add(ConfigBinder& b) {
    b.opt("--epochs", epochs, "training epochs");
    b.opt("--batch-size", batch_size, "examples per optimizer step");
    b.opt("--lr", lr, "learning rate");
    b.opt("--optimizer", optimizer, "adam | sgd");
    b.opt("--clip-norm", clip_norm, "global gradient-norm clip (0 disables)");
    b.opt("--seed", seed, "RNG seed (init, shuffling, splits)");
    b.opt("--patience", patience,
          "stop after this many non-improving epochs (0 disables)");
    b.opt("--vocab-size", vocab_size, "maximum vocabulary size");
    b.opt("--embeddings", embeddings,
          "word-vector text file ('count dim' header)");
  }

  aqg::TrainConfig to_config() const {
    aqg::TrainConfig tc;
    tc.epochs = epochs;
    tc.batch_size = batch_size;
    tc.lr = lr;
    if (optimizer == "adam")
      tc.optimizer = aqg::Optimizer::kAdam;
    else if (optimizer == "sgd")
      tc.optimizer = aqg::Optimizer::kSgd;
    else
      throw aqg::ConfigError("unknown optimizer: " + optimizer);
    tc.clip_norm = clip_norm;
    tc.seed = seed;
    tc.patience = patience;
    return tc;
  }
};

// ---------------------------------------------------------------------------
// Subcommand bodies

int run_repair(const std::string& input, const std::string& output,
               double threshold, int threads) {
  auto articles = aqg::load_squad(input);
  aqg::RepairConfig cfg;
  cfg.threshold = threshold;
  aqg::RepairReport rep = aqg::repair_corpus(articles, cfg, threads);
  aqg::save_squad(articles, output);
  std::cerr << "[aqg] repair: exact=" << rep.exact
            << " repaired=" << rep.repaired << " not_found=" << rep.not_found
            << " total=" << rep.total() << "\n";
  return 0;
}

int run_prepare(const std::string& input, const std::string& output,
                bool uncased, bool drop_impossible, bool percentile,
                const std::string& pos_path, const std::string& ne_path) {
  auto articles = aqg::load_squad(input);
  aqg::PrepareOptions opt;
  opt.uncased = uncased;
  opt.drop_impossible = drop_impossible;
  opt.filter.percentile_mode = percentile;
  if (!pos_path.empty()) opt.pos_tags = aqg::load_tag_file(pos_path);
  if (!ne_path.empty()) opt.ne_tags = aqg::load_tag_file(ne_path);
  auto examples = aqg::prepare(articles, opt);
  size_t n = aqg::persist_examples(examples, output);
  std::cerr << "[aqg] prepare: wrote " << n << " examples to " << output
            << "\n";
  return 0;
}

int run_split(const std::string& input, const std::string& train_path,
              const std::string& val_path, double ratio, uint32_t seed) {
  auto examples = aqg::load_examples(input);
  auto [tr, va] = aqg::split_train_val(examples, ratio, seed);
  aqg::persist_examples(tr, train_path);
  aqg::persist_examples(va, val_path);
  std::cerr << "[aqg] split: " << tr.size() << " train / " << va.size()
            << " val (ratio " << ratio << ", seed " << seed << ")\n";
  return 0;
}

struct VocabBundle {
  aqg::Vocabulary vocab;
  aqg::TagVocab pos, ne;
};

VocabBundle build_vocabs(const std::vector<aqg::PreparedExample>& examples,
                         int max_vocab) {
  VocabBundle b;
  std::vector<std::vector<std::string>> streams;
  for (const auto& e : examples) {
    streams.push_back(e.src);
    streams.push_back(e.tgt);
    for (const auto& t : e.pos) b.pos.add(t);
    for (const auto& t : e.ne) b.ne.add(t);
  }
  b.vocab = aqg::build_vocab(streams, max_vocab);
  return b;
}

std::vector<aqg::EncodedExample> encode_all(
    const std::vector<aqg::PreparedExample>& examples, const VocabBundle& vb,
    bool use_copy) {
  std::vector<aqg::EncodedExample> out;
  out.reserve(examples.size());
  for (const auto& e : examples)
    out.push_back(aqg::encode_example(e, vb.vocab, vb.pos, vb.ne, use_copy));
  return out;
}

int run_train(const std::string& data_path, const std::string& val_path,
              const std::string& output, const ModelFlags& mf,
              const TrainFlags& tf, double val_fraction) {
  auto train_examples = aqg::load_examples(data_path);
  if (train_examples.empty())
    throw aqg::InputError("training data is empty: " + data_path);
  std::vector<aqg::PreparedExample> val_examples;
  if (!val_path.empty()) {
    val_examples = aqg::load_examples(val_path);
  } else if (val_fraction > 0.0) {
    auto [tr, va] =
        aqg::split_train_val(train_examples, 1.0 - val_fraction, tf.seed);
    train_examples = std::move(tr);
    val_examples = std::move(va);
  }

  VocabBundle vb = build_vocabs(train_examples, tf.vocab_size);
  aqg::ModelConfig cfg = mf.to_config();

  const aqg::EmbeddingMatrix* emb_ptr = nullptr;
  aqg::EmbeddingMatrix emb;
  if (!tf.embeddings.empty()) {
    emb = aqg::load_word_vectors(tf.embeddings, vb.vocab, cfg.word_dim,
                                 tf.seed);
    emb_ptr = &emb;
  }

  aqg::Seq2SeqModel model(cfg, vb.vocab.size(), vb.pos.size(), vb.ne.size(),
                          emb_ptr, tf.seed);
  auto enc_train = encode_all(train_examples, vb, cfg.use_copy);
  auto enc_val = encode_all(val_examples, vb, cfg.use_copy);
  aqg::TrainConfig tc = tf.to_config();

  std::cerr << "[aqg] train: " << enc_train.size() << " train / "
            << enc_val.size() << " val examples, vocab " << vb.vocab.size()
            << "\n";
  aqg::TrainResult res = aqg::train(model, enc_train, enc_val, tc);
  for (size_t i = 0; i < res.history.size(); ++i)
    std::cerr << "[aqg] epoch " << i + 1 << ": train_loss "
              << res.history[i].train_loss << " val_loss "
              << res.history[i].val_loss << "\n";
  if (res.diverged) std::cerr << "[aqg] warning: training diverged (NaN)\n";

  aqg::Checkpoint ck =
      aqg::make_checkpoint(model, vb.vocab, vb.pos, vb.ne, res.history);
  aqg::save_checkpoint(ck, output);
  std::cerr << "[aqg] checkpoint written to " << output << "\n";
  return res.diverged ? 2 : 0;
}

int run_generate(const std::string& ckpt_path, const std::string& input,
                 const std::string& output, int beam, int max_len,
                 double length_penalty) {
  aqg::Checkpoint ck = aqg::load_checkpoint(ckpt_path);
  aqg::Seq2SeqModel model = aqg::model_from_checkpoint(ck);
  aqg::Vocabulary vocab = aqg::vocab_from_checkpoint(ck);
  aqg::TagVocab pos = aqg::pos_vocab_from_checkpoint(ck);
  aqg::TagVocab ne = aqg::ne_vocab_from_checkpoint(ck);

  auto examples = aqg::load_examples(input);
  std::vector<std::string> lines;
  lines.reserve(examples.size());
  for (const auto& pe : examples) {
    aqg::EncodedExample ex = aqg::encode_example(pe, vocab, pos, ne,
                                                 model.config().use_copy);
    aqg::DecodingSession sess(model, ex);
    aqg::Hypothesis best;
    if (beam <= 1) {
      best = aqg::greedy_decode(sess, max_len);
    } else {
      auto beams = aqg::beam_search(sess, beam, max_len, length_penalty);
      if (beams.empty()) throw aqg::NumericError("beam search returned nothing");
      best = beams.front();
    }
    lines.push_back(join(aqg::replace_unk(best, ex, vocab)));
  }
  if (output.empty() || output == "-") {
    for (const auto& l : lines) std::cout << l << "\n";
  } else {
    write_lines(lines, output);
    std::cerr << "[aqg] generate: wrote " << lines.size() << " questions to "
              << output << "\n";
  }
  return 0;
}

int run_eval(const std::string& hyp, const std::string& ref, double beta) {
  aqg::MetricReport rep = aqg::evaluate_corpus(hyp, ref, beta);
  std::ostringstream table;
  table.setf(std::ios::fixed);
  table.precision(2);
  table << "metric    score\n"
        << "BLEU-1    " << rep.bleu1 << "\n"
        << "BLEU-2    " << rep.bleu2 << "\n"
        << "BLEU-3    " << rep.bleu3 << "\n"
        << "BLEU-4    " << rep.bleu4 << "\n"
        << "ROUGE-L   " << rep.rouge_l << "\n";
  std::cout << table.str();
  ordered_json j;
  j["bleu1"] = rep.bleu1;
  j["bleu2"] = rep.bleu2;
  j["bleu3"] = rep.bleu3;
  j["bleu4"] = rep.bleu4;
  j["rouge_l"] = rep.rouge_l;
  j["n_examples"] = rep.n_examples;
  std::cout << j.dump() << "\n";
  return 0;
}

int run_stats(const std::string& input) {
  auto examples = aqg::load_examples(input);
  aqg::CorpusStats st = aqg::corpus_stats(examples);
  ordered_json j;
  j["n_examples"] = st.n_examples;
  j["max_question_tokens"] = st.max_question_tokens;
  j["max_answer_tokens"] = st.max_answer_tokens;
  j["max_source_tokens"] = st.max_source_tokens;
  std::cout << j.dump() << "\n";
  return 0;
}

int run_pipeline(const std::string& input, const std::string& out_dir,
                 const ModelFlags& mf, const TrainFlags& tf,
                 double repair_threshold, double split_ratio, int beam,
                 int max_len, int threads) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  auto path = [&](const std::string& name) {
    return (fs::path(out_dir) / name).string();
  };

  int rc = run_repair(input, path("repaired.json"), repair_threshold, threads);
  if (rc != 0) return rc;
  rc = run_prepare(path("repaired.json"), path("data.jsonl"), mf.uncased,
                   false, false, "", "");
  if (rc != 0) return rc;
  rc = run_split(path("data.jsonl"), path("train.jsonl"), path("val.jsonl"),
                 split_ratio, tf.seed);
  if (rc != 0) return rc;
  rc = run_train(path("train.jsonl"), path("val.jsonl"), path("model.ckpt"),
                 mf, tf, 0.0);
  if (rc != 0) return rc;
  rc = run_generate(path("model.ckpt"), path("val.jsonl"), path("hyp.txt"),
                    beam, max_len, 0.0);
  if (rc != 0) return rc;

  auto val = aqg::load_examples(path("val.jsonl"));
  std::vector<std::string> refs;
  for (const auto& e : val) refs.push_back(join(e.tgt));
  write_lines(refs, path("ref.txt"));

  aqg::MetricReport rep = aqg::evaluate_corpus(path("hyp.txt"), path("ref.txt"));
  ordered_json j;
  j["bleu1"] = rep.bleu1;
  j["bleu2"] = rep.bleu2;
  j["bleu3"] = rep.bleu3;
  j["bleu4"] = rep.bleu4;
  j["rouge_l"] = rep.rouge_l;
  j["n_examples"] = rep.n_examples;
  {
    std::ofstream out(path("report.json"), std::ios::binary);
    if (!out) throw aqg::IoError("cannot write report.json");
    out << j.dump(1) << "\n";
  }
  std::cout << j.dump() << "\n";
  std::cerr << "[aqg] pipeline artifacts in " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"question generation toolkit for translated QA corpora"};
  app.require_subcommand(1);

  // ---- repair
  auto* c_repair = app.add_subcommand(
      "repair", "recover answer offsets in a translated SQuAD file");
  ConfigBinder b_repair(c_repair);
  std::string rp_in, rp_out;
  double rp_threshold = 0.8;
  int rp_threads = 1;
  c_repair->add_option("--input", rp_in, "translated SQuAD JSON")->required();
  c_repair->add_option("--output", rp_out, "annotated SQuAD JSON")->required();
  b_repair.opt("--repair-threshold", rp_threshold,
               "minimum similarity ratio for a fuzzy match");
  b_repair.opt("--threads", rp_threads, "worker threads (1 = sequential)");

  // ---- prepare
  auto* c_prepare = app.add_subcommand(
      "prepare", "turn a repaired SQuAD file into training examples (JSONL)");
  ConfigBinder b_prepare(c_prepare);
  std::string pp_in, pp_out, pp_pos, pp_ne;
  bool pp_uncased = false, pp_drop = false, pp_pct = false;
  c_prepare->add_option("--input", pp_in, "repaired SQuAD JSON")->required();
  c_prepare->add_option("--output", pp_out, "examples JSONL")->required();
  b_prepare.flag("--uncased", pp_uncased, "lowercase src/tgt/answer text");
  b_prepare.flag("--drop-impossible", pp_drop, "drop is_impossible pairs");
  b_prepare.flag("--percentile-filter", pp_pct,
                 "filter by top-1% lengths instead of the fixed 60/20 caps");
  b_prepare.opt("--pos-tags", pp_pos, "POS tag file (token<TAB>tag lines)");
  b_prepare.opt("--ne-tags", pp_ne, "NE tag file (token<TAB>tag lines)");

  // ---- split
  auto* c_split = app.add_subcommand(
      "split", "shuffle and split examples into train/validation files");
  ConfigBinder b_split(c_split);
  std::string sp_in, sp_train, sp_val;
  double sp_ratio = 0.9;
  uint32_t sp_seed = 42;
  c_split->add_option("--input", sp_in, "examples JSONL")->required();
  c_split->add_option("--train", sp_train, "train output JSONL")->required();
  c_split->add_option("--val", sp_val, "validation output JSONL")->required();
  b_split.opt("--split-ratio", sp_ratio, "train share of the data");
  b_split.opt("--split-seed", sp_seed, "shuffle seed");

  // ---- train
  auto* c_train = app.add_subcommand("train", "train a model on JSONL examples");
  ConfigBinder b_train(c_train);
  std::string tr_data, tr_val, tr_out = "model.ckpt";
  double tr_val_fraction = 0.1;
  ModelFlags tr_mf;
  TrainFlags tr_tf;
  c_train->add_option("--data", tr_data, "training examples JSONL")->required();
  b_train.opt("--val", tr_val, "validation examples JSONL");
  b_train.opt("--output", tr_out, "checkpoint path");
  b_train.opt("--val-fraction", tr_val_fraction,
              "held-out share when --val is not given");
  tr_mf.add(b_train);
  tr_tf.add(b_train);

  // ---- generate
  auto* c_gen = app.add_subcommand(
      "generate", "decode questions for JSONL examples with a checkpoint");
  ConfigBinder b_gen(c_gen);
  std::string g_ckpt, g_in, g_out;
  int g_beam = 5, g_max_len = 60;
  double g_len_pen = 0.0;
  c_gen->add_option("--checkpoint", g_ckpt, "model checkpoint")->required();
  c_gen->add_option("--input", g_in, "examples JSONL")->required();
  b_gen.opt("--output", g_out, "output text file ('-' or empty = stdout)");
  b_gen.opt("--beam", g_beam, "beam size (1 = greedy)");
  b_gen.opt("--max-len", g_max_len, "maximum generated length");
  b_gen.opt("--length-penalty", g_len_pen, "rank by score / len^p");

  // ---- eval
  auto* c_eval = app.add_subcommand(
      "eval", "score hypotheses against references (BLEU-1..4, ROUGE-L)");
  ConfigBinder b_eval(c_eval);
  std::string e_hyp, e_ref;
  double e_beta = 1.2;
  c_eval->add_option("--hyp", e_hyp, "hypotheses, one per line")->required();
  c_eval->add_option("--ref", e_ref, "references, one per line")->required();
  b_eval.opt("--beta", e_beta, "ROUGE-L F-score beta");

  // ---- stats
  auto* c_stats = app.add_subcommand("stats", "corpus statistics for JSONL examples");
  std::string st_in;
  c_stats->add_option("--input", st_in, "examples JSONL")->required();

  // ---- pipeline
  auto* c_pipe = app.add_subcommand(
      "pipeline", "repair -> prepare -> split -> train -> generate -> eval");
  ConfigBinder b_pipe(c_pipe);
  std::string pl_in, pl_dir = "pipeline_out";
  double pl_threshold = 0.8, pl_ratio = 0.9;
  int pl_beam = 5, pl_max_len = 60, pl_threads = 1;
  ModelFlags pl_mf;
  TrainFlags pl_tf;
  c_pipe->add_option("--input", pl_in, "translated SQuAD JSON")->required();
  b_pipe.opt("--output-dir", pl_dir, "artifact directory");
  b_pipe.opt("--repair-threshold", pl_threshold, "fuzzy-match threshold");
  b_pipe.opt("--split-ratio", pl_ratio, "train share of the data");
  b_pipe.opt("--beam", pl_beam, "beam size for generation");
  b_pipe.opt("--max-len", pl_max_len, "maximum generated length");
  b_pipe.opt("--threads", pl_threads, "worker threads for repair");
  pl_mf.add(b_pipe);
  pl_tf.add(b_pipe);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Collapse CLI11's per-error exit codes: 0 for --help, 1 for any
    // usage problem.
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*c_repair) {
      b_repair.resolve();
      b_repair.echo("repair", [&](ordered_json& j) {
        j["input"] = rp_in;
        j["output"] = rp_out;
        j["repair-threshold"] = rp_threshold;
        j["threads"] = rp_threads;
      });
      return run_repair(rp_in, rp_out, rp_threshold, rp_threads);
    }
    if (*c_prepare) {
      b_prepare.resolve();
      b_prepare.echo("prepare", [&](ordered_json& j) {
        j["input"] = pp_in;
        j["output"] = pp_out;
        j["uncased"] = pp_uncased;
        j["drop-impossible"] = pp_drop;
        j["percentile-filter"] = pp_pct;
        j["pos-tags"] = pp_pos;
        j["ne-tags"] = pp_ne;
      });
      return run_prepare(pp_in, pp_out, pp_uncased, pp_drop, pp_pct, pp_pos,
                         pp_ne);
    }
    if (*c_split) {
      b_split.resolve();
      b_split.echo("split", [&](ordered_json& j) {
        j["input"] = sp_in;
        j["train"] = sp_train;
        j["val"] = sp_val;
        j["split-ratio"] = sp_ratio;
        j["split-seed"] = sp_seed;
      });
      return run_split(sp_in, sp_train, sp_val, sp_ratio, sp_seed);
    }
    if (*c_train) {
      b_train.resolve();
      b_train.echo("train", [&](ordered_json& j) {
        j["data"] = tr_data;
        j["val"] = tr_val;
        j["output"] = tr_out;
        j["arch"] = tr_mf.arch;
        j["attention"] = tr_mf.attention;
        j["copy"] = tr_mf.copy;
        j["coverage"] = tr_mf.coverage;
        j["uncased"] = tr_mf.uncased;
        j["seed"] = tr_tf.seed;
        j["epochs"] = tr_tf.epochs;
        j["batch-size"] = tr_tf.batch_size;
        j["lr"] = tr_tf.lr;
        j["optimizer"] = tr_tf.optimizer;
        j["patience"] = tr_tf.patience;
      });
      return run_train(tr_data, tr_val, tr_out, tr_mf, tr_tf, tr_val_fraction);
    }
    if (*c_gen) {
      b_gen.resolve();
      b_gen.echo("generate", [&](ordered_json& j) {
        j["checkpoint"] = g_ckpt;
        j["input"] = g_in;
        j["output"] = g_out;
        j["beam"] = g_beam;
        j["max-len"] = g_max_len;
        j["length-penalty"] = g_len_pen;
      });
      return run_generate(g_ckpt, g_in, g_out, g_beam, g_max_len, g_len_pen);
    }
    if (*c_eval) {
      b_eval.resolve();
      b_eval.echo("eval", [&](ordered_json& j) {
        j["hyp"] = e_hyp;
        j["ref"] = e_ref;
        j["beta"] = e_beta;
      });
      return run_eval(e_hyp, e_ref, e_beta);
    }
    if (*c_stats) {
      return run_stats(st_in);
    }
    if (*c_pipe) {
      b_pipe.resolve();
      b_pipe.echo("pipeline", [&](ordered_json& j) {
        j["input"] = pl_in;
        j["output-dir"] = pl_dir;
        j["arch"] = pl_mf.arch;
        j["copy"] = pl_mf.copy;
        j["coverage"] = pl_mf.coverage;
        j["uncased"] = pl_mf.uncased;
        j["seed"] = pl_tf.seed;
        j["epochs"] = pl_tf.epochs;
        j["beam"] = pl_beam;
      });
      return run_pipeline(pl_in, pl_dir, pl_mf, pl_tf, pl_threshold, pl_ratio,
                          pl_beam, pl_max_len, pl_threads);
    }
  } catch (const DataError& e) {
    std::cerr << "[aqg] error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
