// Acceptance gate: one self-contained check per release criterion, each
// printing a single pass/fail line. Exit code is the number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "aqg/corpus.hpp"
#include "aqg/decode.hpp"
#include "aqg/errors.hpp"
#include "aqg/graph.hpp"
#include "aqg/metrics.hpp"
#include "aqg/model.hpp"
#include "aqg/repair.hpp"
#include "aqg/textprep.hpp"
#include "aqg/train.hpp"

using namespace aqg;

namespace {

struct Check {
  bool ok = true;
  std::string detail;
  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

int lcs_brute(const TokenList& a, const TokenList& b, size_t i = 0,
              size_t j = 0) {
  if (i == a.size() || j == b.size()) return 0;
  if (a[i] == b[j]) return 1 + lcs_brute(a, b, i + 1, j + 1);
  return std::max(lcs_brute(a, b, i + 1, j), lcs_brute(a, b, i, j + 1));
}

// ---------------------------------------------------------------------------
// 1. Metric oracle suite

void criterion_metrics(Check& c) {
  auto near = [](double got, double want) { return std::fabs(got - want) < 1e-2; };

  c.require(near(bleu({{"the", "cat"}},
                      std::vector<TokenList>{{"the", "cat", "sat"}}, 1),
                 60.6531),
            "BLEU-1 brevity fixture");
  c.require(near(bleu({{"a", "b", "c"}}, std::vector<TokenList>{{"a", "b", "d"}},
                      2),
                 57.7350),
            "BLEU-2 fixture");
  c.require(near(rouge_l({{"a", "b", "c", "d"}}, {{"a", "c", "d"}}, 1.2),
                 87.9795),
            "ROUGE-L fixture");

  std::vector<TokenList> same = {{"di", "mana", "dia", "lahir", "?"}};
  for (int n = 1; n <= 4; ++n)
    c.require(bleu(same, same, n) == 100.0, "identity BLEU must be exactly 100");
  c.require(rouge_l(same, same) == 100.0, "identity ROUGE-L must be exactly 100");

  std::mt19937 rng(2024);
  std::uniform_int_distribution<int> len(0, 10), sym(0, 3);
  for (int t = 0; t < 500; ++t) {
    TokenList a(len(rng)), b(len(rng));
    for (auto& w : a) w = std::string(1, static_cast<char>('a' + sym(rng)));
    for (auto& w : b) w = std::string(1, static_cast<char>('a' + sym(rng)));
    if (lcs_length(a, b) != lcs_brute(a, b)) {
      c.require(false, "lcs_length disagrees with brute force");
      return;
    }
  }
}

// ---------------------------------------------------------------------------
// Shared tiny-model scaffolding

Vocabulary acc_vocab() {
  return Vocabulary::from_tokens({"<pad>", "<unk>", "<sos>", "<eos>", "dia",
                                  "lahir", "di", "mana", "kota", "siapa",
                                  "tahun", "?", "."});
}

TagVocab acc_pos() {
  TagVocab t;
  t.add("PRON");
  t.add("VERB");
  t.add("ADP");
  t.add("PROPN");
  return t;
}

TagVocab acc_ne() {
  TagVocab t;
  t.add("O");
  t.add("LOC");
  return t;
}

PreparedExample acc_example(std::mt19937* rng = nullptr) {
  Vocabulary v = acc_vocab();
  PreparedExample ex;
  ex.src = {"dia", "lahir", "di", "Bandung", "."};  // OOV entity
  ex.tgt = {"di", "mana", "dia", "lahir", "?"};
  if (rng) {
    std::uniform_int_distribution<int> pick(4, v.size() - 1);
    for (auto& w : ex.src) w = v.token(pick(*rng));
    ex.src[3] = "oov" + std::to_string(pick(*rng));
    for (auto& w : ex.tgt) w = v.token(pick(*rng));
  }
  ex.ans = {0, 0, 0, 1, 0};
  ex.case_feat = {0, 0, 0, 1, 0};
  ex.pos = {"PRON", "VERB", "ADP", "PROPN", "PROPN"};
  ex.ne = {"O", "O", "O", "LOC", "O"};
  ex.answer_text = {ex.src[3]};
  return ex;
}

ModelConfig acc_config(Arch arch, AttentionKind attn, bool copy, bool cov) {
  ModelConfig cfg;
  cfg.arch = arch;
  cfg.attention = attn;
  cfg.use_copy = copy;
  cfg.use_coverage = cov;
  cfg.word_dim = 6;
  cfg.ans_dim = 2;
  cfg.case_dim = 2;
  cfg.pos_dim = 2;
  cfg.ne_dim = 2;
  cfg.hidden = 6;
  cfg.heads = 2;
  return cfg;
}

struct Cell {
  Arch arch;
  AttentionKind attn;
  bool copy, cov;
};

std::vector<Cell> all_cells() {
  std::vector<Cell> cells;
  for (Arch a : {Arch::kBiGru, Arch::kBiLstm})
    for (AttentionKind k : {AttentionKind::kBahdanau, AttentionKind::kLuong})
      for (bool copy : {false, true})
        for (bool cov : {false, true}) cells.push_back({a, k, copy, cov});
  for (bool copy : {false, true})
    cells.push_back({Arch::kTransformer, AttentionKind::kBahdanau, copy, false});
  return cells;
}

// ---------------------------------------------------------------------------
// 2. Gradient certification across every architecture cell

void criterion_gradients(Check& c) {
  Vocabulary v = acc_vocab();
  TagVocab pos = acc_pos(), ne = acc_ne();
  for (const Cell& cell : all_cells()) {
    for (uint32_t seed : {11u, 22u, 33u}) {
      ModelConfig cfg = acc_config(cell.arch, cell.attn, cell.copy, cell.cov);
      Seq2SeqModel m(cfg, v.size(), pos.size(), ne.size(), nullptr, seed);
      EncodedExample ex =
          encode_example(acc_example(), v, pos, ne, cfg.use_copy);
      auto f = [&](bool with_grads) {
        m.params().zero_grads();
        return m.example_loss(ex, with_grads);
      };
      std::mt19937 rng(seed * 7 + 1);
      GradCheckReport rep = grad_check(m.params().all(), f, 1e-5, 3, rng);
      if (!rep.ok(1e-4)) {
        std::ostringstream what;
        what << to_string(cell.arch) << "/" << to_string(cell.attn)
             << (cell.copy ? "+copy" : "") << (cell.cov ? "+cov" : "")
             << " seed " << seed << " max_rel_err " << rep.max_rel_err;
        c.require(false, what.str());
        return;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// 3. Distribution invariants on fuzzed decode steps

void criterion_distributions(Check& c) {
  Vocabulary v = acc_vocab();
  TagVocab pos = acc_pos(), ne = acc_ne();
  std::vector<Cell> cells = {
      {Arch::kBiGru, AttentionKind::kBahdanau, true, true},
      {Arch::kBiLstm, AttentionKind::kLuong, true, false},
      {Arch::kBiGru, AttentionKind::kLuong, false, true},
      {Arch::kTransformer, AttentionKind::kBahdanau, true, false}};
  std::mt19937 rng(99);
  int steps_done = 0;
  while (steps_done < 1000) {
    const Cell& cell = cells[steps_done % cells.size()];
    ModelConfig cfg = acc_config(cell.arch, cell.attn, cell.copy, cell.cov);
    Seq2SeqModel m(cfg, v.size(), pos.size(), ne.size(), nullptr,
                   static_cast<uint32_t>(1000 + steps_done));
    EncodedExample ex = encode_example(acc_example(&rng), v, pos, ne,
                                       cfg.use_copy);
    DecodingSession sess(m, ex);
    DecoderState state = sess.initial();
    std::vector<double> cov_before(ex.src_ids.size(), 0.0);
    int prev = Vocabulary::kSos;
    for (int t = 0; t < 5; ++t) {
      DecoderState next;
      StepResult r = sess.step(state, prev, &next);
      double total = 0.0;
      for (double p : r.probs) total += p;
      c.require(std::fabs(total - 1.0) < 1e-6, "P(w) must sum to 1");
      double penalty = 0.0;
      for (size_t i = 0; i < r.attn.size(); ++i)
        penalty += std::min(r.attn[i], cov_before[i]);
      if (t == 0)
        c.require(std::fabs(penalty) < 1e-12, "coverage loss at step 1");
      c.require(penalty >= 0.0, "coverage loss must be non-negative");
      if (!r.coverage.empty()) {
        for (size_t i = 0; i < r.coverage.size(); ++i)
          c.require(r.coverage[i] >= cov_before[i] - 1e-12,
                    "coverage must be entrywise non-decreasing");
        cov_before = r.coverage;
      }
      if (!c.ok) return;
      ++steps_done;
      state = next;
      std::uniform_int_distribution<int> pick(0, sess.ext_vocab_size() - 1);
      prev = pick(rng);
    }
  }
}

// ---------------------------------------------------------------------------
// Synthetic corpora for the training criteria

std::vector<PreparedExample> overfit_corpus() {
  std::vector<PreparedExample> out;
  std::vector<std::string> cities = {"jakarta", "bandung", "medan", "solo"};
  for (int i = 0; i < 32; ++i) {
    PreparedExample ex;
    std::string ent = "orang" + std::to_string(i);
    ex.src = {ent, "lahir", "di", cities[i % 4], "."};
    ex.tgt = {"di", "mana", ent, "lahir", "?"};
    ex.ans = {0, 0, 0, 1, 0};
    ex.case_feat = {0, 0, 0, 0, 0};
    ex.pos = {"PROPN", "VERB", "ADP", "PROPN", "PUNCT"};
    ex.ne = {"PER", "O", "O", "LOC", "O"};
    ex.answer_text = {cities[i % 4]};
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<PreparedExample> copy_corpus(int n) {
  std::vector<PreparedExample> out;
  std::vector<std::string> years = {"1981", "1984", "1987", "1990", "1993"};
  for (int i = 0; i < n; ++i) {
    PreparedExample ex;
    std::string a = "tokoh" + std::to_string(i);
    std::string b = "tempat" + std::to_string(i);
    ex.src = {a, "mengunjungi", b, "pada", years[i % 5], "."};
    ex.tgt = {"kapan", a, "mengunjungi", b, "?"};
    ex.ans = {0, 0, 1, 0, 0, 0};
    ex.case_feat = {1, 0, 1, 0, 0, 0};
    ex.pos = {"PROPN", "VERB", "PROPN", "ADP", "NUM", "PUNCT"};
    ex.ne = {"PER", "O", "LOC", "O", "O", "O"};
    ex.answer_text = {b};
    out.push_back(std::move(ex));
  }
  return out;
}

struct TrainedSetup {
  Vocabulary vocab;
  TagVocab pos, ne;
  std::vector<EncodedExample> enc;
};

TrainedSetup encode_corpus(const std::vector<PreparedExample>& data,
                           int max_vocab, bool use_copy) {
  TrainedSetup s;
  std::vector<std::vector<std::string>> streams;
  for (const auto& e : data) {
    streams.push_back(e.src);
    streams.push_back(e.tgt);
    for (const auto& t : e.pos) s.pos.add(t);
    for (const auto& t : e.ne) s.ne.add(t);
  }
  s.vocab = build_vocab(streams, max_vocab);
  for (const auto& e : data)
    s.enc.push_back(encode_example(e, s.vocab, s.pos, s.ne, use_copy));
  return s;
}

double bleu1_on(Seq2SeqModel& model, const TrainedSetup& s,
                const std::vector<PreparedExample>& data, size_t begin,
                size_t end) {
  std::vector<TokenList> hyps, refs;
  for (size_t i = begin; i < end; ++i) {
    DecodingSession sess(model, s.enc[i]);
    Hypothesis h = greedy_decode(sess, 10);
    hyps.push_back(replace_unk(h, s.enc[i], s.vocab));
    refs.push_back(data[i].tgt);
  }
  return bleu(hyps, refs, 1);
}

// 4. Overfit sanity: BiGRU-Uncased-Copy memorizes 32 examples.
void criterion_overfit(Check& c) {
  auto data = overfit_corpus();
  TrainedSetup s = encode_corpus(data, 100, true);
  ModelConfig cfg = acc_config(Arch::kBiGru, AttentionKind::kBahdanau, true,
                               false);
  cfg.uncased = true;
  cfg.word_dim = 16;
  cfg.hidden = 24;
  Seq2SeqModel m(cfg, s.vocab.size(), s.pos.size(), s.ne.size(), nullptr, 42);
  TrainConfig tc;
  tc.epochs = 200;
  tc.batch_size = 8;
  tc.lr = 5e-3;
  tc.seed = 42;
  TrainResult res = train(m, s.enc, s.enc, tc);
  double final_loss = res.history.empty() ? 1e9 : res.best_val_loss;
  c.require(final_loss < 0.1, "training loss must fall below 0.1, got " +
                                  std::to_string(final_loss));
  double b1 = bleu1_on(m, s, data, 0, data.size());
  c.require(b1 >= 90.0,
            "train-set BLEU-1 must reach 90, got " + std::to_string(b1));
}

// 5. Copy-effect replication on an OOV-entity corpus.
void criterion_copy_effect(Check& c) {
  auto data = copy_corpus(2000);
  const size_t n_train = 1800;
  auto run = [&](bool use_copy) {
    TrainedSetup s = encode_corpus(data, 30, use_copy);
    ModelConfig cfg = acc_config(Arch::kBiGru, AttentionKind::kBahdanau,
                                 use_copy, false);
    cfg.word_dim = 16;
    cfg.hidden = 16;
    Seq2SeqModel m(cfg, s.vocab.size(), s.pos.size(), s.ne.size(), nullptr,
                   42);
    std::vector<EncodedExample> train_set(s.enc.begin(),
                                          s.enc.begin() + n_train);
    std::vector<EncodedExample> val_set(s.enc.begin() + n_train, s.enc.end());
    TrainConfig tc;
    tc.epochs = 3;
    tc.batch_size = 16;
    tc.lr = 5e-3;
    tc.seed = 42;
    train(m, train_set, val_set, tc);
    return bleu1_on(m, s, data, n_train, data.size());
  };
  double with_copy = run(true);
  double without_copy = run(false);
  std::ostringstream what;
  what << "copy " << with_copy << " vs no-copy " << without_copy
       << " BLEU-1; need a 5-point margin";
  c.require(with_copy >= without_copy + 5.0, what.str());
}

// ---------------------------------------------------------------------------
// 6. Repair suite on synthetic perturbed spans

std::string random_context(std::mt19937& rng) {
  static const std::vector<std::string> words = {
      "rumah", "kota",  "sungai", "gunung", "pasar", "jalan",
      "pulau", "danau", "hutan",  "desa",   "pantai"};
  std::uniform_int_distribution<int> n(20, 30), w(0, (int)words.size() - 1);
  std::string ctx;
  int count = n(rng);
  for (int i = 0; i < count; ++i) {
    if (i) ctx += ' ';
    ctx += words[w(rng)];
  }
  return ctx;
}

void criterion_repair(Check& c) {
  std::mt19937 rng(7);
  int recovered = 0;
  for (int t = 0; t < 100; ++t) {
    std::string ctx = random_context(rng);
    std::uniform_int_distribution<int> span_len(8, 20);
    int len = span_len(rng);
    std::uniform_int_distribution<int> start_d(0, (int)ctx.size() - len);
    int start = start_d(rng);
    std::string answer = ctx.substr(start, len);
    // perturb at most 15% of the characters by substitution
    int edits = std::max(1, static_cast<int>(answer.size() * 0.15));
    std::uniform_int_distribution<int> pos_d(0, (int)answer.size() - 1);
    std::uniform_int_distribution<int> ch_d(0, 25);
    for (int e = 0; e < edits; ++e)
      answer[pos_d(rng)] = static_cast<char>('a' + ch_d(rng));
    RepairConfig cfg;
    cfg.original_context_length = static_cast<int>(ctx.size());
    RepairOutcome out = repair_answer(ctx, answer, start, cfg);
    if (out.found) ++recovered;
  }
  c.require(recovered >= 95, "recovered only " + std::to_string(recovered) +
                                 "/100 perturbed spans");

  // Plants whose best window ratio is provably below threshold must fail.
  auto best_window_ratio = [](const std::string& ctx, const std::string& ans) {
    double best = 0.0;
    int n = static_cast<int>(ans.size());
    int lo = std::max(1, (int)std::floor(0.7 * n) - 1);
    int hi = (int)std::ceil(1.3 * n) + 1;
    for (int w = lo; w <= hi; ++w)
      for (int s = 0; s + w <= (int)ctx.size(); ++s)
        best = std::max(best, similarity_ratio(ctx.substr(s, w), ans));
    return best;
  };
  int plants = 0;
  while (plants < 20) {
    std::string ctx = random_context(rng);
    std::string garbage;
    std::uniform_int_distribution<int> ch_d(0, 25);
    for (int i = 0; i < 14; ++i)
      garbage += static_cast<char>((i % 3 == 1) ? 'z' : 'q' + ch_d(rng) % 8);
    if (best_window_ratio(ctx, garbage) >= 0.8) continue;  // oracle veto
    ++plants;
    RepairOutcome out = repair_answer(ctx, garbage, 10);
    c.require(!out.found && out.new_start == -1,
              "sub-threshold plant must return -1");
  }

  // Exact substrings always come back with ratio 1.0.
  for (int t = 0; t < 20; ++t) {
    std::string ctx = random_context(rng);
    std::uniform_int_distribution<int> start_d(0, (int)ctx.size() - 10);
    int start = start_d(rng);
    RepairOutcome out = repair_answer(ctx, ctx.substr(start, 10), start);
    c.require(out.found && out.ratio == 1.0, "exact substring must be exact");
  }
}

// ---------------------------------------------------------------------------
// 7. Pipeline caps and byte-identical reruns

std::vector<Article> pipeline_corpus() {
  std::vector<Article> arts(1);
  arts[0].title = "Acc";
  Paragraph p;
  p.context =
      "Dia lahir di Houston pada 1981. Dia tinggal di Jakarta. "
      "Dia bekerja di Bandung pada 1999.";
  auto qa = [&](const std::string& id, const std::string& q,
                const std::string& ans, int start) {
    QAPair pair;
    pair.id = id;
    pair.question = q;
    pair.answers.push_back({ans, start});
    p.qas.push_back(pair);
  };
  qa("q1", "Di mana dia lahir?", "Houston", 13);
  qa("q2", "Di mana dia tinggal?", "Jakarta", 47);
  qa("q3", "Kapan dia lahir?", "1981", 26);
  qa("q4", "Di mana dia bekerja?", "Bandung", 71);
  // oversize question (> 60 tokens) and oversize answer (> 20 tokens): both
  // must be filtered out by prepare's caps
  std::string long_q;
  for (int i = 0; i < 70; ++i) long_q += "kata ";
  long_q += "?";
  qa("q5", long_q, "Houston", 13);
  QAPair big;
  big.id = "q6";
  big.question = "Apa?";
  big.answers.push_back({p.context, 0});  // the whole context as the answer
  p.qas.push_back(big);
  arts[0].paragraphs.push_back(p);
  return arts;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void run_pipeline_into(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto arts = pipeline_corpus();
  repair_corpus(arts);
  save_squad(arts, (dir / "repaired.json").string());
  auto loaded = load_squad((dir / "repaired.json").string());
  auto prepared = prepare(loaded, {});
  persist_examples(prepared, (dir / "data.jsonl").string());
  auto [tr, va] = split_train_val(prepared, 0.75, 7);
  persist_examples(tr, (dir / "train.jsonl").string());
  persist_examples(va, (dir / "val.jsonl").string());

  TrainedSetup s = encode_corpus(tr, 100, true);
  ModelConfig cfg = acc_config(Arch::kBiGru, AttentionKind::kBahdanau, true,
                               false);
  Seq2SeqModel m(cfg, s.vocab.size(), s.pos.size(), s.ne.size(), nullptr, 7);
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 2;
  tc.seed = 7;
  auto res = train(m, s.enc, s.enc, tc);
  save_checkpoint(make_checkpoint(m, s.vocab, s.pos, s.ne, res.history),
                  (dir / "model.ckpt").string());

  std::ofstream hyp(dir / "hyp.txt", std::ios::binary);
  std::ofstream ref(dir / "ref.txt", std::ios::binary);
  for (const auto& pe : va) {
    EncodedExample ex = encode_example(pe, s.vocab, s.pos, s.ne, true);
    DecodingSession sess(m, ex);
    auto beams = beam_search(sess, 3, 10);
    auto words = replace_unk(beams.front(), ex, s.vocab);
    for (size_t i = 0; i < words.size(); ++i)
      hyp << (i ? " " : "") << words[i];
    hyp << "\n";
    for (size_t i = 0; i < pe.tgt.size(); ++i) ref << (i ? " " : "") << pe.tgt[i];
    ref << "\n";
  }
  hyp.close();
  ref.close();
  MetricReport rep = evaluate_corpus((dir / "hyp.txt").string(),
                                     (dir / "ref.txt").string());
  std::ofstream report(dir / "report.json", std::ios::binary);
  report << "{\"bleu1\":" << rep.bleu1 << ",\"rouge_l\":" << rep.rouge_l
         << "}\n";
}

void criterion_pipeline(Check& c) {
  namespace fs = std::filesystem;
  auto loaded = pipeline_corpus();
  repair_corpus(loaded);
  auto prepared = prepare(loaded, {});
  c.require(!prepared.empty(), "prepare produced no examples");
  for (const auto& e : prepared) {
    c.require(e.tgt.size() <= 60, "question exceeds the 60-token cap");
    c.require(e.answer_text.size() <= 20, "answer exceeds the 20-token cap");
  }

  fs::path a = fs::path("acc_pipeline_a"), b = fs::path("acc_pipeline_b");
  fs::remove_all(a);
  fs::remove_all(b);
  run_pipeline_into(a);
  run_pipeline_into(b);
  for (const char* name : {"repaired.json", "data.jsonl", "train.jsonl",
                           "val.jsonl", "model.ckpt", "hyp.txt", "ref.txt",
                           "report.json"}) {
    c.require(fs::exists(a / name), std::string("missing artifact ") + name);
    c.require(slurp(a / name) == slurp(b / name),
              std::string("rerun differs on ") + name);
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

// ---------------------------------------------------------------------------
// 8. Split protocol

void criterion_split(Check& c) {
  std::vector<int> xs(120);
  for (int i = 0; i < 120; ++i) xs[i] = i;
  auto [tr, va] = split_train_val(xs, 0.9, 5);
  c.require(tr.size() == 108 && va.size() == 12, "split must be exactly 108/12");
  auto [tr2, va2] = split_train_val(xs, 0.9, 5);
  c.require(tr == tr2 && va == va2, "split membership must be seed-stable");
  std::vector<int> all = tr;
  all.insert(all.end(), va.begin(), va.end());
  std::sort(all.begin(), all.end());
  c.require(all == xs, "split must partition the input");
}

// ---------------------------------------------------------------------------
// 9. Decoding contracts

class TableStepper : public Stepper {
 public:
  int vocab = 6;
  std::map<std::vector<int>, std::vector<double>> table;
  std::vector<double> fallback;

  DecoderState initial() const override { return {}; }
  StepResult step(const DecoderState& state, int prev,
                  DecoderState* next) const override {
    std::vector<int> key = state.prefix;
    if (prev != Vocabulary::kSos) key.push_back(prev);
    StepResult out;
    auto it = table.find(key);
    out.probs = it != table.end() ? it->second : fallback;
    out.attn = {1.0};
    if (next) next->prefix = std::move(key);
    return out;
  }
  int ext_vocab_size() const override { return vocab; }
};

std::vector<double> dist6(std::initializer_list<std::pair<int, double>> mass) {
  std::vector<double> d(6, 0.0);
  double used = 0.0;
  for (auto [id, p] : mass) {
    d[id] = p;
    used += p;
  }
  d[Vocabulary::kPad] += 1.0 - used;
  return d;
}

void criterion_decoding(Check& c) {
  Vocabulary v = acc_vocab();
  TagVocab pos = acc_pos(), ne = acc_ne();
  ModelConfig cfg = acc_config(Arch::kBiGru, AttentionKind::kBahdanau, true,
                               false);
  Seq2SeqModel m(cfg, v.size(), pos.size(), ne.size(), nullptr, 3);
  std::mt19937 rng(17);
  const std::string unk_surface = v.token(Vocabulary::kUnk);
  for (int t = 0; t < 50; ++t) {
    EncodedExample ex = encode_example(acc_example(&rng), v, pos, ne, true);
    DecodingSession sess(m, ex);
    Hypothesis g = greedy_decode(sess, 8);
    auto beams = beam_search(sess, 1, 8);
    c.require(!beams.empty() && beams.front().tokens == g.tokens,
              "beam 1 must match greedy");
    c.require(std::fabs(beams.front().score - g.score) < 1e-9,
              "beam-1 score must match greedy");
    for (const std::string& w : replace_unk(g, ex, v))
      c.require(w != unk_surface, "UNK must not survive replace_unk");
    if (!c.ok) return;
  }

  // Two-step hand fixture against exhaustive enumeration.
  TableStepper s;
  s.table[{}] = dist6({{4, 0.6}, {5, 0.3}, {Vocabulary::kEos, 0.1}});
  s.table[{4}] = dist6({{Vocabulary::kEos, 0.5}, {4, 0.25}, {5, 0.25}});
  s.table[{5}] = dist6({{Vocabulary::kEos, 0.8}, {4, 0.1}, {5, 0.1}});
  s.table[{4, 4}] = dist6({{Vocabulary::kEos, 1.0}});
  s.table[{4, 5}] = dist6({{Vocabulary::kEos, 1.0}});
  s.table[{5, 4}] = dist6({{Vocabulary::kEos, 1.0}});
  s.table[{5, 5}] = dist6({{Vocabulary::kEos, 1.0}});
  s.fallback = dist6({{Vocabulary::kEos, 1.0}});
  auto beams = beam_search(s, 4, 5);
  std::vector<std::vector<int>> want = {{4}, {5}, {4, 4}, {4, 5}};
  c.require(beams.size() == 4, "beam 4 must return 4 hypotheses");
  for (size_t i = 0; i < want.size() && i < beams.size(); ++i)
    c.require(beams[i].tokens == want[i],
              "beam ranking disagrees with exhaustive enumeration");
  std::vector<double> scores = {std::log(0.6) + std::log(0.5),
                                std::log(0.3) + std::log(0.8),
                                std::log(0.6) + std::log(0.25),
                                std::log(0.6) + std::log(0.25)};
  for (size_t i = 0; i < scores.size() && i < beams.size(); ++i)
    c.require(std::fabs(beams[i].score - scores[i]) < 1e-9,
              "beam scores disagree with enumeration");
}

// ---------------------------------------------------------------------------

struct Criterion {
  const char* label;
  double budget_seconds;
  std::function<void(Check&)> body;
};

}  // namespace

int main() {
  std::vector<Criterion> criteria = {
      {"1 metric oracle suite", 10, criterion_metrics},
      {"2 gradient certification (18 cells x 3 seeds)", 300,
       criterion_gradients},
      {"3 distribution invariants (1000 fuzzed steps)", 300,
       criterion_distributions},
      {"4 overfit sanity (BiGRU-Uncased-Copy, 32 examples)", 300,
       criterion_overfit},
      {"5 copy-effect replication (2000-example OOV corpus)", 1800,
       criterion_copy_effect},
      {"6 repair suite (perturbed spans + ratio oracle)", 120,
       criterion_repair},
      {"7 pipeline caps and byte-identical reruns", 300, criterion_pipeline},
      {"8 split protocol (9:1 on 120)", 10, criterion_split},
      {"9 decoding contracts (beam/greedy/UNK)", 120, criterion_decoding},
  };

  int failures = 0;
  for (auto& cr : criteria) {
    Check c;
    auto t0 = std::chrono::steady_clock::now();
    try {
      cr.body(c);
    } catch (const std::exception& e) {
      c.require(false, std::string("exception: ") + e.what());
    }
    double secs = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    c.require(secs < cr.budget_seconds, "over time budget");
    std::printf("[%s] criterion %s (%.1fs)%s%s\n", c.ok ? "PASS" : "FAIL",
                cr.label, secs, c.ok ? "" : " -- ",
                c.ok ? "" : c.detail.c_str());
    std::fflush(stdout);
    if (!c.ok) ++failures;
  }
  return failures;
}
