#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "aqg/decode.hpp"
#include "aqg/metrics.hpp"
#include "aqg/model.hpp"
#include "aqg/repair.hpp"
#include "aqg/textprep.hpp"

namespace {

using namespace aqg;

std::string random_words(int n, uint32_t seed) {
  static const std::vector<std::string> pool = {
      "rumah", "kota",  "sungai", "gunung", "pasar",  "jalan",
      "pulau", "danau", "hutan",  "desa",   "pantai", "tahun"};
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> pick(0, (int)pool.size() - 1);
  std::string out;
  for (int i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += pool[pick(rng)];
  }
  return out;
}

void BM_Levenshtein(benchmark::State& state) {
  std::string a = random_words((int)state.range(0), 1);
  std::string b = random_words((int)state.range(0), 2);
  for (auto _ : state) benchmark::DoNotOptimize(levenshtein(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Levenshtein)->Range(4, 64)->Complexity();

void BM_RepairAnswer(benchmark::State& state) {
  std::string ctx = random_words((int)state.range(0), 3);
  std::string answer = ctx.substr(ctx.size() / 3, 24);
  answer[5] = 'x';  // force the fuzzy path
  RepairConfig cfg;
  cfg.original_context_length = (int)ctx.size();
  for (auto _ : state)
    benchmark::DoNotOptimize(
        repair_answer(ctx, answer, (int)ctx.size() / 3, cfg));
}
BENCHMARK(BM_RepairAnswer)->Range(64, 512);

void BM_Tokenize(benchmark::State& state) {
  std::string text = random_words((int)state.range(0), 4) + ", pada 23:00.";
  for (auto _ : state) benchmark::DoNotOptimize(tokenize(text));
}
BENCHMARK(BM_Tokenize)->Range(16, 1024);

void BM_NormalizeAscii(benchmark::State& state) {
  std::string text;
  for (int i = 0; i < state.range(0); ++i) text += "Beyonc\xC3\xA9 ";
  for (auto _ : state) benchmark::DoNotOptimize(normalize_ascii(text));
}
BENCHMARK(BM_NormalizeAscii)->Range(16, 1024);

void BM_Bleu4(benchmark::State& state) {
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> len(5, 15), word(0, 40);
  std::vector<TokenList> hyps, refs;
  for (int i = 0; i < state.range(0); ++i) {
    TokenList h(len(rng)), r(len(rng));
    for (auto& w : h) w = "w" + std::to_string(word(rng));
    for (auto& w : r) w = "w" + std::to_string(word(rng));
    hyps.push_back(h);
    refs.push_back(r);
  }
  for (auto _ : state) benchmark::DoNotOptimize(bleu(hyps, refs, 4));
}
BENCHMARK(BM_Bleu4)->Range(64, 1024);

void BM_RougeL(benchmark::State& state) {
  std::mt19937 rng(6);
  std::uniform_int_distribution<int> len(5, 15), word(0, 40);
  std::vector<TokenList> hyps, refs;
  for (int i = 0; i < state.range(0); ++i) {
    TokenList h(len(rng)), r(len(rng));
    for (auto& w : h) w = "w" + std::to_string(word(rng));
    for (auto& w : r) w = "w" + std::to_string(word(rng));
    hyps.push_back(h);
    refs.push_back(r);
  }
  for (auto _ : state) benchmark::DoNotOptimize(rouge_l(hyps, refs));
}
BENCHMARK(BM_RougeL)->Range(64, 1024);

struct DecodeFixture {
  Vocabulary vocab = Vocabulary::from_tokens(
      {"<pad>", "<unk>", "<sos>", "<eos>", "dia", "lahir", "di", "mana",
       "kota", "?", "."});
  TagVocab pos, ne;
  ModelConfig cfg;
  DecodeFixture(Arch arch, bool copy) {
    pos.add("PROPN");
    ne.add("O");
    cfg.arch = arch;
    cfg.use_copy = copy;
    cfg.word_dim = 16;
    cfg.ans_dim = 2;
    cfg.case_dim = 2;
    cfg.pos_dim = 2;
    cfg.ne_dim = 2;
    cfg.hidden = 32;
    cfg.heads = 2;
  }
  PreparedExample example() const {
    PreparedExample ex;
    ex.src = {"dia", "lahir", "di", "Bandung", "."};
    ex.tgt = {"di", "mana", "dia", "lahir", "?"};
    ex.ans = {0, 0, 0, 1, 0};
    ex.case_feat = {0, 0, 0, 1, 0};
    ex.pos = {"PROPN", "PROPN", "PROPN", "PROPN", "PROPN"};
    ex.ne = {"O", "O", "O", "O", "O"};
    ex.answer_text = {"Bandung"};
    return ex;
  }
};

void BM_DecodeStep(benchmark::State& state) {
  DecodeFixture fx(state.range(0) ? Arch::kTransformer : Arch::kBiGru,
                   /*copy=*/true);
  Seq2SeqModel m(fx.cfg, fx.vocab.size(), fx.pos.size(), fx.ne.size(), nullptr,
                 9);
  EncodedExample ex = encode_example(fx.example(), fx.vocab, fx.pos, fx.ne,
                                     true);
  DecodingSession sess(m, ex);
  DecoderState s0 = sess.initial();
  for (auto _ : state) {
    DecoderState next;
    benchmark::DoNotOptimize(sess.step(s0, Vocabulary::kSos, &next));
  }
}
BENCHMARK(BM_DecodeStep)->Arg(0)->Arg(1);  // 0 = bigru, 1 = transformer

void BM_BeamSearch(benchmark::State& state) {
  DecodeFixture fx(Arch::kBiGru, true);
  Seq2SeqModel m(fx.cfg, fx.vocab.size(), fx.pos.size(), fx.ne.size(), nullptr,
                 9);
  EncodedExample ex = encode_example(fx.example(), fx.vocab, fx.pos, fx.ne,
                                     true);
  DecodingSession sess(m, ex);
  for (auto _ : state)
    benchmark::DoNotOptimize(beam_search(sess, (int)state.range(0), 12));
}
BENCHMARK(BM_BeamSearch)->Arg(1)->Arg(5)->Arg(10);

void BM_ExampleLoss(benchmark::State& state) {
  DecodeFixture fx(Arch::kBiGru, true);
  Seq2SeqModel m(fx.cfg, fx.vocab.size(), fx.pos.size(), fx.ne.size(), nullptr,
                 9);
  EncodedExample ex = encode_example(fx.example(), fx.vocab, fx.pos, fx.ne,
                                     true);
  bool with_grads = state.range(0) != 0;
  for (auto _ : state) {
    m.params().zero_grads();
    benchmark::DoNotOptimize(m.example_loss(ex, with_grads));
  }
}
BENCHMARK(BM_ExampleLoss)->Arg(0)->Arg(1);  // forward only / with backward

}  // namespace

BENCHMARK_MAIN();
