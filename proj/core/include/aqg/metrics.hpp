#pragma once

#include <string>
#include <vector>

namespace aqg {

using TokenList = std::vector<std::string>;

struct MetricReport {
  double bleu1 = 0.0, bleu2 = 0.0, bleu3 = 0.0, bleu4 = 0.0;
  double rouge_l = 0.0;
  size_t n_examples = 0;
};

// Longest common subsequence length over tokens.
int lcs_length(const TokenList& a, const TokenList& b);

// Corpus-level cumulative BLEU-n on a 0..100 scale: clipped modified k-gram
// precisions (k = 1..n) aggregated over the corpus, uniform-weight geometric
// mean, times brevity penalty min(1, e^{1 - r/c}). Zero matches at any
// order gives 0 (no smoothing). Multi-reference clipping is supported; most
// callers pass one reference per hypothesis.
double bleu(const std::vector<TokenList>& hypotheses,
            const std::vector<std::vector<TokenList>>& references, int n);
double bleu(const std::vector<TokenList>& hypotheses,
            const std::vector<TokenList>& references, int n);

// Corpus ROUGE-L on a 0..100 scale: per-pair LCS F_beta (beta defaults to
// 1.2), averaged over pairs. Empty hypotheses contribute 0.
double rouge_l(const std::vector<TokenList>& hypotheses,
               const std::vector<TokenList>& references, double beta = 1.2);

// Reads one-sentence-per-line files, lowercases, tokenizes both sides and
// emits all five scores. Throws InputError on line-count mismatch or empty
// input.
MetricReport evaluate_corpus(const std::string& hyp_path,
                             const std::string& ref_path, double beta = 1.2);

MetricReport evaluate_token_lists(const std::vector<TokenList>& hyps,
                                  const std::vector<TokenList>& refs,
                                  double beta = 1.2);

}  // namespace aqg
