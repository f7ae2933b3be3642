#include "aqg/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>

#include "aqg/errors.hpp"
#include "aqg/textprep.hpp"

namespace aqg {

int lcs_length(const TokenList& a, const TokenList& b) {
  size_t n = a.size(), m = b.size();
  std::vector<int> prev(m + 1, 0), cur(m + 1, 0);
  for (size_t i = 1; i <= n; ++i) {
    for (size_t j = 1; j <= m; ++j) {
      if (a[i - 1] == b[j - 1])
        cur[j] = prev[j - 1] + 1;
      else
        cur[j] = std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

namespace {

using NGramCounts = std::map<std::vector<std::string>, int>;

NGramCounts count_ngrams(const TokenList& tokens, int k) {
  NGramCounts counts;
  if (static_cast<int>(tokens.size()) >= k) {
    for (size_t i = 0; i + k <= tokens.size(); ++i) {
      std::vector<std::string> gram(tokens.begin() + i, tokens.begin() + i + k);
      ++counts[std::move(gram)];
    }
  }
  return counts;
}

}  // namespace

double bleu(const std::vector<TokenList>& hypotheses,
            const std::vector<std::vector<TokenList>>& references, int n) {
  if (hypotheses.empty() || hypotheses.size() != references.size())
    throw InputError("bleu: need equal, non-zero hypothesis/reference counts");
  if (n < 1) throw InputError("bleu: n must be >= 1");

  std::vector<long long> matched(n, 0), total(n, 0);
  long long hyp_len = 0, ref_len = 0;
  for (size_t i = 0; i < hypotheses.size(); ++i) {
    const TokenList& hyp = hypotheses[i];
    const auto& refs = references[i];
    if (refs.empty()) throw InputError("bleu: empty reference set");
    hyp_len += static_cast<long long>(hyp.size());
    // closest reference length, shorter wins ties
    long long best = static_cast<long long>(refs[0].size());
    for (const auto& r : refs) {
      long long len = static_cast<long long>(r.size());
      long long d1 = std::llabs(len - static_cast<long long>(hyp.size()));
      long long d2 = std::llabs(best - static_cast<long long>(hyp.size()));
      if (d1 < d2 || (d1 == d2 && len < best)) best = len;
    }
    ref_len += best;
    for (int k = 1; k <= n; ++k) {
      NGramCounts hyp_counts = count_ngrams(hyp, k);
      NGramCounts max_ref;
      for (const auto& r : refs)
        for (auto& [gram, c] : count_ngrams(r, k)) {
          auto& slot = max_ref[gram];
          slot = std::max(slot, c);
        }
      for (const auto& [gram, c] : hyp_counts) {
        total[k - 1] += c;
        auto it = max_ref.find(gram);
        if (it != max_ref.end()) matched[k - 1] += std::min(c, it->second);
      }
    }
  }

  double log_prec = 0.0;
  for (int k = 0; k < n; ++k) {
    if (matched[k] == 0 || total[k] == 0) return 0.0;  // no smoothing
    log_prec += std::log(static_cast<double>(matched[k]) / total[k]);
  }
  double bp = 1.0;
  if (hyp_len < ref_len && hyp_len > 0)
    bp = std::exp(1.0 - static_cast<double>(ref_len) / hyp_len);
  if (hyp_len == 0) return 0.0;
  return 100.0 * bp * std::exp(log_prec / n);
}

double bleu(const std::vector<TokenList>& hypotheses,
            const std::vector<TokenList>& references, int n) {
  std::vector<std::vector<TokenList>> wrapped;
  wrapped.reserve(references.size());
  for (const auto& r : references) wrapped.push_back({r});
  return bleu(hypotheses, wrapped, n);
}

double rouge_l(const std::vector<TokenList>& hypotheses,
               const std::vector<TokenList>& references, double beta) {
  if (hypotheses.empty() || hypotheses.size() != references.size())
    throw InputError("rouge_l: need equal, non-zero hypothesis/reference counts");
  double beta2 = beta * beta;
  double sum = 0.0;
  for (size_t i = 0; i < hypotheses.size(); ++i) {
    const TokenList& hyp = hypotheses[i];
    const TokenList& ref = references[i];
    if (hyp.empty() || ref.empty()) continue;  // contributes 0
    int l = lcs_length(hyp, ref);
    if (l == 0) continue;
    double p = static_cast<double>(l) / hyp.size();
    double r = static_cast<double>(l) / ref.size();
    sum += (1.0 + beta2) * p * r / (r + beta2 * p);
  }
  return 100.0 * sum / hypotheses.size();
}

namespace {

std::vector<TokenList> read_tokenized_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<TokenList> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string lowered;
    lowered.reserve(line.size());
    for (char c : line)
      lowered.push_back(static_cast<char>(
          std::tolower(static_cast<unsigned char>(c))));
    out.push_back(token_strings(tokenize(normalize_ascii(lowered))));
  }
  return out;
}

}  // namespace

MetricReport evaluate_token_lists(const std::vector<TokenList>& hyps,
                                  const std::vector<TokenList>& refs,
                                  double beta) {
  if (hyps.empty()) throw InputError("evaluate: at least one pair required");
  if (hyps.size() != refs.size())
    throw InputError("evaluate: hypothesis/reference line counts differ");
  MetricReport rep;
  rep.n_examples = hyps.size();
  rep.bleu1 = bleu(hyps, refs, 1);
  rep.bleu2 = bleu(hyps, refs, 2);
  rep.bleu3 = bleu(hyps, refs, 3);
  rep.bleu4 = bleu(hyps, refs, 4);
  rep.rouge_l = rouge_l(hyps, refs, beta);
  return rep;
}

MetricReport evaluate_corpus(const std::string& hyp_path,
                             const std::string& ref_path, double beta) {
  return evaluate_token_lists(read_tokenized_lines(hyp_path),
                              read_tokenized_lines(ref_path), beta);
}

}  // namespace aqg
