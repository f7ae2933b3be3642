#include "aqg/repair.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <thread>

#include "aqg/errors.hpp"

namespace aqg {

int levenshtein(const std::string& a, const std::string& b) {
  const size_t n = a.size(), m = b.size();
  std::vector<int> prev(m + 1), cur(m + 1);
  for (size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
  for (size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<int>(i);
    for (size_t j = 1; j <= m; ++j) {
      int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double similarity_ratio(const std::string& a, const std::string& b) {
  size_t mx = std::max(a.size(), b.size());
  if (mx == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(mx);
}

namespace {

std::string fold_case(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s)
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

// original_start rescaled into the translated context's coordinates.
int rescaled_position(int original_start, size_t context_len,
                      int original_context_length) {
  double denom = original_context_length > 0
                     ? static_cast<double>(original_context_length)
                     : static_cast<double>(context_len);
  if (denom <= 0.0) return 0;
  double pos = original_start * static_cast<double>(context_len) / denom;
  return std::clamp(static_cast<int>(std::lround(pos)), 0,
                    static_cast<int>(context_len));
}

}  // namespace

RepairOutcome repair_answer(const std::string& context,
                            const std::string& translated_answer,
                            int original_start, const RepairConfig& cfg) {
  RepairOutcome out;
  if (translated_answer.empty()) return out;

  const std::string ctx = fold_case(context);
  const std::string ans = fold_case(translated_answer);
  const int anchor = rescaled_position(original_start, context.size(),
                                       cfg.original_context_length);

  // Exact occurrences first: nearest to the rescaled position wins.
  {
    int best = -1;
    size_t from = 0;
    for (size_t pos = ctx.find(ans, from); pos != std::string::npos;
         pos = ctx.find(ans, pos + 1)) {
      int p = static_cast<int>(pos);
      if (best < 0 || std::abs(p - anchor) < std::abs(best - anchor)) best = p;
    }
    if (best >= 0) {
      out.found = true;
      out.new_start = best;
      out.matched_text = context.substr(best, ans.size());
      out.ratio = 1.0;
      return out;
    }
  }

  // Sliding windows of width |answer| * 0.7 .. 1.3.
  const int alen = static_cast<int>(ans.size());
  const int wmin = std::max(1, static_cast<int>(std::floor(alen * 0.7)));
  const int wmax = std::max(wmin, static_cast<int>(std::ceil(alen * 1.3)));

  double best_ratio = -1.0;
  int best_start = -1, best_width = 0, best_dist = 0;
  for (int w = wmin; w <= wmax; ++w) {
    if (w > static_cast<int>(ctx.size())) break;
    for (int s = 0; s + w <= static_cast<int>(ctx.size()); ++s) {
      double r = similarity_ratio(ctx.substr(s, w), ans);
      if (r < cfg.threshold) continue;
      int dist = std::abs(s - anchor);
      bool better =
          r > best_ratio ||
          (r == best_ratio &&
           (dist < best_dist || (dist == best_dist && s < best_start)));
      if (better) {
        best_ratio = r;
        best_start = s;
        best_width = w;
        best_dist = dist;
      }
    }
  }
  if (best_start >= 0) {
    out.found = true;
    out.new_start = best_start;
    out.matched_text = context.substr(best_start, best_width);
    out.ratio = best_ratio;
  }
  return out;
}

RepairReport repair_corpus(std::vector<Article>& articles,
                           const RepairConfig& cfg, int threads) {
  // Flatten for a deterministic parallel sweep.
  struct Item {
    Paragraph* para;
    QAPair* qa;
  };
  std::vector<Item> items;
  for (auto& art : articles)
    for (auto& para : art.paragraphs)
      for (auto& qa : para.qas) items.push_back({&para, &qa});

  std::vector<RepairOutcome> outcomes(items.size());
  auto work = [&](size_t lo, size_t hi) {
    for (size_t i = lo; i < hi; ++i) {
      const QAPair& qa = *items[i].qa;
      if (qa.answers.empty()) continue;
      outcomes[i] = repair_answer(items[i].para->context, qa.answers[0].text,
                                  qa.answers[0].answer_start, cfg);
    }
  };
  threads = std::max(1, threads);
  if (threads == 1 || items.size() < 2) {
    work(0, items.size());
  } else {
    std::vector<std::thread> pool;
    size_t chunk = (items.size() + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      size_t lo = t * chunk, hi = std::min(items.size(), lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back(work, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  RepairReport report;
  for (size_t i = 0; i < items.size(); ++i) {
    QAPair& qa = *items[i].qa;
    const RepairOutcome& oc = outcomes[i];
    if (oc.found) {
      qa.indonesian_answer = oc.matched_text;
      qa.indonesian_answer_start = oc.new_start;
      if (oc.ratio == 1.0)
        ++report.exact;
      else
        ++report.repaired;
    } else {
      qa.indonesian_answer = std::string();
      qa.indonesian_answer_start = -1;
      ++report.not_found;
    }
  }
  return report;
}

}  // namespace aqg
