#pragma once

#include <string>
#include <vector>

#include "aqg/corpus.hpp"

namespace aqg {

struct RepairOutcome {
  bool found = false;
  int new_start = -1;           // character index, -1 when not found
  std::string matched_text;     // empty when not found
  double ratio = 0.0;
};

enum class SearchScope { kNearOriginalFirst, kWholeContext };

struct RepairConfig {
  double threshold = 0.8;
  SearchScope search_scope = SearchScope::kNearOriginalFirst;
  // Character length of the untranslated context, when known; used to
  // rescale the original offset into the translated context.
  int original_context_length = -1;
};

// Single-character insert/delete/substitute edit distance.
int levenshtein(const std::string& a, const std::string& b);

// 1 - levenshtein(a, b) / max(|a|, |b|); both-empty is 1.0.
double similarity_ratio(const std::string& a, const std::string& b);

// Exact occurrence first (nearest to the rescaled original offset, ratio
// 1.0); otherwise the best sliding window of width |answer| +/- 30% with
// ratio >= threshold, ties broken by proximity to the rescaled position
// then by smaller start. Scoring is case-folded; matched_text keeps the
// context's original casing. Not-found is a value, never an error.
RepairOutcome repair_answer(const std::string& context,
                            const std::string& translated_answer,
                            int original_start, const RepairConfig& cfg = {});

struct RepairReport {
  size_t exact = 0;
  size_t repaired = 0;  // fuzzy-found
  size_t not_found = 0;
  size_t total() const { return exact + repaired + not_found; }
};

// Annotates every QAPair with indonesian_answer / indonesian_answer_start.
RepairReport repair_corpus(std::vector<Article>& articles,
                           const RepairConfig& cfg = {}, int threads = 1);

}  // namespace aqg
