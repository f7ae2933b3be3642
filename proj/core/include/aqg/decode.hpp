#pragma once

#include <string>
#include <vector>

#include "aqg/model.hpp"

namespace aqg {

struct Hypothesis {
  std::vector<int> tokens;  // extended-vocab ids, EOS excluded
  double score = 0.0;       // sum of step log-probabilities
  std::vector<std::vector<double>> attention;  // one row per emitted token
  bool completed = false;

  double ranking_score(double length_penalty) const;
};

// Argmax each step, ties by smaller token id; stops at EOS or max_len.
Hypothesis greedy_decode(const Stepper& session, int max_len);

// Standard beam expansion; completed hypotheses ranked by
// score / length^penalty, ties by token-id sequence. Sorted best-first.
std::vector<Hypothesis> beam_search(const Stepper& session,
                                    int beam_size, int max_len,
                                    double length_penalty = 0.0);

// Surface tokens with every UNK replaced by the source token under the
// step's attention peak (ties by smaller source index). Throws DataError
// when attention history is missing for a step.
std::vector<std::string> replace_unk(const Hypothesis& hyp,
                                     const EncodedExample& ex,
                                     const Vocabulary& vocab);

}  // namespace aqg
