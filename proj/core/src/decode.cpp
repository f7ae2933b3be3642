#include "aqg/decode.hpp"

#include <algorithm>
#include <cmath>

#include "aqg/errors.hpp"

namespace aqg {

double Hypothesis::ranking_score(double length_penalty) const {
  if (length_penalty == 0.0 || tokens.empty()) return score;
  return score / std::pow(static_cast<double>(tokens.size()), length_penalty);
}

namespace {

double log_prob(double p) { return std::log(std::max(p, 1e-300)); }

struct Beam {
  Hypothesis hyp;
  DecoderState state;
};

bool better_ranked(const Hypothesis& a, const Hypothesis& b, double penalty) {
  double sa = a.ranking_score(penalty), sb = b.ranking_score(penalty);
  if (sa != sb) return sa > sb;
  return a.tokens < b.tokens;  // total tie-break
}

}  // namespace

Hypothesis greedy_decode(const Stepper& session, int max_len) {
  Hypothesis hyp;
  DecoderState state = session.initial();
  int prev = Vocabulary::kSos;
  for (int t = 0; t < max_len; ++t) {
    DecoderState next;
    StepResult res = session.step(state, prev, &next);
    int best = 0;
    for (int i = 1; i < static_cast<int>(res.probs.size()); ++i)
      if (res.probs[i] > res.probs[best]) best = i;  // ties keep smaller id
    hyp.score += log_prob(res.probs[best]);
    if (best == Vocabulary::kEos) {
      hyp.completed = true;
      break;
    }
    hyp.tokens.push_back(best);
    hyp.attention.push_back(res.attn);
    state = next;
    prev = best;
  }
  return hyp;
}

std::vector<Hypothesis> beam_search(const Stepper& session,
                                    int beam_size, int max_len,
                                    double length_penalty) {
  if (beam_size < 1) throw InputError("beam_search: beam_size must be >= 1");
  std::vector<Beam> alive;
  alive.push_back({Hypothesis{}, session.initial()});
  std::vector<Hypothesis> completed;

  for (int t = 0; t < max_len && !alive.empty(); ++t) {
    struct Candidate {
      Hypothesis hyp;
      DecoderState state;
      int token;
    };
    std::vector<Candidate> candidates;
    for (const auto& beam : alive) {
      int prev = beam.hyp.tokens.empty() ? Vocabulary::kSos
                                         : beam.hyp.tokens.back();
      DecoderState next;
      StepResult res = session.step(beam.state, prev, &next);
      // Per-beam shortlist: the best beam_size + 1 tokens cover every
      // globally surviving expansion (one slot spare for EOS).
      std::vector<int> ids(res.probs.size());
      for (size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
      size_t keep = std::min(ids.size(), static_cast<size_t>(beam_size) + 1);
      std::partial_sort(ids.begin(), ids.begin() + keep, ids.end(),
                        [&](int a, int b) {
                          if (res.probs[a] != res.probs[b])
                            return res.probs[a] > res.probs[b];
                          return a < b;
                        });
      ids.resize(keep);
      for (int id : ids) {
        Candidate c;
        c.hyp = beam.hyp;
        c.hyp.score += log_prob(res.probs[id]);
        c.token = id;
        if (id == Vocabulary::kEos) {
          c.hyp.completed = true;
        } else {
          c.hyp.tokens.push_back(id);
          c.hyp.attention.push_back(res.attn);
          c.state = next;
        }
        candidates.push_back(std::move(c));
      }
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate& a, const Candidate& b) {
                if (a.hyp.score != b.hyp.score) return a.hyp.score > b.hyp.score;
                if (a.hyp.tokens != b.hyp.tokens) return a.hyp.tokens < b.hyp.tokens;
                return a.token < b.token;
              });
    alive.clear();
    for (auto& c : candidates) {
      if (c.hyp.completed) {
        completed.push_back(std::move(c.hyp));
      } else if (static_cast<int>(alive.size()) < beam_size) {
        alive.push_back({std::move(c.hyp), std::move(c.state)});
      }
      if (static_cast<int>(alive.size()) >= beam_size &&
          static_cast<int>(completed.size()) >= beam_size)
        break;
    }
  }
  // Hypotheses still alive at the length cap count as (truncated) outputs.
  for (auto& beam : alive) completed.push_back(std::move(beam.hyp));
  std::sort(completed.begin(), completed.end(),
            [&](const Hypothesis& a, const Hypothesis& b) {
              return better_ranked(a, b, length_penalty);
            });
  if (static_cast<int>(completed.size()) > beam_size)
    completed.resize(beam_size);
  return completed;
}

std::vector<std::string> replace_unk(const Hypothesis& hyp,
                                     const EncodedExample& ex,
                                     const Vocabulary& vocab) {
  if (hyp.attention.size() < hyp.tokens.size())
    throw DataError("replace_unk: attention history missing for a step");
  std::vector<std::string> out;
  for (size_t t = 0; t < hyp.tokens.size(); ++t) {
    int id = hyp.tokens[t];
    if (id == Vocabulary::kUnk) {
      const auto& attn = hyp.attention[t];
      if (attn.empty())
        throw DataError("replace_unk: empty attention for a step");
      size_t best = 0;
      for (size_t i = 1; i < attn.size(); ++i)
        if (attn[i] > attn[best]) best = i;  // ties keep smaller index
      out.push_back(ex.src_tokens.at(best));
    } else {
      out.push_back(ex.surface(id, vocab));
    }
  }
  return out;
}

}  // namespace aqg
