#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "aqg/tensor.hpp"

namespace aqg {

struct TokenSpan {
  std::string token;
  int char_start = 0;  // into the normalized source
  int char_end = 0;
};

struct TagSequence {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
};

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kSos = 2;
  static constexpr int kEos = 3;

  Vocabulary();

  // Unseen tokens map to UNK.
  int id(const std::string& token) const;
  const std::string& token(int id) const;
  bool contains(const std::string& token) const;
  int size() const { return static_cast<int>(id_to_token_.size()); }

  // Tokens beyond the specials, in id order.
  const std::vector<std::string>& tokens() const { return id_to_token_; }

  // FNV-1a over the token list; identifies a vocabulary in checkpoints.
  uint64_t fingerprint() const;

  static Vocabulary from_tokens(const std::vector<std::string>& ordered_tokens);

 private:
  friend Vocabulary build_vocab(const std::vector<std::vector<std::string>>&,
                                int, int);
  std::unordered_map<std::string, int> token_to_id_;
  std::vector<std::string> id_to_token_;
  void add(const std::string& t);
};

struct EmbeddingMatrix {
  Tensor matrix;  // |V| x d
  int dim = 300;
};

// NFKD-style folding: compatibility-decompose, strip combining marks, drop
// remaining non-ASCII. ASCII input is a fixed point.
std::string normalize_ascii(const std::string& utf8);
// Same, plus a map from each output char to the originating input byte
// offset (for carrying character answer offsets through normalization).
std::string normalize_ascii_with_map(const std::string& utf8,
                                     std::vector<int>* out_to_in);
// Maps an input byte offset to the first output char at or after it.
int map_offset(const std::vector<int>& out_to_in, int in_offset, int out_len);

// Whitespace + punctuation split, except '.' ',' ':' flanked by non-space
// characters on both sides stay inside their token (times, numbers, Ph.D).
std::vector<TokenSpan> tokenize(const std::string& normalized);
std::vector<std::string> token_strings(const std::vector<TokenSpan>& spans);

// Word index of the span containing char_index; whitespace falls forward to
// the next span. Throws InputError past the last span.
int char_to_word(const std::vector<TokenSpan>& spans, int char_index);

struct SentenceSelection {
  std::vector<std::string> tokens;
  int answer_start = 0;  // sentence-local word index
  int answer_len = 0;
  int first_token_index = 0;  // offset of the sentence in the full context
};

// Sentence containing the answer's first word; boundaries at standalone
// '.' '?' '!' tokens. A context without terminators is one sentence.
SentenceSelection select_answer_sentence(const std::vector<TokenSpan>& spans,
                                         int answer_word_index,
                                         int answer_word_len);

// ans[i] = 1 iff i inside the answer span; case[i] = 1 iff token i has an
// uppercase letter (computed before any uncasing).
void make_binary_features(const std::vector<std::string>& tokens,
                          int answer_start, int answer_len,
                          std::vector<int>* ans, std::vector<int>* case_feat);

// Greedy character-offset alignment of external tagger output onto our
// tokens. Many-to-one takes the first non-punctuation tag; one-to-many
// replicates; no overlap yields "UNK-TAG". Throws AlignmentError when the
// two token streams disagree on more than 20% of characters.
std::vector<std::string> align_tags(const std::vector<TokenSpan>& ours,
                                    const TagSequence& tagger);

struct PreparedExample {
  std::vector<std::string> src;
  std::vector<std::string> tgt;
  std::vector<int> ans;
  std::vector<int> case_feat;
  std::vector<std::string> pos;
  std::vector<std::string> ne;
  std::vector<std::string> answer_text;

  void validate() const;  // throws InputError on invariant breach
};

struct FilterOptions {
  bool percentile_mode = false;  // drop top 1% by question/answer length
  int max_question_tokens = 60;
  int max_answer_tokens = 20;
  double percentile = 0.01;
};

std::vector<PreparedExample> filter_outliers(
    const std::vector<PreparedExample>& examples, const FilterOptions& opt = {});

// Most-frequent first, ties lexicographic; specials at ids 0..3.
Vocabulary build_vocab(const std::vector<std::vector<std::string>>& streams,
                       int max_size = 50000, int min_freq = 1);

// Text format: header "count dim", then "token v1 ... vd" lines. Tokens
// absent from the file get U(-0.1, 0.1) from `seed`; the PAD row is zeros.
EmbeddingMatrix load_word_vectors(const std::string& path,
                                  const Vocabulary& vocab, int expected_dim,
                                  uint32_t seed);
EmbeddingMatrix random_embeddings(const Vocabulary& vocab, int dim,
                                  uint32_t seed);

// Tag file: token<TAB>tag lines, blank line between sentences.
std::vector<TagSequence> load_tag_file(const std::string& path);

struct PrepareOptions {
  bool uncased = false;
  bool drop_impossible = false;
  std::optional<std::vector<TagSequence>> pos_tags;  // one per emitted example
  std::optional<std::vector<TagSequence>> ne_tags;
  FilterOptions filter;
};

struct Article;  // corpus.hpp

// Steps: discard unrepaired pairs, normalize, tokenize, convert the answer
// offset to a word index, select the answer sentence, build features, align
// tags, filter outliers. Uncasing lowercases src/tgt/answer_text after the
// case feature is computed.
std::vector<PreparedExample> prepare(const std::vector<Article>& articles,
                                     const PrepareOptions& opt);

}  // namespace aqg
