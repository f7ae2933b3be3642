#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aqg/textprep.hpp"

namespace aqg {

using OrderedJson = nlohmann::ordered_json;

struct AnswerSpan {
  std::string text;
  int answer_start = 0;
};

struct QAPair {
  std::string id;
  std::string question;
  std::vector<AnswerSpan> answers;
  bool is_impossible = false;
  std::optional<std::string> indonesian_answer;
  std::optional<int> indonesian_answer_start;  // -1 = not found
  OrderedJson extra;  // unknown keys, preserved on save
};

struct Paragraph {
  std::string context;
  std::vector<QAPair> qas;
  OrderedJson extra;
};

struct Article {
  std::string title;
  std::vector<Paragraph> paragraphs;
  OrderedJson extra;
};

// SQuAD v2.0 JSON (original or translated). Unknown keys are kept.
// Throws ParseError (malformed JSON, byte offset included), SchemaError
// (missing required key, names the key and record id), IoError.
// A UTF-8 BOM is rejected.
std::vector<Article> load_squad(const std::string& path);
void save_squad(const std::vector<Article>& articles, const std::string& path);

// JSONL with keys src, tgt, ans, case, pos, ne, answer_text. Validates
// every example before writing anything. Returns the line count.
size_t persist_examples(const std::vector<PreparedExample>& examples,
                        const std::string& path);
std::vector<PreparedExample> load_examples(const std::string& path);

struct CorpusStats {
  size_t n_examples = 0;
  size_t max_question_tokens = 0;
  size_t max_answer_tokens = 0;
  size_t max_source_tokens = 0;
};

CorpusStats corpus_stats(const std::vector<PreparedExample>& examples);

}  // namespace aqg
