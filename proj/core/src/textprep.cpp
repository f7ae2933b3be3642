#include "aqg/textprep.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "aqg/corpus.hpp"
#include "aqg/errors.hpp"

namespace aqg {

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary() {
  add("<pad>");
  add("<unk>");
  add("<sos>");
  add("<eos>");
}

void Vocabulary::add(const std::string& t) {
  token_to_id_.emplace(t, static_cast<int>(id_to_token_.size()));
  id_to_token_.push_back(t);
}

int Vocabulary::id(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(const std::string& token) const {
  return token_to_id_.count(token) > 0;
}

const std::string& Vocabulary::token(int id) const {
  return id_to_token_.at(static_cast<size_t>(id));
}

uint64_t Vocabulary::fingerprint() const {
  uint64_t h = 1469598103934665603ull;
  for (const auto& t : id_to_token_) {
    for (char c : t) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ull;
    }
    h ^= 0xff;
    h *= 1099511628211ull;
  }
  return h;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& ordered) {
  Vocabulary v;
  for (size_t i = 4; i < ordered.size(); ++i) v.add(ordered[i]);
  return v;
}

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& streams,
                       int max_size, int min_freq) {
  if (max_size < 5) throw ConfigError("build_vocab: max_size must be >= 5");
  std::map<std::string, long long> freq;
  for (const auto& s : streams)
    for (const auto& t : s) ++freq[t];
  std::vector<std::pair<std::string, long long>> items(freq.begin(), freq.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary v;
  for (const auto& [tok, f] : items) {
    if (v.size() >= max_size) break;
    if (f < min_freq) break;
    if (!v.contains(tok)) v.add(tok);
  }
  return v;
}

// ---------------------------------------------------------------------------
// ASCII folding

namespace {

struct FoldEntry {
  uint32_t cp;
  const char* out;
};

const FoldEntry kFoldTable[] = {
#include "ascii_fold_table.inc"
};

const char* fold_lookup(uint32_t cp) {
  size_t lo = 0, hi = std::size(kFoldTable);
  while (lo < hi) {
    size_t mid = (lo + hi) / 2;
    if (kFoldTable[mid].cp < cp)
      lo = mid + 1;
    else
      hi = mid;
  }
  if (lo < std::size(kFoldTable) && kFoldTable[lo].cp == cp)
    return kFoldTable[lo].out;
  return nullptr;
}

// Decodes one UTF-8 codepoint starting at i; advances i. Invalid bytes are
// consumed singly and reported as U+FFFD.
uint32_t decode_utf8(const std::string& s, size_t& i) {
  unsigned char c = s[i];
  if (c < 0x80) {
    ++i;
    return c;
  }
  int len = (c >= 0xF0) ? 4 : (c >= 0xE0) ? 3 : (c >= 0xC0) ? 2 : 1;
  if (len == 1 || i + len > s.size()) {
    ++i;
    return 0xFFFD;
  }
  uint32_t cp = c & (0x7F >> len);
  for (int k = 1; k < len; ++k) {
    unsigned char cc = s[i + k];
    if ((cc & 0xC0) != 0x80) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | (cc & 0x3F);
  }
  i += len;
  return cp;
}

bool is_combining_mark(uint32_t cp) {
  return (cp >= 0x0300 && cp <= 0x036F) || (cp >= 0x1AB0 && cp <= 0x1AFF) ||
         (cp >= 0x1DC0 && cp <= 0x1DFF) || (cp >= 0x20D0 && cp <= 0x20FF) ||
         (cp >= 0xFE20 && cp <= 0xFE2F);
}

}  // namespace

std::string normalize_ascii_with_map(const std::string& utf8,
                                     std::vector<int>* out_to_in) {
  std::string out;
  out.reserve(utf8.size());
  if (out_to_in) out_to_in->clear();
  size_t i = 0;
  while (i < utf8.size()) {
    size_t start = i;
    uint32_t cp = decode_utf8(utf8, i);
    const char* rep = nullptr;
    char single[2] = {0, 0};
    if (cp < 0x80) {
      single[0] = static_cast<char>(cp);
      rep = single;
    } else if (!is_combining_mark(cp)) {
      rep = fold_lookup(cp);
    }
    if (rep) {
      for (const char* p = rep; *p; ++p) {
        out.push_back(*p);
        if (out_to_in) out_to_in->push_back(static_cast<int>(start));
      }
    }
  }
  return out;
}

std::string normalize_ascii(const std::string& utf8) {
  return normalize_ascii_with_map(utf8, nullptr);
}

int map_offset(const std::vector<int>& out_to_in, int in_offset, int out_len) {
  for (int o = 0; o < out_len; ++o)
    if (out_to_in[o] >= in_offset) return o;
  return out_len;
}

// ---------------------------------------------------------------------------
// Tokenization

namespace {

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '\'';
}

bool is_space_char(char c) { return std::isspace(static_cast<unsigned char>(c)); }

// '.' ',' ':' glued between non-space characters stay inside the token.
bool is_glue_punct(const std::string& s, size_t i) {
  char c = s[i];
  if (c != '.' && c != ',' && c != ':') return false;
  if (i == 0 || i + 1 >= s.size()) return false;
  return !is_space_char(s[i - 1]) && !is_space_char(s[i + 1]) &&
         is_word_char(s[i - 1]) && is_word_char(s[i + 1]);
}

}  // namespace

std::vector<TokenSpan> tokenize(const std::string& text) {
  std::vector<TokenSpan> spans;
  size_t i = 0;
  while (i < text.size()) {
    if (is_space_char(text[i])) {
      ++i;
      continue;
    }
    size_t start = i;
    if (is_word_char(text[i])) {
      while (i < text.size() &&
             (is_word_char(text[i]) || is_glue_punct(text, i)))
        ++i;
    } else {
      ++i;  // punctuation: one char per token
    }
    spans.push_back({text.substr(start, i - start), static_cast<int>(start),
                     static_cast<int>(i)});
  }
  return spans;
}

std::vector<std::string> token_strings(const std::vector<TokenSpan>& spans) {
  std::vector<std::string> out;
  out.reserve(spans.size());
  for (const auto& s : spans) out.push_back(s.token);
  return out;
}

int char_to_word(const std::vector<TokenSpan>& spans, int char_index) {
  for (size_t w = 0; w < spans.size(); ++w)
    if (char_index < spans[w].char_end) return static_cast<int>(w);
  throw InputError("char_to_word: index " + std::to_string(char_index) +
                   " beyond all spans");
}

SentenceSelection select_answer_sentence(const std::vector<TokenSpan>& spans,
                                         int answer_word_index,
                                         int answer_word_len) {
  if (answer_word_index < 0 ||
      answer_word_index >= static_cast<int>(spans.size()))
    throw InputError("select_answer_sentence: answer index out of range");
  auto is_terminator = [](const std::string& t) {
    return t == "." || t == "?" || t == "!";
  };
  int start = 0;
  for (int i = 0; i < static_cast<int>(spans.size()); ++i) {
    bool last = i + 1 == static_cast<int>(spans.size());
    if (is_terminator(spans[i].token) || last) {
      int end = i + 1;  // terminator included
      if (answer_word_index < end || last) {
        SentenceSelection sel;
        sel.first_token_index = start;
        for (int j = start; j < end; ++j) sel.tokens.push_back(spans[j].token);
        sel.answer_start = answer_word_index - start;
        sel.answer_len = std::min(answer_word_len,
                                  static_cast<int>(sel.tokens.size()) -
                                      sel.answer_start);
        return sel;
      }
      start = end;
    }
  }
  throw InputError("select_answer_sentence: unreachable");
}

void make_binary_features(const std::vector<std::string>& tokens,
                          int answer_start, int answer_len,
                          std::vector<int>* ans, std::vector<int>* case_feat) {
  ans->assign(tokens.size(), 0);
  case_feat->assign(tokens.size(), 0);
  for (int i = answer_start; i < answer_start + answer_len &&
                             i < static_cast<int>(tokens.size());
       ++i)
    if (i >= 0) (*ans)[i] = 1;
  for (size_t i = 0; i < tokens.size(); ++i)
    for (char c : tokens[i])
      if (std::isupper(static_cast<unsigned char>(c))) {
        (*case_feat)[i] = 1;
        break;
      }
}

// ---------------------------------------------------------------------------
// Tag alignment

namespace {

bool is_punct_token(const std::string& t) {
  for (char c : t)
    if (std::isalnum(static_cast<unsigned char>(c))) return false;
  return true;
}

std::string concat_chars(const std::vector<std::string>& tokens) {
  std::string s;
  for (const auto& t : tokens)
    for (char c : t)
      if (!is_space_char(c)) s.push_back(c);
  return s;
}

}  // namespace

std::vector<std::string> align_tags(const std::vector<TokenSpan>& ours,
                                    const TagSequence& tagger) {
  if (tagger.tokens.size() != tagger.tags.size())
    throw InputError("align_tags: tagger tokens/tags length mismatch");
  std::string s1 = concat_chars(token_strings(ours));
  std::string s2 = concat_chars(tagger.tokens);
  size_t common = std::min(s1.size(), s2.size());
  size_t mismatch = std::max(s1.size(), s2.size()) - common;
  for (size_t i = 0; i < common; ++i)
    if (s1[i] != s2[i]) ++mismatch;
  size_t mx = std::max(s1.size(), s2.size());
  if (mx > 0 && static_cast<double>(mismatch) / mx > 0.20) {
    std::string preview = s1.substr(0, 40);
    throw AlignmentError("align_tags: token streams disagree on >20% of "
                         "characters in sentence \"" + preview + "...\"");
  }

  // Character ranges in the shared (whitespace-free) stream.
  std::vector<std::pair<int, int>> tag_ranges;
  int off = 0;
  for (const auto& t : tagger.tokens) {
    int len = 0;
    for (char c : t)
      if (!is_space_char(c)) ++len;
    tag_ranges.push_back({off, off + len});
    off += len;
  }
  std::vector<std::string> out;
  int our_off = 0;
  for (const auto& span : ours) {
    int len = 0;
    for (char c : span.token)
      if (!is_space_char(c)) ++len;
    int s = our_off, e = our_off + len;
    our_off = e;
    std::string chosen;
    std::string first_any;
    for (size_t j = 0; j < tag_ranges.size(); ++j) {
      auto [ts, te] = tag_ranges[j];
      if (te <= s || ts >= e) continue;  // no overlap
      if (first_any.empty()) first_any = tagger.tags[j].empty() ? "UNK-TAG"
                                                                : tagger.tags[j];
      if (!is_punct_token(tagger.tokens[j])) {
        chosen = tagger.tags[j];
        break;
      }
    }
    if (chosen.empty()) chosen = first_any;
    if (chosen.empty()) chosen = "UNK-TAG";
    out.push_back(chosen);
  }
  return out;
}

// ---------------------------------------------------------------------------
// PreparedExample, filtering

void PreparedExample::validate() const {
  size_t n = src.size();
  if (n == 0) throw InputError("example: empty source");
  if (ans.size() != n || case_feat.size() != n || pos.size() != n ||
      ne.size() != n)
    throw InputError("example: source-aligned sequences have unequal lengths");
  if (std::find(ans.begin(), ans.end(), 1) == ans.end())
    throw InputError("example: answer feature has no 1");
  if (tgt.size() > 60) throw InputError("example: question longer than 60 tokens");
  if (answer_text.size() > 20)
    throw InputError("example: answer longer than 20 tokens");
}

std::vector<PreparedExample> filter_outliers(
    const std::vector<PreparedExample>& examples, const FilterOptions& opt) {
  size_t max_q = opt.max_question_tokens;
  size_t max_a = opt.max_answer_tokens;
  if (opt.percentile_mode && !examples.empty()) {
    auto threshold = [&](auto getter) {
      std::vector<size_t> lens;
      lens.reserve(examples.size());
      for (const auto& e : examples) lens.push_back(getter(e));
      std::sort(lens.begin(), lens.end());
      size_t idx = static_cast<size_t>(
          std::max<long long>(0, static_cast<long long>(std::ceil(
                                     lens.size() * (1.0 - opt.percentile))) -
                                     1));
      return lens[std::min(idx, lens.size() - 1)];
    };
    max_q = threshold([](const PreparedExample& e) { return e.tgt.size(); });
    max_a = threshold(
        [](const PreparedExample& e) { return e.answer_text.size(); });
  }
  std::vector<PreparedExample> out;
  for (const auto& e : examples)
    if (e.tgt.size() <= max_q && e.answer_text.size() <= max_a)
      out.push_back(e);
  return out;
}

// ---------------------------------------------------------------------------
// Embeddings

EmbeddingMatrix random_embeddings(const Vocabulary& vocab, int dim,
                                  uint32_t seed) {
  EmbeddingMatrix emb;
  emb.dim = dim;
  emb.matrix = Tensor(vocab.size(), dim);
  std::mt19937 rng(seed);
  uniform_fill(emb.matrix, -0.1, 0.1, rng);
  for (int c = 0; c < dim; ++c) emb.matrix.at(Vocabulary::kPad, c) = 0.0;
  return emb;
}

EmbeddingMatrix load_word_vectors(const std::string& path,
                                  const Vocabulary& vocab, int expected_dim,
                                  uint32_t seed) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open word vectors: " + path);
  std::string header;
  if (!std::getline(in, header)) throw ParseError("word vectors: empty file");
  std::istringstream hs(header);
  long long count = 0;
  int dim = 0;
  if (!(hs >> count >> dim))
    throw ParseError("word vectors: malformed header line 1");
  if (dim != expected_dim)
    throw ConfigError("word vectors: dimension " + std::to_string(dim) +
                      " does not match configured " +
                      std::to_string(expected_dim));

  EmbeddingMatrix emb = random_embeddings(vocab, dim, seed);
  std::string line;
  long long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    std::vector<double> vals;
    vals.reserve(dim);
    double v;
    while (ls >> v) vals.push_back(v);
    if (static_cast<int>(vals.size()) != dim)
      throw ParseError("word vectors: malformed line " +
                       std::to_string(lineno));
    if (!vocab.contains(tok)) continue;
    int id = vocab.id(tok);
    if (id == Vocabulary::kPad) continue;
    for (int c = 0; c < dim; ++c) emb.matrix.at(id, c) = vals[c];
  }
  return emb;
}

std::vector<TagSequence> load_tag_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open tag file: " + path);
  std::vector<TagSequence> out;
  TagSequence cur;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      if (!cur.tokens.empty()) out.push_back(std::move(cur));
      cur = {};
      continue;
    }
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw ParseError("tag file " + path + ": line without TAB: " + line);
    cur.tokens.push_back(line.substr(0, tab));
    cur.tags.push_back(line.substr(tab + 1));
  }
  if (!cur.tokens.empty()) out.push_back(std::move(cur));
  return out;
}

// ---------------------------------------------------------------------------
// prepare

namespace {

std::string lowercase(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s)
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

void lowercase_all(std::vector<std::string>& tokens) {
  for (auto& t : tokens) t = lowercase(t);
}

}  // namespace

std::vector<PreparedExample> prepare(const std::vector<Article>& articles,
                                     const PrepareOptions& opt) {
  if ((opt.pos_tags.has_value()) != (opt.ne_tags.has_value()))
    throw ConfigError("prepare: POS and NE tag files must be given together");
  std::vector<PreparedExample> out;
  size_t tag_index = 0;
  for (const auto& art : articles) {
    for (const auto& para : art.paragraphs) {
      std::vector<int> ctx_map;
      std::string norm_ctx = normalize_ascii_with_map(para.context, &ctx_map);
      auto ctx_spans = tokenize(norm_ctx);
      if (ctx_spans.empty()) continue;
      for (const auto& qa : para.qas) {
        if (opt.drop_impossible && qa.is_impossible) continue;
        // step 1: unrepaired pairs are discarded
        if (!qa.indonesian_answer_start.has_value() ||
            *qa.indonesian_answer_start < 0)
          continue;
        const std::string& answer_raw = qa.indonesian_answer.value_or("");
        if (answer_raw.empty()) continue;

        int norm_off = map_offset(ctx_map, *qa.indonesian_answer_start,
                                  static_cast<int>(norm_ctx.size()));
        if (norm_off >= static_cast<int>(norm_ctx.size())) continue;
        int answer_word = char_to_word(ctx_spans, norm_off);
        auto answer_tokens =
            token_strings(tokenize(normalize_ascii(answer_raw)));
        if (answer_tokens.empty()) continue;

        SentenceSelection sel = select_answer_sentence(
            ctx_spans, answer_word, static_cast<int>(answer_tokens.size()));
        if (sel.answer_len <= 0) continue;

        PreparedExample ex;
        ex.src = sel.tokens;
        ex.answer_text = answer_tokens;
        ex.tgt = token_strings(tokenize(normalize_ascii(qa.question)));
        make_binary_features(ex.src, sel.answer_start, sel.answer_len,
                             &ex.ans, &ex.case_feat);

        if (opt.pos_tags && opt.ne_tags) {
          if (tag_index >= opt.pos_tags->size() ||
              tag_index >= opt.ne_tags->size())
            throw ConfigError("prepare: tag files have fewer sentences than "
                              "emitted examples");
          std::vector<TokenSpan> sent_spans(
              ctx_spans.begin() + sel.first_token_index,
              ctx_spans.begin() + sel.first_token_index +
                  static_cast<int>(ex.src.size()));
          ex.pos = align_tags(sent_spans, (*opt.pos_tags)[tag_index]);
          ex.ne = align_tags(sent_spans, (*opt.ne_tags)[tag_index]);
        } else {
          ex.pos.assign(ex.src.size(), "X");
          ex.ne.assign(ex.src.size(), "O");
        }
        ++tag_index;

        if (opt.uncased) {
          lowercase_all(ex.src);
          lowercase_all(ex.tgt);
          lowercase_all(ex.answer_text);
        }
        if (ex.tgt.empty()) continue;
        out.push_back(std::move(ex));
      }
    }
  }
  return filter_outliers(out, opt.filter);
}

}  // namespace aqg
