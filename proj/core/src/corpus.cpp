#include "aqg/corpus.hpp"

#include <fstream>
#include <sstream>

#include "aqg/errors.hpp"

namespace aqg {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const OrderedJson& require(const OrderedJson& obj, const char* key,
                           const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end())
    throw SchemaError("missing required key '" + std::string(key) + "' in " +
                      where);
  return *it;
}

// Keys handled by the typed model; everything else goes to `extra`.
OrderedJson collect_extra(const OrderedJson& obj,
                          std::initializer_list<const char*> known) {
  OrderedJson extra = OrderedJson::object();
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool is_known = false;
    for (const char* k : known)
      if (it.key() == k) {
        is_known = true;
        break;
      }
    if (!is_known) extra[it.key()] = it.value();
  }
  return extra;
}

}  // namespace

std::vector<Article> load_squad(const std::string& path) {
  std::string raw = read_file(path);
  if (raw.size() >= 3 && static_cast<unsigned char>(raw[0]) == 0xEF &&
      static_cast<unsigned char>(raw[1]) == 0xBB &&
      static_cast<unsigned char>(raw[2]) == 0xBF)
    throw ParseError(path + ": UTF-8 BOM is not accepted; save without BOM");

  OrderedJson doc;
  try {
    doc = OrderedJson::parse(raw);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": malformed JSON at byte " +
                     std::to_string(e.byte) + ": " + e.what());
  }
  const OrderedJson& data = require(doc, "data", "top-level document");
  if (!data.is_array())
    throw SchemaError("top-level 'data' must be an array in " + path);

  std::vector<Article> out;
  for (const auto& jart : data) {
    Article art;
    art.title = jart.value("title", std::string());
    art.extra = collect_extra(jart, {"title", "paragraphs"});
    const OrderedJson& paras =
        require(jart, "paragraphs", "article '" + art.title + "'");
    for (const auto& jpara : paras) {
      Paragraph para;
      const OrderedJson& ctx =
          require(jpara, "context", "paragraph of article '" + art.title + "'");
      para.context = ctx.get<std::string>();
      if (para.context.empty())
        throw SchemaError("empty context in article '" + art.title + "'");
      para.extra = collect_extra(jpara, {"context", "qas"});
      const OrderedJson& qas =
          require(jpara, "qas", "paragraph of article '" + art.title + "'");
      for (const auto& jqa : qas) {
        QAPair qa;
        qa.id = jqa.value("id", std::string());
        std::string where =
            "qas entry" + (qa.id.empty() ? "" : " id '" + qa.id + "'");
        qa.question = require(jqa, "question", where).get<std::string>();
        qa.is_impossible = jqa.value("is_impossible", false);
        const OrderedJson& answers = require(jqa, "answers", where);
        for (const auto& ja : answers) {
          AnswerSpan span;
          span.text = require(ja, "text", where).get<std::string>();
          span.answer_start =
              require(ja, "answer_start", where).get<int>();
          if (span.answer_start < 0)
            throw SchemaError("negative answer_start in " + where);
          if (span.answer_start >= static_cast<int>(para.context.size()))
            throw SchemaError("answer_start beyond context in " + where);
          qa.answers.push_back(std::move(span));
        }
        if (jqa.contains("indonesian_answer"))
          qa.indonesian_answer = jqa["indonesian_answer"].get<std::string>();
        if (jqa.contains("indonesian_answer_start"))
          qa.indonesian_answer_start =
              jqa["indonesian_answer_start"].get<int>();
        qa.extra = collect_extra(
            jqa, {"id", "question", "answers", "is_impossible",
                  "indonesian_answer", "indonesian_answer_start"});
        para.qas.push_back(std::move(qa));
      }
      art.paragraphs.push_back(std::move(para));
    }
    out.push_back(std::move(art));
  }
  return out;
}

void save_squad(const std::vector<Article>& articles,
                const std::string& path) {
  OrderedJson data = OrderedJson::array();
  for (const auto& art : articles) {
    OrderedJson jart;
    jart["title"] = art.title;
    OrderedJson paras = OrderedJson::array();
    for (const auto& para : art.paragraphs) {
      OrderedJson jpara;
      jpara["context"] = para.context;
      OrderedJson qas = OrderedJson::array();
      for (const auto& qa : para.qas) {
        OrderedJson jqa;
        jqa["id"] = qa.id;
        jqa["question"] = qa.question;
        OrderedJson answers = OrderedJson::array();
        for (const auto& a : qa.answers)
          answers.push_back({{"text", a.text}, {"answer_start", a.answer_start}});
        jqa["answers"] = answers;
        jqa["is_impossible"] = qa.is_impossible;
        if (qa.indonesian_answer)
          jqa["indonesian_answer"] = *qa.indonesian_answer;
        if (qa.indonesian_answer_start)
          jqa["indonesian_answer_start"] = *qa.indonesian_answer_start;
        for (auto it = qa.extra.begin(); it != qa.extra.end(); ++it)
          jqa[it.key()] = it.value();
        qas.push_back(std::move(jqa));
      }
      jpara["qas"] = qas;
      for (auto it = para.extra.begin(); it != para.extra.end(); ++it)
        jpara[it.key()] = it.value();
      paras.push_back(std::move(jpara));
    }
    jart["paragraphs"] = paras;
    for (auto it = art.extra.begin(); it != art.extra.end(); ++it)
      jart[it.key()] = it.value();
    data.push_back(std::move(jart));
  }
  OrderedJson doc;
  doc["data"] = data;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << doc.dump(1) << "\n";
}

size_t persist_examples(const std::vector<PreparedExample>& examples,
                        const std::string& path) {
  for (const auto& e : examples) e.validate();  // all-or-nothing
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& e : examples) {
    OrderedJson j;
    j["src"] = e.src;
    j["tgt"] = e.tgt;
    j["ans"] = e.ans;
    j["case"] = e.case_feat;
    j["pos"] = e.pos;
    j["ne"] = e.ne;
    j["answer_text"] = e.answer_text;
    out << j.dump() << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
  return examples.size();
}

std::vector<PreparedExample> load_examples(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<PreparedExample> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    OrderedJson j;
    try {
      j = OrderedJson::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path + " line " + std::to_string(lineno) + ": " +
                       e.what());
    }
    PreparedExample ex;
    try {
      ex.src = j.at("src").get<std::vector<std::string>>();
      ex.tgt = j.at("tgt").get<std::vector<std::string>>();
      ex.ans = j.at("ans").get<std::vector<int>>();
      ex.case_feat = j.at("case").get<std::vector<int>>();
      ex.pos = j.at("pos").get<std::vector<std::string>>();
      ex.ne = j.at("ne").get<std::vector<std::string>>();
      ex.answer_text = j.at("answer_text").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(path + " line " + std::to_string(lineno) + ": " +
                        e.what());
    }
    ex.validate();
    out.push_back(std::move(ex));
  }
  return out;
}

CorpusStats corpus_stats(const std::vector<PreparedExample>& examples) {
  CorpusStats st;
  st.n_examples = examples.size();
  for (const auto& e : examples) {
    st.max_question_tokens = std::max(st.max_question_tokens, e.tgt.size());
    st.max_answer_tokens = std::max(st.max_answer_tokens, e.answer_text.size());
    st.max_source_tokens = std::max(st.max_source_tokens, e.src.size());
  }
  return st;
}

}  // namespace aqg
