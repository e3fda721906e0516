#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "histent/corpus.hpp"
#include "histent/error.hpp"

namespace histent {

namespace {

using Json = nlohmann::ordered_json;

std::size_t require_offset(const Json& value, const char* key) {
  const auto it = value.find(key);
  if (it == value.end() || !it->is_number_integer())
    throw Error(ErrorCode::MalformedInput,
                std::string("entity field '") + key + "' must be an integer");
  if (it->is_number_unsigned()) return it->get<std::size_t>();
  const auto v = it->get<long long>();
  if (v < 0)
    throw Error(ErrorCode::OffsetOutOfRange,
                std::string("entity field '") + key + "' is negative");
  return static_cast<std::size_t>(v);
}

std::vector<Entity> entities_from(const Json& root, const char* key) {
  std::vector<Entity> out;
  const auto it = root.find(key);
  if (it == root.end() || it->is_null()) return out;
  if (!it->is_array())
    throw Error(ErrorCode::MalformedInput, std::string("'") + key + "' must be an array");
  for (const Json& item : *it) {
    if (!item.is_object())
      throw Error(ErrorCode::MalformedInput, std::string("'") + key + "' items must be objects");
    const auto concept_it = item.find("concept");
    if (concept_it == item.end() || !concept_it->is_string())
      throw Error(ErrorCode::MalformedInput, "entity field 'concept' must be a string");
    Entity e;
    e.label = parse_label(concept_it->get<std::string>());
    e.start = require_offset(item, "start");
    e.end = require_offset(item, "end");
    out.push_back(std::move(e));
  }
  return out;
}

std::string required_string(const Json& root, const char* key) {
  const auto it = root.find(key);
  if (it == root.end() || !it->is_string())
    throw Error(ErrorCode::MalformedInput, std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

Json entities_to(const std::vector<Entity>& entities) {
  Json arr = Json::array();
  for (const Entity& e : entities)
    arr.push_back(Json{{"concept", std::string(name_of(e.label))}, {"start", e.start}, {"end", e.end}});
  return arr;
}

SourceLocation position_of(std::string_view bytes, std::size_t byte) {
  SourceLocation loc;
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < bytes.size(); ++i) {
    if (bytes[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  loc.line = line;
  loc.column = col;
  return loc;
}

}  // namespace

Document parse_standoff_json(std::string_view bytes, const SectionizerOptions& options) {
  Json root;
  try {
    root = Json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
    throw Error(ErrorCode::MalformedInput, e.what(), position_of(bytes, byte));
  }
  if (!root.is_object()) throw Error(ErrorCode::MalformedInput, "document must be a JSON object");
  return Document(required_string(root, "doc_id"), required_string(root, "text"),
                  entities_from(root, "gold"), entities_from(root, "predicted"), options);
}

std::string serialize_standoff_json(const Document& doc) {
  Json root;
  root["doc_id"] = doc.doc_id();
  root["text"] = doc.text();
  root["gold"] = entities_to(doc.gold());
  root["predicted"] = entities_to(doc.predicted());
  return root.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
}

std::vector<Document> read_corpus_jsonl(std::istream& in, const std::string& source_name,
                                        const SectionizerOptions& options) {
  std::vector<Document> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      docs.push_back(parse_standoff_json(line, options));
    } catch (const Error& e) {
      SourceLocation where = e.where();
      where.line = line_no;
      if (where.file.empty()) where.file = source_name;
      throw Error(e.code(), e.what(), std::move(where));
    }
  }
  return docs;
}

std::vector<Document> read_corpus_file(const std::string& path, const SectionizerOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'", SourceLocation{path, {}, {}});
  return read_corpus_jsonl(in, path, options);
}

void write_corpus_jsonl(std::ostream& out, const std::vector<Document>& docs) {
  for (const Document& doc : docs) out << serialize_standoff_json(doc) << '\n';
}

}  // namespace histent
