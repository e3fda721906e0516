#include <array>
#include <charconv>

#include "histent/corpus.hpp"
#include "histent/error.hpp"

namespace histent {

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = s.find(sep, pos);
    out.push_back(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

std::size_t parse_size(std::string_view field, std::size_t line_no) {
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty())
    throw Error(ErrorCode::MalformedInput, "bad offset '" + std::string(field) + "'",
                SourceLocation{{}, line_no, {}});
  return value;
}

std::u32string flatten_newlines(std::u32string s) {
  for (char32_t& c : s)
    if (c == U'\n' || c == U'\r') c = U' ';
  return s;
}

}  // namespace

const LabelMap& default_brat_label_map() {
  static const LabelMap map = [] {
    LabelMap m;
    for (Concept c : kAllConcepts) {
      m.emplace(std::string(name_of(c)), c);
      m.emplace(std::string(camel_name(c)), c);
    }
    for (BmeConcept c : kAllBmeConcepts) {
      m.emplace(std::string(name_of(c)), c);
      m.emplace(std::string(camel_name(c)), c);
    }
    return m;
  }();
  return map;
}

std::vector<Entity> parse_brat(std::string_view text, std::string_view ann,
                               const std::string& doc_id, Source source, const LabelMap& labels) {
  const std::u32string chars = decode_utf8(text);
  std::vector<Entity> out;
  std::size_t line_no = 0;
  for (std::string_view line : split(ann, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() != 'T') continue;
    const auto fields = split(line, '\t');
    if (fields.size() < 3)
      throw Error(ErrorCode::MalformedInput, "text-bound annotation needs three tab-separated fields",
                  SourceLocation{{}, line_no, {}});
    const std::string_view spec = fields[1];
    if (spec.find(';') != std::string_view::npos)
      throw Error(ErrorCode::MalformedInput, "discontinuous spans are not supported",
                  SourceLocation{{}, line_no, {}});
    const auto parts = split(spec, ' ');
    if (parts.size() != 3)
      throw Error(ErrorCode::MalformedInput, "expected 'Label start end'",
                  SourceLocation{{}, line_no, {}});
    const auto label = labels.find(parts[0]);
    if (label == labels.end())
      throw Error(ErrorCode::UnknownConcept, "unknown label '" + std::string(parts[0]) + "'",
                  SourceLocation{{}, line_no, {}});
    Entity e;
    e.label = label->second;
    e.start = parse_size(parts[1], line_no);
    e.end = parse_size(parts[2], line_no);
    e.doc_id = doc_id;
    e.source = source;
    if (e.start >= e.end || e.end > chars.size())
      throw Error(ErrorCode::OffsetOutOfRange,
                  "span " + std::string(parts[1]) + "-" + std::string(parts[2]) +
                      " outside text of length " + std::to_string(chars.size()),
                  SourceLocation{{}, line_no, {}});
    const std::u32string expected = flatten_newlines(chars.substr(e.start, e.end - e.start));
    std::string_view quoted = line.substr(fields[0].size() + fields[1].size() + 2);
    if (flatten_newlines(decode_utf8(quoted)) != expected)
      throw Error(ErrorCode::SurfaceMismatch,
                  "surface '" + std::string(quoted) + "' differs from text '" +
                      encode_utf8(expected) + "'",
                  SourceLocation{{}, line_no, {}});
    out.push_back(std::move(e));
  }
  return out;
}

std::string emit_brat(std::string_view text, const std::vector<Entity>& entities) {
  const std::u32string chars = decode_utf8(text);
  std::string out;
  std::size_t id = 0;
  for (const Entity& e : entities) {
    if (e.start >= e.end || e.end > chars.size())
      throw Error(ErrorCode::OffsetOutOfRange, "entity outside text");
    out += "T" + std::to_string(++id) + "\t" + std::string(name_of(e.label)) + " " +
           std::to_string(e.start) + " " + std::to_string(e.end) + "\t" +
           encode_utf8(flatten_newlines(chars.substr(e.start, e.end - e.start))) + "\n";
  }
  return out;
}

}  // namespace histent
