#include <algorithm>
#include <array>
#include <cctype>

#include "histent/corpus.hpp"
#include "histent/error.hpp"

namespace histent {

namespace {

constexpr std::array<std::string_view, kConceptCount> kHtmlClasses = {
    "cc",           "hpi.location",         "hpi.quality",
    "hpi.severity", "hpi.duration",         "hpi.timing",
    "hpi.context",  "hpi.modifyingFactors", "hpi.assocSignsAndSymptoms",
    "pastHistory",  "familyHistory",        "socialHistory",
};

struct CharRef {
  std::string_view name;
  char32_t cp;
};

constexpr std::array<CharRef, 5> kCharRefs = {{
    {"&amp;", U'&'}, {"&lt;", U'<'}, {"&gt;", U'>'}, {"&quot;", U'"'}, {"&#39;", U'\''},
}};

SourceLocation location_at(std::string_view s, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < s.size(); ++i) {
    if (s[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return SourceLocation{{}, line, col};
}

bool starts_with_ci(std::string_view s, std::size_t pos, std::string_view prefix) {
  if (s.size() - pos < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(s[pos + i])) != prefix[i]) return false;
  return true;
}

// Extracts the class attribute from the inside of an opening span tag.
std::optional<std::string_view> class_attribute(std::string_view attrs) {
  std::size_t pos = 0;
  while (pos < attrs.size()) {
    while (pos < attrs.size() && std::isspace(static_cast<unsigned char>(attrs[pos]))) ++pos;
    const std::size_t name_start = pos;
    while (pos < attrs.size() && attrs[pos] != '=' &&
           !std::isspace(static_cast<unsigned char>(attrs[pos])))
      ++pos;
    const std::string_view name = attrs.substr(name_start, pos - name_start);
    while (pos < attrs.size() && std::isspace(static_cast<unsigned char>(attrs[pos]))) ++pos;
    if (pos >= attrs.size() || attrs[pos] != '=') {
      if (name.empty()) break;
      continue;
    }
    ++pos;
    while (pos < attrs.size() && std::isspace(static_cast<unsigned char>(attrs[pos]))) ++pos;
    std::string_view value;
    if (pos < attrs.size() && (attrs[pos] == '"' || attrs[pos] == '\'')) {
      const char quote = attrs[pos];
      const std::size_t close = attrs.find(quote, pos + 1);
      if (close == std::string_view::npos) return std::nullopt;
      value = attrs.substr(pos + 1, close - pos - 1);
      pos = close + 1;
    } else {
      const std::size_t value_start = pos;
      while (pos < attrs.size() && !std::isspace(static_cast<unsigned char>(attrs[pos]))) ++pos;
      value = attrs.substr(value_start, pos - value_start);
    }
    if (name == "class") {
      while (!value.empty() && value.front() == ' ') value.remove_prefix(1);
      while (!value.empty() && value.back() == ' ') value.remove_suffix(1);
      return value;
    }
  }
  return std::nullopt;
}

}  // namespace

std::string_view html_class_of(Concept c) { return kHtmlClasses[index_of(c)]; }

std::optional<Concept> concept_from_html_class(std::string_view cls) {
  for (Concept c : kAllConcepts)
    if (kHtmlClasses[index_of(c)] == cls) return c;
  return std::nullopt;
}

MarkedText parse_gpt_html(std::string_view marked, const std::string& doc_id, Source source) {
  std::u32string plain;
  std::vector<Entity> entities;
  std::optional<Concept> open;
  std::size_t open_start = 0;
  std::size_t open_byte = 0;
  std::size_t literal_start = 0;

  auto flush = [&](std::size_t until) {
    plain += decode_utf8(marked.substr(literal_start, until - literal_start));
  };

  std::size_t i = 0;
  while (i < marked.size()) {
    const char ch = marked[i];
    if (ch == '&') {
      bool matched = false;
      for (const CharRef& ref : kCharRefs) {
        if (marked.substr(i, ref.name.size()) == ref.name) {
          flush(i);
          plain.push_back(ref.cp);
          i += ref.name.size();
          literal_start = i;
          matched = true;
          break;
        }
      }
      if (!matched) ++i;
      continue;
    }
    if (ch != '<') {
      ++i;
      continue;
    }
    const bool opening = starts_with_ci(marked, i, "<span") && i + 5 < marked.size() &&
                         (marked[i + 5] == '>' ||
                          std::isspace(static_cast<unsigned char>(marked[i + 5])));
    const bool closing = starts_with_ci(marked, i, "</span");
    if (!opening && !closing) {
      ++i;
      continue;
    }
    const std::size_t gt = marked.find('>', i);
    if (gt == std::string_view::npos)
      throw Error(ErrorCode::UnclosedTag, "tag is never closed with '>'", location_at(marked, i));
    flush(i);
    if (opening) {
      if (open)
        throw Error(ErrorCode::NestedTag, "span opened inside another span",
                    location_at(marked, i));
      const auto cls = class_attribute(marked.substr(i + 5, gt - i - 5));
      const auto found = cls ? concept_from_html_class(*cls) : std::nullopt;
      if (!found)
        throw Error(ErrorCode::UnknownClass,
                    "unknown span class '" + std::string(cls.value_or("")) + "'",
                    location_at(marked, i));
      open = found;
      open_start = plain.size();
      open_byte = i;
    } else {
      if (!open)
        throw Error(ErrorCode::MalformedInput, "closing span without an opening span",
                    location_at(marked, i));
      if (plain.size() > open_start)
        entities.push_back(Entity{*open, open_start, plain.size(), doc_id, source});
      open.reset();
    }
    i = gt + 1;
    literal_start = i;
  }
  flush(marked.size());
  if (open)
    throw Error(ErrorCode::UnclosedTag, "span is never closed", location_at(marked, open_byte));
  return MarkedText{encode_utf8(plain), std::move(entities)};
}

std::string render_gpt_html(std::string_view text, const std::vector<Entity>& entities) {
  const std::u32string chars = decode_utf8(text);
  std::vector<Entity> sorted = entities;
  std::sort(sorted.begin(), sorted.end(), canonical_less);

  std::string out;
  auto emit = [&](std::size_t from, std::size_t to) {
    for (std::size_t k = from; k < to; ++k) {
      switch (chars[k]) {
        case U'&': out += "&amp;"; break;
        case U'<': out += "&lt;"; break;
        case U'>': out += "&gt;"; break;
        default: append_utf8(out, chars[k]);
      }
    }
  };

  std::size_t cursor = 0;
  for (const Entity& e : sorted) {
    if (!e.is_mhe()) continue;
    if (e.start < cursor || e.start >= e.end || e.end > chars.size())
      throw Error(ErrorCode::OverlappingEntities, "span markup needs ordered, disjoint entities");
    emit(cursor, e.start);
    out += "<span class=\"";
    out += html_class_of(e.mhe());
    out += "\">";
    emit(e.start, e.end);
    out += "</span>";
    cursor = e.end;
  }
  emit(cursor, chars.size());
  return out;
}

}  // namespace histent
