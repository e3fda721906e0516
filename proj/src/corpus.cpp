#include "histent/corpus.hpp"

#include <algorithm>

#include "histent/error.hpp"

namespace histent {

bool canonical_less(const Entity& a, const Entity& b) {
  if (a.start != b.start) return a.start < b.start;
  if (a.end != b.end) return a.end < b.end;
  return a.label < b.label;
}

std::vector<Token> tokenize(std::u32string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    CharClass cls = classify(text[i]);
    if (cls == CharClass::Space) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    if (cls == CharClass::Word)
      while (j < text.size() && classify(text[j]) == CharClass::Word) ++j;
    tokens.push_back(Token{encode_utf8(text.substr(i, j - i)), i, j, tokens.size()});
    i = j;
  }
  return tokens;
}

std::vector<Token> tokenize(std::string_view text) { return tokenize(decode_utf8(text)); }

std::string normalize_header(std::string_view header) {
  std::string out;
  bool pending_space = false;
  for (char ch : header) {
    if (ch == ' ' || ch == '\t') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(ch >= 'a' && ch <= 'z' ? static_cast<char>(ch - 'a' + 'A') : ch);
  }
  return out;
}

namespace {

bool is_header_char(char32_t cp) {
  return (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9') || cp == ' ' || cp == '&' ||
         cp == '/' || cp == ',' || cp == '-';
}

struct HeaderHit {
  std::size_t start;
  std::size_t colon;
  std::string normalized;
};

std::optional<HeaderHit> header_at(std::u32string_view text, std::size_t line_start,
                                   const SectionizerOptions& options) {
  std::size_t j = line_start;
  bool has_letter = false;
  while (j < text.size() && is_header_char(text[j])) {
    has_letter = has_letter || (text[j] >= 'A' && text[j] <= 'Z');
    ++j;
  }
  if (j >= text.size() || text[j] != U':' || j - line_start < 2 || !has_letter)
    return std::nullopt;
  std::string normalized = normalize_header(encode_utf8(text.substr(line_start, j - line_start)));
  if (options.known_headers && !options.known_headers->contains(normalized)) return std::nullopt;
  return HeaderHit{line_start, j, std::move(normalized)};
}

}  // namespace

std::vector<Section> sectionize(std::u32string_view text, const SectionizerOptions& options) {
  std::vector<HeaderHit> hits;
  for (std::size_t i = 0; i < text.size();) {
    if (auto hit = header_at(text, i, options)) hits.push_back(std::move(*hit));
    std::size_t nl = text.find(U'\n', i);
    if (nl == std::u32string_view::npos) break;
    i = nl + 1;
  }

  std::vector<Section> sections;
  const std::size_t first_header = hits.empty() ? text.size() : hits.front().start;
  if (first_header > 0) sections.push_back(Section{"", 0, 0, first_header});
  for (std::size_t k = 0; k < hits.size(); ++k) {
    const std::size_t body_end = k + 1 < hits.size() ? hits[k + 1].start : text.size();
    sections.push_back(
        Section{std::move(hits[k].normalized), hits[k].start, hits[k].colon + 1, body_end});
  }
  return sections;
}

std::vector<Section> sectionize(std::string_view text, const SectionizerOptions& options) {
  return sectionize(decode_utf8(text), options);
}

// --- Document ------------------------------------------------------------

Document::Document(std::string doc_id, std::string text, std::vector<Entity> gold,
                   std::vector<Entity> predicted, const SectionizerOptions& options)
    : doc_id_(std::move(doc_id)),
      text_(std::move(text)),
      chars_(decode_utf8(text_)),
      index_(text_),
      tokens_(tokenize(chars_)),
      sections_(sectionize(chars_, options)),
      gold_(std::move(gold)),
      predicted_(std::move(predicted)),
      options_(options) {
  validate(gold_, Source::Gold);
  validate(predicted_, Source::Predicted);
}

void Document::validate(std::vector<Entity>& entities, Source source) const {
  for (Entity& e : entities) {
    e.doc_id = doc_id_;
    e.source = source;
    if (e.start >= e.end || e.end > length())
      throw Error(ErrorCode::OffsetOutOfRange,
                  "entity [" + std::to_string(e.start) + "," + std::to_string(e.end) +
                      ") outside document '" + doc_id_ + "' of length " +
                      std::to_string(length()));
  }
  std::sort(entities.begin(), entities.end(), canonical_less);
  if (source != Source::Gold) return;
  const Entity* previous = nullptr;
  for (const Entity& e : entities) {
    if (!e.is_mhe()) continue;
    if (previous && overlaps(*previous, e))
      throw Error(ErrorCode::OverlappingEntities,
                  "gold entities [" + std::to_string(previous->start) + "," +
                      std::to_string(previous->end) + ") and [" + std::to_string(e.start) + "," +
                      std::to_string(e.end) + ") overlap in document '" + doc_id_ + "'");
    if (!previous || e.end > previous->end) previous = &e;
  }
}

std::string Document::slice(std::size_t start, std::size_t end) const {
  if (start > end || end > length())
    throw Error(ErrorCode::OffsetOutOfRange, "slice outside document '" + doc_id_ + "'");
  const std::size_t b0 = index_.byte_offset(start);
  return text_.substr(b0, index_.byte_offset(end) - b0);
}

namespace {

std::vector<Entity> filter_mhe(const std::vector<Entity>& entities, bool want_mhe) {
  std::vector<Entity> out;
  for (const Entity& e : entities)
    if (e.is_mhe() == want_mhe) out.push_back(e);
  return out;
}

}  // namespace

std::vector<Entity> Document::gold_mhe() const { return filter_mhe(gold_, true); }
std::vector<Entity> Document::predicted_mhe() const { return filter_mhe(predicted_, true); }
std::vector<Entity> Document::gold_bme() const { return filter_mhe(gold_, false); }

TokenRange Document::covering_tokens(std::size_t start, std::size_t end) const {
  auto first = std::partition_point(tokens_.begin(), tokens_.end(),
                                    [start](const Token& t) { return t.end <= start; });
  auto last = std::partition_point(first, tokens_.end(),
                                   [end](const Token& t) { return t.start < end; });
  return TokenRange{static_cast<std::size_t>(first - tokens_.begin()),
                    static_cast<std::size_t>(last - tokens_.begin())};
}

std::optional<std::size_t> Document::section_at(std::size_t offset) const {
  for (std::size_t k = 0; k < sections_.size(); ++k)
    if (sections_[k].contains(offset)) return k;
  return std::nullopt;
}

std::vector<TokenRange> Document::sentences() const {
  std::vector<TokenRange> out;
  std::size_t first = 0;
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (i > first) {
      const std::size_t gap_start = tokens_[i - 1].end;
      const bool newline =
          std::find(chars_.begin() + static_cast<std::ptrdiff_t>(gap_start),
                    chars_.begin() + static_cast<std::ptrdiff_t>(tokens_[i].start),
                    U'\n') != chars_.begin() + static_cast<std::ptrdiff_t>(tokens_[i].start);
      if (newline) {
        out.push_back({first, i});
        first = i;
      }
    }
    const Token& t = tokens_[i];
    const bool period_end =
        t.text == "." && (t.end == chars_.size() || classify(chars_[t.end]) == CharClass::Space);
    if (period_end) {
      out.push_back({first, i + 1});
      first = i + 1;
    }
  }
  if (first < tokens_.size()) out.push_back({first, tokens_.size()});
  return out;
}

Document Document::with_predictions(std::vector<Entity> predicted) const {
  return Document(doc_id_, text_, gold_, std::move(predicted), options_);
}

Document Document::with_gold(std::vector<Entity> gold) const {
  return Document(doc_id_, text_, std::move(gold), predicted_, options_);
}

}  // namespace histent
