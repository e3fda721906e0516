#ifndef HISTENT_CORPUS_HPP
#define HISTENT_CORPUS_HPP

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "histent/concept.hpp"
#include "histent/text.hpp"

namespace histent {

enum class Source { Gold, Predicted };

/// A labeled character span. Offsets count Unicode code points; `end` is
/// exclusive.
struct Entity {
  Label label = Concept::CC;
  std::size_t start = 0;
  std::size_t end = 0;
  std::string doc_id;
  Source source = Source::Gold;

  bool is_mhe() const { return histent::is_mhe(label); }
  Concept mhe() const { return std::get<Concept>(label); }
  std::size_t length() const { return end - start; }

  friend bool operator==(const Entity&, const Entity&) = default;
};

/// Nonempty character intersection. Touching spans do not overlap.
inline bool overlaps(const Entity& a, const Entity& b) {
  return a.start < b.end && b.start < a.end;
}

/// Orders by (start, end, label).
bool canonical_less(const Entity& a, const Entity& b);

struct Token {
  std::string text;
  std::size_t start = 0;
  std::size_t end = 0;
  std::size_t index = 0;

  friend bool operator==(const Token&, const Token&) = default;
};

/// A headed note segment. For the leading headerless segment `header` is
/// empty and header_start == body_start.
struct Section {
  std::string header;
  std::size_t header_start = 0;
  std::size_t body_start = 0;
  std::size_t body_end = 0;

  bool headed() const { return !header.empty(); }
  bool contains(std::size_t offset) const { return offset >= header_start && offset < body_end; }
};

struct SectionizerOptions {
  /// When set, only lines whose normalized header is listed open a section.
  std::optional<std::set<std::string>> known_headers;
};

/// Splits text into tokens: maximal letter/digit runs, single punctuation
/// characters; whitespace is dropped.
std::vector<Token> tokenize(std::string_view text);
std::vector<Token> tokenize(std::u32string_view text);

/// A header is a line-initial run of upper-case letters, digits, spaces and
/// `& / , -` of at least two characters, containing a letter, immediately
/// followed by ':'. Text before the first header forms one headerless
/// section.
std::vector<Section> sectionize(std::string_view text, const SectionizerOptions& options = {});
std::vector<Section> sectionize(std::u32string_view text, const SectionizerOptions& options = {});

/// Upper-cases ASCII letters, trims, and collapses internal whitespace.
std::string normalize_header(std::string_view header);

/// Half-open token index range.
struct TokenRange {
  std::size_t first = 0;
  std::size_t last = 0;

  bool empty() const { return first >= last; }
  std::size_t size() const { return empty() ? 0 : last - first; }
  friend bool operator==(const TokenRange&, const TokenRange&) = default;
};

class Document {
 public:
  Document() = default;

  /// Builds the token and section views and validates every entity: offsets
  /// within the text, and no two gold history entities overlapping. Entity
  /// doc ids and sources are overwritten to match this document, and each
  /// list is put in canonical order.
  Document(std::string doc_id, std::string text, std::vector<Entity> gold = {},
           std::vector<Entity> predicted = {}, const SectionizerOptions& options = {});

  const std::string& doc_id() const { return doc_id_; }
  const std::string& text() const { return text_; }
  std::size_t length() const { return index_.size(); }
  std::string slice(std::size_t start, std::size_t end) const;
  std::string surface(const Entity& e) const { return slice(e.start, e.end); }

  const std::vector<Token>& tokens() const { return tokens_; }
  const std::vector<Section>& sections() const { return sections_; }
  const std::vector<Entity>& gold() const { return gold_; }
  const std::vector<Entity>& predicted() const { return predicted_; }

  std::vector<Entity> gold_mhe() const;
  std::vector<Entity> predicted_mhe() const;
  std::vector<Entity> gold_bme() const;

  /// Tokens overlapped by [start, end). Empty when the span covers only
  /// whitespace.
  TokenRange covering_tokens(std::size_t start, std::size_t end) const;
  TokenRange covering_tokens(const Entity& e) const { return covering_tokens(e.start, e.end); }

  /// Index of the section containing `offset`, if any.
  std::optional<std::size_t> section_at(std::size_t offset) const;

  /// Sentences as token ranges: a newline between two tokens starts a new
  /// sentence, and a "." token followed by whitespace or end of text closes
  /// one.
  std::vector<TokenRange> sentences() const;

  Document with_predictions(std::vector<Entity> predicted) const;
  Document with_gold(std::vector<Entity> gold) const;

  friend bool operator==(const Document& a, const Document& b) {
    return a.doc_id_ == b.doc_id_ && a.text_ == b.text_ && a.gold_ == b.gold_ &&
           a.predicted_ == b.predicted_;
  }

 private:
  void validate(std::vector<Entity>& entities, Source source) const;

  std::string doc_id_;
  std::string text_;
  std::u32string chars_;
  Utf8Index index_;
  std::vector<Token> tokens_;
  std::vector<Section> sections_;
  std::vector<Entity> gold_;
  std::vector<Entity> predicted_;
  SectionizerOptions options_;
};

// --- standoff JSON -------------------------------------------------------

/// Parses one standoff JSON object:
/// {"doc_id": str, "text": str, "gold": [...], "predicted": [...]} where each
/// entity is {"concept": name, "start": int, "end": int}. Missing entity
/// arrays are empty.
Document parse_standoff_json(std::string_view bytes, const SectionizerOptions& options = {});

/// Canonical single-line form: keys in the order above, entities sorted.
std::string serialize_standoff_json(const Document& doc);

/// Reads a JSON-Lines corpus. Blank lines are skipped. Errors carry the
/// 1-based line (and column for syntax errors) and `source_name`.
std::vector<Document> read_corpus_jsonl(std::istream& in, const std::string& source_name = {},
                                        const SectionizerOptions& options = {});
std::vector<Document> read_corpus_file(const std::string& path,
                                       const SectionizerOptions& options = {});
void write_corpus_jsonl(std::ostream& out, const std::vector<Document>& docs);

// --- brat standoff -------------------------------------------------------

using LabelMap = std::map<std::string, Label, std::less<>>;

/// Interchange names plus CamelCase spellings ("CC", "HpiLocation",
/// "BodyLocation").
const LabelMap& default_brat_label_map();

/// Parses text-bound annotations ("T1<TAB>Label start end<TAB>surface").
/// Other annotation kinds (attributes, relations, notes) are ignored.
std::vector<Entity> parse_brat(std::string_view text, std::string_view ann,
                               const std::string& doc_id = {}, Source source = Source::Gold,
                               const LabelMap& labels = default_brat_label_map());

std::string emit_brat(std::string_view text, const std::vector<Entity>& entities);

// --- GPT HTML span markup -------------------------------------------------

/// Class attribute values accepted in span markup, e.g. "hpi.location".
std::string_view html_class_of(Concept c);
std::optional<Concept> concept_from_html_class(std::string_view cls);

struct MarkedText {
  std::string text;
  std::vector<Entity> entities;
};

/// Strips `<span class="...">...</span>` markup into plain text plus
/// entities. The character references &amp; &lt; &gt; &quot; &#39; are
/// decoded; all other text is kept verbatim.
MarkedText parse_gpt_html(std::string_view marked, const std::string& doc_id = {},
                          Source source = Source::Predicted);

/// Inverse of parse_gpt_html for non-overlapping history entities.
std::string render_gpt_html(std::string_view text, const std::vector<Entity>& entities);

}  // namespace histent

#endif  // HISTENT_CORPUS_HPP
