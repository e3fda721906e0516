#include "histent/bio.hpp"

#include <algorithm>
#include <istream>
#include <optional>
#include <ostream>

#include "histent/error.hpp"

namespace histent {

MheTag MheTag::from_index(std::size_t index) {
  if (index >= kMheTagCount)
    throw Error(ErrorCode::DomainError, "history tag index " + std::to_string(index));
  return MheTag(index);
}

std::string MheTag::name() const {
  if (is_outside()) return "O";
  return std::string(is_begin() ? "B-" : "I-") + std::string(camel_name(mhe()));
}

MheTag parse_mhe_tag(std::string_view name) {
  if (name == "O") return MheTag::outside();
  if (name.size() > 2 && (name[0] == 'B' || name[0] == 'I') && name[1] == '-') {
    const std::string_view rest = name.substr(2);
    for (Concept c : kAllConcepts)
      if (camel_name(c) == rest) return name[0] == 'B' ? MheTag::begin(c) : MheTag::inside(c);
  }
  throw Error(ErrorCode::MalformedInput, "unknown tag '" + std::string(name) + "'");
}

BmeTag BmeTag::from_index(std::size_t index) {
  if (index >= kBmeTagCount)
    throw Error(ErrorCode::DomainError, "basic entity tag index " + std::to_string(index));
  return BmeTag(index);
}

std::string BmeTag::name() const {
  if (is_outside()) return "O";
  return std::string(is_begin() ? "B-" : "I-") + std::string(camel_name(bme()));
}

BmeTagSet tags_of(const FeatureVector& row) {
  BmeTagSet out;
  for (std::size_t bit = 0; bit < kBmeFeatureWidth; ++bit)
    if (row.test(bit)) out.push_back(BmeTag::from_index(bit + 1));
  return out;
}

FeatureVector feature_row(const BmeTagSet& tags) {
  FeatureVector row;
  for (BmeTag t : tags)
    if (!t.is_outside()) row.set(t.index() - 1);
  return row;
}

bool is_valid_iob2(const std::vector<MheTag>& tags) {
  MheTag previous = MheTag::outside();
  for (MheTag t : tags) {
    if (t.is_inside() && (previous.is_outside() || previous.mhe() != t.mhe())) return false;
    previous = t;
  }
  return true;
}

TagSequence encode_bio(const Document& doc, const std::vector<Entity>& entities) {
  std::vector<Entity> mhe;
  for (const Entity& e : entities)
    if (e.is_mhe()) mhe.push_back(e);
  std::sort(mhe.begin(), mhe.end(), canonical_less);

  TagSequence seq{doc.doc_id(), std::vector<MheTag>(doc.tokens().size(), MheTag::outside())};
  std::optional<TokenRange> last_range;
  const Entity* last = nullptr;
  for (const Entity& e : mhe) {
    if (last && overlaps(*last, e))
      throw Error(ErrorCode::OverlappingEntities,
                  "entities [" + std::to_string(last->start) + "," + std::to_string(last->end) +
                      ") and [" + std::to_string(e.start) + "," + std::to_string(e.end) +
                      ") overlap");
    const TokenRange range = doc.covering_tokens(e);
    if (!range.empty()) {
      if (last_range && range.first < last_range->last)
        throw Error(ErrorCode::OverlappingEntities,
                    "entities share token " + std::to_string(range.first) + " after snapping");
      seq.tags[range.first] = MheTag::begin(e.mhe());
      for (std::size_t k = range.first + 1; k < range.last; ++k)
        seq.tags[k] = MheTag::inside(e.mhe());
      last_range = range;
    }
    if (!last || e.end > last->end) last = &e;
  }
  return seq;
}

DecodeResult decode_bio(const TagSequence& seq, const Document& doc, Source source) {
  const auto& tokens = doc.tokens();
  if (seq.tags.size() != tokens.size())
    throw Error(ErrorCode::LengthMismatch,
                std::to_string(seq.tags.size()) + " tags for " + std::to_string(tokens.size()) +
                    " tokens in '" + doc.doc_id() + "'");
  DecodeResult result;
  std::optional<Entity> open;
  auto close = [&] {
    if (open) result.entities.push_back(std::move(*open));
    open.reset();
  };
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    const MheTag t = seq.tags[k];
    if (t.is_outside()) {
      close();
      continue;
    }
    if (t.is_inside() && open && open->mhe() == t.mhe()) {
      open->end = tokens[k].end;
      continue;
    }
    if (t.is_inside())
      result.warnings.push_back("token " + std::to_string(k) + ": " + t.name() +
                                " does not continue an entity; starting a new one");
    close();
    open = Entity{t.mhe(), tokens[k].start, tokens[k].end, doc.doc_id(), source};
  }
  close();
  return result;
}

std::vector<FeatureVector> encode_bme_features(const Document& doc,
                                               const std::vector<Entity>& bme) {
  std::vector<FeatureVector> rows(doc.tokens().size());
  for (const Entity& e : bme) {
    if (e.is_mhe()) continue;
    const std::size_t b = index_of(std::get<BmeConcept>(e.label));
    const TokenRange range = doc.covering_tokens(e);
    if (range.empty()) continue;
    rows[range.first].set(2 * b);
    for (std::size_t k = range.first + 1; k < range.last; ++k) rows[k].set(2 * b + 1);
  }
  for (FeatureVector& row : rows)
    for (std::size_t b = 0; b < kBmeConceptCount; ++b)
      if (row.test(2 * b)) row.reset(2 * b + 1);
  return rows;
}

void write_conll(std::ostream& out, const Document& doc, const TagSequence& seq) {
  if (seq.tags.size() != doc.tokens().size())
    throw Error(ErrorCode::LengthMismatch, "tag sequence does not match token count");
  for (const TokenRange& sentence : doc.sentences()) {
    for (std::size_t k = sentence.first; k < sentence.last; ++k)
      out << doc.tokens()[k].text << '\t' << seq.tags[k].name() << '\n';
    out << '\n';
  }
}

std::vector<ConllSentence> read_conll(std::istream& in) {
  std::vector<ConllSentence> sentences;
  ConllSentence current;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      if (!current.empty()) sentences.push_back(std::move(current));
      current.clear();
      continue;
    }
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
      throw Error(ErrorCode::MalformedInput, "expected 'token<TAB>tag'",
                  SourceLocation{{}, line_no, {}});
    current.push_back(ConllToken{line.substr(0, tab), line.substr(tab + 1)});
  }
  if (!current.empty()) sentences.push_back(std::move(current));
  return sentences;
}

TagSequence tags_from_conll(const std::vector<ConllSentence>& sentences,
                            const std::string& doc_id) {
  TagSequence seq{doc_id, {}};
  for (const ConllSentence& s : sentences)
    for (const ConllToken& t : s) seq.tags.push_back(parse_mhe_tag(t.tag));
  return seq;
}

}  // namespace histent
