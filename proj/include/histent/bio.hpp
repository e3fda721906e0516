#ifndef HISTENT_BIO_HPP
#define HISTENT_BIO_HPP

#include <bitset>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "histent/corpus.hpp"

namespace histent {

inline constexpr std::size_t kMheTagCount = 1 + 2 * kConceptCount;
inline constexpr std::size_t kBmeTagCount = 1 + 2 * kBmeConceptCount;
inline constexpr std::size_t kBmeFeatureWidth = 2 * kBmeConceptCount;

/// Token label over the history concepts. Index 0 is O, B-c is 1 + 2c and
/// I-c is 2 + 2c.
class MheTag {
 public:
  constexpr MheTag() = default;

  static constexpr MheTag outside() { return MheTag(0); }
  static constexpr MheTag begin(Concept c) { return MheTag(1 + 2 * index_of(c)); }
  static constexpr MheTag inside(Concept c) { return MheTag(2 + 2 * index_of(c)); }
  /// Throws Error(DomainError) for index >= kMheTagCount.
  static MheTag from_index(std::size_t index);

  constexpr std::size_t index() const { return index_; }
  constexpr bool is_outside() const { return index_ == 0; }
  constexpr bool is_begin() const { return index_ % 2 == 1; }
  constexpr bool is_inside() const { return index_ != 0 && index_ % 2 == 0; }
  /// Concept of a B or I tag. Undefined for O.
  constexpr Concept mhe() const { return static_cast<Concept>((index_ - 1) / 2); }

  /// "O", "B-PastHistory", "I-CC", ...
  std::string name() const;

  friend constexpr bool operator==(MheTag, MheTag) = default;

 private:
  constexpr explicit MheTag(std::size_t index) : index_(static_cast<std::uint8_t>(index)) {}
  std::uint8_t index_ = 0;
};

/// Parses the output of MheTag::name. Throws Error(MalformedInput).
MheTag parse_mhe_tag(std::string_view name);

/// Token label over the basic entity concepts, same layout as MheTag.
class BmeTag {
 public:
  constexpr BmeTag() = default;

  static constexpr BmeTag outside() { return BmeTag(0); }
  static constexpr BmeTag begin(BmeConcept c) { return BmeTag(1 + 2 * index_of(c)); }
  static constexpr BmeTag inside(BmeConcept c) { return BmeTag(2 + 2 * index_of(c)); }
  static BmeTag from_index(std::size_t index);

  constexpr std::size_t index() const { return index_; }
  constexpr bool is_outside() const { return index_ == 0; }
  constexpr bool is_begin() const { return index_ % 2 == 1; }
  constexpr BmeConcept bme() const { return static_cast<BmeConcept>((index_ - 1) / 2); }

  std::string name() const;

  friend constexpr bool operator==(BmeTag, BmeTag) = default;

 private:
  constexpr explicit BmeTag(std::size_t index) : index_(static_cast<std::uint8_t>(index)) {}
  std::uint8_t index_ = 0;
};

/// Multi-hot BME row. Bit 2b is B-b, bit 2b+1 is I-b.
using FeatureVector = std::bitset<kBmeFeatureWidth>;

/// Tags set on one token, in index order. Empty means O.
using BmeTagSet = std::vector<BmeTag>;

BmeTagSet tags_of(const FeatureVector& row);
FeatureVector feature_row(const BmeTagSet& tags);

struct TagSequence {
  std::string doc_id;
  std::vector<MheTag> tags;

  friend bool operator==(const TagSequence&, const TagSequence&) = default;
};

/// True when no I-c follows O or a tag of another concept.
bool is_valid_iob2(const std::vector<MheTag>& tags);

/// Tags each token overlapped by a history entity: B on the first covered
/// token, I on the rest. Boundaries inside a token snap outward. Basic
/// entities are ignored, as are spans covering only whitespace. Throws
/// Error(OverlappingEntities) if two entities overlap before or after
/// snapping.
TagSequence encode_bio(const Document& doc, const std::vector<Entity>& entities);

struct DecodeResult {
  std::vector<Entity> entities;
  std::vector<std::string> warnings;
};

/// Turns B/I runs back into spans. A stray I starts a new entity and adds a
/// warning. Throws Error(LengthMismatch) when the tag count differs from the
/// token count.
DecodeResult decode_bio(const TagSequence& tags, const Document& doc,
                        Source source = Source::Predicted);

/// One FeatureVector per token from basic entity spans; history entities
/// are ignored. If a token is both B and I for the same concept, B wins.
std::vector<FeatureVector> encode_bme_features(const Document& doc,
                                               const std::vector<Entity>& bme);

// --- two-column text format ----------------------------------------------

struct ConllToken {
  std::string token;
  std::string tag;

  friend bool operator==(const ConllToken&, const ConllToken&) = default;
};

using ConllSentence = std::vector<ConllToken>;

/// Writes "token<TAB>tag" lines with a blank line after each sentence.
void write_conll(std::ostream& out, const Document& doc, const TagSequence& tags);

/// Reads the two-column format. Throws Error(MalformedInput) with the line
/// number on rows without exactly one tab.
std::vector<ConllSentence> read_conll(std::istream& in);

/// Flattens sentences into a tag sequence for `doc_id`.
TagSequence tags_from_conll(const std::vector<ConllSentence>& sentences,
                            const std::string& doc_id = {});

}  // namespace histent

#endif  // HISTENT_BIO_HPP
