#ifndef HISTENT_CONCEPT_HPP
#define HISTENT_CONCEPT_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace histent {

/// Medical history entity labels: chief complaint, the eight HPI
/// sub-concepts, and past/family/social history.
enum class Concept : std::uint8_t {
  CC,
  HpiLocation,
  HpiQuality,
  HpiSeverity,
  HpiDuration,
  HpiTiming,
  HpiContext,
  HpiModifyingFactor,
  HpiAssocSignsSymptoms,
  PastHistory,
  FamilyHistory,
  SocialHistory,
};

inline constexpr std::size_t kConceptCount = 12;

inline constexpr std::array<Concept, kConceptCount> kAllConcepts = {
    Concept::CC,
    Concept::HpiLocation,
    Concept::HpiQuality,
    Concept::HpiSeverity,
    Concept::HpiDuration,
    Concept::HpiTiming,
    Concept::HpiContext,
    Concept::HpiModifyingFactor,
    Concept::HpiAssocSignsSymptoms,
    Concept::PastHistory,
    Concept::FamilyHistory,
    Concept::SocialHistory,
};

/// Basic medical entities produced by an external extractor. The first four
/// form group 1, the last three group 2; entities of different groups may
/// overlap.
enum class BmeConcept : std::uint8_t {
  Problem,
  Test,
  Treatment,
  Drug,
  BodyLocation,
  Severity,
  Temporal,
};

inline constexpr std::size_t kBmeConceptCount = 7;

inline constexpr std::array<BmeConcept, kBmeConceptCount> kAllBmeConcepts = {
    BmeConcept::Problem,      BmeConcept::Test,     BmeConcept::Treatment,
    BmeConcept::Drug,         BmeConcept::BodyLocation, BmeConcept::Severity,
    BmeConcept::Temporal,
};

constexpr std::size_t index_of(Concept c) { return static_cast<std::size_t>(c); }
constexpr std::size_t index_of(BmeConcept c) { return static_cast<std::size_t>(c); }

constexpr int bme_group(BmeConcept c) { return index_of(c) < 4 ? 1 : 2; }

constexpr bool is_hpi(Concept c) {
  return c >= Concept::HpiLocation && c <= Concept::HpiAssocSignsSymptoms;
}

using Label = std::variant<Concept, BmeConcept>;

/// Lower-snake-case interchange names ("cc", "hpi_location", "body_location").
std::string_view name_of(Concept c);
std::string_view name_of(BmeConcept c);
std::string_view name_of(const Label& label);

/// CamelCase spellings ("PastHistory", "BodyLocation").
std::string_view camel_name(Concept c);
std::string_view camel_name(BmeConcept c);

/// Short row labels used in rendered tables ("CC", "Location", "Past H.").
std::string_view display_name(Concept c);

/// Parses an interchange name. Throws Error(UnknownConcept).
Label parse_label(std::string_view name);
std::optional<Label> try_parse_label(std::string_view name);
Concept parse_concept(std::string_view name);

inline bool is_mhe(const Label& label) { return std::holds_alternative<Concept>(label); }

}  // namespace histent

#endif  // HISTENT_CONCEPT_HPP
