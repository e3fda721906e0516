#include "histent/concept.hpp"

#include "histent/error.hpp"

namespace histent {

namespace {

constexpr std::array<std::string_view, kConceptCount> kConceptNames = {
    "cc",          "hpi_location",         "hpi_quality",
    "hpi_severity", "hpi_duration",        "hpi_timing",
    "hpi_context", "hpi_modifying_factor", "hpi_assoc_signs_symptoms",
    "past_history", "family_history",      "social_history",
};

constexpr std::array<std::string_view, kConceptCount> kDisplayNames = {
    "CC",     "Location", "Quality", "Severity", "Duration", "Timing",
    "Context", "M.F.",    "Symptom", "Past H.",  "Fam. H.",  "Social H.",
};

constexpr std::array<std::string_view, kBmeConceptCount> kBmeNames = {
    "problem", "test", "treatment", "drug", "body_location", "severity", "temporal",
};

constexpr std::array<std::string_view, kConceptCount> kCamelNames = {
    "CC",          "HpiLocation",        "HpiQuality",
    "HpiSeverity", "HpiDuration",        "HpiTiming",
    "HpiContext",  "HpiModifyingFactor", "HpiAssocSignsSymptoms",
    "PastHistory", "FamilyHistory",      "SocialHistory",
};

constexpr std::array<std::string_view, kBmeConceptCount> kBmeCamelNames = {
    "Problem", "Test", "Treatment", "Drug", "BodyLocation", "Severity", "Temporal",
};

}  // namespace

std::string_view name_of(Concept c) { return kConceptNames[index_of(c)]; }
std::string_view name_of(BmeConcept c) { return kBmeNames[index_of(c)]; }

std::string_view name_of(const Label& label) {
  return std::visit([](auto c) { return name_of(c); }, label);
}

std::string_view camel_name(Concept c) { return kCamelNames[index_of(c)]; }
std::string_view camel_name(BmeConcept c) { return kBmeCamelNames[index_of(c)]; }

std::string_view display_name(Concept c) { return kDisplayNames[index_of(c)]; }

std::optional<Label> try_parse_label(std::string_view name) {
  for (Concept c : kAllConcepts)
    if (name_of(c) == name) return Label{c};
  for (BmeConcept c : kAllBmeConcepts)
    if (name_of(c) == name) return Label{c};
  return std::nullopt;
}

Label parse_label(std::string_view name) {
  if (auto label = try_parse_label(name)) return *label;
  throw Error(ErrorCode::UnknownConcept, "unknown concept '" + std::string(name) + "'");
}

Concept parse_concept(std::string_view name) {
  Label label = parse_label(name);
  if (!is_mhe(label))
    throw Error(ErrorCode::UnknownConcept,
                "'" + std::string(name) + "' is a basic medical entity, not a history concept");
  return std::get<Concept>(label);
}

}  // namespace histent
