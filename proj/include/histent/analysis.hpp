#ifndef HISTENT_ANALYSIS_HPP
#define HISTENT_ANALYSIS_HPP

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "histent/corpus.hpp"
#include "histent/matcher.hpp"
#include "histent/stats.hpp"

namespace histent::analysis {

// --- entity length ----------------------------------------------------------

struct LengthRecord {
  MatchCategory category;
  std::size_t entity_token_length = 1;
};

/// One record per counted match event. Gold spans are measured for EM, RM,
/// MM and UD, predicted spans for OD. Spans covering no token are skipped.
std::vector<LengthRecord> length_records(const Document& doc, const MatchReport& report);

struct CategoryLength {
  MatchCategory category;
  std::optional<stats::SummarySample> summary;  // empty when no entity fell here
  std::optional<stats::TestResult> test;        // vs ExactMatch
  std::string note;                             // "reference", or why the test was skipped
};

struct LengthAnalysis {
  std::array<CategoryLength, kMatchCategoryCount> rows;
};

LengthAnalysis entity_length_analysis(const std::vector<LengthRecord>& records);
LengthAnalysis entity_length_analysis(const std::map<MatchCategory, stats::SummarySample>& summaries);

// --- note length ------------------------------------------------------------

enum class NoteMeasure { EM, RM, MM, UD, OD, MMUD, Error, RMError };

inline constexpr std::size_t kNoteMeasureCount = 8;

inline constexpr std::array<NoteMeasure, kNoteMeasureCount> kAllNoteMeasures = {
    NoteMeasure::EM, NoteMeasure::RM,   NoteMeasure::MM,    NoteMeasure::UD,
    NoteMeasure::OD, NoteMeasure::MMUD, NoteMeasure::Error, NoteMeasure::RMError,
};

std::string_view name_of(NoteMeasure m);        // "em" ... "rm_error"
std::string_view display_name(NoteMeasure m);   // "EM" ... "RM+Error"

struct NoteRecord {
  std::string doc_id;
  std::size_t word_count = 0;
  std::size_t gold_count = 0;
  MatchCounts counts;

  std::size_t count(NoteMeasure m) const;
  std::size_t error_count() const { return counts.error(); }
  /// count / gold_count; empty for notes without gold entities.
  std::optional<double> rate(NoteMeasure m) const;
  std::optional<double> error_rate() const { return rate(NoteMeasure::Error); }
};

/// word_count is the note's token count.
NoteRecord note_record(const Document& doc, const MatchReport& report);

struct NoteLengthAnalysis {
  std::size_t notes = 0;
  std::size_t rate_notes = 0;  // notes with at least one gold entity
  std::array<std::optional<stats::TestResult>, kNoteMeasureCount> counts;
  std::array<std::optional<stats::TestResult>, kNoteMeasureCount> rates;
};

/// Pearson correlation of word count against each measure. A measure that is
/// constant across notes is left empty. Throws Error(DomainError) for fewer
/// than three notes and Error(ZeroVariance) when all word counts agree.
NoteLengthAnalysis note_length_analysis(const std::vector<NoteRecord>& notes);

// --- segmentation -----------------------------------------------------------

enum class HeaderGroup { CC, HPI, PastHistory, FamilyHistory, SocialHistory };

inline constexpr std::size_t kHeaderGroupCount = 5;

inline constexpr std::array<HeaderGroup, kHeaderGroupCount> kAllHeaderGroups = {
    HeaderGroup::CC, HeaderGroup::HPI, HeaderGroup::PastHistory, HeaderGroup::FamilyHistory,
    HeaderGroup::SocialHistory,
};

std::string_view name_of(HeaderGroup g);       // "CC", "HPI", "PastHistory", ...
std::string_view display_name(HeaderGroup g);  // "CC", "HPI", "Past H.", ...
HeaderGroup parse_header_group(std::string_view name);
HeaderGroup group_of(Concept c);

class HeaderLexicon {
 public:
  HeaderLexicon() = default;

  static const HeaderLexicon& standard();

  /// {"CC": ["CHIEF COMPLAINT"], "HPI": [...], ...}. Groups left out get no
  /// dedicated headers. Throws Error(UnknownHeaderGroup) or
  /// Error(MalformedInput).
  static HeaderLexicon from_json(std::string_view json);
  static HeaderLexicon load(const std::string& path);

  void add(HeaderGroup g, std::string_view header);
  const std::set<std::string>& headers(HeaderGroup g) const;

  /// True if `header` (already normalized) is dedicated to `g`. An entry
  /// ending in "(S)" accepts both the singular and the plural.
  bool accepts(HeaderGroup g, std::string_view header) const;

  std::string to_json() const;

 private:
  std::array<std::set<std::string>, kHeaderGroupCount> headers_;
};

struct SectionPlacement {
  Entity entity;
  bool in_dedicated_section = false;
  HeaderGroup group = HeaderGroup::CC;
};

SectionPlacement place(const Entity& entity, const std::vector<Section>& sections,
                       const HeaderLexicon& lexicon);

/// A placed gold entity and whether it was found: EM or RM as primary
/// outcome counts as found, anything else as MMUD.
struct PlacedOutcome {
  SectionPlacement placement;
  bool found = false;
};

std::vector<PlacedOutcome> placed_outcomes(const Document& doc, const MatchReport& report,
                                           const HeaderLexicon& lexicon);

struct SegmentationRow {
  HeaderGroup group;
  stats::ContingencyTable table;  // a, b: found in/out; c, d: MMUD in/out
  std::optional<stats::TestResult> test;
  std::string note;
};

struct SegmentationAnalysis {
  std::array<SegmentationRow, kHeaderGroupCount> rows;
};

SegmentationAnalysis segmentation_analysis(const std::vector<PlacedOutcome>& outcomes);

/// `reports[i]` must score `docs[i]`. Throws Error(LengthMismatch) or
/// Error(DocIdMismatch) otherwise.
SegmentationAnalysis segmentation_analysis(const std::vector<Document>& docs,
                                           const std::vector<MatchReport>& reports,
                                           const HeaderLexicon& lexicon);

// --- reports ----------------------------------------------------------------

/// "<0.001" below one in a thousand, otherwise three decimals.
std::string format_p(double p);

void write_length_csv(std::ostream& out, const LengthAnalysis& analysis);
void write_length_markdown(std::ostream& out, const LengthAnalysis& analysis);

/// Rows r_counts, p_counts, r_rates, p_rates; one column per measure.
void write_note_footer_csv(std::ostream& out, const NoteLengthAnalysis& analysis);
void write_note_footer_markdown(std::ostream& out, const NoteLengthAnalysis& analysis);
void write_note_csv(std::ostream& out, const std::vector<NoteRecord>& notes);

void write_segmentation_csv(std::ostream& out, const SegmentationAnalysis& analysis);
void write_segmentation_markdown(std::ostream& out, const SegmentationAnalysis& analysis);

/// Scatter of word count against one measure with a least-squares line.
void write_scatter_svg(std::ostream& out, const std::vector<NoteRecord>& notes, NoteMeasure m,
                       bool as_rate);

}  // namespace histent::analysis

#endif  // HISTENT_ANALYSIS_HPP
