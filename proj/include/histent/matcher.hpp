#ifndef HISTENT_MATCHER_HPP
#define HISTENT_MATCHER_HPP

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "histent/corpus.hpp"

namespace histent {

enum class MatchCategory { ExactMatch, RelaxedMatch, Mismatch, UnderDetection, OverDetection };

inline constexpr std::size_t kMatchCategoryCount = 5;

inline constexpr std::array<MatchCategory, kMatchCategoryCount> kAllMatchCategories = {
    MatchCategory::ExactMatch, MatchCategory::RelaxedMatch, MatchCategory::Mismatch,
    MatchCategory::UnderDetection, MatchCategory::OverDetection,
};

std::string_view name_of(MatchCategory c);       // "exact_match"
std::string_view display_name(MatchCategory c);  // "Exact Match"

constexpr bool is_error(MatchCategory c) {
  return c == MatchCategory::Mismatch || c == MatchCategory::UnderDetection ||
         c == MatchCategory::OverDetection;
}
constexpr bool is_mmud(MatchCategory c) {
  return c == MatchCategory::Mismatch || c == MatchCategory::UnderDetection;
}

struct MatchCounts {
  std::size_t em = 0;
  std::size_t rm = 0;
  std::size_t mm = 0;
  std::size_t ud = 0;
  std::size_t od = 0;

  std::size_t error() const { return mm + ud + od; }
  std::size_t mmud() const { return mm + ud; }
  std::size_t rm_plus_error() const { return rm + error(); }

  std::size_t get(MatchCategory c) const;
  void add(MatchCategory c, std::size_t n = 1);

  MatchCounts& operator+=(const MatchCounts& o);
  friend bool operator==(const MatchCounts&, const MatchCounts&) = default;
};

/// What happened to one gold entity. `primary` is empty when the gold is
/// overlapped only by predictions of other concepts.
struct GoldOutcome {
  Entity gold;
  std::optional<MatchCategory> primary;
  bool mismatch = false;

  friend bool operator==(const GoldOutcome&, const GoldOutcome&) = default;
};

struct MatchReport {
  using Key = std::pair<std::string, Concept>;

  std::map<Key, MatchCounts> cells;
  std::vector<GoldOutcome> gold_outcomes;
  std::vector<Entity> over_detections;
  std::size_t duplicate_predictions = 0;

  MatchCounts totals() const;
  std::array<MatchCounts, kConceptCount> by_concept() const;

  /// Appends another report. Cells with the same key are summed.
  void merge(const MatchReport& other);
};

/// Scores predictions against gold for one document. Basic entities in
/// either list are ignored; duplicate predictions are dropped and counted.
/// Throws Error(CrossDocumentEntity) if doc ids differ.
MatchReport classify(const std::vector<Entity>& gold, const std::vector<Entity>& pred);
MatchReport classify(const Document& doc);

// --- rate tables ----------------------------------------------------------

struct RateRow {
  std::optional<Concept> mhe;  // empty on the Total row
  std::size_t total = 0;
  MatchCounts counts;

  /// count / total; empty when total is zero.
  std::optional<double> rate(std::size_t count) const;
};

struct RateTable {
  std::vector<RateRow> rows;  // concept rows in canonical order, then Total

  const RateRow& total_row() const { return rows.back(); }
};

using GoldTotals = std::map<Concept, std::size_t>;

/// Gold entity count per concept.
GoldTotals gold_totals(const std::vector<Document>& docs);

/// Sums reports into one row per concept in `totals` plus a Total row whose
/// denominator is the sum of all concept totals. Throws Error(MissingTotal)
/// if a concept with nonzero counts has no total.
RateTable aggregate(const std::vector<MatchReport>& reports, const GoldTotals& totals);

/// One-decimal percentage rounded half up, computed in integers: "51.5".
std::string format_percent(std::size_t count, std::size_t total);
/// "746 (51.5%)"
std::string format_count_rate(std::size_t count, std::size_t total);

/// doc_id,concept,em,rm,mm,ud,od
void write_report_csv(std::ostream& out, const MatchReport& report);

/// concept,total, then count and percent columns for em, rm, mm, ud, od,
/// mmud, error, rm_plus_error.
void write_rate_table_csv(std::ostream& out, const RateTable& table);
void write_rate_table_markdown(std::ostream& out, const RateTable& table);

}  // namespace histent

#endif  // HISTENT_MATCHER_HPP
