#include "histent/matcher.hpp"

#include <algorithm>
#include <ostream>
#include <set>
#include <tuple>

#include "histent/error.hpp"

namespace histent {

std::string_view name_of(MatchCategory c) {
  switch (c) {
    case MatchCategory::ExactMatch: return "exact_match";
    case MatchCategory::RelaxedMatch: return "relaxed_match";
    case MatchCategory::Mismatch: return "mismatch";
    case MatchCategory::UnderDetection: return "under_detection";
    case MatchCategory::OverDetection: return "over_detection";
  }
  return "";
}

std::string_view display_name(MatchCategory c) {
  switch (c) {
    case MatchCategory::ExactMatch: return "Exact Match";
    case MatchCategory::RelaxedMatch: return "Relaxed Match";
    case MatchCategory::Mismatch: return "Mismatch";
    case MatchCategory::UnderDetection: return "Under Detection";
    case MatchCategory::OverDetection: return "Over Detection";
  }
  return "";
}

std::size_t MatchCounts::get(MatchCategory c) const {
  switch (c) {
    case MatchCategory::ExactMatch: return em;
    case MatchCategory::RelaxedMatch: return rm;
    case MatchCategory::Mismatch: return mm;
    case MatchCategory::UnderDetection: return ud;
    case MatchCategory::OverDetection: return od;
  }
  return 0;
}

void MatchCounts::add(MatchCategory c, std::size_t n) {
  switch (c) {
    case MatchCategory::ExactMatch: em += n; break;
    case MatchCategory::RelaxedMatch: rm += n; break;
    case MatchCategory::Mismatch: mm += n; break;
    case MatchCategory::UnderDetection: ud += n; break;
    case MatchCategory::OverDetection: od += n; break;
  }
}

MatchCounts& MatchCounts::operator+=(const MatchCounts& o) {
  em += o.em;
  rm += o.rm;
  mm += o.mm;
  ud += o.ud;
  od += o.od;
  return *this;
}

MatchCounts MatchReport::totals() const {
  MatchCounts sum;
  for (const auto& [key, counts] : cells) sum += counts;
  return sum;
}

std::array<MatchCounts, kConceptCount> MatchReport::by_concept() const {
  std::array<MatchCounts, kConceptCount> out{};
  for (const auto& [key, counts] : cells) out[index_of(key.second)] += counts;
  return out;
}

void MatchReport::merge(const MatchReport& other) {
  for (const auto& [key, counts] : other.cells) cells[key] += counts;
  gold_outcomes.insert(gold_outcomes.end(), other.gold_outcomes.begin(),
                       other.gold_outcomes.end());
  over_detections.insert(over_detections.end(), other.over_detections.begin(),
                         other.over_detections.end());
  duplicate_predictions += other.duplicate_predictions;
}

namespace {

// Entities sorted by start, with the longest span length, so that the
// candidates overlapping [start, end) lie in a short window.
class SpanIndex {
 public:
  explicit SpanIndex(std::vector<Entity> entities) : items_(std::move(entities)) {
    std::sort(items_.begin(), items_.end(), canonical_less);
    for (const Entity& e : items_) max_length_ = std::max(max_length_, e.length());
  }

  template <typename Fn>
  void for_each_overlapping(std::size_t start, std::size_t end, Fn&& fn) const {
    const std::size_t lo = start > max_length_ ? start - max_length_ : 0;
    auto it = std::partition_point(items_.begin(), items_.end(),
                                   [lo](const Entity& e) { return e.start < lo; });
    for (; it != items_.end() && it->start < end; ++it)
      if (it->end > start) fn(*it);
  }

  const std::vector<Entity>& items() const { return items_; }

 private:
  std::vector<Entity> items_;
  std::size_t max_length_ = 0;
};

}  // namespace

MatchReport classify(const std::vector<Entity>& gold, const std::vector<Entity>& pred) {
  const std::string* doc_id = nullptr;
  auto check_doc = [&doc_id](const Entity& e) {
    if (!doc_id) {
      doc_id = &e.doc_id;
    } else if (*doc_id != e.doc_id) {
      throw Error(ErrorCode::CrossDocumentEntity,
                  "entities from documents '" + *doc_id + "' and '" + e.doc_id + "'");
    }
  };

  std::vector<Entity> gold_mhe;
  for (const Entity& e : gold) {
    check_doc(e);
    if (e.is_mhe()) gold_mhe.push_back(e);
  }
  std::vector<Entity> pred_mhe;
  std::set<std::tuple<Concept, std::size_t, std::size_t>> seen;
  MatchReport report;
  for (const Entity& e : pred) {
    check_doc(e);
    if (!e.is_mhe()) continue;
    if (!seen.emplace(e.mhe(), e.start, e.end).second) {
      ++report.duplicate_predictions;
      continue;
    }
    pred_mhe.push_back(e);
  }
  std::sort(gold_mhe.begin(), gold_mhe.end(), canonical_less);

  const SpanIndex preds(std::move(pred_mhe));
  const SpanIndex golds(gold_mhe);

  for (const Entity& g : gold_mhe) {
    bool any = false;
    bool exact = false;
    bool same = false;
    bool other = false;
    preds.for_each_overlapping(g.start, g.end, [&](const Entity& p) {
      any = true;
      if (p.mhe() == g.mhe()) {
        same = true;
        exact = exact || (p.start == g.start && p.end == g.end);
      } else {
        other = true;
      }
    });
    GoldOutcome outcome{g, std::nullopt, false};
    if (exact) {
      outcome.primary = MatchCategory::ExactMatch;
    } else if (same) {
      outcome.primary = MatchCategory::RelaxedMatch;
    } else if (!any) {
      outcome.primary = MatchCategory::UnderDetection;
    }
    outcome.mismatch = other && !exact;
    MatchCounts& cell = report.cells[{g.doc_id, g.mhe()}];
    if (outcome.primary) cell.add(*outcome.primary);
    if (outcome.mismatch) cell.add(MatchCategory::Mismatch);
    report.gold_outcomes.push_back(std::move(outcome));
  }

  for (const Entity& p : preds.items()) {
    bool hit = false;
    golds.for_each_overlapping(p.start, p.end, [&hit](const Entity&) { hit = true; });
    if (hit) continue;
    report.cells[{p.doc_id, p.mhe()}].add(MatchCategory::OverDetection);
    report.over_detections.push_back(p);
  }
  return report;
}

MatchReport classify(const Document& doc) { return classify(doc.gold(), doc.predicted()); }

std::optional<double> RateRow::rate(std::size_t count) const {
  if (total == 0) return std::nullopt;
  return static_cast<double>(count) / static_cast<double>(total);
}

GoldTotals gold_totals(const std::vector<Document>& docs) {
  GoldTotals totals;
  for (Concept c : kAllConcepts) totals[c] = 0;
  for (const Document& doc : docs)
    for (const Entity& e : doc.gold())
      if (e.is_mhe()) ++totals[e.mhe()];
  return totals;
}

RateTable aggregate(const std::vector<MatchReport>& reports, const GoldTotals& totals) {
  std::array<MatchCounts, kConceptCount> sums{};
  for (const MatchReport& r : reports) {
    const auto per = r.by_concept();
    for (std::size_t k = 0; k < kConceptCount; ++k) sums[k] += per[k];
  }
  RateTable table;
  RateRow total_row;
  for (Concept c : kAllConcepts) {
    const auto it = totals.find(c);
    const MatchCounts& counts = sums[index_of(c)];
    if (it == totals.end()) {
      if (!(counts == MatchCounts{}))
        throw Error(ErrorCode::MissingTotal,
                    "no gold total for concept '" + std::string(name_of(c)) + "'");
      continue;
    }
    table.rows.push_back(RateRow{c, it->second, counts});
    total_row.total += it->second;
    total_row.counts += counts;
  }
  table.rows.push_back(total_row);
  return table;
}

std::string format_percent(std::size_t count, std::size_t total) {
  if (total == 0) return "n/a";
  const std::size_t scaled = count * 1000;
  std::size_t tenths = scaled / total;
  if (2 * (scaled % total) >= total) ++tenths;
  return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10);
}

std::string format_count_rate(std::size_t count, std::size_t total) {
  return std::to_string(count) + " (" + format_percent(count, total) + "%)";
}

namespace {

struct Column {
  const char* key;
  const char* title;
  std::size_t (*value)(const MatchCounts&);
};

constexpr std::array<Column, 8> kColumns = {{
    {"em", "Exact Match", [](const MatchCounts& m) { return m.em; }},
    {"rm", "Relaxed Match", [](const MatchCounts& m) { return m.rm; }},
    {"mm", "Mismatch", [](const MatchCounts& m) { return m.mm; }},
    {"ud", "Under Detection", [](const MatchCounts& m) { return m.ud; }},
    {"od", "Over Detection", [](const MatchCounts& m) { return m.od; }},
    {"mmud", "MMUD", [](const MatchCounts& m) { return m.mmud(); }},
    {"error", "Error", [](const MatchCounts& m) { return m.error(); }},
    {"rm_plus_error", "RM + Error", [](const MatchCounts& m) { return m.rm_plus_error(); }},
}};

std::string row_key(const RateRow& row) {
  return row.mhe ? std::string(name_of(*row.mhe)) : "total";
}

}  // namespace

void write_report_csv(std::ostream& out, const MatchReport& report) {
  out << "doc_id,concept,em,rm,mm,ud,od\n";
  for (const auto& [key, c] : report.cells)
    out << key.first << ',' << name_of(key.second) << ',' << c.em << ',' << c.rm << ',' << c.mm
        << ',' << c.ud << ',' << c.od << '\n';
}

void write_rate_table_csv(std::ostream& out, const RateTable& table) {
  out << "concept,total";
  for (const Column& col : kColumns) out << ',' << col.key << ',' << col.key << "_pct";
  out << '\n';
  for (const RateRow& row : table.rows) {
    out << row_key(row) << ',' << row.total;
    for (const Column& col : kColumns) {
      const std::size_t v = col.value(row.counts);
      out << ',' << v << ',' << format_percent(v, row.total);
    }
    out << '\n';
  }
}

void write_rate_table_markdown(std::ostream& out, const RateTable& table) {
  out << "| Concept | Total |";
  for (const Column& col : kColumns) out << ' ' << col.title << " |";
  out << "\n|---|---:|";
  for (std::size_t k = 0; k < kColumns.size(); ++k) out << "---:|";
  out << '\n';
  for (const RateRow& row : table.rows) {
    out << "| " << (row.mhe ? std::string(display_name(*row.mhe)) : "Total") << " | "
        << row.total << " |";
    for (const Column& col : kColumns)
      out << ' ' << format_count_rate(col.value(row.counts), row.total) << " |";
    out << '\n';
  }
}

}  // namespace histent
