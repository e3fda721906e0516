#include "histent/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <ostream>

#include <json.hpp>

#include "histent/error.hpp"

namespace histent::analysis {

namespace {

std::string fixed(double v, int digits) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string general(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string significance(const std::optional<stats::TestResult>& t) {
  return t && t->p_value < 0.05 ? "*" : "";
}

}  // namespace

// --- entity length ----------------------------------------------------------

std::vector<LengthRecord> length_records(const Document& doc, const MatchReport& report) {
  std::vector<LengthRecord> out;
  auto push = [&](MatchCategory c, const Entity& e) {
    if (e.doc_id != doc.doc_id())
      throw Error(ErrorCode::DocIdMismatch,
                  "entity from '" + e.doc_id + "' scored against '" + doc.doc_id() + "'");
    const std::size_t n = doc.covering_tokens(e).size();
    if (n > 0) out.push_back(LengthRecord{c, n});
  };
  for (const GoldOutcome& g : report.gold_outcomes) {
    if (g.primary) push(*g.primary, g.gold);
    if (g.mismatch) push(MatchCategory::Mismatch, g.gold);
  }
  for (const Entity& e : report.over_detections) push(MatchCategory::OverDetection, e);
  return out;
}

LengthAnalysis entity_length_analysis(const std::map<MatchCategory, stats::SummarySample>& summaries) {
  LengthAnalysis out;
  const auto ref = summaries.find(MatchCategory::ExactMatch);
  for (std::size_t i = 0; i < kMatchCategoryCount; ++i) {
    const MatchCategory c = kAllMatchCategories[i];
    CategoryLength& row = out.rows[i];
    row.category = c;
    const auto it = summaries.find(c);
    if (it == summaries.end() || it->second.n == 0) {
      row.note = "skipped: empty category";
      continue;
    }
    row.summary = it->second;
    if (c == MatchCategory::ExactMatch) {
      row.note = "reference";
      continue;
    }
    if (it->second.n < 2) {
      row.note = "skipped: fewer than two entities";
      continue;
    }
    if (ref == summaries.end() || ref->second.n < 2) {
      row.note = "skipped: reference has fewer than two entities";
      continue;
    }
    row.test = stats::welch_t_test(ref->second, it->second);
  }
  return out;
}

LengthAnalysis entity_length_analysis(const std::vector<LengthRecord>& records) {
  std::map<MatchCategory, std::vector<double>> values;
  for (const LengthRecord& r : records) {
    if (r.entity_token_length == 0) throw Error(ErrorCode::DomainError, "entity length must be positive");
    values[r.category].push_back(static_cast<double>(r.entity_token_length));
  }
  std::map<MatchCategory, stats::SummarySample> summaries;
  for (const auto& [c, v] : values)
    summaries[c] = v.size() >= 2 ? stats::summarize(v) : stats::SummarySample{v.front(), 0.0, 1};
  return entity_length_analysis(summaries);
}

// --- note length ------------------------------------------------------------

std::string_view name_of(NoteMeasure m) {
  switch (m) {
    case NoteMeasure::EM: return "em";
    case NoteMeasure::RM: return "rm";
    case NoteMeasure::MM: return "mm";
    case NoteMeasure::UD: return "ud";
    case NoteMeasure::OD: return "od";
    case NoteMeasure::MMUD: return "mmud";
    case NoteMeasure::Error: return "error";
    case NoteMeasure::RMError: return "rm_error";
  }
  return "";
}

std::string_view display_name(NoteMeasure m) {
  switch (m) {
    case NoteMeasure::EM: return "EM";
    case NoteMeasure::RM: return "RM";
    case NoteMeasure::MM: return "MM";
    case NoteMeasure::UD: return "UD";
    case NoteMeasure::OD: return "OD";
    case NoteMeasure::MMUD: return "MMUD";
    case NoteMeasure::Error: return "Error";
    case NoteMeasure::RMError: return "RM+Error";
  }
  return "";
}

std::size_t NoteRecord::count(NoteMeasure m) const {
  switch (m) {
    case NoteMeasure::EM: return counts.em;
    case NoteMeasure::RM: return counts.rm;
    case NoteMeasure::MM: return counts.mm;
    case NoteMeasure::UD: return counts.ud;
    case NoteMeasure::OD: return counts.od;
    case NoteMeasure::MMUD: return counts.mmud();
    case NoteMeasure::Error: return counts.error();
    case NoteMeasure::RMError: return counts.rm_plus_error();
  }
  return 0;
}

std::optional<double> NoteRecord::rate(NoteMeasure m) const {
  if (gold_count == 0) return std::nullopt;
  return static_cast<double>(count(m)) / static_cast<double>(gold_count);
}

NoteRecord note_record(const Document& doc, const MatchReport& report) {
  NoteRecord r;
  r.doc_id = doc.doc_id();
  r.word_count = doc.tokens().size();
  r.gold_count = doc.gold_mhe().size();
  for (const auto& [key, counts] : report.cells) {
    if (key.first != doc.doc_id())
      throw Error(ErrorCode::DocIdMismatch,
                  "report for '" + key.first + "' scored against '" + doc.doc_id() + "'");
    r.counts += counts;
  }
  return r;
}

namespace {

bool constant(const std::vector<double>& v) {
  return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end();
}

std::optional<stats::TestResult> correlate(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() < 3 || constant(x) || constant(y)) return std::nullopt;
  return stats::pearson(x, y);
}

}  // namespace

NoteLengthAnalysis note_length_analysis(const std::vector<NoteRecord>& notes) {
  if (notes.size() < 3) throw Error(ErrorCode::DomainError, "note length analysis needs at least three notes");
  std::vector<double> words;
  for (const NoteRecord& n : notes) words.push_back(static_cast<double>(n.word_count));
  if (constant(words)) throw Error(ErrorCode::ZeroVariance, "all notes have the same word count");

  NoteLengthAnalysis out;
  out.notes = notes.size();
  std::vector<double> rate_words;
  for (const NoteRecord& n : notes)
    if (n.gold_count > 0) rate_words.push_back(static_cast<double>(n.word_count));
  out.rate_notes = rate_words.size();

  for (std::size_t i = 0; i < kNoteMeasureCount; ++i) {
    const NoteMeasure m = kAllNoteMeasures[i];
    std::vector<double> counts, rates;
    for (const NoteRecord& n : notes) {
      counts.push_back(static_cast<double>(n.count(m)));
      if (auto r = n.rate(m)) rates.push_back(*r);
    }
    out.counts[i] = correlate(words, counts);
    out.rates[i] = correlate(rate_words, rates);
  }
  return out;
}

// --- segmentation -----------------------------------------------------------

std::string_view name_of(HeaderGroup g) {
  switch (g) {
    case HeaderGroup::CC: return "CC";
    case HeaderGroup::HPI: return "HPI";
    case HeaderGroup::PastHistory: return "PastHistory";
    case HeaderGroup::FamilyHistory: return "FamilyHistory";
    case HeaderGroup::SocialHistory: return "SocialHistory";
  }
  return "";
}

std::string_view display_name(HeaderGroup g) {
  switch (g) {
    case HeaderGroup::CC: return "CC";
    case HeaderGroup::HPI: return "HPI";
    case HeaderGroup::PastHistory: return "Past H.";
    case HeaderGroup::FamilyHistory: return "Fam. H.";
    case HeaderGroup::SocialHistory: return "Social H.";
  }
  return "";
}

HeaderGroup parse_header_group(std::string_view name) {
  for (HeaderGroup g : kAllHeaderGroups)
    if (name == name_of(g)) return g;
  throw Error(ErrorCode::UnknownHeaderGroup, "unknown header group '" + std::string(name) + "'");
}

HeaderGroup group_of(Concept c) {
  switch (c) {
    case Concept::CC: return HeaderGroup::CC;
    case Concept::PastHistory: return HeaderGroup::PastHistory;
    case Concept::FamilyHistory: return HeaderGroup::FamilyHistory;
    case Concept::SocialHistory: return HeaderGroup::SocialHistory;
    default: return HeaderGroup::HPI;
  }
}

const HeaderLexicon& HeaderLexicon::standard() {
  static const HeaderLexicon lexicon = [] {
    HeaderLexicon l;
    l.add(HeaderGroup::CC, "CHIEF COMPLAINT");
    for (const char* h : {"HISTORY OF PRESENT ILLNESS", "BRIEF HISTORY OF PRESENT ILLNESS", "SUBJECTIVE"})
      l.add(HeaderGroup::HPI, h);
    for (const char* h : {"PAST MEDICAL HISTORY", "PAST SURGICAL HISTORY", "MEDICATIONS",
                          "CURRENT MEDICATION(S)", "ALLERGIES"})
      l.add(HeaderGroup::PastHistory, h);
    l.add(HeaderGroup::FamilyHistory, "FAMILY HISTORY");
    l.add(HeaderGroup::SocialHistory, "SOCIAL HISTORY");
    return l;
  }();
  return lexicon;
}

HeaderLexicon HeaderLexicon::from_json(std::string_view json) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::MalformedInput, std::string("header lexicon: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::MalformedInput, "header lexicon must be a JSON object");
  HeaderLexicon out;
  for (const auto& [key, value] : doc.items()) {
    const HeaderGroup g = parse_header_group(key);
    if (!value.is_array())
      throw Error(ErrorCode::MalformedInput, "headers for '" + key + "' must be an array");
    for (const auto& h : value) {
      if (!h.is_string())
        throw Error(ErrorCode::MalformedInput, "headers for '" + key + "' must be strings");
      out.add(g, h.get<std::string>());
    }
  }
  return out;
}

HeaderLexicon HeaderLexicon::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open header lexicon '" + path + "'");
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  try {
    return from_json(bytes);
  } catch (const Error& e) {
    throw e.located(SourceLocation{path, std::nullopt, std::nullopt});
  }
}

void HeaderLexicon::add(HeaderGroup g, std::string_view header) {
  std::string h = normalize_header(header);
  if (h.empty()) throw Error(ErrorCode::MalformedInput, "empty header in lexicon");
  headers_[static_cast<std::size_t>(g)].insert(std::move(h));
}

const std::set<std::string>& HeaderLexicon::headers(HeaderGroup g) const {
  return headers_[static_cast<std::size_t>(g)];
}

bool HeaderLexicon::accepts(HeaderGroup g, std::string_view header) const {
  for (const std::string& entry : headers(g)) {
    if (entry == header) return true;
    if (entry.size() > 3 && entry.ends_with("(S)")) {
      const std::string_view stem = std::string_view(entry).substr(0, entry.size() - 3);
      if (header == stem) return true;
      if (header.size() == stem.size() + 1 && header.starts_with(stem) && header.back() == 'S') return true;
    }
  }
  return false;
}

std::string HeaderLexicon::to_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (HeaderGroup g : kAllHeaderGroups) j[std::string(name_of(g))] = headers(g);
  return j.dump(2);
}

SectionPlacement place(const Entity& entity, const std::vector<Section>& sections,
                       const HeaderLexicon& lexicon) {
  if (!entity.is_mhe()) throw Error(ErrorCode::UnknownConcept, "only history entities can be placed");
  SectionPlacement p{entity, false, group_of(entity.mhe())};
  for (const Section& s : sections) {
    if (s.contains(entity.start)) {
      p.in_dedicated_section = s.headed() && lexicon.accepts(p.group, s.header);
      break;
    }
  }
  return p;
}

std::vector<PlacedOutcome> placed_outcomes(const Document& doc, const MatchReport& report,
                                           const HeaderLexicon& lexicon) {
  std::vector<PlacedOutcome> out;
  for (const GoldOutcome& g : report.gold_outcomes) {
    if (g.gold.doc_id != doc.doc_id())
      throw Error(ErrorCode::DocIdMismatch,
                  "entity from '" + g.gold.doc_id + "' scored against '" + doc.doc_id() + "'");
    const bool found = g.primary == MatchCategory::ExactMatch || g.primary == MatchCategory::RelaxedMatch;
    out.push_back(PlacedOutcome{place(g.gold, doc.sections(), lexicon), found});
  }
  return out;
}

SegmentationAnalysis segmentation_analysis(const std::vector<PlacedOutcome>& outcomes) {
  SegmentationAnalysis out;
  for (std::size_t i = 0; i < kHeaderGroupCount; ++i) out.rows[i].group = kAllHeaderGroups[i];
  for (const PlacedOutcome& o : outcomes) {
    stats::ContingencyTable& t = out.rows[static_cast<std::size_t>(o.placement.group)].table;
    const bool in = o.placement.in_dedicated_section;
    if (o.found)
      ++(in ? t.a : t.b);
    else
      ++(in ? t.c : t.d);
  }
  for (SegmentationRow& row : out.rows) {
    if (row.table.n() == 0) {
      row.note = "skipped: no entities";
      continue;
    }
    row.test = stats::select_2x2_test(row.table);
  }
  return out;
}

SegmentationAnalysis segmentation_analysis(const std::vector<Document>& docs,
                                           const std::vector<MatchReport>& reports,
                                           const HeaderLexicon& lexicon) {
  if (docs.size() != reports.size())
    throw Error(ErrorCode::LengthMismatch, "one match report per document is required");
  std::vector<PlacedOutcome> all;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    auto part = placed_outcomes(docs[i], reports[i], lexicon);
    all.insert(all.end(), part.begin(), part.end());
  }
  return segmentation_analysis(all);
}

// --- reports ----------------------------------------------------------------

std::string format_p(double p) {
  if (std::isnan(p)) return "NA";
  if (p < 0.001) return "<0.001";
  return fixed(p, 3);
}

void write_length_csv(std::ostream& out, const LengthAnalysis& analysis) {
  out << "category,mean,sd,n,statistic,df,p_value,significant,note\n";
  for (const CategoryLength& row : analysis.rows) {
    out << name_of(row.category) << ',';
    if (row.summary)
      out << general(row.summary->mean) << ',' << general(row.summary->sd) << ',' << row.summary->n;
    else
      out << ",,0";
    out << ',';
    if (row.test)
      out << general(row.test->statistic) << ',' << (row.test->df ? general(*row.test->df) : "") << ','
          << general(row.test->p_value) << ',' << (row.test->p_value < 0.05 ? "yes" : "no");
    else
      out << ",,,";
    out << ',' << row.note << '\n';
  }
}

void write_length_markdown(std::ostream& out, const LengthAnalysis& analysis) {
  out << "| Category | Mean | SD | N | p-value |\n|---|---|---|---|---|\n";
  for (const CategoryLength& row : analysis.rows) {
    out << "| " << display_name(row.category) << " | ";
    if (row.summary)
      out << fixed(row.summary->mean, 3) << " | " << fixed(row.summary->sd, 3) << " | " << row.summary->n;
    else
      out << " |  | 0";
    out << " | ";
    if (row.test)
      out << format_p(row.test->p_value) << significance(row.test);
    else
      out << row.note;
    out << " |\n";
  }
}

namespace {

void footer_rows(std::ostream& out, const NoteLengthAnalysis& a, std::string_view sep,
                 std::string_view open, std::string_view close, bool markdown) {
  auto emit = [&](std::string_view label,
                  const std::array<std::optional<stats::TestResult>, kNoteMeasureCount>& tests,
                  bool p) {
    out << open << label;
    for (const auto& t : tests) {
      out << sep;
      if (!t) {
        out << (markdown ? "n/a" : "");
        continue;
      }
      out << fixed(p ? t->p_value : t->statistic, 5);
      if (markdown && p) out << significance(t);
    }
    out << close << '\n';
  };
  emit(markdown ? "Correlation on counts (r)" : "r_counts", a.counts, false);
  emit(markdown ? "Correlation on counts (p)" : "p_counts", a.counts, true);
  emit(markdown ? "Correlation on rates (r)" : "r_rates", a.rates, false);
  emit(markdown ? "Correlation on rates (p)" : "p_rates", a.rates, true);
}

}  // namespace

void write_note_footer_csv(std::ostream& out, const NoteLengthAnalysis& analysis) {
  out << "row";
  for (NoteMeasure m : kAllNoteMeasures) out << ',' << name_of(m);
  out << '\n';
  footer_rows(out, analysis, ",", "", "", false);
}

void write_note_footer_markdown(std::ostream& out, const NoteLengthAnalysis& analysis) {
  out << "| |";
  for (NoteMeasure m : kAllNoteMeasures) out << ' ' << display_name(m) << " |";
  out << "\n|---|";
  for (std::size_t i = 0; i < kNoteMeasureCount; ++i) out << "---|";
  out << '\n';
  footer_rows(out, analysis, " | ", "| ", " |", true);
}

void write_note_csv(std::ostream& out, const std::vector<NoteRecord>& notes) {
  out << "doc_id,word_count,gold_count";
  for (NoteMeasure m : kAllNoteMeasures) out << ',' << name_of(m);
  for (NoteMeasure m : kAllNoteMeasures) out << ',' << name_of(m) << "_pct";
  out << '\n';
  for (const NoteRecord& n : notes) {
    out << n.doc_id << ',' << n.word_count << ',' << n.gold_count;
    for (NoteMeasure m : kAllNoteMeasures) out << ',' << n.count(m);
    for (NoteMeasure m : kAllNoteMeasures) out << ',' << format_percent(n.count(m), n.gold_count);
    out << '\n';
  }
}

void write_segmentation_csv(std::ostream& out, const SegmentationAnalysis& analysis) {
  out << "group,matched_in,matched_out,mmud_in,mmud_out,method,statistic,p_value,significant,note\n";
  for (const SegmentationRow& row : analysis.rows) {
    const auto& t = row.table;
    out << name_of(row.group) << ',' << t.a << ',' << t.b << ',' << t.c << ',' << t.d << ',';
    if (row.test)
      out << stats::name_of(row.test->method) << ',' << general(row.test->statistic) << ','
          << general(row.test->p_value) << ',' << (row.test->p_value < 0.05 ? "yes" : "no");
    else
      out << ",,,";
    out << ',' << row.note << '\n';
  }
}

void write_segmentation_markdown(std::ostream& out, const SegmentationAnalysis& analysis) {
  out << "| Group | EM+RM in | EM+RM out | MMUD in | MMUD out | Test | p-value |\n"
         "|---|---|---|---|---|---|---|\n";
  for (const SegmentationRow& row : analysis.rows) {
    const auto& t = row.table;
    out << "| " << display_name(row.group) << " | " << t.a << " | " << t.b << " | " << t.c << " | "
        << t.d << " | ";
    if (row.test)
      out << (row.test->method == stats::Method::FisherExact ? "Fisher" : "Chi-square") << " | "
          << format_p(row.test->p_value) << significance(row.test);
    else
      out << " | " << row.note;
    out << " |\n";
  }
}

void write_scatter_svg(std::ostream& out, const std::vector<NoteRecord>& notes, NoteMeasure m,
                       bool as_rate) {
  std::vector<double> xs, ys;
  for (const NoteRecord& n : notes) {
    if (as_rate) {
      if (auto r = n.rate(m)) {
        xs.push_back(static_cast<double>(n.word_count));
        ys.push_back(100.0 * *r);
      }
    } else {
      xs.push_back(static_cast<double>(n.word_count));
      ys.push_back(static_cast<double>(n.count(m)));
    }
  }
  constexpr double W = 480, H = 360, L = 60, R = 20, T = 40, B = 50;
  const double x_hi = xs.empty() ? 1.0 : std::max(1.0, *std::max_element(xs.begin(), xs.end()));
  const double y_hi = ys.empty() ? 1.0 : std::max(1.0, *std::max_element(ys.begin(), ys.end()));
  auto px = [&](double x) { return L + (W - L - R) * x / x_hi; };
  auto py = [&](double y) { return H - B - (H - T - B) * y / y_hi; };

  std::string title = std::string(display_name(m)) + (as_rate ? " rate (%)" : " count");
  std::optional<stats::TestResult> fit = correlate(xs, ys);
  if (fit) title += ", r = " + fixed(fit->statistic, 3) + ", p = " + format_p(fit->p_value);

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title << "</text>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">Word count</text>\n";
  out << "<text x=\"" << L - 6 << "\" y=\"" << H - B << "\" text-anchor=\"end\">0</text>\n";
  out << "<text x=\"" << L - 6 << "\" y=\"" << T + 4 << "\" text-anchor=\"end\">" << general(y_hi) << "</text>\n";
  out << "<text x=\"" << W - R << "\" y=\"" << H - B + 16 << "\" text-anchor=\"end\">" << general(x_hi) << "</text>\n";
  for (std::size_t i = 0; i < xs.size(); ++i)
    out << "<circle cx=\"" << fixed(px(xs[i]), 2) << "\" cy=\"" << fixed(py(ys[i]), 2)
        << "\" r=\"3\" fill=\"steelblue\"/>\n";
  if (fit) {
    double mx = 0, my = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      mx += xs[i];
      my += ys[i];
    }
    mx /= static_cast<double>(xs.size());
    my /= static_cast<double>(ys.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxx += (xs[i] - mx) * (xs[i] - mx);
      sxy += (xs[i] - mx) * (ys[i] - my);
    }
    const double slope = sxy / sxx;
    const double x0 = *std::min_element(xs.begin(), xs.end());
    const double x1 = *std::max_element(xs.begin(), xs.end());
    out << "<line x1=\"" << fixed(px(x0), 2) << "\" y1=\"" << fixed(py(my + slope * (x0 - mx)), 2)
        << "\" x2=\"" << fixed(px(x1), 2) << "\" y2=\"" << fixed(py(my + slope * (x1 - mx)), 2)
        << "\" stroke=\"firebrick\"/>\n";
  }
  out << "</svg>\n";
}

}  // namespace histent::analysis
