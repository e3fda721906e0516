#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "generators.hpp"
#include "histent/analysis.hpp"
#include "histent/error.hpp"

using namespace histent;
using namespace histent::analysis;
using namespace histent::testing;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::IoError;
}

Entity gold(Concept c, std::pair<std::size_t, std::size_t> span) {
  return Entity{c, span.first, span.second, {}, Source::Gold};
}

Entity pred(Concept c, std::pair<std::size_t, std::size_t> span) {
  return Entity{c, span.first, span.second, {}, Source::Predicted};
}

std::vector<NoteRecord> records_of(const NoteBlock& block) {
  std::vector<NoteRecord> out;
  for (std::size_t i = 0; i < block.word_count.size(); ++i) {
    NoteRecord r;
    r.doc_id = block.model + "_" + std::to_string(i);
    r.word_count = static_cast<std::size_t>(block.word_count[i]);
    r.gold_count = static_cast<std::size_t>(block.gold_count[i]);
    r.counts.em = static_cast<std::size_t>(block.counts.at("em")[i]);
    r.counts.rm = static_cast<std::size_t>(block.counts.at("rm")[i]);
    r.counts.mm = static_cast<std::size_t>(block.counts.at("mm")[i]);
    r.counts.ud = static_cast<std::size_t>(block.counts.at("ud")[i]);
    r.counts.od = static_cast<std::size_t>(block.counts.at("od")[i]);
    out.push_back(r);
  }
  return out;
}

std::vector<PlacedOutcome> outcomes_for(HeaderGroup g, const stats::ContingencyTable& t) {
  const Concept c = g == HeaderGroup::CC              ? Concept::CC
                    : g == HeaderGroup::HPI           ? Concept::HpiTiming
                    : g == HeaderGroup::PastHistory   ? Concept::PastHistory
                    : g == HeaderGroup::FamilyHistory ? Concept::FamilyHistory
                                                      : Concept::SocialHistory;
  std::vector<PlacedOutcome> out;
  auto add = [&](std::size_t n, bool in, bool found) {
    for (std::size_t k = 0; k < n; ++k)
      out.push_back({SectionPlacement{Entity{c, 0, 1, "x", Source::Gold}, in, group_of(c)}, found});
  };
  add(t.a, true, true);
  add(t.b, false, true);
  add(t.c, true, false);
  add(t.d, false, false);
  return out;
}

}  // namespace

TEST_CASE("constant lengths give p = 1 everywhere") {
  std::vector<LengthRecord> records;
  for (MatchCategory c : kAllMatchCategories)
    for (int k = 0; k < 4; ++k) records.push_back({c, 3});
  const LengthAnalysis a = entity_length_analysis(records);
  CHECK(a.rows[0].note == "reference");
  CHECK_FALSE(a.rows[0].test.has_value());
  for (std::size_t i = 1; i < kMatchCategoryCount; ++i) {
    REQUIRE(a.rows[i].test.has_value());
    CHECK(a.rows[i].test->p_value == 1.0);
    CHECK(a.rows[i].summary->mean == 3.0);
  }
}

TEST_CASE("length analysis from summaries") {
  const LengthAnalysis a = entity_length_analysis(std::map<MatchCategory, stats::SummarySample>{
      {MatchCategory::ExactMatch, {1.952, 1.512, 746}},
      {MatchCategory::RelaxedMatch, {4.670, 3.766, 229}},
      {MatchCategory::Mismatch, {2.5, 1.0, 1}},
  });
  REQUIRE(a.rows[1].test.has_value());
  CHECK(a.rows[1].test->p_value < 0.001);
  CHECK(a.rows[2].note == "skipped: fewer than two entities");
  CHECK(a.rows[3].note == "skipped: empty category");
  CHECK_FALSE(a.rows[4].summary.has_value());

  const LengthAnalysis lone = entity_length_analysis(std::vector<LengthRecord>{
      {MatchCategory::RelaxedMatch, 2}, {MatchCategory::RelaxedMatch, 5}});
  CHECK(lone.rows[0].note == "skipped: empty category");
  CHECK(lone.rows[1].note == "skipped: reference has fewer than two entities");
  std::ostringstream md;
  write_length_markdown(md, lone);
  CHECK(md.str().find("skipped: reference") != std::string::npos);
}

TEST_CASE("length records agree with a recount") {
  std::mt19937_64 rng(83);
  for (int trial = 0; trial < 300; ++trial) {
    const std::string text = random_text(rng, 40);
    const std::size_t len = decode_utf8(text).size();
    auto g = random_entities(rng, len, 6);
    auto p = random_entities(rng, len, 6);
    for (Entity& e : p) e.source = Source::Predicted;
    const Document doc("d", text, g, p);
    const MatchReport report = classify(doc);
    const auto records = length_records(doc, report);

    // tokens overlapping [s, e), counted one by one
    auto recount = [&](const Entity& e) {
      std::size_t n = 0;
      for (const Token& t : doc.tokens()) n += t.start < e.end && e.start < t.end;
      return n;
    };
    std::map<MatchCategory, std::pair<double, std::size_t>> expect;
    auto add = [&](MatchCategory c, const Entity& e) {
      if (const std::size_t n = recount(e); n > 0) {
        expect[c].first += static_cast<double>(n);
        ++expect[c].second;
      }
    };
    for (const GoldOutcome& o : report.gold_outcomes) {
      if (o.primary) add(*o.primary, o.gold);
      if (o.mismatch) add(MatchCategory::Mismatch, o.gold);
    }
    for (const Entity& e : report.over_detections) add(MatchCategory::OverDetection, e);

    REQUIRE(records.size() <= report.totals().em + report.totals().rm + report.totals().mm +
                                  report.totals().ud + report.totals().od);
    const LengthAnalysis a = entity_length_analysis(records);
    for (const CategoryLength& row : a.rows) {
      const auto it = expect.find(row.category);
      if (it == expect.end()) {
        REQUIRE_FALSE(row.summary.has_value());
        continue;
      }
      REQUIRE(row.summary->n == it->second.second);
      REQUIRE(row.summary->mean ==
              doctest::Approx(it->second.first / static_cast<double>(it->second.second)));
    }
  }
}

TEST_CASE("note records") {
  const std::string text = "CHIEF COMPLAINT: Ear pain.\nSOCIAL HISTORY: She is a nonsmoker.\n";
  const Document doc("n1", text, {gold(Concept::CC, find_span(text, "Ear pain")),
                                  gold(Concept::SocialHistory, find_span(text, "nonsmoker"))},
                     {pred(Concept::CC, find_span(text, "Ear pain")),
                      pred(Concept::PastHistory, find_span(text, "She"))});
  const NoteRecord r = note_record(doc, classify(doc));
  CHECK(r.word_count == doc.tokens().size());
  CHECK(r.gold_count == 2);
  CHECK(r.counts.em == 1);
  CHECK(r.counts.ud == 1);
  CHECK(r.counts.od == 1);
  CHECK(*r.error_rate() == doctest::Approx(1.0));

  NoteRecord empty;
  CHECK_FALSE(empty.error_rate().has_value());
}

TEST_CASE("transcribed per-note arithmetic is consistent") {
  for (const NoteBlock& block : note_blocks()) {
    const auto notes = records_of(block);
    REQUIRE(notes.size() == 61);
    for (std::size_t i = 0; i < notes.size(); ++i) {
      INFO(block.model << " row " << i);
      CHECK(notes[i].count(NoteMeasure::MMUD) == block.counts.at("mmud")[i]);
      CHECK(notes[i].count(NoteMeasure::Error) == block.counts.at("error")[i]);
      CHECK(notes[i].count(NoteMeasure::RMError) == block.counts.at("rm_error")[i]);
    }
  }
  const Table t = load_table("note_counts.tsv");
  for (std::size_t row = 0; row < t.rows.size(); ++row) {
    if (t.at(row, "model") != "GatorTronS" || t.at(row, "sample") != "sample_2792") continue;
    CHECK(format_percent(t.count(row, "error"), t.count(row, "gold_count")) == "333.3");
  }
}

TEST_CASE("note length correlations reproduce the footers") {
  for (const NoteBlock& block : note_blocks()) {
    const NoteLengthAnalysis a = note_length_analysis(records_of(block));
    CHECK(a.notes == 61);
    for (std::size_t i = 0; i < kNoteMeasureCount; ++i) {
      const std::string key(name_of(kAllNoteMeasures[i]));
      INFO(block.model << " " << key);
      REQUIRE(a.counts[i].has_value());
      REQUIRE(a.rates[i].has_value());
      CHECK(std::fabs(a.counts[i]->statistic - block.footers.at("r_counts").at(key)) <= 0.0005);
      CHECK(std::fabs(a.counts[i]->p_value - block.footers.at("p_counts").at(key)) <= 0.001);
      CHECK(std::fabs(a.rates[i]->statistic - block.footers.at("r_rates").at(key)) <= 0.0005);
      CHECK(std::fabs(a.rates[i]->p_value - block.footers.at("p_rates").at(key)) <= 0.001);
    }
    if (block.model == "GatorTron+CLAMP") {
      const std::size_t err = 6;
      CHECK(std::fabs(a.counts[err]->statistic - 0.61549) <= 0.0005);
      CHECK(std::fabs(a.rates[err]->statistic - 0.03385) <= 0.0005);
      CHECK(std::fabs(a.rates[err]->p_value - 0.7956) <= 0.001);
    }
    std::ostringstream csv;
    write_note_footer_csv(csv, a);
    CHECK(csv.str().rfind("row,em,rm,mm,ud,od,mmud,error,rm_error\nr_counts,", 0) == 0);
  }
}

TEST_CASE("note length errors") {
  std::vector<NoteRecord> flat(5);
  for (std::size_t i = 0; i < flat.size(); ++i) {
    flat[i].word_count = 100;
    flat[i].gold_count = 3;
    flat[i].counts.em = i;
  }
  CHECK(code_of([&] { note_length_analysis(flat); }) == ErrorCode::ZeroVariance);
  flat.resize(2);
  CHECK(code_of([&] { note_length_analysis(flat); }) == ErrorCode::DomainError);

  std::vector<NoteRecord> notes(4);
  for (std::size_t i = 0; i < notes.size(); ++i) {
    notes[i].word_count = 100 + 10 * i;
    notes[i].gold_count = i == 0 ? 0 : 5;
    notes[i].counts.em = i;
  }
  const NoteLengthAnalysis a = note_length_analysis(notes);
  CHECK(a.rate_notes == 3);
  CHECK(a.counts[0].has_value());
  CHECK_FALSE(a.counts[1].has_value());
}

TEST_CASE("header lexicon") {
  const HeaderLexicon& lex = HeaderLexicon::standard();
  CHECK(lex.accepts(HeaderGroup::CC, "CHIEF COMPLAINT"));
  CHECK(lex.accepts(HeaderGroup::HPI, "SUBJECTIVE"));
  CHECK(lex.accepts(HeaderGroup::PastHistory, "CURRENT MEDICATION"));
  CHECK(lex.accepts(HeaderGroup::PastHistory, "CURRENT MEDICATIONS"));
  CHECK_FALSE(lex.accepts(HeaderGroup::PastHistory, "CURRENT MEDICATIONX"));
  CHECK_FALSE(lex.accepts(HeaderGroup::HPI, "SOCIAL HISTORY"));
  CHECK(lex.headers(HeaderGroup::PastHistory).size() == 5);

  const HeaderLexicon loaded = HeaderLexicon::from_json(lex.to_json());
  for (HeaderGroup g : kAllHeaderGroups) CHECK(loaded.headers(g) == lex.headers(g));

  const HeaderLexicon custom = HeaderLexicon::from_json(R"({"SocialHistory": ["  social   history "]})");
  CHECK(custom.accepts(HeaderGroup::SocialHistory, "SOCIAL HISTORY"));
  CHECK(custom.headers(HeaderGroup::CC).empty());

  CHECK(code_of([] { HeaderLexicon::from_json(R"({"Vitals": ["VITALS"]})"); }) ==
        ErrorCode::UnknownHeaderGroup);
  CHECK(code_of([] { HeaderLexicon::from_json(R"({"CC": "CHIEF COMPLAINT"})"); }) ==
        ErrorCode::MalformedInput);
  CHECK(code_of([] { HeaderLexicon::from_json("[1"); }) == ErrorCode::MalformedInput);
  CHECK(code_of([] { HeaderLexicon::load("/nonexistent/lexicon.json"); }) == ErrorCode::IoError);

  for (Concept c : kAllConcepts) {
    const std::string_view n = name_of(c);
    if (n.rfind("hpi", 0) == 0) CHECK(group_of(c) == HeaderGroup::HPI);
  }
}

TEST_CASE("section placement on the sample note") {
  const std::string& text = kSampleNote;
  const Document doc("s", text, {gold(Concept::SocialHistory, find_span(text, "nonsmoker")),
                                 gold(Concept::PastHistory, find_span(text, "atopic dermatitis")),
                                 gold(Concept::HpiLocation, find_span(text, "left")),
                                 gold(Concept::PastHistory, find_span(text, "Ibuprofen"))});
  const HeaderLexicon& lex = HeaderLexicon::standard();
  std::map<std::string, bool> in;
  for (const Entity& e : doc.gold()) in[doc.surface(e)] = place(e, doc.sections(), lex).in_dedicated_section;
  CHECK(in["nonsmoker"]);
  CHECK_FALSE(in["atopic dermatitis"]);
  CHECK(in["left"]);
  CHECK(in["Ibuprofen"]);
}

TEST_CASE("moving a header past an entity flips its placement") {
  const std::string before = "SOCIAL HISTORY: Reviewed.\nNotes: She is a nonsmoker.\n";
  const std::string after = "Notes: She is a nonsmoker.\nSOCIAL HISTORY: Reviewed.\n";
  const HeaderLexicon& lex = HeaderLexicon::standard();
  const Document a("a", before, {gold(Concept::SocialHistory, find_span(before, "nonsmoker"))});
  const Document b("b", after, {gold(Concept::SocialHistory, find_span(after, "nonsmoker"))});
  CHECK(place(a.gold()[0], a.sections(), lex).in_dedicated_section);
  CHECK_FALSE(place(b.gold()[0], b.sections(), lex).in_dedicated_section);
}

TEST_CASE("each gold entity lands in exactly one cell") {
  std::mt19937_64 rng(89);
  static const std::vector<std::string> heads = {"CHIEF COMPLAINT:", "SOCIAL HISTORY:", "SUBJECTIVE:",
                                                 "FAMILY HISTORY:", "ALLERGIES:", "PLAN:"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Document> docs;
    std::vector<MatchReport> reports;
    std::array<std::size_t, kHeaderGroupCount> per_group{};
    std::size_t total = 0;
    for (int d = 0; d < 3; ++d) {
      std::string text;
      for (int s = 0; s < 3; ++s) text += heads[uniform(rng, 0, heads.size() - 1)] + random_text(rng, 10) + "\n";
      const std::size_t len = decode_utf8(text).size();
      auto p = random_entities(rng, len, 5);
      for (Entity& e : p) e.source = Source::Predicted;
      docs.emplace_back("doc" + std::to_string(d), text, random_entities(rng, len, 6), p);
      reports.push_back(classify(docs.back()));
      for (const Entity& e : docs.back().gold()) {
        ++per_group[static_cast<std::size_t>(group_of(e.mhe()))];
        ++total;
      }
    }
    const SegmentationAnalysis a = segmentation_analysis(docs, reports, HeaderLexicon::standard());
    std::size_t seen = 0;
    for (const SegmentationRow& row : a.rows) {
      REQUIRE(row.table.n() == per_group[static_cast<std::size_t>(row.group)]);
      REQUIRE(row.test.has_value() == (row.table.n() > 0));
      seen += row.table.n();
    }
    REQUIRE(seen == total);
  }
  std::vector<Document> docs{Document("a", "x", {}, {})};
  CHECK(code_of([&] { segmentation_analysis(docs, {}, HeaderLexicon::standard()); }) ==
        ErrorCode::LengthMismatch);
  const Document other("b", "yy", {gold(Concept::CC, {0, 1})}, {});
  CHECK(code_of([&] { segmentation_analysis(docs, {classify(other)}, HeaderLexicon::standard()); }) ==
        ErrorCode::DocIdMismatch);
}

TEST_CASE("segmentation tables reproduce through the pipeline") {
  for (const SectionCase& s : section_cases()) {
    const std::map<std::string, HeaderGroup> groups = {
        {"cc", HeaderGroup::CC}, {"hpi", HeaderGroup::HPI}, {"past_history", HeaderGroup::PastHistory},
        {"family_history", HeaderGroup::FamilyHistory}, {"social_history", HeaderGroup::SocialHistory}};
    REQUIRE(groups.count(s.group) == 1);
    const HeaderGroup g = groups.at(s.group);
    const SegmentationAnalysis a = segmentation_analysis(outcomes_for(g, {s.a, s.b, s.c, s.d}));
    const SegmentationRow& row = a.rows[static_cast<std::size_t>(g)];
    INFO(s.model << " " << s.group);
    CHECK(row.table == stats::ContingencyTable{s.a, s.b, s.c, s.d});
    REQUIRE(row.test.has_value());
    if (s.p_value == 0.0)
      CHECK(row.test->p_value < 0.0005);
    else
      CHECK(std::fabs(row.test->p_value - s.p_value) <= 0.002);
    std::ostringstream md;
    write_segmentation_markdown(md, a);
    CHECK(md.str().find(std::string(display_name(g))) != std::string::npos);
  }
}

TEST_CASE("report helpers") {
  CHECK(format_p(0.0004) == "<0.001");
  CHECK(format_p(0.0456) == "0.046");
  CHECK(format_p(1.0) == "1.000");

  std::vector<NoteRecord> notes(5);
  for (std::size_t i = 0; i < notes.size(); ++i) {
    notes[i].doc_id = "n" + std::to_string(i);
    notes[i].word_count = 200 + 50 * i;
    notes[i].gold_count = 10;
    notes[i].counts.em = 2 + i;
    notes[i].counts.od = i % 2;
  }
  std::ostringstream svg;
  write_scatter_svg(svg, notes, NoteMeasure::EM, false);
  CHECK(svg.str().rfind("<svg", 0) == 0);
  CHECK(svg.str().find("r = 1.000") != std::string::npos);
  CHECK(svg.str().find("<circle") != std::string::npos);
  std::ostringstream csv;
  write_note_csv(csv, notes);
  CHECK(csv.str().find("n4,400,10,6,0,0,0,0,0,0,0,60.0") != std::string::npos);
}
