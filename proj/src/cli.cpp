#include "histent/cli.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "histent/analysis.hpp"
#include "histent/corpus.hpp"
#include "histent/matcher.hpp"
#include "histent/stats.hpp"
#include "histent/tagger.hpp"

namespace histent::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'", SourceLocation{path, {}, {}});
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Every file read and written by one command, for the manifest.
class Run {
 public:
  explicit Run(const RunConfig& config) : config_(config), dir_(config.out) {}

  std::string read(const std::string& path) {
    std::string bytes = read_file(path);
    inputs_.push_back({path, fnv1a64(bytes), bytes.size()});
    return bytes;
  }

  void write(const std::string& name, const std::string& bytes) {
    const fs::path target = dir_ / name;
    std::ofstream out(target, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + target.string() + "'", SourceLocation{target.string(), {}, {}});
    out << bytes;
    if (!out) throw Error(ErrorCode::IoError, "write failed for '" + target.string() + "'");
    outputs_[name] = {fnv1a64(bytes), bytes.size()};
  }

  void finish(const ojson& options) {
    ojson m;
    m["tool"] = std::string(kToolName);
    m["version"] = std::string(kToolVersion);
    m["command"] = config_.command;
    m["seed"] = config_.seed;
    m["options"] = options;
    m["inputs"] = ojson::array();
    for (const Input& i : inputs_)
      m["inputs"].push_back({{"path", i.path}, {"fnv1a64", hex64(i.digest)}, {"bytes", i.bytes}});
    m["outputs"] = ojson::array();
    for (const auto& [name, o] : outputs_)
      m["outputs"].push_back({{"name", name}, {"fnv1a64", hex64(o.first)}, {"bytes", o.second}});
    const std::string bytes = m.dump(2) + "\n";
    std::ofstream out(dir_ / "manifest.json", std::ios::binary | std::ios::trunc);
    out << bytes;
    if (!out) throw Error(ErrorCode::IoError, "cannot write manifest");
  }

 private:
  struct Input {
    std::string path;
    std::uint64_t digest;
    std::size_t bytes;
  };
  const RunConfig& config_;
  fs::path dir_;
  std::vector<Input> inputs_;
  std::map<std::string, std::pair<std::uint64_t, std::size_t>> outputs_;
};

struct Formats {
  bool csv = false;
  bool md = false;
  bool svg = false;
};

Formats parse_formats(const std::string& spec) {
  Formats f;
  if (spec.empty() || spec == "all") return Formats{true, true, true};
  std::stringstream in(spec);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item == "csv")
      f.csv = true;
    else if (item == "md")
      f.md = true;
    else if (item == "svg")
      f.svg = true;
    else if (item == "all")
      f = Formats{true, true, true};
    else
      throw Error(ErrorCode::MalformedInput, "unknown report format '" + item + "'");
  }
  return f;
}

template <typename F>
auto parallel_map(std::size_t n, F f) -> std::vector<decltype(f(std::size_t{0}))> {
  std::vector<decltype(f(std::size_t{0}))> out(n);
  const std::size_t threads = std::max<std::size_t>(1, std::min<std::size_t>(n, std::thread::hardware_concurrency()));
  std::vector<std::pair<std::size_t, std::exception_ptr>> failures(threads, {n, nullptr});
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += threads) {
        try {
          out[i] = f(i);
        } catch (...) {
          failures[t] = {i, std::current_exception()};
          return;
        }
      }
    });
  for (std::thread& th : pool) th.join();
  const auto first = std::min_element(failures.begin(), failures.end(),
                                      [](const auto& a, const auto& b) { return a.first < b.first; });
  if (first != failures.end() && first->second) std::rethrow_exception(first->second);
  return out;
}

std::vector<Document> read_corpus(Run& run, const std::string& path) {
  const std::string bytes = run.read(path);
  std::istringstream in(bytes);
  return read_corpus_jsonl(in, path);
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

struct Loaded {
  std::string doc_id;
  std::string text;
  std::vector<Entity> entities;
  std::vector<Entity> predicted;
};

std::vector<Loaded> load_any(Run& run, const std::string& path, const std::string& format, Source source) {
  std::vector<Loaded> out;
  try {
    if (format == "standoff-json") {
      for (const Document& d : read_corpus(run, path))
        out.push_back({d.doc_id(), d.text(), source == Source::Gold ? d.gold() : d.predicted(),
                       source == Source::Gold ? d.predicted() : std::vector<Entity>{}});
    } else if (format == "brat") {
      fs::path txt = path;
      txt.replace_extension(".txt");
      const std::string text = run.read(txt.string());
      const std::string ann = run.read(path);
      const std::string id = stem_of(path);
      out.push_back({id, text, parse_brat(text, ann, id, source), {}});
    } else if (format == "gpt-html") {
      const std::string id = stem_of(path);
      MarkedText m = parse_gpt_html(run.read(path), id, source);
      out.push_back({id, std::move(m.text), std::move(m.entities), {}});
    } else {
      throw Error(ErrorCode::MalformedInput, "unknown input format '" + format + "'");
    }
  } catch (const Error& e) {
    throw e.located(SourceLocation{path, {}, {}});
  }
  return out;
}

std::string format_for_extension(const std::string& path) {
  return fs::path(path).extension() == ".ann" ? "brat" : "standoff-json";
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const std::string& s : v) out += (out.empty() ? "" : ", ") + s;
  return out;
}

void require_same_text(const Document& doc, const std::string& text, const std::string& what) {
  if (doc.text() != text)
    throw Error(ErrorCode::SurfaceMismatch, what + " text for '" + doc.doc_id() + "' differs from the gold text");
}

// Gold documents keyed by id, in id order.
std::map<std::string, Document> index_gold(std::vector<Loaded> loaded) {
  std::map<std::string, Document> docs;
  for (Loaded& l : loaded) {
    if (docs.contains(l.doc_id)) throw Error(ErrorCode::DocIdMismatch, "duplicate document id '" + l.doc_id + "'");
    const std::string id = l.doc_id;
    docs.emplace(id, Document(l.doc_id, std::move(l.text), std::move(l.entities), std::move(l.predicted)));
  }
  return docs;
}

void attach_bme(Run& run, std::map<std::string, Document>& docs, const std::vector<std::string>& files) {
  for (const std::string& path : files) {
    const std::string format = format_for_extension(path);
    for (Loaded& l : load_any(run, path, format, Source::Gold)) {
      const auto it = docs.find(l.doc_id);
      if (it == docs.end()) throw Error(ErrorCode::DocIdMismatch, "basic entities for unknown document '" + l.doc_id + "'", SourceLocation{path, {}, {}});
      require_same_text(it->second, l.text, "basic entity");
      std::vector<Entity> gold = it->second.gold();
      for (Entity& e : l.entities)
        if (!e.is_mhe()) gold.push_back(std::move(e));
      it->second = it->second.with_gold(std::move(gold));
    }
  }
}

void attach_predictions(std::map<std::string, Document>& docs, std::vector<Loaded> preds, bool strict) {
  std::set<std::string> seen;
  std::vector<std::string> unknown;
  for (Loaded& l : preds) {
    const auto it = docs.find(l.doc_id);
    if (it == docs.end()) {
      unknown.push_back(l.doc_id);
      continue;
    }
    if (!seen.insert(l.doc_id).second) throw Error(ErrorCode::DocIdMismatch, "duplicate predictions for '" + l.doc_id + "'");
    require_same_text(it->second, l.text, "prediction");
    it->second = it->second.with_predictions(std::move(l.entities));
  }
  std::vector<std::string> missing;
  if (strict)
    for (const auto& [id, doc] : docs)
      if (!seen.contains(id)) missing.push_back(id);
  if (!unknown.empty() || !missing.empty()) {
    std::string msg = "document ids differ between gold and predictions";
    if (!missing.empty()) msg += "; no predictions for: " + join(missing);
    if (!unknown.empty()) msg += "; no gold for: " + join(unknown);
    throw Error(ErrorCode::DocIdMismatch, msg);
  }
}

std::vector<Document> values_of(std::map<std::string, Document>& docs) {
  std::vector<Document> out;
  for (auto& [id, d] : docs) out.push_back(std::move(d));
  return out;
}

// Standoff gold corpora plus optional BME files and prediction corpora.
std::vector<Document> load_scored_corpus(Run& run, const RunConfig& c) {
  std::vector<Loaded> gold;
  for (const std::string& path : c.gold) {
    auto part = load_any(run, path, "standoff-json", Source::Gold);
    gold.insert(gold.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  auto docs = index_gold(std::move(gold));
  attach_bme(run, docs, c.bme);
  if (!c.pred.empty()) {
    std::vector<Loaded> preds;
    for (const std::string& path : c.pred) {
      auto part = load_any(run, path, "standoff-json", Source::Predicted);
      preds.insert(preds.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    attach_predictions(docs, std::move(preds), true);
  }
  return values_of(docs);
}

template <typename Writer, typename Value>
std::string render(Writer w, const Value& v) {
  std::ostringstream out;
  w(out, v);
  return out.str();
}

void write_evaluation(Run& run, const std::vector<Document>& docs, const Formats& f) {
  const std::vector<MatchReport> reports = parallel_map(docs.size(), [&](std::size_t i) { return classify(docs[i]); });
  const RateTable table = aggregate(reports, gold_totals(docs));
  if (f.csv) {
    MatchReport all;
    for (const MatchReport& r : reports) all.merge(r);
    run.write("match_report.csv", render(write_report_csv, all));
    run.write("rate_table.csv", render(write_rate_table_csv, table));
  }
  if (f.md) run.write("rate_table.md", render(write_rate_table_markdown, table));
}

// --- transcribed tables ----------------------------------------------------

struct Tsv {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;

  std::optional<std::size_t> column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) return std::nullopt;
    return static_cast<std::size_t>(it - columns.begin());
  }
};

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t tab = line.find('\t', pos);
    out.push_back(line.substr(pos, tab == std::string::npos ? std::string::npos : tab - pos));
    if (tab == std::string::npos) break;
    pos = tab + 1;
  }
  return out;
}

Tsv parse_tsv(const std::string& bytes, const std::string& path) {
  Tsv t;
  std::istringstream in(bytes);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (t.columns.empty()) {
      if (line.rfind("# ", 0) == 0) line = line.substr(2);
      t.columns = split_tabs(line);
      continue;
    }
    if (line[0] == '#') continue;
    auto cells = split_tabs(line);
    if (cells.size() != t.columns.size())
      throw Error(ErrorCode::MalformedInput, "expected " + std::to_string(t.columns.size()) + " columns",
                  SourceLocation{path, line_no, {}});
    t.rows.push_back(std::move(cells));
    t.lines.push_back(line_no);
  }
  if (t.columns.empty()) throw Error(ErrorCode::MalformedInput, "table has no header", SourceLocation{path, {}, {}});
  return t;
}

std::size_t required(const Tsv& t, const std::string& name, const std::string& path) {
  if (auto c = t.column(name)) return *c;
  throw Error(ErrorCode::MalformedInput, "table lacks column '" + name + "'", SourceLocation{path, 1, {}});
}

double cell_number(const Tsv& t, std::size_t row, std::size_t col, const std::string& path) {
  const std::string& s = t.rows[row][col];
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v))
    throw Error(ErrorCode::MalformedInput, "'" + s + "' is not a number", SourceLocation{path, t.lines[row], col + 1});
  return v;
}

std::size_t cell_count(const Tsv& t, std::size_t row, std::size_t col, const std::string& path) {
  const double v = cell_number(t, row, col, path);
  if (v < 0 || v != std::floor(v))
    throw Error(ErrorCode::MalformedInput, "'" + t.rows[row][col] + "' is not a count", SourceLocation{path, t.lines[row], col + 1});
  return static_cast<std::size_t>(v);
}

std::string squash(std::string_view s) {
  std::string out;
  for (char c : s)
    if (std::isalnum(static_cast<unsigned char>(c))) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

analysis::HeaderGroup group_named(const std::string& s) {
  for (analysis::HeaderGroup g : analysis::kAllHeaderGroups)
    if (squash(s) == squash(analysis::name_of(g))) return g;
  throw Error(ErrorCode::UnknownHeaderGroup, "unknown header group '" + s + "'");
}

MatchCategory category_named(const std::string& s) {
  for (MatchCategory c : kAllMatchCategories)
    if (squash(s) == squash(name_of(c))) return c;
  throw Error(ErrorCode::MalformedInput, "unknown match category '" + s + "'");
}

std::string safe_name(const std::string& s) {
  std::string out;
  for (char c : s)
    out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '+' ? c : '_';
  return out;
}

// Rows grouped by the optional "model" column, in first-seen order.
std::vector<std::pair<std::string, std::vector<std::size_t>>> by_model(const Tsv& t) {
  std::vector<std::pair<std::string, std::vector<std::size_t>>> out;
  const auto col = t.column("model");
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string model = col ? t.rows[r][*col] : "";
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& p) { return p.first == model; });
    if (it == out.end()) {
      out.push_back({model, {}});
      it = std::prev(out.end());
    }
    it->second.push_back(r);
  }
  return out;
}

std::string suffixed(const std::string& base, const std::string& model, const std::string& ext) {
  return base + (model.empty() ? "" : "." + safe_name(model)) + ext;
}

void write_length(Run& run, const analysis::LengthAnalysis& a, const std::string& model, const Formats& f) {
  if (f.csv) run.write(suffixed("entity_length", model, ".csv"), render(analysis::write_length_csv, a));
  if (f.md) run.write(suffixed("entity_length", model, ".md"), render(analysis::write_length_markdown, a));
}

void write_notes(Run& run, const std::vector<analysis::NoteRecord>& notes, const std::string& model, const Formats& f) {
  const analysis::NoteLengthAnalysis a = analysis::note_length_analysis(notes);
  if (f.csv) {
    run.write(suffixed("note_counts", model, ".csv"), render(analysis::write_note_csv, notes));
    run.write(suffixed("note_correlations", model, ".csv"), render(analysis::write_note_footer_csv, a));
  }
  if (f.md) run.write(suffixed("note_correlations", model, ".md"), render(analysis::write_note_footer_markdown, a));
  if (f.svg) {
    std::ostringstream count, rate;
    analysis::write_scatter_svg(count, notes, analysis::NoteMeasure::Error, false);
    analysis::write_scatter_svg(rate, notes, analysis::NoteMeasure::Error, true);
    run.write(suffixed("note_error_count", model, ".svg"), count.str());
    run.write(suffixed("note_error_rate", model, ".svg"), rate.str());
  }
}

void write_sections(Run& run, const analysis::SegmentationAnalysis& a, const std::string& model, const Formats& f) {
  if (f.csv) run.write(suffixed("segmentation", model, ".csv"), render(analysis::write_segmentation_csv, a));
  if (f.md) run.write(suffixed("segmentation", model, ".md"), render(analysis::write_segmentation_markdown, a));
}

void analyze_tables(Run& run, const RunConfig& c, const Formats& f) {
  const std::string& path = c.tables;
  const Tsv t = parse_tsv(run.read(path), path);
  try {
    for (const auto& [model, rows] : by_model(t)) {
      if (c.which == "sections") {
        const std::size_t g = required(t, "group", path);
        const std::size_t cols[4] = {required(t, "matched_in", path), required(t, "matched_out", path),
                                     required(t, "mmud_in", path), required(t, "mmud_out", path)};
        std::vector<analysis::PlacedOutcome> outcomes;
        for (std::size_t r : rows) {
          const analysis::HeaderGroup group = group_named(t.rows[r][g]);
          const Concept mhe = group == analysis::HeaderGroup::CC              ? Concept::CC
                              : group == analysis::HeaderGroup::HPI           ? Concept::HpiLocation
                              : group == analysis::HeaderGroup::PastHistory   ? Concept::PastHistory
                              : group == analysis::HeaderGroup::FamilyHistory ? Concept::FamilyHistory
                                                                              : Concept::SocialHistory;
          for (int k = 0; k < 4; ++k) {
            const std::size_t n = cell_count(t, r, cols[k], path);
            for (std::size_t i = 0; i < n; ++i)
              outcomes.push_back({analysis::SectionPlacement{Entity{mhe, 0, 1, model, Source::Gold}, k % 2 == 0, group}, k < 2});
          }
        }
        write_sections(run, analysis::segmentation_analysis(outcomes), model, f);
      } else if (c.which == "notes") {
        const std::size_t wc = required(t, "word_count", path);
        const std::size_t gc = required(t, "gold_count", path);
        const std::size_t cols[5] = {required(t, "em", path), required(t, "rm", path), required(t, "mm", path),
                                     required(t, "ud", path), required(t, "od", path)};
        const auto sample = t.column("sample");
        std::vector<analysis::NoteRecord> notes;
        for (std::size_t r : rows) {
          analysis::NoteRecord n;
          n.doc_id = sample ? t.rows[r][*sample] : std::to_string(r + 1);
          n.word_count = cell_count(t, r, wc, path);
          n.gold_count = cell_count(t, r, gc, path);
          n.counts = MatchCounts{cell_count(t, r, cols[0], path), cell_count(t, r, cols[1], path),
                                 cell_count(t, r, cols[2], path), cell_count(t, r, cols[3], path),
                                 cell_count(t, r, cols[4], path)};
          notes.push_back(std::move(n));
        }
        write_notes(run, notes, model, f);
      } else if (c.which == "length") {
        const std::size_t cat = required(t, "category", path);
        const std::size_t mean = required(t, "mean", path);
        const std::size_t sd = required(t, "sd", path);
        const std::size_t n = required(t, "n", path);
        std::map<MatchCategory, stats::SummarySample> summaries;
        for (std::size_t r : rows)
          summaries[category_named(t.rows[r][cat])] =
              stats::SummarySample{cell_number(t, r, mean, path), cell_number(t, r, sd, path), cell_count(t, r, n, path)};
        write_length(run, analysis::entity_length_analysis(summaries), model, f);
      } else {
        throw Error(ErrorCode::MalformedInput, "table input needs one analysis: length, notes or sections");
      }
    }
  } catch (const Error& e) {
    throw e.located(SourceLocation{path, {}, {}});
  }
}

analysis::HeaderLexicon lexicon_for(Run& run, const RunConfig& c, std::string& used) {
  used = c.lexicon;
  if (const char* env = std::getenv("HISTENT_LEXICON"); env && *env) used = env;
  if (used.empty()) return analysis::HeaderLexicon::standard();
  try {
    return analysis::HeaderLexicon::from_json(run.read(used));
  } catch (const Error& e) {
    throw e.located(SourceLocation{used, {}, {}});
  }
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void prepare(const RunConfig& config) {
  auto must_exist = [](const std::string& path) {
    std::error_code ec;
    if (!fs::is_regular_file(path, ec))
      throw Error(ErrorCode::IoError, "input file '" + path + "' does not exist", SourceLocation{path, {}, {}});
  };
  for (const auto* list : {&config.gold, &config.pred, &config.bme})
    for (const std::string& p : *list) must_exist(p);
  if (!config.tables.empty()) must_exist(config.tables);
  if (config.out.empty()) throw Error(ErrorCode::IoError, "no output directory given");
  std::error_code ec;
  fs::create_directories(config.out, ec);
  if (ec || !fs::is_directory(config.out))
    throw Error(ErrorCode::IoError, "cannot create output directory '" + config.out + "'", SourceLocation{config.out, {}, {}});
  const fs::path probe = fs::path(config.out) / ".histent-write-check";
  {
    std::ofstream out(probe);
    if (!out) throw Error(ErrorCode::IoError, "output directory '" + config.out + "' is not writable", SourceLocation{config.out, {}, {}});
  }
  fs::remove(probe, ec);
}

void cmd_convert(const RunConfig& c) {
  Run run(c);
  std::vector<Loaded> gold;
  for (const std::string& path : c.gold) {
    auto part = load_any(run, path, c.format, Source::Gold);
    gold.insert(gold.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  auto docs = index_gold(std::move(gold));
  attach_bme(run, docs, c.bme);
  if (!c.pred.empty()) {
    std::vector<Loaded> preds;
    for (const std::string& path : c.pred) {
      auto part = load_any(run, path, c.format, Source::Predicted);
      preds.insert(preds.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    attach_predictions(docs, std::move(preds), false);
  }
  std::ostringstream out;
  write_corpus_jsonl(out, values_of(docs));
  run.write("corpus.jsonl", out.str());
  run.finish({{"format", c.format}});
}

void cmd_evaluate(const RunConfig& c) {
  Run run(c);
  const Formats f = parse_formats(c.format.empty() ? "csv,md" : c.format);
  write_evaluation(run, load_scored_corpus(run, c), f);
  run.finish({{"format", c.format}});
}

void cmd_analyze(const RunConfig& c) {
  Run run(c);
  const Formats f = parse_formats(c.format);
  ojson options = {{"which", c.which}, {"format", c.format.empty() ? "all" : c.format}};
  if (!c.tables.empty()) {
    analyze_tables(run, c, f);
    options["tables"] = c.tables;
    run.finish(options);
    return;
  }
  const std::vector<Document> docs = load_scored_corpus(run, c);
  const std::vector<MatchReport> reports = parallel_map(docs.size(), [&](std::size_t i) { return classify(docs[i]); });
  const bool all = c.which == "all";
  if (all || c.which == "length") {
    std::vector<analysis::LengthRecord> records;
    for (std::size_t i = 0; i < docs.size(); ++i) {
      auto part = analysis::length_records(docs[i], reports[i]);
      records.insert(records.end(), part.begin(), part.end());
    }
    write_length(run, analysis::entity_length_analysis(records), "", f);
  }
  if (all || c.which == "notes") {
    std::vector<analysis::NoteRecord> notes;
    for (std::size_t i = 0; i < docs.size(); ++i) notes.push_back(analysis::note_record(docs[i], reports[i]));
    write_notes(run, notes, "", f);
  }
  if (all || c.which == "sections") {
    std::string used;
    const analysis::HeaderLexicon lexicon = lexicon_for(run, c, used);
    write_sections(run, analysis::segmentation_analysis(docs, reports, lexicon), "", f);
    run.write("header_lexicon.json", lexicon.to_json() + "\n");
    options["lexicon"] = used.empty() ? "default" : used;
  }
  run.finish(options);
}

void cmd_train(const RunConfig& c) {
  Run run(c);
  const Formats f = parse_formats(c.format.empty() ? "csv,md" : c.format);
  const tagger::Mode mode = tagger::parse_mode(c.mode.empty() ? "basic" : c.mode);
  tagger::Hyperparameters hp;
  if (c.epochs) hp.epochs = *c.epochs;
  if (c.learning_rate) hp.learning_rate = *c.learning_rate;

  RunConfig gold_only = c;
  gold_only.pred.clear();
  const std::vector<Document> corpus = load_scored_corpus(run, gold_only);
  std::vector<std::string> ids;
  for (const Document& d : corpus) ids.push_back(d.doc_id());
  const tagger::FoldPlan plan = tagger::make_fold_plan(ids, c.folds, c.seed);
  const tagger::TrainResult result = tagger::train(corpus, mode, plan, c.seed, hp);

  ojson folds = ojson::array();
  for (const auto& fold : plan.folds) folds.push_back(fold);
  run.write("folds.json", ojson{{"folds", folds}}.dump(2) + "\n");
  std::ostringstream losses;
  losses << "fold,epoch,loss\n";
  for (const tagger::FoldResult& fr : result.folds) {
    std::ostringstream model;
    fr.fit.model.save(model);
    run.write("fold_" + std::to_string(fr.fold + 1) + ".model", model.str());
    for (std::size_t e = 0; e < fr.fit.epoch_loss.size(); ++e) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.10g", fr.fit.epoch_loss[e]);
      losses << fr.fold + 1 << ',' << e + 1 << ',' << buf << '\n';
    }
  }
  run.write("training_loss.csv", losses.str());
  std::ostringstream preds;
  write_corpus_jsonl(preds, result.predictions);
  run.write("predictions.jsonl", preds.str());
  std::string warnings;
  for (const std::string& w : result.warnings) warnings += w + "\n";
  run.write("warnings.txt", warnings);
  write_evaluation(run, result.predictions, f);
  run.finish({{"mode", std::string(tagger::name_of(mode))},
              {"folds", c.folds},
              {"epochs", hp.epochs},
              {"learning_rate", hp.learning_rate},
              {"batch_sentences", hp.batch_sentences},
              {"dropout", hp.dropout}});
}

std::string error_json(const Error& e) {
  ojson j;
  j["error"] = std::string(error_code_name(e.code()));
  j["message"] = e.what();
  if (!e.where().file.empty()) j["file"] = e.where().file;
  if (e.where().line) j["line"] = *e.where().line;
  if (e.where().column) j["column"] = *e.where().column;
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Scores and analyzes medical history entity predictions on clinical notes.", std::string(kToolName)};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  RunConfig c;

  auto* convert = app.add_subcommand("convert", "Convert brat, span markup or standoff JSON into a standoff JSON corpus");
  convert->add_option("--format", c.format, "Input format")->required()->check(CLI::IsMember({"standoff-json", "brat", "gpt-html"}));
  convert->add_option("--gold", c.gold, "Gold files (.ann with a sibling .txt, marked .html, or .jsonl)")->required();
  convert->add_option("--pred", c.pred, "Prediction files in the same format");
  convert->add_option("--bme", c.bme, "Basic entity files (.ann or .jsonl)");
  convert->add_option("--out", c.out, "Output directory")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Score predictions and write rate tables");
  evaluate->add_option("--gold", c.gold, "Gold standoff JSON corpora")->required();
  evaluate->add_option("--pred", c.pred, "Prediction corpora; defaults to the predictions inside --gold");
  evaluate->add_option("--bme", c.bme, "Basic entity files");
  evaluate->add_option("--out", c.out, "Output directory")->required();
  evaluate->add_option("--format", c.format, "Comma list of csv, md");

  auto* analyze = app.add_subcommand("analyze", "Entity length, note length and segmentation statistics");
  analyze->add_option("which", c.which, "length, notes, sections or all")->required()->check(CLI::IsMember({"length", "notes", "sections", "all"}));
  analyze->add_option("--gold", c.gold, "Gold standoff JSON corpora");
  analyze->add_option("--pred", c.pred, "Prediction corpora");
  analyze->add_option("--bme", c.bme, "Basic entity files");
  analyze->add_option("--lexicon", c.lexicon, "Header lexicon JSON (HISTENT_LEXICON overrides)");
  analyze->add_option("--tables", c.tables, "Tab-separated transcribed table to analyze instead of a corpus");
  analyze->add_option("--out", c.out, "Output directory")->required();
  analyze->add_option("--format", c.format, "Comma list of csv, md, svg");

  auto* train = app.add_subcommand("train", "Cross-validated tagger training and out-of-fold evaluation");
  train->add_option("--gold", c.gold, "Gold standoff JSON corpora")->required();
  train->add_option("--bme", c.bme, "Basic entity files");
  train->add_option("--mode", c.mode, "basic or with_bme")->check(CLI::IsMember({"basic", "with_bme"}));
  train->add_option("--seed", c.seed, "Random seed");
  train->add_option("--folds", c.folds, "Number of folds")->check(CLI::Range(2, 1000));
  train->add_option("--epochs", c.epochs, "Training epochs");
  train->add_option("--learning-rate", c.learning_rate, "SGD learning rate");
  train->add_option("--out", c.out, "Output directory")->required();
  train->add_option("--format", c.format, "Comma list of csv, md");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    if (analyze->parsed() && c.gold.empty() == c.tables.empty())
      throw CLI::ValidationError("analyze needs exactly one of --gold or --tables");
    if (analyze->parsed() && !c.tables.empty() && c.which == "all")
      throw CLI::ValidationError("--tables needs one analysis: length, notes or sections");
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << ojson{{"error", "UsageError"}, {"message", e.what()}}.dump() << '\n';
    return 2;
  }

  for (auto* sub : app.get_subcommands()) c.command = sub->get_name();
  try {
    prepare(c);
    if (c.command == "convert") cmd_convert(c);
    if (c.command == "evaluate") cmd_evaluate(c);
    if (c.command == "analyze") cmd_analyze(c);
    if (c.command == "train") cmd_train(c);
  } catch (const Error& e) {
    err << error_json(e) << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << ojson{{"error", "InternalError"}, {"message", e.what()}}.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
    return 1;
  }
  return 0;
}

}  // namespace histent::cli
