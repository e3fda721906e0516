#include "fixtures.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#ifndef HISTENT_TEST_DATA_DIR
#define HISTENT_TEST_DATA_DIR "tests/data"
#endif

namespace histent::testing {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, '\t')) out.push_back(field);
  return out;
}

}  // namespace

std::string data_dir() { return HISTENT_TEST_DATA_DIR; }

std::size_t Table::column(const std::string& name) const {
  for (std::size_t k = 0; k < columns.size(); ++k)
    if (columns[k] == name) return k;
  throw std::out_of_range("no column '" + name + "'");
}

const std::string& Table::at(std::size_t row, const std::string& name) const {
  return rows.at(row).at(column(name));
}

double Table::number(std::size_t row, const std::string& name) const {
  return std::stod(at(row, name));
}

std::size_t Table::count(std::size_t row, const std::string& name) const {
  return static_cast<std::size_t>(std::stoull(at(row, name)));
}

Table load_table(const std::string& file_name) {
  const std::string path = data_dir() + "/" + file_name;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open fixture " + path);
  Table t;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      t.columns = split_tabs(line.substr(2));
      continue;
    }
    t.rows.push_back(split_tabs(line));
  }
  return t;
}

std::vector<SectionCase> section_cases() {
  const Table t = load_table("section_tables.tsv");
  std::vector<SectionCase> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    out.push_back(SectionCase{t.at(r, "model"), t.at(r, "group"), t.count(r, "matched_in"),
                              t.count(r, "matched_out"), t.count(r, "mmud_in"),
                              t.count(r, "mmud_out"), t.number(r, "p_value")});
  return out;
}

std::vector<NoteBlock> note_blocks() {
  const Table counts = load_table("note_counts.tsv");
  const Table footers = load_table("note_footers.tsv");
  std::vector<NoteBlock> blocks;
  auto block_for = [&blocks](const std::string& model) -> NoteBlock& {
    for (NoteBlock& b : blocks)
      if (b.model == model) return b;
    blocks.push_back(NoteBlock{model, {}, {}, {}, {}});
    return blocks.back();
  };
  for (std::size_t r = 0; r < counts.rows.size(); ++r) {
    NoteBlock& b = block_for(counts.at(r, "model"));
    b.word_count.push_back(counts.number(r, "word_count"));
    b.gold_count.push_back(counts.number(r, "gold_count"));
    for (const std::string& key : kNoteKeys) b.counts[key].push_back(counts.number(r, key));
  }
  for (std::size_t r = 0; r < footers.rows.size(); ++r) {
    NoteBlock& b = block_for(footers.at(r, "model"));
    for (const std::string& key : kNoteKeys)
      b.footers[footers.at(r, "row")][key] = footers.number(r, key);
  }
  return blocks;
}

std::vector<LengthCase> length_cases() {
  const Table t = load_table("entity_lengths.tsv");
  std::vector<LengthCase> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    out.push_back(LengthCase{t.at(r, "model"), t.at(r, "category"), t.number(r, "mean"),
                             t.number(r, "sd"), t.count(r, "n"), t.at(r, "p_value")});
  return out;
}

}  // namespace histent::testing
