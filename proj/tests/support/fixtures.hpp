#ifndef HISTENT_TESTS_FIXTURES_HPP
#define HISTENT_TESTS_FIXTURES_HPP

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace histent::testing {

/// Directory holding the transcribed tables.
std::string data_dir();

/// A tab-separated table whose first line is "# col1<TAB>col2...".
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
  const std::string& at(std::size_t row, const std::string& name) const;
  double number(std::size_t row, const std::string& name) const;
  std::size_t count(std::size_t row, const std::string& name) const;
};

Table load_table(const std::string& file_name);

/// Row of a published 2x2 segmentation table.
struct SectionCase {
  std::string model;
  std::string group;
  std::size_t a, b, c, d;
  double p_value;
};
std::vector<SectionCase> section_cases();

/// Per-note counts grouped by model, plus the published footer rows.
struct NoteBlock {
  std::string model;
  std::vector<double> word_count;
  std::vector<double> gold_count;
  std::map<std::string, std::vector<double>> counts;  // em ... rm_error
  std::map<std::string, std::map<std::string, double>> footers;  // row -> key -> value
};
std::vector<NoteBlock> note_blocks();

inline const std::vector<std::string> kNoteKeys = {"em", "rm", "mm", "ud", "od",
                                                   "mmud", "error", "rm_error"};

struct LengthCase {
  std::string model;
  std::string category;
  double mean, sd;
  std::size_t n;
  std::string p_value;  // "reference", "<0.001" or a decimal
};
std::vector<LengthCase> length_cases();

}  // namespace histent::testing

#endif  // HISTENT_TESTS_FIXTURES_HPP
