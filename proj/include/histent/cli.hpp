#ifndef HISTENT_CLI_HPP
#define HISTENT_CLI_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "histent/error.hpp"

namespace histent::cli {

inline constexpr std::string_view kToolName = "histent";
inline constexpr std::string_view kToolVersion = "1.0.0";

/// 64-bit FNV-1a, used for input digests in run manifests.
std::uint64_t fnv1a64(std::string_view bytes);

struct RunConfig {
  std::string command;              // convert, evaluate, analyze, train
  std::vector<std::string> gold;    // corpus or annotation files
  std::vector<std::string> pred;
  std::vector<std::string> bme;     // .ann files or standoff corpora
  std::string lexicon;
  std::string tables;               // analyze: transcribed table instead of a corpus
  std::string out;
  std::string format;               // convert: input format; otherwise report formats
  std::string mode;                 // train: basic or with_bme
  std::string which;                // analyze: length, notes, sections or all
  std::uint64_t seed = 0;
  std::size_t folds = 5;
  std::optional<std::size_t> epochs;
  std::optional<double> learning_rate;
};

/// Checks that inputs exist and the output directory can be created.
/// Throws Error(IoError).
void prepare(const RunConfig& config);

void cmd_convert(const RunConfig& config);
void cmd_evaluate(const RunConfig& config);
void cmd_analyze(const RunConfig& config);
void cmd_train(const RunConfig& config);

/// {"error": code, "message": ..., "file": ..., "line": ..., "column": ...}
std::string error_json(const Error& e);

/// Parses arguments (without the program name) and runs one command.
/// Returns 0 on success, 1 on a reported error, 2 on a usage error.
/// Diagnostics go to `err` as one JSON object per line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace histent::cli

#endif  // HISTENT_CLI_HPP
