#ifndef HISTENT_TAGGER_HPP
#define HISTENT_TAGGER_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "histent/bio.hpp"
#include "histent/corpus.hpp"

namespace histent::tagger {

inline constexpr std::size_t kDefaultHashWidth = std::size_t{1} << 18;

enum class Mode { Basic, WithBme };

std::string_view name_of(Mode m);  // "basic", "with_bme"
/// Throws Error(MalformedInput).
Mode parse_mode(std::string_view name);

/// Hashed surface features of one token, with the basic entity row appended
/// in WithBme mode.
struct TokenFeatures {
  std::vector<std::uint32_t> indices;  // sorted, unique, < hash width
  std::optional<FeatureVector> bme;

  friend bool operator==(const TokenFeatures&, const TokenFeatures&) = default;
};

/// 32-bit FNV-1a.
std::uint32_t fnv1a(std::string_view bytes);

/// Lowercased token, 3-character prefix and suffix, shape class and the
/// lowercased neighbors at -1 and +1. In WithBme mode basic entities are
/// read from the document's gold list and a document without any throws
/// Error(MissingBme).
std::vector<TokenFeatures> extract_features(const Document& doc, Mode mode,
                                            std::size_t hash_width = kDefaultHashWidth);

/// "Xxxx", "dd", "x.x" style shape with repeated classes collapsed.
std::string shape_of(std::string_view token);

struct Hyperparameters {
  double learning_rate = 0.1;
  std::size_t epochs = 40;
  std::size_t batch_sentences = 8;
  double dropout = 0.10;
  /// Also drop basic entity bits, not only hashed features.
  bool dropout_on_bme = false;
  std::size_t hash_width = kDefaultHashWidth;

  friend bool operator==(const Hyperparameters&, const Hyperparameters&) = default;
};

using TagScores = std::array<double, kMheTagCount>;

struct Gradient;

/// Softmax output layer over the 25 history tags. Only rows that were ever
/// updated are stored; every other row is zero.
class TaggerModel {
 public:
  TaggerModel(Mode mode, const Hyperparameters& hp = {}, std::uint64_t seed = 0);

  Mode mode() const { return mode_; }
  const Hyperparameters& hyperparameters() const { return hp_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t hash_width() const { return hp_.hash_width; }
  /// hash width, plus the basic entity width in WithBme mode.
  std::size_t width() const;

  double weight(std::size_t row, std::size_t tag) const;
  void set_weight(std::size_t row, std::size_t tag, double value);
  double bias(std::size_t tag) const { return bias_[tag]; }
  void set_bias(std::size_t tag, double value) { bias_[tag] = value; }
  std::size_t stored_rows() const { return rows_.size(); }

  /// W -= step * g, bias likewise.
  void apply(const Gradient& g, double step);

  TagScores scores(const TokenFeatures& x) const;
  TagScores probabilities(const TokenFeatures& x) const;
  /// Highest score; ties go to the lowest tag index.
  MheTag predict_tag(const TokenFeatures& x) const;

  /// Text format: a header of dimensions and hyperparameters, the bias, then
  /// one line per nonzero row with its index and 25 weights.
  void save(std::ostream& out) const;
  /// Throws Error(MalformedInput) with the offending line.
  static TaggerModel load(std::istream& in);

  friend bool operator==(const TaggerModel&, const TaggerModel&) = default;

 private:
  Mode mode_;
  Hyperparameters hp_;
  std::uint64_t seed_;
  std::unordered_map<std::uint32_t, std::array<double, kMheTagCount>> rows_;
  TagScores bias_{};
};

/// Feature values after dropout. Indices >= hash width address the basic
/// entity rows.
using ActiveFeatures = std::vector<std::pair<std::uint32_t, double>>;

ActiveFeatures active(const TaggerModel& model, const TokenFeatures& x);

struct Gradient {
  std::unordered_map<std::uint32_t, std::array<double, kMheTagCount>> rows;
  TagScores bias{};

  double weight(std::size_t row, std::size_t tag) const;
};

struct LossAndGradient {
  double loss = 0.0;
  Gradient gradient;
};

/// Summed cross-entropy over the batch tokens and its exact gradient.
/// Throws Error(DomainError) on an empty or ragged batch and
/// Error(NonFiniteLoss) if the loss overflows.
LossAndGradient loss_and_grad(const TaggerModel& model, const std::vector<TokenFeatures>& xs,
                              const std::vector<MheTag>& ys);

/// Same, with inverted dropout: each feature is kept with probability
/// 1 - dropout and scaled by its inverse.
LossAndGradient loss_and_grad(const TaggerModel& model, const std::vector<TokenFeatures>& xs,
                              const std::vector<MheTag>& ys, std::mt19937_64& dropout_rng);

/// Mean per-token cross-entropy without dropout.
double mean_loss(const TaggerModel& model, const std::vector<Document>& docs);

/// Per-token argmax, then lenient BIO decoding.
std::vector<Entity> predict(const TaggerModel& model, const Document& doc,
                            std::vector<std::string>* warnings = nullptr);

struct FoldPlan {
  std::vector<std::vector<std::string>> folds;

  /// Throws Error(DocIdMismatch) for unknown ids.
  std::size_t fold_of(const std::string& doc_id) const;
};

/// Shuffles the sorted doc ids with `seed` and deals them round robin.
/// Throws Error(EmptyFold) when there are fewer documents than folds.
FoldPlan make_fold_plan(std::vector<std::string> doc_ids, std::size_t k, std::uint64_t seed);

/// Throws Error(EmptyFold) or Error(DocIdMismatch) unless the folds are
/// nonempty, disjoint and cover exactly `doc_ids`.
void check_fold_plan(const FoldPlan& plan, const std::vector<std::string>& doc_ids);

struct FitResult {
  TaggerModel model;
  std::vector<double> epoch_loss;  // mean per-token training loss, with dropout
};

FitResult fit(const std::vector<Document>& docs, Mode mode, std::uint64_t seed,
              const Hyperparameters& hp = {});

struct FoldResult {
  std::size_t fold = 0;
  FitResult fit;
};

struct TrainResult {
  std::vector<FoldResult> folds;
  /// Input documents in input order, each carrying the predictions of the
  /// fold model that did not see it.
  std::vector<Document> predictions;
  std::vector<std::string> warnings;
};

/// Cross-validated training; folds run in parallel threads.
TrainResult train(const std::vector<Document>& corpus, Mode mode, const FoldPlan& plan,
                  std::uint64_t seed, const Hyperparameters& hp = {});

}  // namespace histent::tagger

#endif  // HISTENT_TAGGER_HPP
