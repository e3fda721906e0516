#include "histent/tagger.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "histent/error.hpp"
#include "histent/text.hpp"

namespace histent::tagger {

namespace {

constexpr std::string_view kFormatMagic = "histent-tagger";
constexpr int kFormatVersion = 1;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Uniform in [0, n) by rejection; std distributions differ across libraries.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t threshold = (0 - n) % n;
  std::uint64_t r;
  do r = rng();
  while (r < threshold);
  return r % n;
}

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[bounded(rng, i)]);
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<TokenFeatures> features_of(const Document& doc, Mode mode, std::size_t hash_width,
                                       bool require_bme) {
  if (hash_width == 0 || hash_width > std::numeric_limits<std::uint32_t>::max())
    throw Error(ErrorCode::DomainError, "hash width out of range");
  const auto& tokens = doc.tokens();
  std::vector<TokenFeatures> out(tokens.size());
  std::vector<std::string> low;
  low.reserve(tokens.size());
  for (const Token& t : tokens) low.push_back(lower(t.text));

  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::u32string cps = decode_utf8(low[i]);
    const std::size_t k = std::min<std::size_t>(3, cps.size());
    const std::string feats[] = {
        "w=" + low[i],
        "p3=" + encode_utf8(std::u32string_view(cps).substr(0, k)),
        "s3=" + encode_utf8(std::u32string_view(cps).substr(cps.size() - k)),
        "sh=" + shape_of(tokens[i].text),
        "w-1=" + (i > 0 ? low[i - 1] : std::string("<s>")),
        "w+1=" + (i + 1 < tokens.size() ? low[i + 1] : std::string("</s>")),
    };
    auto& idx = out[i].indices;
    for (const std::string& f : feats) idx.push_back(static_cast<std::uint32_t>(fnv1a(f) % hash_width));
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  }

  if (mode == Mode::WithBme) {
    const std::vector<Entity> bme = doc.gold_bme();
    if (bme.empty() && require_bme)
      throw Error(ErrorCode::MissingBme, "document '" + doc.doc_id() + "' has no basic entities");
    const std::vector<FeatureVector> rows = encode_bme_features(doc, bme);
    for (std::size_t i = 0; i < out.size(); ++i) out[i].bme = rows[i];
  }
  return out;
}

// Log-softmax pieces for one token: scores and their log normalizer.
struct Forward {
  TagScores z;
  double lse;
};

Forward forward(const TaggerModel& model, const ActiveFeatures& feats) {
  Forward f;
  for (std::size_t t = 0; t < kMheTagCount; ++t) f.z[t] = model.bias(t);
  for (const auto& [row, value] : feats)
    for (std::size_t t = 0; t < kMheTagCount; ++t) f.z[t] += value * model.weight(row, t);
  const double top = *std::max_element(f.z.begin(), f.z.end());
  double sum = 0.0;
  for (double v : f.z) sum += std::exp(v - top);
  f.lse = top + std::log(sum);
  return f;
}

LossAndGradient accumulate(const TaggerModel& model, const std::vector<TokenFeatures>& xs,
                           const std::vector<MheTag>& ys, std::mt19937_64* rng) {
  if (xs.empty()) throw Error(ErrorCode::DomainError, "empty batch");
  if (xs.size() != ys.size()) throw Error(ErrorCode::DomainError, "batch features and tags differ in length");
  const Hyperparameters& hp = model.hyperparameters();
  const double keep = 1.0 - hp.dropout;
  LossAndGradient out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    ActiveFeatures feats = active(model, xs[i]);
    if (rng && hp.dropout > 0.0) {
      ActiveFeatures kept;
      for (const auto& [row, value] : feats) {
        const bool tail = row >= model.hash_width();
        if (tail && !hp.dropout_on_bme) {
          kept.emplace_back(row, value);
          continue;
        }
        if (unit(*rng) < keep) kept.emplace_back(row, value / keep);
      }
      feats = std::move(kept);
    }
    const Forward f = forward(model, feats);
    const std::size_t y = ys[i].index();
    out.loss += f.lse - f.z[y];
    TagScores p;
    for (std::size_t t = 0; t < kMheTagCount; ++t) p[t] = std::exp(f.z[t] - f.lse);
    p[y] -= 1.0;
    for (std::size_t t = 0; t < kMheTagCount; ++t) out.gradient.bias[t] += p[t];
    for (const auto& [row, value] : feats) {
      auto& g = out.gradient.rows[row];
      for (std::size_t t = 0; t < kMheTagCount; ++t) g[t] += value * p[t];
    }
  }
  if (!std::isfinite(out.loss)) throw Error(ErrorCode::NonFiniteLoss, "loss is not finite");
  return out;
}

}  // namespace

std::string_view name_of(Mode m) { return m == Mode::Basic ? "basic" : "with_bme"; }

Mode parse_mode(std::string_view name) {
  if (name == "basic") return Mode::Basic;
  if (name == "with_bme") return Mode::WithBme;
  throw Error(ErrorCode::MalformedInput, "unknown mode '" + std::string(name) + "'");
}

std::uint32_t fnv1a(std::string_view bytes) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 16777619u;
  }
  return h;
}

std::string shape_of(std::string_view token) {
  std::string out;
  for (char32_t cp : decode_utf8(token)) {
    std::string cls;
    if (cp >= U'A' && cp <= U'Z')
      cls = "X";
    else if (cp >= U'a' && cp <= U'z')
      cls = "x";
    else if (cp >= U'0' && cp <= U'9')
      cls = "d";
    else if (classify(cp) == CharClass::Word)
      cls = "x";
    else
      append_utf8(cls, cp);
    if (!out.ends_with(cls)) out += cls;
  }
  return out;
}

std::vector<TokenFeatures> extract_features(const Document& doc, Mode mode, std::size_t hash_width) {
  return features_of(doc, mode, hash_width, true);
}

// --- model ------------------------------------------------------------------

TaggerModel::TaggerModel(Mode mode, const Hyperparameters& hp, std::uint64_t seed)
    : mode_(mode), hp_(hp), seed_(seed) {
  if (hp.hash_width == 0 || hp.hash_width > std::numeric_limits<std::uint32_t>::max() - kBmeFeatureWidth)
    throw Error(ErrorCode::DomainError, "hash width out of range");
  if (!(hp.dropout >= 0.0 && hp.dropout < 1.0)) throw Error(ErrorCode::DomainError, "dropout must be in [0, 1)");
  if (!(hp.learning_rate > 0.0) || !std::isfinite(hp.learning_rate))
    throw Error(ErrorCode::DomainError, "learning rate must be positive");
  if (hp.batch_sentences == 0) throw Error(ErrorCode::DomainError, "batch size must be positive");
}

std::size_t TaggerModel::width() const {
  return hp_.hash_width + (mode_ == Mode::WithBme ? kBmeFeatureWidth : 0);
}

double TaggerModel::weight(std::size_t row, std::size_t tag) const {
  const auto it = rows_.find(static_cast<std::uint32_t>(row));
  return it == rows_.end() ? 0.0 : it->second[tag];
}

void TaggerModel::set_weight(std::size_t row, std::size_t tag, double value) {
  if (row >= width() || tag >= kMheTagCount) throw Error(ErrorCode::DomainError, "weight index out of range");
  rows_[static_cast<std::uint32_t>(row)][tag] = value;
}

void TaggerModel::apply(const Gradient& g, double step) {
  for (std::size_t t = 0; t < kMheTagCount; ++t) bias_[t] -= step * g.bias[t];
  for (const auto& [row, grad] : g.rows) {
    auto& w = rows_[row];
    for (std::size_t t = 0; t < kMheTagCount; ++t) w[t] -= step * grad[t];
  }
}

TagScores TaggerModel::scores(const TokenFeatures& x) const { return forward(*this, active(*this, x)).z; }

TagScores TaggerModel::probabilities(const TokenFeatures& x) const {
  const Forward f = forward(*this, active(*this, x));
  TagScores p;
  for (std::size_t t = 0; t < kMheTagCount; ++t) p[t] = std::exp(f.z[t] - f.lse);
  return p;
}

MheTag TaggerModel::predict_tag(const TokenFeatures& x) const {
  const TagScores z = scores(x);
  return MheTag::from_index(static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin()));
}

void TaggerModel::save(std::ostream& out) const {
  out << kFormatMagic << ' ' << kFormatVersion << '\n';
  out << "mode " << name_of(mode_) << '\n';
  out << "hash_width " << hp_.hash_width << '\n';
  out << "tags " << kMheTagCount << '\n';
  out << "seed " << seed_ << '\n';
  out << "learning_rate " << format_double(hp_.learning_rate) << '\n';
  out << "epochs " << hp_.epochs << '\n';
  out << "batch_sentences " << hp_.batch_sentences << '\n';
  out << "dropout " << format_double(hp_.dropout) << '\n';
  out << "dropout_on_bme " << (hp_.dropout_on_bme ? 1 : 0) << '\n';
  out << "bias";
  for (double b : bias_) out << ' ' << format_double(b);
  out << '\n';
  std::vector<std::uint32_t> keys;
  for (const auto& [row, w] : rows_)
    if (std::any_of(w.begin(), w.end(), [](double v) { return v != 0.0; })) keys.push_back(row);
  std::sort(keys.begin(), keys.end());
  out << "rows " << keys.size() << '\n';
  for (std::uint32_t row : keys) {
    out << row;
    for (double v : rows_.at(row)) out << ' ' << format_double(v);
    out << '\n';
  }
  out << "end\n";
}

TaggerModel TaggerModel::load(std::istream& in) {
  std::size_t line_no = 0;
  std::string line;
  auto fail = [&](const std::string& msg) -> Error {
    return Error(ErrorCode::MalformedInput, "model: " + msg, SourceLocation{"", line_no, std::nullopt});
  };
  auto next = [&]() -> std::istringstream {
    if (!std::getline(in, line)) throw fail("unexpected end of file");
    ++line_no;
    return std::istringstream(line);
  };
  auto number = [&](std::istringstream& s) {
    std::string tok;
    if (!(s >> tok)) throw fail("missing number");
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size() || !std::isfinite(v)) throw fail("bad number '" + tok + "'");
    return v;
  };
  auto keyed = [&](std::string_view key) {
    std::istringstream s = next();
    std::string k, v, extra;
    if (!(s >> k >> v) || k != key || (s >> extra)) throw fail("expected '" + std::string(key) + " <value>'");
    return v;
  };
  auto integer = [&](std::string_view key) {
    const std::string v = keyed(key);
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) throw fail("bad integer '" + v + "'");
    return std::stoull(v);
  };
  auto real = [&](std::string_view key) {
    std::istringstream s(keyed(key));
    return number(s);
  };

  {
    std::istringstream s = next();
    std::string magic;
    int version = 0;
    if (!(s >> magic >> version) || magic != kFormatMagic) throw fail("not a tagger model");
    if (version != kFormatVersion) throw fail("unsupported version " + std::to_string(version));
  }
  const std::string mode_name = keyed("mode");
  Mode mode;
  try {
    mode = parse_mode(mode_name);
  } catch (const Error&) {
    throw fail("unknown mode '" + mode_name + "'");
  }
  Hyperparameters hp;
  hp.hash_width = integer("hash_width");
  if (integer("tags") != kMheTagCount) throw fail("tag count must be 25");
  const std::uint64_t seed = integer("seed");
  hp.learning_rate = real("learning_rate");
  hp.epochs = integer("epochs");
  hp.batch_sentences = integer("batch_sentences");
  hp.dropout = real("dropout");
  hp.dropout_on_bme = integer("dropout_on_bme") != 0;
  std::optional<TaggerModel> model;
  try {
    model.emplace(mode, hp, seed);
  } catch (const Error& e) {
    throw fail(e.what());
  }
  {
    std::istringstream s = next();
    std::string key;
    if (!(s >> key) || key != "bias") throw fail("expected bias");
    for (std::size_t t = 0; t < kMheTagCount; ++t) model->bias_[t] = number(s);
  }
  const std::size_t rows = integer("rows");
  for (std::size_t r = 0; r < rows; ++r) {
    std::istringstream s = next();
    std::uint64_t row = 0;
    if (!(s >> row) || row >= model->width()) throw fail("bad row index");
    if (model->rows_.contains(static_cast<std::uint32_t>(row))) throw fail("duplicate row");
    auto& w = model->rows_[static_cast<std::uint32_t>(row)];
    for (std::size_t t = 0; t < kMheTagCount; ++t) w[t] = number(s);
    std::string extra;
    if (s >> extra) throw fail("trailing data");
  }
  {
    std::istringstream s = next();
    std::string key;
    if (!(s >> key) || key != "end") throw fail("expected end");
  }
  return std::move(*model);
}

ActiveFeatures active(const TaggerModel& model, const TokenFeatures& x) {
  ActiveFeatures out;
  out.reserve(x.indices.size() + kBmeFeatureWidth);
  for (std::uint32_t i : x.indices) {
    if (i >= model.hash_width()) throw Error(ErrorCode::DomainError, "feature index beyond hash width");
    out.emplace_back(i, 1.0);
  }
  if (model.mode() == Mode::WithBme && x.bme)
    for (std::size_t b = 0; b < kBmeFeatureWidth; ++b)
      if (x.bme->test(b)) out.emplace_back(static_cast<std::uint32_t>(model.hash_width() + b), 1.0);
  return out;
}

double Gradient::weight(std::size_t row, std::size_t tag) const {
  const auto it = rows.find(static_cast<std::uint32_t>(row));
  return it == rows.end() ? 0.0 : it->second[tag];
}

LossAndGradient loss_and_grad(const TaggerModel& model, const std::vector<TokenFeatures>& xs,
                              const std::vector<MheTag>& ys) {
  return accumulate(model, xs, ys, nullptr);
}

LossAndGradient loss_and_grad(const TaggerModel& model, const std::vector<TokenFeatures>& xs,
                              const std::vector<MheTag>& ys, std::mt19937_64& dropout_rng) {
  return accumulate(model, xs, ys, &dropout_rng);
}

double mean_loss(const TaggerModel& model, const std::vector<Document>& docs) {
  double loss = 0.0;
  std::size_t tokens = 0;
  for (const Document& doc : docs) {
    const auto xs = features_of(doc, model.mode(), model.hash_width(), false);
    const auto ys = encode_bio(doc, doc.gold_mhe()).tags;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const Forward f = forward(model, active(model, xs[i]));
      loss += f.lse - f.z[ys[i].index()];
    }
    tokens += xs.size();
  }
  if (tokens == 0) throw Error(ErrorCode::DomainError, "no tokens to score");
  return loss / static_cast<double>(tokens);
}

std::vector<Entity> predict(const TaggerModel& model, const Document& doc,
                            std::vector<std::string>* warnings) {
  TagSequence seq{doc.doc_id(), {}};
  for (const TokenFeatures& x : features_of(doc, model.mode(), model.hash_width(), false))
    seq.tags.push_back(model.predict_tag(x));
  DecodeResult decoded = decode_bio(seq, doc, Source::Predicted);
  if (warnings)
    for (std::string& w : decoded.warnings) warnings->push_back(doc.doc_id() + ": " + std::move(w));
  return std::move(decoded.entities);
}

// --- folds ------------------------------------------------------------------

std::size_t FoldPlan::fold_of(const std::string& doc_id) const {
  for (std::size_t f = 0; f < folds.size(); ++f)
    if (std::find(folds[f].begin(), folds[f].end(), doc_id) != folds[f].end()) return f;
  throw Error(ErrorCode::DocIdMismatch, "document '" + doc_id + "' is in no fold");
}

FoldPlan make_fold_plan(std::vector<std::string> doc_ids, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw Error(ErrorCode::DomainError, "fold count must be positive");
  std::sort(doc_ids.begin(), doc_ids.end());
  if (std::adjacent_find(doc_ids.begin(), doc_ids.end()) != doc_ids.end())
    throw Error(ErrorCode::DocIdMismatch, "duplicate document id");
  if (doc_ids.size() < k)
    throw Error(ErrorCode::EmptyFold, std::to_string(doc_ids.size()) + " documents cannot fill " +
                                          std::to_string(k) + " folds");
  std::mt19937_64 rng(seed);
  shuffle(doc_ids, rng);
  FoldPlan plan;
  plan.folds.resize(k);
  for (std::size_t i = 0; i < doc_ids.size(); ++i) plan.folds[i % k].push_back(doc_ids[i]);
  for (auto& f : plan.folds) std::sort(f.begin(), f.end());
  return plan;
}

void check_fold_plan(const FoldPlan& plan, const std::vector<std::string>& doc_ids) {
  if (plan.folds.empty()) throw Error(ErrorCode::EmptyFold, "no folds");
  std::set<std::string> seen;
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    if (plan.folds[f].empty()) throw Error(ErrorCode::EmptyFold, "fold " + std::to_string(f) + " is empty");
    for (const std::string& id : plan.folds[f])
      if (!seen.insert(id).second) throw Error(ErrorCode::DocIdMismatch, "document '" + id + "' is in two folds");
  }
  const std::set<std::string> wanted(doc_ids.begin(), doc_ids.end());
  if (wanted.size() != doc_ids.size()) throw Error(ErrorCode::DocIdMismatch, "duplicate document id");
  std::string missing, extra;
  for (const std::string& id : wanted)
    if (!seen.contains(id)) missing += (missing.empty() ? "" : ", ") + id;
  for (const std::string& id : seen)
    if (!wanted.contains(id)) extra += (extra.empty() ? "" : ", ") + id;
  if (!missing.empty()) throw Error(ErrorCode::DocIdMismatch, "not in any fold: " + missing);
  if (!extra.empty()) throw Error(ErrorCode::DocIdMismatch, "folds name unknown documents: " + extra);
}

// --- training ---------------------------------------------------------------

FitResult fit(const std::vector<Document>& docs, Mode mode, std::uint64_t seed, const Hyperparameters& hp) {
  FitResult result{TaggerModel(mode, hp, seed), {}};
  TaggerModel& model = result.model;

  struct Sentence {
    std::size_t doc;
    TokenRange range;
  };
  std::vector<std::vector<TokenFeatures>> features;
  std::vector<std::vector<MheTag>> tags;
  std::vector<Sentence> sentences;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    features.push_back(extract_features(docs[d], mode, hp.hash_width));
    tags.push_back(encode_bio(docs[d], docs[d].gold_mhe()).tags);
    for (const TokenRange& r : docs[d].sentences())
      if (!r.empty()) sentences.push_back({d, r});
  }
  if (sentences.empty()) throw Error(ErrorCode::EmptyFold, "no training tokens");

  std::mt19937_64 rng(seed);
  std::vector<TokenFeatures> xs;
  std::vector<MheTag> ys;
  for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
    shuffle(sentences, rng);
    double loss = 0.0;
    std::size_t tokens = 0;
    for (std::size_t b = 0; b < sentences.size(); b += hp.batch_sentences) {
      xs.clear();
      ys.clear();
      const std::size_t e = std::min(sentences.size(), b + hp.batch_sentences);
      for (std::size_t s = b; s < e; ++s) {
        const Sentence& sent = sentences[s];
        for (std::size_t i = sent.range.first; i < sent.range.last; ++i) {
          xs.push_back(features[sent.doc][i]);
          ys.push_back(tags[sent.doc][i]);
        }
      }
      const LossAndGradient lg = loss_and_grad(model, xs, ys, rng);
      model.apply(lg.gradient, hp.learning_rate / static_cast<double>(xs.size()));
      loss += lg.loss;
      tokens += xs.size();
    }
    result.epoch_loss.push_back(loss / static_cast<double>(tokens));
  }
  return result;
}

TrainResult train(const std::vector<Document>& corpus, Mode mode, const FoldPlan& plan, std::uint64_t seed,
                  const Hyperparameters& hp) {
  std::vector<std::string> ids;
  for (const Document& d : corpus) ids.push_back(d.doc_id());
  check_fold_plan(plan, ids);
  if (mode == Mode::WithBme)
    for (const Document& d : corpus)
      if (d.gold_bme().empty())
        throw Error(ErrorCode::MissingBme, "document '" + d.doc_id() + "' has no basic entities");

  const std::size_t k = plan.folds.size();
  std::vector<std::size_t> fold_of(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) fold_of[i] = plan.fold_of(corpus[i].doc_id());

  std::vector<std::optional<FitResult>> fits(k);
  std::vector<std::vector<std::string>> fold_warnings(k);
  std::vector<std::vector<std::pair<std::size_t, std::vector<Entity>>>> fold_predictions(k);
  std::vector<std::exception_ptr> errors(k);
  std::vector<std::thread> workers;
  for (std::size_t f = 0; f < k; ++f) {
    workers.emplace_back([&, f] {
      try {
        std::vector<Document> training;
        for (std::size_t i = 0; i < corpus.size(); ++i)
          if (fold_of[i] != f) training.push_back(corpus[i]);
        fits[f] = fit(training, mode, splitmix64(seed + f), hp);
        for (std::size_t i = 0; i < corpus.size(); ++i)
          if (fold_of[i] == f) fold_predictions[f].emplace_back(i, predict(fits[f]->model, corpus[i], &fold_warnings[f]));
      } catch (...) {
        errors[f] = std::current_exception();
      }
    });
  }
  for (std::thread& t : workers) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  TrainResult result;
  std::vector<std::vector<Entity>> predicted(corpus.size());
  for (std::size_t f = 0; f < k; ++f) {
    result.folds.push_back(FoldResult{f, std::move(*fits[f])});
    for (auto& [i, ents] : fold_predictions[f]) predicted[i] = std::move(ents);
    for (std::string& w : fold_warnings[f]) result.warnings.push_back(std::move(w));
  }
  for (std::size_t i = 0; i < corpus.size(); ++i)
    result.predictions.push_back(corpus[i].with_predictions(std::move(predicted[i])));
  return result;
}

}  // namespace histent::tagger
