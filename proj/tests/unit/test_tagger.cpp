#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "generators.hpp"
#include "histent/error.hpp"
#include "histent/matcher.hpp"
#include "histent/tagger.hpp"
#include "synthetic.hpp"

using namespace histent;
using namespace histent::tagger;
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

Hyperparameters small_space() {
  Hyperparameters hp;
  hp.hash_width = 64;
  return hp;
}

MatchCounts score(const std::vector<Document>& docs) {
  MatchCounts total;
  for (const Document& d : docs) total += classify(d).totals();
  return total;
}

std::size_t gold_count(const std::vector<Document>& docs) {
  std::size_t n = 0;
  for (const Document& d : docs) n += d.gold_mhe().size();
  return n;
}

std::string dump(const std::vector<Document>& docs) {
  std::string out;
  for (const Document& d : docs) out += serialize_standoff_json(d) + "\n";
  return out;
}

}  // namespace

TEST_CASE("feature extraction") {
  const Document doc("d", "She is a Nonsmoker, 3x daily.");
  const auto xs = extract_features(doc, Mode::Basic);
  REQUIRE(xs.size() == doc.tokens().size());
  for (const TokenFeatures& x : xs) {
    CHECK_FALSE(x.bme.has_value());
    CHECK(std::is_sorted(x.indices.begin(), x.indices.end()));
    CHECK(std::adjacent_find(x.indices.begin(), x.indices.end()) == x.indices.end());
    for (std::uint32_t i : x.indices) CHECK(i < kDefaultHashWidth);
  }
  CHECK(shape_of("Nonsmoker") == "Xx");
  CHECK(shape_of("3x") == "dx");
  CHECK(shape_of("COVID-19") == "X-d");
  CHECK(shape_of("naïve") == "x");
  CHECK(fnv1a("") == 2166136261u);
  CHECK(fnv1a("a") == 0xe40c292cu);

  CHECK(code_of([&] { extract_features(doc, Mode::WithBme); }) == ErrorCode::MissingBme);
  const Document with("e", "chest pain", {Entity{BmeConcept::Problem, 0, 10, {}, Source::Gold}});
  const auto ys = extract_features(with, Mode::WithBme, 1024);
  REQUIRE(ys[0].bme.has_value());
  CHECK(ys[0].bme->test(0));
  CHECK(ys[1].bme->test(1));
  CHECK(parse_mode("with_bme") == Mode::WithBme);
  CHECK(code_of([] { parse_mode("crf"); }) == ErrorCode::MalformedInput);
}

TEST_CASE("zero weights give a uniform softmax") {
  const TaggerModel model(Mode::Basic, small_space());
  const TokenFeatures x{{1, 7, 30}, std::nullopt};
  const LossAndGradient lg = loss_and_grad(model, {x}, {MheTag::begin(Concept::CC)});
  CHECK(std::fabs(lg.loss - std::log(25.0)) <= 1e-12);
  for (double p : model.probabilities(x)) CHECK(std::fabs(p - 1.0 / 25.0) <= 1e-15);
  CHECK(model.predict_tag(x) == MheTag::outside());

  const Document doc("d", "CHIEF COMPLAINT: Ear pain.");
  CHECK(predict(model, doc).empty());
}

TEST_CASE("analytic gradient matches central differences") {
  std::mt19937_64 rng(97);
  std::normal_distribution<double> noise(0.0, 0.5);
  for (Mode mode : {Mode::Basic, Mode::WithBme}) {
    TaggerModel model(mode, small_space());
    std::vector<TokenFeatures> xs;
    std::vector<MheTag> ys;
    for (int i = 0; i < 5; ++i) {
      TokenFeatures x;
      for (int k = 0; k < 4; ++k) x.indices.push_back(static_cast<std::uint32_t>(uniform(rng, 0, 63)));
      std::sort(x.indices.begin(), x.indices.end());
      x.indices.erase(std::unique(x.indices.begin(), x.indices.end()), x.indices.end());
      if (mode == Mode::WithBme) x.bme = FeatureVector(uniform(rng, 0, (1u << kBmeFeatureWidth) - 1));
      xs.push_back(x);
      ys.push_back(MheTag::from_index(uniform(rng, 0, kMheTagCount - 1)));
    }
    for (std::size_t r = 0; r < model.width(); ++r)
      for (std::size_t t = 0; t < kMheTagCount; ++t) model.set_weight(r, t, noise(rng));
    for (std::size_t t = 0; t < kMheTagCount; ++t) model.set_bias(t, noise(rng));

    const LossAndGradient lg = loss_and_grad(model, xs, ys);
    const double h = 1e-5;
    double worst = 0.0;
    auto check = [&](double analytic, const std::function<void(double)>& shift) {
      shift(h);
      const double up = loss_and_grad(model, xs, ys).loss;
      shift(-2 * h);
      const double down = loss_and_grad(model, xs, ys).loss;
      shift(h);
      const double numeric = (up - down) / (2 * h);
      const double scale = std::max({std::fabs(analytic), std::fabs(numeric), 1e-6});
      worst = std::max(worst, std::fabs(analytic - numeric) / scale);
    };
    for (std::size_t r = 0; r < model.width(); ++r)
      for (std::size_t t = 0; t < kMheTagCount; ++t)
        check(lg.gradient.weight(r, t),
              [&](double d) { model.set_weight(r, t, model.weight(r, t) + d); });
    for (std::size_t t = 0; t < kMheTagCount; ++t)
      check(lg.gradient.bias[t], [&](double d) { model.set_bias(t, model.bias(t) + d); });
    INFO(name_of(mode));
    CHECK(worst < 1e-4);

    std::vector<TokenFeatures> xs2 = xs;
    std::vector<MheTag> ys2 = ys;
    xs2.insert(xs2.end(), xs.begin(), xs.end());
    ys2.insert(ys2.end(), ys.begin(), ys.end());
    CHECK(loss_and_grad(model, xs2, ys2).loss == doctest::Approx(2.0 * lg.loss).epsilon(1e-13));
    for (const TokenFeatures& x : xs) {
      double sum = 0.0;
      for (double p : model.probabilities(x)) sum += p;
      CHECK(std::fabs(sum - 1.0) <= 1e-9);
    }
  }
  const TaggerModel model(Mode::Basic, small_space());
  CHECK(code_of([&] { loss_and_grad(model, {}, {}); }) == ErrorCode::DomainError);
  CHECK(code_of([&] { loss_and_grad(model, {TokenFeatures{}}, {}); }) == ErrorCode::DomainError);
  TaggerModel huge(Mode::Basic, small_space());
  huge.set_weight(0, 0, 1e308);
  huge.set_weight(1, 0, 1e308);
  CHECK(code_of([&] { loss_and_grad(huge, {TokenFeatures{{0, 1}, std::nullopt}}, {MheTag::outside()}); }) ==
        ErrorCode::NonFiniteLoss);
}

TEST_CASE("dropout keeps the basic entity tail by default") {
  TaggerModel model(Mode::WithBme, small_space());
  TokenFeatures x{{3, 9}, FeatureVector().set(4)};
  std::mt19937_64 rng(5);
  std::size_t tail_seen = 0;
  for (int k = 0; k < 200; ++k) {
    const auto g = loss_and_grad(model, {x}, {MheTag::outside()}, rng).gradient;
    tail_seen += g.rows.count(64 + 4);
    for (const auto& [row, grad] : g.rows)
      if (row < 64) CHECK(grad[1] == doctest::Approx(1.0 / 25.0 / 0.9));
  }
  CHECK(tail_seen == 200);
}

TEST_CASE("full batch descent lowers the loss") {
  const auto docs = separable_corpus(6, 3);
  Hyperparameters hp = small_space();
  hp.hash_width = 4096;
  TaggerModel model(Mode::Basic, hp);
  std::vector<TokenFeatures> xs;
  std::vector<MheTag> ys;
  for (const Document& d : docs) {
    const auto f = extract_features(d, Mode::Basic, hp.hash_width);
    const auto t = encode_bio(d, d.gold_mhe()).tags;
    xs.insert(xs.end(), f.begin(), f.end());
    ys.insert(ys.end(), t.begin(), t.end());
  }
  double previous = loss_and_grad(model, xs, ys).loss;
  for (int step = 0; step < 30; ++step) {
    const auto lg = loss_and_grad(model, xs, ys);
    model.apply(lg.gradient, 0.1 / static_cast<double>(xs.size()));
    const double now = loss_and_grad(model, xs, ys).loss;
    REQUIRE(now < previous);
    previous = now;
  }
}

TEST_CASE("model text format round trips") {
  const auto docs = separable_corpus(8, 11);
  Hyperparameters hp;
  hp.epochs = 3;
  const FitResult fitted = fit(docs, Mode::Basic, 42, hp);
  std::stringstream buf;
  fitted.model.save(buf);
  const TaggerModel back = TaggerModel::load(buf);
  CHECK(back == fitted.model);
  std::stringstream again;
  back.save(again);
  CHECK(again.str() == buf.str());

  std::string text = buf.str();
  auto broken = [](const std::string& s) {
    std::istringstream in(s);
    try {
      TaggerModel::load(in);
    } catch (const Error& e) {
      return std::pair(e.code(), e.where().line.value_or(0));
    }
    return std::pair(ErrorCode::IoError, std::size_t{0});
  };
  CHECK(broken("hello 1\n") == std::pair(ErrorCode::MalformedInput, std::size_t{1}));
  CHECK(broken(text.substr(0, text.size() / 2)).first == ErrorCode::MalformedInput);
  std::string bad_mode = text;
  bad_mode.replace(bad_mode.find("basic"), 5, "fancy");
  CHECK(broken(bad_mode) == std::pair(ErrorCode::MalformedInput, std::size_t{2}));
  std::string bad_number = text;
  bad_number.replace(bad_number.find("bias ") + 5, 1, "x");
  CHECK(broken(bad_number) == std::pair(ErrorCode::MalformedInput, std::size_t{11}));
}

TEST_CASE("fold plans") {
  std::vector<std::string> ids;
  for (int i = 0; i < 23; ++i) ids.push_back("doc" + std::to_string(i));
  const FoldPlan plan = make_fold_plan(ids, 5, 7);
  REQUIRE(plan.folds.size() == 5);
  std::set<std::string> all;
  std::size_t lo = ids.size(), hi = 0;
  for (const auto& f : plan.folds) {
    lo = std::min(lo, f.size());
    hi = std::max(hi, f.size());
    all.insert(f.begin(), f.end());
  }
  CHECK(all.size() == ids.size());
  CHECK(hi - lo <= 1);
  check_fold_plan(plan, ids);
  CHECK(make_fold_plan(ids, 5, 7).folds == plan.folds);
  CHECK(make_fold_plan(ids, 5, 8).folds != plan.folds);

  CHECK(code_of([] { make_fold_plan({"a", "b"}, 5, 1); }) == ErrorCode::EmptyFold);
  CHECK(code_of([] { check_fold_plan(FoldPlan{{{"a"}, {}}}, {"a"}); }) == ErrorCode::EmptyFold);
  CHECK(code_of([] { check_fold_plan(FoldPlan{{{"a"}, {"a"}}}, {"a"}); }) == ErrorCode::DocIdMismatch);
  CHECK(code_of([] { check_fold_plan(FoldPlan{{{"a"}, {"b"}}}, {"a", "b", "c"}); }) == ErrorCode::DocIdMismatch);
  CHECK(code_of([] { check_fold_plan(FoldPlan{{{"a"}, {"z"}}}, {"a"}); }) == ErrorCode::DocIdMismatch);
  CHECK(code_of([&] { plan.fold_of("nope"); }) == ErrorCode::DocIdMismatch);
}

TEST_CASE("cross-validated training on the separable corpus") {
  const auto corpus = separable_corpus(40, 2024);
  std::vector<std::string> ids;
  for (const Document& d : corpus) ids.push_back(d.doc_id());
  const FoldPlan plan = make_fold_plan(ids, 5, 1);
  const TrainResult run = train(corpus, Mode::Basic, plan, 1234);

  REQUIRE(run.folds.size() == 5);
  for (const FoldResult& f : run.folds) {
    REQUIRE(f.fit.epoch_loss.size() == 40);
    CHECK(f.fit.epoch_loss.back() <= f.fit.epoch_loss.front());
  }
  REQUIRE(run.predictions.size() == corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    CHECK(run.predictions[i].doc_id() == corpus[i].doc_id());
    CHECK(run.predictions[i].gold() == corpus[i].gold());
  }

  const MatchCounts total = score(run.predictions);
  const double em_rate = static_cast<double>(total.em) / static_cast<double>(gold_count(corpus));
  CHECK(em_rate >= 0.95);
  std::size_t social_gold = 0;
  std::size_t social_em = 0;
  for (const Document& d : run.predictions) {
    for (const auto& [key, c] : classify(d).cells)
      if (key.second == Concept::SocialHistory) social_em += c.em;
    for (const Entity& e : d.gold_mhe()) social_gold += e.mhe() == Concept::SocialHistory;
  }
  CHECK(static_cast<double>(social_em) >= 0.95 * static_cast<double>(social_gold));

  // a model recovers entities of a document it was trained on
  const FitResult whole = fit(corpus, Mode::Basic, 9);
  const Document& first = corpus.front();
  CHECK(classify(first.with_predictions(predict(whole.model, first))).totals().em == first.gold_mhe().size());
}

TEST_CASE("training is deterministic under a fixed seed") {
  const auto corpus = separable_corpus(15, 77);
  std::vector<std::string> ids;
  for (const Document& d : corpus) ids.push_back(d.doc_id());
  const FoldPlan plan = make_fold_plan(ids, 5, 3);
  Hyperparameters hp;
  hp.epochs = 5;
  const TrainResult a = train(corpus, Mode::Basic, plan, 99, hp);
  const TrainResult b = train(corpus, Mode::Basic, plan, 99, hp);
  CHECK(dump(a.predictions) == dump(b.predictions));
  for (std::size_t f = 0; f < a.folds.size(); ++f) {
    CHECK(a.folds[f].fit.model == b.folds[f].fit.model);
    CHECK(a.folds[f].fit.epoch_loss == b.folds[f].fit.epoch_loss);
  }
  const TrainResult c = train(corpus, Mode::Basic, plan, 100, hp);
  CHECK_FALSE(c.folds[0].fit.model == a.folds[0].fit.model);
}

TEST_CASE("basic entity bits help when they predict the tags") {
  const auto corpus = bme_predictive_corpus(30, 5);
  std::vector<std::string> ids;
  for (const Document& d : corpus) ids.push_back(d.doc_id());
  const FoldPlan plan = make_fold_plan(ids, 5, 5);
  const TrainResult basic = train(corpus, Mode::Basic, plan, 8);
  const TrainResult with = train(corpus, Mode::WithBme, plan, 8);
  const std::size_t gold = gold_count(corpus);
  const MatchCounts b = score(basic.predictions);
  const MatchCounts w = score(with.predictions);
  INFO("basic error " << b.error() << ", with_bme error " << w.error() << ", gold " << gold);
  CHECK(w.error() < b.error());

  const double basic_loss = mean_loss(fit(corpus, Mode::Basic, 8).model, corpus);
  const double with_loss = mean_loss(fit(corpus, Mode::WithBme, 8).model, corpus);
  CHECK(with_loss < basic_loss);

  std::vector<Document> stripped;
  for (const Document& d : corpus) stripped.push_back(d.with_gold(d.gold_mhe()));
  CHECK(code_of([&] { train(stripped, Mode::WithBme, plan, 8); }) == ErrorCode::MissingBme);
}
