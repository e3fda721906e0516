#include "oracle_matcher.hpp"

#include <algorithm>

#include "histent/error.hpp"

namespace histent::testing {

MatchReport brute_force_oracle(const std::vector<Entity>& gold, const std::vector<Entity>& pred) {
  if (gold.size() > 8 || pred.size() > 8)
    throw Error(ErrorCode::InstanceTooLarge, "oracle takes at most 8 entities per side");
  for (const auto* list : {&gold, &pred})
    for (const Entity& e : *list)
      if (e.end > 64) throw Error(ErrorCode::InstanceTooLarge, "oracle takes documents up to 64");

  MatchReport report;
  std::vector<Entity> kept;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!pred[i].is_mhe()) continue;
    bool repeat = false;
    for (std::size_t j = 0; j < i; ++j)
      if (pred[j].is_mhe() && pred[j].mhe() == pred[i].mhe() && pred[j].start == pred[i].start &&
          pred[j].end == pred[i].end)
        repeat = true;
    if (repeat) {
      ++report.duplicate_predictions;
    } else {
      kept.push_back(pred[i]);
    }
  }

  for (const Entity& g : gold) {
    if (!g.is_mhe()) continue;
    int overlapping = 0;
    int exact = 0;
    int same_concept = 0;
    int other_concept = 0;
    for (const Entity& p : kept) {
      bool shared_char = false;
      for (std::size_t x = g.start; x < g.end; ++x)
        if (x >= p.start && x < p.end) shared_char = true;
      if (!shared_char) continue;
      ++overlapping;
      if (p.mhe() == g.mhe()) {
        ++same_concept;
        if (p.start == g.start && p.end == g.end) ++exact;
      } else {
        ++other_concept;
      }
    }
    GoldOutcome outcome{g, std::nullopt, false};
    if (overlapping == 0) outcome.primary = MatchCategory::UnderDetection;
    if (exact > 0) outcome.primary = MatchCategory::ExactMatch;
    if (exact == 0 && same_concept > 0) outcome.primary = MatchCategory::RelaxedMatch;
    if (exact == 0 && other_concept > 0) outcome.mismatch = true;
    MatchCounts& cell = report.cells[{g.doc_id, g.mhe()}];
    if (outcome.primary) cell.add(*outcome.primary);
    if (outcome.mismatch) cell.add(MatchCategory::Mismatch);
    report.gold_outcomes.push_back(outcome);
  }

  for (const Entity& p : kept) {
    bool touched = false;
    for (const Entity& g : gold) {
      if (!g.is_mhe()) continue;
      for (std::size_t x = p.start; x < p.end; ++x)
        if (x >= g.start && x < g.end) touched = true;
    }
    if (touched) continue;
    report.cells[{p.doc_id, p.mhe()}].add(MatchCategory::OverDetection);
    report.over_detections.push_back(p);
  }
  return report;
}

Instance random_instance(std::mt19937_64& rng, std::size_t length, std::size_t max_gold,
                         std::size_t max_pred) {
  static constexpr Concept kPool[] = {Concept::CC, Concept::HpiLocation, Concept::PastHistory};
  auto uniform = [&rng](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  Instance inst;
  const std::size_t n_gold = uniform(0, max_gold);
  for (std::size_t k = 0; k < n_gold * 4 && inst.gold.size() < n_gold; ++k) {
    const std::size_t start = uniform(0, length - 1);
    const std::size_t end = uniform(start + 1, std::min(length, start + 16));
    Entity e{kPool[uniform(0, 2)], start, end, "doc", Source::Gold};
    bool clash = false;
    for (const Entity& g : inst.gold) clash = clash || overlaps(g, e);
    if (!clash) inst.gold.push_back(e);
  }
  const std::size_t n_pred = uniform(0, max_pred);
  for (std::size_t k = 0; k < n_pred; ++k) {
    if (!inst.gold.empty() && uniform(0, 3) == 0) {
      Entity copy = inst.gold[uniform(0, inst.gold.size() - 1)];
      copy.source = Source::Predicted;
      if (uniform(0, 1) == 0) copy.label = kPool[uniform(0, 2)];
      inst.pred.push_back(copy);
      continue;
    }
    const std::size_t start = uniform(0, length - 1);
    const std::size_t end = uniform(start + 1, std::min(length, start + 16));
    inst.pred.push_back(Entity{kPool[uniform(0, 2)], start, end, "doc", Source::Predicted});
  }
  return inst;
}

namespace {

template <typename T, typename Less>
std::vector<T> sorted(std::vector<T> v, Less less) {
  std::sort(v.begin(), v.end(), less);
  return v;
}

}  // namespace

bool same_report(const MatchReport& a, const MatchReport& b) {
  auto outcome_less = [](const GoldOutcome& x, const GoldOutcome& y) {
    return canonical_less(x.gold, y.gold);
  };
  return a.cells == b.cells && a.duplicate_predictions == b.duplicate_predictions &&
         sorted(a.gold_outcomes, outcome_less) == sorted(b.gold_outcomes, outcome_less) &&
         sorted(a.over_detections, canonical_less) == sorted(b.over_detections, canonical_less);
}

}  // namespace histent::testing
