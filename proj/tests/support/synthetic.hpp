#ifndef HISTENT_TESTS_SYNTHETIC_HPP
#define HISTENT_TESTS_SYNTHETIC_HPP

#include <cstddef>
#include <cstdint>
#include <vector>

#include "histent/corpus.hpp"

namespace histent::testing {

/// Notes built from templates in which every history entity word belongs to
/// exactly one concept, e.g. "nonsmoker" is always SocialHistory.
std::vector<Document> separable_corpus(std::size_t docs, std::uint64_t seed);

/// Notes whose words are drawn from one shared pool. A word is a PastHistory
/// entity exactly when a Problem span covers it and an HPI duration exactly
/// when a Temporal span does, so only the basic entity bits predict tags.
std::vector<Document> bme_predictive_corpus(std::size_t docs, std::uint64_t seed);

}  // namespace histent::testing

#endif  // HISTENT_TESTS_SYNTHETIC_HPP
