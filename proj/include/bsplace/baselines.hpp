#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "bsplace/metrics.hpp"
#include "bsplace/rng.hpp"

namespace bsplace {

enum class SearchMetric { kCoverage, kCapacity };

SearchMetric parse_search_metric(std::string_view name);
std::string_view to_string(SearchMetric metric);
double metric_value(const NetworkMetrics& m, SearchMetric metric);

struct SearchBudget {
  std::uint64_t max_evaluations = 50;
  SearchMetric metric = SearchMetric::kCoverage;
  std::uint64_t seed = 0;
};

struct SearchResult {
  std::vector<Coord> placements;
  NetworkMetrics metrics;
  std::uint64_t evaluations = 0;
};

// n distinct cells of B drawn uniformly without replacement, in draw order.
std::vector<Coord> heuristic_place(const SiteMap& map, int n, Xoshiro256& rng);

// Every cell of B, best by `metric`, ties to the lowest flat index.
// `threads` > 1 splits the sweep; the reduction is order independent.
SearchResult exhaustive_single(const SiteMap& map, const RadioConfig& radio, SearchMetric metric,
                               int threads = 1);

// All n-subsets of B when C(|B|, n) fits the budget, otherwise
// budget.max_evaluations distinct subsets sampled uniformly (seeded).
// Ties go to the lexicographically smallest sorted subset.
SearchResult exhaustive_multi(const SiteMap& map, const RadioConfig& radio, int n,
                              const SearchBudget& budget);

// n rounds, each sweeping all unused cells given the cells already fixed.
SearchResult greedy_sequential(const SiteMap& map, const RadioConfig& radio, int n,
                               SearchMetric metric);

// C(n, k), saturating at UINT64_MAX.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k);

}  // namespace bsplace
