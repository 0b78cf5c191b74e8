#include "bsplace/baselines.hpp"

#include <algorithm>
#include <limits>
#include <memory>
#include <set>
#include <thread>

#include "bsplace/error.hpp"

namespace bsplace {

SearchMetric parse_search_metric(std::string_view name) {
  if (name == "coverage") return SearchMetric::kCoverage;
  if (name == "capacity") return SearchMetric::kCapacity;
  throw ConfigError("unknown search metric '" + std::string(name) + "'");
}

std::string_view to_string(SearchMetric metric) {
  return metric == SearchMetric::kCoverage ? "coverage" : "capacity";
}

double metric_value(const NetworkMetrics& m, SearchMetric metric) {
  return metric == SearchMetric::kCoverage ? m.coverage : m.capacity;
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint64_t t = 1; t <= k; ++t) {
    // r * (n - k + t) / t stays integral at every step.
    const std::uint64_t f = n - k + t;
    if (r > std::numeric_limits<std::uint64_t>::max() / f)
      return std::numeric_limits<std::uint64_t>::max();
    r = r * f / t;
  }
  return r;
}

std::vector<Coord> heuristic_place(const SiteMap& map, int n, Xoshiro256& rng) {
  if (n < 0 || n > map.deployable_count())
    throw Error("cannot place " + std::to_string(n) + " base stations in " +
                std::to_string(map.deployable_count()) + " deployable cells");
  std::vector<Coord> pool = map.deployable_cells();
  for (int t = 0; t < n; ++t) {
    const auto k = t + static_cast<int>(rng.uniform_index(pool.size() - t));
    std::swap(pool[t], pool[k]);
  }
  pool.resize(static_cast<std::size_t>(n));
  return pool;
}

namespace {

bool better(double value, const std::vector<Coord>& cand, double best_value,
            const std::vector<Coord>& best) {
  if (best.empty()) return true;
  if (value != best_value) return value > best_value;
  return cand < best;
}

struct Candidate {
  double value = -1.0;
  std::vector<Coord> set;  // sorted
  NetworkMetrics metrics;
};

NetworkMetrics measure_set(const SiteMap& map, const RadioConfig& radio,
                           const std::vector<const PathlossMap*>& maps) {
  return measure(aggregate(std::span<const PathlossMap* const>(maps)), radio, map);
}

}  // namespace

SearchResult exhaustive_single(const SiteMap& map, const RadioConfig& radio, SearchMetric metric,
                               int threads) {
  const auto& cells = map.deployable_cells();
  threads = std::clamp(threads, 1, static_cast<int>(cells.size()));
  std::vector<Candidate> best(static_cast<std::size_t>(threads));

  auto sweep = [&](int worker) {
    Candidate& mine = best[worker];
    for (std::size_t k = worker; k < cells.size(); k += threads) {
      const PathlossMap pm = predict_pathloss(map, radio, cells[k]);
      const PathlossMap* one[] = {&pm};
      const NetworkMetrics m = measure(aggregate(std::span<const PathlossMap* const>(one)),
                                       radio, map);
      const double v = metric_value(m, metric);
      std::vector<Coord> set{cells[k]};
      if (better(v, set, mine.value, mine.set)) mine = {v, std::move(set), m};
    }
  };
  if (threads == 1) {
    sweep(0);
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < threads; ++w) pool.emplace_back(sweep, w);
  }

  Candidate winner;
  for (auto& c : best)
    if (!c.set.empty() && better(c.value, c.set, winner.value, winner.set)) winner = c;
  return {winner.set, winner.metrics, cells.size()};
}

SearchResult exhaustive_multi(const SiteMap& map, const RadioConfig& radio, int n,
                              const SearchBudget& budget) {
  if (n < 2) throw Error("exhaustive_multi needs n >= 2");
  if (n > map.deployable_count())
    throw Error("cannot place " + std::to_string(n) + " base stations in " +
                std::to_string(map.deployable_count()) + " deployable cells");
  if (budget.max_evaluations < 1) throw Error("search budget must be at least 1");

  const auto& cells = map.deployable_cells();
  std::vector<std::unique_ptr<PathlossMap>> memo(cells.size());
  auto pathloss = [&](int k) -> const PathlossMap* {
    if (!memo[k]) memo[k] = std::make_unique<PathlossMap>(predict_pathloss(map, radio, cells[k]));
    return memo[k].get();
  };

  Candidate winner;
  std::uint64_t evaluations = 0;
  auto consider = [&](const std::vector<int>& subset) {
    std::vector<const PathlossMap*> maps;
    std::vector<Coord> set;
    for (int k : subset) {
      maps.push_back(pathloss(k));
      set.push_back(cells[k]);
    }
    const NetworkMetrics m = measure_set(map, radio, maps);
    const double v = metric_value(m, budget.metric);
    ++evaluations;
    if (better(v, set, winner.value, winner.set)) winner = {v, std::move(set), m};
  };

  const std::uint64_t total = binomial(cells.size(), static_cast<std::uint64_t>(n));
  if (total <= budget.max_evaluations) {
    std::vector<int> subset(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) subset[t] = t;
    const int m = static_cast<int>(cells.size());
    while (true) {
      consider(subset);
      int t = n - 1;
      while (t >= 0 && subset[t] == m - n + t) --t;
      if (t < 0) break;
      ++subset[t];
      for (int u = t + 1; u < n; ++u) subset[u] = subset[u - 1] + 1;
    }
  } else {
    Xoshiro256 rng(budget.seed);
    std::set<std::vector<int>> seen;
    std::vector<int> pool(cells.size());
    for (std::size_t k = 0; k < pool.size(); ++k) pool[k] = static_cast<int>(k);
    while (seen.size() < budget.max_evaluations) {
      for (int t = 0; t < n; ++t) {
        const auto k = t + static_cast<int>(rng.uniform_index(pool.size() - t));
        std::swap(pool[t], pool[k]);
      }
      std::vector<int> subset(pool.begin(), pool.begin() + n);
      std::sort(subset.begin(), subset.end());
      if (seen.insert(subset).second) consider(subset);
    }
  }
  return {winner.set, winner.metrics, evaluations};
}

SearchResult greedy_sequential(const SiteMap& map, const RadioConfig& radio, int n,
                               SearchMetric metric) {
  if (n < 1) throw Error("greedy_sequential needs n >= 1");
  if (n > map.deployable_count())
    throw Error("cannot place " + std::to_string(n) + " base stations in " +
                std::to_string(map.deployable_count()) + " deployable cells");

  const auto& cells = map.deployable_cells();
  std::vector<std::unique_ptr<PathlossMap>> fixed_maps;
  std::vector<Coord> fixed;
  std::vector<char> used(cells.size(), 0);
  NetworkMetrics fixed_metrics;
  std::uint64_t evaluations = 0;

  for (int round = 0; round < n; ++round) {
    double best_v = -1.0;
    int best_k = -1;
    std::unique_ptr<PathlossMap> best_map;
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (used[k]) continue;
      auto pm = std::make_unique<PathlossMap>(predict_pathloss(map, radio, cells[k]));
      std::vector<const PathlossMap*> maps{pm.get()};
      for (const auto& f : fixed_maps) maps.push_back(f.get());
      const NetworkMetrics m = measure_set(map, radio, maps);
      ++evaluations;
      const double v = metric_value(m, metric);
      // Cells are visited in flat order, so strict > keeps the lowest index.
      if (best_k < 0 || v > best_v) {
        best_v = v;
        best_k = static_cast<int>(k);
        best_map = std::move(pm);
        fixed_metrics = m;
      }
    }
    used[best_k] = 1;
    fixed.push_back(cells[best_k]);
    fixed_maps.push_back(std::move(best_map));
  }
  return {fixed, fixed_metrics, evaluations};
}

}  // namespace bsplace
