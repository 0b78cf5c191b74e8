// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance            all criteria
//   acceptance 5 6 7      a subset
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bsplace/commands.hpp"
#include "csv_compare.hpp"
#include "oracles.hpp"
#include "ppo_checks.hpp"

#ifndef BSPLACE_CLI
#error "BSPLACE_CLI must name the command-line executable"
#endif

using namespace bsplace;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double cpu_seconds() { return static_cast<double>(std::clock()) / CLOCKS_PER_SEC; }

double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

// ------------------------------------------------------------ shared runs

// 64x64 held-out maps with the trained single-BS agent.
struct SingleRun {
  ExperimentConfig config;
  MapList maps;
  PolicyNetwork net;
  double train_cpu_s = 0.0;
  double eval_s = 0.0;
  std::vector<RunRecord> heuristic, agent, best_v, best_c;
};

// 16x16 maps with the trained two-BS agent and full joint enumeration.
struct PairRun {
  MapList maps;
  double train_cpu_s = 0.0;
  std::vector<RunRecord> heuristic, agent;
  std::vector<NetworkMetrics> joint_v, joint_c;
};

CommandContext quiet(const ExperimentConfig& cfg) {
  CommandContext ctx;
  ctx.config = cfg;
  ctx.deterministic = true;
  return ctx;
}

const SingleRun& single_run() {
  static std::optional<SingleRun> run;
  if (run) return *run;
  SingleRun r;
  r.config = ExperimentConfig::parse(
      "train_count = 1100\n"
      "test_count = 20\n"
      "reward_preset = coverage_capacity\n"
      "learning_rate = 3e-4\n"
      "total_env_steps = 102400\n"
      "seed = 1\n");
  std::fprintf(stderr, "[single-BS] training on %d maps of 64x64\n", r.config.corpus.train_count);
  const MapList train_maps = build_train_split(r.config.corpus);
  r.maps = build_test_split(r.config.corpus);
  const double c0 = cpu_seconds();
  const TrainOutput t = train_on(quiet(r.config), train_maps, r.maps);
  r.train_cpu_s = cpu_seconds() - c0;
  r.net = t.result.network;

  const RadioConfig radio = r.config.resolved_radio();
  const auto w0 = std::chrono::steady_clock::now();
  for (std::size_t m = 0; m < r.maps.size(); ++m)
    r.agent.push_back(run_scheme("autobs", r.maps[m], 1, radio, r.config, &r.net, 0, nullptr));
  r.eval_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - w0).count();

  std::fprintf(stderr, "[single-BS] baselines on %zu held-out maps\n", r.maps.size());
  for (std::size_t m = 0; m < r.maps.size(); ++m) {
    const std::uint64_t stream = derive_seed(r.config.seed, m);
    r.heuristic.push_back(run_scheme("heuristic", r.maps[m], 1, radio, r.config, nullptr, stream, nullptr));
    r.best_v.push_back(run_scheme("exhaustive_v", r.maps[m], 1, radio, r.config, nullptr, stream, nullptr));
    r.best_c.push_back(run_scheme("exhaustive_c", r.maps[m], 1, radio, r.config, nullptr, stream, nullptr));
  }
  run = std::move(r);
  return *run;
}

const PairRun& pair_run() {
  static std::optional<PairRun> run;
  if (run) return *run;
  PairRun r;
  const ExperimentConfig cfg = ExperimentConfig::parse(
      "map_width = 16\nmap_height = 16\ncell_size = 32\nbuilding_min = 3\nbuilding_max = 6\n"
      "train_count = 1100\ntest_count = 20\nhorizon = 2\n"
      "reward_preset = coverage_capacity\nlearning_rate = 3e-4\ntotal_env_steps = 61440\nseed = 0\n");
  std::fprintf(stderr, "[two-BS] training on %d maps of 16x16\n", cfg.corpus.train_count);
  const MapList train_maps = build_train_split(cfg.corpus);
  r.maps = build_test_split(cfg.corpus);
  const double c0 = cpu_seconds();
  const TrainOutput t = train_on(quiet(cfg), train_maps, r.maps);
  r.train_cpu_s = cpu_seconds() - c0;

  const RadioConfig radio = cfg.resolved_radio();
  std::fprintf(stderr, "[two-BS] joint enumeration on %zu maps\n", r.maps.size());
  for (std::size_t m = 0; m < r.maps.size(); ++m) {
    r.agent.push_back(run_scheme("autobs", r.maps[m], 2, radio, cfg, &t.result.network, 0, nullptr));
    r.heuristic.push_back(
        run_scheme("heuristic", r.maps[m], 2, radio, cfg, nullptr, derive_seed(cfg.seed, m), nullptr));
    SearchBudget all;
    all.max_evaluations = binomial(static_cast<std::uint64_t>(r.maps[m]->deployable_count()), 2);
    all.metric = SearchMetric::kCoverage;
    r.joint_v.push_back(exhaustive_multi(*r.maps[m], radio, 2, all).metrics);
    all.metric = SearchMetric::kCapacity;
    r.joint_c.push_back(exhaustive_multi(*r.maps[m], radio, 2, all).metrics);
  }
  run = std::move(r);
  return *run;
}

template <class F>
double median_of(std::size_t n, F value) {
  std::vector<double> v;
  for (std::size_t k = 0; k < n; ++k) v.push_back(value(k));
  return median(v);
}

// -------------------------------------------------------------- criteria

Outcome criterion_1() {
  const SingleRun& r = single_run();
  const std::size_t n = r.maps.size();
  const double cov = median_of(n, [&](std::size_t k) { return r.agent[k].metrics.coverage / r.best_v[k].metrics.coverage; });
  const double cap = median_of(n, [&](std::size_t k) { return r.agent[k].metrics.capacity / r.best_c[k].metrics.capacity; });
  const bool pass = cov >= 0.90 && cap >= 0.90 && r.train_cpu_s <= 30 * 60 && r.eval_s <= 60;
  return {pass, fmt("%zu maps 64x64: median coverage ratio %.4f, median capacity ratio %.4f (need >= 0.90); "
                    "training %.0f CPU-s (<= 1800), evaluation %.3f s (<= 60)",
                    n, cov, cap, r.train_cpu_s, r.eval_s)};
}

Outcome criterion_2() {
  const PairRun& r = pair_run();
  const std::size_t n = r.maps.size();
  const double cap = median_of(n, [&](std::size_t k) { return r.agent[k].metrics.capacity / r.joint_c[k].capacity; });
  return {cap >= 0.85, fmt("%zu maps 16x16, T=2: median capacity ratio to the joint optimum %.4f (need >= 0.85); "
                           "training %.0f CPU-s", n, cap, r.train_cpu_s)};
}

Outcome criterion_3() {
  const SingleRun& s = single_run();
  const PairRun& p = pair_run();
  const std::size_t ns = s.maps.size(), np = p.maps.size();
  struct Row {
    const char* name;
    double h, a, e;
  };
  const Row rows[] = {
      {"1 BS coverage", median_of(ns, [&](auto k) { return s.heuristic[k].metrics.coverage; }),
       median_of(ns, [&](auto k) { return s.agent[k].metrics.coverage; }),
       median_of(ns, [&](auto k) { return s.best_v[k].metrics.coverage; })},
      {"1 BS capacity", median_of(ns, [&](auto k) { return s.heuristic[k].metrics.capacity; }),
       median_of(ns, [&](auto k) { return s.agent[k].metrics.capacity; }),
       median_of(ns, [&](auto k) { return s.best_c[k].metrics.capacity; })},
      {"2 BS coverage", median_of(np, [&](auto k) { return p.heuristic[k].metrics.coverage; }),
       median_of(np, [&](auto k) { return p.agent[k].metrics.coverage; }),
       median_of(np, [&](auto k) { return p.joint_v[k].coverage; })},
      {"2 BS capacity", median_of(np, [&](auto k) { return p.heuristic[k].metrics.capacity; }),
       median_of(np, [&](auto k) { return p.agent[k].metrics.capacity; }),
       median_of(np, [&](auto k) { return p.joint_c[k].capacity; })},
  };
  bool pass = true;
  std::string detail;
  for (const Row& r : rows) {
    pass = pass && r.h < r.a && r.a <= r.e;
    detail += fmt("%s%s heuristic %.4f < agent %.4f <= exhaustive %.4f", detail.empty() ? "" : "; ", r.name,
                  r.h, r.a, r.e);
  }
  return {pass, detail};
}

Outcome criterion_4() {
  const SingleRun& s = single_run();
  const MapList maps(s.maps.begin(), s.maps.begin() + 10);
  const std::vector<RunRecord> rows = run_schemes(quiet(s.config), maps, {"autobs", "exhaustive_v"}, {1}, &s.net);
  std::vector<double> agent, sweep;
  for (const auto& r : rows) (r.scheme == "autobs" ? agent : sweep).push_back(r.elapsed_s);
  const double ratio = median(agent) / median(sweep);
  return {ratio <= 0.01, fmt("10 maps 64x64: median act_greedy %.3g s, median cold exhaustive sweep %.3g s, "
                             "ratio %.3g = 1/%.0f (need <= 1/100)",
                             median(agent), median(sweep), ratio, 1.0 / ratio)};
}

Outcome criterion_5() {
  Xoshiro256 rng(5);
  std::vector<std::string> failures;
  auto require = [&](bool ok, const std::string& what) {
    if (!ok && failures.size() < 5) failures.push_back(what);
  };

  // Reciprocity on random maps.
  double worst_recip = 0.0;
  for (int trial = 0; trial < 400; ++trial) {
    const SiteMap m = generate_synthetic(2000 + trial / 20, 40, 30, 4.0, 0.3, {2, 6});
    const RadioConfig radio = RadioConfig::standard(4.0);
    const Coord a{static_cast<int>(rng.uniform_index(30)), static_cast<int>(rng.uniform_index(40))};
    const Coord b{static_cast<int>(rng.uniform_index(30)), static_cast<int>(rng.uniform_index(40))};
    worst_recip = std::max(worst_recip, rel_err(pathloss_db(m, radio, a, b), pathloss_db(m, radio, b, a)));
  }
  require(worst_recip <= 1e-9, fmt("reciprocity %.3g", worst_recip));

  // Translation equivariance: one building patch embedded at two offsets.
  double worst_shift = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const SiteMap patch = generate_synthetic(3000 + trial, 12, 12, 4.0, 0.3, {2, 4});
    auto embed = [&](int oi, int oj) {
      std::vector<std::uint8_t> occ(48 * 48, 0);
      for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 12; ++j) occ[(oi + i) * 48 + oj + j] = patch.occupied({i, j});
      return SiteMap::from_occupancy(48, 48, 4.0, occ);
    };
    const int oi = 1 + static_cast<int>(rng.uniform_index(30)), oj = 1 + static_cast<int>(rng.uniform_index(30));
    const SiteMap a = embed(0, 0), b = embed(oi, oj);
    const RadioConfig radio = RadioConfig::standard(4.0);
    const Coord tx = patch.deployable_cells()[rng.uniform_index(patch.deployable_cells().size())];
    const PathlossMap pa = predict_pathloss(a, radio, tx);
    const PathlossMap pb = predict_pathloss(b, radio, {tx.i + oi, tx.j + oj});
    for (int i = 0; i < 12; ++i)
      for (int j = 0; j < 12; ++j)
        worst_shift = std::max(worst_shift, rel_err(pb.power[(i + oi) * 48 + j + oj], pa.power[i * 48 + j]));
  }
  require(worst_shift <= 1e-9, fmt("translation %.3g", worst_shift));

  // Monotone decay in free space.
  {
    const SiteMap m = SiteMap::from_occupancy(40, 40, 4.0, std::vector<std::uint8_t>(1600, 0));
    const RadioConfig radio = RadioConfig::standard(4.0);
    const Coord bs{13, 22};
    const PathlossMap p = predict_pathloss(m, radio, bs);
    std::vector<std::pair<double, double>> by_distance;
    for (int k = 0; k < m.cells(); ++k) {
      const Coord c = m.coord(k);
      by_distance.emplace_back(std::hypot(c.i - bs.i, c.j - bs.j), p.power[k]);
    }
    std::sort(by_distance.begin(), by_distance.end());
    bool monotone = true;
    for (std::size_t k = 1; k < by_distance.size(); ++k)
      if (by_distance[k].first > by_distance[k - 1].first)
        monotone = monotone && by_distance[k].second <= by_distance[k - 1].second * (1 + 1e-9);
    require(monotone, "monotone decay");
  }

  // Spot values against the closed form, then the quoted roundings.
  const double freq_db = 20.0 * std::log10(2500.0) + 32.44 - 60.0;
  const RadioConfig radio = RadioConfig::standard(4.0);
  const SiteMap line = SiteMap::from_occupancy(26, 1, 4.0, std::vector<std::uint8_t>(26, 0));
  const double pl100 = pathloss_db(line, radio, {0, 0}, {0, 25});
  const double pl2 = pathloss_db(line, radio, {0, 4}, {0, 4});
  require(rel_err(pl100, 40.0 + freq_db) <= 1e-9, fmt("PL(100 m) %.12g", pl100));
  require(rel_err(pl2, 20.0 * std::log10(2.0) + freq_db) <= 1e-9, fmt("PL(2 m) %.12g", pl2));
  const double radius = std::pow(10.0, (90.015 - freq_db) / 20.0);
  const SiteMap open = SiteMap::from_occupancy(128, 128, 4.0, std::vector<std::uint8_t>(128 * 128, 0));
  const Coord centre[] = {{64, 64}};
  int inside = 0;
  for (int i = 0; i < 128; ++i)
    for (int j = 0; j < 128; ++j) inside += std::hypot((i - 64) * 4.0, (j - 64) * 4.0) <= radius;
  require(evaluate(open, radio, centre).covered_cells == inside, "coverage radius cell count");
  const bool quoted = std::abs(pl100 - 80.397) < 2e-3 && std::abs(pl2 - 46.418) < 2e-3 &&
                      std::abs(radius - 302.57) < 0.02;
  require(quoted, "quoted spot values");

  // evaluate() against the per-cell oracle on small maps.
  double worst_eval = 0.0;
  for (int trial = 0; trial < 60; ++trial) {
    const int w = 4 + static_cast<int>(rng.uniform_index(13)), h = 4 + static_cast<int>(rng.uniform_index(13));
    const double cell = 1.0 + static_cast<double>(rng.uniform_index(16));
    const SiteMap m = generate_synthetic(4000 + trial, w, h, cell, 0.25, {1, 3});
    const RadioConfig r = RadioConfig::standard(cell);
    oracle::Radio o;
    o.dmin_m = cell / 2.0;
    std::vector<Coord> bs;
    const int n = 1 + static_cast<int>(rng.uniform_index(3));
    for (int k = 0; k < n; ++k) bs.push_back(m.deployable_cells()[rng.uniform_index(m.deployable_cells().size())]);
    const NetworkMetrics got = evaluate(m, r, bs);
    const oracle::Metrics want = oracle::evaluate(m, o, bs);
    worst_eval = std::max({worst_eval, rel_err(got.coverage, want.coverage), rel_err(got.capacity, want.capacity),
                           rel_err(got.pathgain_w, want.pathgain)});
  }
  require(worst_eval <= 1e-12, fmt("oracle equivalence %.3g", worst_eval));

  std::string detail = fmt("reciprocity %.2g, translation %.2g, evaluate vs oracle %.2g; PL(100 m) %.6f dB, "
                           "PL(2 m) %.6f dB, radius %.4f m (quoted 80.397 / 46.418 / 302.57)",
                           worst_recip, worst_shift, worst_eval, pl100, pl2, radius);
  for (const auto& f : failures) detail += "; FAILED " + f;
  return {failures.empty(), detail};
}

Outcome criterion_6() {
  double worst_grad = 0.0, largest_grad = 0.0, worst_abs = 0.0;
  int grad_fail = 0, params = 0, compared = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto p = ppo_checks::make_tiny_problem(50000 + seed);
    const ppo_checks::GradCheck g = ppo_checks::gradient_check(p);
    worst_grad = std::max(worst_grad, g.worst_rel);
    largest_grad = std::max(largest_grad, g.max_abs_grad);
    worst_abs = std::max(worst_abs, g.worst_abs);
    params += g.parameters;
    compared += g.compared;
    grad_fail += g.worst_rel > 1e-4;
  }

  PpoConfig cfg;
  cfg.learning_rate = 3e-3;
  cfg.minibatch_size = 16;
  cfg.rollout_size = 32;
  cfg.hidden = {16, 16};
  PpoLearner learner(PolicyNetwork(NetworkShape{4, 3, cfg.hidden}, 6), cfg);
  Xoshiro256 rng(6);
  const RolloutBuffer probe = ppo_checks::random_buffer(learner.network(), 64, rng);
  double leaked = 0.0;
  for (int k = 0; k < 50; ++k) {
    learner.update(ppo_checks::random_buffer(learner.network(), 32, rng));
    leaked = std::max(leaked, ppo_checks::max_masked_probability(learner.network(), probe));
  }

  double worst_identity = 0.0;
  bool clipped_at_identity = false;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto p = ppo_checks::make_tiny_problem(60000 + seed);
    const BatchForward f = forward_batch(p.net, p.batch.inputs, p.batch.masks);
    for (int c = 0; c < p.batch.inputs.cols(); ++c)
      p.batch.old_log_probs(c) = ppo_checks::log_softmax_at(f.logits.col(c), p.batch.actions[c]);
    const LossTerms loss = ppo_loss(p.net, p.batch, p.coeff);
    worst_identity = std::max(worst_identity, std::abs(loss.policy_loss + p.batch.advantages.mean()));
    clipped_at_identity = clipped_at_identity || loss.clip_fraction != 0.0;
  }

  int bound_fail = 0;
  for (int k = 0; k < 100000; ++k) {
    const double ratio = std::exp(3.0 * rng.normal());
    const double a = rng.normal();
    const double eps = 0.05 + 0.9 * rng.uniform01();
    bound_fail += clipped_surrogate(ratio, a, eps) > std::abs(a) * (1.0 + eps) + 1e-15;
  }

  const bool pass = grad_fail == 0 && leaked == 0.0 && worst_identity <= 1e-12 && !clipped_at_identity &&
                    bound_fail == 0;
  return {pass, fmt("gradient check on 100 tiny configurations: %d parameters, largest |gradient| %.3g, "
                    "worst absolute error %.3g, %d entries above the 1e-8 absolute floor, worst relative error %.3g (need <= 1e-4, %d over); "
                    "max masked probability after 50 updates %.3g; rho=1 identity error %.3g; clip bound "
                    "violations %d / 100000",
                    params, largest_grad, worst_abs, compared, worst_grad, grad_fail, leaked, worst_identity, bound_fail)};
}

Outcome criterion_7() {
  Xoshiro256 rng(7);
  const RewardWeights cov = preset("coverage_only");
  double worst = 0.0;
  for (int episode = 0; episode < 100; ++episode) {
    const int w = 8 + static_cast<int>(rng.uniform_index(17));
    const double cell = 2.0 + static_cast<double>(rng.uniform_index(15));
    const auto map = std::make_shared<const SiteMap>(generate_synthetic(7000 + episode, w, w, cell, 0.3, {1, 4}));
    const RadioConfig radio = RadioConfig::standard(cell);
    const int horizon = 1 + static_cast<int>(rng.uniform_index(5));
    EpisodeState state = reset(map, radio, horizon);
    double sum = 0.0;
    for (int t = 0; t < horizon; ++t) {
      Coord a;
      do a = map->deployable_cells()[rng.uniform_index(map->deployable_cells().size())];
      while (!admissible(state, a));
      sum += step(state, a, cov).reward;
    }
    worst = std::max(worst, std::abs(sum - evaluate(*map, radio, state.placements).coverage));
  }

  struct Want {
    const char* name;
    double nu1, nu2, nu3;
  };
  const Want presets[] = {{"coverage_only", 1, 0, 0},
                          {"capacity_only", 0, 1, 0},
                          {"coverage_capacity", 1, 1, 0},
                          {"pathgain_capacity", 0, 1, 1},
                          {"pathgain_coverage", 1, 0, 1}};
  bool vectors = std::size(kRewardPresets) == 5;
  for (const Want& p : presets) {
    const RewardWeights w = preset(p.name);
    vectors = vectors && w.nu1 == p.nu1 && w.nu2 == p.nu2 && w.nu3 == p.nu3;
  }
  return {worst <= 1e-12 && vectors,
          fmt("telescoping over 100 random episodes: worst |sum of rewards - final coverage| %.3g (need <= 1e-12); "
              "five preset weight vectors %s",
              worst, vectors ? "exact" : "WRONG")};
}

Outcome criterion_8() {
  namespace fs = std::filesystem;
  const fs::path work = fs::temp_directory_path() / "bsplace_acceptance_determinism";
  fs::remove_all(work);
  fs::create_directories(work);
  {
    std::ofstream cfg(work / "toy.cfg");
    cfg << "map_width = 24\nmap_height = 24\ncell_size = 16\nbuilding_min = 3\nbuilding_max = 7\n"
           "train_count = 30\ntest_count = 4\nhidden = 64,64\nrollout_size = 256\nminibatch_size = 64\n"
           "total_env_steps = 1024\nlearning_rate = 3e-4\nrollout_batch = 32\n";
  }
  auto run = [&](const std::string& dir, const std::string& cmd) {
    const std::string line = std::string(BSPLACE_CLI) + " --config " + (work / "toy.cfg").string() +
                             " --deterministic --seed 11 --out " + (work / dir).string() + " " + cmd + " >" +
                             (work / "log.txt").string() + " 2>&1";
    const int status = std::system(line.c_str());
    return WIFEXITED(status) && WEXITSTATUS(status) == 0;
  };
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  };
  bool ok = true;
  for (const char* dir : {"a", "b"}) ok = ok && run(dir, "train") && run(dir, "bench");
  if (!ok) return {false, "command failed: " + slurp(work / "log.txt")};
  const bool curve = slurp(work / "a" / "curve.csv") == slurp(work / "b" / "curve.csv");
  const std::string bench_a = slurp(work / "a" / "bench.csv");
  const bool bench = csv_compare::without_column(bench_a, "elapsed_s") ==
                     csv_compare::without_column(slurp(work / "b" / "bench.csv"), "elapsed_s");
  const bool ckpt = slurp(work / "a" / "policy.bin") == slurp(work / "b" / "policy.bin");
  const std::size_t rows = csv_compare::rows(bench_a) - 1;
  fs::remove_all(work);
  return {curve && bench && rows > 0,
          fmt("two runs of train + bench: curve.csv %s, bench.csv without elapsed_s %s (%zu rows), checkpoint %s",
              curve ? "identical" : "DIFFERENT", bench ? "identical" : "DIFFERENT", rows,
              ckpt ? "identical" : "different")};
}

Outcome criterion_9() {
  const ExperimentConfig cfg = ExperimentConfig::parse(
      "train_count = 1\ntest_count = 0\nreward_preset = coverage_only\n"
      "rollout_size = 256\nminibatch_size = 64\ntotal_env_steps = 51200\n"
      "learning_rate = 3e-4\nentropy_coeff = 0.05\nseed = 0\n");
  const MapList maps = build_train_split(cfg.corpus);
  const double c0 = cpu_seconds();
  const double best = exhaustive_single(*maps[0], cfg.resolved_radio(), SearchMetric::kCoverage).metrics.coverage;
  const TrainOutput t = train_on(quiet(cfg), maps, {});
  const double cpu = cpu_seconds() - c0;
  int reached = 0;
  for (const auto& row : t.result.curve)
    if (row.eval_coverage >= 0.99 * best) {
      reached = row.iteration;
      break;
    }
  const double final_ratio = t.result.curve.back().eval_coverage / best;
  return {reached > 0 && reached <= 200 && cpu <= 300,
          fmt("fixed 64x64 map, exhaustive best coverage %.4f: %s, final ratio %.4f after %zu iterations, "
              "%.0f CPU-s (<= 300)",
              best, reached ? fmt("reached 0.99x at iteration %d", reached).c_str() : "never reached 0.99x",
              final_ratio, t.result.curve.size(), cpu)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria = {criterion_1, criterion_2, criterion_3,
                                                           criterion_4, criterion_5, criterion_6,
                                                           criterion_7, criterion_8, criterion_9};
  std::set<int> only;
  for (int a = 1; a < argc; ++a) only.insert(std::atoi(argv[a]));

  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && !only.contains(id)) continue;
    const auto w0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - w0).count();
    std::printf("criterion %d: %s  %s  [%.1f s]\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), wall);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
