#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <memory>
#include <vector>

#include "bsplace/error.hpp"
#include "bsplace/ppo.hpp"
#include "doctest.h"
#include "ppo_checks.hpp"

using namespace bsplace;

namespace {

Observation blank_observation(int w, int h) {
  Observation o;
  o.width = w;
  o.height = h;
  o.occupancy.assign(static_cast<std::size_t>(w) * h, 0.0f);
  o.power.assign(static_cast<std::size_t>(w) * h, 0.0f);
  o.action_mask.assign(static_cast<std::size_t>(w) * h, 1);
  return o;
}

void zero_policy_head(PolicyNetwork& net) {
  net.weight(net.policy_layer()).setZero();
  net.bias(net.policy_layer()).setZero();
}

}  // namespace

TEST_CASE("network layout") {
  const NetworkShape shape{6, 5, {128, 128, 128, 128}};
  const PolicyNetwork net(shape, 1);
  const std::size_t in = 2 * 30 + 1;
  const std::size_t expected = (in * 128 + 128) + 3 * (128 * 128 + 128) + (128 * 30 + 30) + (128 + 1);
  CHECK(net.parameter_count() == expected);
  CHECK(net.layer_count() == 6);
  CHECK(net.rows(net.policy_layer()) == 30);
  CHECK(net.rows(net.value_layer()) == 1);
  CHECK(net.all_finite());
  for (int l = 0; l < net.layer_count(); ++l) CHECK(net.bias(l).isZero());
  CHECK(PolicyNetwork(shape, 1).parameters()[77] == net.parameters()[77]);
  CHECK(PolicyNetwork(shape, 2).parameters()[77] != net.parameters()[77]);
}

TEST_CASE("forward masking and normalization") {
  PolicyNetwork net(NetworkShape{5, 4, {16, 16}}, 3);
  Observation obs = blank_observation(5, 4);
  obs.occupancy[3] = 1.0f;

  const Eigen::VectorXd p = action_probabilities(forward(net, obs).logits);
  CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-6));

  std::fill(obs.action_mask.begin(), obs.action_mask.end(), 0);
  obs.action_mask[7] = 1;
  const PolicyOutput one = forward(net, obs);
  const Eigen::VectorXd q = action_probabilities(one.logits);
  CHECK(q(7) == 1.0);
  for (int k = 0; k < 20; ++k)
    if (k != 7) CHECK(q(k) == 0.0);
  CHECK(act_greedy(net, obs) == Coord{1, 2});

  zero_policy_head(net);
  obs.action_mask.assign(20, 1);
  obs.action_mask[0] = 0;
  const Eigen::VectorXd u = action_probabilities(forward(net, obs).logits);
  for (int k = 1; k < 20; ++k) CHECK(u(k) == doctest::Approx(1.0 / 19.0).epsilon(1e-12));
  CHECK(u(0) == 0.0);
  CHECK(act_greedy(net, obs) == Coord{0, 1});  // ties: lowest flat index

  std::fill(obs.action_mask.begin(), obs.action_mask.end(), 0);
  CHECK_THROWS_AS(forward(net, obs), Error);
  CHECK_THROWS_AS(forward(net, blank_observation(4, 5)), Error);
}

TEST_CASE("greedy index tie-break") {
  const double ninf = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd z(5);
  z << ninf, 0.5, 2.0, 2.0, ninf;
  CHECK(greedy_index(z) == 2);
  z << ninf, ninf, ninf, ninf, -1e300;
  CHECK(greedy_index(z) == 4);
}

TEST_CASE("sample_action") {
  const double ninf = -std::numeric_limits<double>::infinity();
  Xoshiro256 rng(1);
  Eigen::VectorXd single(4);
  single << ninf, 3.0, ninf, ninf;
  for (int k = 0; k < 50; ++k) {
    const SampledAction a = sample_action(single, rng);
    CHECK(a.index == 1);
    CHECK(a.log_prob == 0.0);
  }

  Eigen::VectorXd uniform = Eigen::VectorXd::Constant(7, 0.3);
  uniform(2) = ninf;
  CHECK(sample_action(uniform, rng).log_prob == doctest::Approx(-std::log(6.0)).epsilon(1e-12));

  Eigen::VectorXd three(3);
  three << std::log(0.2), std::log(0.3), std::log(0.5);
  int counts[3] = {0, 0, 0};
  const int draws = 100000;
  for (int k = 0; k < draws; ++k) ++counts[sample_action(three, rng).index];
  CHECK(std::abs(counts[0] / double(draws) - 0.2) <= 0.01);
  CHECK(std::abs(counts[1] / double(draws) - 0.3) <= 0.01);
  CHECK(std::abs(counts[2] / double(draws) - 0.5) <= 0.01);

  Xoshiro256 a(9), b(9);
  for (int k = 0; k < 100; ++k) CHECK(sample_action(three, a).index == sample_action(three, b).index);
}

TEST_CASE("generalized advantage estimation") {
  RolloutBuffer buf;
  Transition t1;
  t1.reward = 1.0;
  t1.value = 0.5;
  Transition t2 = t1;
  t2.reward = 2.0;
  t2.done = true;
  buf.transitions = {t1, t2};
  const Advantages adv = compute_advantages(buf, 0.1, 0.95);
  CHECK(adv.advantages(0) == doctest::Approx(0.6925).epsilon(1e-12));
  CHECK(adv.advantages(1) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(adv.returns(0) == doctest::Approx(1.1925).epsilon(1e-12));

  const Advantages g0 = compute_advantages(buf, 1e-300, 0.95);
  CHECK(g0.advantages(0) == doctest::Approx(0.5));
  CHECK(g0.advantages(1) == doctest::Approx(1.5));

  RolloutBuffer one;
  Transition t;
  t.reward = 0.7;
  t.value = 0.2;
  t.done = true;
  one.transitions = {t, t};
  for (double lam : {0.0, 0.5, 1.0}) {
    const Advantages a = compute_advantages(one, 0.9, lam);
    CHECK(a.advantages(0) == doctest::Approx(0.5));
  }

  RolloutBuffer open = buf;
  open.transitions.back().done = false;
  CHECK_THROWS_AS(compute_advantages(open, 0.1, 0.95), Error);

  Eigen::VectorXd v(4);
  v << 1, 2, 3, 6;
  const Eigen::VectorXd n = normalize_advantages(v);
  CHECK(n.mean() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::sqrt(n.array().square().mean()) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("clipped surrogate") {
  CHECK(clipped_surrogate(1.5, 2.0, 0.2) == doctest::Approx(2.4));
  CHECK(clipped_surrogate(1.5, -2.0, 0.2) == doctest::Approx(-3.0));
  CHECK(clipped_surrogate(0.5, -2.0, 0.2) == doctest::Approx(-1.6));
  CHECK(clipped_surrogate(1.0, 0.7, 0.2) == 0.7);
  Xoshiro256 rng(4);
  for (int k = 0; k < 10000; ++k) {
    const double ratio = std::exp(3.0 * rng.normal());
    const double a = rng.normal();
    const double eps = 0.05 + 0.9 * rng.uniform01();
    REQUIRE(clipped_surrogate(ratio, a, eps) <= std::abs(a) * (1.0 + eps) + 1e-15);
  }
}

TEST_CASE("ratio identity at the behaviour policy") {
  auto p = ppo_checks::make_tiny_problem(11);
  const BatchForward f = forward_batch(p.net, p.batch.inputs, p.batch.masks);
  for (int c = 0; c < p.batch.inputs.cols(); ++c)
    p.batch.old_log_probs(c) = ppo_checks::log_softmax_at(f.logits.col(c), p.batch.actions[c]);
  const LossTerms loss = ppo_loss(p.net, p.batch, p.coeff);
  CHECK(loss.policy_loss == doctest::Approx(-p.batch.advantages.mean()).epsilon(1e-12));
  CHECK(loss.clip_fraction == 0.0);
  CHECK(loss.approx_kl == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("analytic gradient matches finite differences") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    auto p = ppo_checks::make_tiny_problem(1000 + seed);
    const auto r = ppo_checks::gradient_check(p);
    CHECK(r.worst_rel <= 1e-4);
  }
}

TEST_CASE("masked actions stay at probability zero through updates") {
  PpoConfig cfg;
  cfg.learning_rate = 3e-3;
  cfg.minibatch_size = 16;
  cfg.rollout_size = 32;
  cfg.hidden = {16, 16};
  PpoLearner learner(PolicyNetwork(NetworkShape{4, 3, cfg.hidden}, 5), cfg);
  Xoshiro256 rng(8);
  const RolloutBuffer probe = ppo_checks::random_buffer(learner.network(), 20, rng);
  CHECK(ppo_checks::max_masked_probability(learner.network(), probe) == 0.0);
  for (int k = 0; k < 50; ++k) {
    learner.update(ppo_checks::random_buffer(learner.network(), 32, rng));
    REQUIRE(ppo_checks::max_masked_probability(learner.network(), probe) == 0.0);
  }
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  PpoConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.minibatch_size = 8;
  cfg.rollout_size = 16;
  cfg.hidden = {8};
  const PolicyNetwork start(NetworkShape{3, 3, cfg.hidden}, 2);
  for (OptimizerKind kind : {OptimizerKind::kAdam, OptimizerKind::kSgd}) {
    cfg.optimizer = kind;
    PpoLearner learner(start, cfg);
    Xoshiro256 rng(1);
    for (int k = 0; k < 3; ++k) learner.update(ppo_checks::random_buffer(start, 16, rng));
    CHECK(std::ranges::equal(learner.network().parameters(), start.parameters()));
  }
}

TEST_CASE("learner rejects undersized buffers") {
  PpoConfig cfg;
  cfg.minibatch_size = 8;
  cfg.rollout_size = 16;
  cfg.hidden = {8};
  PpoLearner learner(PolicyNetwork(NetworkShape{3, 3, cfg.hidden}, 2), cfg);
  Xoshiro256 rng(1);
  CHECK_THROWS_AS(learner.update(ppo_checks::random_buffer(learner.network(), 4, rng)), Error);
}

TEST_CASE("config parsing and validation") {
  PpoConfig cfg;
  CHECK(cfg.learning_rate == 1e-5);
  CHECK(cfg.gamma == 0.1);
  CHECK(cfg.minibatch_size == 256);
  CHECK(cfg.hidden == std::vector<int>{128, 128, 128, 128});
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.set("hidden", "32,16"));
  CHECK(cfg.hidden == std::vector<int>{32, 16});
  CHECK(cfg.set("optimizer", "sgd"));
  CHECK(cfg.optimizer == OptimizerKind::kSgd);
  CHECK_FALSE(cfg.set("no_such_key", "1"));
  CHECK_THROWS_AS(cfg.set("gamma", "fast"), ConfigError);
  CHECK_THROWS_AS(cfg.set("optimizer", "rmsprop"), ConfigError);

  PpoConfig round;
  for (const auto& [k, v] : cfg.to_lines()) CHECK(round.set(k, v));
  CHECK(round.to_lines() == cfg.to_lines());

  PpoConfig bad;
  bad.gamma = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = PpoConfig{};
  bad.clip_epsilon = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = PpoConfig{};
  bad.minibatch_size = 2048;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("checkpoint round trip") {
  const PolicyNetwork net(NetworkShape{5, 3, {12, 7}}, 42);
  const auto bytes = checkpoint_bytes(net, {{"preset", "coverage_only"}});
  CHECK(bytes[0] == 'A');
  CHECK(bytes[3] == 'P');
  std::vector<std::pair<std::string, std::string>> lines;
  const PolicyNetwork back = load_checkpoint_bytes(bytes, &lines);
  CHECK(back.shape() == net.shape());
  CHECK(back.init_seed() == 42);
  for (std::size_t k = 0; k < net.parameter_count(); ++k)
    REQUIRE(back.parameters()[k] == static_cast<double>(static_cast<float>(net.parameters()[k])));
  CHECK(checkpoint_bytes(back, {{"preset", "coverage_only"}}) == bytes);
  REQUIRE(lines.size() >= 5);
  CHECK(lines[0].first == "map_width");
  CHECK(lines.back() == std::pair<std::string, std::string>{"preset", "coverage_only"});

  const auto dir = std::filesystem::temp_directory_path() / "bsplace_test_agent";
  std::filesystem::create_directories(dir);
  save_checkpoint(dir / "net.bin", net);
  CHECK(load_checkpoint(dir / "net.bin").parameter_count() == net.parameter_count());
  std::filesystem::remove_all(dir);

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(load_checkpoint_bytes(bad_magic), Error);
  auto bad_version = bytes;
  bad_version[4] = 9;
  CHECK_THROWS_AS(load_checkpoint_bytes(bad_version), Error);
  auto truncated = bytes;
  truncated.resize(bytes.size() / 2);
  CHECK_THROWS_AS(load_checkpoint_bytes(truncated), Error);
}

TEST_CASE("greedy decision on a 64x64 map is fast") {
  const PolicyNetwork net(NetworkShape{64, 64}, 0);
  const Observation obs = blank_observation(64, 64);
  std::vector<double> t;
  for (int k = 0; k < 9; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    act_greedy(net, obs);
    t.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  std::sort(t.begin(), t.end());
  CHECK(t[t.size() / 2] <= 0.010);
}

TEST_CASE("training is seeded and a zero learning rate gives a flat curve") {
  TrainSetup setup;
  for (int k = 0; k < 3; ++k)
    setup.train_maps.push_back(std::make_shared<const SiteMap>(generate_synthetic(k, 6, 6, 8.0, 0.2, {1, 2})));
  setup.eval_maps.push_back(std::make_shared<const SiteMap>(generate_synthetic(50, 6, 6, 8.0, 0.2, {1, 2})));
  setup.radio = RadioConfig::standard(8.0);
  setup.weights = preset("coverage_only");
  setup.ppo.hidden = {16, 16};
  setup.ppo.rollout_size = 32;
  setup.ppo.minibatch_size = 16;
  setup.ppo.total_env_steps = 96;
  setup.ppo.learning_rate = 1e-3;
  setup.rollout_batch = 8;

  const TrainResult a = train(setup);
  const TrainResult b = train(setup);
  REQUIRE(a.curve.size() == 3);
  for (std::size_t k = 0; k < a.curve.size(); ++k) {
    CHECK(a.curve[k].mean_reward == b.curve[k].mean_reward);
    CHECK(a.curve[k].eval_coverage == b.curve[k].eval_coverage);
    CHECK(a.curve[k].env_steps == static_cast<std::int64_t>(32 * (k + 1)));
  }
  CHECK(std::ranges::equal(a.network.parameters(), b.network.parameters()));
  CHECK(curve_csv(a.curve) == curve_csv(b.curve));
  CHECK(curve_csv(a.curve).rfind("iteration,env_steps,mean_reward,eval_coverage,eval_capacity\n", 0) == 0);

  setup.ppo.learning_rate = 0.0;
  const TrainResult flat = train(setup);
  const PolicyNetwork init(NetworkShape{6, 6, setup.ppo.hidden}, derive_seed(setup.ppo.seed, 1));
  CHECK(std::ranges::equal(flat.network.parameters(), init.parameters()));
  for (const auto& row : flat.curve) {
    CHECK(row.eval_coverage == flat.curve.front().eval_coverage);
    CHECK(row.eval_capacity == flat.curve.front().eval_capacity);
  }

  TrainSetup overlap = setup;
  overlap.eval_maps = {setup.train_maps[0]};
  CHECK_THROWS_AS(train(overlap), Error);
}
