#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bsplace/policy.hpp"
#include "bsplace/rng.hpp"

namespace bsplace {

enum class OptimizerKind { kAdam, kSgd };

struct PpoConfig {
  double learning_rate = 1.0e-5;
  double gamma = 0.1;
  double clip_epsilon = 0.2;
  double gae_lambda = 0.95;
  int minibatch_size = 256;
  int update_epochs = 4;
  int rollout_size = 1024;
  double value_loss_coeff = 0.5;
  double entropy_coeff = 0.01;
  double max_grad_norm = 0.5;
  std::int64_t total_env_steps = 102400;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::vector<int> hidden = {128, 128, 128, 128};

  void validate() const;
  std::vector<std::pair<std::string, std::string>> to_lines() const;
  // Returns false for keys this struct does not own; throws ConfigError on
  // unparsable values.
  bool set(const std::string& key, const std::string& value);
};

struct Transition {
  std::vector<float> observation;  // flattened
  std::vector<std::uint8_t> mask;
  int action = 0;
  double log_prob = 0.0;
  double reward = 0.0;
  double value = 0.0;
  bool done = false;
};

// Episodes are stored contiguously, each ending with done = true.
struct RolloutBuffer {
  std::vector<Transition> transitions;
  std::size_t size() const { return transitions.size(); }
};

struct SampledAction {
  int index = 0;
  double log_prob = 0.0;
};

SampledAction sample_action(const Eigen::VectorXd& masked_logits, Xoshiro256& rng);

// Argmax of masked logits, ties to the lowest flat index.
int greedy_index(const Eigen::VectorXd& masked_logits);
Coord act_greedy(const PolicyNetwork& net, const Observation& obs);

struct Advantages {
  Eigen::VectorXd advantages;  // GAE, before normalization
  Eigen::VectorXd returns;     // advantages + values
};

Advantages compute_advantages(const RolloutBuffer& buffer, double gamma, double gae_lambda);

// Zero mean, unit variance (population std + 1e-8).
Eigen::VectorXd normalize_advantages(const Eigen::VectorXd& adv);

struct LossCoefficients {
  double clip_epsilon = 0.2;
  double value_loss_coeff = 0.5;
  double entropy_coeff = 0.01;
};

struct PpoBatch {
  Eigen::MatrixXd inputs;            // input_size x batch
  std::vector<std::uint8_t> masks;   // action_count x batch, column-major
  std::vector<int> actions;
  Eigen::VectorXd old_log_probs;
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;
};

struct LossTerms {
  double total = 0.0;         // minimized
  double policy_loss = 0.0;   // -mean clipped surrogate
  double value_loss = 0.0;    // mean (V - return)^2
  double entropy = 0.0;       // mean policy entropy
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
};

// total = -mean(min(rho A, clip(rho, 1-eps, 1+eps) A))
//         + c_v mean((V - R)^2) - c_e mean(H)
// When `grad` is given it receives d total / d parameters (backprop).
LossTerms ppo_loss(const PolicyNetwork& net, const PpoBatch& batch, const LossCoefficients& coeff,
                   ParameterVector* grad = nullptr);

// Per-sample surrogate min(rho A, clip(rho, 1-eps, 1+eps) A).
double clipped_surrogate(double ratio, double advantage, double clip_epsilon);

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double clip_fraction = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double grad_norm = 0.0;
  int minibatches = 0;
};

// Owns the parameters and optimizer state across updates.
class PpoLearner {
 public:
  PpoLearner(PolicyNetwork net, PpoConfig config);

  // update_epochs passes of shuffled minibatches with global-norm clipping.
  // Throws DivergenceError (parameters untouched by the failing step) on a
  // non-finite loss or gradient.
  UpdateStats update(const RolloutBuffer& buffer);

  const PolicyNetwork& network() const { return net_; }
  PolicyNetwork& network() { return net_; }
  const PpoConfig& config() const { return config_; }

 private:
  void apply_gradient(ParameterVector& grad);

  PolicyNetwork net_;
  PpoConfig config_;
  Xoshiro256 rng_;
  ParameterVector adam_m_;
  ParameterVector adam_v_;
  std::int64_t adam_step_ = 0;
};

struct CurveRow {
  int iteration = 0;
  std::int64_t env_steps = 0;
  double mean_reward = 0.0;
  double eval_coverage = 0.0;
  double eval_capacity = 0.0;
};

std::string curve_csv(const std::vector<CurveRow>& rows);

struct TrainSetup {
  std::vector<std::shared_ptr<const SiteMap>> train_maps;
  // Disjoint from train_maps by map_id; empty means "evaluate on train_maps".
  std::vector<std::shared_ptr<const SiteMap>> eval_maps;
  RadioConfig radio;
  int horizon = 1;
  RewardWeights weights;
  PpoConfig ppo;
  // Episodes run in lockstep so the policy forward pass is batched.
  int rollout_batch = 64;
  // Optional memo for twin predictions during rollouts and evaluation.
  TwinCache* cache = nullptr;
};

struct TrainResult {
  PolicyNetwork network;
  std::vector<CurveRow> curve;
  bool diverged = false;
  std::string message;
};

// Mean final coverage / capacity of greedy episodes over `maps`.
std::pair<double, double> evaluate_policy(const PolicyNetwork& net,
                                          const std::vector<std::shared_ptr<const SiteMap>>& maps,
                                          const RadioConfig& radio, int horizon,
                                          TwinCache* cache = nullptr);

// Greedy sequential deployment of `horizon` base stations.
std::vector<Coord> deploy_greedy(const PolicyNetwork& net, std::shared_ptr<const SiteMap> map,
                                 const RadioConfig& radio, int horizon,
                                 TwinCache* cache = nullptr);

using IterationCallback =
    std::function<void(const CurveRow&, const UpdateStats&, const PolicyNetwork&)>;

// Alternates rollout collection (maps drawn uniformly from the train split)
// with PPO updates. On divergence returns the last finite network with
// diverged = true.
TrainResult train(const TrainSetup& setup, const IterationCallback& on_iteration = {});

}  // namespace bsplace
