#include "bsplace/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "bsplace/error.hpp"

namespace bsplace {

// ---------------------------------------------------------------- config

void PpoConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0))
    throw ConfigError("clip_epsilon must lie in (0, 1)");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw ConfigError("gae_lambda must lie in [0, 1]");
  if (minibatch_size < 1) throw ConfigError("minibatch_size must be positive");
  if (rollout_size < 1) throw ConfigError("rollout_size must be positive");
  if (minibatch_size > rollout_size) throw ConfigError("minibatch_size must not exceed rollout_size");
  if (update_epochs < 1) throw ConfigError("update_epochs must be positive");
  if (value_loss_coeff < 0.0 || entropy_coeff < 0.0)
    throw ConfigError("loss coefficients must be >= 0");
  if (!(max_grad_norm > 0.0)) throw ConfigError("max_grad_norm must be positive");
  if (total_env_steps < 1) throw ConfigError("total_env_steps must be positive");
  if (hidden.empty()) throw ConfigError("hidden must list at least one layer");
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("invalid number for " + key + ": '" + v + "'");
  }
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long d = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("invalid integer for " + key + ": '" + v + "'");
  }
}

}  // namespace

std::vector<std::pair<std::string, std::string>> PpoConfig::to_lines() const {
  std::string hid;
  for (std::size_t k = 0; k < hidden.size(); ++k) hid += (k ? "," : "") + std::to_string(hidden[k]);
  return {{"learning_rate", fmt_double(learning_rate)},
          {"gamma", fmt_double(gamma)},
          {"clip_epsilon", fmt_double(clip_epsilon)},
          {"gae_lambda", fmt_double(gae_lambda)},
          {"minibatch_size", std::to_string(minibatch_size)},
          {"update_epochs", std::to_string(update_epochs)},
          {"rollout_size", std::to_string(rollout_size)},
          {"value_loss_coeff", fmt_double(value_loss_coeff)},
          {"entropy_coeff", fmt_double(entropy_coeff)},
          {"max_grad_norm", fmt_double(max_grad_norm)},
          {"total_env_steps", std::to_string(total_env_steps)},
          {"seed", std::to_string(seed)},
          {"optimizer", optimizer == OptimizerKind::kAdam ? "adam" : "sgd"},
          {"adam_beta1", fmt_double(adam_beta1)},
          {"adam_beta2", fmt_double(adam_beta2)},
          {"adam_epsilon", fmt_double(adam_epsilon)},
          {"hidden", hid}};
}

bool PpoConfig::set(const std::string& key, const std::string& value) {
  if (key == "learning_rate") learning_rate = parse_double(key, value);
  else if (key == "gamma") gamma = parse_double(key, value);
  else if (key == "clip_epsilon") clip_epsilon = parse_double(key, value);
  else if (key == "gae_lambda") gae_lambda = parse_double(key, value);
  else if (key == "minibatch_size") minibatch_size = static_cast<int>(parse_int(key, value));
  else if (key == "update_epochs") update_epochs = static_cast<int>(parse_int(key, value));
  else if (key == "rollout_size") rollout_size = static_cast<int>(parse_int(key, value));
  else if (key == "value_loss_coeff") value_loss_coeff = parse_double(key, value);
  else if (key == "entropy_coeff") entropy_coeff = parse_double(key, value);
  else if (key == "max_grad_norm") max_grad_norm = parse_double(key, value);
  else if (key == "total_env_steps") total_env_steps = parse_int(key, value);
  else if (key == "seed") seed = static_cast<std::uint64_t>(parse_int(key, value));
  else if (key == "adam_beta1") adam_beta1 = parse_double(key, value);
  else if (key == "adam_beta2") adam_beta2 = parse_double(key, value);
  else if (key == "adam_epsilon") adam_epsilon = parse_double(key, value);
  else if (key == "optimizer") {
    if (value == "adam") optimizer = OptimizerKind::kAdam;
    else if (value == "sgd") optimizer = OptimizerKind::kSgd;
    else throw ConfigError("optimizer must be adam or sgd, got '" + value + "'");
  } else if (key == "hidden") {
    hidden.clear();
    std::size_t start = 0;
    while (start <= value.size()) {
      const auto comma = value.find(',', start);
      const std::string part = value.substr(start, comma == std::string::npos ? std::string::npos
                                                                             : comma - start);
      const auto h = parse_int(key, part);
      if (h <= 0) throw ConfigError("hidden layer widths must be positive");
      hidden.push_back(static_cast<int>(h));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  } else {
    return false;
  }
  return true;
}

// ---------------------------------------------------------------- acting

SampledAction sample_action(const Eigen::VectorXd& masked_logits, Xoshiro256& rng) {
  const double mx = masked_logits.maxCoeff();
  if (!std::isfinite(mx)) throw Error("sample_action: no admissible action");
  const Eigen::VectorXd e = masked_exp(masked_logits, mx);
  const double total = e.sum();
  const double target = rng.uniform01() * total;
  double cum = 0.0;
  int chosen = -1;
  for (Eigen::Index k = 0; k < e.size(); ++k) {
    if (e(k) <= 0.0) continue;
    chosen = static_cast<int>(k);
    cum += e(k);
    if (target < cum) break;
  }
  return {chosen, masked_logits(chosen) - mx - std::log(total)};
}

int greedy_index(const Eigen::VectorXd& masked_logits) {
  int best = -1;
  for (Eigen::Index k = 0; k < masked_logits.size(); ++k)
    if (best < 0 ? masked_logits(k) > -std::numeric_limits<double>::infinity()
                 : masked_logits(k) > masked_logits(best))
      best = static_cast<int>(k);
  if (best < 0) throw Error("greedy_index: no admissible action");
  return best;
}

Coord act_greedy(const PolicyNetwork& net, const Observation& obs) {
  const PolicyOutput out = forward(net, obs);
  const int k = greedy_index(out.logits);
  return {k / obs.width, k % obs.width};
}

// ---------------------------------------------------------------- advantages

Advantages compute_advantages(const RolloutBuffer& buffer, double gamma, double gae_lambda) {
  const auto n = static_cast<Eigen::Index>(buffer.size());
  if (n > 0 && !buffer.transitions.back().done)
    throw Error("rollout buffer ends inside an episode");
  Advantages out;
  out.advantages.resize(n);
  out.returns.resize(n);
  double last_gae = 0.0;
  for (Eigen::Index k = n - 1; k >= 0; --k) {
    const Transition& tr = buffer.transitions[static_cast<std::size_t>(k)];
    const double next_value = tr.done ? 0.0 : buffer.transitions[static_cast<std::size_t>(k + 1)].value;
    const double not_done = tr.done ? 0.0 : 1.0;
    const double delta = tr.reward + gamma * next_value * not_done - tr.value;
    last_gae = delta + gamma * gae_lambda * not_done * last_gae;
    out.advantages(k) = last_gae;
    out.returns(k) = last_gae + tr.value;
  }
  return out;
}

Eigen::VectorXd normalize_advantages(const Eigen::VectorXd& adv) {
  if (adv.size() == 0) return adv;
  const double mean = adv.mean();
  const double var = (adv.array() - mean).square().mean();
  return ((adv.array() - mean) / (std::sqrt(var) + 1e-8)).matrix();
}

// ---------------------------------------------------------------- loss

double clipped_surrogate(double ratio, double advantage, double clip_epsilon) {
  const double clipped = std::clamp(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon);
  return std::min(ratio * advantage, clipped * advantage);
}

LossTerms ppo_loss(const PolicyNetwork& net, const PpoBatch& batch, const LossCoefficients& coeff,
                   ParameterVector* grad) {
  const BatchForward f = forward_batch(net, batch.inputs, batch.masks);
  const Eigen::Index n = batch.inputs.cols();
  const int actions = net.shape().action_count();
  const double inv_n = 1.0 / static_cast<double>(n);

  Eigen::MatrixXd g_logits = Eigen::MatrixXd::Zero(actions, n);
  Eigen::RowVectorXd g_values(n);
  LossTerms out;

  for (Eigen::Index b = 0; b < n; ++b) {
    const auto z = f.logits.col(b);
    const double mx = z.maxCoeff();
    const Eigen::VectorXd e = masked_exp(z, mx);
    const double total = e.sum();
    const double lse = mx + std::log(total);
    const int a = batch.actions[static_cast<std::size_t>(b)];
    if (!std::isfinite(z(a))) throw Error("ppo_loss: stored action is inadmissible");

    const double log_prob = z(a) - lse;
    const double log_ratio = log_prob - batch.old_log_probs(b);
    const double ratio = std::exp(log_ratio);
    const double adv = batch.advantages(b);
    const double surr1 = ratio * adv;
    const double surr2 = std::clamp(ratio, 1.0 - coeff.clip_epsilon, 1.0 + coeff.clip_epsilon) * adv;
    out.policy_loss -= std::min(surr1, surr2) * inv_n;
    if (std::abs(ratio - 1.0) > coeff.clip_epsilon) out.clip_fraction += inv_n;
    out.approx_kl += ((ratio - 1.0) - log_ratio) * inv_n;

    double entropy = 0.0;
    for (int k = 0; k < actions; ++k)
      if (e(k) > 0.0) entropy -= (e(k) / total) * (z(k) - lse);
    out.entropy += entropy * inv_n;

    const double v = f.values(b);
    const double verr = v - batch.returns(b);
    out.value_loss += verr * verr * inv_n;

    if (grad) {
      // d(-surrogate)/d log_prob; zero when the clipped branch is the minimum.
      const double g_logp = surr1 <= surr2 ? -ratio * adv * inv_n : 0.0;
      const double ent_scale = coeff.entropy_coeff * inv_n;
      for (int k = 0; k < actions; ++k) {
        if (!std::isfinite(z(k))) continue;
        const double p = e(k) / total;
        g_logits(k, b) = -g_logp * p + ent_scale * p * ((z(k) - lse) + entropy);
      }
      g_logits(a, b) += g_logp;
      g_values(b) = 2.0 * coeff.value_loss_coeff * verr * inv_n;
    }
  }
  out.total = out.policy_loss + coeff.value_loss_coeff * out.value_loss -
              coeff.entropy_coeff * out.entropy;
  if (!grad) return out;

  grad->assign(net.parameter_count(), 0.0);
  auto wgrad = [&](int l) {
    return Eigen::Map<Eigen::MatrixXd>(grad->data() + net.weight_offset(l), net.rows(l), net.cols(l));
  };
  auto bgrad = [&](int l) {
    return Eigen::Map<Eigen::VectorXd>(grad->data() + net.bias_offset(l), net.rows(l));
  };

  const Eigen::MatrixXd& top = f.activations.back();
  const int pl = net.policy_layer();
  const int vl = net.value_layer();
  wgrad(pl).noalias() = g_logits * top.transpose();
  bgrad(pl) = g_logits.rowwise().sum();
  wgrad(vl).noalias() = g_values * top.transpose();
  bgrad(vl)(0) = g_values.sum();

  Eigen::MatrixXd d_act = net.weight(pl).transpose() * g_logits;
  d_act.noalias() += net.weight(vl).transpose() * g_values;
  for (int l = net.hidden_count() - 1; l >= 0; --l) {
    const Eigen::MatrixXd& a = f.activations[static_cast<std::size_t>(l) + 1];
    const Eigen::MatrixXd dz = (d_act.array() * (1.0 - a.array().square())).matrix();
    wgrad(l).noalias() = dz * f.activations[static_cast<std::size_t>(l)].transpose();
    bgrad(l) = dz.rowwise().sum();
    if (l > 0) d_act.noalias() = net.weight(l).transpose() * dz;
  }
  return out;
}

// ---------------------------------------------------------------- learner

PpoLearner::PpoLearner(PolicyNetwork net, PpoConfig config)
    : net_(std::move(net)), config_(std::move(config)), rng_(derive_seed(config_.seed, 2)) {
  config_.validate();
  adam_m_.assign(net_.parameter_count(), 0.0);
  adam_v_.assign(net_.parameter_count(), 0.0);
}

void PpoLearner::apply_gradient(ParameterVector& grad) {
  auto params = net_.parameters();
  if (config_.optimizer == OptimizerKind::kSgd) {
    for (std::size_t k = 0; k < grad.size(); ++k) params[k] -= config_.learning_rate * grad[k];
    return;
  }
  ++adam_step_;
  const double b1 = config_.adam_beta1;
  const double b2 = config_.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(adam_step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(adam_step_));
  for (std::size_t k = 0; k < grad.size(); ++k) {
    adam_m_[k] = b1 * adam_m_[k] + (1.0 - b1) * grad[k];
    adam_v_[k] = b2 * adam_v_[k] + (1.0 - b2) * grad[k] * grad[k];
    const double m_hat = adam_m_[k] / c1;
    const double v_hat = adam_v_[k] / c2;
    params[k] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.adam_epsilon);
  }
}

UpdateStats PpoLearner::update(const RolloutBuffer& buffer) {
  const auto n = static_cast<int>(buffer.size());
  if (n < config_.minibatch_size)
    throw Error("rollout buffer smaller than one minibatch");
  const Advantages adv = compute_advantages(buffer, config_.gamma, config_.gae_lambda);
  const Eigen::VectorXd norm_adv = normalize_advantages(adv.advantages);
  const LossCoefficients coeff{config_.clip_epsilon, config_.value_loss_coeff, config_.entropy_coeff};
  const int in = net_.shape().input_size();
  const int actions = net_.shape().action_count();

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  UpdateStats stats;
  ParameterVector grad;
  for (int epoch = 0; epoch < config_.update_epochs; ++epoch) {
    for (int k = n - 1; k > 0; --k)
      std::swap(order[k], order[rng_.uniform_index(static_cast<std::uint64_t>(k) + 1)]);
    for (int start = 0; start < n; start += config_.minibatch_size) {
      const int m = std::min(config_.minibatch_size, n - start);
      PpoBatch batch;
      batch.inputs.resize(in, m);
      batch.masks.resize(static_cast<std::size_t>(actions) * m);
      batch.actions.resize(static_cast<std::size_t>(m));
      batch.old_log_probs.resize(m);
      batch.advantages.resize(m);
      batch.returns.resize(m);
      for (int b = 0; b < m; ++b) {
        const int idx = order[static_cast<std::size_t>(start + b)];
        const Transition& tr = buffer.transitions[static_cast<std::size_t>(idx)];
        batch.inputs.col(b) =
            Eigen::Map<const Eigen::VectorXf>(tr.observation.data(), in).cast<double>();
        std::copy(tr.mask.begin(), tr.mask.end(),
                  batch.masks.begin() + static_cast<std::ptrdiff_t>(b) * actions);
        batch.actions[static_cast<std::size_t>(b)] = tr.action;
        batch.old_log_probs(b) = tr.log_prob;
        batch.advantages(b) = norm_adv(idx);
        batch.returns(b) = adv.returns(idx);
      }
      const LossTerms loss = ppo_loss(net_, batch, coeff, &grad);
      if (!std::isfinite(loss.total)) throw DivergenceError("non-finite PPO loss");
      double sq = 0.0;
      for (double g : grad) sq += g * g;
      const double norm = std::sqrt(sq);
      if (!std::isfinite(norm)) throw DivergenceError("non-finite gradient");
      if (norm > config_.max_grad_norm) {
        const double scale = config_.max_grad_norm / (norm + 1e-12);
        for (double& g : grad) g *= scale;
      }
      apply_gradient(grad);
      if (!net_.all_finite()) throw DivergenceError("non-finite parameters after update");

      stats.policy_loss += loss.policy_loss;
      stats.value_loss += loss.value_loss;
      stats.clip_fraction += loss.clip_fraction;
      stats.entropy += loss.entropy;
      stats.approx_kl += loss.approx_kl;
      stats.grad_norm += norm;
      ++stats.minibatches;
    }
  }
  const double inv = 1.0 / stats.minibatches;
  stats.policy_loss *= inv;
  stats.value_loss *= inv;
  stats.clip_fraction *= inv;
  stats.entropy *= inv;
  stats.approx_kl *= inv;
  stats.grad_norm *= inv;
  return stats;
}

// ---------------------------------------------------------------- training

std::string curve_csv(const std::vector<CurveRow>& rows) {
  std::string out = "iteration,env_steps,mean_reward,eval_coverage,eval_capacity\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%lld,%.6g,%.6g,%.6g\n", r.iteration,
                  static_cast<long long>(r.env_steps), r.mean_reward, r.eval_coverage,
                  r.eval_capacity);
    out += buf;
  }
  return out;
}

namespace {

struct GreedyEpisode {
  std::vector<Coord> placements;
  NetworkMetrics metrics;
};

GreedyEpisode run_greedy(const PolicyNetwork& net, std::shared_ptr<const SiteMap> map,
                         const RadioConfig& radio, int horizon, TwinCache* cache) {
  EpisodeState state = reset(std::move(map), radio, horizon);
  const RewardWeights weights = preset("coverage_only");
  Observation obs = observe(state);
  GreedyEpisode out;
  for (int t = 0; t < horizon; ++t) {
    StepResult sr = step(state, act_greedy(net, obs), weights, cache);
    obs = std::move(sr.observation);
    out.metrics = sr.metrics;
  }
  out.placements = state.placements;
  return out;
}

}  // namespace

std::vector<Coord> deploy_greedy(const PolicyNetwork& net, std::shared_ptr<const SiteMap> map,
                                 const RadioConfig& radio, int horizon, TwinCache* cache) {
  return run_greedy(net, std::move(map), radio, horizon, cache).placements;
}

std::pair<double, double> evaluate_policy(const PolicyNetwork& net,
                                          const std::vector<std::shared_ptr<const SiteMap>>& maps,
                                          const RadioConfig& radio, int horizon,
                                          TwinCache* cache) {
  double cov = 0.0;
  double cap = 0.0;
  for (const auto& map : maps) {
    const NetworkMetrics m = run_greedy(net, map, radio, horizon, cache).metrics;
    cov += m.coverage;
    cap += m.capacity;
  }
  const double n = static_cast<double>(maps.size());
  return {cov / n, cap / n};
}

TrainResult train(const TrainSetup& setup, const IterationCallback& on_iteration) {
  const PpoConfig& cfg = setup.ppo;
  cfg.validate();
  setup.weights.validate();
  if (setup.train_maps.empty()) throw Error("training needs at least one map");
  const SiteMap& first = *setup.train_maps.front();
  for (const auto* split : {&setup.train_maps, &setup.eval_maps})
    for (const auto& m : *split)
      if (m->width() != first.width() || m->height() != first.height())
        throw Error("all maps in a training corpus must share one shape");
  for (const auto& e : setup.eval_maps)
    for (const auto& t : setup.train_maps)
      if (e->map_id() == t->map_id()) throw Error("train and eval splits share a map");
  if (setup.horizon < 1) throw Error("horizon must be at least 1");
  if (setup.rollout_batch < 1) throw Error("rollout_batch must be positive");
  const auto& eval_maps = setup.eval_maps.empty() ? setup.train_maps : setup.eval_maps;

  NetworkShape shape{first.width(), first.height(), cfg.hidden};
  PpoLearner learner(PolicyNetwork(shape, derive_seed(cfg.seed, 1)), cfg);
  Xoshiro256 rng(derive_seed(cfg.seed, 3));

  const int horizon = setup.horizon;
  const int actions = shape.action_count();
  const std::int64_t iterations = (cfg.total_env_steps + cfg.rollout_size - 1) / cfg.rollout_size;
  const int episodes_per_iter = (cfg.rollout_size + horizon - 1) / horizon;

  TrainResult result{learner.network(), {}, false, {}};
  std::int64_t env_steps = 0;
  for (std::int64_t it = 1; it <= iterations; ++it) {
    RolloutBuffer buffer;
    buffer.transitions.reserve(static_cast<std::size_t>(episodes_per_iter) * horizon);
    double reward_sum = 0.0;
    try {
      for (int done_eps = 0; done_eps < episodes_per_iter;) {
        const int batch = std::min(setup.rollout_batch, episodes_per_iter - done_eps);
        std::vector<EpisodeState> states;
        std::vector<Observation> obs;
        for (int e = 0; e < batch; ++e) {
          const auto& map = setup.train_maps[rng.uniform_index(setup.train_maps.size())];
          states.push_back(reset(map, setup.radio, horizon));
          obs.push_back(observe(states.back()));
        }
        std::vector<std::vector<Transition>> episodes(static_cast<std::size_t>(batch));
        for (int t = 0; t < horizon; ++t) {
          std::vector<std::uint8_t> masks;
          masks.reserve(static_cast<std::size_t>(actions) * batch);
          for (const auto& o : obs) masks.insert(masks.end(), o.action_mask.begin(), o.action_mask.end());
          const BatchForward f = forward_batch(learner.network(), observation_matrix(obs), masks);
          for (int e = 0; e < batch; ++e) {
            const SampledAction act = sample_action(f.logits.col(e), rng);
            Transition tr;
            tr.observation = obs[static_cast<std::size_t>(e)].flatten();
            tr.mask = obs[static_cast<std::size_t>(e)].action_mask;
            tr.action = act.index;
            tr.log_prob = act.log_prob;
            tr.value = f.values(e);
            StepResult sr = step(states[static_cast<std::size_t>(e)],
                                 {act.index / shape.map_width, act.index % shape.map_width},
                                 setup.weights, setup.cache);
            tr.reward = sr.reward;
            tr.done = sr.done;
            reward_sum += sr.reward;
            obs[static_cast<std::size_t>(e)] = std::move(sr.observation);
            episodes[static_cast<std::size_t>(e)].push_back(std::move(tr));
          }
        }
        for (auto& ep : episodes)
          for (auto& tr : ep) buffer.transitions.push_back(std::move(tr));
        done_eps += batch;
      }
      env_steps += static_cast<std::int64_t>(buffer.size());

      PolicyNetwork last_finite = learner.network();
      UpdateStats stats;
      try {
        stats = learner.update(buffer);
      } catch (const DivergenceError&) {
        learner.network() = std::move(last_finite);
        throw;
      }
      const auto [cov, cap] = evaluate_policy(learner.network(), eval_maps, setup.radio, horizon, setup.cache);
      CurveRow row{static_cast<int>(it), env_steps, reward_sum / episodes_per_iter, cov, cap};
      result.curve.push_back(row);
      if (on_iteration) on_iteration(row, stats, learner.network());
    } catch (const DivergenceError& e) {
      result.network = learner.network();
      result.diverged = true;
      result.message = e.what();
      return result;
    }
  }
  result.network = learner.network();
  return result;
}

}  // namespace bsplace
