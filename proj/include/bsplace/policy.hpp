#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bsplace/env.hpp"

namespace bsplace {

// Flat parameter storage. A fixed base alignment keeps Eigen's vectorized
// reductions in the same order from run to run.
using ParameterVector = std::vector<double, Eigen::aligned_allocator<double>>;

struct NetworkShape {
  int map_width = 0;
  int map_height = 0;
  std::vector<int> hidden = {128, 128, 128, 128};

  int input_size() const { return 2 * map_width * map_height + 1; }
  int action_count() const { return map_width * map_height; }
  friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

// Fully connected tanh network with a masked-categorical policy head over
// cells and a scalar value head, both reading the last hidden layer.
//
// Parameters live in one flat buffer. Layer order: hidden layers, policy
// head, value head; each layer stores its weight matrix (rows = outputs,
// column-major) followed by its bias.
//
// Initialisation: weights ~ N(0, gain^2 / fan_in), biases 0, with gain 5/3
// for tanh layers, 0.01 for the policy head and 1 for the value head.
class PolicyNetwork {
 public:
  PolicyNetwork() = default;
  PolicyNetwork(NetworkShape shape, std::uint64_t seed);

  const NetworkShape& shape() const { return shape_; }
  std::uint64_t init_seed() const { return init_seed_; }
  int layer_count() const { return static_cast<int>(layers_.size()); }
  int hidden_count() const { return static_cast<int>(shape_.hidden.size()); }
  int policy_layer() const { return hidden_count(); }
  int value_layer() const { return hidden_count() + 1; }

  std::size_t parameter_count() const { return params_.size(); }
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  int rows(int layer) const { return layers_[layer].rows; }
  int cols(int layer) const { return layers_[layer].cols; }
  Eigen::Map<const Eigen::MatrixXd> weight(int layer) const;
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const;
  Eigen::Map<Eigen::MatrixXd> weight(int layer);
  Eigen::Map<Eigen::VectorXd> bias(int layer);
  std::size_t weight_offset(int layer) const { return layers_[layer].offset; }
  std::size_t bias_offset(int layer) const {
    return layers_[layer].offset + static_cast<std::size_t>(layers_[layer].rows) * layers_[layer].cols;
  }

  bool all_finite() const;

 private:
  struct Layer {
    int rows = 0;
    int cols = 0;
    std::size_t offset = 0;
  };
  void layout();

  NetworkShape shape_;
  std::uint64_t init_seed_ = 0;
  std::vector<Layer> layers_;
  ParameterVector params_;
};

// Column b of `inputs` is one flattened observation; column b of `masks`
// (action_count x batch, column-major) is its action mask.
struct BatchForward {
  std::vector<Eigen::MatrixXd> activations;  // input, then each hidden output
  Eigen::MatrixXd logits;                    // masked: -inf where inadmissible
  Eigen::RowVectorXd values;
};

BatchForward forward_batch(const PolicyNetwork& net, const Eigen::MatrixXd& inputs,
                           std::span<const std::uint8_t> masks);

struct PolicyOutput {
  Eigen::VectorXd logits;  // masked
  double value = 0.0;
};

// Throws on shape mismatch, an empty mask, or a non-finite activation.
PolicyOutput forward(const PolicyNetwork& net, const Observation& obs);

// exp(logit - max) with exact zeros at masked (-inf) entries.
Eigen::VectorXd masked_exp(const Eigen::Ref<const Eigen::VectorXd>& masked_logits, double max_logit);

// Softmax over masked logits; inadmissible cells get exactly 0.
Eigen::VectorXd action_probabilities(const Eigen::VectorXd& masked_logits);

Eigen::MatrixXd observation_matrix(std::span<const Observation> batch);

// Binary checkpoint: "ABSP", u32 version, u32 layer count, per layer
// (u32 rows, u32 cols, f32 weights row-major, f32 biases), u32 line count,
// then per line u32 byte length + UTF-8 "key=value". The lines always carry
// map_width, map_height, hidden and init_seed ahead of caller-supplied keys.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> checkpoint_bytes(
    const PolicyNetwork& net, const std::vector<std::pair<std::string, std::string>>& extra);
PolicyNetwork load_checkpoint_bytes(std::span<const std::uint8_t> bytes,
                                    std::vector<std::pair<std::string, std::string>>* lines = nullptr);

void save_checkpoint(const std::filesystem::path& path, const PolicyNetwork& net,
                     const std::vector<std::pair<std::string, std::string>>& extra = {});
PolicyNetwork load_checkpoint(const std::filesystem::path& path,
                              std::vector<std::pair<std::string, std::string>>* lines = nullptr);

}  // namespace bsplace
