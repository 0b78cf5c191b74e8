#include "bsplace/policy.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

#include "bsplace/error.hpp"
#include "bsplace/image.hpp"
#include "bsplace/rng.hpp"

namespace bsplace {

PolicyNetwork::PolicyNetwork(NetworkShape shape, std::uint64_t seed)
    : shape_(std::move(shape)), init_seed_(seed) {
  if (shape_.map_width <= 0 || shape_.map_height <= 0)
    throw Error("network shape needs positive map dimensions");
  if (shape_.hidden.empty()) throw Error("network needs at least one hidden layer");
  for (int h : shape_.hidden)
    if (h <= 0) throw Error("hidden layer widths must be positive");
  layout();

  Xoshiro256 rng(seed);
  for (int l = 0; l < layer_count(); ++l) {
    const double gain = l < hidden_count() ? 5.0 / 3.0 : (l == policy_layer() ? 0.01 : 1.0);
    const double stddev = gain / std::sqrt(static_cast<double>(cols(l)));
    auto w = weight(l);
    for (int c = 0; c < w.cols(); ++c)
      for (int r = 0; r < w.rows(); ++r) w(r, c) = stddev * rng.normal();
    bias(l).setZero();
  }
}

void PolicyNetwork::layout() {
  layers_.clear();
  std::size_t offset = 0;
  int in = shape_.input_size();
  auto add = [&](int rows, int cols) {
    layers_.push_back({rows, cols, offset});
    offset += static_cast<std::size_t>(rows) * cols + rows;
  };
  for (int h : shape_.hidden) {
    add(h, in);
    in = h;
  }
  add(shape_.action_count(), in);
  add(1, in);
  params_.assign(offset, 0.0);
}

Eigen::Map<const Eigen::MatrixXd> PolicyNetwork::weight(int layer) const {
  return {params_.data() + weight_offset(layer), rows(layer), cols(layer)};
}
Eigen::Map<const Eigen::VectorXd> PolicyNetwork::bias(int layer) const {
  return {params_.data() + bias_offset(layer), rows(layer)};
}
Eigen::Map<Eigen::MatrixXd> PolicyNetwork::weight(int layer) {
  return {params_.data() + weight_offset(layer), rows(layer), cols(layer)};
}
Eigen::Map<Eigen::VectorXd> PolicyNetwork::bias(int layer) {
  return {params_.data() + bias_offset(layer), rows(layer)};
}

bool PolicyNetwork::all_finite() const {
  for (double v : params_)
    if (!std::isfinite(v)) return false;
  return true;
}

BatchForward forward_batch(const PolicyNetwork& net, const Eigen::MatrixXd& inputs,
                           std::span<const std::uint8_t> masks) {
  const auto& shape = net.shape();
  if (inputs.rows() != shape.input_size())
    throw Error("observation size " + std::to_string(inputs.rows()) +
                " does not match network input " + std::to_string(shape.input_size()));
  const Eigen::Index batch = inputs.cols();
  const int actions = shape.action_count();
  if (masks.size() != static_cast<std::size_t>(actions) * static_cast<std::size_t>(batch))
    throw Error("action mask size does not match the batch");

  BatchForward f;
  f.activations.reserve(static_cast<std::size_t>(net.hidden_count()) + 1);
  f.activations.push_back(inputs);
  for (int l = 0; l < net.hidden_count(); ++l) {
    Eigen::MatrixXd z = net.weight(l) * f.activations.back();
    z.colwise() += net.bias(l);
    f.activations.push_back(z.array().tanh().matrix());
  }
  const Eigen::MatrixXd& top = f.activations.back();
  if (!top.allFinite()) throw DivergenceError("non-finite hidden activation");

  f.logits = net.weight(net.policy_layer()) * top;
  f.logits.colwise() += net.bias(net.policy_layer());
  f.values = net.weight(net.value_layer()) * top;
  f.values.array() += net.bias(net.value_layer())(0);

  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  for (Eigen::Index b = 0; b < batch; ++b) {
    const std::uint8_t* m = masks.data() + b * actions;
    bool any = false;
    for (int a = 0; a < actions; ++a) {
      if (!m[a]) {
        f.logits(a, b) = kNegInf;
      } else {
        any = true;
        if (!std::isfinite(f.logits(a, b))) throw DivergenceError("non-finite policy logit");
      }
    }
    if (!any) throw Error("action mask admits no cell");
  }
  if (!f.values.allFinite()) throw DivergenceError("non-finite value estimate");
  return f;
}

Eigen::MatrixXd observation_matrix(std::span<const Observation> batch) {
  if (batch.empty()) return {};
  Eigen::MatrixXd x(batch[0].input_size(), static_cast<Eigen::Index>(batch.size()));
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto flat = batch[b].flatten();
    if (static_cast<Eigen::Index>(flat.size()) != x.rows())
      throw Error("observations in a batch must share one shape");
    for (Eigen::Index r = 0; r < x.rows(); ++r) x(r, static_cast<Eigen::Index>(b)) = flat[r];
  }
  return x;
}

PolicyOutput forward(const PolicyNetwork& net, const Observation& obs) {
  if (obs.width != net.shape().map_width || obs.height != net.shape().map_height)
    throw Error("observation shape does not match the network");
  const Observation one[] = {obs};
  BatchForward f = forward_batch(net, observation_matrix(one), obs.action_mask);
  return {f.logits.col(0), f.values(0)};
}

Eigen::VectorXd masked_exp(const Eigen::Ref<const Eigen::VectorXd>& masked_logits, double max_logit) {
  // Vectorized exp does not return exactly 0 for -inf, hence the select.
  const auto z = masked_logits.array();
  return (z == -std::numeric_limits<double>::infinity())
      .select(0.0, (z - max_logit).exp())
      .matrix();
}

Eigen::VectorXd action_probabilities(const Eigen::VectorXd& masked_logits) {
  const double mx = masked_logits.maxCoeff();
  Eigen::VectorXd p = masked_exp(masked_logits, mx);
  p /= p.sum();
  return p;
}

namespace {

class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(const std::string& s) { out.insert(out.end(), s.begin(), s.end()); }
  std::vector<std::uint8_t> out;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> b) : b_(b) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(b_[pos_ + k]) << (8 * k);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string raw(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw Error("checkpoint is truncated");
  }
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

std::string join_hidden(const std::vector<int>& hidden) {
  std::string s;
  for (std::size_t k = 0; k < hidden.size(); ++k) {
    if (k) s += ",";
    s += std::to_string(hidden[k]);
  }
  return s;
}

}  // namespace

std::vector<std::uint8_t> checkpoint_bytes(
    const PolicyNetwork& net, const std::vector<std::pair<std::string, std::string>>& extra) {
  ByteWriter w;
  w.raw("ABSP");
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(net.layer_count()));
  for (int l = 0; l < net.layer_count(); ++l) {
    w.u32(static_cast<std::uint32_t>(net.rows(l)));
    w.u32(static_cast<std::uint32_t>(net.cols(l)));
    const auto wt = net.weight(l);
    for (int r = 0; r < wt.rows(); ++r)
      for (int c = 0; c < wt.cols(); ++c) w.f32(static_cast<float>(wt(r, c)));
    const auto b = net.bias(l);
    for (int r = 0; r < b.size(); ++r) w.f32(static_cast<float>(b(r)));
  }
  std::vector<std::pair<std::string, std::string>> lines = {
      {"map_width", std::to_string(net.shape().map_width)},
      {"map_height", std::to_string(net.shape().map_height)},
      {"hidden", join_hidden(net.shape().hidden)},
      {"init_seed", std::to_string(net.init_seed())}};
  lines.insert(lines.end(), extra.begin(), extra.end());
  w.u32(static_cast<std::uint32_t>(lines.size()));
  for (const auto& [k, v] : lines) {
    const std::string line = k + "=" + v;
    w.u32(static_cast<std::uint32_t>(line.size()));
    w.raw(line);
  }
  return std::move(w.out);
}

PolicyNetwork load_checkpoint_bytes(std::span<const std::uint8_t> bytes,
                                    std::vector<std::pair<std::string, std::string>>* lines_out) {
  ByteReader r(bytes);
  if (r.raw(4) != "ABSP") throw Error("checkpoint magic mismatch");
  if (const auto v = r.u32(); v != kCheckpointVersion)
    throw Error("unsupported checkpoint version " + std::to_string(v));
  const std::uint32_t n_layers = r.u32();
  if (n_layers < 3 || n_layers > 64) throw Error("checkpoint layer count out of range");

  struct RawLayer {
    std::uint32_t rows, cols;
    std::vector<float> w, b;
  };
  std::vector<RawLayer> raw(n_layers);
  for (auto& l : raw) {
    l.rows = r.u32();
    l.cols = r.u32();
    if (l.rows == 0 || l.cols == 0 || static_cast<std::uint64_t>(l.rows) * l.cols > (1ULL << 28))
      throw Error("checkpoint layer dimensions out of range");
    l.w.resize(static_cast<std::size_t>(l.rows) * l.cols);
    for (auto& x : l.w) x = r.f32();
    l.b.resize(l.rows);
    for (auto& x : l.b) x = r.f32();
  }
  std::vector<std::pair<std::string, std::string>> lines(r.u32());
  for (auto& [k, v] : lines) {
    const std::string line = r.raw(r.u32());
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("checkpoint metadata line without '='");
    k = line.substr(0, eq);
    v = line.substr(eq + 1);
  }
  auto lookup = [&](const std::string& key) -> std::string {
    for (const auto& [k, v] : lines)
      if (k == key) return v;
    throw Error("checkpoint metadata lacks " + key);
  };

  NetworkShape shape;
  shape.map_width = std::stoi(lookup("map_width"));
  shape.map_height = std::stoi(lookup("map_height"));
  shape.hidden.clear();
  for (std::uint32_t l = 0; l + 2 < n_layers; ++l) shape.hidden.push_back(static_cast<int>(raw[l].rows));
  if (join_hidden(shape.hidden) != lookup("hidden"))
    throw Error("checkpoint hidden sizes disagree with metadata");

  PolicyNetwork net(shape, std::stoull(lookup("init_seed")));
  for (int l = 0; l < net.layer_count(); ++l) {
    if (raw[l].rows != static_cast<std::uint32_t>(net.rows(l)) ||
        raw[l].cols != static_cast<std::uint32_t>(net.cols(l)))
      throw Error("checkpoint layer " + std::to_string(l) + " has inconsistent dimensions");
    auto wt = net.weight(l);
    for (int rr = 0; rr < wt.rows(); ++rr)
      for (int c = 0; c < wt.cols(); ++c) wt(rr, c) = raw[l].w[static_cast<std::size_t>(rr) * wt.cols() + c];
    auto b = net.bias(l);
    for (int rr = 0; rr < b.size(); ++rr) b(rr) = raw[l].b[rr];
  }
  if (!net.all_finite()) throw Error("checkpoint holds non-finite parameters");
  if (lines_out) *lines_out = std::move(lines);
  return net;
}

void save_checkpoint(const std::filesystem::path& path, const PolicyNetwork& net,
                     const std::vector<std::pair<std::string, std::string>>& extra) {
  write_file(path, checkpoint_bytes(net, extra));
}

PolicyNetwork load_checkpoint(const std::filesystem::path& path,
                              std::vector<std::pair<std::string, std::string>>* lines) {
  const auto bytes = read_file(path);
  return load_checkpoint_bytes(bytes, lines);
}

}  // namespace bsplace
