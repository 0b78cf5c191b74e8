#include "bsplace/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "bsplace/error.hpp"
#include "bsplace/image.hpp"

namespace bsplace {

namespace {

std::string trim(std::string_view s) {
  const auto ws = " \t\r";
  const auto a = s.find_first_not_of(ws);
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(ws);
  return std::string(s.substr(a, b - a + 1));
}

std::vector<std::string> split_list(const std::string& v, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto at = v.find(sep, start);
    std::string part = trim(std::string_view(v).substr(start, at == std::string::npos ? std::string::npos : at - start));
    if (!part.empty()) out.push_back(std::move(part));
    if (at == std::string::npos) break;
    start = at + 1;
  }
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(const std::string& key, const std::string& v) {
  double d = 0.0;
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
  if (ec != std::errc{} || end != v.data() + v.size())
    throw ConfigError("invalid number for " + key + ": '" + v + "'");
  return d;
}

template <class Int>
Int to_int(const std::string& key, const std::string& v) {
  Int d{};
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
  if (ec != std::errc{} || end != v.data() + v.size())
    throw ConfigError("invalid integer for " + key + ": '" + v + "'");
  return d;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("invalid boolean for " + key + ": '" + v + "'");
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t k = 0; k < parts.size(); ++k) out += (k ? "," : "") + parts[k];
  return out;
}

SiteMap load_map_file(const std::filesystem::path& path, double cell_size) {
  const auto raster = read_file(path);
  auto sidecar = [&](const char* tag) -> std::optional<std::vector<std::uint8_t>> {
    auto p = path;
    p.replace_extension(std::string(".") + tag + ".pgm");
    if (!std::filesystem::exists(p)) return std::nullopt;
    return read_file(p);
  };
  const auto dep = sidecar("deployable");
  const auto rec = sidecar("receiver");
  std::optional<std::span<const std::uint8_t>> dep_span, rec_span;
  if (dep) dep_span = std::span<const std::uint8_t>(*dep);
  if (rec) rec_span = std::span<const std::uint8_t>(*rec);
  return load_sitemap(raster, cell_size, dep_span, rec_span);
}

MapList build_split(const CorpusSpec& c, const std::vector<std::filesystem::path>& files,
                    std::uint64_t seed, int count) {
  MapList out;
  if (!files.empty()) {
    for (const auto& f : files) out.push_back(std::make_shared<const SiteMap>(load_map_file(f, c.cell_size)));
    return out;
  }
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k)
    out.push_back(std::make_shared<const SiteMap>(generate_synthetic(
        seed + static_cast<std::uint64_t>(k), c.width, c.height, c.cell_size, c.density, c.building_size)));
  return out;
}

}  // namespace

MapList build_train_split(const CorpusSpec& corpus) {
  return build_split(corpus, corpus.train_files, corpus.train_seed, corpus.train_count);
}

MapList build_test_split(const CorpusSpec& corpus) {
  return build_split(corpus, corpus.test_files, corpus.test_seed, corpus.test_count);
}

// ------------------------------------------------------------------ config

void ExperimentConfig::set(const std::string& key, const std::string& value, const std::string& where) {
  try {
    CorpusSpec& c = corpus;
    if (key == "map_width") c.width = to_int<int>(key, value);
    else if (key == "map_height") c.height = to_int<int>(key, value);
    else if (key == "cell_size") c.cell_size = to_double(key, value);
    else if (key == "density") c.density = to_double(key, value);
    else if (key == "building_min") c.building_size.min = to_int<int>(key, value);
    else if (key == "building_max") c.building_size.max = to_int<int>(key, value);
    else if (key == "train_seed") c.train_seed = to_int<std::uint64_t>(key, value);
    else if (key == "test_seed") c.test_seed = to_int<std::uint64_t>(key, value);
    else if (key == "train_count") c.train_count = to_int<int>(key, value);
    else if (key == "test_count") c.test_count = to_int<int>(key, value);
    else if (key == "train_files" || key == "test_files") {
      auto& dst = key == "train_files" ? c.train_files : c.test_files;
      dst.clear();
      for (const auto& f : split_list(value, ',')) dst.emplace_back(f);
    }
    else if (key == "carrier_freq_hz") radio.carrier_freq_hz = to_double(key, value);
    else if (key == "tx_power_dbm") radio.tx_power_dbm = to_double(key, value);
    else if (key == "coverage_threshold_dbm") radio.coverage_threshold_dbm = to_double(key, value);
    else if (key == "wall_loss_db") radio.wall_loss_db = to_double(key, value);
    else if (key == "excess_loss_cap_db") radio.excess_loss_cap_db = to_double(key, value);
    else if (key == "bandwidth_hz") radio.bandwidth_hz = to_double(key, value);
    else if (key == "min_distance_m") min_distance_m = to_double(key, value);
    else if (key == "noise_variance_w") noise_variance_w = to_double(key, value);
    else if (key == "reward_preset") {
      preset(value);  // validates the name
      reward_preset = value;
    }
    else if (key == "pathgain_scale") {
      if (value == "auto") pathgain_scale.reset();
      else pathgain_scale = to_double(key, value);
    }
    else if (key == "calibration_samples") calibration_samples = to_int<int>(key, value);
    else if (key == "horizon") horizon = to_int<int>(key, value);
    else if (key == "rollout_batch") rollout_batch = to_int<int>(key, value);
    else if (key == "cache_capacity") cache_capacity = to_int<std::size_t>(key, value);
    else if (key == "use_cache") use_cache = to_bool(key, value);
    else if (key == "search_budget") search_budget = to_int<std::uint64_t>(key, value);
    else if (key == "greedy_metric") greedy_metric = parse_search_metric(value);
    else if (key == "schemes") {
      schemes = split_list(value, ',');
      static const std::set<std::string> known = {"heuristic", "autobs", "exhaustive_v",
                                                  "exhaustive_c", "greedy"};
      for (const auto& s : schemes)
        if (!known.contains(s)) throw ConfigError("unknown scheme '" + s + "'");
    }
    else if (key == "n_bs") {
      n_bs.clear();
      for (const auto& s : split_list(value, ',')) n_bs.push_back(to_int<int>(key, s));
    }
    else if (key == "checkpoint") checkpoint = value;
    else if (key == "seed") {
      seed = to_int<std::uint64_t>(key, value);
      ppo.seed = seed;
    }
    else if (!ppo.set(key, value)) throw ConfigError("unknown key '" + key + "'");
  } catch (const ConfigError& e) {
    throw ConfigError(where + e.what());
  } catch (const Error& e) {
    throw ConfigError(where + e.what());
  }
}

ExperimentConfig ExperimentConfig::parse(std::string_view text) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  for (int number = 1; std::getline(in, line); ++number) {
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const std::string where = "line " + std::to_string(number) + ": ";
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "missing key");
    if (!seen.insert(key).second) throw ConfigError(where + "duplicate key '" + key + "'");
    cfg.set(key, value, where);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse(text.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

RadioConfig ExperimentConfig::resolved_radio() const {
  RadioConfig r = RadioConfig::standard(corpus.cell_size);
  r.carrier_freq_hz = radio.carrier_freq_hz;
  r.tx_power_dbm = radio.tx_power_dbm;
  r.coverage_threshold_dbm = radio.coverage_threshold_dbm;
  r.wall_loss_db = radio.wall_loss_db;
  r.excess_loss_cap_db = radio.excess_loss_cap_db;
  r.bandwidth_hz = radio.bandwidth_hz;
  r.min_distance_m = min_distance_m.value_or(corpus.cell_size / 2.0);
  r.noise_variance_w = noise_variance_w.value_or(r.threshold_watts() / 4.0);
  return r;
}

RewardWeights ExperimentConfig::resolved_weights(const MapList& calibration_maps) const {
  RewardWeights w = preset(reward_preset);
  if (pathgain_scale) {
    w.pathgain_scale = *pathgain_scale;
  } else if (w.nu3 > 0.0) {
    if (calibration_maps.empty()) throw Error("pathgain calibration needs at least one map");
    std::vector<SiteMap> maps;
    const std::size_t n = std::min<std::size_t>(calibration_maps.size(), 64);
    for (std::size_t k = 0; k < n; ++k) maps.push_back(*calibration_maps[k]);
    w.pathgain_scale = calibrate_pathgain_scale(maps, resolved_radio(), calibration_samples, seed);
  }
  return w;
}

std::string ExperimentConfig::to_text() const {
  std::vector<std::pair<std::string, std::string>> kv;
  auto files = [](const std::vector<std::filesystem::path>& f) {
    std::vector<std::string> s;
    for (const auto& p : f) s.push_back(p.string());
    return join(s);
  };
  kv.emplace_back("map_width", std::to_string(corpus.width));
  kv.emplace_back("map_height", std::to_string(corpus.height));
  kv.emplace_back("cell_size", fmt(corpus.cell_size));
  kv.emplace_back("density", fmt(corpus.density));
  kv.emplace_back("building_min", std::to_string(corpus.building_size.min));
  kv.emplace_back("building_max", std::to_string(corpus.building_size.max));
  kv.emplace_back("train_seed", std::to_string(corpus.train_seed));
  kv.emplace_back("test_seed", std::to_string(corpus.test_seed));
  kv.emplace_back("train_count", std::to_string(corpus.train_count));
  kv.emplace_back("test_count", std::to_string(corpus.test_count));
  if (!corpus.train_files.empty()) kv.emplace_back("train_files", files(corpus.train_files));
  if (!corpus.test_files.empty()) kv.emplace_back("test_files", files(corpus.test_files));
  kv.emplace_back("carrier_freq_hz", fmt(radio.carrier_freq_hz));
  kv.emplace_back("tx_power_dbm", fmt(radio.tx_power_dbm));
  kv.emplace_back("coverage_threshold_dbm", fmt(radio.coverage_threshold_dbm));
  kv.emplace_back("wall_loss_db", fmt(radio.wall_loss_db));
  kv.emplace_back("excess_loss_cap_db", fmt(radio.excess_loss_cap_db));
  kv.emplace_back("bandwidth_hz", fmt(radio.bandwidth_hz));
  if (min_distance_m) kv.emplace_back("min_distance_m", fmt(*min_distance_m));
  if (noise_variance_w) kv.emplace_back("noise_variance_w", fmt(*noise_variance_w));
  kv.emplace_back("reward_preset", reward_preset);
  kv.emplace_back("pathgain_scale", pathgain_scale ? fmt(*pathgain_scale) : "auto");
  kv.emplace_back("calibration_samples", std::to_string(calibration_samples));
  kv.emplace_back("horizon", std::to_string(horizon));
  kv.emplace_back("rollout_batch", std::to_string(rollout_batch));
  kv.emplace_back("cache_capacity", std::to_string(cache_capacity));
  kv.emplace_back("use_cache", use_cache ? "true" : "false");
  kv.emplace_back("search_budget", std::to_string(search_budget));
  kv.emplace_back("greedy_metric", std::string(to_string(greedy_metric)));
  kv.emplace_back("schemes", join(schemes));
  std::vector<std::string> n;
  for (int v : n_bs) n.push_back(std::to_string(v));
  kv.emplace_back("n_bs", join(n));
  kv.emplace_back("checkpoint", checkpoint.string());
  kv.emplace_back("seed", std::to_string(seed));
  for (auto& [k, v] : ppo.to_lines())
    if (k != "seed") kv.emplace_back(k, v);

  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

void ExperimentConfig::validate() const {
  const CorpusSpec& c = corpus;
  if (c.width < 1 || c.height < 1) throw ConfigError("map dimensions must be positive");
  if (!(c.cell_size > 0.0)) throw ConfigError("cell_size must be positive");
  if (!(c.density >= 0.0 && c.density < 0.9)) throw ConfigError("density must lie in [0, 0.9)");
  if (c.building_size.min < 1 || c.building_size.max < c.building_size.min)
    throw ConfigError("building size range must satisfy 1 <= building_min <= building_max");
  if (c.train_count < 0 || c.test_count < 0) throw ConfigError("split sizes must be >= 0");
  if (calibration_samples < 1) throw ConfigError("calibration_samples must be positive");
  if (horizon < 1) throw ConfigError("horizon must be positive");
  if (rollout_batch < 1) throw ConfigError("rollout_batch must be positive");
  if (cache_capacity < 1) throw ConfigError("cache_capacity must be positive");
  if (search_budget < 1) throw ConfigError("search_budget must be at least 1");
  if (schemes.empty()) throw ConfigError("schemes must not be empty");
  if (n_bs.empty()) throw ConfigError("n_bs must not be empty");
  for (int n : n_bs)
    if (n < 1) throw ConfigError("n_bs entries must be positive");
  if (pathgain_scale && !(*pathgain_scale >= 0.0)) throw ConfigError("pathgain_scale must be >= 0");
  try {
    resolved_radio().validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  ppo.validate();
}

// ------------------------------------------------------------- run records

std::string format_placements(const std::vector<Coord>& placements) {
  std::string out;
  for (std::size_t k = 0; k < placements.size(); ++k) out += (k ? ";" : "") + to_string(placements[k]);
  return out;
}

std::vector<Coord> parse_placements(std::string_view text) {
  std::vector<Coord> out;
  for (const auto& item : split_list(std::string(text), ';')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("placement '" + item + "' is not i:j");
    const std::string i = trim(std::string_view(item).substr(0, colon));
    const std::string j = trim(std::string_view(item).substr(colon + 1));
    out.push_back({to_int<int>("placement row", i), to_int<int>("placement column", j)});
  }
  if (out.empty()) throw ConfigError("no placements given");
  return out;
}

std::string format_map_id(std::uint64_t id) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(id));
  return buf;
}

std::string csv_row(const RunRecord& r) {
  char tail[64];
  std::snprintf(tail, sizeof tail, "%.6g,%llu", r.elapsed_s, static_cast<unsigned long long>(r.evaluations));
  return r.scheme + "," + std::to_string(r.n_bs) + "," + format_map_id(r.map_id) + "," +
         format_placements(r.placements) + "," + csv_fragment(r.metrics) + "," + tail;
}

std::string run_records_csv(const std::vector<RunRecord>& rows) {
  std::string out(kRunRecordHeader);
  out += '\n';
  for (const auto& r : rows) out += csv_row(r) + '\n';
  return out;
}

}  // namespace bsplace
