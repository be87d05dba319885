#include "tdi/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "tdi/errors.hpp"

namespace tdi {

std::string to_string(TimeConvention c) { return c == TimeConvention::RoundTrip ? "round_trip" : "one_way"; }
std::string to_string(BackgroundKind b) { return b == BackgroundKind::Structured ? "structured" : "uniform"; }

double SimConfig::effective_bin_width() const {
  if (bin_width_s > 0.0) return bin_width_s;
  const double factor = time_convention == TimeConvention::RoundTrip ? 2.0 : 1.0;
  return factor * (z_max + margin_m) / (kSpeedOfLight * bins);
}

void SimConfig::validate() const {
  if (!(fov_deg > 0.0 && fov_deg < 180.0)) throw ConfigError("fov_deg must lie in (0, 180)");
  if (img_w < 1 || img_h < 1) throw ConfigError("image dimensions must be positive");
  if (!(z_min > 0.0 && z_max > z_min)) throw ConfigError("require 0 < z_min < z_max");
  if (bins < 2) throw ConfigError("bins must be >= 2");
  if (bin_width_s < 0.0) throw ConfigError("bin_width_s must be >= 0");
  if (!(p0 > 0.0)) throw ConfigError("p0 must be > 0");
  if (irf_dt_s < 0.0) throw ConfigError("irf_dt_s must be >= 0");
  if (noise_level < 0 || noise_level > 3) throw ConfigError("noise_level must be 0..3");
  if (silhouettes < 1 || n_depths < 1 || n_lateral < 1) throw ConfigError("augmentation counts must be >= 1");
  if (!(wall_depth_m > 0.0 && wall_depth_m <= z_max)) throw ConfigError("wall_depth_m must lie in (0, z_max]");
  if (!(reflectivity > 0.0)) throw ConfigError("reflectivity must be > 0");
  if (reflectivity_lo != 0.0 || reflectivity_hi != 0.0) {
    if (!(reflectivity_lo > 0.0 && reflectivity_hi > reflectivity_lo))
      throw ConfigError("reflectivity range requires 0 < lo < hi");
  }
  const double factor = time_convention == TimeConvention::RoundTrip ? 2.0 : 1.0;
  if (bins * effective_bin_width() * kSpeedOfLight / factor < z_max)
    throw ConfigError("histogram span does not cover z_max");
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw ConfigError("validation_fraction must lie in (0, 1)");
  if (!(adam.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  for (int h : hidden)
    if (h < 1) throw ConfigError("hidden layer widths must be >= 1");
}

PresetValues preset(Preset p) {
  PresetValues v{};
  if (p == Preset::Desk) {
    v.sim.img_w = v.sim.img_h = 32;
    v.sim.bins = 2000;
    v.train.epochs = 50;
    v.count = 2000;
  } else {
    v.count = 4000;
  }
  return v;
}

Preset parse_preset(const std::string& name) {
  if (name == "desk") return Preset::Desk;
  if (name == "paper") return Preset::Paper;
  throw ConfigError("unknown preset '" + name + "' (expected desk|paper)");
}

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string{};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    kv[key] = value;
  }
  return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str());
}

namespace {

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': not a number: '" + v + "'");
  }
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw ConfigError("key '" + key + "': not an integer: '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("key '" + key + "': not a boolean: '" + v + "'");
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void apply(const KeyValues& kv, SimConfig& sim, TrainConfig& train, int* count) {
  for (const auto& [k, v] : kv) {
    if (k == "fov_deg") sim.fov_deg = to_double(k, v);
    else if (k == "img_w") sim.img_w = static_cast<int>(to_int(k, v));
    else if (k == "img_h") sim.img_h = static_cast<int>(to_int(k, v));
    else if (k == "z_min") sim.z_min = to_double(k, v);
    else if (k == "z_max") sim.z_max = to_double(k, v);
    else if (k == "bins") sim.bins = static_cast<int>(to_int(k, v));
    else if (k == "bin_width_s") sim.bin_width_s = to_double(k, v);
    else if (k == "margin_m") sim.margin_m = to_double(k, v);
    else if (k == "p0") sim.p0 = to_double(k, v);
    else if (k == "time_convention") {
      if (v == "round_trip") sim.time_convention = TimeConvention::RoundTrip;
      else if (v == "one_way") sim.time_convention = TimeConvention::OneWay;
      else throw ConfigError("time_convention must be round_trip|one_way");
    } else if (k == "irf_dt_s") sim.irf_dt_s = to_double(k, v);
    else if (k == "noise_level") sim.noise_level = static_cast<int>(to_int(k, v));
    else if (k == "seed") sim.seed = train.seed = static_cast<std::uint64_t>(to_int(k, v));
    else if (k == "silhouettes") sim.silhouettes = static_cast<int>(to_int(k, v));
    else if (k == "n_depths") sim.n_depths = static_cast<int>(to_int(k, v));
    else if (k == "n_lateral") sim.n_lateral = static_cast<int>(to_int(k, v));
    else if (k == "floor_y_m") sim.floor_y_m = to_double(k, v);
    else if (k == "background") {
      if (v == "structured") sim.background = BackgroundKind::Structured;
      else if (v == "uniform") sim.background = BackgroundKind::Uniform;
      else throw ConfigError("background must be structured|uniform");
    } else if (k == "wall_depth_m") sim.wall_depth_m = to_double(k, v);
    else if (k == "reflectivity") sim.reflectivity = to_double(k, v);
    else if (k == "reflectivity_lo") sim.reflectivity_lo = to_double(k, v);
    else if (k == "reflectivity_hi") sim.reflectivity_hi = to_double(k, v);
    else if (k == "count") {
      if (!count) throw ConfigError("key 'count' not accepted here");
      *count = static_cast<int>(to_int(k, v));
    } else if (k == "batch_size") train.batch_size = static_cast<int>(to_int(k, v));
    else if (k == "epochs") train.epochs = static_cast<int>(to_int(k, v));
    else if (k == "validation_fraction") train.validation_fraction = to_double(k, v);
    else if (k == "learning_rate") train.adam.learning_rate = to_double(k, v);
    else if (k == "beta1") train.adam.beta1 = to_double(k, v);
    else if (k == "beta2") train.adam.beta2 = to_double(k, v);
    else if (k == "epsilon") train.adam.epsilon = to_double(k, v);
    else if (k == "deterministic") train.deterministic = to_bool(k, v);
    else if (k == "hidden") {
      train.hidden.clear();
      std::istringstream in(v);
      std::string item;
      while (std::getline(in, item, ',')) train.hidden.push_back(static_cast<int>(to_int(k, item)));
    } else {
      throw ConfigError("unknown config key '" + k + "'");
    }
  }
}

KeyValues to_key_values(const SimConfig& s) {
  return {
      {"fov_deg", fmt(s.fov_deg)},
      {"img_w", std::to_string(s.img_w)},
      {"img_h", std::to_string(s.img_h)},
      {"z_min", fmt(s.z_min)},
      {"z_max", fmt(s.z_max)},
      {"bins", std::to_string(s.bins)},
      {"bin_width_s", fmt(s.effective_bin_width())},
      {"margin_m", fmt(s.margin_m)},
      {"p0", fmt(s.p0)},
      {"time_convention", to_string(s.time_convention)},
      {"irf_dt_s", fmt(s.irf_dt_s)},
      {"noise_level", std::to_string(s.noise_level)},
      {"seed", std::to_string(s.seed)},
      {"silhouettes", std::to_string(s.silhouettes)},
      {"n_depths", std::to_string(s.n_depths)},
      {"n_lateral", std::to_string(s.n_lateral)},
      {"floor_y_m", fmt(s.floor_y_m)},
      {"background", to_string(s.background)},
      {"wall_depth_m", fmt(s.wall_depth_m)},
      {"reflectivity", fmt(s.reflectivity)},
      {"reflectivity_lo", fmt(s.reflectivity_lo)},
      {"reflectivity_hi", fmt(s.reflectivity_hi)},
  };
}

KeyValues to_key_values(const TrainConfig& t) {
  std::string hidden;
  for (std::size_t i = 0; i < t.hidden.size(); ++i) hidden += (i ? "," : "") + std::to_string(t.hidden[i]);
  return {
      {"batch_size", std::to_string(t.batch_size)},
      {"epochs", std::to_string(t.epochs)},
      {"validation_fraction", fmt(t.validation_fraction)},
      {"learning_rate", fmt(t.adam.learning_rate)},
      {"beta1", fmt(t.adam.beta1)},
      {"beta2", fmt(t.adam.beta2)},
      {"epsilon", fmt(t.adam.epsilon)},
      {"hidden", hidden},
      {"seed", std::to_string(t.seed)},
      {"deterministic", t.deterministic ? "true" : "false"},
  };
}

}  // namespace tdi
