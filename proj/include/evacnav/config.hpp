#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "sim.hpp"

namespace evacnav {

// Scenario matrix for the experiment harness.
struct ExperimentSpec {
  std::filesystem::path building;
  std::vector<std::size_t> evacuee_counts{30, 60, 90, 120};
  std::vector<Algorithm> algorithms{Algorithm::dijkstra, Algorithm::cpnst, Algorithm::cpn_spf};
  std::vector<CommsMode> comms_modes{CommsMode::direct3g, CommsMode::ahcpn};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};

  void validate() const {
    if (evacuee_counts.empty() || algorithms.empty() || comms_modes.empty() || seeds.empty())
      throw ConfigError("experiment lists must be non-empty");
    std::vector<std::uint64_t> s = seeds;
    std::sort(s.begin(), s.end());
    if (std::adjacent_find(s.begin(), s.end()) != s.end()) throw ConfigError("experiment.seeds must be distinct");
  }
};

namespace detail {

inline void flatten(const nlohmann::json& j, const std::string& prefix, std::map<std::string, nlohmann::json>& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
    return;
  }
  out[prefix] = j;
}

template <typename T>
T as(const std::string& key, const nlohmann::json& v) {
  try {
    if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError("");
    } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      if (!v.is_number_integer()) throw ConfigError("");
      if constexpr (std::is_unsigned_v<T>)
        if (v.get<long long>() < 0) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError("");
    }
    return v.get<T>();
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' has an invalid value " + v.dump());
  }
}

}  // namespace detail

// Applies a JSON config (nested objects or dotted keys, e.g. {"hazard.spread_probability": 0.3})
// to `cfg`, and to `exp` when given. Unknown keys are errors. Relative experiment.building paths
// resolve against `base_dir`.
inline void apply_config(const nlohmann::json& doc, SimConfig& cfg, ExperimentSpec* exp = nullptr,
                         const std::filesystem::path& base_dir = {}) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  std::map<std::string, nlohmann::json> flat;
  detail::flatten(doc, "", flat);

  using Setter = std::function<void(const std::string&, const nlohmann::json&)>;
  auto num = [](double& field) -> Setter {
    return [&field](const std::string& k, const nlohmann::json& v) { field = detail::as<double>(k, v); };
  };
  auto u64 = [](std::uint64_t& field) -> Setter {
    return [&field](const std::string& k, const nlohmann::json& v) { field = detail::as<std::uint64_t>(k, v); };
  };
  auto integer = [](int& field) -> Setter {
    return [&field](const std::string& k, const nlohmann::json& v) { field = detail::as<int>(k, v); };
  };

  std::map<std::string, Setter> table{
      {"hazard.spread_probability", num(cfg.hazard.spread_probability)},
      {"hazard.spread_tick_s", num(cfg.hazard.spread_tick_s)},
      {"hazard.sensing_delay_s", num(cfg.hazard.sensing_delay_s)},
      {"hazard.ignition_node",
       [&cfg](const std::string& k, const nlohmann::json& v) {
         if (v.is_string() && v.get<std::string>() == "random") cfg.ignition_node.reset();
         else cfg.ignition_node = detail::as<int>(k, v);
       }},
      {"spf.c1", num(cfg.spf.c1)},
      {"spf.c2", num(cfg.spf.c2)},
      {"spf.sigma1", num(cfg.spf.sigma1)},
      {"spf.sigma2", num(cfg.spf.sigma2)},
      {"spf.influence_radius_m", num(cfg.spf.influence_radius_m)},
      {"rnn.epsilon", num(cfg.cpn.rnn.epsilon)},
      {"rnn.threshold_smoothing_a", num(cfg.cpn.rnn.threshold_smoothing_a)},
      {"rnn.fixed_point_tolerance", num(cfg.cpn.rnn.fixed_point_tolerance)},
      {"cpn.packets_per_recompute", integer(cfg.cpn.packets_per_recompute)},
      {"cpn.hop_limit_factor", num(cfg.cpn.hop_limit_factor)},
      {"cpn.congestion_gamma", num(cfg.congestion_gamma)},
      {"cpn.walk_speed_mps", num(cfg.walk_speed_mps)},
      {"energy.battery_mean_j", num(cfg.battery.mean_j)},
      {"energy.battery_sd_j", num(cfg.battery.sd_j)},
      {"energy.battery_min_j", num(cfg.battery.min_j)},
      {"energy.battery_max_j", num(cfg.battery.max_j)},
      {"energy.threeg_download_j_per_byte", num(cfg.energy.threeg_download_j_per_byte)},
      {"energy.threeg_upload_j_per_byte", num(cfg.energy.threeg_upload_j_per_byte)},
      {"energy.bluetooth_download_j_per_byte", num(cfg.energy.bluetooth_download_j_per_byte)},
      {"energy.bluetooth_upload_j_per_byte", num(cfg.energy.bluetooth_upload_j_per_byte)},
      {"energy.threeg_rate_bps", num(cfg.energy.threeg_rate_bps)},
      {"energy.bluetooth_rate_bps", num(cfg.energy.bluetooth_rate_bps)},
      {"comms.alpha", num(cfg.comms.alpha)},
      {"comms.bluetooth_range_m", num(cfg.comms.bluetooth_range_m)},
      {"comms.smart_packet_bytes", u64(cfg.comms.smart_packet_bytes)},
      {"comms.discovery_tick_s", num(cfg.comms.discovery_tick_s)},
      {"comms.photo_bytes", u64(cfg.comms.photo_bytes)},
      {"comms.instruction_bytes", u64(cfg.comms.instruction_bytes)},
      {"comms.fallback_to_3g",
       [&cfg](const std::string& k, const nlohmann::json& v) { cfg.comms.fallback_to_3g = detail::as<bool>(k, v); }},
      {"comms.cellular_competes",
       [&cfg](const std::string& k, const nlohmann::json& v) { cfg.comms.cellular_competes = detail::as<bool>(k, v); }},
      {"sim.step_s", num(cfg.step_s)},
      {"sim.max_steps", integer(cfg.max_steps)},
      {"sim.p_spf", num(cfg.p_spf)},
      {"sim.walk_speed_mps", num(cfg.walk_speed_mps)},
  };

  if (exp) {
    table["experiment.building"] = [exp, base_dir](const std::string& k, const nlohmann::json& v) {
      if (!v.is_string()) throw ConfigError("config key '" + k + "' must be a path string");
      std::filesystem::path p = v.get<std::string>();
      exp->building = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    };
    table["experiment.evacuee_counts"] = [exp](const std::string& k, const nlohmann::json& v) {
      if (!v.is_array()) throw ConfigError("config key '" + k + "' must be an array");
      exp->evacuee_counts.clear();
      for (const auto& x : v) exp->evacuee_counts.push_back(detail::as<std::size_t>(k, x));
    };
    table["experiment.seeds"] = [exp](const std::string& k, const nlohmann::json& v) {
      if (!v.is_array()) throw ConfigError("config key '" + k + "' must be an array");
      exp->seeds.clear();
      for (const auto& x : v) exp->seeds.push_back(detail::as<std::uint64_t>(k, x));
    };
    table["experiment.algorithms"] = [exp](const std::string& k, const nlohmann::json& v) {
      if (!v.is_array()) throw ConfigError("config key '" + k + "' must be an array");
      exp->algorithms.clear();
      for (const auto& x : v) {
        auto a = x.is_string() ? parse_algorithm(x.get<std::string>()) : std::nullopt;
        if (!a) throw ConfigError("config key '" + k + "' has unknown algorithm " + x.dump());
        exp->algorithms.push_back(*a);
      }
    };
    table["experiment.comms_modes"] = [exp](const std::string& k, const nlohmann::json& v) {
      if (!v.is_array()) throw ConfigError("config key '" + k + "' must be an array");
      exp->comms_modes.clear();
      for (const auto& x : v) {
        auto m = x.is_string() ? parse_comms(x.get<std::string>()) : std::nullopt;
        if (!m) throw ConfigError("config key '" + k + "' has unknown comms mode " + x.dump());
        exp->comms_modes.push_back(*m);
      }
    };
  }

  for (const auto& [key, value] : flat) {
    auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(key, value);
  }
  cfg.validate();
  if (exp) exp->validate();
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline nlohmann::json parse_config_text(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

}  // namespace evacnav
