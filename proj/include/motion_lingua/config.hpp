#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "motion_lingua/emitter.hpp"
#include "motion_lingua/types.hpp"

namespace motion_lingua {

// Flat key-value config documents: one `key = value` per line, '#' comments.

namespace detail {

inline std::string trim(const std::string& s) {
  const std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename Fn>
void for_each_config_entry(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    fn(trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no);
  }
}

inline double config_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not a number: '" + value + "'");
  }
}

inline std::size_t config_size(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size() || v < 0) throw std::invalid_argument(value);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not a non-negative integer: '" + value + "'");
  }
}

inline bool config_bool(const std::string& key, const std::string& value) {
  if (value == "true") return true;
  if (value == "false") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + value + "'");
}

inline bool config_direction(const std::string& key, const std::string& value,
                             const std::string& positive, const std::string& negative) {
  if (value == positive) return true;
  if (value == negative) return false;
  throw ConfigError("config key '" + key + "': expected " + positive + " or " + negative +
                    ", got '" + value + "'");
}

}  // namespace detail

inline void apply_config_entry(PipelineConfig& cfg, const std::string& key,
                               const std::string& value) {
  if (key == "t_base") {
    std::istringstream vs(value);
    std::vector<double> parts;
    for (std::string p; vs >> p;) parts.push_back(detail::config_double(key, p));
    if (parts.size() != kActionDims) {
      throw ConfigError("config key 't_base': expected 7 values, got " +
                        std::to_string(parts.size()));
    }
    for (std::size_t i = 0; i < kActionDims; ++i) cfg.t_base[i] = parts[i];
  } else if (key == "beta") {
    cfg.beta = detail::config_double(key, value);
  } else if (key == "tau") {
    cfg.tau = detail::config_size(key, value);
  } else if (key == "dt_fast") {
    cfg.dt_fast = detail::config_size(key, value);
  } else if (key == "dt_mid") {
    cfg.dt_mid = detail::config_size(key, value);
  } else if (key == "dt_slow") {
    cfg.dt_slow = detail::config_size(key, value);
  } else if (key == "slow_direction_check") {
    cfg.slow_direction_check = detail::config_bool(key, value);
  } else if (key == "gripper_cutoff") {
    cfg.gripper_cutoff = detail::config_double(key, value);
  } else if (key == "bins") {
    cfg.bins = detail::config_size(key, value);
  } else if (key == "axis_x") {
    cfg.axis_convention.x_positive_forward =
        detail::config_direction(key, value, "forward", "backward");
  } else if (key == "axis_y") {
    cfg.axis_convention.y_positive_left = detail::config_direction(key, value, "left", "right");
  } else if (key == "axis_z") {
    cfg.axis_convention.z_positive_up = detail::config_direction(key, value, "up", "down");
  } else if (key == "axis_pitch") {
    cfg.axis_convention.pitch_positive_up = detail::config_direction(key, value, "up", "down");
  } else if (key == "axis_yaw") {
    cfg.axis_convention.yaw_positive_ccw =
        detail::config_direction(key, value, "counterclockwise", "clockwise");
  } else if (key == "anchor") {
    if (value == "forward") {
      cfg.anchor = Anchor::forward;
    } else if (value == "backward") {
      cfg.anchor = Anchor::backward;
    } else {
      throw ConfigError("config key 'anchor': expected forward or backward, got '" + value + "'");
    }
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  PipelineConfig cfg;
  detail::for_each_config_entry(in, [&cfg](const std::string& key, const std::string& value,
                                           std::size_t) { apply_config_entry(cfg, key, value); });
  cfg.validate();
  return cfg;
}

// Canonical rendering of the resolved config; hashed into run manifests.
inline std::string config_to_text(const PipelineConfig& cfg) {
  std::string out = "t_base =";
  for (std::size_t i = 0; i < kActionDims; ++i) out += " " + format_double(cfg.t_base[i]);
  out += "\nbeta = " + format_double(cfg.beta);
  out += "\ntau = " + std::to_string(cfg.tau);
  out += "\ndt_fast = " + std::to_string(cfg.dt_fast);
  out += "\ndt_mid = " + std::to_string(cfg.dt_mid);
  out += "\ndt_slow = " + std::to_string(cfg.dt_slow);
  out += std::string("\nslow_direction_check = ") +
         (cfg.slow_direction_check ? "true" : "false");
  out += "\ngripper_cutoff = " + format_double(cfg.gripper_cutoff);
  out += "\nbins = " + std::to_string(cfg.bins);
  out += std::string("\naxis_x = ") + (cfg.axis_convention.x_positive_forward ? "forward" : "backward");
  out += std::string("\naxis_y = ") + (cfg.axis_convention.y_positive_left ? "left" : "right");
  out += std::string("\naxis_z = ") + (cfg.axis_convention.z_positive_up ? "up" : "down");
  out += std::string("\naxis_pitch = ") + (cfg.axis_convention.pitch_positive_up ? "up" : "down");
  out += std::string("\naxis_yaw = ") +
         (cfg.axis_convention.yaw_positive_ccw ? "counterclockwise" : "clockwise");
  out += std::string("\nanchor = ") + (cfg.anchor == Anchor::forward ? "forward" : "backward");
  out += "\n";
  return out;
}

inline std::uint64_t config_digest(const PipelineConfig& cfg) {
  return fnv1a(config_to_text(cfg));
}

inline EmitterTemplate load_emitter_template(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open template file: " + path);
  EmitterTemplate tpl;
  detail::for_each_config_entry(in, [&tpl](const std::string& key, const std::string& value,
                                           std::size_t) {
    if (key == "system_text") {
      tpl.system_text = value;
    } else if (key == "start_marker") {
      tpl.start_marker = value;
    } else if (key == "stop_marker") {
      tpl.stop_marker = value;
    } else if (key == "question_format") {
      tpl.question_format = value;
    } else {
      throw ConfigError("unknown template key '" + key + "'");
    }
  });
  tpl.validate();
  return tpl;
}

}  // namespace motion_lingua
