#pragma once

#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "motion_lingua/types.hpp"

#include <json.hpp>

namespace motion_lingua {

// Portable episode format, one JSON object per line:
//   {"id": s, "instruction": s,
//    "steps": [{"action": [7 floats], "position": [3 floats]?, "frame_ref": s?}]}

inline Trajectory trajectory_from_json_line(const std::string& line, std::size_t line_no) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
  }
  auto fail = [line_no](const std::string& msg) -> InputError {
    return InputError("line " + std::to_string(line_no) + ": " + msg);
  };
  if (!doc.is_object()) throw fail("episode record must be a JSON object");
  if (!doc.contains("id") || !doc["id"].is_string()) throw fail("missing string field 'id'");
  if (!doc.contains("instruction") || !doc["instruction"].is_string()) {
    throw fail("missing string field 'instruction'");
  }
  if (!doc.contains("steps") || !doc["steps"].is_array()) {
    throw fail("missing array field 'steps'");
  }
  Trajectory traj;
  traj.id = doc["id"].get<std::string>();
  traj.instruction = doc["instruction"].get<std::string>();
  for (const auto& js : doc["steps"]) {
    if (!js.contains("action") || !js["action"].is_array() || js["action"].size() != kActionDims) {
      throw fail("episode '" + traj.id + "': each step needs a 7-element 'action' array");
    }
    TrajectoryStep step;
    for (std::size_t i = 0; i < kActionDims; ++i) step.action[i] = js["action"][i].get<double>();
    if (js.contains("position") && !js["position"].is_null()) {
      if (!js["position"].is_array() || js["position"].size() != 3) {
        throw fail("episode '" + traj.id + "': 'position' must be a 3-element array");
      }
      step.position = Vec3{js["position"][0].get<double>(), js["position"][1].get<double>(),
                           js["position"][2].get<double>()};
    }
    if (js.contains("frame_ref") && !js["frame_ref"].is_null()) {
      if (!js["frame_ref"].is_string()) {
        throw fail("episode '" + traj.id + "': 'frame_ref' must be a string");
      }
      step.frame_ref = js["frame_ref"].get<std::string>();
    }
    traj.steps.push_back(std::move(step));
  }
  return traj;
}

inline std::string trajectory_to_json_line(const Trajectory& traj) {
  // Built by hand with %.17g doubles so that parse(serialize(t)) == t for all
  // finite inputs.
  std::string out = "{\"id\": ";
  out += nlohmann::json(traj.id).dump();
  out += ", \"instruction\": ";
  out += nlohmann::json(traj.instruction).dump();
  out += ", \"steps\": [";
  bool first_step = true;
  for (const TrajectoryStep& step : traj.steps) {
    if (!first_step) out += ", ";
    first_step = false;
    out += "{\"action\": [";
    for (std::size_t i = 0; i < kActionDims; ++i) {
      if (i > 0) out += ", ";
      out += format_double(step.action[i]);
    }
    out += "]";
    if (step.position) {
      out += ", \"position\": [" + format_double(step.position->x) + ", " +
             format_double(step.position->y) + ", " + format_double(step.position->z) + "]";
    }
    if (step.frame_ref) {
      out += ", \"frame_ref\": " + nlohmann::json(*step.frame_ref).dump();
    }
    out += "}";
  }
  out += "]}";
  return out;
}

// Streams episodes out of a JSONL document, invoking fn(traj, line_no) per
// non-empty line.
template <typename Fn>
void for_each_trajectory_jsonl(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    fn(trajectory_from_json_line(line, line_no), line_no);
  }
}

namespace detail {

inline std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

inline double parse_csv_double(const std::string& cell, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw InputError("line " + std::to_string(line_no) + ": not a number: '" + cell + "'");
  }
}

}  // namespace detail

// Small-fixture CSV variant: header row, then one step per row. Required
// columns: episode_id, instruction, dx, dy, dz, droll, dpitch, dyaw, gripper.
// Optional: px, py, pz, frame_ref. Consecutive rows with the same episode_id
// form one episode.
inline std::vector<Trajectory> trajectories_from_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("line 1: CSV input is empty");
  const std::vector<std::string> header = detail::split_csv_row(line);
  auto column = [&header](const std::string& name) -> std::ptrdiff_t {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<std::ptrdiff_t>(i);
    }
    return -1;
  };
  const char* required[] = {"episode_id", "instruction", "dx",   "dy",     "dz",
                            "droll",      "dpitch",      "dyaw", "gripper"};
  std::ptrdiff_t idx[9];
  for (std::size_t i = 0; i < 9; ++i) {
    idx[i] = column(required[i]);
    if (idx[i] < 0) {
      throw InputError(std::string("line 1: CSV missing required column '") + required[i] + "'");
    }
  }
  const std::ptrdiff_t px = column("px"), py = column("py"), pz = column("pz");
  const std::ptrdiff_t frame = column("frame_ref");
  const bool has_position = px >= 0 && py >= 0 && pz >= 0;

  std::vector<Trajectory> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> cells = detail::split_csv_row(line);
    if (cells.size() < header.size()) {
      throw InputError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " cells, got " +
                       std::to_string(cells.size()));
    }
    const std::string& id = cells[static_cast<std::size_t>(idx[0])];
    if (out.empty() || out.back().id != id) {
      out.push_back(Trajectory{id, cells[static_cast<std::size_t>(idx[1])], {}});
    }
    TrajectoryStep step;
    for (std::size_t i = 0; i < kActionDims; ++i) {
      step.action[i] = detail::parse_csv_double(cells[static_cast<std::size_t>(idx[i + 2])], line_no);
    }
    if (has_position) {
      step.position = Vec3{detail::parse_csv_double(cells[static_cast<std::size_t>(px)], line_no),
                           detail::parse_csv_double(cells[static_cast<std::size_t>(py)], line_no),
                           detail::parse_csv_double(cells[static_cast<std::size_t>(pz)], line_no)};
    }
    if (frame >= 0 && !cells[static_cast<std::size_t>(frame)].empty()) {
      step.frame_ref = cells[static_cast<std::size_t>(frame)];
    }
    out.back().steps.push_back(std::move(step));
  }
  return out;
}

inline std::vector<Trajectory> load_trajectories(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open input file: " + path);
  std::vector<Trajectory> out;
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv") {
    out = trajectories_from_csv(in);
  } else {
    for_each_trajectory_jsonl(in, [&out](Trajectory traj, std::size_t) {
      out.push_back(std::move(traj));
    });
  }
  return out;
}

}  // namespace motion_lingua
