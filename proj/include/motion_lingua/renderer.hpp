#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "motion_lingua/detector.hpp"
#include "motion_lingua/types.hpp"

namespace motion_lingua {

// Per-axis windowed displacement plus the exceedance decisions feeding word
// selection. Indices 0..5 are (x, y, z, roll, pitch, yaw).
struct AxisActivation {
  std::array<double, 6> acc{};
  std::array<bool, 6> exceeds{};
  bool gripper_before = false;
  bool gripper_after = false;
};

inline MoveX move_x_word(double acc, const AxisConvention& c) {
  const bool positive = acc > 0.0;
  return positive == c.x_positive_forward ? MoveX::forward : MoveX::backward;
}

inline MoveY move_y_word(double acc, const AxisConvention& c) {
  const bool positive = acc > 0.0;
  return positive == c.y_positive_left ? MoveY::left : MoveY::right;
}

inline MoveZ move_z_word(double acc, const AxisConvention& c) {
  const bool positive = acc > 0.0;
  return positive == c.z_positive_up ? MoveZ::up : MoveZ::down;
}

inline MotionLabel render_label(const DetectorVerdict& verdict, const AxisActivation& act,
                                const PipelineConfig& cfg) {
  const AxisConvention& conv = cfg.axis_convention;
  MotionLabel label;
  if (verdict.motion) {
    if (act.exceeds[0]) label.move_x = move_x_word(act.acc[0], conv);
    if (act.exceeds[1]) label.move_y = move_y_word(act.acc[1], conv);
    if (act.exceeds[2]) label.move_z = move_z_word(act.acc[2], conv);
    if (label.move_x == MoveX::none && label.move_y == MoveY::none &&
        label.move_z == MoveZ::none) {
      // Dominant-axis fallback: the detector saw positional motion, so the
      // label must carry a translation word.
      std::size_t best = 0;
      for (std::size_t i = 1; i < 3; ++i) {
        if (std::abs(act.acc[i]) > std::abs(act.acc[best])) best = i;
      }
      switch (best) {
        case 0: label.move_x = move_x_word(act.acc[0], conv); break;
        case 1: label.move_y = move_y_word(act.acc[1], conv); break;
        case 2: label.move_z = move_z_word(act.acc[2], conv); break;
      }
    }
  }
  // Rotational words do not depend on the positional detectors; roll has no
  // word in the grammar and is only counted upstream.
  if (act.exceeds[4]) {
    const bool positive = act.acc[4] > 0.0;
    label.tilt = positive == conv.pitch_positive_up ? TiltDir::up : TiltDir::down;
  }
  if (act.exceeds[5]) {
    const bool positive = act.acc[5] > 0.0;
    label.rotate =
        positive == conv.yaw_positive_ccw ? RotateDir::counterclockwise : RotateDir::clockwise;
  }
  if (act.gripper_before != act.gripper_after) {
    label.gripper = act.gripper_after ? GripperWord::open : GripperWord::close;
  }
  return label;
}

// Fixed word order: move words (x, y, z), tilt, rotate, gripper; "stop" when
// every component is none.
inline std::string canonical_string(const MotionLabel& label) {
  if (label.is_stop()) return "stop";
  std::string out;
  auto append = [&out](const std::string& word) {
    if (!out.empty()) out += ' ';
    out += word;
  };
  if (label.move_x != MoveX::none || label.move_y != MoveY::none || label.move_z != MoveZ::none) {
    append("move");
    if (label.move_x == MoveX::forward) append("forward");
    if (label.move_x == MoveX::backward) append("backward");
    if (label.move_y == MoveY::left) append("left");
    if (label.move_y == MoveY::right) append("right");
    if (label.move_z == MoveZ::up) append("up");
    if (label.move_z == MoveZ::down) append("down");
  }
  if (label.tilt != TiltDir::none) {
    append("tilt");
    append(label.tilt == TiltDir::up ? "up" : "down");
  }
  if (label.rotate != RotateDir::none) {
    append("rotate");
    append(label.rotate == RotateDir::clockwise ? "clockwise" : "counterclockwise");
  }
  if (label.gripper != GripperWord::none) {
    append(label.gripper == GripperWord::open ? "open" : "close");
    append("gripper");
  }
  return out;
}

// Strict inverse of canonical_string on its image.
inline MotionLabel parse_label(const std::string& s) {
  std::vector<std::string> words;
  std::istringstream in(s);
  for (std::string w; in >> w;) words.push_back(w);
  auto fail = [&s]() -> InputError {
    return InputError("MalformedMotionString: '" + s + "'");
  };
  if (words.empty()) throw fail();
  MotionLabel label;
  if (words.size() == 1 && words[0] == "stop") return label;

  std::size_t i = 0;
  if (words[i] == "move") {
    ++i;
    const std::size_t section_start = i;
    if (i < words.size() && (words[i] == "forward" || words[i] == "backward")) {
      label.move_x = words[i] == "forward" ? MoveX::forward : MoveX::backward;
      ++i;
    }
    if (i < words.size() && (words[i] == "left" || words[i] == "right")) {
      label.move_y = words[i] == "left" ? MoveY::left : MoveY::right;
      ++i;
    }
    if (i < words.size() && (words[i] == "up" || words[i] == "down")) {
      label.move_z = words[i] == "up" ? MoveZ::up : MoveZ::down;
      ++i;
    }
    if (i == section_start) throw fail();
  }
  if (i < words.size() && words[i] == "tilt") {
    ++i;
    if (i >= words.size()) throw fail();
    if (words[i] == "up") {
      label.tilt = TiltDir::up;
    } else if (words[i] == "down") {
      label.tilt = TiltDir::down;
    } else {
      throw fail();
    }
    ++i;
  }
  if (i < words.size() && words[i] == "rotate") {
    ++i;
    if (i >= words.size()) throw fail();
    if (words[i] == "clockwise") {
      label.rotate = RotateDir::clockwise;
    } else if (words[i] == "counterclockwise") {
      label.rotate = RotateDir::counterclockwise;
    } else {
      throw fail();
    }
    ++i;
  }
  if (i < words.size() && (words[i] == "open" || words[i] == "close")) {
    label.gripper = words[i] == "open" ? GripperWord::open : GripperWord::close;
    ++i;
    if (i >= words.size() || words[i] != "gripper") throw fail();
    ++i;
  }
  if (i != words.size() || label.is_stop()) throw fail();
  return label;
}

enum class ThresholdPolicy { adaptive, constant_base };

struct AnnotateResult {
  std::vector<MotionLabel> labels;
  std::vector<DetectorVerdict> verdicts;
  std::size_t roll_exceedances = 0;
};

namespace detail {

// Step-index span of the word-selection window anchored at step t.
struct StepSpan {
  std::size_t first = 0;
  std::size_t count = 0;
};

inline StepSpan word_window(std::size_t t, std::size_t n_steps, std::size_t dt, Anchor anchor) {
  if (anchor == Anchor::forward) {
    return {t, std::min(dt, n_steps - t)};
  }
  const std::size_t count = std::min(dt, t + 1);
  return {t + 1 - count, count};
}

}  // namespace detail

// Runs the adaptive detectors over one episode and renders one label per
// step. The scalar T for the positional norm tests is the mean of the three
// translational adaptive thresholds; word selection accumulates per-axis
// displacement over a dt_mid window scaled against T_i * (w / dt_fast).
inline AnnotateResult annotate_trajectory(const Trajectory& traj, const DatasetStats& stats,
                                          const PipelineConfig& cfg,
                                          ThresholdPolicy policy = ThresholdPolicy::adaptive) {
  stats.validate();
  cfg.validate();
  const std::size_t n = traj.steps.size();
  std::vector<std::array<double, kActionDims>> deltas(n);
  for (std::size_t t = 0; t < n; ++t) deltas[t] = normalize(traj.steps[t].action, stats);

  const PositionTrack track = reconstruct_positions(traj, stats);
  AdaptiveThresholdState state(cfg);
  AnnotateResult result;
  result.labels.reserve(n);
  result.verdicts.reserve(n);

  auto gripper_open_at = [&](std::size_t step) {
    return traj.steps[step].action.gripper > cfg.gripper_cutoff;
  };

  for (std::size_t t = 0; t < n; ++t) {
    state.push(deltas[t]);
    std::array<double, kActionDims> thresholds;
    if (policy == ThresholdPolicy::adaptive) {
      thresholds = state.thresholds(cfg);
    } else {
      thresholds = cfg.t_base;
    }
    const double t_pos = (thresholds[0] + thresholds[1] + thresholds[2]) / 3.0;
    const DetectorVerdict verdict = detect_motion(track, t, t_pos, cfg);

    const detail::StepSpan span = detail::word_window(t, n, cfg.dt_mid, cfg.anchor);
    AxisActivation act;
    for (std::size_t s = span.first; s < span.first + span.count; ++s) {
      for (std::size_t i = 0; i < 6; ++i) act.acc[i] += deltas[s][i];
    }
    const double window_scale =
        static_cast<double>(span.count) / static_cast<double>(cfg.dt_fast);
    for (std::size_t i = 0; i < 6; ++i) {
      act.exceeds[i] = std::abs(act.acc[i]) > thresholds[i] * window_scale;
    }
    if (act.exceeds[3]) ++result.roll_exceedances;
    if (cfg.anchor == Anchor::forward) {
      act.gripper_before = gripper_open_at(t);
      act.gripper_after = gripper_open_at(std::min(t + span.count, n - 1));
    } else {
      act.gripper_before = gripper_open_at(span.first == 0 ? 0 : span.first - 1);
      act.gripper_after = gripper_open_at(t);
    }

    result.verdicts.push_back(verdict);
    result.labels.push_back(render_label(verdict, act, cfg));
  }
  return result;
}

}  // namespace motion_lingua
