#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "motion_lingua/common.hpp"

namespace motion_lingua {

inline constexpr std::size_t kActionDims = 7;

// One delta-action step: translation deltas, rotation deltas, gripper command.
struct ActionVector {
  double dx = 0.0;
  double dy = 0.0;
  double dz = 0.0;
  double droll = 0.0;
  double dpitch = 0.0;
  double dyaw = 0.0;
  double gripper = 0.0;

  double operator[](std::size_t i) const {
    switch (i) {
      case 0: return dx;
      case 1: return dy;
      case 2: return dz;
      case 3: return droll;
      case 4: return dpitch;
      case 5: return dyaw;
      case 6: return gripper;
    }
    throw InternalError("ActionVector index out of range");
  }

  double& operator[](std::size_t i) {
    switch (i) {
      case 0: return dx;
      case 1: return dy;
      case 2: return dz;
      case 3: return droll;
      case 4: return dpitch;
      case 5: return dyaw;
      case 6: return gripper;
    }
    throw InternalError("ActionVector index out of range");
  }

  bool operator==(const ActionVector&) const = default;
};

struct TrajectoryStep {
  ActionVector action;
  std::optional<Vec3> position;
  std::optional<std::string> frame_ref;

  bool operator==(const TrajectoryStep&) const = default;
};

struct Trajectory {
  std::string id;
  std::string instruction;
  std::vector<TrajectoryStep> steps;

  bool operator==(const Trajectory&) const = default;
};

// Validates episode-level invariants: all scalars finite, steps non-empty,
// position present on all steps or on none.
inline const Trajectory& validate_trajectory(const Trajectory& traj) {
  if (traj.steps.empty()) {
    throw InputError("EmptyEpisode: episode '" + traj.id + "' has no steps");
  }
  if (traj.instruction.empty()) {
    throw InputError("EmptyInstruction: episode '" + traj.id + "' has no instruction");
  }
  const bool has_position = traj.steps.front().position.has_value();
  for (std::size_t s = 0; s < traj.steps.size(); ++s) {
    const TrajectoryStep& step = traj.steps[s];
    for (std::size_t i = 0; i < kActionDims; ++i) {
      if (!std::isfinite(step.action[i])) {
        throw InputError("NonFiniteValue: episode '" + traj.id + "' step " +
                         std::to_string(s) + " dim " + std::to_string(i));
      }
    }
    if (step.position.has_value() != has_position) {
      throw InputError("MixedPositionPresence: episode '" + traj.id + "' step " +
                       std::to_string(s));
    }
    if (step.position) {
      const Vec3& p = *step.position;
      if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
        throw InputError("NonFiniteValue: episode '" + traj.id + "' step " +
                         std::to_string(s) + " position");
      }
    }
  }
  return traj;
}

// Per-dimension normalization bounds (1st/99th percentile).
struct DatasetStats {
  struct Bound {
    double lo = 0.0;
    double hi = 0.0;
    bool operator==(const Bound&) const = default;
  };
  std::array<Bound, kActionDims> dims{};
  std::uint64_t count = 0;

  bool operator==(const DatasetStats&) const = default;

  void validate() const {
    if (count == 0) throw InputError("EmptyDataset: stats cover zero steps");
    for (std::size_t i = 0; i < kActionDims; ++i) {
      if (!std::isfinite(dims[i].lo) || !std::isfinite(dims[i].hi)) {
        throw InputError("NonFiniteValue: stats dim " + std::to_string(i));
      }
      if (dims[i].lo >= dims[i].hi) {
        throw InputError("InvalidStats: dim " + std::to_string(i) + " has lo >= hi");
      }
    }
  }
};

// Maps positive axis directions onto the grammar's direction words.
struct AxisConvention {
  bool x_positive_forward = true;
  bool y_positive_left = true;
  bool z_positive_up = true;
  bool pitch_positive_up = true;
  bool yaw_positive_ccw = true;

  bool operator==(const AxisConvention&) const = default;
};

enum class Anchor { forward, backward };

struct PipelineConfig {
  std::array<double, kActionDims> t_base{0.01, 0.01, 0.01, 0.02, 0.02, 0.02, 0.02};
  double beta = 0.5;
  std::size_t tau = 4;
  std::size_t dt_fast = 2;
  std::size_t dt_mid = 4;
  std::size_t dt_slow = 8;
  bool slow_direction_check = true;
  double gripper_cutoff = 0.5;
  std::size_t bins = 256;
  AxisConvention axis_convention;
  Anchor anchor = Anchor::forward;

  // Every violation raises its own ConfigError; nothing is clamped.
  void validate() const {
    for (std::size_t i = 0; i < kActionDims; ++i) {
      if (!(t_base[i] > 0.0) || !std::isfinite(t_base[i])) {
        throw ConfigError("t_base[" + std::to_string(i) + "] must be a positive finite value");
      }
    }
    if (!(beta >= 0.0) || !std::isfinite(beta)) {
      throw ConfigError("beta must be >= 0");
    }
    if (tau < 1) {
      throw ConfigError("tau must be >= 1");
    }
    if (dt_fast < 1) {
      throw ConfigError("dt_fast must be >= 1");
    }
    if (!(dt_fast < dt_mid)) {
      throw ConfigError("dt_fast must be < dt_mid");
    }
    if (!(dt_mid < dt_slow)) {
      throw ConfigError("dt_mid must be < dt_slow");
    }
    if (!(gripper_cutoff > 0.0 && gripper_cutoff < 1.0)) {
      throw ConfigError("gripper_cutoff must lie in (0, 1)");
    }
    if (bins != 256) {
      throw ConfigError("bins is fixed at 256");
    }
  }

  double t_base_translational_mean() const {
    return (t_base[0] + t_base[1] + t_base[2]) / 3.0;
  }
};

enum class MoveX { none, forward, backward };
enum class MoveY { none, left, right };
enum class MoveZ { none, up, down };
enum class TiltDir { none, up, down };
enum class RotateDir { none, clockwise, counterclockwise };
enum class GripperWord { none, open, close };

// Structured motion phrase; the stop label is the all-none combination.
struct MotionLabel {
  MoveX move_x = MoveX::none;
  MoveY move_y = MoveY::none;
  MoveZ move_z = MoveZ::none;
  TiltDir tilt = TiltDir::none;
  RotateDir rotate = RotateDir::none;
  GripperWord gripper = GripperWord::none;

  bool is_stop() const {
    return move_x == MoveX::none && move_y == MoveY::none && move_z == MoveZ::none &&
           tilt == TiltDir::none && rotate == RotateDir::none && gripper == GripperWord::none;
  }

  bool operator==(const MotionLabel&) const = default;
};

}  // namespace motion_lingua
