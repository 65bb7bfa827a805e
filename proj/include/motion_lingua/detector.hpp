#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <deque>
#include <vector>

#include "motion_lingua/tokenizer.hpp"
#include "motion_lingua/types.hpp"

namespace motion_lingua {

// Gripper positions backing the window tests. When the episode carries
// absolute positions they are used verbatim (points == steps); otherwise
// positions are integrated from normalized translation deltas, giving
// steps + 1 points with point[t] the pose before step t.
struct PositionTrack {
  std::vector<Vec3> points;
  std::size_t steps = 0;
};

inline PositionTrack reconstruct_positions(const Trajectory& traj, const DatasetStats& stats) {
  PositionTrack track;
  track.steps = traj.steps.size();
  if (!traj.steps.empty() && traj.steps.front().position.has_value()) {
    track.points.reserve(traj.steps.size());
    for (const TrajectoryStep& step : traj.steps) track.points.push_back(*step.position);
    return track;
  }
  track.points.reserve(traj.steps.size() + 1);
  Vec3 p{0.0, 0.0, 0.0};
  track.points.push_back(p);
  for (const TrajectoryStep& step : traj.steps) {
    const auto d = normalize(step.action, stats);
    p = p + Vec3{d[0], d[1], d[2]};
    track.points.push_back(p);
  }
  return track;
}

// Rolling buffers of the last tau normalized displacement magnitudes per
// dimension. At episode start the mean runs over the available prefix.
class AdaptiveThresholdState {
public:
  explicit AdaptiveThresholdState(const PipelineConfig& cfg) : tau_(cfg.tau) {}

  void push(const std::array<double, kActionDims>& normalized_delta) {
    for (std::size_t i = 0; i < kActionDims; ++i) {
      buffers_[i].push_back(std::abs(normalized_delta[i]));
      if (buffers_[i].size() > tau_) buffers_[i].pop_front();
    }
  }

  std::size_t size() const { return buffers_[0].size(); }

  // The mean is recomputed from the buffer each step; a running sum would
  // accumulate rounding drift over long episodes.
  double threshold(std::size_t dim, const PipelineConfig& cfg) const {
    if (buffers_[dim].empty()) return cfg.t_base[dim];
    double sum = 0.0;
    for (double m : buffers_[dim]) sum += m;
    return cfg.t_base[dim] + cfg.beta * sum / static_cast<double>(buffers_[dim].size());
  }

  std::array<double, kActionDims> thresholds(const PipelineConfig& cfg) const {
    std::array<double, kActionDims> t;
    for (std::size_t i = 0; i < kActionDims; ++i) t[i] = threshold(i, cfg);
    return t;
  }

private:
  std::size_t tau_;
  std::array<std::deque<double>, kActionDims> buffers_{};
};

enum class FiredWindow { none, fast, mid, slow };

struct DetectorVerdict {
  bool fast = false;
  bool mid = false;
  bool slow = false;
  bool motion = false;
  FiredWindow fired_window = FiredWindow::none;

  bool operator==(const DetectorVerdict&) const = default;
};

// Point-index bounds of the window anchored at step t, truncated at the
// episode boundary. Forward anchoring spans steps [t, t+dt); backward spans
// (t-dt, t].
struct WindowBounds {
  std::size_t first = 0;
  std::size_t last = 0;  // inclusive point index; last == first means empty
};

inline WindowBounds window_bounds(const PositionTrack& track, std::size_t t, std::size_t dt,
                                  Anchor anchor) {
  const std::size_t max_point = track.points.size() - 1;
  if (anchor == Anchor::forward) {
    const std::size_t first = std::min(t, max_point);
    const std::size_t last = std::min(t + dt, max_point);
    return {first, last};
  }
  const std::size_t last = std::min(t + 1, max_point);
  const std::size_t first = last >= dt ? last - dt : 0;
  return {first, last};
}

inline bool detect_fast(const PositionTrack& p, std::size_t t, double T,
                        const PipelineConfig& cfg) {
  const WindowBounds w = window_bounds(p, t, cfg.dt_fast, cfg.anchor);
  return (p.points[w.last] - p.points[w.first]).norm() > 2.0 * T;
}

inline bool detect_mid(const PositionTrack& p, std::size_t t, double T,
                       const PipelineConfig& cfg) {
  const WindowBounds w = window_bounds(p, t, cfg.dt_mid, cfg.anchor);
  if (!((p.points[w.last] - p.points[w.first]).norm() > T)) return false;
  for (std::size_t k = w.first; k < w.last; ++k) {
    if (!((p.points[k + 1] - p.points[k]).norm() > 0.0)) return false;
  }
  return w.last > w.first;
}

inline bool detect_slow(const PositionTrack& p, std::size_t t, double T,
                        const PipelineConfig& cfg) {
  const WindowBounds w = window_bounds(p, t, cfg.dt_slow, cfg.anchor);
  const Vec3 net = p.points[w.last] - p.points[w.first];
  if (!(net.norm() > T)) return false;
  const double floor = T / (2.0 * static_cast<double>(cfg.dt_slow));
  for (std::size_t k = w.first; k < w.last; ++k) {
    const Vec3 step = p.points[k + 1] - p.points[k];
    if (!(step.norm() > floor)) return false;
    if (cfg.slow_direction_check && !(step.dot(net) > 0.0)) return false;
  }
  return w.last > w.first;
}

inline DetectorVerdict detect_motion(const PositionTrack& p, std::size_t t, double T,
                                     const PipelineConfig& cfg) {
  DetectorVerdict v;
  v.fast = detect_fast(p, t, T, cfg);
  v.mid = detect_mid(p, t, T, cfg);
  v.slow = detect_slow(p, t, T, cfg);
  v.motion = v.fast || v.mid || v.slow;
  if (v.fast) {
    v.fired_window = FiredWindow::fast;
  } else if (v.mid) {
    v.fired_window = FiredWindow::mid;
  } else if (v.slow) {
    v.fired_window = FiredWindow::slow;
  } else {
    v.fired_window = FiredWindow::none;
  }
  return v;
}

}  // namespace motion_lingua
