#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "motion_lingua/detector.hpp"
#include "motion_lingua/types.hpp"

namespace motion_lingua::reference {

// Naive re-implementation of the three window detectors and their
// disjunction, written directly from the definitions with plain loops. It is
// kept deliberately separate from detector.hpp so the production detectors
// can be checked against an independent code path (the `oracle-check`
// subcommand and the equivalence tests).

inline double dist(const Vec3& a, const Vec3& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

struct Span {
  std::size_t lo;
  std::size_t hi;
};

inline Span naive_span(std::size_t n_points, std::size_t t, std::size_t dt, Anchor anchor) {
  const std::size_t last = n_points - 1;
  if (anchor == Anchor::forward) {
    std::size_t lo = t;
    if (lo > last) lo = last;
    std::size_t hi = t + dt;
    if (hi > last) hi = last;
    return {lo, hi};
  }
  std::size_t hi = t + 1;
  if (hi > last) hi = last;
  std::size_t lo = 0;
  if (hi > dt) lo = hi - dt;
  return {lo, hi};
}

inline DetectorVerdict naive_detect(const std::vector<Vec3>& points, std::size_t t, double T,
                                    const PipelineConfig& cfg) {
  DetectorVerdict v;

  {
    const Span s = naive_span(points.size(), t, cfg.dt_fast, cfg.anchor);
    v.fast = dist(points[s.hi], points[s.lo]) > 2.0 * T;
  }

  {
    const Span s = naive_span(points.size(), t, cfg.dt_mid, cfg.anchor);
    bool ok = s.hi > s.lo && dist(points[s.hi], points[s.lo]) > T;
    for (std::size_t k = s.lo; ok && k < s.hi; ++k) {
      if (dist(points[k + 1], points[k]) <= 0.0) ok = false;
    }
    v.mid = ok;
  }

  {
    const Span s = naive_span(points.size(), t, cfg.dt_slow, cfg.anchor);
    const double net_x = points[s.hi].x - points[s.lo].x;
    const double net_y = points[s.hi].y - points[s.lo].y;
    const double net_z = points[s.hi].z - points[s.lo].z;
    const double net = std::sqrt(net_x * net_x + net_y * net_y + net_z * net_z);
    bool ok = s.hi > s.lo && net > T;
    const double floor = T / (2.0 * static_cast<double>(cfg.dt_slow));
    for (std::size_t k = s.lo; ok && k < s.hi; ++k) {
      const double ux = points[k + 1].x - points[k].x;
      const double uy = points[k + 1].y - points[k].y;
      const double uz = points[k + 1].z - points[k].z;
      if (std::sqrt(ux * ux + uy * uy + uz * uz) <= floor) ok = false;
      if (cfg.slow_direction_check && ux * net_x + uy * net_y + uz * net_z <= 0.0) ok = false;
    }
    v.slow = ok;
  }

  v.motion = v.fast || v.mid || v.slow;
  if (v.fast) {
    v.fired_window = FiredWindow::fast;
  } else if (v.mid) {
    v.fired_window = FiredWindow::mid;
  } else if (v.slow) {
    v.fired_window = FiredWindow::slow;
  }
  return v;
}

}  // namespace motion_lingua::reference
