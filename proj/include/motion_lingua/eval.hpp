#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "motion_lingua/renderer.hpp"
#include "motion_lingua/types.hpp"

#include <json.hpp>

namespace motion_lingua {

enum class JitterKind { uniform, gaussian_truncated };

// One piecewise-constant-velocity segment: the grammar phrase it realizes,
// its length, and the per-step displacement magnitude of each active axis.
struct SegmentSpec {
  std::string phrase;  // canonical motion string, or "stop"
  std::size_t duration = 0;
  double magnitude = 0.0;
};

struct SyntheticSpec {
  std::uint64_t seed = 0;
  std::size_t n_episodes = 200;
  std::size_t steps_per_episode = 64;
  // When non-empty, every episode realizes exactly this plan; otherwise a
  // seeded random plan is drawn per episode (see default_episode_plan).
  std::vector<SegmentSpec> segments;
  double jitter_amplitude = 0.0;
  JitterKind jitter_kind = JitterKind::uniform;
  // Jitter tracks execution speed: per-step amplitude is
  // jitter_amplitude * speed / jitter_speed_ref, so fast motion shakes and
  // stationary phases stay clean.
  double jitter_speed_ref = 0.03;
};

struct SyntheticEpisode {
  Trajectory trajectory;
  std::vector<std::string> truth;  // one canonical motion string per step
};

// Normalization bounds that make normalize() the identity on [-1, 1];
// synthetic trajectories are generated directly in normalized units.
inline DatasetStats identity_stats(std::uint64_t count = 1) {
  DatasetStats stats;
  for (auto& d : stats.dims) d = {-1.0, 1.0};
  stats.count = count;
  return stats;
}

namespace detail {

// Deterministic uniforms from raw mt19937_64 output; keeps generated fixtures
// independent of the standard library's distribution implementations.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

inline double standard_normal(std::mt19937_64& rng) {
  const double u1 = std::max(uniform01(rng), 1e-300);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// Per-step clean deltas realizing one label at the given magnitude.
inline ActionVector segment_delta(const MotionLabel& label, double magnitude,
                                  const AxisConvention& conv) {
  ActionVector d;
  if (label.move_x != MoveX::none) {
    const bool positive = (label.move_x == MoveX::forward) == conv.x_positive_forward;
    d.dx = positive ? magnitude : -magnitude;
  }
  if (label.move_y != MoveY::none) {
    const bool positive = (label.move_y == MoveY::left) == conv.y_positive_left;
    d.dy = positive ? magnitude : -magnitude;
  }
  if (label.move_z != MoveZ::none) {
    const bool positive = (label.move_z == MoveZ::up) == conv.z_positive_up;
    d.dz = positive ? magnitude : -magnitude;
  }
  if (label.tilt != TiltDir::none) {
    const bool positive = (label.tilt == TiltDir::up) == conv.pitch_positive_up;
    d.dpitch = positive ? magnitude : -magnitude;
  }
  if (label.rotate != RotateDir::none) {
    const bool positive = (label.rotate == RotateDir::counterclockwise) == conv.yaw_positive_ccw;
    d.dyaw = positive ? magnitude : -magnitude;
  }
  return d;
}

// The default per-episode plan mixes the regimes the detectors are built
// for: ordinary segments at 2-4x the base threshold, sustained sub-threshold
// creep that only a long window can see, rotation-only segments, and a few
// stationary episodes. Two-segment episodes keep magnitudes high enough that
// window-boundary steps still label correctly.
inline std::vector<SegmentSpec> default_episode_plan(std::mt19937_64& rng,
                                                     std::size_t steps_per_episode,
                                                     const PipelineConfig& cfg) {
  const double t_trans = cfg.t_base_translational_mean();
  const double t_rot = cfg.t_base[5];
  static const char* kSingleTransPhrases[] = {
      "move forward", "move backward", "move left",
      "move right",   "move up",       "move down",
  };
  static const char* kTransPhrases[] = {
      "move forward",       "move backward",      "move left",
      "move right",         "move up",            "move down",
      "move forward up",    "move forward left",  "move backward right",
      "move left down",     "move right up",      "move backward down",
  };
  static const char* kRotPhrases[] = {
      "tilt up", "tilt down", "rotate clockwise", "rotate counterclockwise",
  };
  auto pick = [&rng](auto& arr) {
    return arr[static_cast<std::size_t>(uniform01(rng) * std::size(arr)) % std::size(arr)];
  };
  const double r = uniform01(rng);
  std::vector<SegmentSpec> plan;
  if (r < 0.08) {
    plan.push_back({"stop", steps_per_episode, 0.0});
  } else if (r < 0.30) {
    // Creep: sustained drift below the per-step threshold. Single-word
    // phrases only; the dominant-axis fallback can't carry two words.
    plan.push_back(
        {pick(kSingleTransPhrases), steps_per_episode, uniform(rng, 0.55, 0.65) * t_trans});
  } else if (r < 0.52) {
    plan.push_back({pick(kRotPhrases), steps_per_episode, uniform(rng, 2.0, 4.0) * t_rot});
  } else if (r < 0.90) {
    plan.push_back({pick(kTransPhrases), steps_per_episode, uniform(rng, 2.0, 4.0) * t_trans});
  } else {
    const std::size_t half = steps_per_episode / 2;
    plan.push_back({pick(kTransPhrases), half, uniform(rng, 3.2, 4.0) * t_trans});
    if (uniform01(rng) < 0.5) {
      plan.push_back({pick(kTransPhrases), steps_per_episode - half,
                      uniform(rng, 3.2, 4.0) * t_trans});
    } else {
      plan.push_back({pick(kRotPhrases), steps_per_episode - half,
                      uniform(rng, 3.2, 4.0) * t_rot});
    }
  }
  return plan;
}

}  // namespace detail

inline void validate_spec(const SyntheticSpec& spec, const PipelineConfig& cfg) {
  if (spec.n_episodes == 0) throw InputError("InvalidSpec: n_episodes must be > 0");
  if (spec.steps_per_episode == 0) throw InputError("InvalidSpec: steps_per_episode must be > 0");
  if (!(spec.jitter_amplitude >= 0.0)) {
    throw InputError("InvalidSpec: jitter_amplitude must be >= 0");
  }
  if (!(spec.jitter_speed_ref > 0.0)) {
    throw InputError("InvalidSpec: jitter_speed_ref must be > 0");
  }
  if (!spec.segments.empty()) {
    std::size_t total = 0;
    bool has_slow = false;
    for (const SegmentSpec& seg : spec.segments) {
      if (seg.duration == 0) throw InputError("InvalidSpec: segment duration must be > 0");
      if (!(seg.magnitude >= 0.0)) throw InputError("InvalidSpec: segment magnitude must be >= 0");
      if (seg.phrase != "stop") {
        const MotionLabel label = parse_label(seg.phrase);  // throws on bad phrases
        if (label.gripper != GripperWord::none) {
          throw InputError("InvalidSpec: gripper words are not generable");
        }
      }
      if (seg.duration >= cfg.dt_slow) has_slow = true;
      total += seg.duration;
    }
    if (!has_slow) {
      throw InputError("InvalidSpec: at least one segment must last >= dt_slow steps");
    }
    if (total != spec.steps_per_episode) {
      throw InputError("InvalidSpec: segment durations must sum to steps_per_episode");
    }
  }
}

// Builds clean piecewise-constant-velocity episodes, takes ground truth from
// the clean signal, then perturbs only the emitted trajectory with bounded,
// speed-proportional jitter applied in position space (translations) and
// angle space (rotations), so jitter oscillates about the clean path instead
// of drifting.
inline std::vector<SyntheticEpisode> generate_synthetic(const SyntheticSpec& spec,
                                                        const PipelineConfig& cfg = {}) {
  validate_spec(spec, cfg);
  std::vector<SyntheticEpisode> episodes;
  episodes.reserve(spec.n_episodes);
  for (std::size_t e = 0; e < spec.n_episodes; ++e) {
    std::mt19937_64 rng(spec.seed * 0x9e3779b97f4a7c15ull + e + 1);
    const std::vector<SegmentSpec> plan =
        spec.segments.empty() ? detail::default_episode_plan(rng, spec.steps_per_episode, cfg)
                              : spec.segments;

    SyntheticEpisode ep;
    ep.trajectory.id = "synthetic-" + std::to_string(spec.seed) + "-" + std::to_string(e);
    ep.trajectory.instruction = "execute the scripted motion";

    std::vector<ActionVector> clean;
    for (const SegmentSpec& seg : plan) {
      ActionVector delta;
      std::string truth = "stop";
      if (seg.phrase != "stop") {
        const MotionLabel label = parse_label(seg.phrase);
        delta = detail::segment_delta(label, seg.magnitude, cfg.axis_convention);
        truth = canonical_string(label);
      }
      for (std::size_t s = 0; s < seg.duration; ++s) {
        clean.push_back(delta);
        ep.truth.push_back(truth);
      }
    }

    auto draw = [&](double amplitude) {
      if (amplitude <= 0.0) return 0.0;
      if (spec.jitter_kind == JitterKind::uniform) {
        return detail::uniform(rng, -amplitude, amplitude);
      }
      return std::clamp(detail::standard_normal(rng) * amplitude / 2.0, -amplitude, amplitude);
    };

    Vec3 eta_prev{};
    double rho_pitch_prev = 0.0, rho_yaw_prev = 0.0, rho_roll_prev = 0.0;
    for (std::size_t t = 0; t < clean.size(); ++t) {
      const ActionVector& c = clean[t];
      ActionVector emitted = c;
      if (spec.jitter_amplitude > 0.0) {
        const double trans_speed = Vec3{c.dx, c.dy, c.dz}.norm();
        const double rot_speed =
            std::sqrt(c.droll * c.droll + c.dpitch * c.dpitch + c.dyaw * c.dyaw);
        const double a_trans = spec.jitter_amplitude * trans_speed / spec.jitter_speed_ref;
        const double a_rot =
            spec.jitter_amplitude * rot_speed / spec.jitter_speed_ref;
        const Vec3 eta{draw(a_trans), draw(a_trans), draw(a_trans)};
        emitted.dx += eta.x - eta_prev.x;
        emitted.dy += eta.y - eta_prev.y;
        emitted.dz += eta.z - eta_prev.z;
        eta_prev = eta;
        const double rho_roll = draw(a_rot);
        const double rho_pitch = draw(a_rot);
        const double rho_yaw = draw(a_rot);
        emitted.droll += rho_roll - rho_roll_prev;
        emitted.dpitch += rho_pitch - rho_pitch_prev;
        emitted.dyaw += rho_yaw - rho_yaw_prev;
        rho_roll_prev = rho_roll;
        rho_pitch_prev = rho_pitch;
        rho_yaw_prev = rho_yaw;
      }
      ep.trajectory.steps.push_back(TrajectoryStep{emitted, std::nullopt, std::nullopt});
    }
    episodes.push_back(std::move(ep));
  }
  return episodes;
}

// Single-window, non-adaptive baseline: motion iff the windowed positional
// displacement exceeds fixed_T; word selection against per-axis constants
// scaled from fixed_T by the t_base ratios.
inline std::vector<MotionLabel> fixed_threshold_annotate(const Trajectory& traj,
                                                         const DatasetStats& stats, double fixed_T,
                                                         std::size_t window,
                                                         const PipelineConfig& cfg = {}) {
  if (!(fixed_T > 0.0)) throw InputError("fixed_T must be > 0");
  if (window == 0) throw InputError("window must be >= 1");
  const std::size_t n = traj.steps.size();
  std::vector<std::array<double, kActionDims>> deltas(n);
  for (std::size_t t = 0; t < n; ++t) deltas[t] = normalize(traj.steps[t].action, stats);
  const PositionTrack track = reconstruct_positions(traj, stats);

  const double t_trans = cfg.t_base_translational_mean();
  std::array<double, kActionDims> per_axis{};
  for (std::size_t i = 0; i < kActionDims; ++i) per_axis[i] = fixed_T * cfg.t_base[i] / t_trans;

  auto gripper_open_at = [&](std::size_t step) {
    return traj.steps[step].action.gripper > cfg.gripper_cutoff;
  };

  std::vector<MotionLabel> labels;
  labels.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    const WindowBounds w = window_bounds(track, t, window, cfg.anchor);
    DetectorVerdict verdict;
    verdict.motion = (track.points[w.last] - track.points[w.first]).norm() > fixed_T;
    verdict.mid = verdict.motion;
    verdict.fired_window = verdict.motion ? FiredWindow::mid : FiredWindow::none;

    const detail::StepSpan span = detail::word_window(t, n, window, cfg.anchor);
    AxisActivation act;
    for (std::size_t s = span.first; s < span.first + span.count; ++s) {
      for (std::size_t i = 0; i < 6; ++i) act.acc[i] += deltas[s][i];
    }
    const double scale = static_cast<double>(span.count) / static_cast<double>(window);
    for (std::size_t i = 0; i < 6; ++i) {
      act.exceeds[i] = std::abs(act.acc[i]) > per_axis[i] * scale;
    }
    if (cfg.anchor == Anchor::forward) {
      act.gripper_before = gripper_open_at(t);
      act.gripper_after = gripper_open_at(std::min(t + span.count, n - 1));
    } else {
      act.gripper_before = gripper_open_at(span.first == 0 ? 0 : span.first - 1);
      act.gripper_after = gripper_open_at(t);
    }
    labels.push_back(render_label(verdict, act, cfg));
  }
  return labels;
}

struct AccuracyReport {
  std::string method;
  std::vector<double> per_episode;
  double mean_accuracy = 0.0;
  std::uint64_t steps = 0;
  std::uint64_t correct = 0;
  std::map<std::pair<std::string, std::string>, std::uint64_t> confusion;

  void add_episode(const std::vector<std::string>& pred, const std::vector<std::string>& truth) {
    if (pred.size() != truth.size()) {
      throw InputError("LengthMismatch: " + std::to_string(pred.size()) + " predictions vs " +
                       std::to_string(truth.size()) + " truth labels");
    }
    std::uint64_t ok = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (pred[i] == truth[i]) ++ok;
      ++confusion[{truth[i], pred[i]}];
    }
    per_episode.push_back(pred.empty() ? 1.0 : static_cast<double>(ok) / pred.size());
    steps += pred.size();
    correct += ok;
    mean_accuracy = steps == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(steps);
  }
};

inline AccuracyReport score(const std::vector<std::vector<std::string>>& pred,
                            const std::vector<std::vector<std::string>>& truth,
                            const std::string& method) {
  if (pred.size() != truth.size()) {
    throw InputError("LengthMismatch: episode counts differ");
  }
  AccuracyReport report;
  report.method = method;
  for (std::size_t e = 0; e < pred.size(); ++e) report.add_episode(pred[e], truth[e]);
  return report;
}

inline std::vector<double> default_fixed_sweep(const PipelineConfig& cfg) {
  const double base = cfg.t_base_translational_mean();
  return {0.5 * base, 0.75 * base, base,       1.5 * base, 2.0 * base,
          3.0 * base, 4.0 * base,  6.0 * base, 8.0 * base};
}

struct BenchmarkResult {
  AccuracyReport adaptive;
  AccuracyReport fixed_best;
  double fixed_best_threshold = 0.0;
  std::vector<std::pair<double, double>> fixed_sweep;  // (fixed_T, mean accuracy)
  SyntheticSpec spec;
};

// Runs both methods on bit-identical episodes; the fixed baseline reports
// its best score over the threshold sweep (a stand-in for per-dataset
// tuning, which makes the comparison conservative).
inline BenchmarkResult run_benchmark(const SyntheticSpec& spec, const PipelineConfig& cfg,
                                     std::vector<double> fixed_sweep = {},
                                     std::size_t fixed_window = 0) {
  if (fixed_sweep.empty()) fixed_sweep = default_fixed_sweep(cfg);
  if (fixed_window == 0) fixed_window = cfg.dt_mid;
  const std::vector<SyntheticEpisode> episodes = generate_synthetic(spec, cfg);
  const DatasetStats stats = identity_stats();

  std::vector<std::vector<std::string>> truth;
  truth.reserve(episodes.size());
  for (const SyntheticEpisode& ep : episodes) truth.push_back(ep.truth);

  std::vector<std::vector<std::string>> adaptive_pred;
  adaptive_pred.reserve(episodes.size());
  for (const SyntheticEpisode& ep : episodes) {
    const AnnotateResult r = annotate_trajectory(ep.trajectory, stats, cfg);
    std::vector<std::string> strings;
    strings.reserve(r.labels.size());
    for (const MotionLabel& l : r.labels) strings.push_back(canonical_string(l));
    adaptive_pred.push_back(std::move(strings));
  }

  BenchmarkResult result;
  result.spec = spec;
  result.adaptive = score(adaptive_pred, truth, "adaptive");

  for (double fixed_T : fixed_sweep) {
    std::vector<std::vector<std::string>> fixed_pred;
    fixed_pred.reserve(episodes.size());
    for (const SyntheticEpisode& ep : episodes) {
      const std::vector<MotionLabel> labels =
          fixed_threshold_annotate(ep.trajectory, stats, fixed_T, fixed_window, cfg);
      std::vector<std::string> strings;
      strings.reserve(labels.size());
      for (const MotionLabel& l : labels) strings.push_back(canonical_string(l));
      fixed_pred.push_back(std::move(strings));
    }
    AccuracyReport report = score(fixed_pred, truth, "fixed");
    result.fixed_sweep.emplace_back(fixed_T, report.mean_accuracy);
    if (result.fixed_best.steps == 0 || report.mean_accuracy > result.fixed_best.mean_accuracy) {
      result.fixed_best = std::move(report);
      result.fixed_best_threshold = fixed_T;
    }
  }
  return result;
}

struct JitterSweepRow {
  double amplitude = 0.0;
  double adaptive_accuracy = 0.0;
  double fixed_accuracy = 0.0;  // best over the threshold sweep
};

inline std::vector<double> default_jitter_sweep(const PipelineConfig& cfg) {
  const double base = cfg.t_base_translational_mean();
  return {0.0, 0.5 * base, 1.0 * base, 1.5 * base, 2.0 * base};
}

inline std::vector<JitterSweepRow> run_jitter_sweep(SyntheticSpec spec, const PipelineConfig& cfg,
                                                    std::vector<double> amplitudes = {}) {
  if (amplitudes.empty()) amplitudes = default_jitter_sweep(cfg);
  std::vector<JitterSweepRow> rows;
  rows.reserve(amplitudes.size());
  for (double a : amplitudes) {
    spec.jitter_amplitude = a;
    const BenchmarkResult r = run_benchmark(spec, cfg);
    rows.push_back({a, r.adaptive.mean_accuracy, r.fixed_best.mean_accuracy});
  }
  return rows;
}

inline nlohmann::ordered_json report_to_json(const AccuracyReport& report) {
  nlohmann::ordered_json j;
  j["method"] = report.method;
  j["mean_accuracy"] = report.mean_accuracy;
  j["steps"] = report.steps;
  j["correct"] = report.correct;
  j["per_episode"] = report.per_episode;
  nlohmann::ordered_json confusion = nlohmann::ordered_json::array();
  for (const auto& [key, count] : report.confusion) {
    confusion.push_back({key.first, key.second, count});
  }
  j["confusion"] = confusion;
  return j;
}

inline nlohmann::ordered_json benchmark_to_json(const BenchmarkResult& result) {
  nlohmann::ordered_json j;
  j["adaptive"] = report_to_json(result.adaptive);
  j["fixed"] = report_to_json(result.fixed_best);
  j["fixed"]["threshold"] = result.fixed_best_threshold;
  nlohmann::ordered_json sweep = nlohmann::ordered_json::array();
  for (const auto& [t, acc] : result.fixed_sweep) sweep.push_back({t, acc});
  j["fixed"]["sweep"] = sweep;
  j["spec"] = {
      {"n_episodes", result.spec.n_episodes},
      {"steps_per_episode", result.spec.steps_per_episode},
      {"jitter_amplitude", result.spec.jitter_amplitude},
      {"jitter_kind", result.spec.jitter_kind == JitterKind::uniform ? "uniform"
                                                                     : "gaussian-truncated"},
      {"jitter_speed_ref", result.spec.jitter_speed_ref},
  };
  j["seed"] = result.spec.seed;
  return j;
}

}  // namespace motion_lingua
