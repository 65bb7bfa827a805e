// Acceptance gate: eight end-to-end criteria, one PASS/FAIL line each.
// Exits nonzero if any criterion fails. Timing bounds are part of the
// criteria and are checked with a wall clock, so run this on an idle machine.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "motion_lingua/config.hpp"
#include "motion_lingua/detector.hpp"
#include "motion_lingua/emitter.hpp"
#include "motion_lingua/eval.hpp"
#include "motion_lingua/reference.hpp"
#include "motion_lingua/renderer.hpp"
#include "motion_lingua/tokenizer.hpp"
#include "motion_lingua/types.hpp"

namespace ml = motion_lingua;

namespace {

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

int failures = 0;

void report(int index, const std::string& name, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << " [" << index << "/8] " << name << ": " << detail
            << "\n";
  if (!ok) ++failures;
}

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(6);
  out << v;
  return out.str();
}

// Criterion 1: tokenize-detokenize round trip stays within half a bin for
// 10000 values per dimension, in under one second.
void criterion_roundtrip() {
  Timer timer;
  std::mt19937_64 rng(101);
  ml::DatasetStats stats;
  stats.count = 1;
  for (std::size_t i = 0; i < ml::kActionDims; ++i) {
    const double lo = ml::detail::uniform(rng, -2.0, 0.0);
    const double hi = lo + ml::detail::uniform(rng, 0.001, 4.0);
    stats.dims[i] = {lo, hi};
  }
  double worst = 0.0;
  bool ok = true;
  for (std::size_t i = 0; i < ml::kActionDims && ok; ++i) {
    const double half_bin = (stats.dims[i].hi - stats.dims[i].lo) / 512.0;
    for (int k = 0; k < 10000; ++k) {
      const double x = ml::detail::uniform(rng, stats.dims[i].lo, stats.dims[i].hi);
      const int bin = ml::tokenize_dim(x, stats.dims[i]);
      if (bin < 0 || bin > 255) {
        ok = false;
        break;
      }
      std::array<int, ml::kActionDims> bins{};
      bins[i] = bin;
      const double back = ml::detokenize(bins, stats)[i];
      worst = std::max(worst, std::abs(back - x));
      if (std::abs(back - x) > half_bin) {
        ok = false;
        break;
      }
    }
  }
  const double elapsed = timer.seconds();
  ok = ok && elapsed < 1.0;
  report(1, "tokenizer round trip", ok,
         "70000 values, worst error " + fmt(worst) + ", " + fmt(elapsed) + " s (limit 1 s)");
}

// Criterion 2: nearest-rank percentiles agree exactly with a direct
// sort-based oracle on 100 fixtures spanning n = 3 .. 100000.
void criterion_quantiles() {
  Timer timer;
  std::mt19937_64 rng(202);
  bool ok = true;
  std::size_t checked = 0;
  for (int f = 0; f < 100 && ok; ++f) {
    std::size_t n;
    if (f < 8) {
      n = 3 + static_cast<std::size_t>(f);
    } else if (f == 99) {
      n = 100000;
    } else {
      n = 11 + static_cast<std::size_t>(rng() % 5000);
    }
    ml::StatsAccumulator acc;
    std::array<std::vector<double>, ml::kActionDims> raw;
    ml::Trajectory traj;
    traj.id = "fixture";
    traj.instruction = "n/a";
    for (std::size_t s = 0; s < n; ++s) {
      ml::TrajectoryStep step;
      for (std::size_t i = 0; i < ml::kActionDims; ++i) {
        step.action[i] = ml::detail::uniform(rng, -5.0, 5.0);
        raw[i].push_back(step.action[i]);
      }
      traj.steps.push_back(step);
    }
    acc.add(traj);
    const ml::DatasetStats stats = acc.finish();
    for (std::size_t i = 0; i < ml::kActionDims; ++i) {
      std::sort(raw[i].begin(), raw[i].end());
      const std::size_t rank_lo = static_cast<std::size_t>(std::ceil(0.01 * double(n)));
      const std::size_t rank_hi = static_cast<std::size_t>(std::ceil(0.99 * double(n)));
      double lo = raw[i][rank_lo == 0 ? 0 : rank_lo - 1];
      double hi = raw[i][rank_hi == 0 ? 0 : rank_hi - 1];
      if (lo == hi) {
        lo -= 1e-8;
        hi += 1e-8;
      }
      if (stats.dims[i].lo != lo || stats.dims[i].hi != hi) {
        ok = false;
        break;
      }
    }
    ++checked;
  }
  report(2, "quantile oracle", ok,
         std::to_string(checked) + "/100 fixtures exact, " + fmt(timer.seconds()) + " s");
}

// Criterion 3: the production detector matches the naive reference verdict
// for verdict on 1000 random episodes, in under ten seconds.
void criterion_detector_oracle() {
  Timer timer;
  const ml::PipelineConfig cfg;
  const ml::DatasetStats stats = ml::identity_stats();
  bool ok = true;
  std::uint64_t verdicts = 0;
  for (std::size_t e = 0; e < 1000 && ok; ++e) {
    std::mt19937_64 rng(7 * 0x9e3779b97f4a7c15ull + e + 17);
    const std::size_t len = 1 + static_cast<std::size_t>(rng() % 32);
    ml::Trajectory traj;
    traj.id = "oracle-" + std::to_string(e);
    traj.instruction = "n/a";
    for (std::size_t t = 0; t < len; ++t) {
      ml::ActionVector a;
      for (std::size_t i = 0; i < ml::kActionDims; ++i) {
        const double mag = ml::detail::uniform(rng, 0.0, 3.0 * cfg.t_base[i]);
        a[i] = (rng() & 1) ? mag : -mag;
      }
      traj.steps.push_back(ml::TrajectoryStep{a, std::nullopt, std::nullopt});
    }
    const ml::AnnotateResult result = ml::annotate_trajectory(traj, stats, cfg);
    const ml::PositionTrack track = ml::reconstruct_positions(traj, stats);
    ml::AdaptiveThresholdState state(cfg);
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      state.push(ml::normalize(traj.steps[t].action, stats));
      const auto th = state.thresholds(cfg);
      const double t_pos = (th[0] + th[1] + th[2]) / 3.0;
      const ml::DetectorVerdict ref = ml::reference::naive_detect(track.points, t, t_pos, cfg);
      if (!(result.verdicts[t] == ref)) {
        ok = false;
        break;
      }
      ++verdicts;
    }
  }
  const double elapsed = timer.seconds();
  ok = ok && elapsed < 10.0;
  report(3, "detector vs naive reference", ok,
         std::to_string(verdicts) + " verdicts equivalent, " + fmt(elapsed) +
             " s (limit 10 s)");
}

// Criterion 4: with beta = 0 the adaptive path is bit-identical to the
// constant-base policy, and a constant-magnitude stream converges to
// T = T_base + beta * a within 1e-12.
void criterion_beta() {
  Timer timer;
  std::mt19937_64 rng(404);
  ml::PipelineConfig cfg;
  cfg.beta = 0.0;
  const ml::DatasetStats stats = ml::identity_stats();
  bool ok = true;
  for (int f = 0; f < 100 && ok; ++f) {
    ml::Trajectory traj;
    traj.id = "beta-" + std::to_string(f);
    traj.instruction = "n/a";
    const std::size_t len = 1 + static_cast<std::size_t>(rng() % 24);
    for (std::size_t t = 0; t < len; ++t) {
      ml::ActionVector a;
      for (std::size_t i = 0; i < ml::kActionDims; ++i) {
        a[i] = ml::detail::uniform(rng, -0.05, 0.05);
      }
      traj.steps.push_back(ml::TrajectoryStep{a, std::nullopt, std::nullopt});
    }
    const auto adaptive = ml::annotate_trajectory(traj, stats, cfg, ml::ThresholdPolicy::adaptive);
    const auto constant =
        ml::annotate_trajectory(traj, stats, cfg, ml::ThresholdPolicy::constant_base);
    for (std::size_t t = 0; t < len; ++t) {
      if (ml::canonical_string(adaptive.labels[t]) != ml::canonical_string(constant.labels[t])) {
        ok = false;
        break;
      }
    }
  }

  ml::PipelineConfig live;  // defaults: beta 0.5, tau 4
  ml::AdaptiveThresholdState state(live);
  const double a = 0.013;
  std::array<double, ml::kActionDims> step{};
  for (std::size_t i = 0; i < ml::kActionDims; ++i) step[i] = (i % 2 == 0) ? a : -a;
  for (int t = 0; t < 20; ++t) state.push(step);
  double worst = 0.0;
  for (std::size_t i = 0; i < ml::kActionDims; ++i) {
    const double expected = live.t_base[i] + live.beta * a;
    worst = std::max(worst, std::abs(state.threshold(i, live) - expected));
  }
  ok = ok && worst <= 1e-12;
  report(4, "beta semantics", ok,
         "100 fixtures bit-identical at beta=0, steady-state error " + fmt(worst) +
             " (limit 1e-12), " + fmt(timer.seconds()) + " s");
}

// Criterion 5: every one of the 729 label combinations survives a
// render -> parse -> render round trip unchanged.
void criterion_grammar() {
  Timer timer;
  bool ok = true;
  std::size_t count = 0;
  for (int x = 0; x < 3; ++x) {
    for (int y = 0; y < 3; ++y) {
      for (int z = 0; z < 3; ++z) {
        for (int tl = 0; tl < 3; ++tl) {
          for (int r = 0; r < 3; ++r) {
            for (int g = 0; g < 3; ++g) {
              ml::MotionLabel label;
              label.move_x = static_cast<ml::MoveX>(x);
              label.move_y = static_cast<ml::MoveY>(y);
              label.move_z = static_cast<ml::MoveZ>(z);
              label.tilt = static_cast<ml::TiltDir>(tl);
              label.rotate = static_cast<ml::RotateDir>(r);
              label.gripper = static_cast<ml::GripperWord>(g);
              const std::string s = ml::canonical_string(label);
              const ml::MotionLabel back = ml::parse_label(s);
              if (!(back == label) || ml::canonical_string(back) != s) ok = false;
              ++count;
            }
          }
        }
      }
    }
  }
  report(5, "label grammar", ok,
         std::to_string(count) + "/729 round trips exact, " + fmt(timer.seconds()) + " s");
}

// Criterion 6: emitted records match the checked-in goldens byte for byte.
void criterion_goldens() {
  Timer timer;
  const char* dir = std::getenv("MOTION_LINGUA_GOLDEN_DIR");
#ifdef MOTION_LINGUA_DEFAULT_GOLDEN_DIR
  if (dir == nullptr) dir = MOTION_LINGUA_DEFAULT_GOLDEN_DIR;
#endif
  if (dir == nullptr) {
    report(6, "emitter goldens", false, "MOTION_LINGUA_GOLDEN_DIR is not set");
    return;
  }
  auto read_file = [](const std::string& path) -> std::string {
    std::ifstream in(path, std::ios::binary);
    if (!in) return {};
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
  };

  ml::Trajectory t;
  t.id = "golden-ep";
  t.instruction = "place the bottle on the shelf";
  t.steps.resize(2);
  for (auto& step : t.steps) {
    step.action.dx = 0.04;
    step.action.gripper = 1.0;
  }
  t.steps[0].frame_ref = "frames/000001.png";
  t.steps[1].frame_ref = "frames/000002.png";

  const auto pre = ml::emit_episode(t, ml::identity_stats(), ml::PipelineConfig{},
                                    ml::EmitterTemplate{}, ml::Stage::pretrain);
  const auto fine = ml::emit_episode(t, ml::identity_stats(), ml::PipelineConfig{},
                                     ml::EmitterTemplate{}, ml::Stage::finetune);
  const std::string base(dir);
  const bool pre_ok = pre[0] + "\n" == read_file(base + "/pretrain_record.jsonl");
  const bool fine_ok = fine[0] + "\n" == read_file(base + "/finetune_record.jsonl");
  report(6, "emitter goldens", pre_ok && fine_ok,
         std::string("pretrain ") + (pre_ok ? "exact" : "MISMATCH") + ", finetune " +
             (fine_ok ? "exact" : "MISMATCH") + ", " + fmt(timer.seconds()) + " s");
}

// Criterion 7: across 20 seeds, adaptive labeling beats the best fixed
// threshold by at least 10 accuracy points under jitter, both methods stay
// above 0.99 on the noise-free signal, all in under a minute.
void criterion_benchmark() {
  Timer timer;
  const ml::PipelineConfig cfg;
  double adaptive_sum = 0.0, fixed_sum = 0.0;
  double clean_adaptive_min = 1.0, clean_fixed_min = 1.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    ml::SyntheticSpec noisy;
    noisy.seed = seed;
    noisy.jitter_amplitude = 0.015;  // 1.5x the translational base threshold
    const ml::BenchmarkResult n = ml::run_benchmark(noisy, cfg);
    adaptive_sum += n.adaptive.mean_accuracy;
    fixed_sum += n.fixed_best.mean_accuracy;

    ml::SyntheticSpec clean;
    clean.seed = seed;
    clean.jitter_amplitude = 0.0;
    const ml::BenchmarkResult c = ml::run_benchmark(clean, cfg);
    clean_adaptive_min = std::min(clean_adaptive_min, c.adaptive.mean_accuracy);
    clean_fixed_min = std::min(clean_fixed_min, c.fixed_best.mean_accuracy);
  }
  const double adaptive_mean = adaptive_sum / 20.0;
  const double fixed_mean = fixed_sum / 20.0;
  const double gap = adaptive_mean - fixed_mean;
  const double elapsed = timer.seconds();
  const bool ok = gap >= 0.10 && clean_adaptive_min >= 0.99 && clean_fixed_min >= 0.99 &&
                  elapsed < 60.0;
  report(7, "adaptive vs fixed benchmark", ok,
         "jittered adaptive " + fmt(adaptive_mean) + " vs fixed " + fmt(fixed_mean) + " (gap " +
             fmt(gap) + ", need >= 0.10); clean minima " + fmt(clean_adaptive_min) + " / " +
             fmt(clean_fixed_min) + " (need >= 0.99); " + fmt(elapsed) + " s (limit 60 s)");
}

// Criterion 8: one million steps are annotated and emitted in under 30 s.
void criterion_throughput() {
  Timer timer;
  const ml::PipelineConfig cfg;
  const ml::DatasetStats stats = ml::identity_stats();
  const ml::EmitterTemplate tpl;
  std::mt19937_64 rng(808);
  const std::size_t n_episodes = 5000;
  const std::size_t steps_each = 200;
  std::size_t bytes = 0, steps = 0;
  for (std::size_t e = 0; e < n_episodes; ++e) {
    ml::Trajectory traj;
    traj.id = "bulk-" + std::to_string(e);
    traj.instruction = "move the block to the bin";
    traj.steps.resize(steps_each);
    for (std::size_t t = 0; t < steps_each; ++t) {
      ml::ActionVector& a = traj.steps[t].action;
      a.dx = ml::detail::uniform(rng, -0.04, 0.04);
      a.dz = ml::detail::uniform(rng, -0.04, 0.04);
      a.dyaw = ml::detail::uniform(rng, -0.06, 0.06);
      a.gripper = (t % 50 < 25) ? 1.0 : 0.0;
    }
    const auto lines = ml::emit_episode(traj, stats, cfg, tpl, ml::Stage::finetune);
    for (const std::string& line : lines) bytes += line.size();
    steps += steps_each;
  }
  const double elapsed = timer.seconds();
  const bool ok = steps == 1000000 && bytes > 0 && elapsed < 30.0;
  report(8, "throughput", ok,
         std::to_string(steps) + " steps annotated and emitted (" + std::to_string(bytes) +
             " bytes), " + fmt(elapsed) + " s (limit 30 s)");
}

}  // namespace

int main() {
  criterion_roundtrip();
  criterion_quantiles();
  criterion_detector_oracle();
  criterion_beta();
  criterion_grammar();
  criterion_goldens();
  criterion_benchmark();
  criterion_throughput();
  if (failures != 0) {
    std::cout << failures << " criterion(s) failed\n";
    return 1;
  }
  std::cout << "all 8 criteria passed\n";
  return 0;
}
