// motion-lingua command-line front end.
//
// Subcommands: stats, annotate, emit, benchmark, oracle-check.
// Exit codes: 0 success, 1 input error, 2 config error, 3 internal error.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "motion_lingua/config.hpp"
#include "motion_lingua/emitter.hpp"
#include "motion_lingua/eval.hpp"
#include "motion_lingua/reference.hpp"
#include "motion_lingua/traj_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

namespace ml = motion_lingua;

namespace {

struct CommonOpts {
  std::string input;
  std::string config_path;
  std::string stats_path;
  std::string template_path;
  std::string out = "-";
  std::string stage = "pretrain";
  std::string anchor;
  std::uint64_t seed = 0;
  unsigned workers = 0;
  bool strict = false;
};

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

ml::PipelineConfig resolve_config(const CommonOpts& opts) {
  ml::PipelineConfig cfg;
  if (!opts.config_path.empty()) cfg = ml::load_pipeline_config(opts.config_path);
  if (!opts.anchor.empty()) {
    if (opts.anchor == "forward") {
      cfg.anchor = ml::Anchor::forward;
    } else if (opts.anchor == "backward") {
      cfg.anchor = ml::Anchor::backward;
    } else {
      throw ml::ConfigError("anchor must be forward or backward, got '" + opts.anchor + "'");
    }
  }
  cfg.validate();
  return cfg;
}

// Owns the output stream choice; "-" means stdout.
class OutputSink {
 public:
  explicit OutputSink(const std::string& path) {
    if (path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_) throw ml::InputError("cannot open output file: " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }
  void finish() {
    stream().flush();
    if (file_.is_open() && !file_) throw ml::InputError("write failure on output file");
  }

 private:
  std::ofstream file_;
};

// Manifests go to stderr when records go to stdout, so piped output stays clean.
void print_manifest(const CommonOpts& opts, const ml::PipelineConfig& cfg, std::uint64_t episodes,
                    std::uint64_t steps, std::uint64_t skipped_episodes,
                    std::uint64_t skipped_steps, double wall_seconds) {
  nlohmann::ordered_json manifest;
  manifest["input"] = opts.input;
  if (!opts.stats_path.empty()) manifest["stats"] = opts.stats_path;
  manifest["output"] = opts.out;
  manifest["config_digest"] = ml::config_digest(cfg);
  manifest["counts"] = {{"episodes", episodes},
                        {"steps", steps},
                        {"skipped_episodes", skipped_episodes},
                        {"skipped_steps", skipped_steps}};
  manifest["wall_time_seconds"] = wall_seconds;
  std::ostream& side = opts.out == "-" ? std::cerr : std::cout;
  side << manifest.dump() << "\n";
}

ml::DatasetStats load_stats_or_fail(const CommonOpts& opts) {
  if (opts.stats_path.empty()) throw ml::ConfigError("--stats is required for this command");
  std::ifstream in(opts.stats_path, std::ios::binary);
  if (!in) throw ml::InputError("cannot open stats file: " + opts.stats_path);
  std::stringstream buf;
  buf << in.rdbuf();
  return ml::stats_from_json(buf.str());
}

// Runs fn over episodes on a small pool, emitting results in input order.
template <typename Fn>
void parallel_ordered(const std::vector<ml::Trajectory>& episodes, unsigned workers, Fn fn,
                      std::ostream& out) {
  const unsigned n_workers =
      workers > 0 ? workers : std::max(1u, std::thread::hardware_concurrency());
  if (n_workers <= 1 || episodes.size() <= 1) {
    for (std::size_t i = 0; i < episodes.size(); ++i) out << fn(episodes[i], i);
    return;
  }
  const std::size_t batch = n_workers * 4;
  for (std::size_t base = 0; base < episodes.size(); base += batch) {
    const std::size_t end = std::min(base + batch, episodes.size());
    std::vector<std::future<std::string>> pending;
    pending.reserve(end - base);
    for (std::size_t i = base; i < end; ++i) {
      pending.push_back(
          std::async(std::launch::async, [&, i] { return fn(episodes[i], i); }));
    }
    for (auto& f : pending) out << f.get();
  }
}

int cmd_stats(const CommonOpts& opts) {
  Timer timer;
  const ml::PipelineConfig cfg = resolve_config(opts);
  ml::StatsAccumulator acc;
  std::uint64_t episodes = 0, steps = 0;
  std::ifstream in(opts.input, std::ios::binary);
  if (!in) throw ml::InputError("cannot open input file: " + opts.input);
  ml::for_each_trajectory_jsonl(in, [&](const ml::Trajectory& traj, std::size_t) {
    ml::validate_trajectory(traj);
    ++episodes;
    steps += traj.steps.size();
    acc.add(traj);
  });
  if (steps == 0) throw ml::InputError("EmptyDataset: no steps in " + opts.input);
  const ml::DatasetStats stats = acc.finish();
  OutputSink sink(opts.out);
  sink.stream() << ml::stats_to_json(stats);
  sink.finish();
  print_manifest(opts, cfg, episodes, steps, 0, 0, timer.seconds());
  return 0;
}

int cmd_annotate(const CommonOpts& opts) {
  Timer timer;
  const ml::PipelineConfig cfg = resolve_config(opts);
  const ml::DatasetStats stats = load_stats_or_fail(opts);
  const std::vector<ml::Trajectory> episodes = ml::load_trajectories(opts.input);

  std::uint64_t kept_episodes = 0, kept_steps = 0, skipped_episodes = 0, skipped_steps = 0;
  std::vector<ml::Trajectory> valid;
  valid.reserve(episodes.size());
  for (const ml::Trajectory& traj : episodes) {
    try {
      ml::validate_trajectory(traj);
    } catch (const ml::InputError& e) {
      if (opts.strict) throw;
      ml::log(ml::LogLevel::warn, std::string("skipping episode: ") + e.what());
      ++skipped_episodes;
      skipped_steps += traj.steps.size();
      continue;
    }
    ++kept_episodes;
    kept_steps += traj.steps.size();
    valid.push_back(traj);
  }

  OutputSink sink(opts.out);
  parallel_ordered(
      valid, opts.workers,
      [&](const ml::Trajectory& traj, std::size_t) {
        const ml::AnnotateResult r = ml::annotate_trajectory(traj, stats, cfg);
        std::string lines;
        for (std::size_t t = 0; t < r.labels.size(); ++t) {
          nlohmann::ordered_json j;
          j["episode_id"] = traj.id;
          j["step"] = t;
          j["motion"] = ml::canonical_string(r.labels[t]);
          lines += j.dump();
          lines += "\n";
        }
        return lines;
      },
      sink.stream());
  sink.finish();
  print_manifest(opts, cfg, kept_episodes, kept_steps, skipped_episodes, skipped_steps,
                 timer.seconds());
  return 0;
}

int cmd_emit(const CommonOpts& opts) {
  Timer timer;
  const ml::PipelineConfig cfg = resolve_config(opts);
  const ml::DatasetStats stats = load_stats_or_fail(opts);
  ml::Stage stage;
  if (opts.stage == "pretrain") {
    stage = ml::Stage::pretrain;
  } else if (opts.stage == "finetune") {
    stage = ml::Stage::finetune;
  } else {
    throw ml::ConfigError("stage must be pretrain or finetune, got '" + opts.stage + "'");
  }
  ml::EmitterTemplate tmpl;
  if (!opts.template_path.empty()) tmpl = ml::load_emitter_template(opts.template_path);
  tmpl.validate();

  const std::vector<ml::Trajectory> episodes = ml::load_trajectories(opts.input);
  std::uint64_t kept_episodes = 0, kept_steps = 0, skipped_episodes = 0, skipped_steps = 0;
  std::vector<ml::Trajectory> valid;
  valid.reserve(episodes.size());
  for (const ml::Trajectory& traj : episodes) {
    try {
      ml::validate_trajectory(traj);
    } catch (const ml::InputError& e) {
      if (opts.strict) throw;
      ml::log(ml::LogLevel::warn, std::string("skipping episode: ") + e.what());
      ++skipped_episodes;
      skipped_steps += traj.steps.size();
      continue;
    }
    ++kept_episodes;
    kept_steps += traj.steps.size();
    valid.push_back(traj);
  }

  OutputSink sink(opts.out);
  parallel_ordered(
      valid, opts.workers,
      [&](const ml::Trajectory& traj, std::size_t) {
        std::string lines;
        for (const std::string& rec : ml::emit_episode(traj, stats, cfg, tmpl, stage)) {
          lines += rec;
          lines += "\n";
        }
        return lines;
      },
      sink.stream());
  sink.finish();
  print_manifest(opts, cfg, kept_episodes, kept_steps, skipped_episodes, skipped_steps,
                 timer.seconds());
  return 0;
}

int cmd_benchmark(const CommonOpts& opts, std::size_t n_episodes, std::size_t steps_per_episode,
                  double jitter, const std::string& jitter_kind, const std::string& sweep_csv) {
  Timer timer;
  const ml::PipelineConfig cfg = resolve_config(opts);
  ml::SyntheticSpec spec;
  spec.seed = opts.seed;
  spec.n_episodes = n_episodes;
  spec.steps_per_episode = steps_per_episode;
  spec.jitter_amplitude = jitter;
  if (jitter_kind == "uniform") {
    spec.jitter_kind = ml::JitterKind::uniform;
  } else if (jitter_kind == "gaussian-truncated") {
    spec.jitter_kind = ml::JitterKind::gaussian_truncated;
  } else {
    throw ml::ConfigError("jitter-kind must be uniform or gaussian-truncated");
  }

  const ml::BenchmarkResult result = ml::run_benchmark(spec, cfg);
  OutputSink sink(opts.out);
  sink.stream() << ml::benchmark_to_json(result).dump(2) << "\n";
  sink.finish();

  if (!sweep_csv.empty()) {
    std::ofstream csv(sweep_csv, std::ios::binary);
    if (!csv) throw ml::InputError("cannot open sweep csv: " + sweep_csv);
    csv << "jitter_amplitude,adaptive_accuracy,fixed_accuracy\n";
    for (const ml::JitterSweepRow& row : ml::run_jitter_sweep(spec, cfg)) {
      csv << ml::format_double(row.amplitude) << "," << ml::format_double(row.adaptive_accuracy)
          << "," << ml::format_double(row.fixed_accuracy) << "\n";
    }
  }

  CommonOpts manifest_opts = opts;
  manifest_opts.input = "synthetic:seed=" + std::to_string(spec.seed);
  print_manifest(manifest_opts, cfg, spec.n_episodes, spec.n_episodes * spec.steps_per_episode, 0,
                 0, timer.seconds());
  return 0;
}

// Brute-force parity check between the production detector and the naive
// reference, over seeded random-walk episodes mixing magnitudes around the
// base thresholds.
int cmd_oracle_check(const CommonOpts& opts, std::size_t n_episodes) {
  Timer timer;
  const ml::PipelineConfig cfg = resolve_config(opts);
  const ml::DatasetStats stats = ml::identity_stats();
  std::uint64_t checked = 0;
  for (std::size_t e = 0; e < n_episodes; ++e) {
    std::mt19937_64 rng(opts.seed * 0x9e3779b97f4a7c15ull + e + 17);
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
    const ml::AnnotateResult fast = ml::annotate_trajectory(traj, stats, cfg);
    const ml::PositionTrack track = ml::reconstruct_positions(traj, stats);
    ml::AdaptiveThresholdState state(cfg);
    if (fast.verdicts.size() != traj.steps.size()) {
      throw ml::InternalError("oracle mismatch: verdict count on episode " + traj.id);
    }
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      state.push(ml::normalize(traj.steps[t].action, stats));
      const std::array<double, ml::kActionDims> th = state.thresholds(cfg);
      const double t_pos = (th[0] + th[1] + th[2]) / 3.0;
      const ml::DetectorVerdict& a = fast.verdicts[t];
      const ml::DetectorVerdict b = ml::reference::naive_detect(track.points, t, t_pos, cfg);
      if (a.fast != b.fast || a.mid != b.mid || a.slow != b.slow || a.motion != b.motion ||
          a.fired_window != b.fired_window) {
        throw ml::InternalError("oracle mismatch: episode " + traj.id + " step " +
                                std::to_string(t));
      }
      ++checked;
    }
  }
  std::cout << "oracle-check: " << n_episodes << " episodes, " << checked
            << " verdicts, all equivalent (" << timer.seconds() << " s)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"motion-lingua: trajectory tokenization, motion labeling, and sample emission"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::size_t bench_episodes = 200, bench_steps = 64, oracle_episodes = 1000;
  double bench_jitter = 0.0;
  std::string bench_jitter_kind = "uniform", bench_sweep_csv;

  auto add_common = [&](CLI::App* cmd, bool needs_input) {
    if (needs_input) cmd->add_option("input", opts.input, "input episodes file")->required();
    cmd->add_option("--config", opts.config_path, "pipeline config file");
    cmd->add_option("--stats", opts.stats_path, "dataset stats JSON");
    cmd->add_option("--anchor", opts.anchor, "window anchoring: forward|backward");
    cmd->add_option("--seed", opts.seed, "random seed");
    cmd->add_option("--workers", opts.workers, "worker threads (0 = auto)");
    cmd->add_flag("--strict", opts.strict, "fail instead of skipping invalid episodes");
    cmd->add_option("--out", opts.out, "output path ('-' = stdout)");
  };

  CLI::App* stats = app.add_subcommand("stats", "compute dataset normalization stats");
  add_common(stats, true);

  CLI::App* annotate = app.add_subcommand("annotate", "label each step with motion text");
  add_common(annotate, true);

  CLI::App* emit = app.add_subcommand("emit", "emit chat-template training records");
  add_common(emit, true);
  emit->add_option("--stage", opts.stage, "pretrain|finetune");
  emit->add_option("--template", opts.template_path, "emitter template overrides");

  CLI::App* benchmark = app.add_subcommand("benchmark", "adaptive vs fixed-threshold comparison");
  add_common(benchmark, false);
  benchmark->add_option("--episodes", bench_episodes, "synthetic episode count");
  benchmark->add_option("--steps", bench_steps, "steps per episode");
  benchmark->add_option("--jitter", bench_jitter, "jitter amplitude");
  benchmark->add_option("--jitter-kind", bench_jitter_kind, "uniform|gaussian-truncated");
  benchmark->add_option("--sweep-csv", bench_sweep_csv, "write jitter-sweep CSV here");

  CLI::App* oracle = app.add_subcommand("oracle-check", "detector vs brute-force reference");
  add_common(oracle, false);
  oracle->add_option("--episodes", oracle_episodes, "random episode count");

  CLI11_PARSE(app, argc, argv);

  try {
    if (stats->parsed()) return cmd_stats(opts);
    if (annotate->parsed()) return cmd_annotate(opts);
    if (emit->parsed()) return cmd_emit(opts);
    if (benchmark->parsed()) {
      return cmd_benchmark(opts, bench_episodes, bench_steps, bench_jitter, bench_jitter_kind,
                           bench_sweep_csv);
    }
    if (oracle->parsed()) return cmd_oracle_check(opts, oracle_episodes);
    std::cerr << "error: no subcommand\n";
    return 2;
  } catch (const ml::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ml::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  } catch (const ml::InternalError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
