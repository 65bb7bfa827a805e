#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "motion_lingua/renderer.hpp"
#include "motion_lingua/tokenizer.hpp"
#include "motion_lingua/types.hpp"

#include <json.hpp>

namespace motion_lingua {

enum class Stage { pretrain, finetune };

inline std::string stage_name(Stage s) {
  return s == Stage::pretrain ? "pretrain" : "finetune";
}

struct EmitterTemplate {
  std::string system_text =
      "You are Qwen, created by Alibaba Cloud. You are a helpful assistant.";
  std::string start_marker = "<|im_start|>";
  std::string stop_marker = "<|im_end|>";
  std::string question_format = "What action should the robot take to {instruction}?";

  void validate() const {
    if (start_marker.empty() || stop_marker.empty()) {
      throw ConfigError("template markers must be non-empty");
    }
    if (start_marker == stop_marker) {
      throw ConfigError("template markers must be distinct");
    }
    if (question_format.find("{instruction}") == std::string::npos) {
      throw ConfigError("question_format must contain {instruction}");
    }
  }

  std::string question(const std::string& instruction) const {
    std::string q = question_format;
    const std::size_t pos = q.find("{instruction}");
    q.replace(pos, std::string("{instruction}").size(), instruction);
    return q;
  }
};

struct TrainingSample {
  std::string frame_ref;
  std::string instruction;
  MotionLabel motion;
  std::optional<ActionTokens> action;
  Stage stage = Stage::pretrain;
};

// Byte range [start, end) of the record text on which a trainer computes
// loss: the motion text, the action tokens, and every stop marker.
using LossSpan = std::pair<std::size_t, std::size_t>;

struct EmittedRecord {
  std::string text;
  std::vector<LossSpan> loss_spans;
};

namespace detail {

class RecordBuilder {
public:
  explicit RecordBuilder(const EmitterTemplate& tpl) : tpl_(tpl) {}

  void turn(const std::string& role, const std::string& body, bool body_in_loss) {
    text_ += tpl_.start_marker;
    text_ += role;
    text_ += '\n';
    if (body_in_loss) spans_.emplace_back(text_.size(), text_.size() + body.size());
    text_ += body;
    spans_.emplace_back(text_.size(), text_.size() + tpl_.stop_marker.size());
    text_ += tpl_.stop_marker;
    text_ += '\n';
  }

  EmittedRecord finish() { return {std::move(text_), std::move(spans_)}; }

private:
  const EmitterTemplate& tpl_;
  std::string text_;
  std::vector<LossSpan> spans_;
};

}  // namespace detail

inline EmittedRecord emit_pretrain(const TrainingSample& sample, const EmitterTemplate& tpl) {
  tpl.validate();
  if (sample.instruction.empty()) throw InputError("EmptyInstruction");
  detail::RecordBuilder builder(tpl);
  builder.turn("system", tpl.system_text, false);
  builder.turn("user", tpl.question(sample.instruction), false);
  builder.turn("motion", canonical_string(sample.motion), true);
  return builder.finish();
}

inline EmittedRecord emit_finetune(const TrainingSample& sample, const EmitterTemplate& tpl) {
  tpl.validate();
  if (sample.instruction.empty()) throw InputError("EmptyInstruction");
  if (!sample.action) throw InputError("MissingAction");
  detail::RecordBuilder builder(tpl);
  builder.turn("system", tpl.system_text, false);
  builder.turn("user", tpl.question(sample.instruction), false);
  builder.turn("motion", canonical_string(sample.motion), true);
  builder.turn("assistant", sample.action->concatenated(), true);
  return builder.finish();
}

// One output JSONL line. Field order is fixed; the line carries no floats,
// so serialization is byte-stable.
inline std::string render_dataset_record(const std::string& episode_id, std::size_t step,
                                         const std::optional<std::string>& frame_ref,
                                         const EmittedRecord& record, Stage stage,
                                         const std::string& motion,
                                         const std::optional<ActionTokens>& action) {
  nlohmann::ordered_json j;
  j["episode_id"] = episode_id;
  j["step"] = step;
  if (frame_ref) {
    j["frame_ref"] = *frame_ref;
  } else {
    j["frame_ref"] = nullptr;
  }
  j["text"] = record.text;
  nlohmann::ordered_json spans = nlohmann::ordered_json::array();
  for (const LossSpan& s : record.loss_spans) {
    spans.push_back(nlohmann::ordered_json::array({s.first, s.second}));
  }
  j["loss_spans"] = spans;
  j["stage"] = stage_name(stage);
  j["motion"] = motion;
  if (action) {
    nlohmann::ordered_json bins = nlohmann::ordered_json::array();
    for (int b : action->bins) bins.push_back(b);
    j["action_bins"] = bins;
  } else {
    j["action_bins"] = nullptr;
  }
  return j.dump();
}

// Renders every (episode, step) of one validated episode into output lines.
inline std::vector<std::string> emit_episode(const Trajectory& traj, const DatasetStats& stats,
                                             const PipelineConfig& cfg, const EmitterTemplate& tpl,
                                             Stage stage) {
  const AnnotateResult annotated = annotate_trajectory(traj, stats, cfg);
  std::vector<std::string> lines;
  lines.reserve(traj.steps.size());
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    TrainingSample sample;
    sample.instruction = traj.instruction;
    sample.motion = annotated.labels[t];
    sample.stage = stage;
    std::optional<ActionTokens> action;
    EmittedRecord record;
    if (stage == Stage::finetune) {
      action = tokenize_action(traj.steps[t].action, stats);
      sample.action = action;
      record = emit_finetune(sample, tpl);
    } else {
      record = emit_pretrain(sample, tpl);
    }
    lines.push_back(render_dataset_record(traj.id, t, traj.steps[t].frame_ref, record, stage,
                                          canonical_string(annotated.labels[t]), action));
  }
  return lines;
}

struct EmitStats {
  std::size_t episodes = 0;
  std::size_t steps = 0;
  std::size_t skipped_episodes = 0;
  std::size_t skipped_steps = 0;
  std::vector<std::string> skip_reasons;
};

// Emits the whole dataset in input order. A failing episode is skipped and
// reported unless strict, where it rethrows.
template <typename Range, typename LineSink>
EmitStats emit_dataset(const Range& trajectories, const DatasetStats& stats,
                       const PipelineConfig& cfg, const EmitterTemplate& tpl, Stage stage,
                       LineSink&& sink, bool strict = false) {
  EmitStats out;
  for (const Trajectory& traj : trajectories) {
    try {
      validate_trajectory(traj);
      for (std::string& line : emit_episode(traj, stats, cfg, tpl, stage)) {
        sink(std::move(line));
        ++out.steps;
      }
      ++out.episodes;
    } catch (const InputError& e) {
      if (strict) throw;
      ++out.skipped_episodes;
      out.skipped_steps += traj.steps.size();
      out.skip_reasons.push_back(e.what());
      log(LogLevel::warn, std::string("skipping episode '") + traj.id + "': " + e.what());
    }
  }
  return out;
}

}  // namespace motion_lingua
