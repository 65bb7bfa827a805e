#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "motion_lingua/emitter.hpp"
#include "motion_lingua/eval.hpp"

#include <json.hpp>

using namespace motion_lingua;

namespace {

TrainingSample sample_forward() {
  TrainingSample s;
  s.instruction = "pick up the cup";
  s.motion.move_x = MoveX::forward;
  return s;
}

// Mask oracle: find every occurrence of the needle in the text and demand a
// matching span, independent of how the builder tracked offsets.
std::vector<LossSpan> occurrences(const std::string& text, const std::string& needle) {
  std::vector<LossSpan> out;
  for (std::size_t pos = text.find(needle); pos != std::string::npos;
       pos = text.find(needle, pos + 1)) {
    out.push_back({pos, pos + needle.size()});
  }
  return out;
}

bool has_span(const EmittedRecord& r, const LossSpan& span) {
  return std::find(r.loss_spans.begin(), r.loss_spans.end(), span) != r.loss_spans.end();
}

std::string golden_path(const std::string& name) {
  const char* dir = std::getenv("MOTION_LINGUA_GOLDEN_DIR");
  REQUIRE(dir != nullptr);
  return std::string(dir) + "/" + name;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("pretrain record follows the three-turn layout exactly") {
  const EmitterTemplate tpl;
  const EmittedRecord r = emit_pretrain(sample_forward(), tpl);
  const std::string expected =
      "<|im_start|>system\n"
      "You are Qwen, created by Alibaba Cloud. You are a helpful assistant.<|im_end|>\n"
      "<|im_start|>user\n"
      "What action should the robot take to pick up the cup?<|im_end|>\n"
      "<|im_start|>motion\n"
      "move forward<|im_end|>\n";
  CHECK(r.text == expected);
}

TEST_CASE("stop motion renders a literal stop turn body") {
  TrainingSample s = sample_forward();
  s.motion = MotionLabel{};
  const EmittedRecord r = emit_pretrain(s, EmitterTemplate{});
  CHECK(r.text.find("<|im_start|>motion\nstop<|im_end|>\n") != std::string::npos);
}

TEST_CASE("pretrain mask covers the motion text and the three stop markers, nothing else") {
  const EmitterTemplate tpl;
  const EmittedRecord r = emit_pretrain(sample_forward(), tpl);

  std::vector<LossSpan> expected = occurrences(r.text, tpl.stop_marker);
  const std::size_t motion_pos = r.text.find("motion\nmove forward");
  REQUIRE(motion_pos != std::string::npos);
  const std::size_t body = motion_pos + std::string("motion\n").size();
  expected.push_back({body, body + std::string("move forward").size()});

  REQUIRE(r.loss_spans.size() == expected.size());
  for (const LossSpan& span : expected) CHECK(has_span(r, span));
  for (const LossSpan& span : r.loss_spans) {
    CHECK(span.first < span.second);
    CHECK(span.second <= r.text.size());
  }
}

TEST_CASE("finetune record appends the assistant action turn") {
  TrainingSample s = sample_forward();
  s.stage = Stage::finetune;
  ActionTokens tokens;
  tokens.bins.fill(128);
  s.action = tokens;
  const EmittedRecord r = emit_finetune(s, EmitterTemplate{});
  const std::string assistant_turn =
      "<|im_start|>assistant\n"
      "<extra_128><extra_128><extra_128><extra_128><extra_128><extra_128><extra_128>"
      "<|im_end|>\n";
  REQUIRE(r.text.size() > assistant_turn.size());
  CHECK(r.text.substr(r.text.size() - assistant_turn.size()) == assistant_turn);
  // The finetune record is the pretrain record plus one turn.
  TrainingSample p = sample_forward();
  const EmittedRecord pre = emit_pretrain(p, EmitterTemplate{});
  CHECK(r.text.substr(0, pre.text.size()) == pre.text);
}

TEST_CASE("finetune mask covers the concatenated action tokens") {
  TrainingSample s = sample_forward();
  s.stage = Stage::finetune;
  ActionTokens tokens;
  tokens.bins = {1, 2, 3, 4, 5, 6, 7};
  s.action = tokens;
  const EmittedRecord r = emit_finetune(s, EmitterTemplate{});

  const std::string body = tokens.concatenated();
  const std::size_t pos = r.text.find(body);
  REQUIRE(pos != std::string::npos);
  CHECK(has_span(r, {pos, pos + body.size()}));

  // Exactly 7 token substrings inside the masked action span.
  std::size_t token_count = 0;
  for (std::size_t p = body.find("<extra_"); p != std::string::npos;
       p = body.find("<extra_", p + 1)) {
    ++token_count;
  }
  CHECK(token_count == 7);

  // Four stop markers masked (system, user, motion, assistant).
  const EmitterTemplate tpl;
  std::size_t masked_markers = 0;
  for (const LossSpan& span : occurrences(r.text, tpl.stop_marker)) {
    masked_markers += has_span(r, span) ? 1 : 0;
  }
  CHECK(masked_markers == 4);
}

TEST_CASE("emitter rejects bad inputs") {
  TrainingSample s = sample_forward();
  s.instruction.clear();
  CHECK_THROWS_WITH(emit_pretrain(s, EmitterTemplate{}),
                    Catch::Matchers::ContainsSubstring("EmptyInstruction"));
  s = sample_forward();
  s.stage = Stage::finetune;
  CHECK_THROWS_WITH(emit_finetune(s, EmitterTemplate{}),
                    Catch::Matchers::ContainsSubstring("MissingAction"));
  EmitterTemplate tpl;
  tpl.stop_marker = tpl.start_marker;
  CHECK_THROWS_AS(tpl.validate(), ConfigError);
  tpl = EmitterTemplate{};
  tpl.question_format = "no placeholder";
  CHECK_THROWS_AS(tpl.validate(), ConfigError);
}

TEST_CASE("identical samples emit byte-identical records") {
  TrainingSample s = sample_forward();
  s.stage = Stage::finetune;
  ActionTokens tokens;
  tokens.bins = {9, 9, 9, 9, 9, 9, 9};
  s.action = tokens;
  const EmittedRecord a = emit_finetune(s, EmitterTemplate{});
  const EmittedRecord b = emit_finetune(s, EmitterTemplate{});
  CHECK(a.text == b.text);
  CHECK(a.loss_spans == b.loss_spans);
}

TEST_CASE("emit_dataset produces one record per step and skips bad episodes") {
  const DatasetStats stats = identity_stats();
  const PipelineConfig cfg;
  std::vector<Trajectory> trajs;
  for (std::size_t n : {5, 7, 2}) {
    Trajectory t;
    t.id = "ep" + std::to_string(n);
    t.instruction = "do the thing";
    t.steps.resize(n);
    trajs.push_back(t);
  }
  std::vector<std::string> lines;
  EmitStats result = emit_dataset(trajs, stats, cfg, EmitterTemplate{}, Stage::pretrain,
                                  [&](std::string line) { lines.push_back(std::move(line)); });
  CHECK(result.episodes == 3);
  CHECK(result.steps == 14);
  CHECK(lines.size() == 14);
  for (const std::string& line : lines) CHECK(line.find("<extra_") == std::string::npos);

  trajs[1].instruction.clear();
  lines.clear();
  result = emit_dataset(trajs, stats, cfg, EmitterTemplate{}, Stage::pretrain,
                        [&](std::string line) { lines.push_back(std::move(line)); });
  CHECK(result.skipped_episodes == 1);
  CHECK(result.skipped_steps == 7);
  CHECK(lines.size() == 7);

  CHECK_THROWS_AS(emit_dataset(trajs, stats, cfg, EmitterTemplate{}, Stage::pretrain,
                               [](std::string) {}, true),
                  InputError);
}

TEST_CASE("shuffling episode order permutes records without changing bytes") {
  SyntheticSpec spec;
  spec.seed = 31;
  spec.n_episodes = 6;
  spec.steps_per_episode = 16;
  const auto episodes = generate_synthetic(spec, PipelineConfig{});
  std::vector<Trajectory> in_order, reversed;
  for (const auto& ep : episodes) in_order.push_back(ep.trajectory);
  reversed.assign(in_order.rbegin(), in_order.rend());

  auto collect = [&](const std::vector<Trajectory>& trajs) {
    std::vector<std::string> lines;
    emit_dataset(trajs, identity_stats(), PipelineConfig{}, EmitterTemplate{}, Stage::finetune,
                 [&](std::string line) { lines.push_back(std::move(line)); });
    std::sort(lines.begin(), lines.end());
    return lines;
  };
  CHECK(collect(in_order) == collect(reversed));
}

TEST_CASE("dataset record schema carries the declared fields in order") {
  Trajectory t;
  t.id = "ep0";
  t.instruction = "stack the blocks";
  t.steps.resize(2);
  t.steps[0].frame_ref = "frame-000";
  t.steps[1].frame_ref = "frame-001";
  const auto lines = emit_episode(t, identity_stats(), PipelineConfig{}, EmitterTemplate{},
                                  Stage::finetune);
  REQUIRE(lines.size() == 2);
  const auto doc = nlohmann::ordered_json::parse(lines[0]);
  std::vector<std::string> keys;
  for (auto it = doc.begin(); it != doc.end(); ++it) keys.push_back(it.key());
  CHECK(keys == std::vector<std::string>{"episode_id", "step", "frame_ref", "text", "loss_spans",
                                         "stage", "motion", "action_bins"});
  CHECK(doc["episode_id"] == "ep0");
  CHECK(doc["step"] == 0);
  CHECK(doc["frame_ref"] == "frame-000");
  CHECK(doc["stage"] == "finetune");
  CHECK(doc["motion"] == "stop");
  CHECK(doc["action_bins"].size() == 7);
}

TEST_CASE("golden pretrain and finetune records match byte for byte") {
  // Golden inputs: 2-step episode, constant +0.04 x drift, gripper open.
  Trajectory t;
  t.id = "golden-ep";
  t.instruction = "place the bottle on the shelf";
  t.steps.resize(2);
  for (auto& step : t.steps) {
    step.action.dx = 0.04;
    step.action.gripper = 1.0;
  }
  t.steps[0].frame_ref = "frames/000001.png";
  t.steps[1].frame_ref = "frames/000002.png";

  const auto pre = emit_episode(t, identity_stats(), PipelineConfig{}, EmitterTemplate{},
                                Stage::pretrain);
  const auto fine = emit_episode(t, identity_stats(), PipelineConfig{}, EmitterTemplate{},
                                 Stage::finetune);
  CHECK(pre[0] + "\n" == read_file(golden_path("pretrain_record.jsonl")));
  CHECK(fine[0] + "\n" == read_file(golden_path("finetune_record.jsonl")));
}
