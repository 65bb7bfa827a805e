#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "motion_lingua/types.hpp"

#include <json.hpp>

namespace motion_lingua {

inline constexpr std::size_t kBins = 256;
inline constexpr double kDegenerateEpsilon = 1e-8;

struct ActionTokens {
  std::array<int, kActionDims> bins{};

  static std::string token_string(int bin) {
    return "<extra_" + std::to_string(bin) + ">";
  }

  std::array<std::string, kActionDims> rendered() const {
    std::array<std::string, kActionDims> out;
    for (std::size_t i = 0; i < kActionDims; ++i) out[i] = token_string(bins[i]);
    return out;
  }

  // All seven tokens back to back, as placed in the assistant turn.
  std::string concatenated() const {
    std::string out;
    for (std::size_t i = 0; i < kActionDims; ++i) out += token_string(bins[i]);
    return out;
  }

  bool operator==(const ActionTokens&) const = default;
};

// Collects per-dimension values across a partition of the dataset; partitions
// merge by concatenation, so the final quantiles are exact.
class StatsAccumulator {
public:
  void add(const Trajectory& traj) {
    for (const TrajectoryStep& step : traj.steps) {
      for (std::size_t i = 0; i < kActionDims; ++i) values_[i].push_back(step.action[i]);
    }
  }

  void merge(StatsAccumulator&& other) {
    for (std::size_t i = 0; i < kActionDims; ++i) {
      values_[i].insert(values_[i].end(), other.values_[i].begin(), other.values_[i].end());
    }
  }

  std::uint64_t count() const { return values_[0].size(); }

  // Nearest-rank (type-1) quantiles: rank ceil(q*n), 1-indexed.
  DatasetStats finish() const {
    if (values_[0].empty()) throw InputError("EmptyDataset: no steps to aggregate");
    DatasetStats stats;
    stats.count = values_[0].size();
    const double n = static_cast<double>(stats.count);
    const std::size_t rank_lo = static_cast<std::size_t>(std::ceil(0.01 * n));
    const std::size_t rank_hi = static_cast<std::size_t>(std::ceil(0.99 * n));
    for (std::size_t i = 0; i < kActionDims; ++i) {
      std::vector<double> sorted = values_[i];
      std::sort(sorted.begin(), sorted.end());
      double lo = sorted[rank_lo == 0 ? 0 : rank_lo - 1];
      double hi = sorted[rank_hi == 0 ? 0 : rank_hi - 1];
      if (lo == hi) {
        lo -= kDegenerateEpsilon;
        hi += kDegenerateEpsilon;
      }
      stats.dims[i] = {lo, hi};
    }
    return stats;
  }

private:
  std::array<std::vector<double>, kActionDims> values_;
};

template <typename Range>
DatasetStats compute_dataset_stats(const Range& trajectories) {
  StatsAccumulator acc;
  for (const Trajectory& traj : trajectories) acc.add(traj);
  return acc.finish();
}

inline double normalize_dim(double x, const DatasetStats::Bound& b) {
  const double v = 2.0 * (x - b.lo) / (b.hi - b.lo) - 1.0;
  return std::clamp(v, -1.0, 1.0);
}

// Affine map into [-1, 1], clamped at the percentile bounds.
inline std::array<double, kActionDims> normalize(const ActionVector& a, const DatasetStats& stats) {
  std::array<double, kActionDims> out;
  for (std::size_t i = 0; i < kActionDims; ++i) out[i] = normalize_dim(a[i], stats.dims[i]);
  return out;
}

// Half-open bins, top edge folded into bin 255; out-of-range values clamp
// into the edge bins.
inline int tokenize_dim(double x, const DatasetStats::Bound& b) {
  const double scaled = (x - b.lo) / (b.hi - b.lo) * static_cast<double>(kBins);
  const double floored = std::floor(scaled);
  if (floored < 0.0) return 0;
  if (floored > 255.0) return 255;
  return static_cast<int>(floored);
}

inline ActionTokens tokenize_action(const ActionVector& a, const DatasetStats& stats) {
  ActionTokens tokens;
  for (std::size_t i = 0; i < kActionDims; ++i) tokens.bins[i] = tokenize_dim(a[i], stats.dims[i]);
  return tokens;
}

// Bin-center reconstruction.
inline ActionVector detokenize(const std::array<int, kActionDims>& bins, const DatasetStats& stats) {
  ActionVector a;
  for (std::size_t i = 0; i < kActionDims; ++i) {
    if (bins[i] < 0 || bins[i] >= static_cast<int>(kBins)) {
      throw InputError("BinOutOfRange: dim " + std::to_string(i) + " bin " +
                       std::to_string(bins[i]));
    }
    const DatasetStats::Bound& b = stats.dims[i];
    a[i] = b.lo + (bins[i] + 0.5) * (b.hi - b.lo) / static_cast<double>(kBins);
  }
  return a;
}

// Stats document: {"dims": [{"lo": f, "hi": f} x7], "count": n}, written with
// 17 significant digits so parsing recovers the exact doubles.
inline std::string stats_to_json(const DatasetStats& stats) {
  std::string out = "{\"dims\": [";
  for (std::size_t i = 0; i < kActionDims; ++i) {
    if (i > 0) out += ", ";
    out += "{\"lo\": " + format_double(stats.dims[i].lo) +
           ", \"hi\": " + format_double(stats.dims[i].hi) + "}";
  }
  out += "], \"count\": " + std::to_string(stats.count) + "}\n";
  return out;
}

inline DatasetStats stats_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("stats file is not valid JSON: ") + e.what());
  }
  if (!doc.contains("dims") || !doc["dims"].is_array() || doc["dims"].size() != kActionDims) {
    throw InputError("stats file must contain a 7-element \"dims\" array");
  }
  DatasetStats stats;
  for (std::size_t i = 0; i < kActionDims; ++i) {
    const auto& d = doc["dims"][i];
    if (!d.contains("lo") || !d.contains("hi")) {
      throw InputError("stats dim " + std::to_string(i) + " missing lo/hi");
    }
    stats.dims[i] = {d["lo"].get<double>(), d["hi"].get<double>()};
  }
  stats.count = doc.value("count", std::uint64_t{0});
  stats.validate();
  return stats;
}

}  // namespace motion_lingua
