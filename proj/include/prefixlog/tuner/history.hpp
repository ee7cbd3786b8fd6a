// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "prefixlog/tuner/config_space.hpp"
#include "prefixlog/workload.hpp"

namespace prefixlog::tuner {

inline constexpr std::size_t kFeatureDims = 6;

inline constexpr std::array<const char*, kFeatureDims> kFeatureNames = {
    "mean_prompt_tokens", "p95_prompt_tokens", "mean_output_tokens",
    "concurrency",        "naive_hit_rate",    "distinct_templates"};

/// Raw workload statistics describing a tuning task.
using TaskFeatures = std::array<double, kFeatureDims>;

/// Measured before tuning: prompt/output token statistics, concurrency, the
/// block hit rate of plain prefix caching with unbounded capacity and the
/// number of distinct demonstration templates.
TaskFeatures workload_features(std::span<const Request> stream, std::size_t concurrency,
                               std::size_t block_size = 16);

struct Observation {
    ConfigPoint config;
    double perf = 0.0;  // total completion time, seconds
};

struct SourceTask {
    std::string name;
    TaskFeatures features{};
    std::vector<Observation> observations;

    /// Lowest-perf finite observation.
    std::optional<Observation> best() const;
};

struct TuningHistory {
    ConfigSpace space;
    std::vector<SourceTask> tasks;
};

void save_history(const TuningHistory& history, const std::filesystem::path& path);
TuningHistory load_history(const std::filesystem::path& path);

/// Per-dimension standardization fitted on source-task features.
struct FeatureScaler {
    Eigen::VectorXd mean;
    Eigen::VectorXd stddev;

    static FeatureScaler fit(std::span<const SourceTask> tasks);
    Eigen::VectorXd transform(const TaskFeatures& f) const;
};

/// Maps perf to standardized log(perf). Scaling every perf by a constant
/// only shifts the log, which the standardization removes.
struct TargetScaler {
    double mean = 0.0;
    double stddev = 1.0;

    static TargetScaler fit(std::span<const SourceTask> tasks);
    double to_model(double perf) const { return (std::log(perf) - mean) / stddev; }
    double to_perf(double y) const { return std::exp(y * stddev + mean); }
};

}  // namespace prefixlog::tuner
