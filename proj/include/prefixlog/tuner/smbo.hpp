// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "prefixlog/exec.hpp"
#include "prefixlog/tuner/attention.hpp"
#include "prefixlog/tuner/history.hpp"
#include "prefixlog/tuner/maml.hpp"
#include "prefixlog/tuner/mlp.hpp"

namespace prefixlog::tuner {

/// Everything the tuner needs at tuning time: trained weights plus the
/// scaling fitted on the history.
struct Surrogate {
    ConfigSpace space;
    FeatureScaler features;
    TargetScaler targets;
    MetaModel model;
    AttentionModule attention;
};

/// History tasks in model space (standardized features, scaled log perf).
/// Failed observations are dropped.
std::vector<TaskData> make_task_data(const TuningHistory& history, const FeatureScaler& features,
                                     const TargetScaler& targets);

/// Fits the scalers and meta-trains a freshly initialized model.
Surrogate train_surrogate(const TuningHistory& history, const MetaTrainOptions& options,
                          double dropout_rate = 0.1);

void save_surrogate(const Surrogate& surrogate, const std::filesystem::path& path);
Surrogate load_surrogate(const std::filesystem::path& path);

/// Best configs of the k history tasks whose standardized features are most
/// cosine-similar to the target. Duplicate configs are skipped in favour of
/// the next task; fewer than k tasks yield every available config.
std::vector<ConfigPoint> warm_start(const TaskFeatures& target, const TuningHistory& history,
                                    const FeatureScaler& scaler, std::size_t k = 3);

struct SmboOptions {
    std::size_t budget = 15;
    std::size_t warm_start = 3;
    std::size_t pool_size = 1000;
    std::size_t mc_passes = 30;
    double dropout_rate = 0.1;
    double xi = 0.01;
    double alpha = 1e-3;
    std::size_t adapt_steps = 5;
    /// Fixed-target meta-training epochs run against the real target before
    /// the loop starts. 0 keeps the meta-trained weights as they are.
    std::size_t specialize_epochs = 0;
    MetaTrainOptions specialize;  // alpha/beta/steps for the specialization pass
    std::uint64_t seed = 0;
    Exec exec = Exec::parallel;
};

struct TuningStep {
    std::size_t index = 0;
    std::string phase;  // "warm_start", "ei" or "random"
    ConfigPoint config;
    double perf = 0.0;
    std::optional<double> ei;
    double best_so_far = 0.0;
};

struct TuningResult {
    Observation best;
    std::vector<TuningStep> log;
    Eigen::VectorXd source_weights;  // attention over history tasks for the target
};

/// Black box; throwing or returning a non-finite value marks a failed run.
using Evaluator = std::function<double(const ConfigPoint&)>;

/// Calls `evaluate` exactly `budget` times (warm starts first) and returns
/// the lowest observed perf.
TuningResult smbo_tune(const Evaluator& evaluate, const Surrogate& surrogate,
                       const TuningHistory& history, const TaskFeatures& target,
                       const SmboOptions& options);

/// Uniform random configurations; the baseline for tuning efficiency.
TuningResult random_search(const Evaluator& evaluate, const ConfigSpace& space,
                           std::size_t budget, std::uint64_t seed);

/// 1-based number of evaluations until the best-so-far perf is within
/// `tolerance` of `optimum`; nullopt if never reached.
std::optional<std::size_t> evaluations_to_reach(const TuningResult& result, double optimum,
                                                double tolerance);

}  // namespace prefixlog::tuner
