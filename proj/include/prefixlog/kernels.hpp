// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "prefixlog/exec.hpp"
#include "prefixlog/tuner/maml.hpp"
#include "prefixlog/tuner/mlp.hpp"
#include "prefixlog/workload.hpp"

// Data-parallel hot loops. Every kernel writes each output slot from exactly
// one iteration, so the serial and OpenMP paths return identical results.
namespace prefixlog::kernels {

/// Demonstration selection for many queries. `masks` is empty or holds one
/// exclusion mask per query.
std::vector<std::vector<std::size_t>> select_examples_batch(
    std::span<const TokenBag> queries, std::span<const TokenBag> candidates, std::size_t n,
    SimilarityMetric metric, const std::vector<std::vector<std::uint8_t>>& masks, Exec exec);

struct McPrediction {
    double mean = 0.0;
    double variance = 0.0;  // population variance over the passes
};

/// MC-dropout prediction for every point. Pass p uses dropout seed
/// hash(seed, p) and point i uses mask key i.
std::vector<McPrediction> predict_mc_batch(const Eigen::VectorXd& params,
                                           std::span<const tuner::UnitPoint> points,
                                           std::size_t passes, double dropout_rate,
                                           std::uint64_t seed, Exec exec);

/// Per-task inner adaptation and meta-gradient.
struct TaskJob {
    std::span<const tuner::Sample> support;
    std::span<const tuner::Sample> query;
    tuner::DropoutSpec dropout;
};
std::vector<tuner::TaskOutcome> meta_gradients(const Eigen::VectorXd& params,
                                               std::span<const TaskJob> jobs, double alpha,
                                               std::size_t steps, bool second_order, Exec exec);

/// Applies `fn` to every index; results come back in index order.
std::vector<double> evaluate_batch(std::size_t count, const std::function<double(std::size_t)>& fn,
                                   Exec exec);

}  // namespace prefixlog::kernels
