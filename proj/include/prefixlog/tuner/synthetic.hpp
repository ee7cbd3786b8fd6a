// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "prefixlog/tuner/history.hpp"

namespace prefixlog::tuner {

/// Closed-form stand-in for a workload: perf = base * (1 + sum_d a_d (x_d - c_d)^2)
/// on the normalized config, times (1 + noise * N(0,1)). Tasks come in two
/// clusters whose optima, scales and feature vectors differ.
struct QuadraticTask {
    std::string name;
    std::size_t cluster = 0;
    TaskFeatures features{};
    UnitPoint optimum{};
    std::array<double, kConfigDims> curvature{};
    double base = 1.0;
    double noise = 0.0;
    std::uint64_t seed = 0;

    double exact(const UnitPoint& x) const;
    /// Noise is a pure function of (seed, key).
    double noisy(const UnitPoint& x, std::uint64_t key) const;
};

struct QuadraticFamily {
    std::vector<QuadraticTask> meta;
    std::vector<QuadraticTask> targets;
};

/// Task i of each list belongs to cluster i % 2.
QuadraticFamily make_quadratic_family(std::size_t meta, std::size_t targets, std::uint64_t seed,
                                      double noise = 0.02);

/// `n` LHS observations with noisy perf; observation j uses noise key j.
SourceTask profile_quadratic(const QuadraticTask& task, const ConfigSpace& space, std::size_t n,
                             std::uint64_t seed);

TuningHistory quadratic_history(const std::vector<QuadraticTask>& tasks, const ConfigSpace& space,
                                std::size_t n, std::uint64_t seed);

/// Minimum exact perf over a per_dim^3 grid of configs.
double grid_optimum(const QuadraticTask& task, const ConfigSpace& space, std::size_t per_dim = 41);

}  // namespace prefixlog::tuner
