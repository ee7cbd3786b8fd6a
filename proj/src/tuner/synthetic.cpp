// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#include "prefixlog/tuner/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "prefixlog/error.hpp"
#include "prefixlog/hash.hpp"
#include "prefixlog/tuner/lhs.hpp"

namespace prefixlog::tuner {

namespace {

struct Cluster {
    UnitPoint optimum;
    std::array<double, kConfigDims> curvature;
    double base;
    TaskFeatures features;
};

// Two well-separated workload regimes: short prompts that favour small
// batches, and long prompts that favour large ones.
const std::array<Cluster, 2> kClusters = {{
    {{0.25, 0.70, 0.15}, {2.0, 1.5, 1.0}, 40.0, {320.0, 450.0, 24.0, 64.0, 0.62, 12.0}},
    {{0.75, 0.30, 0.70}, {1.0, 2.0, 3.0}, 95.0, {880.0, 1300.0, 58.0, 128.0, 0.31, 30.0}},
}};

}  // namespace

double QuadraticTask::exact(const UnitPoint& x) const {
    double q = 0.0;
    for (std::size_t d = 0; d < kConfigDims; ++d)
        q += curvature[d] * (x[d] - optimum[d]) * (x[d] - optimum[d]);
    return base * (1.0 + q);
}

double QuadraticTask::noisy(const UnitPoint& x, std::uint64_t key) const {
    if (noise == 0.0)
        return exact(x);
    // Box-Muller from two hashed uniforms.
    const std::uint64_t h = hash_combine(seed, key);
    const double u1 = 1.0 - unit_double(mix64(h));
    const double u2 = unit_double(mix64(h ^ 0xa5a5a5a5a5a5a5a5ULL));
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    return exact(x) * std::max(1.0 + noise * z, 0.05);
}

QuadraticFamily make_quadratic_family(std::size_t meta, std::size_t targets, std::uint64_t seed,
                                      double noise) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> shift(-0.06, 0.06);
    std::uniform_real_distribution<double> scale(0.9, 1.1);
    std::normal_distribution<double> jitter(0.0, 0.03);
    auto make = [&](std::size_t i, const std::string& prefix) {
        const Cluster& c = kClusters[i % 2];
        QuadraticTask t;
        t.name = prefix + std::to_string(i);
        t.cluster = i % 2;
        for (std::size_t d = 0; d < kConfigDims; ++d) {
            t.optimum[d] = std::clamp(c.optimum[d] + shift(rng), 0.0, 1.0);
            t.curvature[d] = c.curvature[d] * scale(rng);
        }
        t.base = c.base * scale(rng);
        for (std::size_t f = 0; f < kFeatureDims; ++f)
            t.features[f] = c.features[f] * (1.0 + jitter(rng));
        t.noise = noise;
        t.seed = rng();
        return t;
    };
    QuadraticFamily fam;
    for (std::size_t i = 0; i < meta; ++i)
        fam.meta.push_back(make(i, "meta"));
    for (std::size_t i = 0; i < targets; ++i)
        fam.targets.push_back(make(i, "target"));
    return fam;
}

SourceTask profile_quadratic(const QuadraticTask& task, const ConfigSpace& space, std::size_t n,
                             std::uint64_t seed) {
    SourceTask out;
    out.name = task.name;
    out.features = task.features;
    const auto points = lhs_sample(space, n, seed);
    for (std::size_t j = 0; j < points.size(); ++j)
        out.observations.push_back({points[j], task.noisy(points[j].normalized, j)});
    return out;
}

TuningHistory quadratic_history(const std::vector<QuadraticTask>& tasks, const ConfigSpace& space,
                                std::size_t n, std::uint64_t seed) {
    TuningHistory h;
    h.space = space;
    for (std::size_t i = 0; i < tasks.size(); ++i)
        h.tasks.push_back(profile_quadratic(tasks[i], space, n, hash_combine(seed, i)));
    return h;
}

double grid_optimum(const QuadraticTask& task, const ConfigSpace& space, std::size_t per_dim) {
    if (per_dim < 2)
        throw ArgumentError("grid_optimum: need at least two points per dimension");
    double best = std::numeric_limits<double>::infinity();
    const double step = 1.0 / static_cast<double>(per_dim - 1);
    for (std::size_t i = 0; i < per_dim; ++i)
        for (std::size_t j = 0; j < per_dim; ++j)
            for (std::size_t k = 0; k < per_dim; ++k) {
                const auto c = space.from_unit({i * step, j * step, k * step});
                best = std::min(best, task.exact(c.normalized));
            }
    return best;
}

}  // namespace prefixlog::tuner
