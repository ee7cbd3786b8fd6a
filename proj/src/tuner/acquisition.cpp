// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#include "prefixlog/tuner/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "prefixlog/error.hpp"

namespace prefixlog::tuner {

McPrediction predict_mc(const Eigen::VectorXd& params, const UnitPoint& x, std::size_t passes,
                        double dropout_rate, std::uint64_t seed) {
    return kernels::predict_mc_batch(params, std::span<const UnitPoint>(&x, 1), passes,
                                     dropout_rate, seed, Exec::serial)
        .front();
}

double expected_improvement(double mu, double sigma, double best, double xi) {
    if (!(sigma >= 0.0))
        throw ArgumentError("expected_improvement: sigma must be >= 0");
    const double improvement = best - mu - xi;
    if (sigma == 0.0)
        return std::max(improvement, 0.0);
    const double z = improvement / sigma;
    const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    // Guard tiny negative values from cancellation far in the left tail.
    return std::max(improvement * cdf + sigma * pdf, 0.0);
}

}  // namespace prefixlog::tuner
