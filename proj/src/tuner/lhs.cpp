// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#include "prefixlog/tuner/lhs.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "prefixlog/error.hpp"

namespace prefixlog::tuner {

std::vector<std::vector<double>> latin_hypercube(std::size_t n, std::size_t dims,
                                                 std::uint64_t seed) {
    if (n == 0)
        throw ArgumentError("latin_hypercube: n must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(0.0, 1.0);
    std::vector<std::vector<double>> points(n, std::vector<double>(dims));
    std::vector<std::size_t> strata(n);
    for (std::size_t d = 0; d < dims; ++d) {
        std::iota(strata.begin(), strata.end(), 0);
        std::shuffle(strata.begin(), strata.end(), rng);
        for (std::size_t i = 0; i < n; ++i) {
            double v = (static_cast<double>(strata[i]) + jitter(rng)) / static_cast<double>(n);
            // Guard the open upper edge against rounding.
            points[i][d] = std::min(v, std::nextafter(1.0, 0.0));
        }
    }
    return points;
}

std::vector<ConfigPoint> lhs_sample(const ConfigSpace& space, std::size_t n, std::uint64_t seed) {
    const auto unit = latin_hypercube(n, kConfigDims, seed);
    std::vector<ConfigPoint> out;
    out.reserve(n);
    for (const auto& u : unit)
        out.push_back(space.from_unit({u[0], u[1], u[2]}));
    return out;
}

}  // namespace prefixlog::tuner
