// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "prefixlog/tuner/config_space.hpp"

namespace prefixlog::tuner {

/// Latin hypercube in [0,1)^dims: along every dimension each of the n
/// strata [k/n, (k+1)/n) holds exactly one sample.
std::vector<std::vector<double>> latin_hypercube(std::size_t n, std::size_t dims,
                                                 std::uint64_t seed);

std::vector<ConfigPoint> lhs_sample(const ConfigSpace& space, std::size_t n, std::uint64_t seed);

}  // namespace prefixlog::tuner
