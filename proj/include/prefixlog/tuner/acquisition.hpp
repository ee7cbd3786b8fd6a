// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "prefixlog/kernels.hpp"
#include "prefixlog/tuner/config_space.hpp"

namespace prefixlog::tuner {

using McPrediction = kernels::McPrediction;

/// Mean and population variance of `passes` forward passes with dropout
/// active. Equals element 0 of kernels::predict_mc_batch for the same seed.
McPrediction predict_mc(const Eigen::VectorXd& params, const UnitPoint& x, std::size_t passes,
                        double dropout_rate, std::uint64_t seed);

/// Minimization form with improvement I = best - mu - xi.
double expected_improvement(double mu, double sigma, double best, double xi);

}  // namespace prefixlog::tuner
