// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "prefixlog/tuner/config_space.hpp"

namespace prefixlog::tuner {

/// One (normalized config, normalized performance) training pair.
struct Sample {
    UnitPoint x{};
    double y = 0.0;
};

/// Dropout masks are a pure function of (seed, sample key, layer, unit), so
/// any evaluation order reproduces the same masks. rate == 0 disables dropout.
struct DropoutSpec {
    double rate = 0.0;
    std::uint64_t seed = 0;
};

/// Performance regressor: 3 -> 64 -> 64 -> 1 with tanh activations and
/// inverted dropout after each hidden layer. Parameters live in one flat
/// vector so that meta-learning updates are plain vector arithmetic.
class MetaModel {
public:
    static constexpr int kInputs = static_cast<int>(kConfigDims);
    static constexpr int kHidden = 64;

    static Eigen::Index parameter_count();
    /// Glorot-uniform weights, zero biases.
    static MetaModel initialize(std::uint64_t seed, double dropout_rate = 0.1);

    MetaModel() = default;
    MetaModel(Eigen::VectorXd params, double dropout_rate);

    const Eigen::VectorXd& params() const { return m_params; }
    Eigen::VectorXd& params() { return m_params; }
    double dropout_rate() const { return m_dropout; }

    /// Deterministic forward pass (dropout off).
    double predict(const UnitPoint& x) const;

private:
    Eigen::VectorXd m_params;
    double m_dropout = 0.1;
};

/// Batched forward pass. `keys` (same length as xs, or empty for 0..n-1)
/// select the dropout masks of each column.
Eigen::VectorXd mlp_forward(const Eigen::VectorXd& params, std::span<const UnitPoint> xs,
                            const DropoutSpec& dropout, std::span<const std::uint64_t> keys = {});

/// Mean squared error over `samples`; writes d(loss)/d(params) when `grad`
/// is non-null. Sample i uses dropout key i.
double mse_loss(const Eigen::VectorXd& params, std::span<const Sample> samples,
                Eigen::VectorXd* grad = nullptr, const DropoutSpec& dropout = {});

}  // namespace prefixlog::tuner
