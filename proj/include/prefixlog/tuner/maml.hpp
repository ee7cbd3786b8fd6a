// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "prefixlog/exec.hpp"
#include "prefixlog/tuner/attention.hpp"
#include "prefixlog/tuner/mlp.hpp"

namespace prefixlog::tuner {

/// `steps` plain gradient-descent steps on the support MSE. Step k draws its
/// dropout masks from hash(dropout.seed, k). Throws NumericError when a loss
/// or gradient stops being finite.
Eigen::VectorXd inner_update(const Eigen::VectorXd& params, std::span<const Sample> support,
                             double alpha, std::size_t steps, const DropoutSpec& dropout = {});

/// Same mechanics as inner_update, applied to newly observed target data.
inline Eigen::VectorXd adapt(const Eigen::VectorXd& params, std::span<const Sample> few_shot,
                             double alpha, std::size_t steps, const DropoutSpec& dropout = {}) {
    return inner_update(params, few_shot, alpha, steps, dropout);
}

/// Meta-training view of one task: standardized features plus its samples.
struct TaskData {
    Eigen::VectorXd features;
    std::vector<Sample> samples;
};

/// Query loss of one task after inner adaptation, and its meta-gradient
/// with respect to the shared initialization.
struct TaskOutcome {
    double query_loss = 0.0;
    Eigen::VectorXd gradient;
};

/// First order uses the query gradient at the adapted weights. Second order
/// back-propagates it through every inner step with finite-difference
/// Hessian-vector products.
TaskOutcome task_outcome(const Eigen::VectorXd& params, std::span<const Sample> support,
                         std::span<const Sample> query, double alpha, std::size_t steps,
                         bool second_order, const DropoutSpec& dropout);

struct MetaTrainOptions {
    double alpha = 1e-3;
    double beta = 1e-4;
    std::size_t epochs = 200;
    std::size_t inner_steps = 5;
    std::size_t support_size = 15;
    std::size_t query_size = 45;
    bool use_attention = true;
    bool second_order = false;
    /// When set, every update weights all tasks against this feature vector
    /// instead of rotating a held-out task through the target slot.
    std::optional<Eigen::VectorXd> fixed_target;
    /// Dropout rate during training; unset uses the model's own rate.
    std::optional<double> train_dropout;
    std::uint64_t seed = 0;
    Exec exec = Exec::parallel;
};

struct MetaTrainResult {
    MetaModel model;
    AttentionModule attention;
    std::vector<double> epoch_loss;  // mean weighted meta-loss per epoch
};

/// Adam on the weighted meta-loss sum_i w_i L_i. An epoch performs one
/// update per rotation target (one update with a fixed target).
MetaTrainResult meta_train(std::span<const TaskData> tasks, MetaModel model,
                           AttentionModule attention, const MetaTrainOptions& options);

/// Deterministic support/query split of `n` samples; both draw from one
/// seeded permutation, support first.
struct Split {
    std::vector<Sample> support;
    std::vector<Sample> query;
};
Split split_samples(std::span<const Sample> samples, std::size_t support_size,
                    std::size_t query_size, std::uint64_t seed);

}  // namespace prefixlog::tuner
