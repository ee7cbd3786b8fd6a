// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cmath>
#include <span>

#include <Eigen/Dense>

namespace prefixlog::tuner {

inline constexpr int kAttentionDim = 32;

/// Softmax over query-key scores: l_i = scale * (s_t Wq) . (s_i Wk).
/// Feature vectors are rows of length F; Wq and Wk are F x D.
Eigen::VectorXd attention_logits(const Eigen::VectorXd& target,
                                 std::span<const Eigen::VectorXd> sources,
                                 const Eigen::MatrixXd& wq, const Eigen::MatrixXd& wk,
                                 double scale);

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

/// Normalized task weights; scale defaults to 1/sqrt(D).
Eigen::VectorXd attention_weights(const Eigen::VectorXd& target,
                                  std::span<const Eigen::VectorXd> sources,
                                  const Eigen::MatrixXd& wq, const Eigen::MatrixXd& wk);

struct AttentionModule {
    Eigen::MatrixXd wq;
    Eigen::MatrixXd wk;

    /// Gaussian init with std 1/sqrt(F). With `tied` the key matrix starts as
    /// a copy of the query matrix, so initial scores are a positive
    /// semi-definite similarity between feature vectors.
    static AttentionModule initialize(int feature_dim, std::uint64_t seed, bool tied = true,
                                      int key_dim = kAttentionDim);

    double scale() const { return 1.0 / std::sqrt(static_cast<double>(wq.cols())); }
    Eigen::VectorXd weights(const Eigen::VectorXd& target,
                            std::span<const Eigen::VectorXd> sources) const;

    /// Adds d(objective)/d(Wq, Wk) given d(objective)/d(logits).
    void accumulate_gradient(const Eigen::VectorXd& target,
                             std::span<const Eigen::VectorXd> sources,
                             const Eigen::VectorXd& dlogits, AttentionModule& grad) const;
};

}  // namespace prefixlog::tuner
