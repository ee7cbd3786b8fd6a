// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#include "prefixlog/tuner/attention.hpp"

#include <cmath>
#include <random>

#include "prefixlog/error.hpp"

namespace prefixlog::tuner {

Eigen::VectorXd attention_logits(const Eigen::VectorXd& target,
                                 std::span<const Eigen::VectorXd> sources,
                                 const Eigen::MatrixXd& wq, const Eigen::MatrixXd& wk,
                                 double scale) {
    if (sources.empty())
        throw ArgumentError("attention: need at least one source task");
    const Eigen::RowVectorXd q = target.transpose() * wq;
    Eigen::VectorXd logits(static_cast<Eigen::Index>(sources.size()));
    for (std::size_t i = 0; i < sources.size(); ++i)
        logits(static_cast<Eigen::Index>(i)) = scale * q.dot(sources[i].transpose() * wk);
    return logits;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
    const Eigen::ArrayXd e = (logits.array() - logits.maxCoeff()).exp();
    return (e / e.sum()).matrix();
}

Eigen::VectorXd attention_weights(const Eigen::VectorXd& target,
                                  std::span<const Eigen::VectorXd> sources,
                                  const Eigen::MatrixXd& wq, const Eigen::MatrixXd& wk) {
    return softmax(attention_logits(target, sources, wq, wk,
                                    1.0 / std::sqrt(static_cast<double>(wq.cols()))));
}

AttentionModule AttentionModule::initialize(int feature_dim, std::uint64_t seed, bool tied,
                                            int key_dim) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0 / std::sqrt(static_cast<double>(feature_dim)));
    AttentionModule m;
    m.wq.resize(feature_dim, key_dim);
    for (Eigen::Index i = 0; i < m.wq.size(); ++i)
        m.wq.data()[i] = g(rng);
    if (tied) {
        m.wk = m.wq;
    } else {
        m.wk.resize(feature_dim, key_dim);
        for (Eigen::Index i = 0; i < m.wk.size(); ++i)
            m.wk.data()[i] = g(rng);
    }
    return m;
}

Eigen::VectorXd AttentionModule::weights(const Eigen::VectorXd& target,
                                         std::span<const Eigen::VectorXd> sources) const {
    return softmax(attention_logits(target, sources, wq, wk, scale()));
}

void AttentionModule::accumulate_gradient(const Eigen::VectorXd& target,
                                          std::span<const Eigen::VectorXd> sources,
                                          const Eigen::VectorXd& dlogits,
                                          AttentionModule& grad) const {
    const double s = scale();
    const Eigen::RowVectorXd q = target.transpose() * wq;
    for (std::size_t i = 0; i < sources.size(); ++i) {
        const double g = s * dlogits(static_cast<Eigen::Index>(i));
        const Eigen::RowVectorXd k = sources[i].transpose() * wk;
        // l = s * t^T Wq Wk^T s_i
        grad.wq.noalias() += g * target * k;
        grad.wk.noalias() += g * sources[i] * q;
    }
}

}  // namespace prefixlog::tuner
