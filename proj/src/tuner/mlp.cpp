// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#include "prefixlog/tuner/mlp.hpp"

#include <cmath>
#include <random>

#include "prefixlog/error.hpp"
#include "prefixlog/hash.hpp"

namespace prefixlog::tuner {

namespace {

constexpr int kIn = MetaModel::kInputs;
constexpr int kH = MetaModel::kHidden;

// Offsets of each tensor inside the flat parameter vector.
constexpr Eigen::Index kW1 = 0;
constexpr Eigen::Index kB1 = kW1 + kH * kIn;
constexpr Eigen::Index kW2 = kB1 + kH;
constexpr Eigen::Index kB2 = kW2 + kH * kH;
constexpr Eigen::Index kW3 = kB2 + kH;
constexpr Eigen::Index kB3 = kW3 + kH;
constexpr Eigen::Index kCount = kB3 + 1;

using MatMap = Eigen::Map<const Eigen::MatrixXd>;
using VecMap = Eigen::Map<const Eigen::VectorXd>;

struct View {
    MatMap w1, w2;
    VecMap b1, b2, w3;
    double b3;

    explicit View(const Eigen::VectorXd& p)
        : w1(p.data() + kW1, kH, kIn),
          w2(p.data() + kW2, kH, kH),
          b1(p.data() + kB1, kH),
          b2(p.data() + kB2, kH),
          w3(p.data() + kW3, kH),
          b3(p(kB3)) {}
};

// Scaled keep-mask for one layer: 1/(1-rate) where kept, 0 where dropped.
Eigen::MatrixXd dropout_mask(const DropoutSpec& d, std::uint64_t layer, Eigen::Index cols,
                             std::span<const std::uint64_t> keys) {
    Eigen::MatrixXd m(kH, cols);
    const double scale = 1.0 / (1.0 - d.rate);
    for (Eigen::Index c = 0; c < cols; ++c) {
        const std::uint64_t key = keys.empty() ? static_cast<std::uint64_t>(c)
                                               : keys[static_cast<std::size_t>(c)];
        const std::uint64_t base = hash_combine(hash_combine(d.seed, key), layer);
        for (Eigen::Index u = 0; u < kH; ++u)
            m(u, c) = unit_double(hash_combine(base, static_cast<std::uint64_t>(u))) < d.rate
                          ? 0.0
                          : scale;
    }
    return m;
}

struct Activations {
    Eigen::MatrixXd x, a1, d1, a2, d2, m1, m2;
    Eigen::RowVectorXd out;
};

Activations forward(const Eigen::VectorXd& params, std::span<const UnitPoint> xs,
                    const DropoutSpec& dropout, std::span<const std::uint64_t> keys) {
    const View v(params);
    const auto n = static_cast<Eigen::Index>(xs.size());
    Activations a;
    a.x.resize(kIn, n);
    for (Eigen::Index c = 0; c < n; ++c)
        for (int d = 0; d < kIn; ++d)
            a.x(d, c) = xs[static_cast<std::size_t>(c)][static_cast<std::size_t>(d)];
    const bool drop = dropout.rate > 0.0;
    if (drop) {
        a.m1 = dropout_mask(dropout, 1, n, keys);
        a.m2 = dropout_mask(dropout, 2, n, keys);
    }
    a.a1 = ((v.w1 * a.x).colwise() + v.b1).array().tanh().matrix();
    a.d1 = drop ? Eigen::MatrixXd(a.a1.cwiseProduct(a.m1)) : a.a1;
    a.a2 = ((v.w2 * a.d1).colwise() + v.b2).array().tanh().matrix();
    a.d2 = drop ? Eigen::MatrixXd(a.a2.cwiseProduct(a.m2)) : a.a2;
    a.out = (v.w3.transpose() * a.d2).array() + v.b3;
    return a;
}

}  // namespace

Eigen::Index MetaModel::parameter_count() { return kCount; }

MetaModel::MetaModel(Eigen::VectorXd params, double dropout_rate)
    : m_params(std::move(params)), m_dropout(dropout_rate) {
    if (m_params.size() != kCount)
        throw ArgumentError("MetaModel: expected " + std::to_string(kCount) + " parameters");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
        throw ArgumentError("MetaModel: dropout rate must lie in [0, 1)");
}

MetaModel MetaModel::initialize(std::uint64_t seed, double dropout_rate) {
    std::mt19937_64 rng(seed);
    Eigen::VectorXd p = Eigen::VectorXd::Zero(kCount);
    auto fill = [&](Eigen::Index offset, Eigen::Index count, int fan_in, int fan_out) {
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> u(-limit, limit);
        for (Eigen::Index i = 0; i < count; ++i)
            p(offset + i) = u(rng);
    };
    fill(kW1, kH * kIn, kIn, kH);
    fill(kW2, kH * kH, kH, kH);
    fill(kW3, kH, kH, 1);
    return MetaModel(std::move(p), dropout_rate);
}

double MetaModel::predict(const UnitPoint& x) const {
    return mlp_forward(m_params, std::span<const UnitPoint>(&x, 1), {})(0);
}

Eigen::VectorXd mlp_forward(const Eigen::VectorXd& params, std::span<const UnitPoint> xs,
                            const DropoutSpec& dropout, std::span<const std::uint64_t> keys) {
    if (xs.empty())
        return {};
    return forward(params, xs, dropout, keys).out.transpose();
}

double mse_loss(const Eigen::VectorXd& params, std::span<const Sample> samples,
                Eigen::VectorXd* grad, const DropoutSpec& dropout) {
    if (samples.empty())
        throw ArgumentError("mse_loss: no samples");
    std::vector<UnitPoint> xs;
    xs.reserve(samples.size());
    Eigen::RowVectorXd y(static_cast<Eigen::Index>(samples.size()));
    for (std::size_t i = 0; i < samples.size(); ++i) {
        xs.push_back(samples[i].x);
        y(static_cast<Eigen::Index>(i)) = samples[i].y;
    }
    const auto a = forward(params, xs, dropout, {});
    const double n = static_cast<double>(samples.size());
    const Eigen::RowVectorXd err = a.out - y;
    const double loss = err.squaredNorm() / n;
    if (!grad)
        return loss;

    const View v(params);
    const bool drop = dropout.rate > 0.0;
    grad->setZero(kCount);
    const Eigen::RowVectorXd dout = err * (2.0 / n);
    grad->segment(kW3, kH) = a.d2 * dout.transpose();
    (*grad)(kB3) = dout.sum();

    Eigen::MatrixXd dz2 = v.w3 * dout;
    if (drop)
        dz2 = dz2.cwiseProduct(a.m2);
    dz2 = dz2.cwiseProduct((1.0 - a.a2.array().square()).matrix());
    Eigen::Map<Eigen::MatrixXd>(grad->data() + kW2, kH, kH) = dz2 * a.d1.transpose();
    grad->segment(kB2, kH) = dz2.rowwise().sum();

    Eigen::MatrixXd dz1 = v.w2.transpose() * dz2;
    if (drop)
        dz1 = dz1.cwiseProduct(a.m1);
    dz1 = dz1.cwiseProduct((1.0 - a.a1.array().square()).matrix());
    Eigen::Map<Eigen::MatrixXd>(grad->data() + kW1, kH, kIn) = dz1 * a.x.transpose();
    grad->segment(kB1, kH) = dz1.rowwise().sum();
    return loss;
}

}  // namespace prefixlog::tuner
