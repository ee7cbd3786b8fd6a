// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#include <random>
#include <set>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "prefixlog/error.hpp"
#include "prefixlog/tuner/acquisition.hpp"
#include "prefixlog/tuner/attention.hpp"
#include "prefixlog/tuner/lhs.hpp"
#include "prefixlog/tuner/maml.hpp"
#include "prefixlog/tuner/mlp.hpp"

using namespace prefixlog;
using namespace prefixlog::tuner;

namespace {

std::vector<Sample> random_samples(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<Sample> out(n);
    for (auto& s : out) {
        s.x = {u(rng), u(rng), u(rng)};
        s.y = std::sin(3 * s.x[0]) + s.x[1] * s.x[2];
    }
    return out;
}

double max_rel_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return (a - b).cwiseAbs().maxCoeff() / std::max(1e-8, b.cwiseAbs().maxCoeff());
}

}  // namespace

TEST(Mlp, ParameterCountAndShape) {
    EXPECT_EQ(MetaModel::parameter_count(), 3 * 64 + 64 + 64 * 64 + 64 + 64 + 1);
    const auto m = MetaModel::initialize(1);
    EXPECT_EQ(m.params().size(), MetaModel::parameter_count());
    EXPECT_TRUE(std::isfinite(m.predict({0.1, 0.5, 0.9})));
}

TEST(Mlp, AnalyticGradientMatchesFiniteDifferences) {
    const auto samples = random_samples(20, 2);
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto m = MetaModel::initialize(seed);
        Eigen::VectorXd g;
        mse_loss(m.params(), samples, &g);
        EXPECT_LE(max_rel_error(g, oracle::mse_gradient_fd(m.params(), samples, 1e-6)), 1e-4);
    }
}

TEST(Mlp, DropoutMasksAreReproducible) {
    const auto m = MetaModel::initialize(4);
    const std::vector<UnitPoint> xs{{0.1, 0.2, 0.3}, {0.4, 0.5, 0.6}};
    const DropoutSpec d{0.5, 9};
    EXPECT_EQ(mlp_forward(m.params(), xs, d), mlp_forward(m.params(), xs, d));
    const auto off = mlp_forward(m.params(), xs, {});
    EXPECT_NEAR(off[0], m.predict(xs[0]), 1e-12);
}

TEST(InnerUpdate, OneStepIsPlainGradientDescent) {
    const auto samples = random_samples(10, 5);
    const auto m = MetaModel::initialize(6);
    Eigen::VectorXd g;
    mse_loss(m.params(), samples, &g);
    const auto updated = inner_update(m.params(), samples, 0.1, 1);
    EXPECT_LE((updated - (m.params() - 0.1 * g)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(inner_update(m.params(), samples, 0.0, 5), m.params());
    EXPECT_EQ(inner_update(m.params(), samples, 0.1, 0), m.params());
}

TEST(InnerUpdate, SmallStepReducesLoss) {
    const auto samples = random_samples(30, 7);
    const auto m = MetaModel::initialize(8);
    const double before = mse_loss(m.params(), samples);
    EXPECT_LT(mse_loss(inner_update(m.params(), samples, 0.05, 5), samples), before);
}

TEST(InnerUpdate, NonFiniteInputThrows) {
    auto samples = random_samples(3, 1);
    samples[0].y = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(inner_update(MetaModel::initialize(1).params(), samples, 0.1, 1), NumericError);
}

TEST(Attention, EqualScoresGiveUniformWeights) {
    const Eigen::MatrixXd w = Eigen::MatrixXd::Identity(2, 2);
    const Eigen::VectorXd t = Eigen::VectorXd::Zero(2);
    const std::vector<Eigen::VectorXd> src(4, Eigen::VectorXd::Ones(2));
    const auto a = attention_weights(t, src, w, w);
    for (Eigen::Index i = 0; i < 4; ++i)
        EXPECT_NEAR(a[i], 0.25, 1e-12);
}

TEST(Attention, IdentityProjectionExample) {
    const Eigen::MatrixXd w = Eigen::MatrixXd::Identity(2, 2);
    Eigen::VectorXd t(2), s1(2), s2(2);
    t << 1, 0;
    s1 << 1, 0;
    s2 << 0, 1;
    const std::vector<Eigen::VectorXd> src{s1, s2};
    const auto a = softmax(attention_logits(t, src, w, w, 1.0));
    EXPECT_NEAR(a[0], 0.7311, 1e-4);
    EXPECT_NEAR(a[1], 0.2689, 1e-4);
}

TEST(Attention, PermutationEquivariantAndNormalized) {
    const auto mod = AttentionModule::initialize(6, 3, false);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    auto vec = [&] {
        Eigen::VectorXd v(6);
        for (auto& x : v)
            x = g(rng);
        return v;
    };
    const auto t = vec();
    std::vector<Eigen::VectorXd> src{vec(), vec(), vec(), vec()};
    const auto a = mod.weights(t, src);
    EXPECT_NEAR(a.sum(), 1.0, 1e-12);
    EXPECT_TRUE((a.array() >= 0).all());
    std::vector<Eigen::VectorXd> perm{src[2], src[0], src[3], src[1]};
    const auto b = mod.weights(t, perm);
    EXPECT_NEAR(b[0], a[2], 1e-12);
    EXPECT_NEAR(b[1], a[0], 1e-12);
    EXPECT_NEAR(b[2], a[3], 1e-12);
    EXPECT_NEAR(b[3], a[1], 1e-12);
}

TEST(Attention, TiedInitShares) {
    const auto tied = AttentionModule::initialize(6, 1, true, 8);
    EXPECT_EQ(tied.wq, tied.wk);
    EXPECT_EQ(tied.wq.rows(), 6);
    EXPECT_EQ(tied.wq.cols(), 8);
}

TEST(Attention, GradientMatchesFiniteDifferences) {
    for (std::uint64_t seed : {1, 2}) {
        const auto mod = AttentionModule::initialize(6, seed, false, 8);
        std::mt19937_64 rng(seed + 10);
        std::normal_distribution<double> g;
        auto vec = [&](Eigen::Index n) {
            Eigen::VectorXd v(n);
            for (auto& x : v)
                x = g(rng);
            return v;
        };
        const auto t = vec(6);
        std::vector<Eigen::VectorXd> src{vec(6), vec(6), vec(6), vec(6), vec(6)};
        const auto c = vec(5);
        const auto w = mod.weights(t, src);
        // d(sum w_i c_i)/d l_j = w_j (c_j - w.c)
        const Eigen::VectorXd dlogits = (w.array() * (c.array() - w.dot(c))).matrix();
        AttentionModule grad;
        grad.wq = Eigen::MatrixXd::Zero(6, 8);
        grad.wk = Eigen::MatrixXd::Zero(6, 8);
        mod.accumulate_gradient(t, src, dlogits, grad);
        Eigen::VectorXd flat(grad.wq.size() + grad.wk.size());
        flat << Eigen::Map<const Eigen::VectorXd>(grad.wq.data(), grad.wq.size()),
            Eigen::Map<const Eigen::VectorXd>(grad.wk.data(), grad.wk.size());
        const auto fd = oracle::attention_objective_fd(t, src, mod.wq, mod.wk, c, 1e-6);
        EXPECT_LE(max_rel_error(flat, fd), 1e-4);
    }
}

TEST(ExpectedImprovement, Cases) {
    EXPECT_EQ(expected_improvement(1.0, 0.0, 0.5, 0.0), 0.0);
    EXPECT_NEAR(expected_improvement(0.3, 0.0, 0.5, 0.0), 0.2, 1e-15);
    EXPECT_NEAR(expected_improvement(0.5, 1.0, 0.5, 0.0), oracle::normal_pdf(0.0), 1e-12);
    EXPECT_THROW(expected_improvement(0, -1, 0, 0), ArgumentError);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2, 2), s(0.01, 2);
    for (int i = 0; i < 1000; ++i) {
        const double mu = u(rng), sigma = s(rng), best = u(rng), xi = 0.01;
        const double z = (best - mu - xi) / sigma;
        const double expect = (best - mu - xi) * oracle::normal_cdf(z) + sigma * oracle::normal_pdf(z);
        ASSERT_NEAR(expected_improvement(mu, sigma, best, xi), std::max(expect, 0.0), 1e-12);
        ASSERT_GE(expected_improvement(mu, sigma, best, xi), 0.0);
    }
}

TEST(ExpectedImprovement, Monotone) {
    double prev = 0.0;
    for (double sigma = 0.01; sigma < 3.0; sigma += 0.01) {
        const double ei = expected_improvement(0.4, sigma, 0.5, 0.01);
        EXPECT_GE(ei, prev - 1e-15);
        prev = ei;
    }
    prev = 1e9;
    for (double mu = -1.0; mu < 1.0; mu += 0.01) {
        const double ei = expected_improvement(mu, 0.3, 0.5, 0.01);
        EXPECT_LE(ei, prev + 1e-15);
        prev = ei;
    }
}

TEST(PredictMc, ZeroDropoutHasNoVariance) {
    const auto m = MetaModel::initialize(2);
    const UnitPoint x{0.3, 0.6, 0.9};
    auto one = predict_mc(m.params(), x, 1, 0.0, 1);
    EXPECT_EQ(one.variance, 0.0);
    EXPECT_NEAR(one.mean, m.predict(x), 1e-12);
    auto many = predict_mc(m.params(), x, 30, 0.0, 1);
    EXPECT_EQ(many.variance, 0.0);
    auto noisy = predict_mc(m.params(), x, 30, 0.3, 1);
    EXPECT_GT(noisy.variance, 0.0);
}

TEST(Lhs, EachStratumHoldsOneSample) {
    for (std::size_t n : {1u, 7u, 100u}) {
        const auto pts = latin_hypercube(n, 3, n);
        ASSERT_EQ(pts.size(), n);
        for (std::size_t d = 0; d < 3; ++d) {
            std::set<std::size_t> strata;
            for (const auto& p : pts) {
                ASSERT_GE(p[d], 0.0);
                ASSERT_LT(p[d], 1.0);
                strata.insert(static_cast<std::size_t>(p[d] * static_cast<double>(n)));
            }
            EXPECT_EQ(strata.size(), n);
        }
    }
    EXPECT_EQ(latin_hypercube(5, 3, 9), latin_hypercube(5, 3, 9));
}

TEST(ConfigSpace, RoundTripAndRanges) {
    const ConfigSpace space;
    for (const auto& p : lhs_sample(space, 50, 4)) {
        EXPECT_GE(p.max_num_batched_tokens, 4000);
        EXPECT_LE(p.max_num_batched_tokens, kDefaultMaxPosition);
        EXPECT_GE(p.max_num_seqs, 64);
        EXPECT_LE(p.max_num_seqs, 256);
        EXPECT_GE(p.scheduler_delay_factor, 0.0);
        EXPECT_LE(p.scheduler_delay_factor, 2.0);
        EXPECT_EQ(space.from_unit(p.normalized), p);
        EXPECT_NO_THROW(apply_config(p, EngineConfig{}).validate());
    }
    const auto lo = space.from_unit({0, 0, 0});
    EXPECT_EQ(lo.max_num_batched_tokens, 4000);
    EXPECT_EQ(lo.max_num_seqs, 64);
    const auto clamped = space.from_raw(1, 1000, 9.0);
    EXPECT_EQ(clamped.max_num_batched_tokens, 4000);
    EXPECT_EQ(clamped.max_num_seqs, 256);
    EXPECT_EQ(clamped.scheduler_delay_factor, 2.0);
    EXPECT_EQ(ConfigSpace::for_max_position(8192).max_batched_tokens, 8192);
}
