// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "prefixlog/tuner/attention.hpp"

namespace oracle {

std::size_t pmc(const std::vector<prefixlog::TemplateId>& current,
                const std::vector<prefixlog::TemplateId>& candidate) {
    std::size_t best = 0;
    for (std::size_t k = 0; k <= candidate.size(); ++k) {
        std::map<prefixlog::TemplateId, int> need, have;
        for (std::size_t i = 0; i < k; ++i)
            ++need[candidate[i]];
        for (auto t : current)
            ++have[t];
        bool ok = true;
        for (const auto& [t, c] : need)
            ok = ok && have[t] >= c;
        if (ok)
            best = k;
    }
    return best;
}

std::size_t cache_hit_blocks(const std::vector<prefixlog::TokenSequence>& inserted,
                             const prefixlog::TokenSequence& tokens, std::size_t block_size) {
    std::size_t best = 0;
    for (const auto& seq : inserted) {
        std::size_t common = 0;
        while (common < seq.size() && common < tokens.size() && seq[common] == tokens[common])
            ++common;
        // Only blocks that are full in both sequences exist in the cache.
        best = std::max(best, common / block_size);
    }
    return best;
}

double percentile(std::vector<double> values, double p) {
    std::sort(values.begin(), values.end());
    const auto n = values.size();
    auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
    if (rank < 1)
        rank = 1;
    return values[rank - 1];
}

Eigen::VectorXd mse_gradient_fd(const Eigen::VectorXd& params,
                                std::span<const prefixlog::tuner::Sample> samples, double h) {
    Eigen::VectorXd g(params.size());
    Eigen::VectorXd p = params;
    for (Eigen::Index i = 0; i < params.size(); ++i) {
        const double orig = p[i];
        p[i] = orig + h;
        const double up = prefixlog::tuner::mse_loss(p, samples);
        p[i] = orig - h;
        const double down = prefixlog::tuner::mse_loss(p, samples);
        p[i] = orig;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

Eigen::VectorXd attention_objective_fd(const Eigen::VectorXd& target,
                                       std::span<const Eigen::VectorXd> sources,
                                       const Eigen::MatrixXd& wq, const Eigen::MatrixXd& wk,
                                       const Eigen::VectorXd& coeffs, double h) {
    auto objective = [&](const Eigen::MatrixXd& q, const Eigen::MatrixXd& k) {
        return prefixlog::tuner::attention_weights(target, sources, q, k).dot(coeffs);
    };
    Eigen::VectorXd g(wq.size() + wk.size());
    Eigen::MatrixXd q = wq, k = wk;
    Eigen::Index at = 0;
    for (Eigen::Index c = 0; c < q.cols(); ++c)
        for (Eigen::Index r = 0; r < q.rows(); ++r) {
            const double orig = q(r, c);
            q(r, c) = orig + h;
            const double up = objective(q, k);
            q(r, c) = orig - h;
            const double down = objective(q, k);
            q(r, c) = orig;
            g[at++] = (up - down) / (2.0 * h);
        }
    for (Eigen::Index c = 0; c < k.cols(); ++c)
        for (Eigen::Index r = 0; r < k.rows(); ++r) {
            const double orig = k(r, c);
            k(r, c) = orig + h;
            const double up = objective(q, k);
            k(r, c) = orig - h;
            const double down = objective(q, k);
            k(r, c) = orig;
            g[at++] = (up - down) / (2.0 * h);
        }
    return g;
}

double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

std::vector<double> replay_latencies(const prefixlog::SimulationResult& result, std::size_t n) {
    std::vector<double> arrival(n, 0.0), completion(n, -1.0);
    for (const auto& step : result.steps) {
        const double end = step.start + step.duration;
        for (auto i : step.admitted_ids)
            arrival[i] = end;
        for (auto i : step.completed_ids)
            completion[i] = end;
    }
    std::vector<double> lat(n);
    for (std::size_t i = 0; i < n; ++i)
        lat[i] = completion[i] - arrival[i];
    return lat;
}

prefixlog::Demonstration random_demo(prefixlog::PromptCodec& codec, std::mt19937_64& rng,
                                     std::size_t templates) {
    std::uniform_int_distribution<std::size_t> pick(0, templates - 1);
    std::uniform_int_distribution<int> value(0, 3);
    const auto t = pick(rng);
    const std::string tpl = "event" + std::to_string(t) + " status <*>";
    const std::string log = "event" + std::to_string(t) + " status " + std::to_string(value(rng));
    return codec.make_demonstration(log, tpl);
}

}  // namespace oracle
