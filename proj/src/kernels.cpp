// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#include "prefixlog/kernels.hpp"

#include <exception>

#include "prefixlog/error.hpp"
#include "prefixlog/hash.hpp"

namespace prefixlog::kernels {

namespace {

// Runs body(i) for i in [0, n). Exceptions inside the parallel region are
// captured and the first one (by index) is rethrown afterwards.
template <class Body>
void for_each_index(std::size_t n, Exec exec, Body&& body) {
    if (exec == Exec::serial || n < 2) {
        for (std::size_t i = 0; i < n; ++i)
            body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(n);
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

}  // namespace

std::vector<std::vector<std::size_t>> select_examples_batch(
    std::span<const TokenBag> queries, std::span<const TokenBag> candidates, std::size_t n,
    SimilarityMetric metric, const std::vector<std::vector<std::uint8_t>>& masks, Exec exec) {
    if (!masks.empty() && masks.size() != queries.size())
        throw ArgumentError("select_examples_batch: one mask per query required");
    std::vector<std::vector<std::size_t>> out(queries.size());
    for_each_index(queries.size(), exec, [&](std::size_t q) {
        const std::span<const std::uint8_t> mask =
            masks.empty() ? std::span<const std::uint8_t>{} : std::span(masks[q]);
        out[q] = select_example_indices(queries[q], candidates, n, metric, mask);
    });
    return out;
}

std::vector<McPrediction> predict_mc_batch(const Eigen::VectorXd& params,
                                           std::span<const tuner::UnitPoint> points,
                                           std::size_t passes, double dropout_rate,
                                           std::uint64_t seed, Exec exec) {
    if (passes == 0)
        throw ArgumentError("predict_mc: need at least one pass");
    const auto m = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd samples(m, static_cast<Eigen::Index>(passes));
    for_each_index(passes, exec, [&](std::size_t p) {
        const tuner::DropoutSpec d{dropout_rate, hash_combine(seed, p)};
        samples.col(static_cast<Eigen::Index>(p)) = tuner::mlp_forward(params, points, d);
    });
    std::vector<McPrediction> out(points.size());
    const double inv = 1.0 / static_cast<double>(passes);
    for (Eigen::Index i = 0; i < m; ++i) {
        // Shifted by the first pass: identical passes give exactly zero variance.
        const Eigen::ArrayXd d = (samples.row(i).array() - samples(i, 0)).transpose();
        const double shift = d.sum() * inv;
        const double var = (d - shift).square().sum() * inv;
        out[static_cast<std::size_t>(i)] = {samples(i, 0) + shift, var};
    }
    return out;
}

std::vector<tuner::TaskOutcome> meta_gradients(const Eigen::VectorXd& params,
                                               std::span<const TaskJob> jobs, double alpha,
                                               std::size_t steps, bool second_order, Exec exec) {
    std::vector<tuner::TaskOutcome> out(jobs.size());
    for_each_index(jobs.size(), exec, [&](std::size_t i) {
        out[i] = tuner::task_outcome(params, jobs[i].support, jobs[i].query, alpha, steps,
                                     second_order, jobs[i].dropout);
    });
    return out;
}

std::vector<double> evaluate_batch(std::size_t count, const std::function<double(std::size_t)>& fn,
                                   Exec exec) {
    std::vector<double> out(count);
    for_each_index(count, exec, [&](std::size_t i) { out[i] = fn(i); });
    return out;
}

}  // namespace prefixlog::kernels
