// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#include "prefixlog/tuner/maml.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "prefixlog/error.hpp"
#include "prefixlog/hash.hpp"
#include "prefixlog/kernels.hpp"

namespace prefixlog::tuner {

namespace {

DropoutSpec step_dropout(const DropoutSpec& d, std::size_t step) {
    return {d.rate, hash_combine(d.seed, step)};
}

void check_finite(double loss, const Eigen::VectorXd& grad, const char* where) {
    if (!std::isfinite(loss) || !grad.allFinite())
        throw NumericError(std::string(where) + ": loss or gradient is not finite");
}

// Finite-difference Hessian-vector product of the support loss.
Eigen::VectorXd hessian_vector(const Eigen::VectorXd& theta, std::span<const Sample> support,
                               const Eigen::VectorXd& v, const DropoutSpec& dropout) {
    const double vnorm = v.norm();
    if (vnorm == 0.0)
        return Eigen::VectorXd::Zero(v.size());
    const double eps = 1e-5 * (1.0 + theta.norm()) / vnorm;
    Eigen::VectorXd gp, gm;
    mse_loss(theta + eps * v, support, &gp, dropout);
    mse_loss(theta - eps * v, support, &gm, dropout);
    return (gp - gm) / (2.0 * eps);
}

class Adam {
public:
    explicit Adam(Eigen::Index n) : m_m(Eigen::VectorXd::Zero(n)), m_v(Eigen::VectorXd::Zero(n)) {}

    void step(Eigen::VectorXd& x, const Eigen::VectorXd& g, double lr) {
        constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        ++m_t;
        m_m = b1 * m_m + (1.0 - b1) * g;
        m_v = b2 * m_v + (1.0 - b2) * g.cwiseProduct(g);
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(m_t));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(m_t));
        x.array() -= lr * (m_m.array() / c1) / ((m_v.array() / c2).sqrt() + eps);
    }

private:
    Eigen::VectorXd m_m, m_v;
    long m_t = 0;
};

Eigen::VectorXd flatten(const AttentionModule& a) {
    Eigen::VectorXd v(a.wq.size() + a.wk.size());
    v << Eigen::Map<const Eigen::VectorXd>(a.wq.data(), a.wq.size()),
        Eigen::Map<const Eigen::VectorXd>(a.wk.data(), a.wk.size());
    return v;
}

void unflatten(const Eigen::VectorXd& v, AttentionModule& a) {
    Eigen::Map<Eigen::VectorXd>(a.wq.data(), a.wq.size()) = v.head(a.wq.size());
    Eigen::Map<Eigen::VectorXd>(a.wk.data(), a.wk.size()) = v.tail(a.wk.size());
}

}  // namespace

Eigen::VectorXd inner_update(const Eigen::VectorXd& params, std::span<const Sample> support,
                             double alpha, std::size_t steps, const DropoutSpec& dropout) {
    if (support.empty())
        throw ArgumentError("inner_update: support set is empty");
    Eigen::VectorXd theta = params;
    Eigen::VectorXd grad;
    for (std::size_t k = 0; k < steps; ++k) {
        const double loss = mse_loss(theta, support, &grad, step_dropout(dropout, k));
        check_finite(loss, grad, "inner_update");
        theta -= alpha * grad;
    }
    return theta;
}

TaskOutcome task_outcome(const Eigen::VectorXd& params, std::span<const Sample> support,
                         std::span<const Sample> query, double alpha, std::size_t steps,
                         bool second_order, const DropoutSpec& dropout) {
    if (support.empty() || query.empty())
        throw ArgumentError("task_outcome: support and query must be non-empty");
    std::vector<Eigen::VectorXd> trajectory;
    Eigen::VectorXd theta = params;
    Eigen::VectorXd grad;
    for (std::size_t k = 0; k < steps; ++k) {
        if (second_order)
            trajectory.push_back(theta);
        const double loss = mse_loss(theta, support, &grad, step_dropout(dropout, k));
        check_finite(loss, grad, "inner_update");
        theta -= alpha * grad;
    }
    TaskOutcome out;
    out.query_loss = mse_loss(theta, query, &out.gradient, step_dropout(dropout, steps));
    check_finite(out.query_loss, out.gradient, "meta_train");
    if (second_order) {
        // d theta_{k+1} / d theta_k = I - alpha * H_k, applied in reverse.
        for (std::size_t k = steps; k-- > 0;)
            out.gradient -= alpha * hessian_vector(trajectory[k], support, out.gradient,
                                                   step_dropout(dropout, k));
    }
    return out;
}

Split split_samples(std::span<const Sample> samples, std::size_t support_size,
                    std::size_t query_size, std::uint64_t seed) {
    if (samples.size() < 2)
        throw ArgumentError("split_samples: need at least two samples");
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t s = std::min(support_size, samples.size() - 1);
    const std::size_t q = std::min(query_size, samples.size() - s);
    Split out;
    for (std::size_t i = 0; i < s; ++i)
        out.support.push_back(samples[order[i]]);
    for (std::size_t i = s; i < s + q; ++i)
        out.query.push_back(samples[order[i]]);
    return out;
}

MetaTrainResult meta_train(std::span<const TaskData> tasks, MetaModel model,
                           AttentionModule attention, const MetaTrainOptions& options) {
    if (tasks.empty())
        throw ArgumentError("meta_train: no source tasks");
    if (options.support_size == 0 || options.query_size == 0)
        throw ArgumentError("meta_train: support and query sizes must be positive");
    const double rate = options.train_dropout.value_or(model.dropout_rate());
    const std::size_t m = tasks.size();
    const bool fixed = options.fixed_target.has_value();
    const std::size_t rotations = fixed ? 1 : m;

    Adam model_opt(model.params().size());
    Eigen::VectorXd att_params = flatten(attention);
    Adam att_opt(att_params.size());

    MetaTrainResult result;
    result.epoch_loss.reserve(options.epochs);
    std::uint64_t update = 0;
    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        double epoch_sum = 0.0;
        for (std::size_t r = 0; r < rotations; ++r, ++update) {
            // Held-out rotation: task r is the target, the rest are sources.
            std::vector<std::size_t> src;
            for (std::size_t i = 0; i < m; ++i)
                if (fixed || m == 1 || i != r)
                    src.push_back(i);
            const Eigen::VectorXd& target = fixed ? *options.fixed_target : tasks[r].features;
            std::vector<Eigen::VectorXd> feats;
            for (auto i : src)
                feats.push_back(tasks[i].features);

            const auto k = static_cast<Eigen::Index>(src.size());
            const Eigen::VectorXd w = options.use_attention
                                          ? attention.weights(target, feats)
                                          : Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));

            const std::uint64_t update_seed = hash_combine(options.seed, update);
            std::vector<Split> splits;
            splits.reserve(src.size());
            std::vector<kernels::TaskJob> jobs;
            jobs.reserve(src.size());
            for (auto i : src)
                splits.push_back(split_samples(tasks[i].samples, options.support_size,
                                               options.query_size, hash_combine(update_seed, i)));
            for (std::size_t j = 0; j < src.size(); ++j)
                jobs.push_back({splits[j].support, splits[j].query,
                                {rate, hash_combine(hash_combine(update_seed, src[j]), 0x9d)}});
            const auto outcomes = kernels::meta_gradients(model.params(), jobs, options.alpha,
                                                          options.inner_steps,
                                                          options.second_order, options.exec);

            Eigen::VectorXd losses(k);
            Eigen::VectorXd grad = Eigen::VectorXd::Zero(model.params().size());
            for (Eigen::Index j = 0; j < k; ++j) {
                losses(j) = outcomes[static_cast<std::size_t>(j)].query_loss;
                grad += w(j) * outcomes[static_cast<std::size_t>(j)].gradient;
            }
            const double meta = w.dot(losses);
            if (!std::isfinite(meta))
                throw NumericError("meta_train: meta-loss diverged");
            epoch_sum += meta;
            model_opt.step(model.params(), grad, options.beta);

            if (options.use_attention) {
                // d(sum_j w_j L_j)/d l_j = w_j (L_j - meta)
                const Eigen::VectorXd dlogits = w.cwiseProduct((losses.array() - meta).matrix());
                AttentionModule g{Eigen::MatrixXd::Zero(attention.wq.rows(), attention.wq.cols()),
                                  Eigen::MatrixXd::Zero(attention.wk.rows(), attention.wk.cols())};
                attention.accumulate_gradient(target, feats, dlogits, g);
                att_opt.step(att_params, flatten(g), options.beta);
                unflatten(att_params, attention);
            }
        }
        result.epoch_loss.push_back(epoch_sum / static_cast<double>(rotations));
    }
    result.model = std::move(model);
    result.attention = std::move(attention);
    return result;
}

}  // namespace prefixlog::tuner
