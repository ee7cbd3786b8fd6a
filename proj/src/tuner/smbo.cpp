// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#include "prefixlog/tuner/smbo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include <json.hpp>

#include "prefixlog/error.hpp"
#include "prefixlog/hash.hpp"
#include "prefixlog/kernels.hpp"
#include "prefixlog/tuner/acquisition.hpp"
#include "prefixlog/tuner/lhs.hpp"

namespace prefixlog::tuner {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double safe_evaluate(const Evaluator& evaluate, const ConfigPoint& c) {
    try {
        const double v = evaluate(c);
        return std::isfinite(v) && v > 0.0 ? v : kInf;
    } catch (const std::exception&) {
        return kInf;
    }
}

struct Tracker {
    TuningResult result;

    void record(std::string phase, const ConfigPoint& c, double perf, std::optional<double> ei) {
        TuningStep s;
        s.index = result.log.size();
        s.phase = std::move(phase);
        s.config = c;
        s.perf = perf;
        s.ei = ei;
        if (result.log.empty() || perf < result.best.perf)
            result.best = {c, perf};
        s.best_so_far = result.best.perf;
        result.log.push_back(std::move(s));
    }
};

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double d = a.norm() * b.norm();
    return d > 0.0 ? a.dot(b) / d : 0.0;
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from_json(const json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json matrix_json(const Eigen::MatrixXd& m) {
    return {{"rows", m.rows()},
            {"cols", m.cols()},
            {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(data.size()) != rows * cols)
        throw FormatError("matrix size does not match its shape");
    return Eigen::Map<const Eigen::MatrixXd>(data.data(), rows, cols);
}

}  // namespace

std::vector<TaskData> make_task_data(const TuningHistory& history, const FeatureScaler& features,
                                     const TargetScaler& targets) {
    std::vector<TaskData> out;
    out.reserve(history.tasks.size());
    for (const auto& t : history.tasks) {
        TaskData d;
        d.features = features.transform(t.features);
        for (const auto& o : t.observations)
            if (std::isfinite(o.perf) && o.perf > 0.0)
                d.samples.push_back({o.config.normalized, targets.to_model(o.perf)});
        out.push_back(std::move(d));
    }
    return out;
}

Surrogate train_surrogate(const TuningHistory& history, const MetaTrainOptions& options,
                          double dropout_rate) {
    if (history.tasks.empty())
        throw ArgumentError("train_surrogate: history has no tasks");
    Surrogate s;
    s.space = history.space;
    s.features = FeatureScaler::fit(history.tasks);
    s.targets = TargetScaler::fit(history.tasks);
    const auto data = make_task_data(history, s.features, s.targets);
    auto init = MetaModel::initialize(hash_combine(options.seed, 1), dropout_rate);
    auto att = AttentionModule::initialize(static_cast<int>(kFeatureDims),
                                           hash_combine(options.seed, 2));
    auto trained = meta_train(data, std::move(init), std::move(att), options);
    s.model = std::move(trained.model);
    s.attention = std::move(trained.attention);
    return s;
}

void save_surrogate(const Surrogate& s, const std::filesystem::path& path) {
    json j;
    j["architecture"] = {{"inputs", MetaModel::kInputs},
                         {"hidden", {MetaModel::kHidden, MetaModel::kHidden}},
                         {"outputs", 1},
                         {"activation", "tanh"},
                         {"dropout", s.model.dropout_rate()},
                         {"attention_dim", s.attention.wq.cols()}};
    j["space"] = {{"max_num_batched_tokens", {s.space.min_batched_tokens, s.space.max_batched_tokens}},
                  {"max_num_seqs", {s.space.min_seqs, s.space.max_seqs}},
                  {"scheduler_delay_factor", {s.space.min_delay, s.space.max_delay}}};
    j["feature_scaler"] = {{"mean", vector_json(s.features.mean)},
                           {"stddev", vector_json(s.features.stddev)}};
    j["target_scaler"] = {{"mean", s.targets.mean}, {"stddev", s.targets.stddev}};
    j["params"] = vector_json(s.model.params());
    j["attention"] = {{"wq", matrix_json(s.attention.wq)}, {"wk", matrix_json(s.attention.wk)}};
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << j.dump() << '\n';
}

Surrogate load_surrogate(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open model " + path.string());
    try {
        const auto j = json::parse(in);
        const auto& arch = j.at("architecture");
        if (arch.at("inputs").get<int>() != MetaModel::kInputs ||
            arch.at("hidden").at(0).get<int>() != MetaModel::kHidden ||
            arch.at("hidden").at(1).get<int>() != MetaModel::kHidden)
            throw FormatError("model " + path.string() + ": unsupported architecture");
        Surrogate s;
        const auto& sp = j.at("space");
        s.space.min_batched_tokens = sp.at("max_num_batched_tokens").at(0).get<std::int64_t>();
        s.space.max_batched_tokens = sp.at("max_num_batched_tokens").at(1).get<std::int64_t>();
        s.space.min_seqs = sp.at("max_num_seqs").at(0).get<std::int64_t>();
        s.space.max_seqs = sp.at("max_num_seqs").at(1).get<std::int64_t>();
        s.space.min_delay = sp.at("scheduler_delay_factor").at(0).get<double>();
        s.space.max_delay = sp.at("scheduler_delay_factor").at(1).get<double>();
        s.features.mean = vector_from_json(j.at("feature_scaler").at("mean"));
        s.features.stddev = vector_from_json(j.at("feature_scaler").at("stddev"));
        s.targets.mean = j.at("target_scaler").at("mean").get<double>();
        s.targets.stddev = j.at("target_scaler").at("stddev").get<double>();
        s.model = MetaModel(vector_from_json(j.at("params")), arch.at("dropout").get<double>());
        s.attention.wq = matrix_from_json(j.at("attention").at("wq"));
        s.attention.wk = matrix_from_json(j.at("attention").at("wk"));
        if (s.features.mean.size() != static_cast<Eigen::Index>(kFeatureDims) ||
            s.attention.wq.rows() != static_cast<Eigen::Index>(kFeatureDims) ||
            s.attention.wk.rows() != s.attention.wq.rows() ||
            s.attention.wk.cols() != s.attention.wq.cols())
            throw FormatError("model " + path.string() + ": inconsistent dimensions");
        return s;
    } catch (const json::exception& ex) {
        throw FormatError("model " + path.string() + ": " + ex.what());
    } catch (const ArgumentError& ex) {
        throw FormatError("model " + path.string() + ": " + ex.what());
    }
}

std::vector<ConfigPoint> warm_start(const TaskFeatures& target, const TuningHistory& history,
                                    const FeatureScaler& scaler, std::size_t k) {
    const Eigen::VectorXd t = scaler.transform(target);
    std::vector<std::pair<double, std::size_t>> ranked;
    for (std::size_t i = 0; i < history.tasks.size(); ++i)
        ranked.emplace_back(cosine(t, scaler.transform(history.tasks[i].features)), i);
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<ConfigPoint> out;
    for (const auto& [sim, i] : ranked) {
        if (out.size() >= k)
            break;
        const auto best = history.tasks[i].best();
        if (best && std::find(out.begin(), out.end(), best->config) == out.end())
            out.push_back(best->config);
    }
    return out;
}

TuningResult smbo_tune(const Evaluator& evaluate, const Surrogate& surrogate,
                       const TuningHistory& history, const TaskFeatures& target,
                       const SmboOptions& options) {
    if (options.budget == 0)
        throw ArgumentError("smbo_tune: budget must be >= 1");
    if (options.pool_size == 0 || options.mc_passes == 0)
        throw ArgumentError("smbo_tune: pool size and MC passes must be positive");
    Tracker tracker;
    const Eigen::VectorXd target_std = surrogate.features.transform(target);

    if (!history.tasks.empty()) {
        std::vector<Eigen::VectorXd> feats;
        for (const auto& t : history.tasks)
            feats.push_back(surrogate.features.transform(t.features));
        tracker.result.source_weights = surrogate.attention.weights(target_std, feats);
    }

    for (const auto& c : warm_start(target, history, surrogate.features, options.warm_start)) {
        if (tracker.result.log.size() >= options.budget)
            break;
        tracker.record("warm_start", c, safe_evaluate(evaluate, c), std::nullopt);
    }
    if (tracker.result.log.size() >= options.budget)
        return tracker.result;

    Eigen::VectorXd theta = surrogate.model.params();
    if (options.specialize_epochs > 0 && !history.tasks.empty()) {
        auto opts = options.specialize;
        opts.epochs = options.specialize_epochs;
        opts.fixed_target = target_std;
        opts.use_attention = true;
        opts.seed = hash_combine(options.seed, 0x5e);
        opts.exec = options.exec;
        const auto data = make_task_data(history, surrogate.features, surrogate.targets);
        theta = meta_train(data, surrogate.model, surrogate.attention, opts).model.params();
    }

    for (std::size_t step = 0; tracker.result.log.size() < options.budget; ++step) {
        const std::uint64_t step_seed = hash_combine(options.seed, step);
        std::vector<Sample> observed;
        for (const auto& s : tracker.result.log)
            if (std::isfinite(s.perf))
                observed.push_back({s.config.normalized, surrogate.targets.to_model(s.perf)});

        Eigen::VectorXd adapted = theta;
        if (!observed.empty())
            adapted = adapt(theta, observed, options.alpha, options.adapt_steps,
                            {options.dropout_rate, hash_combine(step_seed, 3)});

        const auto pool = lhs_sample(surrogate.space, options.pool_size, hash_combine(step_seed, 1));
        std::vector<UnitPoint> xs;
        xs.reserve(pool.size());
        for (const auto& c : pool)
            xs.push_back(c.normalized);
        const auto preds = kernels::predict_mc_batch(adapted, xs, options.mc_passes,
                                                     options.dropout_rate,
                                                     hash_combine(step_seed, 2), options.exec);

        double best_model = kInf;
        for (const auto& s : observed)
            best_model = std::min(best_model, s.y);
        std::size_t pick = 0;
        double pick_ei = -kInf;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            const double sigma = std::sqrt(preds[i].variance);
            // With no finite observation every candidate is an improvement;
            // rank by predicted mean instead.
            const double ei = std::isfinite(best_model)
                                  ? expected_improvement(preds[i].mean, sigma, best_model, options.xi)
                                  : -preds[i].mean;
            if (ei > pick_ei || (ei == pick_ei && preds[i].mean < preds[pick].mean)) {
                pick = i;
                pick_ei = ei;
            }
        }
        tracker.record("ei", pool[pick], safe_evaluate(evaluate, pool[pick]), pick_ei);
    }
    return tracker.result;
}

TuningResult random_search(const Evaluator& evaluate, const ConfigSpace& space,
                           std::size_t budget, std::uint64_t seed) {
    if (budget == 0)
        throw ArgumentError("random_search: budget must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Tracker tracker;
    for (std::size_t i = 0; i < budget; ++i) {
        const UnitPoint p{u(rng), u(rng), u(rng)};
        const auto c = space.from_unit(p);
        tracker.record("random", c, safe_evaluate(evaluate, c), std::nullopt);
    }
    return tracker.result;
}

std::optional<std::size_t> evaluations_to_reach(const TuningResult& result, double optimum,
                                                double tolerance) {
    for (const auto& s : result.log)
        if (s.best_so_far <= optimum * (1.0 + tolerance))
            return s.index + 1;
    return std::nullopt;
}

}  // namespace prefixlog::tuner
