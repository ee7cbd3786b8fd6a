// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#include "prefixlog/tuner/history.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include <json.hpp>

#include "prefixlog/engine.hpp"
#include "prefixlog/error.hpp"
#include "prefixlog/kv_cache.hpp"

namespace prefixlog::tuner {

using nlohmann::json;

TaskFeatures workload_features(std::span<const Request> stream, std::size_t concurrency,
                               std::size_t block_size) {
    TaskFeatures f{};
    if (stream.empty())
        return f;
    std::vector<double> prompt_lens;
    prompt_lens.reserve(stream.size());
    double out_sum = 0.0;
    PrefixCache cache(block_size);
    HitRateCounter hits;
    std::set<TemplateId> templates;
    for (const auto& r : stream) {
        const auto tokens = render_prompt(r.prompt);
        prompt_lens.push_back(static_cast<double>(tokens.size()));
        out_sum += static_cast<double>(r.output_token_len);
        hits.record(cache.lookup(tokens));
        cache.insert(tokens);
        for (const auto& d : r.prompt.ds)
            templates.insert(d.template_id);
    }
    double sum = 0.0;
    for (auto v : prompt_lens)
        sum += v;
    const auto n = static_cast<double>(stream.size());
    f[0] = sum / n;
    f[1] = percentile(prompt_lens, 0.95);
    f[2] = out_sum / n;
    f[3] = static_cast<double>(concurrency);
    f[4] = hits.rate().value_or(0.0);
    f[5] = static_cast<double>(templates.size());
    return f;
}

std::optional<Observation> SourceTask::best() const {
    std::optional<Observation> out;
    for (const auto& o : observations)
        if (std::isfinite(o.perf) && (!out || o.perf < out->perf))
            out = o;
    return out;
}

namespace {

json config_json(const ConfigPoint& c) {
    return {{"max_num_batched_tokens", c.max_num_batched_tokens},
            {"max_num_seqs", c.max_num_seqs},
            {"scheduler_delay_factor", c.scheduler_delay_factor}};
}

ConfigPoint config_from_json(const json& j, const ConfigSpace& space) {
    return space.from_raw(j.at("max_num_batched_tokens").get<std::int64_t>(),
                          j.at("max_num_seqs").get<std::int64_t>(),
                          j.at("scheduler_delay_factor").get<double>());
}

// JSON has no infinity; failed evaluations are stored as null.
json perf_json(double perf) { return std::isfinite(perf) ? json(perf) : json(nullptr); }

double perf_from_json(const json& j) {
    return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

}  // namespace

void save_history(const TuningHistory& history, const std::filesystem::path& path) {
    json j;
    j["version"] = 1;
    j["space"] = {{"max_num_batched_tokens", {history.space.min_batched_tokens,
                                              history.space.max_batched_tokens}},
                  {"max_num_seqs", {history.space.min_seqs, history.space.max_seqs}},
                  {"scheduler_delay_factor", {history.space.min_delay, history.space.max_delay}}};
    j["feature_names"] = kFeatureNames;
    auto& tasks = j["tasks"] = json::array();
    for (const auto& t : history.tasks) {
        json obs = json::array();
        for (const auto& o : t.observations) {
            auto e = config_json(o.config);
            e["perf"] = perf_json(o.perf);
            obs.push_back(std::move(e));
        }
        json task = {{"name", t.name}, {"features", t.features}, {"observations", std::move(obs)}};
        if (auto b = t.best()) {
            auto e = config_json(b->config);
            e["perf"] = b->perf;
            task["best"] = std::move(e);
        }
        tasks.push_back(std::move(task));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

TuningHistory load_history(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open history " + path.string());
    try {
        const auto j = json::parse(in);
        TuningHistory h;
        if (j.contains("space")) {
            const auto& s = j.at("space");
            h.space.min_batched_tokens = s.at("max_num_batched_tokens").at(0).get<std::int64_t>();
            h.space.max_batched_tokens = s.at("max_num_batched_tokens").at(1).get<std::int64_t>();
            h.space.min_seqs = s.at("max_num_seqs").at(0).get<std::int64_t>();
            h.space.max_seqs = s.at("max_num_seqs").at(1).get<std::int64_t>();
            h.space.min_delay = s.at("scheduler_delay_factor").at(0).get<double>();
            h.space.max_delay = s.at("scheduler_delay_factor").at(1).get<double>();
        }
        for (const auto& t : j.at("tasks")) {
            SourceTask task;
            task.name = t.value("name", "");
            const auto feats = t.at("features").get<std::vector<double>>();
            if (feats.size() != kFeatureDims)
                throw FormatError("history " + path.string() + ": task '" + task.name +
                                  "' has " + std::to_string(feats.size()) + " features");
            std::copy(feats.begin(), feats.end(), task.features.begin());
            for (const auto& o : t.at("observations"))
                task.observations.push_back({config_from_json(o, h.space), perf_from_json(o.at("perf"))});
            h.tasks.push_back(std::move(task));
        }
        return h;
    } catch (const json::exception& ex) {
        throw FormatError("history " + path.string() + ": " + ex.what());
    }
}

FeatureScaler FeatureScaler::fit(std::span<const SourceTask> tasks) {
    FeatureScaler s;
    const auto d = static_cast<Eigen::Index>(kFeatureDims);
    s.mean = Eigen::VectorXd::Zero(d);
    s.stddev = Eigen::VectorXd::Ones(d);
    if (tasks.empty())
        return s;
    for (const auto& t : tasks)
        s.mean += Eigen::Map<const Eigen::VectorXd>(t.features.data(), d);
    s.mean /= static_cast<double>(tasks.size());
    Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
    for (const auto& t : tasks)
        var += (Eigen::Map<const Eigen::VectorXd>(t.features.data(), d) - s.mean).array().square().matrix();
    var /= static_cast<double>(tasks.size());
    for (Eigen::Index i = 0; i < d; ++i)
        s.stddev(i) = var(i) > 1e-18 ? std::sqrt(var(i)) : 1.0;
    return s;
}

Eigen::VectorXd FeatureScaler::transform(const TaskFeatures& f) const {
    const Eigen::Map<const Eigen::VectorXd> raw(f.data(), static_cast<Eigen::Index>(f.size()));
    return ((raw - mean).array() / stddev.array()).matrix();
}

TargetScaler TargetScaler::fit(std::span<const SourceTask> tasks) {
    std::vector<double> logs;
    for (const auto& t : tasks)
        for (const auto& o : t.observations)
            if (std::isfinite(o.perf) && o.perf > 0.0)
                logs.push_back(std::log(o.perf));
    TargetScaler s;
    if (logs.empty())
        return s;
    double sum = 0.0;
    for (auto l : logs)
        sum += l;
    s.mean = sum / static_cast<double>(logs.size());
    double var = 0.0;
    for (auto l : logs)
        var += (l - s.mean) * (l - s.mean);
    var /= static_cast<double>(logs.size());
    s.stddev = var > 1e-18 ? std::sqrt(var) : 1.0;
    return s;
}

}  // namespace prefixlog::tuner
