// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#include "prefixlog/engine.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include <Eigen/Dense>

#include "prefixlog/error.hpp"
#include "prefixlog/kv_cache.hpp"

namespace prefixlog {

void EngineConfig::validate() const {
    if (max_position < 4000)
        throw ConfigError("max_position must be >= 4000");
    if (max_num_batched_tokens < 4000 || max_num_batched_tokens > max_position)
        throw ConfigError("max_num_batched_tokens must lie in [4000, " +
                          std::to_string(max_position) + "]");
    if (max_num_seqs < 64 || max_num_seqs > 256)
        throw ConfigError("max_num_seqs must lie in [64, 256]");
    if (!(scheduler_delay_factor >= 0.0 && scheduler_delay_factor <= 2.0))
        throw ConfigError("scheduler_delay_factor must lie in [0, 2]");
    if (block_size == 0)
        throw ConfigError("block_size must be positive");
    if (icl_table_capacity == 0)
        throw ConfigError("icl_table_capacity must be positive");
    if (pair_enabled && !enable_prefix_caching)
        throw ConfigError("pair requires prefix caching");
}

void CostModel::validate() const {
    if (!(prefill_us_per_token >= 0.0) || !(decode_us_per_token_per_seq >= 0.0) ||
        !(step_overhead_us >= 0.0))
        throw ConfigError("cost model coefficients must be non-negative");
}

double percentile(std::span<const double> values, double p) {
    if (values.empty())
        throw ArgumentError("percentile: empty input");
    if (!(p > 0.0 && p <= 1.0))
        throw ArgumentError("percentile: p must lie in (0, 1]");
    std::vector<double> sorted(values.begin(), values.end());
    const auto n = sorted.size();
    auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
    rank = std::clamp<std::size_t>(rank, 1, n);
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1),
                     sorted.end());
    return sorted[rank - 1];
}

TraceMetrics compute_metrics(std::span<const RequestState> states, const CacheStats& cache) {
    TraceMetrics m;
    m.latencies.reserve(states.size());
    double first_arrival = std::numeric_limits<double>::infinity();
    double last_completion = 0.0;
    double sum = 0.0;
    for (const auto& s : states) {
        if (!s.completion_time)
            throw ArgumentError("compute_metrics: request " + std::to_string(s.id) +
                                " has not completed");
        m.latencies.push_back(s.latency());
        sum += s.latency();
        first_arrival = std::min(first_arrival, s.arrival_time);
        last_completion = std::max(last_completion, *s.completion_time);
    }
    m.completed = states.size();
    if (!states.empty()) {
        m.p95_latency = percentile(m.latencies, 0.95);
        m.mean_latency = sum / static_cast<double>(states.size());
        m.makespan = last_completion - first_arrival;
        m.throughput = m.makespan > 0.0 ? static_cast<double>(m.completed) / m.makespan : 0.0;
    }
    m.prefix_hit_rate = cache.hit_rate;
    m.prefill_time_share = cache.busy_time > 0.0 ? cache.prefill_time / cache.busy_time : 0.0;
    return m;
}

namespace {

bool same_multiset(const DemonstrationSet& a, const DemonstrationSet& b) {
    return template_multiset(a) == template_multiset(b);
}

}  // namespace

SimulationResult simulate(std::span<const Request> stream, const EngineConfig& cfg,
                          const CostModel& cost, const SimulationOptions& options,
                          ICLTable* pair_table) {
    if (stream.empty())
        throw ArgumentError("simulate: empty request stream");
    if (options.concurrency == 0)
        throw ArgumentError("simulate: concurrency must be >= 1");
    cfg.validate();
    cost.validate();

    SimulationResult result;
    std::optional<ICLTable> own_table;
    if (cfg.pair_enabled && pair_table == nullptr) {
        own_table.emplace(cfg.icl_table_capacity);
        pair_table = &*own_table;
    }
    PrefixCache cache(cfg.block_size, cfg.capacity_blocks);
    HitRateCounter hits;

    const std::size_t n = stream.size();
    auto& states = result.states;
    states.resize(n);
    std::vector<TokenSequence> tokens(n);

    std::deque<std::size_t> waiting;
    std::vector<std::size_t> running;
    std::size_t next = 0;
    std::size_t in_flight = 0;
    double now = 0.0;
    double busy = 0.0;
    double prefill_time = 0.0;
    double last_prompt_latency = 0.0;

    auto admit = [&](StepRecord* rec) {
        while (in_flight < options.concurrency && next < n) {
            const Request& req = stream[next];
            RequestState& st = states[next];
            st.id = req.id;
            st.arrival_time = now;
            st.output_len = req.output_token_len;
            if (cfg.pair_enabled) {
                auto refined = refine(*pair_table, req.prompt.ds);
                st.pmc = refined.pmc;
                ++result.pair.pmc_histogram[refined.pmc];
                ++result.pair.refinements;
                if (!same_multiset(refined.final_ds, req.prompt.ds))
                    ++result.pair.multiset_violations;
                Prompt p{req.prompt.instruction, std::move(refined.final_ds), req.prompt.query};
                tokens[next] = render_prompt(p);
            } else {
                tokens[next] = render_prompt(req.prompt);
            }
            st.prompt_tokens = tokens[next].size();
            waiting.push_back(next);
            if (rec)
                rec->admitted_ids.push_back(next);
            ++next;
            ++in_flight;
        }
    };

    auto finish = [&](std::size_t i) {
        states[i].completion_time = now;
        --in_flight;
    };

    admit(nullptr);
    const auto max_tokens = static_cast<std::size_t>(cfg.max_num_batched_tokens);
    const auto max_seqs = static_cast<std::size_t>(cfg.max_num_seqs);

    while (!waiting.empty() || !running.empty()) {
        StepRecord step;
        step.start = now;
        step.decode_ids = running;

        bool prompts_allowed = !waiting.empty();
        if (prompts_allowed && cfg.scheduler_delay_factor > 0.0 && !running.empty()) {
            const double oldest_wait = now - states[waiting.front()].arrival_time;
            prompts_allowed = oldest_wait >= cfg.scheduler_delay_factor * last_prompt_latency;
        }

        std::size_t budget = max_tokens > running.size() ? max_tokens - running.size() : 0;
        std::size_t prefill_tokens = 0;
        while (prompts_allowed && !waiting.empty()) {
            if (step.running_seqs() >= max_seqs)
                break;
            const std::size_t i = waiting.front();
            const auto& seq = tokens[i];
            std::size_t cached = 0;
            if (cfg.enable_prefix_caching) {
                // The last prompt token is always recomputed to produce logits.
                cached = std::min(cache.peek(seq).hit_tokens,
                                  seq.empty() ? std::size_t{0} : seq.size() - 1);
            }
            const std::size_t uncached = seq.size() - cached;
            if (uncached > budget) {
                if (uncached > max_tokens && step.prefill_ids.empty()) {
                    step.oversize_solo = true;
                    step.decode_ids.clear();
                } else {
                    break;
                }
            }
            if (cfg.enable_prefix_caching)
                hits.record(cache.lookup(seq));
            states[i].cached_tokens = cached;
            step.prefill_ids.push_back(i);
            step.prefill_uncached.push_back(uncached);
            prefill_tokens += uncached;
            budget = uncached > budget ? 0 : budget - uncached;
            waiting.pop_front();
            if (step.oversize_solo)
                break;
        }

        if (step.prefill_ids.empty() && step.decode_ids.empty())
            throw std::logic_error("simulate: scheduler made no progress");

        const double prefill_us = cost.prefill_us_per_token * static_cast<double>(prefill_tokens);
        step.duration = cost.step_us(prefill_tokens, step.decode_ids.size()) * 1e-6;
        now += step.duration;
        busy += step.duration;
        prefill_time += prefill_us * 1e-6;
        if (!step.prefill_ids.empty())
            last_prompt_latency = step.duration;

        // Decoding sequences advance one token; paused ones (solo step) wait.
        std::vector<std::size_t> still_running;
        still_running.reserve(running.size() + step.prefill_ids.size());
        for (auto i : running) {
            if (!step.oversize_solo && ++states[i].tokens_decoded >= states[i].output_len) {
                finish(i);
                step.completed_ids.push_back(i);
            } else {
                still_running.push_back(i);
            }
        }
        for (auto i : step.prefill_ids) {
            if (cfg.enable_prefix_caching)
                cache.insert(tokens[i]);
            if (states[i].output_len == 0) {
                finish(i);
                step.completed_ids.push_back(i);
            } else {
                still_running.push_back(i);
            }
        }
        running = std::move(still_running);

        admit(options.record_steps ? &step : nullptr);
        if (options.record_steps)
            result.steps.push_back(std::move(step));
    }

    CacheStats cs;
    cs.hit_rate = cfg.enable_prefix_caching ? hits.rate() : std::nullopt;
    cs.busy_time = busy;
    cs.prefill_time = prefill_time;
    result.metrics = compute_metrics(states, cs);
    result.cache_evictions = cache.evictions();
    return result;
}

CostModel calibrate_cost_model(std::span<const CalibrationSample> samples,
                               double step_overhead_us) {
    if (samples.size() < 2)
        throw ArgumentError("calibrate: need at least two timing samples");
    Eigen::MatrixXd a(samples.size(), 2);
    Eigen::VectorXd b(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        a(static_cast<Eigen::Index>(i), 0) = samples[i].prefill_tokens;
        a(static_cast<Eigen::Index>(i), 1) = samples[i].decode_seqs;
        b(static_cast<Eigen::Index>(i)) = samples[i].step_us - step_overhead_us;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < 2)
        throw ArgumentError("calibrate: timing samples do not determine both coefficients");
    const Eigen::Vector2d x = qr.solve(b);
    CostModel m;
    m.prefill_us_per_token = std::max(0.0, x(0));
    m.decode_us_per_token_per_seq = std::max(0.0, x(1));
    m.step_overhead_us = step_overhead_us;
    return m;
}

}  // namespace prefixlog
