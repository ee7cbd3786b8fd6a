// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "prefixlog/pair.hpp"
#include "prefixlog/workload.hpp"

namespace prefixlog {

inline constexpr std::int64_t kDefaultMaxPosition = 32768;

/// Scheduler knobs plus cache settings. Defaults mirror an untuned engine:
/// the token budget equals the model context length.
struct EngineConfig {
    std::int64_t max_num_batched_tokens = kDefaultMaxPosition;
    std::int64_t max_num_seqs = 256;
    double scheduler_delay_factor = 0.0;
    bool enable_prefix_caching = false;
    bool pair_enabled = false;
    std::size_t block_size = 16;
    std::size_t capacity_blocks = 2048;
    std::size_t icl_table_capacity = 256;
    std::int64_t max_position = kDefaultMaxPosition;

    /// Throws ConfigError when a field is outside its tunable range.
    void validate() const;
};

/// Linear step-time model, all terms in microseconds.
struct CostModel {
    double prefill_us_per_token = 40.0;
    double decode_us_per_token_per_seq = 20.0;
    double step_overhead_us = 500.0;

    void validate() const;
    double step_us(std::size_t prefill_tokens, std::size_t decode_seqs) const {
        return step_overhead_us + prefill_us_per_token * static_cast<double>(prefill_tokens) +
               decode_us_per_token_per_seq * static_cast<double>(decode_seqs);
    }
};

struct RequestState {
    std::size_t id = 0;
    double arrival_time = 0.0;  // seconds
    std::size_t prompt_tokens = 0;
    std::size_t cached_tokens = 0;
    std::size_t output_len = 0;
    std::size_t tokens_decoded = 0;
    std::optional<double> completion_time;
    std::size_t pmc = 0;

    double latency() const { return completion_time.value_or(arrival_time) - arrival_time; }
};

/// One engine iteration, kept for replay and debugging.
struct StepRecord {
    double start = 0.0;     // seconds
    double duration = 0.0;  // seconds
    std::vector<std::size_t> prefill_ids;
    std::vector<std::size_t> prefill_uncached;
    std::vector<std::size_t> decode_ids;
    std::vector<std::size_t> completed_ids;
    std::vector<std::size_t> admitted_ids;  // arrivals at the end of this step
    bool oversize_solo = false;

    std::size_t new_tokens() const {
        std::size_t n = decode_ids.size();
        for (auto u : prefill_uncached)
            n += u;
        return n;
    }
    std::size_t running_seqs() const { return prefill_ids.size() + decode_ids.size(); }
};

struct TraceMetrics {
    std::vector<double> latencies;  // seconds, by request id
    double p95_latency = 0.0;
    double mean_latency = 0.0;
    double throughput = 0.0;  // requests per second
    double makespan = 0.0;    // seconds
    std::optional<double> prefix_hit_rate;
    double prefill_time_share = 0.0;
    std::size_t completed = 0;
};

struct CacheStats {
    std::optional<double> hit_rate;
    double busy_time = 0.0;     // seconds
    double prefill_time = 0.0;  // seconds
};

struct PairStats {
    std::map<std::size_t, std::size_t> pmc_histogram;
    std::size_t refinements = 0;
    /// Refinements whose template multiset differs from the input. Must be 0.
    std::size_t multiset_violations = 0;
};

struct SimulationResult {
    TraceMetrics metrics;
    std::vector<RequestState> states;
    std::vector<StepRecord> steps;  // filled when record_steps is set
    PairStats pair;
    std::size_t cache_evictions = 0;
};

struct SimulationOptions {
    std::size_t concurrency = 100;
    bool record_steps = false;
};

/// Deterministic closed-loop continuous-batching simulation. When
/// cfg.pair_enabled, demonstration sets are refined at admission against
/// `pair_table` (or a fresh table of cfg.icl_table_capacity when null).
SimulationResult simulate(std::span<const Request> stream, const EngineConfig& cfg,
                          const CostModel& cost, const SimulationOptions& options,
                          ICLTable* pair_table = nullptr);

/// Nearest rank: the ceil(p * n)-th smallest value.
double percentile(std::span<const double> values, double p);

TraceMetrics compute_metrics(std::span<const RequestState> states, const CacheStats& cache);

struct CalibrationSample {
    double prefill_tokens = 0.0;
    double decode_seqs = 0.0;
    double step_us = 0.0;
};

/// Least-squares fit of the prefill and decode coefficients with the step
/// overhead held fixed. Needs two linearly independent samples.
CostModel calibrate_cost_model(std::span<const CalibrationSample> samples, double step_overhead_us);

}  // namespace prefixlog
