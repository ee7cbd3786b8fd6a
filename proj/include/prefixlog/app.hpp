// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "prefixlog/engine.hpp"
#include "prefixlog/exec.hpp"
#include "prefixlog/tuner/smbo.hpp"
#include "prefixlog/workload.hpp"

namespace prefixlog::app {

enum class Mode { baseline, pc, pair, pair_tune };

/// "default", "pc", "pair" or "pair+tune".
Mode parse_mode(std::string_view name);
std::string_view to_string(Mode mode);

/// Base engine settings with the cache switches implied by `mode`.
EngineConfig engine_for_mode(EngineConfig base, Mode mode);

struct ExperimentConfig {
    /// CSV paths or "synthetic:<seed>" for the built-in hotspot corpus.
    std::vector<std::string> datasets{"synthetic:1"};
    std::size_t synthetic_records = 2000;
    WorkloadSpec workload = default_workload();
    EngineConfig engine;
    CostModel cost;
    std::vector<Mode> modes{Mode::baseline, Mode::pc, Mode::pair};
    std::uint64_t seed = 1;
    std::filesystem::path output_dir = "out";

    // Tuning.
    std::optional<std::filesystem::path> history;
    bool bootstrap = false;
    std::size_t bootstrap_tasks = 3;
    std::size_t profile_points = 100;
    std::size_t budget = 15;
    std::size_t meta_epochs = 200;
    std::size_t specialize_epochs = 200;

    Exec exec = Exec::parallel;

    static WorkloadSpec default_workload();

    /// Throws ConfigError on any out-of-range field.
    void validate() const;
};

/// Flat key/value view used by config files, environment overrides and the
/// report header. Keys are lower snake case.
std::vector<std::string> config_keys();
void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value);
std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& cfg);

/// `key = value` lines; `#` starts a comment. Unknown keys are errors.
void apply_config_file(ExperimentConfig& cfg, const std::filesystem::path& path);
/// PREFIXLOG_<KEY> variables, key upper-cased.
void apply_environment(ExperimentConfig& cfg);

struct Workload {
    std::string name;
    std::vector<LogRecord> records;
    std::vector<Request> stream;
};

std::vector<LogRecord> load_records(const std::string& dataset, std::size_t synthetic_records);
std::string dataset_name(const std::string& dataset);
Workload prepare_workload(const ExperimentConfig& cfg, const std::string& dataset,
                          PromptCodec& codec);

struct TuneReport {
    tuner::TuningResult result;
    EngineConfig best_engine;
    double default_perf = 0.0;  // PAIR engine at the base config
    tuner::Surrogate surrogate;
    std::optional<tuner::TuningHistory> bootstrapped;
};

struct ModeReport {
    Mode mode = Mode::baseline;
    EngineConfig engine;
    TraceMetrics metrics;
    PairStats pair;
    std::size_t cache_evictions = 0;
};

struct DatasetReport {
    std::string name;
    HotspotStats hotspots;
    std::vector<ModeReport> modes;
    std::optional<TuneReport> tuning;
};

struct RunReport {
    std::vector<std::pair<std::string, std::string>> config;
    std::vector<DatasetReport> datasets;
};

/// Simulates every configured mode on every dataset and, when the output
/// directory is set, writes report.json, metrics.csv, plotdata/*.csv and
/// icl_table.json there.
RunReport run_bench(const ExperimentConfig& cfg);

/// Profiles `bootstrap_tasks` variants of the workload on `profile_points`
/// LHS configs each. Variant v changes the candidate sample and scales the
/// concurrency by 0.5, 1 or 1.5.
tuner::TuningHistory bootstrap_history(const ExperimentConfig& cfg, const Workload& workload,
                                       PromptCodec& codec);

/// Tunes the PAIR engine on one workload with total completion time as the
/// objective. Uses cfg.history, or bootstraps one when cfg.bootstrap is set.
TuneReport tune_workload(const ExperimentConfig& cfg, const Workload& workload,
                         PromptCodec& codec);

/// tune_workload on the first dataset; writes best_config.json,
/// tuning_log.csv, model.json and (when bootstrapped) history.json.
TuneReport run_tune(const ExperimentConfig& cfg);

/// One history task per dataset, `profile_points` LHS configs each, written
/// to history.json.
tuner::TuningHistory run_profile(const ExperimentConfig& cfg);

/// Fits prefill/decode coefficients from a CSV with prefill_tokens,
/// decode_seqs and step_us columns.
CostModel run_calibrate(const std::filesystem::path& csv, double step_overhead_us);

void write_bench_report(const RunReport& report, const std::filesystem::path& dir);
void write_tune_report(const TuneReport& report, const std::filesystem::path& dir);

}  // namespace prefixlog::app
