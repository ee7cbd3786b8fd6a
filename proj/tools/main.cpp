// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "prefixlog/app.hpp"
#include "prefixlog/error.hpp"
#include "prefixlog/remote.hpp"

namespace {

using namespace prefixlog;

std::string flag_name(const std::string& key) {
    std::string out = "--";
    for (char c : key)
        out += c == '_' ? '-' : c;
    return out;
}

// Config flags shared by every subcommand. Values are applied after the
// config file and the environment.
struct ConfigFlags {
    std::string file;
    std::map<std::string, std::string> values;

    void attach(CLI::App* cmd) {
        cmd->add_option("-c,--config", file, "key = value config file");
        for (const auto& key : app::config_keys())
            cmd->add_option(flag_name(key), values[key], "config key " + key);
    }

    app::ExperimentConfig resolve(CLI::App* cmd) const {
        app::ExperimentConfig cfg;
        if (!file.empty())
            app::apply_config_file(cfg, file);
        app::apply_environment(cfg);
        for (const auto& [key, value] : values)
            if (cmd->count(flag_name(key)) > 0)
                app::set_config_value(cfg, key, value);
        return cfg;
    }
};

void print_bench(const app::RunReport& report) {
    std::printf("%-16s %-10s %10s %10s %10s %8s\n", "dataset", "mode", "p95_s", "mean_s",
                "req/s", "hit");
    for (const auto& d : report.datasets)
        for (const auto& m : d.modes) {
            const auto& t = m.metrics;
            std::printf("%-16s %-10s %10.4f %10.4f %10.2f %8s\n", d.name.c_str(),
                        std::string(app::to_string(m.mode)).c_str(), t.p95_latency,
                        t.mean_latency, t.throughput,
                        t.prefix_hit_rate ? std::to_string(*t.prefix_hit_rate).substr(0, 6).c_str()
                                          : "-");
        }
}

void print_tune(const app::TuneReport& t) {
    const auto& c = t.result.best.config;
    std::printf("best: max_num_batched_tokens=%lld max_num_seqs=%lld scheduler_delay_factor=%.4g\n",
                static_cast<long long>(c.max_num_batched_tokens),
                static_cast<long long>(c.max_num_seqs), c.scheduler_delay_factor);
    std::printf("total completion time: %.4f s (base config %.4f s, %zu evaluations)\n",
                t.result.best.perf, t.default_perf, t.result.log.size());
}

std::size_t violations(const app::RunReport& report) {
    std::size_t n = 0;
    for (const auto& d : report.datasets)
        for (const auto& m : d.modes)
            n += m.pair.multiset_violations;
    return n;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App cli{"Prefix-aware ICL refinement and scheduler tuning on a simulated inference engine"};
    cli.require_subcommand(1);

    ConfigFlags bench_flags, tune_flags, profile_flags, calib_flags, remote_flags;
    auto* bench = cli.add_subcommand("bench", "simulate default / pc / pair / pair+tune modes");
    bench_flags.attach(bench);
    auto* tune = cli.add_subcommand("tune", "tune the PAIR engine configuration");
    tune_flags.attach(tune);
    auto* profile = cli.add_subcommand("profile", "collect an LHS tuning history");
    profile_flags.attach(profile);
    auto* calibrate = cli.add_subcommand("calibrate", "fit the step cost model from a CSV");
    calib_flags.attach(calibrate);
    std::string calib_csv;
    calibrate->add_option("--csv", calib_csv, "prefill_tokens,decode_seqs,step_us samples")
        ->required();
    auto* remote_cmd = cli.add_subcommand("remote", "send refined prompts to a live endpoint");
    remote_flags.attach(remote_cmd);
    remote::RemoteOptions ropts;
    remote_cmd->add_option("--url", ropts.url, "OpenAI-compatible base URL")->required();
    remote_cmd->add_option("--model", ropts.model);
    remote_cmd->add_option("--api-key", ropts.api_key);
    remote_cmd->add_option("--in-flight", ropts.concurrency, "max concurrent requests");
    remote_cmd->add_option("--max-tokens", ropts.max_tokens);
    remote_cmd->add_option("--retries", ropts.retries)->check(CLI::Range(0, 3));
    remote_cmd->add_option("--timeout", ropts.timeout_s, "seconds");
    remote_cmd->add_flag("--ab", ropts.ab, "also send unrefined prompts");

    CLI11_PARSE(cli, argc, argv);

    try {
        if (bench->parsed()) {
            const auto report = app::run_bench(bench_flags.resolve(bench));
            print_bench(report);
            for (const auto& d : report.datasets)
                if (d.tuning)
                    print_tune(*d.tuning);
            if (const auto v = violations(report); v > 0) {
                std::fprintf(stderr, "error: %zu template-multiset violations\n", v);
                return 2;
            }
        } else if (tune->parsed()) {
            print_tune(app::run_tune(tune_flags.resolve(tune)));
        } else if (profile->parsed()) {
            const auto cfg = profile_flags.resolve(profile);
            const auto h = app::run_profile(cfg);
            std::printf("history: %zu tasks -> %s\n", h.tasks.size(),
                        (cfg.output_dir / "history.json").string().c_str());
        } else if (calibrate->parsed()) {
            const auto cfg = calib_flags.resolve(calibrate);
            const auto model = app::run_calibrate(calib_csv, cfg.cost.step_overhead_us);
            const nlohmann::ordered_json j = {
                {"prefill_us_per_token", model.prefill_us_per_token},
                {"decode_us_per_token_per_seq", model.decode_us_per_token_per_seq},
                {"step_overhead_us", model.step_overhead_us}};
            std::cout << j.dump(2) << "\n";
            if (!cfg.output_dir.empty()) {
                std::filesystem::create_directories(cfg.output_dir);
                std::ofstream(cfg.output_dir / "cost_model.json") << j.dump(2) << "\n";
            }
        } else if (remote_cmd->parsed()) {
            auto cfg = remote_flags.resolve(remote_cmd);
            cfg.validate();
            ropts.icl_table_capacity = cfg.engine.icl_table_capacity;
            PromptCodec codec;
            const auto workload = app::prepare_workload(cfg, cfg.datasets.front(), codec);
            const auto report = remote::run_remote(workload.stream, ropts);
            remote::write_remote_report(report, cfg.output_dir);
            for (const auto& arm : report.arms)
                std::printf("%s: %zu requests, %zu failed\n", arm.name.c_str(),
                            arm.latencies.size(), arm.failed);
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
