// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#include "prefixlog/app.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "prefixlog/csv.hpp"
#include "prefixlog/error.hpp"
#include "prefixlog/hash.hpp"
#include "prefixlog/kernels.hpp"
#include "prefixlog/synthetic.hpp"
#include "prefixlog/tuner/lhs.hpp"

namespace prefixlog::app {

namespace {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr std::string_view kSyntheticPrefix = "synthetic:";
constexpr std::size_t kHotspotTop = 5;

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const auto end = comma == std::string_view::npos ? s.size() : comma;
        auto item = trim(s.substr(start, end - start));
        if (!item.empty())
            out.push_back(std::move(item));
        if (comma == std::string_view::npos)
            break;
        start = comma + 1;
    }
    return out;
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
    const auto v = trim(text);
    T out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty())
        throw ConfigError("config: bad value '" + std::string(text) + "' for " + std::string(key));
    return out;
}

bool parse_bool(std::string_view key, std::string_view text) {
    const auto v = trim(text);
    if (v == "1" || v == "true" || v == "yes" || v == "on")
        return true;
    if (v == "0" || v == "false" || v == "no" || v == "off")
        return false;
    throw ConfigError("config: bad boolean '" + std::string(text) + "' for " + std::string(key));
}

std::string format_double(double v) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

template <typename T>
std::string format_int(T v) {
    return std::to_string(v);
}

std::string join_list(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) {
        if (!out.empty())
            out += ',';
        out += s;
    }
    return out;
}

struct KeyDef {
    const char* name;
    std::function<void(ExperimentConfig&, std::string_view)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

#define PL_SIZE_KEY(key, field)                                                              \
    KeyDef {                                                                                 \
        key, [](ExperimentConfig& c, std::string_view v) {                                   \
            c.field = parse_number<std::size_t>(key, v);                                      \
        },                                                                                   \
            [](const ExperimentConfig& c) { return format_int(c.field); }                     \
    }
#define PL_INT_KEY(key, field)                                                               \
    KeyDef {                                                                                 \
        key, [](ExperimentConfig& c, std::string_view v) {                                   \
            c.field = parse_number<std::int64_t>(key, v);                                     \
        },                                                                                   \
            [](const ExperimentConfig& c) { return format_int(c.field); }                     \
    }
#define PL_DOUBLE_KEY(key, field)                                                            \
    KeyDef {                                                                                 \
        key, [](ExperimentConfig& c, std::string_view v) {                                   \
            c.field = parse_number<double>(key, v);                                           \
        },                                                                                   \
            [](const ExperimentConfig& c) { return format_double(c.field); }                  \
    }
#define PL_BOOL_KEY(key, field)                                                              \
    KeyDef {                                                                                 \
        key, [](ExperimentConfig& c, std::string_view v) { c.field = parse_bool(key, v); },   \
            [](const ExperimentConfig& c) { return std::string(c.field ? "true" : "false"); } \
    }

const std::vector<KeyDef>& key_table() {
    static const std::vector<KeyDef> table = {
        {"dataset",
         [](ExperimentConfig& c, std::string_view v) { c.datasets = split_list(v); },
         [](const ExperimentConfig& c) { return join_list(c.datasets); }},
        PL_SIZE_KEY("synthetic_records", synthetic_records),
        PL_SIZE_KEY("num_requests", workload.num_requests),
        PL_SIZE_KEY("concurrency", workload.concurrency),
        {"similarity_metric",
         [](ExperimentConfig& c, std::string_view v) {
             try {
                 c.workload.similarity_metric = parse_similarity_metric(trim(v));
             } catch (const ArgumentError& e) {
                 throw ConfigError(std::string("config: ") + e.what());
             }
         },
         [](const ExperimentConfig& c) {
             return std::string(to_string(c.workload.similarity_metric));
         }},
        PL_SIZE_KEY("num_examples", workload.num_examples),
        PL_SIZE_KEY("candidate_count", workload.candidate_count),
        PL_BOOL_KEY("exclude_self", workload.exclude_self),
        PL_INT_KEY("max_num_batched_tokens", engine.max_num_batched_tokens),
        PL_INT_KEY("max_num_seqs", engine.max_num_seqs),
        PL_DOUBLE_KEY("scheduler_delay_factor", engine.scheduler_delay_factor),
        PL_SIZE_KEY("block_size", engine.block_size),
        PL_SIZE_KEY("capacity_blocks", engine.capacity_blocks),
        PL_SIZE_KEY("icl_table_capacity", engine.icl_table_capacity),
        PL_INT_KEY("max_position", engine.max_position),
        PL_DOUBLE_KEY("prefill_us_per_token", cost.prefill_us_per_token),
        PL_DOUBLE_KEY("decode_us_per_token_per_seq", cost.decode_us_per_token_per_seq),
        PL_DOUBLE_KEY("step_overhead_us", cost.step_overhead_us),
        {"modes",
         [](ExperimentConfig& c, std::string_view v) {
             c.modes.clear();
             for (const auto& m : split_list(v))
                 c.modes.push_back(parse_mode(m));
         },
         [](const ExperimentConfig& c) {
             std::vector<std::string> names;
             for (auto m : c.modes)
                 names.emplace_back(to_string(m));
             return join_list(names);
         }},
        {"seed",
         [](ExperimentConfig& c, std::string_view v) {
             c.seed = parse_number<std::uint64_t>("seed", v);
         },
         [](const ExperimentConfig& c) { return format_int(c.seed); }},
        {"output_dir",
         [](ExperimentConfig& c, std::string_view v) { c.output_dir = trim(v); },
         [](const ExperimentConfig& c) { return c.output_dir.generic_string(); }},
        {"history",
         [](ExperimentConfig& c, std::string_view v) {
             const auto p = trim(v);
             if (p.empty())
                 c.history.reset();
             else
                 c.history = p;
         },
         [](const ExperimentConfig& c) {
             return c.history ? c.history->generic_string() : std::string();
         }},
        PL_BOOL_KEY("bootstrap", bootstrap),
        PL_SIZE_KEY("bootstrap_tasks", bootstrap_tasks),
        PL_SIZE_KEY("profile_points", profile_points),
        PL_SIZE_KEY("budget", budget),
        PL_SIZE_KEY("meta_epochs", meta_epochs),
        PL_SIZE_KEY("specialize_epochs", specialize_epochs),
        {"exec",
         [](ExperimentConfig& c, std::string_view v) {
             const auto s = trim(v);
             if (s == "serial")
                 c.exec = Exec::serial;
             else if (s == "parallel")
                 c.exec = Exec::parallel;
             else
                 throw ConfigError("config: exec must be serial or parallel");
         },
         [](const ExperimentConfig& c) {
             return std::string(c.exec == Exec::serial ? "serial" : "parallel");
         }},
    };
    return table;
}

#undef PL_SIZE_KEY
#undef PL_INT_KEY
#undef PL_DOUBLE_KEY
#undef PL_BOOL_KEY

const KeyDef& find_key(std::string_view key) {
    for (const auto& k : key_table())
        if (key == k.name)
            return k;
    throw ConfigError("config: unknown key '" + std::string(key) + "'");
}

std::string sanitize(std::string_view name) {
    std::string out;
    for (char c : name)
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << text;
    if (!out)
        throw IoError("write failed: " + path.string());
}

ojson engine_json(const EngineConfig& e) {
    return {{"max_num_batched_tokens", e.max_num_batched_tokens},
            {"max_num_seqs", e.max_num_seqs},
            {"scheduler_delay_factor", e.scheduler_delay_factor},
            {"enable_prefix_caching", e.enable_prefix_caching},
            {"pair_enabled", e.pair_enabled},
            {"block_size", e.block_size},
            {"capacity_blocks", e.capacity_blocks},
            {"icl_table_capacity", e.icl_table_capacity}};
}

ojson metrics_json(const TraceMetrics& m) {
    ojson j = {{"p95_latency_s", m.p95_latency},   {"mean_latency_s", m.mean_latency},
               {"throughput_rps", m.throughput},   {"makespan_s", m.makespan},
               {"prefix_hit_rate", nullptr},       {"prefill_time_share", m.prefill_time_share},
               {"completed", m.completed}};
    if (m.prefix_hit_rate)
        j["prefix_hit_rate"] = *m.prefix_hit_rate;
    return j;
}

ojson perf_json(double perf) {
    return std::isfinite(perf) ? ojson(perf) : ojson(nullptr);
}

ojson tuning_json(const TuneReport& t) {
    ojson steps = ojson::array();
    for (const auto& s : t.result.log) {
        ojson step = {{"step", s.index},
                      {"phase", s.phase},
                      {"max_num_batched_tokens", s.config.max_num_batched_tokens},
                      {"max_num_seqs", s.config.max_num_seqs},
                      {"scheduler_delay_factor", s.config.scheduler_delay_factor},
                      {"perf_s", perf_json(s.perf)},
                      {"ei", nullptr},
                      {"best_so_far_s", perf_json(s.best_so_far)}};
        if (s.ei)
            step["ei"] = *s.ei;
        steps.push_back(std::move(step));
    }
    ojson weights = ojson::array();
    for (Eigen::Index i = 0; i < t.result.source_weights.size(); ++i)
        weights.push_back(t.result.source_weights[i]);
    return {{"best_engine", engine_json(t.best_engine)},
            {"best_perf_s", perf_json(t.result.best.perf)},
            {"default_perf_s", t.default_perf},
            {"evaluations", t.result.log.size()},
            {"source_weights", weights},
            {"log", steps}};
}

std::string csv_line(std::initializer_list<std::string> fields) {
    std::string out;
    bool first = true;
    for (const auto& f : fields) {
        if (!first)
            out += ',';
        out += csv_escape(f);
        first = false;
    }
    out += '\n';
    return out;
}

std::string opt_double(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
}

double simulate_perf(std::span<const Request> stream, const EngineConfig& engine,
                     const CostModel& cost, std::size_t concurrency) {
    return simulate(stream, engine, cost, {concurrency, false}).metrics.makespan;
}

}  // namespace

Mode parse_mode(std::string_view name) {
    if (name == "default")
        return Mode::baseline;
    if (name == "pc")
        return Mode::pc;
    if (name == "pair")
        return Mode::pair;
    if (name == "pair+tune")
        return Mode::pair_tune;
    throw ConfigError("unknown mode '" + std::string(name) +
                      "' (expected default, pc, pair or pair+tune)");
}

std::string_view to_string(Mode mode) {
    switch (mode) {
    case Mode::baseline:
        return "default";
    case Mode::pc:
        return "pc";
    case Mode::pair:
        return "pair";
    case Mode::pair_tune:
        return "pair+tune";
    }
    return "default";
}

EngineConfig engine_for_mode(EngineConfig base, Mode mode) {
    base.enable_prefix_caching = mode != Mode::baseline;
    base.pair_enabled = mode == Mode::pair || mode == Mode::pair_tune;
    return base;
}

WorkloadSpec ExperimentConfig::default_workload() {
    WorkloadSpec w;
    w.similarity_metric = SimilarityMetric::cosine;
    return w;
}

void ExperimentConfig::validate() const {
    try {
        workload.validate();
        engine.validate();
        cost.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    if (datasets.empty())
        throw ConfigError("config: at least one dataset is required");
    if (modes.empty())
        throw ConfigError("config: at least one mode is required");
    if (synthetic_records == 0)
        throw ConfigError("config: synthetic_records must be positive");
    if (budget == 0)
        throw ConfigError("config: budget must be positive");
    if (profile_points < 2)
        throw ConfigError("config: profile_points must be at least 2");
    if (bootstrap_tasks < 3)
        throw ConfigError("config: bootstrap_tasks must be at least 3");
    if (meta_epochs == 0)
        throw ConfigError("config: meta_epochs must be positive");
    const bool tunes = std::find(modes.begin(), modes.end(), Mode::pair_tune) != modes.end();
    if (tunes && !history && !bootstrap)
        throw ConfigError("config: pair+tune needs a history file or bootstrap = true");
}

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const auto& k : key_table())
        keys.emplace_back(k.name);
    return keys;
}

void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
    find_key(key).set(cfg, value);
}

std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& k : key_table())
        out.emplace_back(k.name, k.get(cfg));
    return out;
}

void apply_config_file(ExperimentConfig& cfg, const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config file " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        const auto body = trim(std::string_view(line).substr(0, hash));
        if (body.empty())
            continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                              ": expected key = value");
        set_config_value(cfg, trim(std::string_view(body).substr(0, eq)),
                         std::string_view(body).substr(eq + 1));
    }
}

void apply_environment(ExperimentConfig& cfg) {
    for (const auto& k : key_table()) {
        std::string var = "PREFIXLOG_";
        for (const char* p = k.name; *p; ++p)
            var += static_cast<char>(std::toupper(static_cast<unsigned char>(*p)));
        if (const char* v = std::getenv(var.c_str()))
            k.set(cfg, v);
    }
}

std::vector<LogRecord> load_records(const std::string& dataset, std::size_t synthetic_records) {
    if (dataset.rfind(kSyntheticPrefix, 0) == 0) {
        HotspotSpec spec;
        spec.records = synthetic_records;
        spec.seed = parse_number<std::uint64_t>(
            "dataset", std::string_view(dataset).substr(kSyntheticPrefix.size()));
        return make_hotspot_dataset(spec);
    }
    return load_dataset(dataset);
}

std::string dataset_name(const std::string& dataset) {
    if (dataset.rfind(kSyntheticPrefix, 0) == 0)
        return "synthetic-" + dataset.substr(kSyntheticPrefix.size());
    return fs::path(dataset).stem().string();
}

Workload prepare_workload(const ExperimentConfig& cfg, const std::string& dataset,
                          PromptCodec& codec) {
    Workload w;
    w.name = dataset_name(dataset);
    w.records = load_records(dataset, cfg.synthetic_records);
    WorkloadSpec spec = cfg.workload;
    spec.seed = cfg.seed;
    const auto candidates =
        CandidateSet::sample(w.records, spec.candidate_count, cfg.seed, codec);
    w.stream = generate_stream(w.records, candidates, spec, codec, cfg.exec);
    return w;
}

tuner::TuningHistory bootstrap_history(const ExperimentConfig& cfg, const Workload& workload,
                                       PromptCodec& codec) {
    static constexpr std::array<double, 3> kConcurrencyScale = {0.5, 1.0, 1.5};
    tuner::TuningHistory history;
    history.space = tuner::ConfigSpace::for_max_position(cfg.engine.max_position);
    const EngineConfig base = engine_for_mode(cfg.engine, Mode::pair);
    for (std::size_t v = 0; v < cfg.bootstrap_tasks; ++v) {
        WorkloadSpec spec = cfg.workload;
        spec.seed = cfg.seed;
        spec.concurrency = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(static_cast<double>(spec.concurrency) *
                                                     kConcurrencyScale[v % 3])));
        const auto candidates = CandidateSet::sample(workload.records, spec.candidate_count,
                                                     hash_combine(cfg.seed, 0x100 + v), codec);
        const auto stream = generate_stream(workload.records, candidates, spec, codec, cfg.exec);
        const auto points =
            tuner::lhs_sample(history.space, cfg.profile_points, hash_combine(cfg.seed, 0x200 + v));
        const auto perfs = kernels::evaluate_batch(
            points.size(),
            [&](std::size_t j) {
                try {
                    return simulate_perf(stream, tuner::apply_config(points[j], base), cfg.cost,
                                         spec.concurrency);
                } catch (const Error&) {
                    return std::numeric_limits<double>::infinity();
                }
            },
            cfg.exec);
        tuner::SourceTask task;
        task.name = workload.name + "/variant" + std::to_string(v);
        task.features = tuner::workload_features(stream, spec.concurrency, base.block_size);
        for (std::size_t j = 0; j < points.size(); ++j)
            task.observations.push_back({points[j], perfs[j]});
        history.tasks.push_back(std::move(task));
    }
    return history;
}

TuneReport tune_workload(const ExperimentConfig& cfg, const Workload& workload,
                         PromptCodec& codec) {
    TuneReport report;
    tuner::TuningHistory history;
    if (cfg.history) {
        history = tuner::load_history(*cfg.history);
    } else if (cfg.bootstrap) {
        report.bootstrapped = bootstrap_history(cfg, workload, codec);
        history = *report.bootstrapped;
    } else {
        throw ConfigError("tune: no history file given and bootstrap is off");
    }
    if (history.tasks.size() < 3)
        throw ConfigError("tune: history needs at least 3 tasks, found " +
                          std::to_string(history.tasks.size()));

    tuner::MetaTrainOptions train;
    train.epochs = cfg.meta_epochs;
    train.seed = hash_combine(cfg.seed, 0x300);
    train.exec = cfg.exec;
    report.surrogate = tuner::train_surrogate(history, train);

    const EngineConfig base = engine_for_mode(cfg.engine, Mode::pair);
    const std::size_t concurrency = cfg.workload.concurrency;
    const tuner::Evaluator evaluate = [&](const tuner::ConfigPoint& p) {
        return simulate_perf(workload.stream, tuner::apply_config(p, base), cfg.cost, concurrency);
    };
    tuner::SmboOptions options;
    options.budget = cfg.budget;
    options.specialize_epochs = cfg.specialize_epochs;
    options.seed = hash_combine(cfg.seed, 0x400);
    options.exec = cfg.exec;
    const auto target = tuner::workload_features(workload.stream, concurrency, base.block_size);
    report.result = tuner::smbo_tune(evaluate, report.surrogate, history, target, options);
    report.best_engine = tuner::apply_config(report.result.best.config, base);
    report.default_perf = simulate_perf(workload.stream, base, cfg.cost, concurrency);
    return report;
}

RunReport run_bench(const ExperimentConfig& cfg) {
    cfg.validate();
    RunReport report;
    report.config = config_entries(cfg);
    PromptCodec codec;
    std::vector<std::optional<ICLTable>> tables;
    for (const auto& dataset : cfg.datasets) {
        const auto workload = prepare_workload(cfg, dataset, codec);
        DatasetReport d;
        d.name = workload.name;
        d.hotspots = hotspot_stats(workload.stream, kHotspotTop);
        std::optional<ICLTable> saved;
        for (auto mode : cfg.modes) {
            EngineConfig engine = engine_for_mode(cfg.engine, mode);
            if (mode == Mode::pair_tune) {
                d.tuning = tune_workload(cfg, workload, codec);
                engine = d.tuning->best_engine;
            }
            ICLTable table(engine.icl_table_capacity);
            auto r = simulate(workload.stream, engine, cfg.cost, {cfg.workload.concurrency, false},
                              engine.pair_enabled ? &table : nullptr);
            d.modes.push_back({mode, engine, std::move(r.metrics), std::move(r.pair),
                               r.cache_evictions});
            if (engine.pair_enabled && !saved)
                saved = std::move(table);
        }
        tables.push_back(std::move(saved));
        report.datasets.push_back(std::move(d));
    }
    if (!cfg.output_dir.empty()) {
        write_bench_report(report, cfg.output_dir);
        for (std::size_t i = 0; i < tables.size(); ++i) {
            if (!tables[i])
                continue;
            const auto name = tables.size() == 1
                                  ? std::string("icl_table.json")
                                  : "icl_table_" + sanitize(report.datasets[i].name) + ".json";
            save_icl_table(*tables[i], cfg.output_dir / name);
        }
        for (const auto& d : report.datasets)
            if (d.tuning)
                write_tune_report(*d.tuning, report.datasets.size() == 1
                                                 ? cfg.output_dir
                                                 : cfg.output_dir / sanitize(d.name));
    }
    return report;
}

void write_bench_report(const RunReport& report, const fs::path& dir) {
    fs::create_directories(dir / "plotdata");

    ojson root;
    ojson config = ojson::object();
    for (const auto& [k, v] : report.config)
        config[k] = v;
    root["config"] = config;
    ojson datasets = ojson::array();

    std::string metrics = csv_line({"dataset", "mode", "p95_latency_s", "mean_latency_s",
                                    "throughput_rps", "makespan_s", "prefix_hit_rate",
                                    "prefill_time_share", "completed", "max_num_batched_tokens",
                                    "max_num_seqs", "scheduler_delay_factor"});
    std::string cdf = csv_line({"dataset", "mode", "latency_s", "cdf"});
    std::string hits = csv_line({"dataset", "mode", "prefix_hit_rate"});
    std::string hot = csv_line({"dataset", "rank", "template", "requests", "rate"});
    std::string pmc = csv_line({"dataset", "mode", "pmc", "requests"});

    for (const auto& d : report.datasets) {
        ojson hotspots = ojson::array();
        for (std::size_t i = 0; i < d.hotspots.top.size(); ++i) {
            const auto& h = d.hotspots.top[i];
            hotspots.push_back(
                {{"template", h.template_text}, {"requests", h.requests}, {"rate", h.rate}});
            hot += csv_line({d.name, std::to_string(i + 1), h.template_text,
                             std::to_string(h.requests), format_double(h.rate)});
        }
        ojson modes = ojson::array();
        for (const auto& m : d.modes) {
            const std::string mode(to_string(m.mode));
            ojson hist = ojson::object();
            for (const auto& [k, n] : m.pair.pmc_histogram) {
                hist[std::to_string(k)] = n;
                pmc += csv_line({d.name, mode, std::to_string(k), std::to_string(n)});
            }
            modes.push_back({{"mode", mode},
                             {"engine", engine_json(m.engine)},
                             {"metrics", metrics_json(m.metrics)},
                             {"cache_evictions", m.cache_evictions},
                             {"pair",
                              {{"refinements", m.pair.refinements},
                               {"multiset_violations", m.pair.multiset_violations},
                               {"pmc_histogram", hist}}}});
            const auto& t = m.metrics;
            metrics += csv_line({d.name, mode, format_double(t.p95_latency),
                                 format_double(t.mean_latency), format_double(t.throughput),
                                 format_double(t.makespan), opt_double(t.prefix_hit_rate),
                                 format_double(t.prefill_time_share), std::to_string(t.completed),
                                 std::to_string(m.engine.max_num_batched_tokens),
                                 std::to_string(m.engine.max_num_seqs),
                                 format_double(m.engine.scheduler_delay_factor)});
            hits += csv_line({d.name, mode, opt_double(t.prefix_hit_rate)});
            auto sorted = t.latencies;
            std::sort(sorted.begin(), sorted.end());
            for (std::size_t i = 0; i < sorted.size(); ++i)
                cdf += csv_line({d.name, mode, format_double(sorted[i]),
                                 format_double(static_cast<double>(i + 1) /
                                               static_cast<double>(sorted.size()))});
        }
        ojson entry = {{"name", d.name},
                       {"requests", d.hotspots.total_requests},
                       {"hotspots", hotspots},
                       {"modes", modes}};
        if (d.tuning)
            entry["tuning"] = tuning_json(*d.tuning);
        datasets.push_back(std::move(entry));
    }
    root["datasets"] = datasets;

    write_text(dir / "report.json", root.dump(2) + "\n");
    write_text(dir / "metrics.csv", metrics);
    write_text(dir / "plotdata" / "latency_cdf.csv", cdf);
    write_text(dir / "plotdata" / "hit_rate.csv", hits);
    write_text(dir / "plotdata" / "hotspots.csv", hot);
    write_text(dir / "plotdata" / "pmc_histogram.csv", pmc);
}

void write_tune_report(const TuneReport& report, const fs::path& dir) {
    fs::create_directories(dir);
    write_text(dir / "best_config.json", tuning_json(report).dump(2) + "\n");
    std::string log = csv_line({"step", "phase", "max_num_batched_tokens", "max_num_seqs",
                                "scheduler_delay_factor", "perf_s", "ei", "best_so_far_s"});
    for (const auto& s : report.result.log)
        log += csv_line({std::to_string(s.index), s.phase,
                         std::to_string(s.config.max_num_batched_tokens),
                         std::to_string(s.config.max_num_seqs),
                         format_double(s.config.scheduler_delay_factor), format_double(s.perf),
                         opt_double(s.ei), format_double(s.best_so_far)});
    write_text(dir / "tuning_log.csv", log);
    tuner::save_surrogate(report.surrogate, dir / "model.json");
    if (report.bootstrapped)
        tuner::save_history(*report.bootstrapped, dir / "history.json");
}

TuneReport run_tune(const ExperimentConfig& cfg) {
    cfg.validate();
    if (!cfg.history && !cfg.bootstrap)
        throw ConfigError("tune: no history file given and bootstrap is off");
    PromptCodec codec;
    const auto workload = prepare_workload(cfg, cfg.datasets.front(), codec);
    auto report = tune_workload(cfg, workload, codec);
    if (!cfg.output_dir.empty())
        write_tune_report(report, cfg.output_dir);
    return report;
}

tuner::TuningHistory run_profile(const ExperimentConfig& cfg) {
    cfg.validate();
    tuner::TuningHistory history;
    if (cfg.history && fs::exists(*cfg.history))
        history = tuner::load_history(*cfg.history);
    else
        history.space = tuner::ConfigSpace::for_max_position(cfg.engine.max_position);
    PromptCodec codec;
    const EngineConfig base = engine_for_mode(cfg.engine, Mode::pair);
    for (std::size_t i = 0; i < cfg.datasets.size(); ++i) {
        const auto workload = prepare_workload(cfg, cfg.datasets[i], codec);
        const auto points =
            tuner::lhs_sample(history.space, cfg.profile_points, hash_combine(cfg.seed, 0x500 + i));
        const auto perfs = kernels::evaluate_batch(
            points.size(),
            [&](std::size_t j) {
                try {
                    return simulate_perf(workload.stream, tuner::apply_config(points[j], base),
                                         cfg.cost, cfg.workload.concurrency);
                } catch (const Error&) {
                    return std::numeric_limits<double>::infinity();
                }
            },
            cfg.exec);
        tuner::SourceTask task;
        task.name = workload.name;
        task.features =
            tuner::workload_features(workload.stream, cfg.workload.concurrency, base.block_size);
        for (std::size_t j = 0; j < points.size(); ++j)
            task.observations.push_back({points[j], perfs[j]});
        history.tasks.push_back(std::move(task));
    }
    if (!cfg.output_dir.empty()) {
        fs::create_directories(cfg.output_dir);
        tuner::save_history(history, cfg.output_dir / "history.json");
    }
    return history;
}

CostModel run_calibrate(const fs::path& csv, double step_overhead_us) {
    std::ifstream in(csv);
    if (!in)
        throw IoError("cannot open " + csv.string());
    const auto table = read_csv(in);
    const auto cp = table.column("prefill_tokens");
    const auto cd = table.column("decode_seqs");
    const auto cs = table.column("step_us");
    if (!cp || !cd || !cs)
        throw FormatError(csv.string() + ": need prefill_tokens, decode_seqs and step_us columns");
    std::vector<CalibrationSample> samples;
    for (const auto& row : table.rows) {
        if (row.size() <= std::max({*cp, *cd, *cs}))
            throw FormatError(csv.string() + ": short row");
        try {
            samples.push_back({parse_number<double>("prefill_tokens", row[*cp]),
                               parse_number<double>("decode_seqs", row[*cd]),
                               parse_number<double>("step_us", row[*cs])});
        } catch (const ConfigError& e) {
            throw FormatError(csv.string() + ": " + e.what());
        }
    }
    return calibrate_cost_model(samples, step_overhead_us);
}

}  // namespace prefixlog::app
