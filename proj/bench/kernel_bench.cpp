// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

// Serial reference vs OpenMP path for each kernel. Arg 0 is serial, 1 parallel.

#include <benchmark/benchmark.h>

#include "prefixlog/kernels.hpp"
#include "prefixlog/synthetic.hpp"
#include "prefixlog/tuner/lhs.hpp"
#include "prefixlog/tuner/synthetic.hpp"

using namespace prefixlog;

namespace {

Exec exec_of(const benchmark::State& state) {
    return state.range(0) == 0 ? Exec::serial : Exec::parallel;
}

struct SelectionData {
    std::vector<TokenBag> queries;
    CandidateSet candidates;
    SelectionData() {
        PromptCodec codec;
        HotspotSpec hs;
        hs.records = 2000;
        const auto data = make_hotspot_dataset(hs);
        candidates = CandidateSet::sample(data, 200, 1, codec);
        for (const auto& r : data)
            queries.push_back(TokenBag::from_tokens(codec.tokenize(r.content)));
    }
};

void BM_SelectExamples(benchmark::State& state) {
    static const SelectionData d;
    for (auto _ : state)
        benchmark::DoNotOptimize(kernels::select_examples_batch(
            d.queries, d.candidates.bags(), 5, SimilarityMetric::cosine, {}, exec_of(state)));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.queries.size()));
}

void BM_PredictMc(benchmark::State& state) {
    const auto model = tuner::MetaModel::initialize(1);
    std::vector<tuner::UnitPoint> pts;
    for (const auto& c : tuner::lhs_sample(tuner::ConfigSpace{}, 1000, 2))
        pts.push_back(c.normalized);
    for (auto _ : state)
        benchmark::DoNotOptimize(
            kernels::predict_mc_batch(model.params(), pts, 30, 0.1, 3, exec_of(state)));
    state.SetItemsProcessed(state.iterations() * 1000);
}

void BM_MetaGradients(benchmark::State& state) {
    const auto fam = tuner::make_quadratic_family(8, 0, 1);
    const auto hist = tuner::quadratic_history(fam.meta, tuner::ConfigSpace{}, 100, 2);
    const auto targets = tuner::TargetScaler::fit(hist.tasks);
    std::vector<std::vector<tuner::Sample>> samples;
    for (const auto& t : hist.tasks) {
        samples.emplace_back();
        for (const auto& o : t.observations)
            samples.back().push_back({o.config.normalized, targets.to_model(o.perf)});
    }
    std::vector<kernels::TaskJob> jobs;
    for (std::size_t i = 0; i < samples.size(); ++i)
        jobs.push_back({std::span(samples[i]).first(15), std::span(samples[i]).subspan(15, 45),
                        {0.1, i}});
    const auto model = tuner::MetaModel::initialize(2);
    for (auto _ : state)
        benchmark::DoNotOptimize(
            kernels::meta_gradients(model.params(), jobs, 1e-3, 5, false, exec_of(state)));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(jobs.size()));
}

}  // namespace

BENCHMARK(BM_SelectExamples)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictMc)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MetaGradients)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
