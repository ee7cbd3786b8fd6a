// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

// Serial and OpenMP paths must agree bit for bit.

#include <random>
#include <stdexcept>

#include <gtest/gtest.h>

#include "prefixlog/kernels.hpp"
#include "prefixlog/synthetic.hpp"
#include "prefixlog/tuner/lhs.hpp"
#include "prefixlog/tuner/synthetic.hpp"

using namespace prefixlog;

TEST(Kernels, SelectExamplesBatchAgrees) {
    PromptCodec codec;
    HotspotSpec hs;
    hs.records = 400;
    const auto data = make_hotspot_dataset(hs);
    const auto cands = CandidateSet::sample(data, 100, 1, codec);
    std::vector<TokenBag> queries;
    for (const auto& r : data)
        queries.push_back(TokenBag::from_tokens(codec.tokenize(r.content)));
    for (auto metric : {SimilarityMetric::jaccard, SimilarityMetric::cosine}) {
        const auto a = kernels::select_examples_batch(queries, cands.bags(), 5, metric, {},
                                                      Exec::serial);
        const auto b = kernels::select_examples_batch(queries, cands.bags(), 5, metric, {},
                                                      Exec::parallel);
        EXPECT_EQ(a, b);
        EXPECT_EQ(a[7], select_example_indices(queries[7], cands.bags(), 5, metric));
    }
}

TEST(Kernels, PredictMcBatchAgrees) {
    const auto m = tuner::MetaModel::initialize(3);
    std::vector<tuner::UnitPoint> pts;
    for (const auto& c : tuner::lhs_sample(tuner::ConfigSpace{}, 200, 2))
        pts.push_back(c.normalized);
    const auto a = kernels::predict_mc_batch(m.params(), pts, 20, 0.1, 5, Exec::serial);
    const auto b = kernels::predict_mc_batch(m.params(), pts, 20, 0.1, 5, Exec::parallel);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].mean, b[i].mean);
        EXPECT_EQ(a[i].variance, b[i].variance);
    }
}

TEST(Kernels, MetaGradientsAgree) {
    const auto fam = tuner::make_quadratic_family(4, 0, 1);
    const auto hist = tuner::quadratic_history(fam.meta, tuner::ConfigSpace{}, 60, 2);
    const auto targets = tuner::TargetScaler::fit(hist.tasks);
    std::vector<std::vector<tuner::Sample>> samples;
    for (const auto& t : hist.tasks) {
        samples.emplace_back();
        for (const auto& o : t.observations)
            samples.back().push_back({o.config.normalized, targets.to_model(o.perf)});
    }
    std::vector<kernels::TaskJob> jobs;
    for (std::size_t i = 0; i < samples.size(); ++i)
        jobs.push_back({std::span(samples[i]).first(15), std::span(samples[i]).subspan(15),
                        {0.1, i}});
    const auto m = tuner::MetaModel::initialize(2);
    for (bool second : {false, true}) {
        const auto a = kernels::meta_gradients(m.params(), jobs, 1e-3, 3, second, Exec::serial);
        const auto b = kernels::meta_gradients(m.params(), jobs, 1e-3, 3, second, Exec::parallel);
        for (std::size_t i = 0; i < a.size(); ++i) {
            EXPECT_EQ(a[i].query_loss, b[i].query_loss);
            EXPECT_EQ(a[i].gradient, b[i].gradient);
        }
    }
}

TEST(Kernels, EvaluateBatchKeepsOrderAndRethrows) {
    auto sq = [](std::size_t i) { return static_cast<double>(i * i); };
    const auto a = kernels::evaluate_batch(50, sq, Exec::serial);
    EXPECT_EQ(a, kernels::evaluate_batch(50, sq, Exec::parallel));
    EXPECT_EQ(a[7], 49.0);
    auto bad = [](std::size_t i) -> double {
        if (i == 3)
            throw std::runtime_error("boom");
        return 0.0;
    };
    EXPECT_THROW(kernels::evaluate_batch(10, bad, Exec::parallel), std::runtime_error);
}

TEST(Kernels, StreamGenerationAgrees) {
    PromptCodec c1, c2;
    HotspotSpec hs;
    hs.records = 300;
    const auto data = make_hotspot_dataset(hs);
    const auto k1 = CandidateSet::sample(data, 80, 3, c1);
    const auto k2 = CandidateSet::sample(data, 80, 3, c2);
    WorkloadSpec spec;
    spec.num_requests = 300;
    const auto a = generate_stream(data, k1, spec, c1, Exec::serial);
    const auto b = generate_stream(data, k2, spec, c2, Exec::parallel);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        EXPECT_EQ(render_prompt(a[i].prompt), render_prompt(b[i].prompt));
}
