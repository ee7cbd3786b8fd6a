// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#include "prefixlog/workload.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>

#include "prefixlog/csv.hpp"
#include "prefixlog/error.hpp"
#include "prefixlog/kernels.hpp"

namespace prefixlog {

std::vector<LogRecord> parse_dataset(std::istream& in) {
    const CsvTable table = read_csv(in);
    const auto content = table.column("Content");
    const auto tpl = table.column("EventTemplate");
    if (!content || !tpl)
        throw FormatError("dataset: header must contain Content and EventTemplate columns");
    std::vector<LogRecord> out;
    out.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (row.size() <= std::max(*content, *tpl))
            throw FormatError("dataset: row " + std::to_string(r + 2) + " has too few fields");
        if (row[*content].empty())
            throw FormatError("dataset: row " + std::to_string(r + 2) + " has empty Content");
        out.push_back({row[*content], row[*tpl]});
    }
    return out;
}

std::vector<LogRecord> load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open dataset " + path.string());
    return parse_dataset(in);
}

SimilarityMetric parse_similarity_metric(std::string_view name) {
    if (name == "jaccard")
        return SimilarityMetric::jaccard;
    if (name == "cosine")
        return SimilarityMetric::cosine;
    throw ConfigError("unknown similarity metric '" + std::string(name) + "'");
}

std::string_view to_string(SimilarityMetric metric) {
    return metric == SimilarityMetric::jaccard ? "jaccard" : "cosine";
}

TokenBag TokenBag::from_tokens(std::span<const TokenId> tokens) {
    std::vector<TokenId> sorted(tokens.begin(), tokens.end());
    std::sort(sorted.begin(), sorted.end());
    TokenBag bag;
    double sq = 0.0;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i])
            ++j;
        bag.ids.push_back(sorted[i]);
        const auto c = static_cast<std::uint32_t>(j - i);
        bag.counts.push_back(c);
        sq += static_cast<double>(c) * c;
        i = j;
    }
    bag.norm = std::sqrt(sq);
    return bag;
}

double similarity(const TokenBag& a, const TokenBag& b, SimilarityMetric metric) {
    if (a.ids.empty() && b.ids.empty())
        return metric == SimilarityMetric::jaccard ? 1.0 : 0.0;
    std::size_t i = 0, j = 0, common = 0;
    double dot = 0.0;
    while (i < a.ids.size() && j < b.ids.size()) {
        if (a.ids[i] < b.ids[j]) {
            ++i;
        } else if (b.ids[j] < a.ids[i]) {
            ++j;
        } else {
            ++common;
            dot += static_cast<double>(a.counts[i]) * b.counts[j];
            ++i;
            ++j;
        }
    }
    if (metric == SimilarityMetric::jaccard) {
        const std::size_t uni = a.ids.size() + b.ids.size() - common;
        return static_cast<double>(common) / static_cast<double>(uni);
    }
    if (a.norm == 0.0 || b.norm == 0.0)
        return 0.0;
    return dot / (a.norm * b.norm);
}

CandidateSet::CandidateSet(std::vector<LogRecord> records, PromptCodec& codec)
    : m_records(std::move(records)) {
    m_demos.reserve(m_records.size());
    m_bags.reserve(m_records.size());
    for (const auto& r : m_records) {
        m_demos.push_back(codec.make_demonstration(r.content, r.template_text));
        m_bags.push_back(TokenBag::from_tokens(codec.tokenize(r.content)));
    }
}

CandidateSet CandidateSet::sample(const std::vector<LogRecord>& dataset, std::size_t size,
                                  std::uint64_t seed, PromptCodec& codec) {
    std::vector<std::size_t> idx(dataset.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    const std::size_t k = std::min(size, dataset.size());
    // Partial Fisher-Yates: the first k slots hold a uniform k-subset.
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    std::vector<LogRecord> chosen;
    chosen.reserve(k);
    for (auto i : idx)
        chosen.push_back(dataset[i]);
    return CandidateSet(std::move(chosen), codec);
}

std::vector<std::size_t> select_example_indices(const TokenBag& query,
                                                std::span<const TokenBag> candidates,
                                                std::size_t n, SimilarityMetric metric,
                                                std::span<const std::uint8_t> excluded) {
    struct Scored {
        double score;
        std::size_t index;
    };
    std::vector<Scored> scored;
    scored.reserve(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (!excluded.empty() && excluded[i])
            continue;
        scored.push_back({similarity(query, candidates[i], metric), i});
    }
    if (n > scored.size())
        throw ArgumentError("select_examples: requested " + std::to_string(n) +
                            " examples from " + std::to_string(scored.size()) + " candidates");
    auto better = [](const Scored& a, const Scored& b) {
        return a.score != b.score ? a.score > b.score : a.index < b.index;
    };
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n),
                      scored.end(), better);
    scored.resize(n);
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        return a.score != b.score ? a.score < b.score : a.index < b.index;
    });
    std::vector<std::size_t> out;
    out.reserve(n);
    for (const auto& s : scored)
        out.push_back(s.index);
    return out;
}

DemonstrationSet select_examples(std::string_view query, const CandidateSet& candidates,
                                 std::size_t n, SimilarityMetric metric, PromptCodec& codec) {
    const auto bag = TokenBag::from_tokens(codec.tokenize(query));
    DemonstrationSet ds;
    for (auto i : select_example_indices(bag, candidates.bags(), n, metric))
        ds.push_back(candidates.demonstration(i));
    return ds;
}

void WorkloadSpec::validate() const {
    if (concurrency < 1)
        throw ConfigError("concurrency must be >= 1");
    if (num_examples < 1)
        throw ConfigError("num_examples must be >= 1");
}

std::vector<Request> generate_stream(const std::vector<LogRecord>& dataset,
                                     const CandidateSet& candidates, const WorkloadSpec& spec,
                                     PromptCodec& codec, Exec exec) {
    spec.validate();
    if (spec.num_requests == 0)
        return {};
    if (dataset.empty())
        throw ArgumentError("generate_stream: dataset is empty");

    const std::size_t distinct = std::min(spec.num_requests, dataset.size());
    std::vector<TokenBag> queries;
    queries.reserve(distinct);
    for (std::size_t i = 0; i < distinct; ++i)
        queries.push_back(TokenBag::from_tokens(codec.tokenize(dataset[i].content)));

    std::vector<std::vector<std::uint8_t>> masks;
    if (spec.exclude_self) {
        masks.resize(distinct);
        for (std::size_t q = 0; q < distinct; ++q) {
            masks[q].resize(candidates.size());
            for (std::size_t c = 0; c < candidates.size(); ++c)
                masks[q][c] = candidates.record(c).content == dataset[q].content;
        }
    }
    const auto picks = kernels::select_examples_batch(queries, candidates.bags(),
                                                      spec.num_examples,
                                                      spec.similarity_metric, masks, exec);

    std::vector<Request> stream;
    stream.reserve(spec.num_requests);
    for (std::size_t r = 0; r < spec.num_requests; ++r) {
        const std::size_t row = r % dataset.size();
        DemonstrationSet ds;
        ds.reserve(spec.num_examples);
        for (auto c : picks[row])
            ds.push_back(candidates.demonstration(c));
        Request req;
        req.id = r;
        req.prompt = codec.make_prompt(std::move(ds), dataset[row].content);
        req.ground_truth_template = dataset[row].template_text;
        req.output_token_len = codec.tokenize(dataset[row].template_text).size();
        stream.push_back(std::move(req));
    }
    return stream;
}

HotspotStats hotspot_stats(std::span<const Request> stream, std::size_t top) {
    std::map<std::string, std::size_t> counts;
    for (const auto& req : stream) {
        std::vector<const std::string*> seen;
        for (const auto& d : req.prompt.ds) {
            if (std::none_of(seen.begin(), seen.end(),
                             [&](const std::string* s) { return *s == d.template_text; })) {
                seen.push_back(&d.template_text);
                ++counts[d.template_text];
            }
        }
    }
    std::vector<HotspotEntry> entries;
    entries.reserve(counts.size());
    for (auto& [tpl, n] : counts)
        entries.push_back({tpl, n, stream.empty() ? 0.0 : static_cast<double>(n) / stream.size()});
    std::stable_sort(entries.begin(), entries.end(),
                     [](const HotspotEntry& a, const HotspotEntry& b) { return a.requests > b.requests; });
    if (entries.size() > top)
        entries.resize(top);
    return {stream.size(), std::move(entries)};
}

}  // namespace prefixlog
