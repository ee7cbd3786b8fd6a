// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prefixlog/exec.hpp"
#include "prefixlog/prompt.hpp"

namespace prefixlog {

struct LogRecord {
    std::string content;
    std::string template_text;
};

/// Loghub-style CSV: needs at least the Content and EventTemplate columns.
/// Throws IoError if the file cannot be read and FormatError on a bad header.
std::vector<LogRecord> load_dataset(const std::filesystem::path& path);
std::vector<LogRecord> parse_dataset(std::istream& in);

enum class SimilarityMetric { jaccard, cosine };

SimilarityMetric parse_similarity_metric(std::string_view name);
std::string_view to_string(SimilarityMetric metric);

/// Token multiset in sparse form: sorted distinct ids and their counts.
struct TokenBag {
    std::vector<TokenId> ids;
    std::vector<std::uint32_t> counts;
    double norm = 0.0;  // Euclidean norm of the count vector

    static TokenBag from_tokens(std::span<const TokenId> tokens);
};

/// Jaccard over the distinct ids, or cosine over the count vectors.
/// Two empty bags score 1 under Jaccard and 0 under cosine.
double similarity(const TokenBag& a, const TokenBag& b, SimilarityMetric metric);

/// Fixed pool of labeled logs from which demonstrations are selected.
class CandidateSet {
public:
    CandidateSet() = default;
    CandidateSet(std::vector<LogRecord> records, PromptCodec& codec);

    /// Seeded uniform sample without replacement; keeps dataset order among
    /// the chosen rows. A size larger than the dataset takes every row.
    static CandidateSet sample(const std::vector<LogRecord>& dataset, std::size_t size,
                               std::uint64_t seed, PromptCodec& codec);

    std::size_t size() const { return m_records.size(); }
    const LogRecord& record(std::size_t i) const { return m_records[i]; }
    const Demonstration& demonstration(std::size_t i) const { return m_demos[i]; }
    const TokenBag& bag(std::size_t i) const { return m_bags[i]; }
    std::span<const TokenBag> bags() const { return m_bags; }

private:
    std::vector<LogRecord> m_records;
    std::vector<Demonstration> m_demos;
    std::vector<TokenBag> m_bags;
};

/// Indices of the n most similar candidates, ordered by ascending similarity
/// so that the closest example sits next to the query. Equal scores are
/// ordered by candidate index. `excluded` (may be empty) masks candidates.
std::vector<std::size_t> select_example_indices(const TokenBag& query,
                                                std::span<const TokenBag> candidates,
                                                std::size_t n, SimilarityMetric metric,
                                                std::span<const std::uint8_t> excluded = {});

DemonstrationSet select_examples(std::string_view query, const CandidateSet& candidates,
                                 std::size_t n, SimilarityMetric metric, PromptCodec& codec);

struct WorkloadSpec {
    std::size_t num_requests = 2000;
    std::size_t concurrency = 100;
    std::uint64_t seed = 0;
    SimilarityMetric similarity_metric = SimilarityMetric::jaccard;
    std::size_t num_examples = 5;
    std::size_t candidate_count = 200;
    /// Drop candidates whose content equals the queried log.
    bool exclude_self = false;

    void validate() const;
};

struct Request {
    std::size_t id = 0;
    Prompt prompt;
    std::string ground_truth_template;
    std::size_t output_token_len = 0;
};

/// Requests follow dataset order, wrapping around when num_requests exceeds
/// the dataset size.
std::vector<Request> generate_stream(const std::vector<LogRecord>& dataset,
                                     const CandidateSet& candidates, const WorkloadSpec& spec,
                                     PromptCodec& codec, Exec exec = Exec::parallel);

struct HotspotEntry {
    std::string template_text;
    std::size_t requests = 0;  // requests whose demonstrations include the template
    double rate = 0.0;
};

struct HotspotStats {
    std::size_t total_requests = 0;
    std::vector<HotspotEntry> top;
};

/// Templates ranked by how many requests select at least one demonstration
/// carrying them. Ties rank by template text.
HotspotStats hotspot_stats(std::span<const Request> stream, std::size_t top = 5);

}  // namespace prefixlog
