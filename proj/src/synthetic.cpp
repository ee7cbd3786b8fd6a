// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#include "prefixlog/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "prefixlog/error.hpp"

namespace prefixlog {

namespace {

struct Family {
    const char* core[2];
    std::array<const char*, 12> keywords;
};

constexpr std::array<Family, kHotFamilies> kFamilies = {{
    {{"Receiving", "block"},
     {"src", "dest", "replica", "pipeline", "datanode", "stream", "packet", "offset", "length",
      "rack", "volume", "checksum"}},
    {{"PacketResponder", "terminating"},
     {"ack", "downstream", "upstream", "responder", "seqno", "reply", "mirror", "status",
      "timeout", "heartbeat", "lastblock", "flush"}},
    {{"Deleting", "file"},
     {"trash", "namespace", "inode", "lease", "quota", "snapshot", "owner", "permission",
      "journal", "edits", "fsimage", "tmp"}},
    {{"Verification", "succeeded"},
     {"scanner", "slice", "digest", "crc", "period", "bytes", "scanned", "verified", "cursor",
      "bandwidth", "throttle", "report"}},
    {{"Served", "request"},
     {"client", "session", "socket", "handler", "queue", "latency", "reader", "writer",
      "channel", "cache", "buffer", "transfer"}},
}};

constexpr std::array<const char*, 13> kVerbs = {
    "flushed", "opened", "closed", "rotated", "scheduled", "committed", "evicted",
    "resumed", "paused", "loaded", "synced", "rejected", "allocated"};

constexpr std::array<const char*, 17> kObjects = {
    "segment", "index", "manifest", "ledger", "shard", "lock", "token", "partition", "epoch",
    "cursor_map", "bitmap", "window", "slot", "region", "table", "log_file", "watermark"};

std::string join(const std::vector<std::string>& words) {
    std::string out;
    for (const auto& w : words) {
        if (!out.empty())
            out += ' ';
        out += w;
    }
    return out;
}

// k distinct keywords of family h, in random order.
std::vector<std::string> pick_keywords(const HotspotSpec& spec, std::size_t h, std::size_t k,
                                       std::mt19937_64& rng) {
    std::vector<std::size_t> idx(spec.family_keywords);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < k; ++i)
        out.emplace_back(kFamilies[h].keywords[idx[i]]);
    return out;
}

}  // namespace

void HotspotSpec::validate() const {
    if (records == 0)
        throw ArgumentError("hotspot: records must be positive");
    if (family_keywords == 0 || family_keywords > kFamilies[0].keywords.size())
        throw ArgumentError("hotspot: family_keywords must lie in [1, 12]");
    if (pure_keywords > family_keywords || mention_keywords > family_keywords ||
        mention_keywords == 0)
        throw ArgumentError("hotspot: keyword counts exceed the family pool");
    if (rare_templates == 0)
        throw ArgumentError("hotspot: rare_templates must be positive");
    double pure = 0.0;
    for (auto p : pure_share) {
        if (!(p >= 0.0))
            throw ArgumentError("hotspot: pure shares must be non-negative");
        pure += p;
    }
    if (pure >= 1.0)
        throw ArgumentError("hotspot: pure shares must sum below 1");
    bool any = false;
    for (auto m : mention) {
        if (!(m >= 0.0 && m <= 1.0))
            throw ArgumentError("hotspot: mention probabilities must lie in [0, 1]");
        any = any || m > 0.0;
    }
    if (!any)
        throw ArgumentError("hotspot: at least one mention probability must be positive");
}

std::string hot_family_template(const HotspotSpec& spec, std::size_t h) {
    if (h >= kHotFamilies)
        throw ArgumentError("hotspot: family index out of range");
    std::vector<std::string> words{kFamilies[h].core[0], kFamilies[h].core[1]};
    for (std::size_t i = 0; i < spec.pure_keywords; ++i)
        words.emplace_back("<*>");
    return join(words);
}

std::vector<LogRecord> make_hotspot_dataset(const HotspotSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::uniform_int_distribution<std::size_t> rare(0, spec.rare_templates - 1);
    const std::size_t n = spec.records;

    // Exact proportions, shuffled: record kinds first, then per-family
    // mention flags over the rare records.
    std::vector<std::size_t> kind;
    kind.reserve(n);
    for (std::size_t h = 0; h < kHotFamilies; ++h)
        kind.insert(kind.end(),
                    static_cast<std::size_t>(std::llround(spec.pure_share[h] * static_cast<double>(n))),
                    h);
    if (kind.size() > n)
        kind.resize(n);
    const std::size_t rare_count = n - kind.size();
    kind.resize(n, kHotFamilies);
    std::shuffle(kind.begin(), kind.end(), rng);

    std::vector<std::vector<std::size_t>> mentions(rare_count);
    for (std::size_t h = 0; h < kHotFamilies; ++h) {
        std::vector<std::uint8_t> flag(rare_count, 0);
        const auto k = std::min(
            rare_count,
            static_cast<std::size_t>(std::llround(spec.mention[h] * static_cast<double>(rare_count))));
        std::fill_n(flag.begin(), k, 1);
        std::shuffle(flag.begin(), flag.end(), rng);
        for (std::size_t i = 0; i < rare_count; ++i)
            if (flag[i])
                mentions[i].push_back(h);
    }
    std::discrete_distribution<std::size_t> fallback(spec.mention.begin(), spec.mention.end());
    for (auto& m : mentions)
        if (m.empty())
            m.push_back(fallback(rng));

    std::vector<LogRecord> out;
    out.reserve(n);
    std::size_t next_rare = 0;
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t family = kind[r];
        if (family < kHotFamilies) {
            std::vector<std::string> words{kFamilies[family].core[0], kFamilies[family].core[1]};
            for (auto& k : pick_keywords(spec, family, spec.pure_keywords, rng))
                words.push_back(std::move(k));
            out.push_back({join(words), hot_family_template(spec, family)});
            continue;
        }

        const std::size_t j = rare(rng);
        std::vector<std::string> content{"svc" + std::to_string(j), kVerbs[j % kVerbs.size()],
                                         kObjects[j % kObjects.size()]};
        std::vector<std::string> tmpl = content;
        for (auto h : mentions[next_rare++]) {
            for (const char* w : kFamilies[h].core) {
                content.emplace_back(w);
                tmpl.emplace_back(w);
            }
            for (auto& k : pick_keywords(spec, h, spec.mention_keywords, rng)) {
                content.push_back(std::move(k));
                tmpl.emplace_back("<*>");
            }
        }
        for (std::size_t i = 0; i < spec.identifiers; ++i) {
            char buf[24];
            std::snprintf(buf, sizeof buf, "0x%012llx",
                          static_cast<unsigned long long>(rng() & 0xffffffffffffULL));
            content.emplace_back(buf);
            tmpl.emplace_back("<*>");
        }
        out.push_back({join(content), join(tmpl)});
    }
    return out;
}

}  // namespace prefixlog
