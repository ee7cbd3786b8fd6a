// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <list>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "prefixlog/prompt.hpp"

namespace prefixlog {

using BlockHash = std::uint64_t;

/// Chain hashes of every full block of `tokens`: block i hashes block i-1's
/// hash together with its own token ids, so a block is identified by the
/// whole prefix it terminates.
std::vector<BlockHash> chain_hashes(std::span<const TokenId> tokens, std::size_t block_size);

struct LookupResult {
    std::size_t hit_blocks = 0;
    std::size_t total_full_blocks = 0;
    std::size_t hit_tokens = 0;
};

/// Block-level prefix cache with LRU eviction, modeled after paged prefix
/// caching. Partial trailing blocks are never cached.
class PrefixCache {
public:
    static constexpr std::size_t kUnbounded = 0;

    explicit PrefixCache(std::size_t block_size = 16, std::size_t capacity_blocks = kUnbounded);

    /// Longest run of resident blocks from the head of `tokens`. Hit blocks
    /// become most recently used.
    LookupResult lookup(std::span<const TokenId> tokens);
    /// Same count as lookup() without touching recency.
    LookupResult peek(std::span<const TokenId> tokens) const;

    /// Makes every full block resident, evicting least recently used blocks
    /// of other sequences. Only the first capacity_blocks blocks are kept
    /// when the sequence alone exceeds the capacity.
    void insert(std::span<const TokenId> tokens);

    bool contains(BlockHash hash) const { return m_index.count(hash) != 0; }
    std::size_t resident_blocks() const { return m_lru.size(); }
    std::size_t block_size() const { return m_block_size; }
    std::size_t capacity_blocks() const { return m_capacity; }
    std::size_t evictions() const { return m_evictions; }
    /// Resident hashes from least to most recently used.
    std::vector<BlockHash> lru_order() const { return {m_lru.begin(), m_lru.end()}; }

private:
    void touch(std::list<BlockHash>::iterator it);

    std::size_t m_block_size;
    std::size_t m_capacity;
    std::size_t m_evictions = 0;
    std::list<BlockHash> m_lru;  // front = least recently used
    std::unordered_map<BlockHash, std::list<BlockHash>::iterator> m_index;
};

/// Block-weighted hit rate accumulated over a trace of lookups.
class HitRateCounter {
public:
    void record(const LookupResult& r) {
        m_hit += r.hit_blocks;
        m_total += r.total_full_blocks;
        ++m_lookups;
    }
    /// Absent when nothing was recorded or no lookup had a full block.
    std::optional<double> rate() const {
        if (m_lookups == 0 || m_total == 0)
            return std::nullopt;
        return static_cast<double>(m_hit) / static_cast<double>(m_total);
    }
    std::size_t hit_blocks() const { return m_hit; }
    std::size_t total_blocks() const { return m_total; }
    std::size_t lookups() const { return m_lookups; }

private:
    std::size_t m_hit = 0;
    std::size_t m_total = 0;
    std::size_t m_lookups = 0;
};

}  // namespace prefixlog
