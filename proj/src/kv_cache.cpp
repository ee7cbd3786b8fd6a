// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#include "prefixlog/kv_cache.hpp"

#include "prefixlog/error.hpp"
#include "prefixlog/hash.hpp"

namespace prefixlog {

std::vector<BlockHash> chain_hashes(std::span<const TokenId> tokens, std::size_t block_size) {
    const std::size_t full = tokens.size() / block_size;
    std::vector<BlockHash> out;
    out.reserve(full);
    BlockHash parent = 0x51ed270b27e7a8d3ULL;
    for (std::size_t b = 0; b < full; ++b) {
        std::uint64_t h = mix64(parent);
        for (std::size_t t = b * block_size; t < (b + 1) * block_size; ++t)
            h = mix64(h ^ tokens[t]);
        out.push_back(h);
        parent = h;
    }
    return out;
}

PrefixCache::PrefixCache(std::size_t block_size, std::size_t capacity_blocks)
    : m_block_size(block_size), m_capacity(capacity_blocks) {
    if (block_size == 0)
        throw ArgumentError("PrefixCache: block_size must be positive");
}

void PrefixCache::touch(std::list<BlockHash>::iterator it) {
    m_lru.splice(m_lru.end(), m_lru, it);
}

LookupResult PrefixCache::peek(std::span<const TokenId> tokens) const {
    LookupResult r;
    const auto hashes = chain_hashes(tokens, m_block_size);
    r.total_full_blocks = hashes.size();
    while (r.hit_blocks < hashes.size() && m_index.count(hashes[r.hit_blocks]))
        ++r.hit_blocks;
    r.hit_tokens = r.hit_blocks * m_block_size;
    return r;
}

LookupResult PrefixCache::lookup(std::span<const TokenId> tokens) {
    LookupResult r;
    const auto hashes = chain_hashes(tokens, m_block_size);
    r.total_full_blocks = hashes.size();
    for (auto h : hashes) {
        auto it = m_index.find(h);
        if (it == m_index.end())
            break;
        touch(it->second);
        ++r.hit_blocks;
    }
    r.hit_tokens = r.hit_blocks * m_block_size;
    return r;
}

void PrefixCache::insert(std::span<const TokenId> tokens) {
    auto hashes = chain_hashes(tokens, m_block_size);
    if (m_capacity != kUnbounded && hashes.size() > m_capacity)
        hashes.resize(m_capacity);
    // Resident blocks of this sequence move to the back first; a later block
    // can outlive an evicted earlier one, so one pass would not protect it.
    std::vector<BlockHash> missing;
    for (auto h : hashes) {
        if (auto it = m_index.find(h); it != m_index.end())
            touch(it->second);
        else
            missing.push_back(h);
    }
    for (auto h : missing) {
        if (m_capacity != kUnbounded && m_lru.size() >= m_capacity) {
            // The front belongs to another sequence: this sequence's blocks
            // sit at the back and it never holds more than the capacity.
            m_index.erase(m_lru.front());
            m_lru.pop_front();
            ++m_evictions;
        }
        m_lru.push_back(h);
        m_index.emplace(h, std::prev(m_lru.end()));
    }
}

}  // namespace prefixlog
