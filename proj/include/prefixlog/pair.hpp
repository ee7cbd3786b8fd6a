// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <list>
#include <optional>
#include <span>
#include <vector>

#include "prefixlog/prompt.hpp"

namespace prefixlog {

/// Sorted template ids of a demonstration set, duplicates kept.
using TemplateMultiset = std::vector<TemplateId>;

TemplateMultiset template_multiset(const DemonstrationSet& ds);

struct ICLEntry {
    std::uint64_t id = 0;
    DemonstrationSet ds;
    TemplateMultiset template_ids;
};

/// Historical demonstration sets in recency order: head is least recently
/// used, tail most recently used. Inserting past the capacity evicts the head.
class ICLTable {
public:
    using const_iterator = std::list<ICLEntry>::const_iterator;

    explicit ICLTable(std::size_t capacity = 256);

    std::size_t size() const { return m_entries.size(); }
    std::size_t capacity() const { return m_capacity; }
    bool empty() const { return m_entries.empty(); }
    const_iterator begin() const { return m_entries.begin(); }
    const_iterator end() const { return m_entries.end(); }

    /// Appends at the tail and evicts from the head while over capacity.
    const ICLEntry& append(DemonstrationSet ds);
    void move_to_tail(const_iterator entry);
    std::size_t evictions() const { return m_evictions; }

private:
    std::list<ICLEntry> m_entries;
    std::size_t m_capacity;
    std::size_t m_evictions = 0;
    std::uint64_t m_next_id = 0;
};

/// Longest prefix of candidate.ds whose template ids can all be drawn from
/// `current` without reuse.
std::size_t compute_pmc(const TemplateMultiset& current, const ICLEntry& candidate);

struct TargetMatch {
    ICLTable::const_iterator entry;
    std::size_t pmc = 0;
};

/// Entry with the largest PMC, preferring the most recently used one on ties.
/// Absent when the table is empty or every PMC is zero.
std::optional<TargetMatch> match_target(const ICLTable& table, const DemonstrationSet& current);

/// Replaces, for each of the target's first `pmc` demonstrations, the first
/// not yet replaced current demonstration with the same template by the
/// target's demonstration. Throws std::logic_error if a template is missing.
DemonstrationSet modify(const DemonstrationSet& current, const ICLEntry& target, std::size_t pmc);

/// Moves the replaced demonstrations to the front in the target's order;
/// the rest keep their relative order.
DemonstrationSet reorder(const DemonstrationSet& modified, const ICLEntry& target,
                         std::size_t pmc);

struct RefinementResult {
    DemonstrationSet final_ds;
    std::size_t pmc = 0;
    bool matched = false;
    std::size_t reused_prefix_demos = 0;
};

/// Matches, modifies and reorders `current`, then updates the table:
///  - full match: take the target verbatim and move it to the tail;
///  - no match: keep `current` and append it;
///  - partial match: append the refined set, leave the target in place.
RefinementResult refine(ICLTable& table, const DemonstrationSet& current);

/// floor(cache_blocks * block_size / mean_ds_tokens), at least 1.
std::size_t estimate_table_capacity(std::size_t cache_blocks, std::size_t block_size,
                                    double mean_ds_tokens);

/// JSON snapshot of the ordered entries ({log, template} per demonstration).
void save_icl_table(const ICLTable& table, const std::filesystem::path& path);
ICLTable load_icl_table(const std::filesystem::path& path, PromptCodec& codec);

}  // namespace prefixlog
