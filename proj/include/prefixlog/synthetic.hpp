// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "prefixlog/workload.hpp"

namespace prefixlog {

inline constexpr std::size_t kHotFamilies = 5;

/// Generator for a labeled log corpus with skewed demonstration selection.
///
/// "Pure" records belong to one of five hot families: a fixed two-word core
/// followed by keywords from the family's pool. Every other record has its
/// own rare template (a short phrase plus record-unique identifiers) and
/// mentions the core of a random, non-empty set of hot families. Under
/// cosine selection the short pure records outrank other rare records, so
/// a query pulls demonstrations from each family it mentions and the hot
/// spots overlap.
struct HotspotSpec {
    std::size_t records = 2000;
    std::uint64_t seed = 0;
    /// Share of all records that are pure members of family h.
    std::array<double, kHotFamilies> pure_share{0.06, 0.06, 0.06, 0.06, 0.06};
    /// Probability that a rare-template record mentions family h.
    std::array<double, kHotFamilies> mention{0.411, 0.294, 0.274, 0.210, 0.156};
    std::size_t rare_templates = 400;
    std::size_t family_keywords = 12; // keyword pool per family
    std::size_t pure_keywords = 3;    // keywords carried by a pure record
    std::size_t mention_keywords = 1; // keywords next to each mentioned core
    std::size_t identifiers = 10;     // unique tokens per rare record

    void validate() const;
};

/// Deterministic for a given HotspotSpec. Template text replaces keyword slots by <*>.
std::vector<LogRecord> make_hotspot_dataset(const HotspotSpec& spec);

/// Template text of hot family h (as it appears in the generated records).
std::string hot_family_template(const HotspotSpec& spec, std::size_t h);

}  // namespace prefixlog
