// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>

#include "prefixlog/engine.hpp"

namespace prefixlog::tuner {

inline constexpr std::size_t kConfigDims = 3;
using UnitPoint = std::array<double, kConfigDims>;

/// Scheduler configuration with its position in the unit cube.
struct ConfigPoint {
    std::int64_t max_num_batched_tokens = 0;
    std::int64_t max_num_seqs = 0;
    double scheduler_delay_factor = 0.0;
    UnitPoint normalized{};

    friend bool operator==(const ConfigPoint& a, const ConfigPoint& b) {
        return a.max_num_batched_tokens == b.max_num_batched_tokens &&
               a.max_num_seqs == b.max_num_seqs &&
               a.scheduler_delay_factor == b.scheduler_delay_factor;
    }
};

/// Min-max box over the three tunable parameters.
struct ConfigSpace {
    std::int64_t min_batched_tokens = 4000;
    std::int64_t max_batched_tokens = kDefaultMaxPosition;
    std::int64_t min_seqs = 64;
    std::int64_t max_seqs = 256;
    double min_delay = 0.0;
    double max_delay = 2.0;

    static ConfigSpace for_max_position(std::int64_t max_position);

    /// Integer parameters are rounded; `normalized` is recomputed from the
    /// rounded values so the two views always agree.
    ConfigPoint from_unit(const UnitPoint& u) const;
    ConfigPoint from_raw(std::int64_t batched_tokens, std::int64_t seqs, double delay) const;
    ConfigPoint from_engine(const EngineConfig& cfg) const;
};

EngineConfig apply_config(const ConfigPoint& point, EngineConfig base);

}  // namespace prefixlog::tuner
