// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#include "prefixlog/tuner/config_space.hpp"

#include <algorithm>
#include <cmath>

namespace prefixlog::tuner {

namespace {

double unit(double v, double lo, double hi) {
    return hi > lo ? std::clamp((v - lo) / (hi - lo), 0.0, 1.0) : 0.0;
}

}  // namespace

ConfigSpace ConfigSpace::for_max_position(std::int64_t max_position) {
    ConfigSpace s;
    s.max_batched_tokens = max_position;
    return s;
}

ConfigPoint ConfigSpace::from_raw(std::int64_t batched_tokens, std::int64_t seqs,
                                  double delay) const {
    ConfigPoint p;
    p.max_num_batched_tokens = std::clamp(batched_tokens, min_batched_tokens, max_batched_tokens);
    p.max_num_seqs = std::clamp(seqs, min_seqs, max_seqs);
    p.scheduler_delay_factor = std::clamp(delay, min_delay, max_delay);
    p.normalized = {unit(static_cast<double>(p.max_num_batched_tokens),
                         static_cast<double>(min_batched_tokens),
                         static_cast<double>(max_batched_tokens)),
                    unit(static_cast<double>(p.max_num_seqs), static_cast<double>(min_seqs),
                         static_cast<double>(max_seqs)),
                    unit(p.scheduler_delay_factor, min_delay, max_delay)};
    return p;
}

ConfigPoint ConfigSpace::from_unit(const UnitPoint& u) const {
    auto lerp = [](double lo, double hi, double t) { return lo + (hi - lo) * std::clamp(t, 0.0, 1.0); };
    return from_raw(std::llround(lerp(static_cast<double>(min_batched_tokens),
                                      static_cast<double>(max_batched_tokens), u[0])),
                    std::llround(lerp(static_cast<double>(min_seqs), static_cast<double>(max_seqs),
                                      u[1])),
                    lerp(min_delay, max_delay, u[2]));
}

ConfigPoint ConfigSpace::from_engine(const EngineConfig& cfg) const {
    return from_raw(cfg.max_num_batched_tokens, cfg.max_num_seqs, cfg.scheduler_delay_factor);
}

EngineConfig apply_config(const ConfigPoint& point, EngineConfig base) {
    base.max_num_batched_tokens = point.max_num_batched_tokens;
    base.max_num_seqs = point.max_num_seqs;
    base.scheduler_delay_factor = point.scheduler_delay_factor;
    return base;
}

}  // namespace prefixlog::tuner
