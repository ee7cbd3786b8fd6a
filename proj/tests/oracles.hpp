// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

// Brute-force reference computations used by the unit and acceptance tests.
// None of these share code with the library beyond plain data types.

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "prefixlog/engine.hpp"
#include "prefixlog/pair.hpp"
#include "prefixlog/prompt.hpp"
#include "prefixlog/tuner/mlp.hpp"

namespace oracle {

/// Longest prefix length k of `candidate` such that its first k template ids
/// fit inside `current` with multiplicity; tries every k.
std::size_t pmc(const std::vector<prefixlog::TemplateId>& current,
                const std::vector<prefixlog::TemplateId>& candidate);

/// Longest block-aligned common prefix between `tokens` and any sequence in
/// `inserted`, in whole blocks.
std::size_t cache_hit_blocks(const std::vector<prefixlog::TokenSequence>& inserted,
                             const prefixlog::TokenSequence& tokens, std::size_t block_size);

/// Sort then take the ceil(p*n)-th element.
double percentile(std::vector<double> values, double p);

/// Central finite-difference gradient of the MSE loss (dropout off).
Eigen::VectorXd mse_gradient_fd(const Eigen::VectorXd& params,
                                std::span<const prefixlog::tuner::Sample> samples, double h);

/// Gradient of the attention-weighted objective sum_i w_i c_i with respect
/// to the flattened (Wq, Wk), by central differences.
Eigen::VectorXd attention_objective_fd(const Eigen::VectorXd& target,
                                       std::span<const Eigen::VectorXd> sources,
                                       const Eigen::MatrixXd& wq, const Eigen::MatrixXd& wk,
                                       const Eigen::VectorXd& coeffs, double h);

/// Standard normal pdf and cdf computed independently of the library.
double normal_pdf(double z);
double normal_cdf(double z);

/// Replays recorded engine steps and recomputes per-request latencies:
/// arrival = end of the step that admitted the request (0 for the first
/// wave), completion = end of the step that completed it.
std::vector<double> replay_latencies(const prefixlog::SimulationResult& result, std::size_t n);

/// Random demonstration over `templates` distinct templates; log text is
/// drawn from a small vocabulary so equal templates may carry different logs.
prefixlog::Demonstration random_demo(prefixlog::PromptCodec& codec, std::mt19937_64& rng,
                                     std::size_t templates);

}  // namespace oracle
