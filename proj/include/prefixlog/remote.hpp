// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "prefixlog/error.hpp"
#include "prefixlog/workload.hpp"

namespace prefixlog::remote {

/// The endpoint could not be reached at all.
class RemoteError : public Error {
public:
    using Error::Error;
};

/// Plain-HTTP OpenAI-compatible endpoint, e.g. http://localhost:8000/v1.
struct Endpoint {
    std::string host;
    int port = 80;
    std::string base_path;  // without trailing slash

    static Endpoint parse(const std::string& url);
};

struct RemoteOptions {
    std::string url = "http://localhost:8000/v1";
    std::string model = "default";
    std::string api_key;  // sent as a bearer token when non-empty
    std::size_t concurrency = 8;
    std::size_t max_tokens = 64;
    std::size_t retries = 3;
    int timeout_s = 120;
    /// Also send the unrefined prompts as a second arm.
    bool ab = false;
    std::size_t icl_table_capacity = 256;

    void validate() const;
};

/// Latencies are wall-clock seconds by request index; failed requests are NaN.
struct RemoteArm {
    std::string name;
    std::vector<double> latencies;
    std::size_t failed = 0;
    std::size_t retried = 0;
};

struct RemoteReport {
    std::vector<RemoteArm> arms;
    std::size_t refinements = 0;
    std::size_t multiset_violations = 0;
};

/// Plain-text prompt: instruction, then one "Log:/Template:" block per
/// demonstration, then the queried log.
std::string prompt_text(const Prompt& prompt);

/// chat/completions JSON body with a single user message.
std::string request_body(const Prompt& prompt, const RemoteOptions& options);

/// Refines every demonstration set in admission order, then sends the
/// prompts with at most `concurrency` requests in flight. Throws RemoteError
/// when a connection is refused; nothing is returned in that case.
RemoteReport run_remote(std::span<const Request> stream, const RemoteOptions& options);

void write_remote_report(const RemoteReport& report, const std::filesystem::path& dir);

}  // namespace prefixlog::remote
