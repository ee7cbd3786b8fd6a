// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#include "prefixlog/remote.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "prefixlog/pair.hpp"

namespace prefixlog::remote {

namespace {

using nlohmann::json;

// Sends `bodies` in index order with a shared cursor, so a single worker
// issues them strictly one after another.
RemoteArm send_all(const Endpoint& ep, const std::vector<std::string>& bodies,
                   const RemoteOptions& options, std::string name) {
    RemoteArm arm;
    arm.name = std::move(name);
    arm.latencies.assign(bodies.size(), std::numeric_limits<double>::quiet_NaN());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> refused{false};
    std::atomic<std::size_t> failed{0}, retried{0};
    std::mutex error_mutex;
    std::string error;

    httplib::Headers headers;
    if (!options.api_key.empty())
        headers.emplace("Authorization", "Bearer " + options.api_key);
    const std::string path = ep.base_path + "/chat/completions";

    auto worker = [&] {
        httplib::Client client(ep.host, ep.port);
        client.set_connection_timeout(options.timeout_s, 0);
        client.set_read_timeout(options.timeout_s, 0);
        client.set_write_timeout(options.timeout_s, 0);
        for (;;) {
            if (refused)
                return;
            const std::size_t i = next.fetch_add(1);
            if (i >= bodies.size())
                return;
            const auto start = std::chrono::steady_clock::now();
            bool ok = false;
            for (std::size_t attempt = 0; attempt <= options.retries && !ok; ++attempt) {
                if (attempt > 0)
                    ++retried;
                auto res = client.Post(path, headers, bodies[i], "application/json");
                if (!res && res.error() == httplib::Error::Connection) {
                    std::lock_guard lock(error_mutex);
                    refused = true;
                    error = "cannot connect to " + ep.host + ":" + std::to_string(ep.port);
                    return;
                }
                ok = res && res->status == 200;
            }
            if (ok) {
                const std::chrono::duration<double> d = std::chrono::steady_clock::now() - start;
                arm.latencies[i] = d.count();
            } else {
                ++failed;
            }
        }
    };

    const std::size_t workers = std::max<std::size_t>(1, std::min(options.concurrency, bodies.size()));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back(worker);
    for (auto& t : pool)
        t.join();
    if (refused)
        throw RemoteError(error);
    arm.failed = failed;
    arm.retried = retried;
    return arm;
}

}  // namespace

Endpoint Endpoint::parse(const std::string& url) {
    const std::string scheme = "http://";
    if (url.rfind(scheme, 0) != 0)
        throw ArgumentError("remote: only http:// endpoints are supported: " + url);
    const auto rest = url.substr(scheme.size());
    const auto slash = rest.find('/');
    const auto authority = rest.substr(0, slash);
    Endpoint ep;
    const auto colon = authority.rfind(':');
    if (colon == std::string::npos) {
        ep.host = authority;
    } else {
        ep.host = authority.substr(0, colon);
        try {
            ep.port = std::stoi(authority.substr(colon + 1));
        } catch (const std::exception&) {
            throw ArgumentError("remote: bad port in " + url);
        }
    }
    if (ep.host.empty() || ep.port <= 0 || ep.port > 65535)
        throw ArgumentError("remote: bad endpoint " + url);
    ep.base_path = slash == std::string::npos ? "" : rest.substr(slash);
    while (!ep.base_path.empty() && ep.base_path.back() == '/')
        ep.base_path.pop_back();
    return ep;
}

void RemoteOptions::validate() const {
    Endpoint::parse(url);
    if (concurrency == 0)
        throw ArgumentError("remote: concurrency must be positive");
    if (retries > 3)
        throw ArgumentError("remote: at most 3 retries");
    if (timeout_s <= 0)
        throw ArgumentError("remote: timeout must be positive");
    if (icl_table_capacity == 0)
        throw ArgumentError("remote: icl_table_capacity must be positive");
}

std::string prompt_text(const Prompt& prompt) {
    std::string out = prompt.instruction ? prompt.instruction->text : std::string();
    out += '\n';
    for (const auto& d : prompt.ds) {
        out += "Log: `" + d.log + "`\nTemplate: `" + d.template_text + "`\n";
    }
    out += "Log: `" + prompt.query.text + "`\nTemplate:";
    return out;
}

std::string request_body(const Prompt& prompt, const RemoteOptions& options) {
    json body = {{"model", options.model},
                 {"messages", json::array({{{"role", "user"}, {"content", prompt_text(prompt)}}})},
                 {"max_tokens", options.max_tokens},
                 {"temperature", 0}};
    return body.dump();
}

RemoteReport run_remote(std::span<const Request> stream, const RemoteOptions& options) {
    options.validate();
    const auto ep = Endpoint::parse(options.url);

    RemoteReport report;
    ICLTable table(options.icl_table_capacity);
    std::vector<std::string> refined, plain;
    refined.reserve(stream.size());
    for (const auto& req : stream) {
        auto r = refine(table, req.prompt.ds);
        ++report.refinements;
        if (template_multiset(r.final_ds) != template_multiset(req.prompt.ds))
            ++report.multiset_violations;
        Prompt p{req.prompt.instruction, std::move(r.final_ds), req.prompt.query};
        refined.push_back(request_body(p, options));
        if (options.ab)
            plain.push_back(request_body(req.prompt, options));
    }
    report.arms.push_back(send_all(ep, refined, options, "refined"));
    if (options.ab)
        report.arms.push_back(send_all(ep, plain, options, "unrefined"));
    return report;
}

void write_remote_report(const RemoteReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    json arms = json::array();
    for (const auto& a : report.arms) {
        json lat = json::array();
        for (double v : a.latencies)
            lat.push_back(std::isfinite(v) ? json(v) : json(nullptr));
        arms.push_back({{"name", a.name},
                        {"failed", a.failed},
                        {"retried", a.retried},
                        {"latencies_s", lat}});
    }
    json root = {{"refinements", report.refinements},
                 {"multiset_violations", report.multiset_violations},
                 {"arms", arms}};
    std::ofstream out(dir / "remote_report.json", std::ios::binary);
    if (!out)
        throw IoError("cannot write " + (dir / "remote_report.json").string());
    out << root.dump(2) << "\n";
}

}  // namespace prefixlog::remote
