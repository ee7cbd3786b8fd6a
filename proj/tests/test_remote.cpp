// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>
#include <json.hpp>

#include "prefixlog/remote.hpp"
#include "prefixlog/synthetic.hpp"

using namespace prefixlog;
using namespace prefixlog::remote;

namespace {

// Local stand-in for a chat/completions server.
class FakeServer {
public:
    explicit FakeServer(int fail_every = 0) : m_fail_every(fail_every) {
        m_server.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                     httplib::Response& res) {
            const int now = ++m_in_flight;
            int prev = m_max_in_flight.load();
            while (now > prev && !m_max_in_flight.compare_exchange_weak(prev, now)) {
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(2));
            const int n = ++m_calls;
            {
                std::lock_guard lock(m_mutex);
                m_bodies.push_back(nlohmann::json::parse(req.body));
                m_auth = req.get_header_value("Authorization");
            }
            --m_in_flight;
            if (m_fail_every > 0 && n % m_fail_every == 0) {
                res.status = 500;
                return;
            }
            res.set_content(R"({"choices":[{"message":{"content":"x <*>"}}]})",
                            "application/json");
        });
        m_port = m_server.bind_to_any_port("127.0.0.1");
        m_thread = std::thread([this] { m_server.listen_after_bind(); });
        m_server.wait_until_ready();
    }
    ~FakeServer() {
        m_server.stop();
        m_thread.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(m_port) + "/v1"; }
    int max_in_flight() const { return m_max_in_flight; }
    int calls() const { return m_calls; }
    std::vector<nlohmann::json> bodies() {
        std::lock_guard lock(m_mutex);
        return m_bodies;
    }
    std::string auth() {
        std::lock_guard lock(m_mutex);
        return m_auth;
    }

private:
    httplib::Server m_server;
    std::thread m_thread;
    int m_port = 0;
    int m_fail_every;
    std::atomic<int> m_in_flight{0}, m_max_in_flight{0}, m_calls{0};
    std::mutex m_mutex;
    std::vector<nlohmann::json> m_bodies;
    std::string m_auth;
};

std::vector<Request> small_stream(PromptCodec& codec, std::size_t n) {
    HotspotSpec hs;
    hs.records = std::max<std::size_t>(n, 50);
    const auto data = make_hotspot_dataset(hs);
    const auto cands = CandidateSet::sample(data, 50, 1, codec);
    WorkloadSpec spec;
    spec.num_requests = n;
    return generate_stream(data, cands, spec, codec, Exec::serial);
}

}  // namespace

TEST(Endpoint, Parse) {
    const auto a = Endpoint::parse("http://localhost:8000/v1/");
    EXPECT_EQ(a.host, "localhost");
    EXPECT_EQ(a.port, 8000);
    EXPECT_EQ(a.base_path, "/v1");
    const auto b = Endpoint::parse("http://example.org");
    EXPECT_EQ(b.port, 80);
    EXPECT_EQ(b.base_path, "");
    EXPECT_THROW(Endpoint::parse("https://example.org"), ArgumentError);
    EXPECT_THROW(Endpoint::parse("http://host:notaport"), ArgumentError);
    EXPECT_THROW(Endpoint::parse("http://:80"), ArgumentError);
}

TEST(Remote, PromptTextAndBody) {
    PromptCodec codec;
    const auto p = codec.make_prompt({codec.make_demonstration("a 1", "a <*>")}, "a 2");
    const auto text = prompt_text(p);
    EXPECT_NE(text.find("Log: `a 1`\nTemplate: `a <*>`\n"), std::string::npos);
    EXPECT_NE(text.find("Log: `a 2`\nTemplate:"), std::string::npos);
    RemoteOptions o;
    o.model = "m";
    const auto body = nlohmann::json::parse(request_body(p, o));
    EXPECT_EQ(body["model"], "m");
    EXPECT_EQ(body["temperature"], 0);
    EXPECT_EQ(body["messages"][0]["content"], text);
}

TEST(Remote, UnreachableEndpointThrows) {
    // Bound but never listening, then closed: connecting is refused.
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    ASSERT_EQ(::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr), 0);
    socklen_t len = sizeof addr;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    const int port = ntohs(addr.sin_port);
    ::close(fd);
    PromptCodec codec;
    const auto stream = small_stream(codec, 5);
    RemoteOptions o;
    o.url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
    o.timeout_s = 2;
    EXPECT_THROW(run_remote(stream, o), RemoteError);
}

TEST(Remote, ConcurrencyOneIsSequentialInOrder) {
    FakeServer server;
    PromptCodec codec;
    const auto stream = small_stream(codec, 20);
    RemoteOptions o;
    o.url = server.url();
    o.concurrency = 1;
    o.api_key = "secret";
    const auto report = run_remote(stream, o);
    EXPECT_EQ(server.max_in_flight(), 1);
    ASSERT_EQ(report.arms.size(), 1u);
    EXPECT_EQ(report.arms[0].name, "refined");
    EXPECT_EQ(report.arms[0].failed, 0u);
    EXPECT_EQ(report.refinements, 20u);
    EXPECT_EQ(report.multiset_violations, 0u);
    const auto bodies = server.bodies();
    ASSERT_EQ(bodies.size(), 20u);
    for (std::size_t i = 0; i < bodies.size(); ++i) {
        const std::string content = bodies[i]["messages"][0]["content"];
        EXPECT_NE(content.find("Log: `" + stream[i].prompt.query.text + "`\nTemplate:"),
                  std::string::npos);
        EXPECT_TRUE(std::isfinite(report.arms[0].latencies[i]));
    }
    EXPECT_EQ(server.auth(), "Bearer secret");
}

TEST(Remote, AbSendsBothArmsWithinConcurrency) {
    FakeServer server;
    PromptCodec codec;
    const auto stream = small_stream(codec, 30);
    RemoteOptions o;
    o.url = server.url();
    o.concurrency = 4;
    o.ab = true;
    const auto report = run_remote(stream, o);
    ASSERT_EQ(report.arms.size(), 2u);
    EXPECT_EQ(report.arms[1].name, "unrefined");
    EXPECT_EQ(server.calls(), 60);
    EXPECT_LE(server.max_in_flight(), 4);
    const auto dir = std::filesystem::temp_directory_path() / "prefixlog_remote_report";
    write_remote_report(report, dir);
    EXPECT_TRUE(std::filesystem::exists(dir / "remote_report.json"));
}

TEST(Remote, ServerErrorsAreRetriedThenCounted) {
    FakeServer server(1);  // every call fails
    PromptCodec codec;
    const auto stream = small_stream(codec, 3);
    RemoteOptions o;
    o.url = server.url();
    o.concurrency = 1;
    o.retries = 2;
    const auto report = run_remote(stream, o);
    EXPECT_EQ(report.arms[0].failed, 3u);
    EXPECT_EQ(report.arms[0].retried, 6u);
    EXPECT_EQ(server.calls(), 9);
    for (double v : report.arms[0].latencies)
        EXPECT_TRUE(std::isnan(v));
}

TEST(Remote, OptionValidation) {
    RemoteOptions o;
    o.concurrency = 0;
    EXPECT_THROW(o.validate(), ArgumentError);
    o = RemoteOptions{};
    o.retries = 4;
    EXPECT_THROW(o.validate(), ArgumentError);
}
