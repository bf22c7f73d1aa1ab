// Copyright (C) 2026 the synthrank authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "synthrank/encoder.hpp"
#include "synthrank/errors.hpp"
#include "synthrank/llm.hpp"
#include "synthrank/retriever.hpp"
#include "synthrank/trainer.hpp"

using namespace synthrank;

namespace {

/// In-process HTTP fixture bound to an ephemeral localhost port.
class TestServer {
public:
    TestServer() = default;
    ~TestServer() { stop(); }

    httplib::Server& server() { return server_; }

    std::string start() {
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
        return "http://127.0.0.1:" + std::to_string(port_);
    }

    void stop() {
        if (thread_.joinable()) {
            server_.stop();
            thread_.join();
        }
    }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

HttpBackendConfig quick_config(const std::string& base_url) {
    HttpBackendConfig cfg;
    cfg.base_url = base_url;
    cfg.timeout_ms = 2000;
    cfg.max_retries = 3;
    cfg.backoff_initial_ms = 1;
    return cfg;
}

}  // namespace

TEST_CASE("http llm backend speaks the completion wire contract") {
    ::setenv("SYNTHRANK_LLM_TOKEN", "test-token", 1);
    TestServer ts;
    nlohmann::json seen_body;
    std::string seen_auth;
    ts.server().Post("/v1/complete", [&](const httplib::Request& req, httplib::Response& res) {
        seen_body = nlohmann::json::parse(req.body);
        seen_auth = req.get_header_value("Authorization");
        res.set_content(nlohmann::json{{"text", "a generated query"}}.dump(), "application/json");
    });
    const std::string url = ts.start();

    HttpLlmBackend backend(quick_config(url));
    DecodeParams params;
    params.max_tokens = 48;
    params.temperature = 0.25;
    params.rng_seed = 99;
    CHECK(complete(backend, "some prompt", params) == "a generated query");
    CHECK(seen_body.at("prompt") == "some prompt");
    CHECK(seen_body.at("max_tokens") == 48);
    CHECK(seen_body.at("temperature") == doctest::Approx(0.25));
    CHECK(seen_body.at("seed") == 99);
    CHECK(seen_auth == "Bearer test-token");
}

TEST_CASE("http llm backend speaks the label-logits wire contract") {
    ::setenv("SYNTHRANK_LLM_TOKEN", "test-token", 1);
    TestServer ts;
    ts.server().Post("/v1/label_logits", [&](const httplib::Request& req, httplib::Response& res) {
        const auto body = nlohmann::json::parse(req.body);
        REQUIRE(body.at("labels").size() == 2);
        nlohmann::json logits{{body.at("labels")[0].get<std::string>(), 1.25},
                              {body.at("labels")[1].get<std::string>(), -0.5}};
        res.set_content(nlohmann::json{{"logits", logits}}.dump(), "application/json");
    });
    const std::string url = ts.start();

    HttpLlmBackend backend(quick_config(url));
    const LabelLogits logits = label_logits(backend, "Query: a\n\nDocument: b", {"Yes", "No"});
    CHECK(logits.at("Yes") == doctest::Approx(1.25));
    CHECK(logits.at("No") == doctest::Approx(-0.5));
}

TEST_CASE("server errors are retried with backoff until success") {
    TestServer ts;
    std::atomic<int> calls{0};
    ts.server().Post("/v1/complete", [&](const httplib::Request&, httplib::Response& res) {
        if (calls.fetch_add(1) < 2) {
            res.status = 503;
            return;
        }
        res.set_content(nlohmann::json{{"text", "recovered"}}.dump(), "application/json");
    });
    const std::string url = ts.start();

    HttpLlmBackend backend(quick_config(url));
    CHECK(complete(backend, "p", DecodeParams{}) == "recovered");
    CHECK(calls.load() == 3);
}

TEST_CASE("4xx responses are not retried") {
    TestServer ts;
    std::atomic<int> calls{0};
    ts.server().Post("/v1/complete", [&](const httplib::Request&, httplib::Response& res) {
        calls.fetch_add(1);
        res.status = 403;
    });
    const std::string url = ts.start();

    HttpLlmBackend backend(quick_config(url));
    try {
        complete(backend, "p", DecodeParams{});
        FAIL("expected GatewayError");
    } catch (const GatewayError& e) {
        CHECK_FALSE(e.retryable);
    }
    CHECK(calls.load() == 1);
}

TEST_CASE("an incomplete label set is a capability error") {
    TestServer ts;
    ts.server().Post("/v1/label_logits", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content(nlohmann::json{{"logits", {{"Yes", 0.4}}}}.dump(), "application/json");
    });
    const std::string url = ts.start();
    HttpLlmBackend backend(quick_config(url));
    CHECK_THROWS_AS(label_logits(backend, "p", {"Yes", "No"}), CapabilityError);
}

TEST_CASE("extra labels in the response are rejected") {
    TestServer ts;
    ts.server().Post("/v1/label_logits", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content(
            nlohmann::json{{"logits", {{"Yes", 0.4}, {"No", 0.1}, {"Maybe", 0.2}}}}.dump(),
            "application/json");
    });
    const std::string url = ts.start();
    HttpLlmBackend backend(quick_config(url));
    CHECK_THROWS_AS(label_logits(backend, "p", {"Yes", "No"}), CapabilityError);
}

TEST_CASE("an unreachable backend raises a retryable gateway error") {
    HttpBackendConfig cfg = quick_config("http://127.0.0.1:9");
    cfg.max_retries = 1;
    cfg.timeout_ms = 200;
    HttpLlmBackend backend(cfg);
    try {
        complete(backend, "p", DecodeParams{});
        FAIL("expected GatewayError");
    } catch (const GatewayError& e) {
        CHECK(e.retryable);
    }
}

TEST_CASE("http embedding backend round-trips vectors") {
    TestServer ts;
    ts.server().Post("/v1/embed", [&](const httplib::Request& req, httplib::Response& res) {
        const auto body = nlohmann::json::parse(req.body);
        CHECK(body.contains("text"));
        res.set_content(nlohmann::json{{"vector", {0.5, 0.5, 0.0, 0.5}}}.dump(),
                        "application/json");
    });
    const std::string url = ts.start();

    HttpEmbeddingConfig cfg;
    cfg.base_url = url;
    cfg.dim = 4;
    cfg.max_retries = 1;
    HttpEmbeddingBackend backend(cfg);
    const EmbeddingVector v = embed(backend, "some text");
    CHECK(v.dim() == 4);
    CHECK(v.values[0] == doctest::Approx(0.5));

    HttpEmbeddingConfig wrong = cfg;
    wrong.dim = 8;
    HttpEmbeddingBackend mismatched(wrong);
    CHECK_THROWS_AS(embed(mismatched, "some text"), ConfigError);
}

TEST_CASE("the remote encoder is frozen: only the score head trains") {
    TestServer ts;
    ts.server().Post("/v1/encode", [&](const httplib::Request& req, httplib::Response& res) {
        const auto body = nlohmann::json::parse(req.body);
        CHECK(body.contains("query"));
        CHECK(body.contains("document"));
        // Distinct fixed feature vectors per document keep scores
        // hand-computable while still giving the head a usable gradient.
        const bool positive =
            body.at("document").get<std::string>().find("positive") != std::string::npos;
        nlohmann::json vec = positive ? nlohmann::json{1.0, 2.0} : nlohmann::json{2.0, 1.0};
        res.set_content(nlohmann::json{{"vector", vec}}.dump(), "application/json");
    });
    const std::string url = ts.start();

    RemoteEncoderConfig cfg;
    cfg.base_url = url;
    cfg.d_model = 2;
    cfg.max_retries = 1;
    auto encoder = std::make_shared<RemoteEncoder>(cfg);
    CHECK(encoder->params().empty());

    CrossEncoderModel model(encoder, std::vector<double>{0.5, 0.25});
    CHECK(model.score_pair("q", "positive text") == doctest::Approx(0.5 + 0.5));
    CHECK(model.score_pair("q", "other text") == doctest::Approx(1.0 + 0.25));

    TrainingBatch batch;
    TrainingGroup group;
    group.query_id = "q";
    group.query_text = "q";
    group.positive = {"p", "positive text"};
    group.negatives = {{"n", "negative text"}};
    batch.groups.push_back(group);
    AdamState opt;
    const std::vector<double> head_before(model.head().begin(), model.head().end());
    const double loss = train_step(model, batch, opt, TrainHyperparams{0.1});
    CHECK(std::isfinite(loss));
    CHECK(model.num_params() == 2);
    bool head_changed = false;
    for (std::size_t i = 0; i < head_before.size(); ++i) {
        head_changed = head_changed || head_before[i] != model.head()[i];
    }
    CHECK(head_changed);
}
