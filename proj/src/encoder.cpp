// Copyright (C) 2026 the synthrank authors
// SPDX-License-Identifier: Apache-2.0

#include "synthrank/encoder.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>
#include <unordered_map>

#include <httplib.h>

#include "synthrank/errors.hpp"
#include "synthrank/util.hpp"

namespace synthrank {

// ---------------------------------------------------------------------------
// ToyEncoder
// ---------------------------------------------------------------------------

namespace {

constexpr std::uint64_t kToyHashSeed = 0x70791;

std::size_t token_row(const std::string& token, std::size_t vocab_buckets) {
    return util::splitmix64(util::fnv1a64(token) ^ kToyHashSeed) % vocab_buckets;
}

}  // namespace

struct ToyEncoder::Segments {
    // Row multiplicities per segment; the special marker row is included with
    // count 1, so segment size is (token count + 1).
    std::unordered_map<std::size_t, double> query_rows;
    std::unordered_map<std::size_t, double> doc_rows;
    std::size_t query_len = 0;  // positions including the classification marker
    std::size_t doc_len = 0;    // positions including the separator marker
};

ToyEncoder::ToyEncoder(const ToyEncoderConfig& config) : config_(config) {
    if (config_.vocab_buckets == 0 || config_.d_model == 0 || config_.max_len < 2) {
        throw ConfigError("ToyEncoder: vocab_buckets and d_model must be positive, max_len >= 2");
    }
    const std::size_t rows = config_.vocab_buckets + 2;
    table_.resize(rows * config_.d_model);
    const double scale = 1.0 / std::sqrt(static_cast<double>(config_.d_model));
    std::mt19937_64 rng(util::derive_seed(config_.init_seed, "toy-encoder-init"));
    for (double& w : table_) {
        w = util::uniform_real(rng, -scale, scale);
    }
}

std::string ToyEncoder::encoder_id() const {
    return "toy/buckets=" + std::to_string(config_.vocab_buckets) +
           "/d=" + std::to_string(config_.d_model) + "/max_len=" + std::to_string(config_.max_len) +
           "/seed=" + std::to_string(config_.init_seed);
}

ToyEncoder::Segments ToyEncoder::split_segments(const std::string& query,
                                                const std::string& document) const {
    const auto q_tokens = util::lex_tokens(query);
    auto d_tokens = util::lex_tokens(document);

    // The query side is never truncated; the document tail absorbs the limit.
    const std::size_t budget =
        config_.max_len > q_tokens.size() + 2 ? config_.max_len - q_tokens.size() - 2 : 0;
    if (d_tokens.size() > budget) {
        d_tokens.resize(budget);
        truncations_.fetch_add(1, std::memory_order_relaxed);
    }

    Segments seg;
    const std::size_t cls_row = config_.vocab_buckets;
    const std::size_t sep_row = config_.vocab_buckets + 1;
    seg.query_rows[cls_row] = 1.0;
    for (const auto& t : q_tokens) {
        seg.query_rows[token_row(t, config_.vocab_buckets)] += 1.0;
    }
    seg.doc_rows[sep_row] = 1.0;
    for (const auto& t : d_tokens) {
        seg.doc_rows[token_row(t, config_.vocab_buckets)] += 1.0;
    }
    seg.query_len = q_tokens.size() + 1;
    seg.doc_len = d_tokens.size() + 1;
    return seg;
}

std::vector<double> ToyEncoder::encode(const std::string& query,
                                       const std::string& document) const {
    const Segments seg = split_segments(query, document);
    const std::size_t d = config_.d_model;
    std::vector<double> u(d, 0.0), v(d, 0.0);
    for (const auto& [row, count] : seg.query_rows) {
        const double* e = &table_[row * d];
        for (std::size_t k = 0; k < d; ++k) {
            u[k] += count * e[k];
        }
    }
    for (const auto& [row, count] : seg.doc_rows) {
        const double* e = &table_[row * d];
        for (std::size_t k = 0; k < d; ++k) {
            v[k] += count * e[k];
        }
    }
    std::vector<double> h(d);
    for (std::size_t k = 0; k < d; ++k) {
        u[k] /= static_cast<double>(seg.query_len);
        v[k] /= static_cast<double>(seg.doc_len);
        h[k] = u[k] * v[k];
    }
    return h;
}

void ToyEncoder::accumulate_param_grad(const std::string& query, const std::string& document,
                                       std::span<const double> upstream,
                                       std::span<double> grad) const {
    const Segments seg = split_segments(query, document);
    const std::size_t d = config_.d_model;
    if (upstream.size() != d || grad.size() != table_.size()) {
        throw ArgumentError("ToyEncoder::accumulate_param_grad: bad buffer sizes");
    }
    std::vector<double> u(d, 0.0), v(d, 0.0);
    for (const auto& [row, count] : seg.query_rows) {
        const double* e = &table_[row * d];
        for (std::size_t k = 0; k < d; ++k) {
            u[k] += count * e[k];
        }
    }
    for (const auto& [row, count] : seg.doc_rows) {
        const double* e = &table_[row * d];
        for (std::size_t k = 0; k < d; ++k) {
            v[k] += count * e[k];
        }
    }
    for (std::size_t k = 0; k < d; ++k) {
        u[k] /= static_cast<double>(seg.query_len);
        v[k] /= static_cast<double>(seg.doc_len);
    }
    // h_k = u_k v_k with u, v linear in the table rows.
    for (const auto& [row, count] : seg.query_rows) {
        double* g = &grad[row * d];
        const double w = count / static_cast<double>(seg.query_len);
        for (std::size_t k = 0; k < d; ++k) {
            g[k] += upstream[k] * v[k] * w;
        }
    }
    for (const auto& [row, count] : seg.doc_rows) {
        double* g = &grad[row * d];
        const double w = count / static_cast<double>(seg.doc_len);
        for (std::size_t k = 0; k < d; ++k) {
            g[k] += upstream[k] * u[k] * w;
        }
    }
}

nlohmann::json ToyEncoder::encoder_config() const {
    return {{"kind", "toy"},
            {"vocab_buckets", config_.vocab_buckets},
            {"d_model", config_.d_model},
            {"max_len", config_.max_len},
            {"init_seed", config_.init_seed}};
}

// ---------------------------------------------------------------------------
// RemoteEncoder
// ---------------------------------------------------------------------------

struct RemoteEncoder::Impl {
    RemoteEncoderConfig config;
    std::string token;

    explicit Impl(RemoteEncoderConfig cfg) : config(std::move(cfg)) {
        if (const char* env = std::getenv(config.token_env.c_str())) {
            token = env;
        }
    }
};

RemoteEncoder::RemoteEncoder(RemoteEncoderConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {
    if (impl_->config.d_model == 0) {
        throw ConfigError("RemoteEncoder: d_model must be declared in config");
    }
}

RemoteEncoder::~RemoteEncoder() = default;

std::string RemoteEncoder::encoder_id() const {
    return "remote:" + impl_->config.base_url + "/d=" + std::to_string(impl_->config.d_model);
}

std::size_t RemoteEncoder::d_model() const {
    return impl_->config.d_model;
}

std::vector<double> RemoteEncoder::encode(const std::string& query,
                                          const std::string& document) const {
    httplib::Headers headers;
    if (!impl_->token.empty()) {
        headers.emplace("Authorization", "Bearer " + impl_->token);
    }
    const std::string payload =
        nlohmann::json{{"query", query}, {"document", document}}.dump();
    int backoff_ms = 250;
    std::string last_failure;
    for (int attempt = 0; attempt <= impl_->config.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
            backoff_ms *= 2;
        }
        httplib::Client client(impl_->config.base_url);
        client.set_connection_timeout(0, impl_->config.timeout_ms * 1000LL);
        client.set_read_timeout(0, impl_->config.timeout_ms * 1000LL);
        auto res = client.Post("/v1/encode", headers, payload, "application/json");
        if (!res || res->status >= 500) {
            last_failure = res ? "server status " + std::to_string(res->status)
                               : "transport error (" + httplib::to_string(res.error()) + ")";
            continue;
        }
        if (res->status != 200) {
            throw GatewayError("encoder backend rejected request with status " +
                                   std::to_string(res->status),
                               /*retryable=*/false);
        }
        nlohmann::json parsed = nlohmann::json::parse(res->body, nullptr, false);
        if (parsed.is_discarded() || !parsed.contains("vector") ||
            !parsed.at("vector").is_array()) {
            throw GatewayError("encode response missing 'vector'", /*retryable=*/false);
        }
        auto vec = parsed.at("vector").get<std::vector<double>>();
        if (vec.size() != impl_->config.d_model) {
            throw ConfigError("remote encoder returned dim " + std::to_string(vec.size()) +
                              ", declared " + std::to_string(impl_->config.d_model));
        }
        return vec;
    }
    throw GatewayError("encoder backend unreachable at " + impl_->config.base_url +
                           "/v1/encode: " + last_failure,
                       /*retryable=*/true);
}

nlohmann::json RemoteEncoder::encoder_config() const {
    return {{"kind", "remote"},
            {"base_url", impl_->config.base_url},
            {"d_model", impl_->config.d_model},
            {"timeout_ms", impl_->config.timeout_ms},
            {"max_retries", impl_->config.max_retries}};
}

std::shared_ptr<SequenceEncoder> make_encoder(const nlohmann::json& config) {
    const std::string kind = config.value("kind", std::string{});
    if (kind == "toy") {
        ToyEncoderConfig cfg;
        cfg.vocab_buckets = config.value("vocab_buckets", cfg.vocab_buckets);
        cfg.d_model = config.value("d_model", cfg.d_model);
        cfg.max_len = config.value("max_len", cfg.max_len);
        cfg.init_seed = config.value("init_seed", cfg.init_seed);
        return std::make_shared<ToyEncoder>(cfg);
    }
    if (kind == "remote") {
        RemoteEncoderConfig cfg;
        cfg.base_url = config.value("base_url", std::string{});
        cfg.d_model = config.value("d_model", std::size_t{0});
        cfg.timeout_ms = config.value("timeout_ms", cfg.timeout_ms);
        cfg.max_retries = config.value("max_retries", cfg.max_retries);
        if (cfg.base_url.empty()) {
            throw ConfigError("remote encoder config requires base_url");
        }
        return std::make_shared<RemoteEncoder>(cfg);
    }
    throw ConfigError("unknown encoder kind: '" + kind + "'");
}

}  // namespace synthrank
