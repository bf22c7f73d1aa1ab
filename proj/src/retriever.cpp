// Copyright (C) 2026 the synthrank authors
// SPDX-License-Identifier: Apache-2.0

#include "synthrank/retriever.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "synthrank/errors.hpp"
#include "synthrank/util.hpp"

namespace synthrank {

EmbeddingVector embed(EmbeddingBackend& backend, const std::string& text) {
    if (util::normalize_whitespace(text).empty()) {
        throw ArgumentError("embed: text must be non-empty");
    }
    EmbeddingVector v = backend.embed_impl(text);
    if (v.dim() != backend.dim()) {
        throw ConfigError("embedding backend " + backend.backend_id() + " returned dim " +
                          std::to_string(v.dim()) + ", declared " + std::to_string(backend.dim()));
    }
    bool all_zero = true;
    for (double x : v.values) {
        if (!std::isfinite(x)) {
            throw ConfigError("embedding backend " + backend.backend_id() +
                              " returned a non-finite value");
        }
        all_zero = all_zero && x == 0.0;
    }
    if (all_zero) {
        throw ConfigError("embedding backend " + backend.backend_id() +
                          " returned the all-zero vector");
    }
    return v;
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) {
        throw ArgumentError("cosine_similarity: dim mismatch (" + std::to_string(a.dim()) +
                            " vs " + std::to_string(b.dim()) + ")");
    }
    // Fixed sequential summation order keeps ranking reproducible.
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0.0 || nb == 0.0) {
        throw ArgumentError("cosine_similarity: zero vector");
    }
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// Mock embedding backend
// ---------------------------------------------------------------------------

MockEmbeddingBackend::MockEmbeddingBackend(std::size_t dim, std::uint64_t hash_seed)
    : dim_(dim), hash_seed_(hash_seed) {
    if (dim_ == 0) {
        throw ConfigError("MockEmbeddingBackend: dim must be positive");
    }
}

std::string MockEmbeddingBackend::backend_id() const {
    return "mock-bow/dim=" + std::to_string(dim_) + "/seed=" + util::to_hex(hash_seed_);
}

EmbeddingVector MockEmbeddingBackend::embed_impl(const std::string& text) {
    EmbeddingVector v;
    v.values.assign(dim_, 0.0);
    const auto tokens = util::lex_tokens(text);
    for (const auto& tok : tokens) {
        const std::uint64_t h = util::splitmix64(util::fnv1a64(tok) ^ hash_seed_);
        v.values[h % dim_] += 1.0;
    }
    if (tokens.empty()) {
        // No lexical content (e.g. pure punctuation): hash the raw bytes so
        // the invariant "never all-zero" holds.
        const std::uint64_t h = util::splitmix64(util::fnv1a64(text) ^ hash_seed_);
        v.values[h % dim_] = 1.0;
    }
    double norm = 0.0;
    for (double x : v.values) {
        norm += x * x;
    }
    norm = std::sqrt(norm);
    for (double& x : v.values) {
        x /= norm;
    }
    return v;
}

// ---------------------------------------------------------------------------
// HTTP embedding backend
// ---------------------------------------------------------------------------

struct HttpEmbeddingBackend::Impl {
    HttpEmbeddingConfig config;
    std::string token;

    explicit Impl(HttpEmbeddingConfig cfg) : config(std::move(cfg)) {
        if (const char* env = std::getenv(config.token_env.c_str())) {
            token = env;
        }
    }
};

HttpEmbeddingBackend::HttpEmbeddingBackend(HttpEmbeddingConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {
    if (impl_->config.dim == 0) {
        throw ConfigError("HttpEmbeddingBackend: dim must be declared in config");
    }
}

HttpEmbeddingBackend::~HttpEmbeddingBackend() = default;

std::size_t HttpEmbeddingBackend::dim() const {
    return impl_->config.dim;
}

std::string HttpEmbeddingBackend::backend_id() const {
    return "http-embed:" + impl_->config.base_url + "/dim=" + std::to_string(impl_->config.dim);
}

EmbeddingVector HttpEmbeddingBackend::embed_impl(const std::string& text) {
    httplib::Headers headers;
    if (!impl_->token.empty()) {
        headers.emplace("Authorization", "Bearer " + impl_->token);
    }
    const std::string payload = nlohmann::json{{"text", text}}.dump();
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
        auto res = client.Post("/v1/embed", headers, payload, "application/json");
        if (!res || res->status >= 500) {
            last_failure = res ? "server status " + std::to_string(res->status)
                               : "transport error (" + httplib::to_string(res.error()) + ")";
            continue;
        }
        if (res->status != 200) {
            throw GatewayError("embedding backend rejected request with status " +
                                   std::to_string(res->status),
                               /*retryable=*/false);
        }
        nlohmann::json parsed = nlohmann::json::parse(res->body, nullptr, false);
        if (parsed.is_discarded() || !parsed.contains("vector") ||
            !parsed.at("vector").is_array()) {
            throw GatewayError("embed response missing 'vector'", /*retryable=*/false);
        }
        EmbeddingVector v;
        v.values = parsed.at("vector").get<std::vector<double>>();
        return v;
    }
    throw GatewayError("embedding backend unreachable at " + impl_->config.base_url +
                           "/v1/embed: " + last_failure,
                       /*retryable=*/true);
}

// ---------------------------------------------------------------------------
// Dense index
// ---------------------------------------------------------------------------

DenseIndex DenseIndex::build(EmbeddingBackend& backend, const Corpus& corpus) {
    if (corpus.empty()) {
        throw ArgumentError("DenseIndex::build: corpus is empty");
    }
    DenseIndex index;
    index.backend_id_ = backend.backend_id();
    index.dim_ = backend.dim();
    index.doc_ids_.reserve(corpus.size());
    index.vectors_.reserve(corpus.size());
    for (const auto& doc : corpus) {
        try {
            index.vectors_.push_back(embed(backend, doc.text));
        } catch (const Error& e) {
            throw StateError("DenseIndex::build: embedding failed for doc " + doc.doc_id + ": " +
                             e.what());
        }
        index.doc_ids_.push_back(doc.doc_id);
    }
    return index;
}

CandidateSet DenseIndex::retrieve_top_k(EmbeddingBackend& backend, const SyntheticQuery& query,
                                        std::size_t k) const {
    if (doc_ids_.empty()) {
        throw StateError("retrieve_top_k: index is empty");
    }
    if (k == 0) {
        throw ArgumentError("retrieve_top_k: k must be >= 1");
    }
    if (backend.backend_id() != backend_id_) {
        throw ConfigError("retrieve_top_k: index built with backend '" + backend_id_ +
                          "', queried with '" + backend.backend_id() + "'");
    }
    const EmbeddingVector qvec = embed(backend, query.text);

    std::vector<std::size_t> order(doc_ids_.size());
    std::vector<double> sims(doc_ids_.size());
    for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
        order[i] = i;
        sims[i] = cosine_similarity(qvec, vectors_[i]);
    }
    const auto better = [&](std::size_t a, std::size_t b) {
        if (sims[a] != sims[b]) {
            return sims[a] > sims[b];
        }
        return doc_ids_[a] < doc_ids_[b];
    };
    const std::size_t take = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take),
                      order.end(), better);

    CandidateSet result;
    result.query_id = query.query_id;
    result.k = k;
    result.entries.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        result.entries.push_back({doc_ids_[order[i]], sims[order[i]]});
    }
    return result;
}

void DenseIndex::save(const std::filesystem::path& path) const {
    // ordered_json keeps the magic string at the head of the artifact.
    nlohmann::ordered_json docs = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
        docs.push_back({{"doc_id", doc_ids_[i]}, {"vector", vectors_[i].values}});
    }
    nlohmann::ordered_json j{{"magic", kIndexMagic},
                             {"backend_id", backend_id_},
                             {"dim", dim_},
                             {"docs", std::move(docs)}};
    util::write_file_atomic(path, j.dump() + "\n");
}

DenseIndex DenseIndex::load(const std::filesystem::path& path) {
    nlohmann::json j = nlohmann::json::parse(util::read_file(path), nullptr, false);
    if (j.is_discarded() || j.value("magic", std::string{}) != kIndexMagic) {
        throw StateError("not a dense index artifact (bad magic): " + path.string());
    }
    DenseIndex index;
    index.backend_id_ = j.at("backend_id").get<std::string>();
    index.dim_ = j.at("dim").get<std::size_t>();
    for (const auto& doc : j.at("docs")) {
        index.doc_ids_.push_back(doc.at("doc_id").get<std::string>());
        EmbeddingVector v;
        v.values = doc.at("vector").get<std::vector<double>>();
        if (v.dim() != index.dim_) {
            throw StateError("index vector dim mismatch for doc " + index.doc_ids_.back());
        }
        index.vectors_.push_back(std::move(v));
    }
    return index;
}

bool DenseIndex::operator==(const DenseIndex& other) const {
    if (backend_id_ != other.backend_id_ || dim_ != other.dim_ || doc_ids_ != other.doc_ids_) {
        return false;
    }
    for (std::size_t i = 0; i < vectors_.size(); ++i) {
        if (vectors_[i].values != other.vectors_[i].values) {
            return false;
        }
    }
    return true;
}

}  // namespace synthrank
