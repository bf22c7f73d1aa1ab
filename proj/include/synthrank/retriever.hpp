// Copyright (C) 2026 the synthrank authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "synthrank/corpus.hpp"
#include "synthrank/query_gen.hpp"

namespace synthrank {

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }
};

/// Pluggable dense-embedding backend. Implementations must be deterministic
/// for a fixed configuration and safe for concurrent use.
class EmbeddingBackend {
public:
    virtual ~EmbeddingBackend() = default;

    virtual std::size_t dim() const = 0;
    virtual std::string backend_id() const = 0;
    virtual EmbeddingVector embed_impl(const std::string& text) = 0;
};

/// Validated entry point: rejects empty text and enforces the declared dim,
/// finiteness, and the no-all-zero invariant.
EmbeddingVector embed(EmbeddingBackend& backend, const std::string& text);

/// dot(a,b) / (|a| * |b|), summed in index order and clamped to [-1, 1].
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

/// Hashed bag-of-words embedder: lexical tokens are hashed into a fixed
/// number of buckets (fixed hash seed), term frequencies accumulated, then
/// L2-normalized. Lexical overlap therefore correlates with the mock
/// relevance judge.
class MockEmbeddingBackend : public EmbeddingBackend {
public:
    explicit MockEmbeddingBackend(std::size_t dim = 64, std::uint64_t hash_seed = 0x5eed);

    std::size_t dim() const override { return dim_; }
    std::string backend_id() const override;
    EmbeddingVector embed_impl(const std::string& text) override;

private:
    std::size_t dim_;
    std::uint64_t hash_seed_;
};

struct HttpEmbeddingConfig {
    std::string base_url;
    std::size_t dim = 0;
    int timeout_ms = 30000;
    int max_retries = 3;
    std::string token_env = "SYNTHRANK_LLM_TOKEN";
};

/// Remote embedder: POST /v1/embed {text} -> {vector:[...]}.
class HttpEmbeddingBackend : public EmbeddingBackend {
public:
    explicit HttpEmbeddingBackend(HttpEmbeddingConfig config);
    ~HttpEmbeddingBackend() override;

    std::size_t dim() const override;
    std::string backend_id() const override;
    EmbeddingVector embed_impl(const std::string& text) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct CandidateEntry {
    std::string doc_id;
    double similarity;  // cosine, in [-1, 1]

    bool operator==(const CandidateEntry&) const = default;
};

/// Top-k retrieval result, sorted by similarity descending with ties broken
/// by ascending doc_id. No duplicates; at most k entries.
struct CandidateSet {
    std::string query_id;
    std::vector<CandidateEntry> entries;
    std::size_t k = 0;
};

/// Immutable dense index over a corpus: one vector per document, plus the
/// identity of the backend that produced them. Exact search only.
class DenseIndex {
public:
    /// Embeds every document; an embedding failure aborts the build naming
    /// the offending doc_id.
    static DenseIndex build(EmbeddingBackend& backend, const Corpus& corpus);

    /// Exact top-k by cosine. The query is embedded with `backend`, which
    /// must match the index's backend identity.
    CandidateSet retrieve_top_k(EmbeddingBackend& backend, const SyntheticQuery& query,
                                std::size_t k) const;

    std::size_t size() const { return doc_ids_.size(); }
    const std::string& backend_id() const { return backend_id_; }
    std::size_t dim() const { return dim_; }
    const std::vector<std::string>& doc_ids() const { return doc_ids_; }
    const EmbeddingVector& vector_at(std::size_t i) const { return vectors_[i]; }

    /// Versioned JSON artifact with magic header "SYNTHRANK-IDX-1".
    void save(const std::filesystem::path& path) const;
    static DenseIndex load(const std::filesystem::path& path);

    bool operator==(const DenseIndex& other) const;

private:
    DenseIndex() = default;

    std::string backend_id_;
    std::size_t dim_ = 0;
    std::vector<std::string> doc_ids_;
    std::vector<EmbeddingVector> vectors_;
};

inline constexpr const char* kIndexMagic = "SYNTHRANK-IDX-1";

}  // namespace synthrank
