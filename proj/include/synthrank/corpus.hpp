// Copyright (C) 2026 the synthrank authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "synthrank/tokenizer.hpp"

namespace synthrank {

/// One indexed passage. `token_count` is always consistent with the owning
/// corpus's tokenizer spec.
struct Document {
    std::string doc_id;
    std::string text;
    std::size_t token_count = 0;
    std::string source_tag;

    bool operator==(const Document&) const = default;
};

/// A raw input record before length filtering.
struct CorpusRecord {
    std::string doc_id;
    std::string text;
    std::string source_tag;
};

struct IngestStats {
    std::size_t skipped_overlong = 0;  // token_count > max_tokens
    std::size_t skipped_empty = 0;     // empty after whitespace trimming

    std::size_t total_skipped() const { return skipped_overlong + skipped_empty; }
};

/// Immutable after ingest; iteration order is insertion order. Safe to share
/// across concurrent readers.
class Corpus {
public:
    Corpus(std::string tokenizer_spec, std::size_t max_tokens);

    std::size_t size() const { return documents_.size(); }
    bool empty() const { return documents_.empty(); }
    const Document& at(std::size_t i) const { return documents_.at(i); }

    /// nullptr when the id is unknown.
    const Document* find(const std::string& doc_id) const;
    bool contains(const std::string& doc_id) const { return find(doc_id) != nullptr; }

    auto begin() const { return documents_.begin(); }
    auto end() const { return documents_.end(); }

    const std::string& tokenizer_spec() const { return tokenizer_spec_; }
    std::size_t max_tokens() const { return max_tokens_; }

    bool operator==(const Corpus& other) const;

    /// Ingestion hook; rejects duplicate doc_ids. Prefer ingest_corpus.
    void add(Document doc);

private:
    std::vector<Document> documents_;
    std::unordered_map<std::string, std::size_t> index_by_id_;
    std::string tokenizer_spec_;
    std::size_t max_tokens_;
};

/// Keeps exactly the records whose token count fits `max_tokens`, in input
/// order. Duplicate doc_id raises IngestError naming the id; empty-text
/// records are skipped and counted, not fatal.
std::pair<Corpus, IngestStats> ingest_corpus(std::span<const CorpusRecord> records,
                                             std::size_t max_tokens,
                                             const std::string& tokenizer_spec = kDefaultTokenizerSpec);

/// JSON Lines: one object per line with keys `doc_id`, `text`, and optional
/// `source_tag`. UTF-8, LF endings.
std::pair<Corpus, IngestStats> ingest_corpus_jsonl(const std::filesystem::path& path,
                                                   std::size_t max_tokens,
                                                   const std::string& tokenizer_spec = kDefaultTokenizerSpec);

void write_corpus_jsonl(const Corpus& corpus, const std::filesystem::path& path);

/// Uniform sample of n distinct documents, without replacement; identical
/// output for identical (corpus, n, rng_seed).
std::vector<Document> sample_seed_documents(const Corpus& corpus, std::size_t n,
                                            std::uint64_t rng_seed);

}  // namespace synthrank
