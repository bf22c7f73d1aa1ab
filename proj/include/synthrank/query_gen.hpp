// Copyright (C) 2026 the synthrank authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "synthrank/corpus.hpp"
#include "synthrank/llm.hpp"

namespace synthrank {

/// An LLM-generated query tied to its seed document.
struct SyntheticQuery {
    std::string query_id;
    std::string text;          // whitespace-normalized
    std::string seed_doc_id;
    std::string created_with;  // template id + decode params

    bool operator==(const SyntheticQuery&) const = default;
};

struct QueryGenParams {
    DecodeParams decode;
    std::size_t max_query_tokens = 64;
    std::string tokenizer_spec = kDefaultTokenizerSpec;
};

/// The exact prompt a seed document produces; the dry-run surface.
std::string render_generation_prompt(const PromptTemplate& tmpl, const Document& seed);

SyntheticQuery generate_query(LlmBackend& backend, const PromptTemplate& tmpl,
                              const Document& seed, const QueryGenParams& params);

struct QueryGenFailure {
    std::string seed_doc_id;
    std::string reason;
};

struct QueryBatchResult {
    std::vector<SyntheticQuery> queries;          // seed order
    std::vector<QueryGenFailure> failures;        // per-seed errors, non-fatal
    std::vector<QueryGenFailure> duplicates;      // dropped by dedupe
};

/// One query per seed, in seed order. With dedupe on, later exact-text
/// duplicates (after whitespace normalization) are dropped and reported.
/// Individual failures are collected; only an all-seed failure is an error.
QueryBatchResult generate_query_batch(LlmBackend& backend, const PromptTemplate& tmpl,
                                      std::span<const Document> seeds,
                                      const QueryGenParams& params, bool dedupe);

/// JSON Lines with keys `query_id`, `text`, `seed_doc_id`, `created_with`.
void write_queries_jsonl(std::span<const SyntheticQuery> queries,
                         const std::filesystem::path& path);
std::vector<SyntheticQuery> read_queries_jsonl(const std::filesystem::path& path);

}  // namespace synthrank
