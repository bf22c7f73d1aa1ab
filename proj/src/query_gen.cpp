// Copyright (C) 2026 the synthrank authors
// SPDX-License-Identifier: Apache-2.0

#include "synthrank/query_gen.hpp"

#include <cstdio>
#include <unordered_map>

#include <json.hpp>

#include "synthrank/errors.hpp"
#include "synthrank/jsonl.hpp"
#include "synthrank/util.hpp"

namespace synthrank {

namespace {

std::string describe_decode(const PromptTemplate& tmpl, LlmBackend& backend,
                            const DecodeParams& decode) {
    char temperature[32];
    std::snprintf(temperature, sizeof temperature, "%.6g", decode.temperature);
    return "template=" + tmpl.id + ";backend=" + backend.backend_id() +
           ";max_tokens=" + std::to_string(decode.max_tokens) + ";temperature=" + temperature +
           ";seed=" + std::to_string(decode.rng_seed);
}

}  // namespace

std::string render_generation_prompt(const PromptTemplate& tmpl, const Document& seed) {
    return render_prompt(tmpl, {{"seed_document", seed.text}});
}

SyntheticQuery generate_query(LlmBackend& backend, const PromptTemplate& tmpl,
                              const Document& seed, const QueryGenParams& params) {
    if (util::normalize_whitespace(seed.text).empty()) {
        throw ArgumentError("generate_query: seed document " + seed.doc_id + " has empty text");
    }
    const std::string prompt = render_generation_prompt(tmpl, seed);
    const std::string raw = complete(backend, prompt, params.decode);
    const std::string text = util::normalize_whitespace(raw);
    const std::size_t tokens = count_tokens(text, params.tokenizer_spec);
    if (tokens > params.max_query_tokens) {
        throw GenerationError("generated query for seed " + seed.doc_id + " has " +
                              std::to_string(tokens) + " tokens (limit " +
                              std::to_string(params.max_query_tokens) + ")");
    }
    SyntheticQuery query;
    query.query_id = "q-" + seed.doc_id;
    query.text = text;
    query.seed_doc_id = seed.doc_id;
    query.created_with = describe_decode(tmpl, backend, params.decode);
    return query;
}

QueryBatchResult generate_query_batch(LlmBackend& backend, const PromptTemplate& tmpl,
                                      std::span<const Document> seeds,
                                      const QueryGenParams& params, bool dedupe) {
    if (seeds.empty()) {
        throw ArgumentError("generate_query_batch: seeds must be non-empty");
    }
    QueryBatchResult result;
    std::unordered_map<std::string, std::size_t> seen_text;
    for (const auto& seed : seeds) {
        SyntheticQuery query;
        try {
            query = generate_query(backend, tmpl, seed, params);
        } catch (const CapabilityError&) {
            throw;  // the backend can never serve this pipeline; fail loudly
        } catch (const GatewayError& e) {
            if (e.retryable) {
                // Transport-level failure with retries exhausted: the backend
                // is down, so burning through the remaining seeds is useless.
                throw;
            }
            result.failures.push_back({seed.doc_id, e.what()});
            continue;
        } catch (const Error& e) {
            result.failures.push_back({seed.doc_id, e.what()});
            continue;
        }
        if (dedupe) {
            auto [it, inserted] = seen_text.emplace(query.text, result.queries.size());
            if (!inserted) {
                result.duplicates.push_back({seed.doc_id, "duplicate_query"});
                continue;
            }
        }
        result.queries.push_back(std::move(query));
    }
    if (result.queries.empty() && result.duplicates.empty()) {
        throw GenerationError("generate_query_batch: all " + std::to_string(seeds.size()) +
                              " seeds failed");
    }
    return result;
}

void write_queries_jsonl(std::span<const SyntheticQuery> queries,
                         const std::filesystem::path& path) {
    std::vector<nlohmann::json> rows;
    rows.reserve(queries.size());
    for (const auto& q : queries) {
        rows.push_back({{"query_id", q.query_id},
                        {"text", q.text},
                        {"seed_doc_id", q.seed_doc_id},
                        {"created_with", q.created_with}});
    }
    jsonl::write(path, rows);
}

std::vector<SyntheticQuery> read_queries_jsonl(const std::filesystem::path& path) {
    std::vector<SyntheticQuery> queries;
    jsonl::for_each(path, [&](const nlohmann::json& row, std::size_t line_no) {
        if (!row.contains("query_id") || !row.contains("text") || !row.contains("seed_doc_id")) {
            throw IngestError("query record missing required keys at " + path.string() + ":" +
                              std::to_string(line_no));
        }
        SyntheticQuery q;
        q.query_id = row.at("query_id").get<std::string>();
        q.text = row.at("text").get<std::string>();
        q.seed_doc_id = row.at("seed_doc_id").get<std::string>();
        q.created_with = row.value("created_with", std::string{});
        queries.push_back(std::move(q));
    });
    return queries;
}

}  // namespace synthrank
