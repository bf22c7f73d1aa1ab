// Copyright (C) 2026 the synthrank authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "synthrank/cross_encoder.hpp"

namespace synthrank {

/// A model's ranking for one query, with binary relevance labels covering at
/// least every ranked document. The relevance map is the query's pool: ideal
/// metrics (nDCG's normalizer, AP's denominator) are computed against it.
struct RankedList {
    std::string query_id;
    std::vector<std::string> ranked;          // best first, no duplicates
    std::map<std::string, int> relevance;     // doc_id -> {0, 1}
};

/// Relevant fraction of the top min(k, length) positions, divided by k.
double precision_at_k(const RankedList& list, std::size_t k);

/// Mean of precision@r over relevant ranks r <= k, normalized by min(R, k)
/// where R counts relevant documents in the pool; 0 when R = 0.
double average_precision_at_k(const RankedList& list, std::size_t k);

/// 1/rank of the first relevant document within the top k; 0 if none.
double reciprocal_rank_at_k(const RankedList& list, std::size_t k);

/// Binary-gain DCG@k with log2(i+1) discount, normalized by the ideal
/// reordering of the pool; 0 when the pool has no relevant document.
double ndcg_at_k(const RankedList& list, std::size_t k);

struct QueryMetrics {
    std::string query_id;
    double precision = 0.0;
    double average_precision = 0.0;
    double reciprocal_rank = 0.0;
    double ndcg = 0.0;
};

struct AggregateMetrics {
    double precision = 0.0;
    double map = 0.0;
    double mrr = 0.0;
    double ndcg = 0.0;
};

/// Per-query values plus unweighted macro-averages at one cutoff.
struct MetricReport {
    std::size_t k = 10;
    std::string dataset_tag;  // in_domain | out_domain
    std::size_t n_queries = 0;
    std::vector<QueryMetrics> per_query;
    AggregateMetrics aggregate;
    // single_positive when no pool carries more than one relevant document;
    // under that regime MAP and MRR coincide.
    std::string regime;
};

nlohmann::json metric_report_to_json(const MetricReport& report);
MetricReport metric_report_from_json(const nlohmann::json& j);
void write_metric_report(const MetricReport& report, const std::filesystem::path& path);

/// One labeled pool document. `hardness` orders non-relevant documents when a
/// pool has to be truncated (higher = kept first).
struct EvalPoolDoc {
    std::string doc_id;
    std::string text;
    bool relevant = false;
    double hardness = 0.0;
};

struct EvalQuery {
    std::string query_id;
    std::string query_text;
    std::vector<EvalPoolDoc> pool;
};

/// Score every pool document with the model, rank (score descending, doc_id
/// ascending on ties) and compute all four metrics per query. Pools larger
/// than max_pool are truncated before scoring: relevant documents first, then
/// non-relevant by descending hardness, ties by ascending doc_id.
MetricReport evaluate_model(const CrossEncoderModel& model, std::span<const EvalQuery> eval_set,
                            std::size_t k = 10, std::size_t max_pool = 30,
                            const std::string& dataset_tag = "in_domain");

/// Stable fingerprint of a labeled evaluation set; used to prove that every
/// ablation row saw the same test data.
std::uint64_t eval_set_fingerprint(std::span<const EvalQuery> eval_set);

/// Labeled-pool JSONL: {query_id, query_text, pool:[{doc_id, text, relevant,
/// hardness?}]} per line.
std::vector<EvalQuery> read_eval_pools_jsonl(const std::filesystem::path& path,
                                             bool require_labels = true);
void write_eval_pools_jsonl(std::span<const EvalQuery> pools, const std::filesystem::path& path);

}  // namespace synthrank
