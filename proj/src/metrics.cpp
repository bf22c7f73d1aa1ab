// Copyright (C) 2026 the synthrank authors
// SPDX-License-Identifier: Apache-2.0

#include "synthrank/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "synthrank/errors.hpp"
#include "synthrank/jsonl.hpp"
#include "synthrank/util.hpp"

namespace synthrank {

namespace {

int label_of(const RankedList& list, const std::string& doc_id) {
    auto it = list.relevance.find(doc_id);
    if (it == list.relevance.end()) {
        throw ArgumentError("ranked doc without relevance label: " + doc_id);
    }
    return it->second;
}

std::size_t pool_relevant_count(const RankedList& list) {
    std::size_t r = 0;
    for (const auto& [doc_id, rel] : list.relevance) {
        r += rel > 0 ? 1 : 0;
    }
    return r;
}

void require_k(std::size_t k) {
    if (k == 0) {
        throw ArgumentError("metric cutoff k must be >= 1");
    }
}

}  // namespace

double precision_at_k(const RankedList& list, std::size_t k) {
    require_k(k);
    const std::size_t depth = std::min(k, list.ranked.size());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < depth; ++i) {
        hits += label_of(list, list.ranked[i]) > 0 ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(k);
}

double average_precision_at_k(const RankedList& list, std::size_t k) {
    require_k(k);
    const std::size_t total_relevant = pool_relevant_count(list);
    if (total_relevant == 0) {
        return 0.0;
    }
    const std::size_t depth = std::min(k, list.ranked.size());
    std::size_t hits = 0;
    double sum = 0.0;
    for (std::size_t i = 0; i < depth; ++i) {
        if (label_of(list, list.ranked[i]) > 0) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(std::min(total_relevant, k));
}

double reciprocal_rank_at_k(const RankedList& list, std::size_t k) {
    require_k(k);
    const std::size_t depth = std::min(k, list.ranked.size());
    for (std::size_t i = 0; i < depth; ++i) {
        if (label_of(list, list.ranked[i]) > 0) {
            return 1.0 / static_cast<double>(i + 1);
        }
    }
    return 0.0;
}

double ndcg_at_k(const RankedList& list, std::size_t k) {
    require_k(k);
    const std::size_t total_relevant = pool_relevant_count(list);
    if (total_relevant == 0) {
        return 0.0;
    }
    const std::size_t depth = std::min(k, list.ranked.size());
    double dcg = 0.0;
    for (std::size_t i = 0; i < depth; ++i) {
        if (label_of(list, list.ranked[i]) > 0) {
            dcg += 1.0 / std::log2(static_cast<double>(i + 2));
        }
    }
    double idcg = 0.0;
    for (std::size_t i = 0; i < std::min(total_relevant, k); ++i) {
        idcg += 1.0 / std::log2(static_cast<double>(i + 2));
    }
    return dcg / idcg;
}

nlohmann::json metric_report_to_json(const MetricReport& report) {
    nlohmann::json per_query = nlohmann::json::array();
    for (const auto& q : report.per_query) {
        per_query.push_back({{"query_id", q.query_id},
                             {"precision", q.precision},
                             {"average_precision", q.average_precision},
                             {"reciprocal_rank", q.reciprocal_rank},
                             {"ndcg", q.ndcg}});
    }
    return {{"k", report.k},
            {"dataset_tag", report.dataset_tag},
            {"n_queries", report.n_queries},
            {"per_query", std::move(per_query)},
            {"aggregate",
             {{"precision", report.aggregate.precision},
              {"map", report.aggregate.map},
              {"mrr", report.aggregate.mrr},
              {"ndcg", report.aggregate.ndcg}}},
            {"regime", report.regime}};
}

MetricReport metric_report_from_json(const nlohmann::json& j) {
    MetricReport report;
    report.k = j.at("k").get<std::size_t>();
    report.dataset_tag = j.at("dataset_tag").get<std::string>();
    report.n_queries = j.at("n_queries").get<std::size_t>();
    for (const auto& q : j.at("per_query")) {
        report.per_query.push_back({q.at("query_id").get<std::string>(),
                                    q.at("precision").get<double>(),
                                    q.at("average_precision").get<double>(),
                                    q.at("reciprocal_rank").get<double>(),
                                    q.at("ndcg").get<double>()});
    }
    const auto& agg = j.at("aggregate");
    report.aggregate = {agg.at("precision").get<double>(), agg.at("map").get<double>(),
                        agg.at("mrr").get<double>(), agg.at("ndcg").get<double>()};
    report.regime = j.value("regime", std::string{});
    return report;
}

void write_metric_report(const MetricReport& report, const std::filesystem::path& path) {
    util::write_file_atomic(path, metric_report_to_json(report).dump(2) + "\n");
}

MetricReport evaluate_model(const CrossEncoderModel& model, std::span<const EvalQuery> eval_set,
                            std::size_t k, std::size_t max_pool, const std::string& dataset_tag) {
    if (eval_set.empty()) {
        throw ArgumentError("evaluate_model: eval_set must be non-empty");
    }
    require_k(k);
    MetricReport report;
    report.k = k;
    report.dataset_tag = dataset_tag;
    bool multi_positive = false;

    for (const auto& eq : eval_set) {
        if (eq.pool.empty()) {
            throw ArgumentError("evaluate_model: empty pool for query " + eq.query_id);
        }
        // Truncate oversized pools before scoring: positives first, then the
        // hardest negatives, deterministically.
        std::vector<const EvalPoolDoc*> pool;
        pool.reserve(eq.pool.size());
        for (const auto& d : eq.pool) {
            pool.push_back(&d);
        }
        if (pool.size() > max_pool) {
            std::sort(pool.begin(), pool.end(), [](const EvalPoolDoc* a, const EvalPoolDoc* b) {
                if (a->relevant != b->relevant) {
                    return a->relevant;
                }
                if (a->hardness != b->hardness) {
                    return a->hardness > b->hardness;
                }
                return a->doc_id < b->doc_id;
            });
            pool.resize(max_pool);
        }

        std::vector<std::pair<double, const EvalPoolDoc*>> scored;
        scored.reserve(pool.size());
        for (const EvalPoolDoc* d : pool) {
            scored.emplace_back(model.score_pair(eq.query_text, d->text), d);
        }
        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) {
                return a.first > b.first;
            }
            return a.second->doc_id < b.second->doc_id;
        });

        RankedList list;
        list.query_id = eq.query_id;
        std::size_t relevant_in_pool = 0;
        for (const auto& [score, d] : scored) {
            list.ranked.push_back(d->doc_id);
            list.relevance[d->doc_id] = d->relevant ? 1 : 0;
            relevant_in_pool += d->relevant ? 1 : 0;
        }
        multi_positive = multi_positive || relevant_in_pool > 1;

        QueryMetrics qm;
        qm.query_id = eq.query_id;
        qm.precision = precision_at_k(list, k);
        qm.average_precision = average_precision_at_k(list, k);
        qm.reciprocal_rank = reciprocal_rank_at_k(list, k);
        qm.ndcg = ndcg_at_k(list, k);
        report.per_query.push_back(std::move(qm));
    }

    report.n_queries = report.per_query.size();
    const double n = static_cast<double>(report.n_queries);
    for (const auto& q : report.per_query) {
        report.aggregate.precision += q.precision / n;
        report.aggregate.map += q.average_precision / n;
        report.aggregate.mrr += q.reciprocal_rank / n;
        report.aggregate.ndcg += q.ndcg / n;
    }
    report.regime = multi_positive ? "multi_positive" : "single_positive";
    return report;
}

std::uint64_t eval_set_fingerprint(std::span<const EvalQuery> eval_set) {
    std::string canonical;
    for (const auto& eq : eval_set) {
        canonical += eq.query_id;
        canonical += '\x1f';
        canonical += eq.query_text;
        canonical += '\x1e';
        for (const auto& d : eq.pool) {
            canonical += d.doc_id;
            canonical += '\x1f';
            canonical += d.relevant ? '1' : '0';
            canonical += '\x1f';
            canonical += d.text;
            canonical += '\x1e';
        }
        canonical += '\x1d';
    }
    return util::fnv1a64(canonical);
}

std::vector<EvalQuery> read_eval_pools_jsonl(const std::filesystem::path& path,
                                             bool require_labels) {
    std::vector<EvalQuery> pools;
    jsonl::for_each(path, [&](const nlohmann::json& row, std::size_t line_no) {
        EvalQuery eq;
        try {
            eq.query_id = row.at("query_id").get<std::string>();
            eq.query_text = row.at("query_text").get<std::string>();
            for (const auto& d : row.at("pool")) {
                EvalPoolDoc doc;
                doc.doc_id = d.at("doc_id").get<std::string>();
                doc.text = d.at("text").get<std::string>();
                if (d.contains("relevant")) {
                    doc.relevant = d.at("relevant").get<bool>();
                } else if (require_labels) {
                    throw IngestError("pool doc missing 'relevant' label");
                }
                doc.hardness = d.value("hardness", 0.0);
                eq.pool.push_back(std::move(doc));
            }
        } catch (const nlohmann::json::exception& e) {
            throw IngestError("malformed eval pool at " + path.string() + ":" +
                              std::to_string(line_no) + ": " + e.what());
        }
        pools.push_back(std::move(eq));
    });
    return pools;
}

void write_eval_pools_jsonl(std::span<const EvalQuery> pools,
                            const std::filesystem::path& path) {
    std::vector<nlohmann::json> rows;
    rows.reserve(pools.size());
    for (const auto& eq : pools) {
        nlohmann::json pool = nlohmann::json::array();
        for (const auto& d : eq.pool) {
            pool.push_back({{"doc_id", d.doc_id},
                            {"text", d.text},
                            {"relevant", d.relevant},
                            {"hardness", d.hardness}});
        }
        rows.push_back({{"query_id", eq.query_id},
                        {"query_text", eq.query_text},
                        {"pool", std::move(pool)}});
    }
    jsonl::write(path, rows);
}

}  // namespace synthrank
