// Copyright (C) 2026 the synthrank authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "support/test_support.hpp"
#include "support/toy_models.hpp"
#include "synthrank/errors.hpp"
#include "synthrank/metrics.hpp"
#include "synthrank/util.hpp"

using namespace synthrank;

namespace {

/// Build a ranked list from a relevance sequence: doc i gets label rel[i]
/// and sits at rank i+1; the pool is exactly the ranked docs.
RankedList list_of(const std::vector<int>& rel) {
    RankedList list;
    list.query_id = "q";
    for (std::size_t i = 0; i < rel.size(); ++i) {
        const std::string id = "d-" + std::to_string(i);
        list.ranked.push_back(id);
        list.relevance[id] = rel[i];
    }
    return list;
}

// Independent brute-force references, written against the definitions rather
// than the implementation.
double ref_precision(const std::vector<int>& rel, std::size_t k) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < rel.size() && i < k; ++i) {
        hits += rel[i] > 0 ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(k);
}

double ref_ap(const std::vector<int>& rel, std::size_t k) {
    std::size_t total_relevant = 0;
    for (int r : rel) {
        total_relevant += r > 0 ? 1 : 0;
    }
    if (total_relevant == 0) {
        return 0.0;
    }
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < rel.size() && i < k; ++i) {
        if (rel[i] > 0) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(std::min<std::size_t>(total_relevant, k));
}

double ref_rr(const std::vector<int>& rel, std::size_t k) {
    for (std::size_t i = 0; i < rel.size() && i < k; ++i) {
        if (rel[i] > 0) {
            return 1.0 / static_cast<double>(i + 1);
        }
    }
    return 0.0;
}

double ref_ndcg(const std::vector<int>& rel, std::size_t k) {
    double dcg = 0.0;
    for (std::size_t i = 0; i < rel.size() && i < k; ++i) {
        if (rel[i] > 0) {
            dcg += 1.0 / std::log2(static_cast<double>(i + 2));
        }
    }
    std::vector<int> ideal = rel;
    std::sort(ideal.begin(), ideal.end(), std::greater<int>());
    double idcg = 0.0;
    for (std::size_t i = 0; i < ideal.size() && i < k; ++i) {
        if (ideal[i] > 0) {
            idcg += 1.0 / std::log2(static_cast<double>(i + 2));
        }
    }
    return idcg == 0.0 ? 0.0 : dcg / idcg;
}

}  // namespace

TEST_CASE("metric closed forms") {
    CHECK(precision_at_k(list_of({1, 1, 1, 1, 1}), 5) == 1.0);
    CHECK(precision_at_k(list_of({1, 0, 0, 1, 0}), 5) == doctest::Approx(0.4));
    CHECK(precision_at_k(list_of({0, 0, 0}), 7) == 0.0);

    CHECK(average_precision_at_k(list_of({1}), 10) == 1.0);
    // Relevant at ranks 1 and 3, R = 2: (1 + 2/3) / 2.
    CHECK(average_precision_at_k(list_of({1, 0, 1}), 10) ==
          doctest::Approx((1.0 + 2.0 / 3.0) / 2.0).epsilon(1e-12));
    CHECK(average_precision_at_k(list_of({0, 0}), 10) == 0.0);

    CHECK(reciprocal_rank_at_k(list_of({1, 0}), 10) == 1.0);
    CHECK(reciprocal_rank_at_k(list_of({0, 0, 0, 1}), 10) == doctest::Approx(0.25));
    std::vector<int> late(11, 0);
    late[10] = 1;  // rank 11, outside the cutoff
    CHECK(reciprocal_rank_at_k(list_of(late), 10) == 0.0);

    CHECK(ndcg_at_k(list_of({1, 1, 0}), 3) == doctest::Approx(1.0));
    const double expected = (1.0 / std::log2(3.0) + 1.0 / std::log2(4.0)) /
                            (1.0 + 1.0 / std::log2(3.0));
    CHECK(ndcg_at_k(list_of({0, 1, 1}), 3) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(ndcg_at_k(list_of({0, 1, 1}), 3) == doctest::Approx(0.6934).epsilon(1e-4));
    CHECK(ndcg_at_k(list_of({0, 0, 0}), 3) == 0.0);

    CHECK_THROWS_AS(precision_at_k(list_of({1}), 0), ArgumentError);
}

TEST_CASE("metrics equal brute-force references on random instances") {
    std::mt19937_64 rng(1212);
    for (int round = 0; round < 300; ++round) {
        const std::size_t n = 1 + util::uniform_below(rng, 30);
        std::vector<int> rel(n);
        for (auto& r : rel) {
            r = util::uniform_below(rng, 2) == 0 ? 0 : 1;
        }
        const RankedList list = list_of(rel);
        for (const std::size_t k : {std::size_t{1}, std::size_t{5}, std::size_t{10}}) {
            CHECK(std::fabs(precision_at_k(list, k) - ref_precision(rel, k)) < 1e-9);
            CHECK(std::fabs(average_precision_at_k(list, k) - ref_ap(rel, k)) < 1e-9);
            CHECK(std::fabs(reciprocal_rank_at_k(list, k) - ref_rr(rel, k)) < 1e-9);
            CHECK(std::fabs(ndcg_at_k(list, k) - ref_ndcg(rel, k)) < 1e-9);

            for (const double v :
                 {precision_at_k(list, k), average_precision_at_k(list, k),
                  reciprocal_rank_at_k(list, k), ndcg_at_k(list, k)}) {
                CHECK(v >= 0.0);
                CHECK(v <= 1.0);
            }
        }
    }
}

TEST_CASE("a ranked doc without a label is rejected") {
    RankedList list;
    list.query_id = "q";
    list.ranked = {"a"};
    CHECK_THROWS_AS(precision_at_k(list, 1), ArgumentError);
}

TEST_CASE("pool labels beyond the ranked list feed R") {
    // Pool knows 2 relevant docs but the ranking surfaces neither in top-1.
    RankedList list;
    list.query_id = "q";
    list.ranked = {"a", "b", "c"};
    list.relevance = {{"a", 0}, {"b", 1}, {"c", 1}, {"d", 1}};
    // total relevant R = 3, min(R, k) = 1 at k = 1.
    CHECK(average_precision_at_k(list, 1) == 0.0);
    CHECK(ndcg_at_k(list, 2) ==
          doctest::Approx((1.0 / std::log2(3.0)) / (1.0 + 1.0 / std::log2(3.0))).epsilon(1e-12));
}

TEST_CASE("evaluate_model ranks with deterministic tie-breaks") {
    // Zero score head: every score is 0, so ordering falls back to doc_id.
    auto encoder = std::make_shared<synthtest::FixedVectorEncoder>(std::vector<double>{1.0, 1.0});
    CrossEncoderModel model(encoder, std::vector<double>{0.0, 0.0});

    std::vector<EvalQuery> eval_set(1);
    eval_set[0].query_id = "q";
    eval_set[0].query_text = "anything";
    eval_set[0].pool = {{"c", "text c", true, 0.0},
                        {"a", "text a", false, 0.0},
                        {"b", "text b", false, 0.0}};
    const MetricReport report = evaluate_model(model, eval_set, 10, 30, "in_domain");
    REQUIRE(report.per_query.size() == 1);
    // doc_id order a, b, c puts the single relevant doc at rank 3.
    CHECK(report.per_query[0].reciprocal_rank == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(report.regime == "single_positive");
    CHECK(report.dataset_tag == "in_domain");
    CHECK(report.k == 10);
}

TEST_CASE("evaluate_model composes score and metric oracles") {
    // Encoder returns a fixed vector; scores are equal, tie-break by doc_id,
    // so expected metrics are those of the doc_id ordering.
    auto encoder = std::make_shared<synthtest::FixedVectorEncoder>(std::vector<double>{2.0});
    CrossEncoderModel model(encoder, std::vector<double>{1.5});

    std::vector<EvalQuery> eval_set(1);
    eval_set[0].query_id = "q";
    eval_set[0].query_text = "q text";
    eval_set[0].pool = {{"p1", "x", true, 0.0}, {"p0", "y", false, 0.0}, {"p2", "z", true, 0.0}};
    const MetricReport report = evaluate_model(model, eval_set, 3, 30, "in_domain");
    // Order: p0, p1, p2 -> relevance sequence 0, 1, 1.
    const std::vector<int> rel{0, 1, 1};
    CHECK(report.per_query[0].precision == doctest::Approx(ref_precision(rel, 3)));
    CHECK(report.per_query[0].average_precision == doctest::Approx(ref_ap(rel, 3)));
    CHECK(report.per_query[0].reciprocal_rank == doctest::Approx(ref_rr(rel, 3)));
    CHECK(report.per_query[0].ndcg == doctest::Approx(ref_ndcg(rel, 3)));
    CHECK(report.regime == "multi_positive");
}

TEST_CASE("macro averages equal the per-query means") {
    CrossEncoderModel model(
        std::make_shared<synthtest::FixedVectorEncoder>(std::vector<double>{1.0}),
        std::vector<double>{1.0});
    std::vector<EvalQuery> eval_set;
    for (int i = 0; i < 7; ++i) {
        EvalQuery eq;
        eq.query_id = "q" + std::to_string(i);
        eq.query_text = "t";
        eq.pool = {{"a" + std::to_string(i), "x", i % 2 == 0, 0.0},
                   {"b" + std::to_string(i), "y", true, 0.0}};
        eval_set.push_back(std::move(eq));
    }
    const MetricReport report = evaluate_model(model, eval_set, 2, 30, "in_domain");
    AggregateMetrics mean;
    for (const auto& q : report.per_query) {
        mean.precision += q.precision / 7.0;
        mean.map += q.average_precision / 7.0;
        mean.mrr += q.reciprocal_rank / 7.0;
        mean.ndcg += q.ndcg / 7.0;
    }
    CHECK(std::fabs(report.aggregate.precision - mean.precision) < 1e-12);
    CHECK(std::fabs(report.aggregate.map - mean.map) < 1e-12);
    CHECK(std::fabs(report.aggregate.mrr - mean.mrr) < 1e-12);
    CHECK(std::fabs(report.aggregate.ndcg - mean.ndcg) < 1e-12);

    CHECK_THROWS_AS(evaluate_model(model, {}, 10, 30, "in_domain"), ArgumentError);
}

TEST_CASE("oversized pools are truncated positives-first") {
    CrossEncoderModel model(
        std::make_shared<synthtest::FixedVectorEncoder>(std::vector<double>{1.0}),
        std::vector<double>{1.0});
    EvalQuery eq;
    eq.query_id = "q";
    eq.query_text = "t";
    // 2 positives and 4 negatives with distinct hardness; max_pool 4 keeps
    // the positives plus the two hardest negatives.
    eq.pool = {{"n-soft", "x", false, 0.1}, {"p-1", "x", true, 0.0},
               {"n-hard", "x", false, 0.9}, {"n-mid", "x", false, 0.5},
               {"p-0", "x", true, 0.0},     {"n-tiny", "x", false, 0.05}};
    const MetricReport report =
        evaluate_model(model, std::vector<EvalQuery>{eq}, 4, 4, "in_domain");
    // Precision@4 with 2 relevant among exactly 4 pool docs.
    CHECK(report.per_query[0].precision == doctest::Approx(0.5));
    CHECK(report.per_query[0].ndcg > 0.0);
}

TEST_CASE("metric report JSON round-trips") {
    synthtest::TempDir dir("report");
    MetricReport report;
    report.k = 10;
    report.dataset_tag = "out_domain";
    report.n_queries = 2;
    report.per_query = {{"a", 0.1, 0.2, 0.3, 0.4}, {"b", 0.5, 0.6, 0.7, 0.8}};
    report.aggregate = {0.3, 0.4, 0.5, 0.6};
    report.regime = "multi_positive";

    const auto j = metric_report_to_json(report);
    const MetricReport back = metric_report_from_json(j);
    CHECK(back.k == report.k);
    CHECK(back.dataset_tag == report.dataset_tag);
    CHECK(back.n_queries == report.n_queries);
    CHECK(back.per_query.size() == 2);
    CHECK(back.aggregate.ndcg == report.aggregate.ndcg);
    CHECK(back.regime == "multi_positive");

    write_metric_report(report, dir / "report.json");
    CHECK(std::filesystem::exists(dir / "report.json"));
}

TEST_CASE("eval pool JSONL round-trips and fingerprints are label-sensitive") {
    synthtest::TempDir dir("pools");
    auto pools = synthtest::make_out_domain_pools(5, 8);
    const auto path = dir / "pools.jsonl";
    write_eval_pools_jsonl(pools, path);
    const auto loaded = read_eval_pools_jsonl(path);
    REQUIRE(loaded.size() == pools.size());
    CHECK(eval_set_fingerprint(loaded) == eval_set_fingerprint(pools));

    auto flipped = pools;
    flipped[0].pool[0].relevant = !flipped[0].pool[0].relevant;
    CHECK(eval_set_fingerprint(flipped) != eval_set_fingerprint(pools));

    // Unlabeled pools load only when labels are not required.
    std::vector<nlohmann::json> rows;
    rows.push_back({{"query_id", "q"},
                    {"query_text", "t"},
                    {"pool", nlohmann::json::array({{{"doc_id", "d"}, {"text", "x"}}})}});
    const auto unlabeled = dir / "unlabeled.jsonl";
    jsonl::write(unlabeled, rows);
    CHECK_THROWS_AS(read_eval_pools_jsonl(unlabeled, true), IngestError);
    const auto ok = read_eval_pools_jsonl(unlabeled, false);
    REQUIRE(ok.size() == 1);
    CHECK_FALSE(ok[0].pool[0].relevant);
}
