// Copyright (C) 2026 the synthrank authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>
#include <set>

#include "support/test_support.hpp"
#include "synthrank/errors.hpp"
#include "synthrank/pipeline.hpp"
#include "synthrank/util.hpp"

using namespace synthrank;

namespace {

std::vector<TrainingTriplet> light_triplets(std::size_t n) {
    std::vector<TrainingTriplet> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        TrainingTriplet t;
        t.query.query_id = "q-" + std::to_string(i);
        t.query.seed_doc_id = "d-" + std::to_string(i);
        t.query.text = "query " + std::to_string(i);
        t.positive_doc_id = "d-" + std::to_string(i);
        t.negative_doc_ids = {"n-1", "n-2", "n-3", "n-4"};
        t.threshold_used = 0.5;
        out.push_back(std::move(t));
    }
    return out;
}

std::set<std::string> id_set(const std::vector<TrainingTriplet>& triplets) {
    std::set<std::string> ids;
    for (const auto& t : triplets) {
        ids.insert(t.query.query_id);
    }
    return ids;
}

/// One shared mock pipeline run at the desk-scale settings; computed once.
struct PipelineFixture {
    synthtest::TempDir dir{"pipeline-fixture"};
    RunConfig config;
    RunManifest manifest;

    PipelineFixture() {
        const auto corpus_path = dir / "corpus.jsonl";
        synthtest::write_corpus_file(synthtest::make_synthetic_corpus(), corpus_path);
        config = synthtest::make_mock_config(corpus_path, dir / "out");
        config.validate();
        PipelineRunner runner(config, /*resume=*/false);
        manifest = runner.run();
    }
};

const PipelineFixture& fixture() {
    static PipelineFixture f;
    return f;
}

}  // namespace

TEST_CASE("split_dataset is disjoint, exhaustive and deterministic") {
    const auto triplets = light_triplets(1000);
    auto [train, test] = split_dataset(triplets, 500, 11);
    CHECK(train.size() == 500);
    CHECK(test.size() == 500);

    auto train_ids = id_set(train);
    auto test_ids = id_set(test);
    CHECK(train_ids.size() == 500);
    CHECK(test_ids.size() == 500);
    for (const auto& id : test_ids) {
        CHECK(train_ids.count(id) == 0);
    }

    auto [train2, test2] = split_dataset(triplets, 500, 11);
    CHECK(id_set(train2) == train_ids);
    CHECK(id_set(test2) == test_ids);
    auto [train3, test3] = split_dataset(triplets, 500, 12);
    CHECK(id_set(train3) != train_ids);  // seed actually matters

    auto [all_train, empty_test] = split_dataset(triplets, 0, 5);
    CHECK(all_train.size() == 1000);
    CHECK(empty_test.empty());

    CHECK_THROWS_AS(split_dataset(triplets, 1000, 1), ArgumentError);
    CHECK_THROWS_AS(split_dataset(triplets, 1500, 1), ArgumentError);
}

TEST_CASE("nested subsets are strict supersets of one another") {
    const auto triplets = light_triplets(150);
    const std::vector<std::size_t> sizes{25, 50, 100};
    const auto subsets = make_nested_subsets(triplets, sizes, 77);
    REQUIRE(subsets.size() == 3);
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        CHECK(subsets[i].size() == sizes[i]);
    }
    // Set-inclusion oracle.
    for (std::size_t i = 1; i < subsets.size(); ++i) {
        const auto smaller = id_set(subsets[i - 1]);
        const auto larger = id_set(subsets[i]);
        for (const auto& id : smaller) {
            CHECK(larger.count(id) == 1);
        }
        CHECK(smaller.size() < larger.size());
    }

    const auto again = make_nested_subsets(triplets, sizes, 77);
    CHECK(id_set(again[2]) == id_set(subsets[2]));

    CHECK_THROWS_AS(make_nested_subsets(triplets, std::vector<std::size_t>{50, 50}, 1),
                    ArgumentError);
    CHECK_THROWS_AS(make_nested_subsets(triplets, std::vector<std::size_t>{100, 30}, 1),
                    ArgumentError);
    CHECK_THROWS_AS(make_nested_subsets(triplets, std::vector<std::size_t>{100, 200}, 1),
                    ArgumentError);
}

TEST_CASE("eval pools from triplets label by the stored threshold") {
    auto [corpus, stats] = ingest_corpus(synthtest::make_synthetic_corpus({6, 0}), 512);
    TrainingTriplet t;
    t.query.query_id = "q";
    t.query.text = "what is anything?";
    t.query.seed_doc_id = corpus.at(0).doc_id;
    t.positive_doc_id = corpus.at(0).doc_id;
    t.negative_doc_ids = {corpus.at(1).doc_id};
    t.threshold_used = 0.5;
    t.judgments = {{"q", corpus.at(0).doc_id, 0.8},
                   {"q", corpus.at(1).doc_id, 0.5},
                   {"q", corpus.at(2).doc_id, 0.49}};

    const auto pools = eval_queries_from_triplets(std::vector{t}, corpus);
    REQUIRE(pools.size() == 1);
    REQUIRE(pools[0].pool.size() == 3);
    CHECK(pools[0].pool[0].relevant);        // 0.8 >= t
    CHECK(pools[0].pool[1].relevant);        // boundary: 0.5 >= t
    CHECK_FALSE(pools[0].pool[2].relevant);  // 0.49 < t
    CHECK(pools[0].pool[2].hardness == doctest::Approx(0.49));
}

TEST_CASE("full mock pipeline produces a reconciled manifest") {
    const auto& f = fixture();
    CHECK(f.manifest.status == "ok");
    const auto& counts = f.manifest.counts;

    CHECK(counts.at("ingested").get<std::size_t>() == 200);
    CHECK(counts.at("n_seeds").get<std::size_t>() == 150);

    const auto queries = counts.at("queries_generated").get<std::size_t>();
    const auto failures = counts.at("generation_failures").get<std::size_t>();
    const auto duplicates = counts.at("duplicate_queries").get<std::size_t>();
    CHECK(queries + failures + duplicates == 150);

    const auto accepted = counts.at("accepted").get<std::size_t>();
    std::size_t rejected = 0;
    for (const auto& [reason, n] : counts.at("rejected").items()) {
        rejected += n.get<std::size_t>();
    }
    CHECK(accepted + rejected == queries);

    // Frozen fixture from the deterministic mock run: the topic-seeded
    // queries survive, every distractor seed is rejected or deduped.
    CHECK(accepted == 130);
    CHECK(counts.at("rejected").at("weak_positive").get<std::size_t>() == 11);
    CHECK(duplicates == 9);
    CHECK(accepted >= 100);

    CHECK(counts.at("train").get<std::size_t>() + counts.at("test").get<std::size_t>() ==
          accepted);
    CHECK(counts.at("test").get<std::size_t>() == 50);
}

TEST_CASE("pipeline artifacts exist and honor their formats") {
    const auto& f = fixture();
    RunPaths paths;
    paths.root = f.config.output_dir;
    for (const auto& p :
         {paths.corpus(), paths.seeds(), paths.queries(), paths.generation_failures(),
          paths.index(), paths.candidates(), paths.triplets(), paths.rejections(),
          paths.train_set(), paths.test_set(), paths.manifest(), paths.resolved_config()}) {
        CHECK(std::filesystem::exists(p));
    }
    // The index artifact announces its format version.
    const auto index_head = util::read_file(paths.index()).substr(0, 64);
    CHECK(index_head.find("SYNTHRANK-IDX-1") != std::string::npos);

    // Every candidate set respects k and the corpus bound.
    const auto sets = read_candidates_jsonl(paths.candidates());
    for (const auto& set : sets) {
        CHECK(set.entries.size() == 30);
    }

    // Triplets: positive never among negatives, negatives below threshold.
    const auto triplets = read_triplets_jsonl(paths.triplets());
    for (const auto& t : triplets) {
        std::map<std::string, double> scores;
        for (const auto& j : t.judgments) {
            scores[j.doc_id] = j.p_yes;
        }
        CHECK(t.negative_doc_ids.size() >= 4);
        for (const auto& neg : t.negative_doc_ids) {
            CHECK(neg != t.positive_doc_id);
            CHECK(scores.at(neg) < t.threshold_used);
        }
        CHECK(scores.at(t.positive_doc_id) >= 0.5);
    }
}

TEST_CASE("rerunning the pipeline reproduces artifacts byte for byte") {
    const auto& f = fixture();
    synthtest::TempDir dir2("pipeline-rerun");
    RunConfig config = f.config;
    config.output_dir = dir2 / "out";
    PipelineRunner runner(config, /*resume=*/false);
    const RunManifest manifest = runner.run();
    CHECK(manifest.status == "ok");

    RunPaths a;
    a.root = f.config.output_dir;
    RunPaths b;
    b.root = config.output_dir;
    for (const auto& name :
         {"corpus.jsonl", "seeds.jsonl", "queries.jsonl", "index.json", "candidates.jsonl",
          "triplets.jsonl", "rejections.jsonl", "train.jsonl", "test.jsonl"}) {
        CHECK(util::read_file(a.root / name) == util::read_file(b.root / name));
    }
}

TEST_CASE("resume loads cached stages without recomputation") {
    const auto& f = fixture();
    PipelineRunner runner(f.config, /*resume=*/true);
    const RunManifest manifest = runner.run();
    CHECK(manifest.status == "ok");
    for (const auto& stage : manifest.stages) {
        CHECK(stage.cached);
    }
    CHECK(manifest.counts.at("accepted").get<std::size_t>() == 130);
}

TEST_CASE("a dead backend aborts at the mine stage, keeping retrieval artifacts") {
    const auto& f = fixture();
    synthtest::TempDir dir2("pipeline-abort");
    const auto out2 = dir2 / "out";
    std::filesystem::create_directories(out2);
    RunPaths src;
    src.root = f.config.output_dir;
    // Stage artifacts up to retrieval are present; mining output is not.
    for (const auto& name :
         {"corpus.jsonl", "seeds.jsonl", "queries.jsonl", "genfailures.jsonl", "index.json",
          "candidates.jsonl"}) {
        std::filesystem::copy_file(src.root / name, out2 / name);
    }

    RunConfig config = f.config;
    config.output_dir = out2;
    config.llm.kind = "http";
    config.llm.http.base_url = "http://127.0.0.1:9";  // nothing listens here
    config.llm.http.max_retries = 0;
    config.llm.http.timeout_ms = 200;
    config.llm.http.backoff_initial_ms = 1;

    PipelineRunner runner(config, /*resume=*/true);
    CHECK_THROWS_AS(runner.run(), GatewayError);

    RunPaths paths;
    paths.root = out2;
    CHECK(std::filesystem::exists(paths.candidates()));
    CHECK_FALSE(std::filesystem::exists(paths.triplets()));

    const auto manifest = nlohmann::json::parse(util::read_file(paths.manifest()));
    CHECK(manifest.at("status") == "failed");
    CHECK(manifest.at("failed_stage") == "mine");
}

TEST_CASE("the output directory lock is exclusive") {
    synthtest::TempDir dir("lock");
    RunPaths paths;
    paths.root = dir / "out";
    DirLock lock(paths);
    CHECK_THROWS_AS(DirLock{paths}, StateError);
}

TEST_CASE("ablation has the full grid shape with constant fingerprints") {
    const auto& f = fixture();
    RunPaths paths;
    paths.root = f.config.output_dir;
    const Corpus corpus =
        ingest_corpus_jsonl(paths.corpus(), f.config.pipeline.max_tokens).first;
    const auto train_set = read_triplets_jsonl(paths.train_set());
    const auto test_set = read_triplets_jsonl(paths.test_set());
    const auto in_pools = eval_queries_from_triplets(test_set, corpus);
    const auto out_pools = synthtest::make_out_domain_pools(12, 16);

    RunConfig config = f.config;
    config.ablation.sizes = {10, 20, 30};
    config.training.epochs = 2;
    const AblationResult result = run_ablation(config, train_set, in_pools, out_pools, corpus);

    REQUIRE(result.runs.size() == 3);
    CHECK(result.epochs == 2);
    for (const auto& run : result.runs) {
        REQUIRE(run.epochs.size() == 2);
        for (const auto& row : run.epochs) {
            CHECK(row.in_domain.n_queries == in_pools.size());
            REQUIRE(row.out_domain.has_value());
            CHECK(row.out_domain->n_queries == out_pools.size());
            CHECK(row.in_domain.dataset_tag == "in_domain");
            CHECK(row.out_domain->dataset_tag == "out_domain");
        }
    }
    CHECK(result.in_fingerprint == util::to_hex(eval_set_fingerprint(in_pools)));
    CHECK(result.out_fingerprint == util::to_hex(eval_set_fingerprint(out_pools)));
    CHECK(result.base_in.n_queries == in_pools.size());
    REQUIRE(result.base_out.has_value());

    // 3 sizes x 2 domains x 4 metrics summary rows.
    CHECK(result.summary.size() == 24);

    // Round-trip through JSON.
    const AblationResult back = AblationResult::from_json(result.to_json());
    CHECK(back.runs.size() == 3);
    CHECK(back.in_fingerprint == result.in_fingerprint);
    CHECK(back.summary.size() == 24);

    // Reports.
    synthtest::TempDir report_dir("reports");
    const auto files = emit_report(result, report_dir.path(), "all");
    CHECK(files.size() == 3);

    std::ifstream per_epoch(report_dir / "per_epoch.csv");
    std::string line;
    std::size_t rows = 0;
    std::getline(per_epoch, line);
    CHECK(line == "size,epoch,domain,metric,value");
    while (std::getline(per_epoch, line)) {
        rows += line.empty() ? 0 : 1;
    }
    CHECK(rows == 3 * 2 * 2 * 4);  // sizes x epochs x domains x metrics

    std::ifstream table(report_dir / "first_epoch_table.csv");
    std::getline(table, line);
    CHECK(line == "domain,metric,base,10,20,30");
    std::size_t table_rows = 0;
    while (std::getline(table, line)) {
        table_rows += line.empty() ? 0 : 1;
    }
    CHECK(table_rows == 6);  // {map, mrr, ndcg} x {in, out}

    const auto series = nlohmann::json::parse(util::read_file(report_dir / "series.json"));
    for (const auto& metric : {"precision", "map", "mrr", "ndcg"}) {
        REQUIRE(series.contains(metric));
        for (const auto& size : {"10", "20", "30"}) {
            CHECK(series.at(metric).at("in_domain").contains(size));
            CHECK(series.at(metric).at("in_domain").at(size).size() == 2);
        }
    }

    CHECK_THROWS_AS(emit_report(result, report_dir.path(), "yaml"), ArgumentError);
}
