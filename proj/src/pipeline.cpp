// Copyright (C) 2026 the synthrank authors
// SPDX-License-Identifier: Apache-2.0

#include "synthrank/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <unordered_map>

#include "synthrank/errors.hpp"
#include "synthrank/jsonl.hpp"
#include "synthrank/query_gen.hpp"
#include "synthrank/util.hpp"

namespace synthrank {

// ---------------------------------------------------------------------------
// Dataset splitting
// ---------------------------------------------------------------------------

namespace {

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t rng_seed) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order[i] = i;
    }
    std::mt19937_64 rng(util::splitmix64(rng_seed));
    for (std::size_t i = n; i > 1; --i) {
        std::swap(order[i - 1], order[util::uniform_below(rng, i)]);
    }
    return order;
}

std::vector<TrainingTriplet> gather_sorted(std::span<const TrainingTriplet> triplets,
                                           std::vector<std::size_t> indices) {
    std::sort(indices.begin(), indices.end());
    std::vector<TrainingTriplet> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) {
        out.push_back(triplets[i]);
    }
    return out;
}

}  // namespace

std::pair<std::vector<TrainingTriplet>, std::vector<TrainingTriplet>> split_dataset(
    std::span<const TrainingTriplet> triplets, std::size_t test_size, std::uint64_t rng_seed) {
    if (test_size >= triplets.size()) {
        throw ArgumentError("split_dataset: test_size " + std::to_string(test_size) +
                            " must be smaller than the dataset (" +
                            std::to_string(triplets.size()) + ")");
    }
    if (test_size == 0) {
        std::cerr << "warning: split_dataset called with test_size=0; test set will be empty\n";
    }
    const auto order = shuffled_indices(triplets.size(), rng_seed);
    std::vector<std::size_t> test_idx(order.begin(),
                                      order.begin() + static_cast<std::ptrdiff_t>(test_size));
    std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(test_size),
                                       order.end());
    return {gather_sorted(triplets, std::move(train_idx)),
            gather_sorted(triplets, std::move(test_idx))};
}

std::vector<std::vector<TrainingTriplet>> make_nested_subsets(
    std::span<const TrainingTriplet> train, std::span<const std::size_t> sizes,
    std::uint64_t rng_seed) {
    if (sizes.empty()) {
        throw ArgumentError("make_nested_subsets: sizes must be non-empty");
    }
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (sizes[i] == 0 || (i > 0 && sizes[i] <= sizes[i - 1])) {
            throw ArgumentError("make_nested_subsets: sizes must be positive and strictly "
                                "increasing");
        }
    }
    if (sizes.back() > train.size()) {
        throw ArgumentError("make_nested_subsets: largest size " + std::to_string(sizes.back()) +
                            " exceeds train set (" + std::to_string(train.size()) + ")");
    }
    // One permutation; every subset is a prefix, so inclusion is strict by
    // construction.
    const auto order = shuffled_indices(train.size(), rng_seed);
    std::vector<std::vector<TrainingTriplet>> subsets;
    subsets.reserve(sizes.size());
    for (std::size_t size : sizes) {
        subsets.push_back(gather_sorted(
            train, std::vector<std::size_t>(order.begin(),
                                            order.begin() + static_cast<std::ptrdiff_t>(size))));
    }
    return subsets;
}

// ---------------------------------------------------------------------------
// Evaluation pools
// ---------------------------------------------------------------------------

std::vector<EvalQuery> eval_queries_from_triplets(std::span<const TrainingTriplet> triplets,
                                                  const Corpus& corpus) {
    std::vector<EvalQuery> pools;
    pools.reserve(triplets.size());
    for (const auto& t : triplets) {
        EvalQuery eq;
        eq.query_id = t.query.query_id;
        eq.query_text = t.query.text;
        eq.pool.reserve(t.judgments.size());
        for (const auto& j : t.judgments) {
            const Document* doc = corpus.find(j.doc_id);
            if (doc == nullptr) {
                throw StateError("eval pool doc " + j.doc_id + " not found in corpus");
            }
            eq.pool.push_back({j.doc_id, doc->text, j.p_yes >= t.threshold_used, j.p_yes});
        }
        pools.push_back(std::move(eq));
    }
    return pools;
}

void rescore_eval_pools(LlmBackend& backend, const PromptTemplate& classification_template,
                        std::vector<EvalQuery>& pools, double t, const RelevanceLabels& labels) {
    for (auto& eq : pools) {
        SyntheticQuery query;
        query.query_id = eq.query_id;
        query.text = eq.query_text;
        for (auto& d : eq.pool) {
            Document doc{d.doc_id, d.text, 0, {}};
            const double p = relevance_score(backend, classification_template, query, doc, labels);
            d.relevant = p >= t;
            d.hardness = p;
        }
    }
}

// ---------------------------------------------------------------------------
// Run directory
// ---------------------------------------------------------------------------

DirLock::DirLock(const RunPaths& paths) : lock_path_(paths.lock()) {
    std::filesystem::create_directories(paths.root);
    const int fd = ::open(lock_path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
        throw StateError("output directory is locked by another run: " + lock_path_.string() +
                         " (remove the lock file if stale)");
    }
    const std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] auto written = ::write(fd, pid.data(), pid.size());
    ::close(fd);
}

DirLock::~DirLock() {
    std::error_code ec;
    std::filesystem::remove(lock_path_, ec);
}

nlohmann::json RunManifest::to_json() const {
    nlohmann::json stage_rows = nlohmann::json::array();
    for (const auto& s : stages) {
        stage_rows.push_back(
            {{"name", s.name}, {"duration_ms", s.duration_ms}, {"cached", s.cached}});
    }
    return {{"config_fingerprint", config_fingerprint},
            {"status", status},
            {"failed_stage", failed_stage},
            {"stages", std::move(stage_rows)},
            {"counts", counts}};
}

void RunManifest::save(const std::filesystem::path& path) const {
    util::write_file_atomic(path, to_json().dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Candidate persistence
// ---------------------------------------------------------------------------

void write_candidates_jsonl(std::span<const CandidateSet> sets,
                            const std::filesystem::path& path) {
    std::vector<nlohmann::json> rows;
    rows.reserve(sets.size());
    for (const auto& set : sets) {
        nlohmann::json entries = nlohmann::json::array();
        for (const auto& e : set.entries) {
            entries.push_back({{"doc_id", e.doc_id}, {"similarity", e.similarity}});
        }
        rows.push_back({{"query_id", set.query_id}, {"k", set.k}, {"entries", std::move(entries)}});
    }
    jsonl::write(path, rows);
}

std::vector<CandidateSet> read_candidates_jsonl(const std::filesystem::path& path) {
    std::vector<CandidateSet> sets;
    jsonl::for_each(path, [&](const nlohmann::json& row, std::size_t) {
        CandidateSet set;
        set.query_id = row.at("query_id").get<std::string>();
        set.k = row.at("k").get<std::size_t>();
        for (const auto& e : row.at("entries")) {
            set.entries.push_back(
                {e.at("doc_id").get<std::string>(), e.at("similarity").get<double>()});
        }
        sets.push_back(std::move(set));
    });
    return sets;
}

// ---------------------------------------------------------------------------
// PipelineRunner
// ---------------------------------------------------------------------------

PipelineRunner::PipelineRunner(RunConfig config, bool resume)
    : config_(std::move(config)), resume_(resume) {
    paths_.root = config_.output_dir;
    std::filesystem::create_directories(paths_.root);
}

bool PipelineRunner::use_cached(const std::vector<std::filesystem::path>& outputs) const {
    if (!resume_) {
        return false;
    }
    for (const auto& p : outputs) {
        if (!std::filesystem::exists(p)) {
            return false;
        }
    }
    return true;
}

Corpus PipelineRunner::load_corpus_artifact() const {
    if (!std::filesystem::exists(paths_.corpus())) {
        throw StateError("corpus artifact missing; run the ingest stage first: " +
                         paths_.corpus().string());
    }
    auto [corpus, stats] = ingest_corpus_jsonl(paths_.corpus(), config_.pipeline.max_tokens,
                                               config_.pipeline.tokenizer_spec);
    (void)stats;
    return std::move(corpus);
}

nlohmann::json PipelineRunner::stage_ingest() {
    if (use_cached({paths_.corpus()})) {
        return {{"ingested", jsonl::read(paths_.corpus()).size()}};
    }
    auto [corpus, stats] = ingest_corpus_jsonl(config_.corpus_path, config_.pipeline.max_tokens,
                                               config_.pipeline.tokenizer_spec);
    write_corpus_jsonl(corpus, paths_.corpus());
    return {{"ingested", corpus.size()},
            {"skipped_overlong", stats.skipped_overlong},
            {"skipped_empty", stats.skipped_empty}};
}

nlohmann::json PipelineRunner::stage_seeds() {
    if (use_cached({paths_.seeds()})) {
        return {{"n_seeds", jsonl::read(paths_.seeds()).size()}};
    }
    const Corpus corpus = load_corpus_artifact();
    const auto seeds =
        sample_seed_documents(corpus, config_.pipeline.n_seeds, config_.stage_seed("seed-sample"));
    std::vector<nlohmann::json> rows;
    rows.reserve(seeds.size());
    for (const auto& doc : seeds) {
        rows.push_back({{"doc_id", doc.doc_id}});
    }
    jsonl::write(paths_.seeds(), rows);
    return {{"n_seeds", seeds.size()}};
}

nlohmann::json PipelineRunner::stage_genqueries() {
    if (use_cached({paths_.queries(), paths_.generation_failures()})) {
        nlohmann::json counts{{"queries_generated", jsonl::read(paths_.queries()).size()}};
        std::size_t failures = 0, duplicates = 0;
        jsonl::for_each(paths_.generation_failures(), [&](const nlohmann::json& row, std::size_t) {
            if (row.value("reason", std::string{}) == "duplicate_query") {
                ++duplicates;
            } else {
                ++failures;
            }
        });
        counts["generation_failures"] = failures;
        counts["duplicate_queries"] = duplicates;
        return counts;
    }
    const Corpus corpus = load_corpus_artifact();
    std::vector<Document> seeds;
    jsonl::for_each(paths_.seeds(), [&](const nlohmann::json& row, std::size_t) {
        const std::string doc_id = row.at("doc_id").get<std::string>();
        const Document* doc = corpus.find(doc_id);
        if (doc == nullptr) {
            throw StateError("seed doc " + doc_id + " not found in corpus artifact");
        }
        seeds.push_back(*doc);
    });

    auto backend = config_.make_llm_backend();
    QueryGenParams params;
    params.decode.max_tokens = config_.pipeline.max_query_tokens;
    params.decode.temperature = 0.0;
    params.decode.rng_seed = config_.stage_seed("decode");
    params.max_query_tokens = config_.pipeline.max_query_tokens;
    params.tokenizer_spec = config_.pipeline.tokenizer_spec;

    const QueryBatchResult result = generate_query_batch(*backend, config_.generation_template(),
                                                         seeds, params, config_.pipeline.dedupe);
    write_queries_jsonl(result.queries, paths_.queries());
    std::vector<nlohmann::json> failure_rows;
    for (const auto& f : result.failures) {
        failure_rows.push_back({{"seed_doc_id", f.seed_doc_id}, {"reason", f.reason}});
    }
    for (const auto& d : result.duplicates) {
        failure_rows.push_back({{"seed_doc_id", d.seed_doc_id}, {"reason", "duplicate_query"}});
    }
    jsonl::write(paths_.generation_failures(), failure_rows);
    return {{"queries_generated", result.queries.size()},
            {"generation_failures", result.failures.size()},
            {"duplicate_queries", result.duplicates.size()}};
}

nlohmann::json PipelineRunner::stage_index() {
    if (use_cached({paths_.index()})) {
        const DenseIndex index = DenseIndex::load(paths_.index());
        return {{"index_size", index.size()}, {"index_dim", index.dim()}};
    }
    const Corpus corpus = load_corpus_artifact();
    auto backend = config_.make_embedding_backend();
    const DenseIndex index = DenseIndex::build(*backend, corpus);
    index.save(paths_.index());
    return {{"index_size", index.size()}, {"index_dim", index.dim()}};
}

nlohmann::json PipelineRunner::stage_retrieve() {
    if (use_cached({paths_.candidates()})) {
        return {{"candidate_sets", jsonl::read(paths_.candidates()).size()}};
    }
    const DenseIndex index = DenseIndex::load(paths_.index());
    const auto queries = read_queries_jsonl(paths_.queries());
    auto backend = config_.make_embedding_backend();
    std::vector<CandidateSet> sets;
    sets.reserve(queries.size());
    for (const auto& query : queries) {
        sets.push_back(index.retrieve_top_k(*backend, query, config_.pipeline.k_candidates));
    }
    write_candidates_jsonl(sets, paths_.candidates());
    return {{"candidate_sets", sets.size()}, {"k_candidates", config_.pipeline.k_candidates}};
}

nlohmann::json PipelineRunner::stage_mine() {
    if (use_cached({paths_.triplets(), paths_.rejections()})) {
        nlohmann::json counts{{"accepted", jsonl::read(paths_.triplets()).size()}};
        nlohmann::json by_reason = nlohmann::json::object();
        jsonl::for_each(paths_.rejections(), [&](const nlohmann::json& row, std::size_t) {
            const std::string reason = row.value("reason", std::string{"unknown"});
            by_reason[reason] = by_reason.value(reason, 0) + 1;
        });
        counts["rejected"] = by_reason;
        return counts;
    }
    const Corpus corpus = load_corpus_artifact();
    const auto queries = read_queries_jsonl(paths_.queries());
    const auto candidate_sets = read_candidates_jsonl(paths_.candidates());
    std::unordered_map<std::string, const CandidateSet*> by_query;
    for (const auto& set : candidate_sets) {
        by_query[set.query_id] = &set;
    }

    auto backend = config_.make_llm_backend();
    const PromptTemplate tmpl = config_.classification_template();
    AssemblyPolicy policy{config_.pipeline.t, config_.pipeline.min_negatives,
                          config_.pipeline.min_positive_score};

    std::vector<TrainingTriplet> triplets;
    std::vector<TripletRejection> rejections;
    for (const auto& query : queries) {
        auto it = by_query.find(query.query_id);
        if (it == by_query.end()) {
            throw StateError("no candidate set for query " + query.query_id +
                             "; run the retrieve stage first");
        }
        auto judgments =
            score_candidates(*backend, tmpl, query, *it->second, corpus, config_.pipeline.labels);
        auto outcome = assemble_triplet(query, std::move(judgments), policy);
        if (std::holds_alternative<TrainingTriplet>(outcome)) {
            triplets.push_back(std::get<TrainingTriplet>(std::move(outcome)));
        } else {
            rejections.push_back(std::get<TripletRejection>(std::move(outcome)));
        }
    }
    write_triplets_jsonl(triplets, paths_.triplets());
    write_rejections_jsonl(rejections, paths_.rejections());

    nlohmann::json by_reason = nlohmann::json::object();
    for (const auto& r : rejections) {
        by_reason[r.reason] = by_reason.value(r.reason, 0) + 1;
    }
    return {{"accepted", triplets.size()}, {"rejected", by_reason}};
}

nlohmann::json PipelineRunner::stage_split() {
    if (use_cached({paths_.train_set(), paths_.test_set()})) {
        return {{"train", jsonl::read(paths_.train_set()).size()},
                {"test", jsonl::read(paths_.test_set()).size()}};
    }
    const auto triplets = read_triplets_jsonl(paths_.triplets());
    auto [train, test] =
        split_dataset(triplets, config_.eval.test_size, config_.stage_seed("split"));
    write_triplets_jsonl(train, paths_.train_set());
    write_triplets_jsonl(test, paths_.test_set());
    return {{"train", train.size()}, {"test", test.size()}};
}

RunManifest PipelineRunner::run() {
    DirLock lock(paths_);
    util::write_file_atomic(paths_.resolved_config(), config_.to_json().dump(2) + "\n");

    RunManifest manifest;
    manifest.config_fingerprint = config_.fingerprint();

    using StageFn = nlohmann::json (PipelineRunner::*)();
    struct Stage {
        const char* name;
        StageFn fn;
        std::vector<std::filesystem::path> outputs;
    };
    const std::vector<Stage> stages = {
        {kStageIngest, &PipelineRunner::stage_ingest, {paths_.corpus()}},
        {kStageSeeds, &PipelineRunner::stage_seeds, {paths_.seeds()}},
        {kStageGenQueries,
         &PipelineRunner::stage_genqueries,
         {paths_.queries(), paths_.generation_failures()}},
        {kStageIndex, &PipelineRunner::stage_index, {paths_.index()}},
        {kStageRetrieve, &PipelineRunner::stage_retrieve, {paths_.candidates()}},
        {kStageMine, &PipelineRunner::stage_mine, {paths_.triplets(), paths_.rejections()}},
        {kStageSplit, &PipelineRunner::stage_split, {paths_.train_set(), paths_.test_set()}},
    };

    for (const auto& stage : stages) {
        StageInfo info;
        info.name = stage.name;
        info.cached = use_cached(stage.outputs);
        const auto start = std::chrono::steady_clock::now();
        try {
            nlohmann::json counts = (this->*stage.fn)();
            info.duration_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                    .count();
            manifest.counts.update(counts);
            manifest.stages.push_back(std::move(info));
        } catch (const std::exception& e) {
            manifest.status = "failed";
            manifest.failed_stage = stage.name;
            manifest.save(paths_.manifest());
            std::cerr << "stage '" << stage.name << "' failed: " << e.what() << "\n";
            throw;
        }
    }
    manifest.save(paths_.manifest());
    return manifest;
}

// ---------------------------------------------------------------------------
// Ablation
// ---------------------------------------------------------------------------

namespace {

double metric_value(const MetricReport& report, const std::string& metric) {
    if (metric == "precision") {
        return report.aggregate.precision;
    }
    if (metric == "map") {
        return report.aggregate.map;
    }
    if (metric == "mrr") {
        return report.aggregate.mrr;
    }
    if (metric == "ndcg") {
        return report.aggregate.ndcg;
    }
    throw ArgumentError("unknown metric: " + metric);
}

const std::vector<std::string>& all_metrics() {
    static const std::vector<std::string> metrics = {"precision", "map", "mrr", "ndcg"};
    return metrics;
}

}  // namespace

nlohmann::json AblationResult::to_json() const {
    nlohmann::json run_rows = nlohmann::json::array();
    for (const auto& run : runs) {
        nlohmann::json epoch_rows = nlohmann::json::array();
        for (const auto& row : run.epochs) {
            nlohmann::json r{{"epoch", row.epoch},
                             {"mean_loss", row.mean_loss},
                             {"in_domain", metric_report_to_json(row.in_domain)}};
            if (row.out_domain) {
                r["out_domain"] = metric_report_to_json(*row.out_domain);
            }
            epoch_rows.push_back(std::move(r));
        }
        run_rows.push_back({{"size", run.size}, {"epochs", std::move(epoch_rows)}});
    }
    nlohmann::json summary_rows = nlohmann::json::array();
    for (const auto& s : summary) {
        summary_rows.push_back({{"size", s.size},
                                {"domain", s.domain},
                                {"metric", s.metric},
                                {"mean_improvement", s.mean_improvement},
                                {"std_improvement", s.std_improvement}});
    }
    nlohmann::json j{{"sizes", sizes},
                     {"epochs", epochs},
                     {"k", k},
                     {"base_in", metric_report_to_json(base_in)},
                     {"runs", std::move(run_rows)},
                     {"summary", std::move(summary_rows)},
                     {"fingerprints",
                      {{"in_domain", in_fingerprint}, {"out_domain", out_fingerprint}}}};
    if (base_out) {
        j["base_out"] = metric_report_to_json(*base_out);
    }
    return j;
}

AblationResult AblationResult::from_json(const nlohmann::json& j) {
    AblationResult result;
    result.sizes = j.at("sizes").get<std::vector<std::size_t>>();
    result.epochs = j.at("epochs").get<std::size_t>();
    result.k = j.at("k").get<std::size_t>();
    result.base_in = metric_report_from_json(j.at("base_in"));
    if (j.contains("base_out")) {
        result.base_out = metric_report_from_json(j.at("base_out"));
    }
    for (const auto& run_row : j.at("runs")) {
        AblationRun run;
        run.size = run_row.at("size").get<std::size_t>();
        for (const auto& r : run_row.at("epochs")) {
            AblationEpochRow row;
            row.epoch = r.at("epoch").get<std::size_t>();
            row.mean_loss = r.at("mean_loss").get<double>();
            row.in_domain = metric_report_from_json(r.at("in_domain"));
            if (r.contains("out_domain")) {
                row.out_domain = metric_report_from_json(r.at("out_domain"));
            }
            run.epochs.push_back(std::move(row));
        }
        result.runs.push_back(std::move(run));
    }
    for (const auto& s : j.at("summary")) {
        result.summary.push_back({s.at("size").get<std::size_t>(),
                                  s.at("domain").get<std::string>(),
                                  s.at("metric").get<std::string>(),
                                  s.at("mean_improvement").get<double>(),
                                  s.at("std_improvement").get<double>()});
    }
    result.in_fingerprint = j.at("fingerprints").at("in_domain").get<std::string>();
    result.out_fingerprint = j.at("fingerprints").at("out_domain").get<std::string>();
    return result;
}

AblationResult run_ablation(const RunConfig& config, std::span<const TrainingTriplet> train_set,
                            std::span<const EvalQuery> in_domain_test,
                            std::span<const EvalQuery> out_domain_test, const Corpus& corpus) {
    if (config.ablation.sizes.empty()) {
        throw ArgumentError("run_ablation: no ablation sizes configured");
    }
    if (in_domain_test.empty()) {
        throw ArgumentError("run_ablation: in-domain test set is empty");
    }
    const bool has_out = !out_domain_test.empty();

    AblationResult result;
    result.sizes = config.ablation.sizes;
    result.epochs = config.training.epochs;
    result.k = config.eval.k;
    result.in_fingerprint = util::to_hex(eval_set_fingerprint(in_domain_test));
    result.out_fingerprint = has_out ? util::to_hex(eval_set_fingerprint(out_domain_test)) : "";

    const auto fresh_model = [&]() {
        return CrossEncoderModel(config.make_sequence_encoder(),
                                 config.stage_seed("head-init"));
    };
    const auto evaluate = [&](const CrossEncoderModel& model, std::span<const EvalQuery> set,
                              const char* tag) {
        return evaluate_model(model, set, config.eval.k, config.eval.max_pool, tag);
    };

    {
        const CrossEncoderModel base = fresh_model();
        result.base_in = evaluate(base, in_domain_test, "in_domain");
        if (has_out) {
            result.base_out = evaluate(base, out_domain_test, "out_domain");
        }
    }

    const auto subsets =
        make_nested_subsets(train_set, config.ablation.sizes, config.stage_seed("subsets"));

    for (std::size_t si = 0; si < subsets.size(); ++si) {
        CrossEncoderModel model = fresh_model();
        TrainConfig tc;
        tc.epochs = config.training.epochs;
        tc.batch_size = config.training.batch_size;
        tc.grad_accum_steps = config.training.grad_accum_steps;
        tc.m = config.pipeline.m;
        tc.learning_rate = config.training.learning_rate;
        tc.rng_seed = config.stage_seed("train");
        tc.eval_hook = [&](std::size_t, const CrossEncoderModel& snapshot) {
            std::vector<MetricReport> reports;
            reports.push_back(evaluate(snapshot, in_domain_test, "in_domain"));
            if (has_out) {
                reports.push_back(evaluate(snapshot, out_domain_test, "out_domain"));
            }
            return reports;
        };
        const TrainingHistory history = train(model, subsets[si], corpus, tc);

        AblationRun run;
        run.size = config.ablation.sizes[si];
        for (const auto& record : history.epochs) {
            AblationEpochRow row;
            row.epoch = record.epoch;
            row.mean_loss = record.mean_loss;
            row.in_domain = record.eval_reports.at(0);
            if (has_out) {
                row.out_domain = record.eval_reports.at(1);
            }
            run.epochs.push_back(std::move(row));
        }
        result.runs.push_back(std::move(run));
    }

    // Before-vs-after summary: per-epoch improvement over the untrained
    // model, averaged across epochs, with population standard deviation.
    for (const auto& run : result.runs) {
        for (const std::string domain : has_out
                 ? std::vector<std::string>{"in_domain", "out_domain"}
                 : std::vector<std::string>{"in_domain"}) {
            for (const auto& metric : all_metrics()) {
                const double base = metric_value(
                    domain == "in_domain" ? result.base_in : *result.base_out, metric);
                std::vector<double> improvements;
                improvements.reserve(run.epochs.size());
                for (const auto& row : run.epochs) {
                    const MetricReport& report =
                        domain == "in_domain" ? row.in_domain : *row.out_domain;
                    improvements.push_back(metric_value(report, metric) - base);
                }
                double mean = 0.0;
                for (double x : improvements) {
                    mean += x / static_cast<double>(improvements.size());
                }
                double var = 0.0;
                for (double x : improvements) {
                    var += (x - mean) * (x - mean) / static_cast<double>(improvements.size());
                }
                result.summary.push_back({run.size, domain, metric, mean, std::sqrt(var)});
            }
        }
    }
    return result;
}

std::vector<std::filesystem::path> emit_report(const AblationResult& result,
                                               const std::filesystem::path& out_dir,
                                               const std::string& format) {
    if (result.runs.empty()) {
        throw ArgumentError("emit_report: ablation result is empty");
    }
    if (format != "all" && format != "csv" && format != "json") {
        throw ArgumentError("emit_report: unknown format '" + format +
                            "' (expected all, csv or json)");
    }
    std::filesystem::create_directories(out_dir);
    std::vector<std::filesystem::path> written;
    const bool has_out = result.base_out.has_value();

    const auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.10g", v);
        return std::string(buf);
    };

    if (format == "all" || format == "csv") {
        // (a) Long-format per-epoch series.
        std::string csv = "size,epoch,domain,metric,value\n";
        for (const auto& run : result.runs) {
            for (const auto& row : run.epochs) {
                for (const std::string domain : has_out
                         ? std::vector<std::string>{"in_domain", "out_domain"}
                         : std::vector<std::string>{"in_domain"}) {
                    const MetricReport& report =
                        domain == "in_domain" ? row.in_domain : *row.out_domain;
                    for (const auto& metric : all_metrics()) {
                        csv += std::to_string(run.size) + "," + std::to_string(row.epoch) + "," +
                               domain + "," + metric + "," + fmt(metric_value(report, metric)) +
                               "\n";
                    }
                }
            }
        }
        const auto per_epoch = out_dir / "per_epoch.csv";
        util::write_file_atomic(per_epoch, csv);
        written.push_back(per_epoch);

        // (b) First-epoch summary grid: MAP/MRR/NDCG rows per domain, one
        // column per dataset size, with the untrained baseline first.
        std::string table = "domain,metric,base";
        for (std::size_t size : result.sizes) {
            table += "," + std::to_string(size);
        }
        table += "\n";
        for (const std::string domain : has_out
                 ? std::vector<std::string>{"in_domain", "out_domain"}
                 : std::vector<std::string>{"in_domain"}) {
            for (const std::string metric : {"map", "mrr", "ndcg"}) {
                const MetricReport& base =
                    domain == "in_domain" ? result.base_in : *result.base_out;
                table += domain + "," + metric + "," + fmt(metric_value(base, metric));
                for (const auto& run : result.runs) {
                    const auto& first = run.epochs.front();
                    const MetricReport& report =
                        domain == "in_domain" ? first.in_domain : *first.out_domain;
                    table += "," + fmt(metric_value(report, metric));
                }
                table += "\n";
            }
        }
        const auto first_epoch = out_dir / "first_epoch_table.csv";
        util::write_file_atomic(first_epoch, table);
        written.push_back(first_epoch);
    }

    if (format == "all" || format == "json") {
        // (c) Plot-ready series keyed by metric, domain, then dataset size.
        nlohmann::json series = nlohmann::json::object();
        for (const auto& metric : all_metrics()) {
            nlohmann::json by_domain = nlohmann::json::object();
            for (const std::string domain : has_out
                     ? std::vector<std::string>{"in_domain", "out_domain"}
                     : std::vector<std::string>{"in_domain"}) {
                nlohmann::json by_size = nlohmann::json::object();
                for (const auto& run : result.runs) {
                    nlohmann::json values = nlohmann::json::array();
                    for (const auto& row : run.epochs) {
                        const MetricReport& report =
                            domain == "in_domain" ? row.in_domain : *row.out_domain;
                        values.push_back(metric_value(report, metric));
                    }
                    by_size[std::to_string(run.size)] = std::move(values);
                }
                by_domain[domain] = std::move(by_size);
            }
            series[metric] = std::move(by_domain);
        }
        const auto series_path = out_dir / "series.json";
        util::write_file_atomic(series_path, series.dump(2) + "\n");
        written.push_back(series_path);
    }
    return written;
}

}  // namespace synthrank
