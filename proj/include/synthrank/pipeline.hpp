// Copyright (C) 2026 the synthrank authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "synthrank/config.hpp"
#include "synthrank/metrics.hpp"
#include "synthrank/mining.hpp"
#include "synthrank/trainer.hpp"

namespace synthrank {

/// Deterministic disjoint, exhaustive split. test_size = 0 is allowed (with a
/// warning); test_size >= total is an error. Both halves keep dataset order.
std::pair<std::vector<TrainingTriplet>, std::vector<TrainingTriplet>> split_dataset(
    std::span<const TrainingTriplet> triplets, std::size_t test_size, std::uint64_t rng_seed);

/// Nested subsets: subset(sizes[i]) is a strict subset of subset(sizes[i+1]).
/// Sizes must be strictly increasing and fit within the train set.
std::vector<std::vector<TrainingTriplet>> make_nested_subsets(
    std::span<const TrainingTriplet> train, std::span<const std::size_t> sizes,
    std::uint64_t rng_seed);

/// Evaluation pools from mined triplets: every judged candidate enters the
/// pool, labeled relevant when its teacher score reaches the triplet's
/// threshold; the score doubles as truncation hardness.
std::vector<EvalQuery> eval_queries_from_triplets(std::span<const TrainingTriplet> triplets,
                                                  const Corpus& corpus);

/// Label an unlabeled pool set with the teacher (p_yes >= t is relevant).
void rescore_eval_pools(LlmBackend& backend, const PromptTemplate& classification_template,
                        std::vector<EvalQuery>& pools, double t,
                        const RelevanceLabels& labels = {});

/// Artifact paths under one run's output directory.
struct RunPaths {
    std::filesystem::path root;

    std::filesystem::path resolved_config() const { return root / "config.resolved.json"; }
    std::filesystem::path corpus() const { return root / "corpus.jsonl"; }
    std::filesystem::path seeds() const { return root / "seeds.jsonl"; }
    std::filesystem::path queries() const { return root / "queries.jsonl"; }
    std::filesystem::path generation_failures() const { return root / "genfailures.jsonl"; }
    std::filesystem::path index() const { return root / "index.json"; }
    std::filesystem::path candidates() const { return root / "candidates.jsonl"; }
    std::filesystem::path triplets() const { return root / "triplets.jsonl"; }
    std::filesystem::path rejections() const { return root / "rejections.jsonl"; }
    std::filesystem::path train_set() const { return root / "train.jsonl"; }
    std::filesystem::path test_set() const { return root / "test.jsonl"; }
    std::filesystem::path manifest() const { return root / "manifest.json"; }
    std::filesystem::path checkpoint() const { return root / "checkpoint.json"; }
    std::filesystem::path history() const { return root / "history.jsonl"; }
    std::filesystem::path eval_report(const std::string& tag) const {
        return root / ("eval_" + tag + ".json");
    }
    std::filesystem::path ablation() const { return root / "ablation.json"; }
    std::filesystem::path lock() const { return root / ".synthrank.lock"; }
};

/// Exclusive ownership of an output directory for the duration of a run.
class DirLock {
public:
    explicit DirLock(const RunPaths& paths);
    ~DirLock();

    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

private:
    std::filesystem::path lock_path_;
};

struct StageInfo {
    std::string name;
    double duration_ms = 0.0;
    bool cached = false;
};

struct RunManifest {
    std::string config_fingerprint;
    std::string status = "ok";  // ok | failed
    std::string failed_stage;
    std::vector<StageInfo> stages;
    nlohmann::json counts = nlohmann::json::object();

    nlohmann::json to_json() const;
    void save(const std::filesystem::path& path) const;
};

/// Stage names, in pipeline order.
inline constexpr const char* kStageIngest = "ingest";
inline constexpr const char* kStageSeeds = "seeds";
inline constexpr const char* kStageGenQueries = "genqueries";
inline constexpr const char* kStageIndex = "index";
inline constexpr const char* kStageRetrieve = "retrieve";
inline constexpr const char* kStageMine = "mine";
inline constexpr const char* kStageSplit = "split";

/// Runs the synthetic-dataset stages (ingest through split), persisting one
/// artifact per stage. With `resume`, stages whose artifacts already exist
/// are loaded instead of recomputed. Stage failures propagate after the
/// manifest records the failing stage; completed artifacts stay on disk.
class PipelineRunner {
public:
    PipelineRunner(RunConfig config, bool resume);

    const RunPaths& paths() const { return paths_; }
    const RunConfig& config() const { return config_; }

    /// Full chain; returns the manifest (also written to manifest.json).
    RunManifest run();

    /// Individual stages, exposed for the stage-level CLI commands. Each
    /// returns the counts it contributes to the manifest.
    nlohmann::json stage_ingest();
    nlohmann::json stage_seeds();
    nlohmann::json stage_genqueries();
    nlohmann::json stage_index();
    nlohmann::json stage_retrieve();
    nlohmann::json stage_mine();
    nlohmann::json stage_split();

private:
    bool use_cached(const std::vector<std::filesystem::path>& outputs) const;
    Corpus load_corpus_artifact() const;

    RunConfig config_;
    RunPaths paths_;
    bool resume_;
};

/// Persisted candidate sets: one JSONL row per query, rank order kept.
void write_candidates_jsonl(std::span<const CandidateSet> sets,
                            const std::filesystem::path& path);
std::vector<CandidateSet> read_candidates_jsonl(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Ablation
// ---------------------------------------------------------------------------

struct AblationEpochRow {
    std::size_t epoch = 0;
    double mean_loss = 0.0;
    MetricReport in_domain;
    std::optional<MetricReport> out_domain;
};

struct AblationRun {
    std::size_t size = 0;
    std::vector<AblationEpochRow> epochs;
};

struct AblationSummaryRow {
    std::size_t size = 0;
    std::string domain;
    std::string metric;
    double mean_improvement = 0.0;  // vs the untrained model, averaged over epochs
    double std_improvement = 0.0;
};

struct AblationResult {
    std::vector<std::size_t> sizes;
    std::size_t epochs = 0;
    std::size_t k = 10;
    MetricReport base_in;
    std::optional<MetricReport> base_out;
    std::vector<AblationRun> runs;
    std::vector<AblationSummaryRow> summary;
    std::string in_fingerprint;
    std::string out_fingerprint;

    nlohmann::json to_json() const;
    static AblationResult from_json(const nlohmann::json& j);
};

/// For each configured size: a fresh model from the same init seed, trained
/// on the nested subset with per-epoch evaluation on the fixed test sets.
AblationResult run_ablation(const RunConfig& config, std::span<const TrainingTriplet> train_set,
                            std::span<const EvalQuery> in_domain_test,
                            std::span<const EvalQuery> out_domain_test, const Corpus& corpus);

/// Writes per_epoch.csv (long format), first_epoch_table.csv, and
/// series.json. format must be "all", "csv" or "json".
std::vector<std::filesystem::path> emit_report(const AblationResult& result,
                                               const std::filesystem::path& out_dir,
                                               const std::string& format);

}  // namespace synthrank
