// Copyright (C) 2026 the synthrank authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "synthrank/corpus.hpp"
#include "synthrank/cross_encoder.hpp"
#include "synthrank/metrics.hpp"
#include "synthrank/mining.hpp"

namespace synthrank {

/// Scores for one query's group: the positive against its m negatives.
struct GroupScores {
    double positive_score = 0.0;
    std::vector<double> negative_scores;
};

/// Batch-mean contrastive loss: mean over groups of
/// -log(exp(s+) / sum over the group of exp(s)), evaluated with the
/// log-sum-exp max shift. Always finite and >= 0.
double lce_loss(std::span<const GroupScores> groups);

/// One query's training unit: the mined positive plus the first m negatives
/// in hard-first order, with document texts resolved from the corpus.
struct TrainingGroup {
    std::string query_id;
    std::string query_text;
    std::pair<std::string, std::string> positive;              // (doc_id, text)
    std::vector<std::pair<std::string, std::string>> negatives;  // exactly m entries
};

/// The query set for one loss evaluation; all groups share the same m.
struct TrainingBatch {
    std::vector<TrainingGroup> groups;
};

TrainingGroup build_group(const TrainingTriplet& triplet, std::size_t m, const Corpus& corpus);

/// Adaptive-moment estimation state over the flat parameter vector
/// (encoder parameters followed by the score head).
struct AdamState {
    std::size_t step = 0;
    std::vector<double> m;
    std::vector<double> v;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void ensure_size(std::size_t n);
};

struct TrainHyperparams {
    double learning_rate = 0.05;
};

/// Loss and analytic gradients of the batch objective with respect to every
/// trainable parameter (encoder parameters, then the score head).
struct LceGradients {
    double loss = 0.0;
    std::vector<double> encoder;
    std::vector<double> head;
};

LceGradients lce_gradients(const CrossEncoderModel& model, const TrainingBatch& batch);

/// Scores the batch, applies one optimizer update, and returns the loss of
/// the pre-update scores. learning_rate = 0 leaves parameters bit-identical.
/// Non-finite loss or gradient aborts with TrainingError.
double train_step(CrossEncoderModel& model, const TrainingBatch& batch, AdamState& opt,
                  const TrainHyperparams& hp);

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based, strictly increasing
    double mean_loss = 0.0;
    std::vector<MetricReport> eval_reports;
};

struct TrainingHistory {
    std::vector<EpochRecord> epochs;
};

using EvalHook = std::function<std::vector<MetricReport>(std::size_t epoch,
                                                         const CrossEncoderModel& model)>;

struct TrainConfig {
    std::size_t epochs = 10;
    std::size_t batch_size = 2;
    std::size_t grad_accum_steps = 2;  // effective batch = batch_size * grad_accum_steps
    std::size_t m = 4;                 // negatives per group
    double learning_rate = 0.05;
    std::uint64_t rng_seed = 0;
    EvalHook eval_hook;  // optional; invoked after each epoch
};

/// Full training loop: groups are built once per triplet and fixed across
/// epochs; group order is reshuffled deterministically each epoch; gradients
/// accumulate across grad_accum_steps micro-batches before each update.
/// Records the per-epoch mean group loss (pre-update scores).
TrainingHistory train(CrossEncoderModel& model, std::span<const TrainingTriplet> triplets,
                      const Corpus& corpus, const TrainConfig& config,
                      AdamState* opt_state = nullptr);

void write_history_jsonl(const TrainingHistory& history, const std::filesystem::path& path);
TrainingHistory read_history_jsonl(const std::filesystem::path& path);

inline constexpr const char* kCheckpointMagic = "SYNTHRANK-CKPT-1";

/// Versioned checkpoint: encoder identity and parameters, score head,
/// optimizer state, and the fingerprint of the producing config.
void save_checkpoint(const CrossEncoderModel& model, const AdamState& opt,
                     const std::string& config_fingerprint, const std::filesystem::path& path);

struct LoadedCheckpoint {
    CrossEncoderModel model;
    AdamState opt;
    std::string config_fingerprint;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace synthrank
