// Copyright (C) 2026 the synthrank authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "synthrank/corpus.hpp"
#include "synthrank/llm.hpp"
#include "synthrank/query_gen.hpp"
#include "synthrank/retriever.hpp"

namespace synthrank {

/// Teacher probability that a document is relevant to a query.
struct RelevanceJudgment {
    std::string query_id;
    std::string doc_id;
    double p_yes = 0.0;  // in [0, 1]

    bool operator==(const RelevanceJudgment&) const = default;
};

/// Two-way softmax, computed with the max-shift. This is the only place the
/// gateway's logits are interpreted.
double yes_probability(double z_yes, double z_no);

struct RelevanceLabels {
    std::string yes = "Yes";
    std::string no = "No";
};

/// p(yes) for one (query, document) pair, via the classification template and
/// the backend's label-restricted logits.
double relevance_score(LlmBackend& backend, const PromptTemplate& tmpl,
                       const SyntheticQuery& query, const Document& doc,
                       const RelevanceLabels& labels = {});

/// One judgment per candidate, preserving candidate order. Every candidate
/// doc_id must resolve in the corpus.
std::vector<RelevanceJudgment> score_candidates(LlmBackend& backend, const PromptTemplate& tmpl,
                                                const SyntheticQuery& query,
                                                const CandidateSet& candidates,
                                                const Corpus& corpus,
                                                const RelevanceLabels& labels = {});

/// Argmax of p_yes. Ties prefer the seed document when it is among the tied,
/// otherwise the ascending doc_id.
std::string mine_positive(std::span<const RelevanceJudgment> judgments,
                          const std::string& seed_doc_id);

/// Exactly the doc_ids with p_yes < t, hardest first (p_yes descending, ties
/// by ascending doc_id). t must lie in (0, 1).
std::vector<std::string> mine_negatives(std::span<const RelevanceJudgment> judgments, double t);

inline constexpr double kDefaultRelevanceThreshold = 0.5;

/// (q, d+, {d-}) with the full scored candidate list retained.
/// Invariants: the positive never appears among the negatives; every
/// negative scores below the threshold; negatives are ordered hardest first.
struct TrainingTriplet {
    SyntheticQuery query;
    std::string positive_doc_id;
    std::vector<std::string> negative_doc_ids;
    std::vector<RelevanceJudgment> judgments;
    double threshold_used = kDefaultRelevanceThreshold;
};

struct TripletRejection {
    std::string query_id;
    std::string reason;  // weak_positive | no_negatives | insufficient_negatives
};

struct AssemblyPolicy {
    double t = kDefaultRelevanceThreshold;
    std::size_t min_negatives = 4;
    double min_positive_score = kDefaultRelevanceThreshold;
};

/// Pure assembly of mining results under the policy. Rejection is a value,
/// not an error. Candidates scoring >= t that are not the positive belong to
/// neither role and are excluded from the triplet's role lists.
std::variant<TrainingTriplet, TripletRejection> assemble_triplet(
    const SyntheticQuery& query, std::vector<RelevanceJudgment> judgments,
    const AssemblyPolicy& policy);

/// JSON Lines with keys `query_id`, `query_text`, `positive_doc_id`,
/// `negative_doc_ids` (hard-first), `scores` (doc_id -> p_yes), `threshold`,
/// `seed_doc_id`. Rejections go to a sidecar with `query_id` and `reason`.
void write_triplets_jsonl(std::span<const TrainingTriplet> triplets,
                          const std::filesystem::path& path);
std::vector<TrainingTriplet> read_triplets_jsonl(const std::filesystem::path& path);
void write_rejections_jsonl(std::span<const TripletRejection> rejections,
                            const std::filesystem::path& path);
std::vector<TripletRejection> read_rejections_jsonl(const std::filesystem::path& path);

}  // namespace synthrank
