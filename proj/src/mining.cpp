// Copyright (C) 2026 the synthrank authors
// SPDX-License-Identifier: Apache-2.0

#include "synthrank/mining.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "synthrank/errors.hpp"
#include "synthrank/jsonl.hpp"

namespace synthrank {

double yes_probability(double z_yes, double z_no) {
    const double m = std::max(z_yes, z_no);
    const double ey = std::exp(z_yes - m);
    const double en = std::exp(z_no - m);
    return ey / (ey + en);
}

double relevance_score(LlmBackend& backend, const PromptTemplate& tmpl,
                       const SyntheticQuery& query, const Document& doc,
                       const RelevanceLabels& labels) {
    const std::string prompt =
        render_prompt(tmpl, {{"query", query.text}, {"document", doc.text}});
    const LabelLogits logits = label_logits(backend, prompt, {labels.yes, labels.no});
    return yes_probability(logits.at(labels.yes), logits.at(labels.no));
}

std::vector<RelevanceJudgment> score_candidates(LlmBackend& backend, const PromptTemplate& tmpl,
                                                const SyntheticQuery& query,
                                                const CandidateSet& candidates,
                                                const Corpus& corpus,
                                                const RelevanceLabels& labels) {
    std::vector<RelevanceJudgment> judgments;
    judgments.reserve(candidates.entries.size());
    for (const auto& entry : candidates.entries) {
        const Document* doc = corpus.find(entry.doc_id);
        if (doc == nullptr) {
            throw StateError("score_candidates: candidate doc " + entry.doc_id +
                             " not found in corpus");
        }
        judgments.push_back(
            {query.query_id, entry.doc_id, relevance_score(backend, tmpl, query, *doc, labels)});
    }
    return judgments;
}

std::string mine_positive(std::span<const RelevanceJudgment> judgments,
                          const std::string& seed_doc_id) {
    if (judgments.empty()) {
        throw ArgumentError("mine_positive: judgments must be non-empty");
    }
    const RelevanceJudgment* best = &judgments[0];
    for (const auto& j : judgments) {
        if (j.p_yes > best->p_yes) {
            best = &j;
        } else if (j.p_yes == best->p_yes && best->doc_id != seed_doc_id) {
            if (j.doc_id == seed_doc_id || j.doc_id < best->doc_id) {
                best = &j;
            }
        }
    }
    return best->doc_id;
}

std::vector<std::string> mine_negatives(std::span<const RelevanceJudgment> judgments, double t) {
    if (!(t > 0.0 && t < 1.0)) {
        throw ArgumentError("mine_negatives: threshold must lie in (0, 1)");
    }
    std::vector<const RelevanceJudgment*> below;
    for (const auto& j : judgments) {
        if (j.p_yes < t) {
            below.push_back(&j);
        }
    }
    std::sort(below.begin(), below.end(), [](const RelevanceJudgment* a,
                                             const RelevanceJudgment* b) {
        if (a->p_yes != b->p_yes) {
            return a->p_yes > b->p_yes;  // hardest first
        }
        return a->doc_id < b->doc_id;
    });
    std::vector<std::string> out;
    out.reserve(below.size());
    for (const auto* j : below) {
        out.push_back(j->doc_id);
    }
    return out;
}

std::variant<TrainingTriplet, TripletRejection> assemble_triplet(
    const SyntheticQuery& query, std::vector<RelevanceJudgment> judgments,
    const AssemblyPolicy& policy) {
    if (judgments.empty()) {
        throw ArgumentError("assemble_triplet: judgments must be non-empty");
    }
    const std::string positive = mine_positive(judgments, query.seed_doc_id);
    double positive_score = 0.0;
    for (const auto& j : judgments) {
        if (j.doc_id == positive) {
            positive_score = j.p_yes;
            break;
        }
    }
    if (positive_score < policy.min_positive_score) {
        return TripletRejection{query.query_id, "weak_positive"};
    }
    std::vector<std::string> negatives = mine_negatives(judgments, policy.t);
    std::erase(negatives, positive);
    if (negatives.empty()) {
        return TripletRejection{query.query_id, "no_negatives"};
    }
    if (negatives.size() < policy.min_negatives) {
        return TripletRejection{query.query_id, "insufficient_negatives"};
    }
    TrainingTriplet triplet;
    triplet.query = query;
    triplet.positive_doc_id = positive;
    triplet.negative_doc_ids = std::move(negatives);
    triplet.judgments = std::move(judgments);
    triplet.threshold_used = policy.t;
    return triplet;
}

void write_triplets_jsonl(std::span<const TrainingTriplet> triplets,
                          const std::filesystem::path& path) {
    std::vector<nlohmann::json> rows;
    rows.reserve(triplets.size());
    for (const auto& t : triplets) {
        nlohmann::json scores = nlohmann::json::object();
        for (const auto& j : t.judgments) {
            scores[j.doc_id] = j.p_yes;
        }
        rows.push_back({{"query_id", t.query.query_id},
                        {"query_text", t.query.text},
                        {"positive_doc_id", t.positive_doc_id},
                        {"negative_doc_ids", t.negative_doc_ids},
                        {"scores", std::move(scores)},
                        {"threshold", t.threshold_used},
                        {"seed_doc_id", t.query.seed_doc_id}});
    }
    jsonl::write(path, rows);
}

std::vector<TrainingTriplet> read_triplets_jsonl(const std::filesystem::path& path) {
    std::vector<TrainingTriplet> triplets;
    jsonl::for_each(path, [&](const nlohmann::json& row, std::size_t line_no) {
        TrainingTriplet t;
        try {
            t.query.query_id = row.at("query_id").get<std::string>();
            t.query.text = row.at("query_text").get<std::string>();
            t.query.seed_doc_id = row.at("seed_doc_id").get<std::string>();
            t.positive_doc_id = row.at("positive_doc_id").get<std::string>();
            t.negative_doc_ids = row.at("negative_doc_ids").get<std::vector<std::string>>();
            t.threshold_used = row.at("threshold").get<double>();
            for (const auto& [doc_id, p] : row.at("scores").items()) {
                t.judgments.push_back({t.query.query_id, doc_id, p.get<double>()});
            }
        } catch (const nlohmann::json::exception& e) {
            throw IngestError("malformed triplet at " + path.string() + ":" +
                              std::to_string(line_no) + ": " + e.what());
        }
        triplets.push_back(std::move(t));
    });
    return triplets;
}

void write_rejections_jsonl(std::span<const TripletRejection> rejections,
                            const std::filesystem::path& path) {
    std::vector<nlohmann::json> rows;
    rows.reserve(rejections.size());
    for (const auto& r : rejections) {
        rows.push_back({{"query_id", r.query_id}, {"reason", r.reason}});
    }
    jsonl::write(path, rows);
}

std::vector<TripletRejection> read_rejections_jsonl(const std::filesystem::path& path) {
    std::vector<TripletRejection> out;
    jsonl::for_each(path, [&](const nlohmann::json& row, std::size_t) {
        out.push_back({row.at("query_id").get<std::string>(), row.at("reason").get<std::string>()});
    });
    return out;
}

}  // namespace synthrank
