// Copyright (C) 2026 the synthrank authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "synthrank/encoder.hpp"
#include "synthrank/llm.hpp"
#include "synthrank/mining.hpp"
#include "synthrank/retriever.hpp"

namespace synthrank {

struct LlmBackendSettings {
    std::string kind = "mock";  // mock | http
    HttpBackendConfig http;
};

struct EmbeddingBackendSettings {
    std::string kind = "mock";  // mock | http
    std::size_t dim = 64;
    HttpEmbeddingConfig http;
};

struct EncoderSettings {
    std::string kind = "toy";  // toy | remote
    ToyEncoderConfig toy;
    RemoteEncoderConfig remote;
};

struct PromptSettings {
    std::filesystem::path generation_template;      // empty -> built-in default
    std::filesystem::path classification_template;  // empty -> built-in default
};

struct PipelineSettings {
    std::size_t n_seeds = 100;
    std::size_t k_candidates = 30;
    double t = kDefaultRelevanceThreshold;
    std::size_t m = 4;
    std::size_t min_negatives = 4;
    double min_positive_score = kDefaultRelevanceThreshold;
    std::size_t max_tokens = 512;
    std::string tokenizer_spec = kDefaultTokenizerSpec;
    std::size_t max_query_tokens = 64;
    bool dedupe = true;
    RelevanceLabels labels;
};

struct TrainingSettings {
    std::size_t epochs = 10;
    std::size_t batch_size = 2;
    std::size_t grad_accum_steps = 2;
    double learning_rate = 0.05;
    std::uint64_t rng_seed = 42;  // master seed; stage seeds derive from it
};

struct EvalSettings {
    std::size_t k = 10;
    std::size_t max_pool = 30;
    std::size_t test_size = 500;
    std::filesystem::path out_domain_pools;           // optional labeled-pool JSONL
    std::string out_domain_label_source = "native";   // native | rescored
};

struct AblationSettings {
    std::vector<std::size_t> sizes;
};

/// Fully-resolved run configuration. Every run writes this back (defaults
/// included) so the effective settings are auditable.
struct RunConfig {
    std::filesystem::path corpus_path;
    std::filesystem::path output_dir;
    LlmBackendSettings llm;
    EmbeddingBackendSettings embedding;
    EncoderSettings encoder;
    PromptSettings prompts;
    PipelineSettings pipeline;
    TrainingSettings training;
    EvalSettings eval;
    AblationSettings ablation;

    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::filesystem::path& path);
    nlohmann::json to_json() const;

    /// Structural checks; with check_paths, referenced files must exist.
    void validate(bool check_paths = true) const;

    /// Hash of the canonical resolved form.
    std::string fingerprint() const;

    /// Force the deterministic offline backends (mock LLM, mock embedder,
    /// toy encoder).
    void force_mock_backends();

    std::unique_ptr<LlmBackend> make_llm_backend() const;
    std::unique_ptr<EmbeddingBackend> make_embedding_backend() const;
    std::shared_ptr<SequenceEncoder> make_sequence_encoder() const;
    PromptTemplate generation_template() const;
    PromptTemplate classification_template() const;

    std::uint64_t stage_seed(std::string_view stage) const;
};

}  // namespace synthrank
