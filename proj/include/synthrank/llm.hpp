// Copyright (C) 2026 the synthrank authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace synthrank {

/// Few-shot prompt. `instruction` may reference the placeholders
/// {seed_document}, {query} and {document}; examples are (document, query)
/// pairs rendered ahead of the instruction.
struct PromptTemplate {
    std::string id;
    std::string instruction;
    std::vector<std::pair<std::string, std::string>> few_shot_examples;
};

PromptTemplate load_prompt_template(const std::filesystem::path& path);
void write_prompt_template(const PromptTemplate& tmpl, const std::filesystem::path& path);

/// Deterministic substitution. Few-shot examples render first, in order, each
/// as a "Document:" / "Query:" pair; then the instruction with every
/// referenced placeholder bound. An unbound placeholder raises TemplateError
/// naming it. Bound values are inserted verbatim (no re-scanning).
std::string render_prompt(const PromptTemplate& tmpl,
                          const std::map<std::string, std::string>& bindings);

struct DecodeParams {
    std::size_t max_tokens = 64;
    double temperature = 0.0;
    std::uint64_t rng_seed = 0;
};

/// Logits for exactly the requested label strings, in request order.
struct LabelLogits {
    std::vector<std::pair<std::string, double>> entries;

    double at(const std::string& label) const;
};

/// Contract for the two capabilities the pipeline needs: free-text completion
/// and per-label logit scoring. Handles are safe for concurrent use.
class LlmBackend {
public:
    virtual ~LlmBackend() = default;

    virtual std::string backend_id() const = 0;
    virtual std::string complete_impl(const std::string& prompt, const DecodeParams& params) = 0;
    virtual LabelLogits label_logits_impl(const std::string& prompt,
                                          const std::pair<std::string, std::string>& labels) = 0;
};

/// Validated entry points. These enforce the operation contracts (non-empty
/// prompt, distinct labels, non-empty result, exact label set) regardless of
/// backend.
std::string complete(LlmBackend& backend, const std::string& prompt, const DecodeParams& params);
LabelLogits label_logits(LlmBackend& backend, const std::string& prompt,
                         const std::pair<std::string, std::string>& labels);

/// Stateless deterministic backend for offline runs and tests.
///
/// Completion: parses the conventional "Document:" section out of the prompt
/// and reformulates the first sentence as a fixed interrogative template
/// ("what is <head tokens>?"). A pure function of (prompt, rng_seed).
///
/// Label scoring: parses the "Query:" and "Document:" sections and sets
/// logit(first label) - logit(second label) = alpha * (2 * J - 1), where J is
/// the Jaccard word overlap and alpha = 10; the second label's logit is 0.
class MockLlmBackend : public LlmBackend {
public:
    static constexpr double kAlpha = 10.0;

    std::string backend_id() const override { return "mock-llm-v1"; }
    std::string complete_impl(const std::string& prompt, const DecodeParams& params) override;
    LabelLogits label_logits_impl(const std::string& prompt,
                                  const std::pair<std::string, std::string>& labels) override;

    /// The completion rule applied directly to a passage, exposed so tests
    /// can state expectations without going through a prompt.
    static std::string synthesize_query(const std::string& passage);

    /// logit_yes - logit_no under the mock rule.
    static double relevance_logit_gap(const std::string& query, const std::string& document);

    /// Section extraction used by both capabilities (last marker wins, so
    /// few-shot examples never shadow the bound content).
    static std::string extract_section(const std::string& prompt, const std::string& marker);
};

struct HttpBackendConfig {
    std::string base_url;             // e.g. "http://127.0.0.1:8089"
    int timeout_ms = 30000;
    int max_retries = 3;              // additional attempts after the first
    int backoff_initial_ms = 250;     // doubles per retry
    int max_inflight = 8;             // cap on concurrent requests
    std::string token_env = "SYNTHRANK_LLM_TOKEN";
};

/// Remote backend speaking the gateway wire contract:
///   POST /v1/complete      {prompt, max_tokens, temperature, seed} -> {text}
///   POST /v1/label_logits  {prompt, labels:[a,b]} -> {logits:{a:..., b:...}}
/// Bearer auth comes from the environment variable named in the config.
/// Transport failures and 5xx responses are retried with exponential backoff;
/// a malformed or label-incomplete response raises CapabilityError.
class HttpLlmBackend : public LlmBackend {
public:
    explicit HttpLlmBackend(HttpBackendConfig config);
    ~HttpLlmBackend() override;

    std::string backend_id() const override;
    std::string complete_impl(const std::string& prompt, const DecodeParams& params) override;
    LabelLogits label_logits_impl(const std::string& prompt,
                                  const std::pair<std::string, std::string>& labels) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Built-in templates used when the run config does not point at files.
PromptTemplate default_generation_template();
PromptTemplate default_classification_template();

}  // namespace synthrank
