// Copyright (C) 2026 the synthrank authors
// SPDX-License-Identifier: Apache-2.0

#include "synthrank/llm.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <semaphore>
#include <thread>
#include <unordered_set>

#include <httplib.h>
#include <json.hpp>

#include "synthrank/errors.hpp"
#include "synthrank/util.hpp"

namespace synthrank {

namespace {

constexpr std::array<const char*, 3> kPlaceholders = {"seed_document", "query", "document"};

bool is_known_placeholder(std::string_view name) {
    for (const char* p : kPlaceholders) {
        if (name == p) {
            return true;
        }
    }
    return false;
}

}  // namespace

PromptTemplate load_prompt_template(const std::filesystem::path& path) {
    nlohmann::json j = nlohmann::json::parse(util::read_file(path), nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw ConfigError("malformed prompt template: " + path.string());
    }
    PromptTemplate tmpl;
    tmpl.id = j.value("id", path.stem().string());
    if (!j.contains("instruction")) {
        throw ConfigError("prompt template missing 'instruction': " + path.string());
    }
    tmpl.instruction = j.at("instruction").get<std::string>();
    for (const auto& ex : j.value("few_shot_examples", nlohmann::json::array())) {
        if (!ex.is_array() || ex.size() != 2) {
            throw ConfigError("few_shot_examples entries must be [document, query] pairs: " +
                              path.string());
        }
        tmpl.few_shot_examples.emplace_back(ex.at(0).get<std::string>(),
                                            ex.at(1).get<std::string>());
    }
    return tmpl;
}

void write_prompt_template(const PromptTemplate& tmpl, const std::filesystem::path& path) {
    nlohmann::json j{{"id", tmpl.id}, {"instruction", tmpl.instruction}};
    auto examples = nlohmann::json::array();
    for (const auto& [doc, query] : tmpl.few_shot_examples) {
        examples.push_back(nlohmann::json::array({doc, query}));
    }
    j["few_shot_examples"] = examples;
    util::write_file_atomic(path, j.dump(2) + "\n");
}

std::string render_prompt(const PromptTemplate& tmpl,
                          const std::map<std::string, std::string>& bindings) {
    std::string out;
    for (const auto& [doc, query] : tmpl.few_shot_examples) {
        out += "Document: " + doc + "\nQuery: " + query + "\n\n";
    }
    // Single left-to-right pass; bound values are never re-scanned.
    const std::string& ins = tmpl.instruction;
    std::size_t pos = 0;
    while (pos < ins.size()) {
        const std::size_t open = ins.find('{', pos);
        if (open == std::string::npos) {
            out.append(ins, pos, std::string::npos);
            break;
        }
        const std::size_t close = ins.find('}', open + 1);
        const std::string name =
            close == std::string::npos ? std::string{} : ins.substr(open + 1, close - open - 1);
        if (close == std::string::npos || !is_known_placeholder(name)) {
            out.append(ins, pos, open + 1 - pos);  // literal brace
            pos = open + 1;
            continue;
        }
        out.append(ins, pos, open - pos);
        auto it = bindings.find(name);
        if (it == bindings.end()) {
            throw TemplateError("unbound placeholder {" + name + "} in template " + tmpl.id);
        }
        out += it->second;
        pos = close + 1;
    }
    return out;
}

double LabelLogits::at(const std::string& label) const {
    for (const auto& [name, logit] : entries) {
        if (name == label) {
            return logit;
        }
    }
    throw ArgumentError("label not present in LabelLogits: " + label);
}

std::string complete(LlmBackend& backend, const std::string& prompt, const DecodeParams& params) {
    if (prompt.empty()) {
        throw ArgumentError("complete: prompt must be non-empty");
    }
    std::string text = backend.complete_impl(prompt, params);
    if (util::normalize_whitespace(text).empty()) {
        throw GenerationError("backend " + backend.backend_id() + " produced an empty generation");
    }
    return text;
}

LabelLogits label_logits(LlmBackend& backend, const std::string& prompt,
                         const std::pair<std::string, std::string>& labels) {
    if (prompt.empty()) {
        throw ArgumentError("label_logits: prompt must be non-empty");
    }
    if (labels.first.empty() || labels.second.empty() || labels.first == labels.second) {
        throw ArgumentError("label_logits: labels must be two distinct non-empty strings");
    }
    LabelLogits result = backend.label_logits_impl(prompt, labels);
    if (result.entries.size() != 2 || result.entries[0].first != labels.first ||
        result.entries[1].first != labels.second) {
        throw CapabilityError("backend " + backend.backend_id() +
                              " did not return exactly the requested labels");
    }
    for (const auto& [name, logit] : result.entries) {
        if (!std::isfinite(logit)) {
            throw CapabilityError("backend " + backend.backend_id() +
                                  " returned a non-finite logit for label " + name);
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Mock backend
// ---------------------------------------------------------------------------

std::string MockLlmBackend::extract_section(const std::string& prompt,
                                            const std::string& marker) {
    static const std::array<const char*, 2> markers = {"Document:", "Query:"};
    const std::size_t pos = prompt.rfind(marker);
    if (pos == std::string::npos) {
        return prompt;
    }
    const std::size_t start = pos + marker.size();
    std::size_t end = prompt.size();
    for (const char* m : markers) {
        const std::size_t next = prompt.find(m, start);
        if (next != std::string::npos) {
            end = std::min(end, next);
        }
    }
    const std::size_t blank = prompt.find("\n\n", start);
    if (blank != std::string::npos) {
        end = std::min(end, blank);
    }
    return util::normalize_whitespace(std::string_view(prompt).substr(start, end - start));
}

std::string MockLlmBackend::synthesize_query(const std::string& passage) {
    static const std::unordered_set<std::string> stopwords = {
        "the", "a", "an", "this", "that", "these", "those", "it",  "its",  "is",
        "are", "was", "were", "of",   "in",   "on",    "at",    "to", "for", "and",
        "or",  "with"};

    std::string first_sentence = passage;
    const std::size_t stop = passage.find_first_of(".!?");
    if (stop != std::string::npos) {
        first_sentence = passage.substr(0, stop);
    }
    const auto tokens = util::lex_tokens(first_sentence);
    std::size_t begin = 0;
    while (begin < tokens.size() && stopwords.count(tokens[begin]) > 0) {
        ++begin;
    }
    if (begin == tokens.size()) {
        begin = 0;  // all stopwords; keep them rather than emit nothing
    }
    std::string head;
    for (std::size_t i = begin; i < tokens.size() && i < begin + 4; ++i) {
        if (!head.empty()) {
            head.push_back(' ');
        }
        head += tokens[i];
    }
    if (head.empty()) {
        head = "this passage";
    }
    return "what is " + head + "?";
}

std::string MockLlmBackend::complete_impl(const std::string& prompt, const DecodeParams& params) {
    const std::string passage = extract_section(prompt, "Document:");
    std::string query = synthesize_query(passage);
    auto words = util::split_whitespace(query);
    if (params.max_tokens > 0 && words.size() > params.max_tokens) {
        words.resize(params.max_tokens);
        query.clear();
        for (const auto& w : words) {
            if (!query.empty()) {
                query.push_back(' ');
            }
            query += w;
        }
    }
    return query;
}

double MockLlmBackend::relevance_logit_gap(const std::string& query, const std::string& document) {
    const double j = util::jaccard(util::lex_tokens(query), util::lex_tokens(document));
    return kAlpha * (2.0 * j - 1.0);
}

LabelLogits MockLlmBackend::label_logits_impl(const std::string& prompt,
                                              const std::pair<std::string, std::string>& labels) {
    const std::string query = extract_section(prompt, "Query:");
    const std::string document = extract_section(prompt, "Document:");
    LabelLogits out;
    out.entries.emplace_back(labels.first, relevance_logit_gap(query, document));
    out.entries.emplace_back(labels.second, 0.0);
    return out;
}

// ---------------------------------------------------------------------------
// HTTP backend
// ---------------------------------------------------------------------------

struct HttpLlmBackend::Impl {
    HttpBackendConfig config;
    std::string token;
    std::counting_semaphore<4096> inflight;

    explicit Impl(HttpBackendConfig cfg)
        : config(std::move(cfg)), inflight(std::max(1, config.max_inflight)) {
        if (const char* env = std::getenv(config.token_env.c_str())) {
            token = env;
        }
    }

    nlohmann::json post_json(const std::string& path, const nlohmann::json& body) {
        inflight.acquire();
        struct Release {
            std::counting_semaphore<4096>& sem;
            ~Release() { sem.release(); }
        } release{inflight};

        httplib::Headers headers;
        if (!token.empty()) {
            headers.emplace("Authorization", "Bearer " + token);
        }
        const std::string payload = body.dump();
        int backoff_ms = config.backoff_initial_ms;
        std::string last_failure;
        for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
                backoff_ms *= 2;
            }
            httplib::Client client(config.base_url);
            client.set_connection_timeout(0, config.timeout_ms * 1000LL);
            client.set_read_timeout(0, config.timeout_ms * 1000LL);
            client.set_write_timeout(0, config.timeout_ms * 1000LL);
            auto res = client.Post(path, headers, payload, "application/json");
            if (!res) {
                last_failure = "transport error (" + httplib::to_string(res.error()) + ")";
                continue;
            }
            if (res->status >= 500) {
                last_failure = "server status " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200) {
                throw GatewayError("backend rejected " + path + " with status " +
                                       std::to_string(res->status),
                                   /*retryable=*/false);
            }
            nlohmann::json parsed = nlohmann::json::parse(res->body, nullptr, false);
            if (parsed.is_discarded()) {
                throw GatewayError("backend returned malformed JSON for " + path,
                                   /*retryable=*/false);
            }
            return parsed;
        }
        throw GatewayError("backend unreachable at " + config.base_url + path + " after " +
                               std::to_string(config.max_retries + 1) + " attempts: " +
                               last_failure,
                           /*retryable=*/true);
    }
};

HttpLlmBackend::HttpLlmBackend(HttpBackendConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {}

HttpLlmBackend::~HttpLlmBackend() = default;

std::string HttpLlmBackend::backend_id() const {
    return "http:" + impl_->config.base_url;
}

std::string HttpLlmBackend::complete_impl(const std::string& prompt, const DecodeParams& params) {
    nlohmann::json body{{"prompt", prompt},
                        {"max_tokens", params.max_tokens},
                        {"temperature", params.temperature},
                        {"seed", params.rng_seed}};
    nlohmann::json res = impl_->post_json("/v1/complete", body);
    if (!res.is_object() || !res.contains("text") || !res.at("text").is_string()) {
        throw GatewayError("complete response missing 'text'", /*retryable=*/false);
    }
    return res.at("text").get<std::string>();
}

LabelLogits HttpLlmBackend::label_logits_impl(const std::string& prompt,
                                              const std::pair<std::string, std::string>& labels) {
    nlohmann::json body{{"prompt", prompt},
                        {"labels", nlohmann::json::array({labels.first, labels.second})}};
    nlohmann::json res = impl_->post_json("/v1/label_logits", body);
    if (!res.is_object() || !res.contains("logits") || !res.at("logits").is_object()) {
        throw CapabilityError("label_logits response missing 'logits' object");
    }
    const auto& logits = res.at("logits");
    if (logits.size() != 2 || !logits.contains(labels.first) || !logits.contains(labels.second)) {
        throw CapabilityError("backend cannot report logits for exactly the requested labels");
    }
    LabelLogits out;
    out.entries.emplace_back(labels.first, logits.at(labels.first).get<double>());
    out.entries.emplace_back(labels.second, logits.at(labels.second).get<double>());
    return out;
}

// ---------------------------------------------------------------------------
// Built-in templates
// ---------------------------------------------------------------------------

PromptTemplate default_generation_template() {
    PromptTemplate tmpl;
    tmpl.id = "gen-default-v1";
    tmpl.instruction =
        "Write one short search query that the following document answers. "
        "Reply with the query only.\n\nDocument: {seed_document}\n\nQuery:";
    tmpl.few_shot_examples = {
        {"Aspirin lowers fever and relieves mild aches.", "what is aspirin used for"},
        {"The liver filters toxins from the blood and produces bile.", "what does the liver do"},
        {"Type 2 diabetes develops when the body stops responding to insulin.",
         "what causes type 2 diabetes"},
    };
    return tmpl;
}

PromptTemplate default_classification_template() {
    PromptTemplate tmpl;
    tmpl.id = "cls-default-v1";
    tmpl.instruction =
        "Decide whether the document answers the query. Reply with Yes or No.\n\n"
        "Query: {query}\n\nDocument: {document}\n\nAnswer:";
    return tmpl;
}

}  // namespace synthrank
