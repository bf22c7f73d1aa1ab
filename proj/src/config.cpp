// Copyright (C) 2026 the synthrank authors
// SPDX-License-Identifier: Apache-2.0

#include "synthrank/config.hpp"

#include <cmath>

#include "synthrank/errors.hpp"
#include "synthrank/tokenizer.hpp"
#include "synthrank/util.hpp"

namespace synthrank {

namespace {

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.is_object() || !j.contains(key)) {
        return fallback;
    }
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config value for '") + key + "': " + e.what());
    }
}

nlohmann::json sub(const nlohmann::json& j, const char* key) {
    return j.is_object() && j.contains(key) ? j.at(key) : nlohmann::json::object();
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw ConfigError("run config must be a JSON object");
    }
    RunConfig cfg;
    cfg.corpus_path = get_or<std::string>(j, "corpus_path", "");
    cfg.output_dir = get_or<std::string>(j, "output_dir", "out");

    const auto backends = sub(j, "backends");
    {
        const auto llm = sub(backends, "llm");
        cfg.llm.kind = get_or<std::string>(llm, "kind", cfg.llm.kind);
        cfg.llm.http.base_url = get_or<std::string>(llm, "base_url", "");
        cfg.llm.http.timeout_ms = get_or<int>(llm, "timeout_ms", cfg.llm.http.timeout_ms);
        cfg.llm.http.max_retries = get_or<int>(llm, "max_retries", cfg.llm.http.max_retries);
        cfg.llm.http.backoff_initial_ms =
            get_or<int>(llm, "backoff_initial_ms", cfg.llm.http.backoff_initial_ms);
        cfg.llm.http.max_inflight = get_or<int>(llm, "max_inflight", cfg.llm.http.max_inflight);
        cfg.llm.http.token_env = get_or<std::string>(llm, "token_env", cfg.llm.http.token_env);
    }
    {
        const auto emb = sub(backends, "embedding");
        cfg.embedding.kind = get_or<std::string>(emb, "kind", cfg.embedding.kind);
        cfg.embedding.dim = get_or<std::size_t>(emb, "dim", cfg.embedding.dim);
        cfg.embedding.http.base_url = get_or<std::string>(emb, "base_url", "");
        cfg.embedding.http.dim = cfg.embedding.dim;
        cfg.embedding.http.timeout_ms =
            get_or<int>(emb, "timeout_ms", cfg.embedding.http.timeout_ms);
        cfg.embedding.http.max_retries =
            get_or<int>(emb, "max_retries", cfg.embedding.http.max_retries);
    }
    {
        const auto enc = sub(backends, "encoder");
        cfg.encoder.kind = get_or<std::string>(enc, "kind", cfg.encoder.kind);
        cfg.encoder.toy.vocab_buckets =
            get_or<std::size_t>(enc, "vocab_buckets", cfg.encoder.toy.vocab_buckets);
        cfg.encoder.toy.d_model = get_or<std::size_t>(enc, "d_model", cfg.encoder.toy.d_model);
        cfg.encoder.toy.max_len = get_or<std::size_t>(enc, "max_len", cfg.encoder.toy.max_len);
        cfg.encoder.toy.init_seed =
            get_or<std::uint64_t>(enc, "init_seed", cfg.encoder.toy.init_seed);
        cfg.encoder.remote.base_url = get_or<std::string>(enc, "base_url", "");
        cfg.encoder.remote.d_model = cfg.encoder.toy.d_model;
        cfg.encoder.remote.timeout_ms =
            get_or<int>(enc, "timeout_ms", cfg.encoder.remote.timeout_ms);
    }
    {
        const auto prompts = sub(j, "prompts");
        cfg.prompts.generation_template =
            get_or<std::string>(prompts, "generation_template", "");
        cfg.prompts.classification_template =
            get_or<std::string>(prompts, "classification_template", "");
    }
    {
        const auto p = sub(j, "pipeline");
        cfg.pipeline.n_seeds = get_or<std::size_t>(p, "n_seeds", cfg.pipeline.n_seeds);
        cfg.pipeline.k_candidates =
            get_or<std::size_t>(p, "k_candidates", cfg.pipeline.k_candidates);
        cfg.pipeline.t = get_or<double>(p, "t", cfg.pipeline.t);
        cfg.pipeline.m = get_or<std::size_t>(p, "m", cfg.pipeline.m);
        cfg.pipeline.min_negatives =
            get_or<std::size_t>(p, "min_negatives", cfg.pipeline.min_negatives);
        cfg.pipeline.min_positive_score =
            get_or<double>(p, "min_positive_score", cfg.pipeline.t);
        cfg.pipeline.max_tokens = get_or<std::size_t>(p, "max_tokens", cfg.pipeline.max_tokens);
        cfg.pipeline.tokenizer_spec =
            get_or<std::string>(p, "tokenizer", cfg.pipeline.tokenizer_spec);
        cfg.pipeline.max_query_tokens =
            get_or<std::size_t>(p, "max_query_tokens", cfg.pipeline.max_query_tokens);
        cfg.pipeline.dedupe = get_or<bool>(p, "dedupe", cfg.pipeline.dedupe);
        cfg.pipeline.labels.yes = get_or<std::string>(p, "label_yes", cfg.pipeline.labels.yes);
        cfg.pipeline.labels.no = get_or<std::string>(p, "label_no", cfg.pipeline.labels.no);
    }
    {
        const auto t = sub(j, "training");
        cfg.training.epochs = get_or<std::size_t>(t, "epochs", cfg.training.epochs);
        cfg.training.batch_size = get_or<std::size_t>(t, "batch_size", cfg.training.batch_size);
        cfg.training.grad_accum_steps =
            get_or<std::size_t>(t, "grad_accum_steps", cfg.training.grad_accum_steps);
        cfg.training.learning_rate =
            get_or<double>(t, "learning_rate", cfg.training.learning_rate);
        cfg.training.rng_seed = get_or<std::uint64_t>(t, "rng_seed", cfg.training.rng_seed);
    }
    {
        const auto e = sub(j, "eval");
        cfg.eval.k = get_or<std::size_t>(e, "k", cfg.eval.k);
        cfg.eval.max_pool = get_or<std::size_t>(e, "max_pool", cfg.eval.max_pool);
        cfg.eval.test_size = get_or<std::size_t>(e, "test_size", cfg.eval.test_size);
        cfg.eval.out_domain_pools = get_or<std::string>(e, "out_domain_pools", "");
        cfg.eval.out_domain_label_source =
            get_or<std::string>(e, "out_domain_label_source", cfg.eval.out_domain_label_source);
    }
    cfg.ablation.sizes = get_or<std::vector<std::size_t>>(sub(j, "ablation"), "sizes", {});
    return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw ConfigError("config file does not exist: " + path.string());
    }
    nlohmann::json j = nlohmann::json::parse(util::read_file(path), nullptr, false);
    if (j.is_discarded()) {
        throw ConfigError("config is not valid JSON: " + path.string());
    }
    return from_json(j);
}

nlohmann::json RunConfig::to_json() const {
    return {
        {"corpus_path", corpus_path.string()},
        {"output_dir", output_dir.string()},
        {"backends",
         {{"llm",
           {{"kind", llm.kind},
            {"base_url", llm.http.base_url},
            {"timeout_ms", llm.http.timeout_ms},
            {"max_retries", llm.http.max_retries},
            {"backoff_initial_ms", llm.http.backoff_initial_ms},
            {"max_inflight", llm.http.max_inflight},
            {"token_env", llm.http.token_env}}},
          {"embedding",
           {{"kind", embedding.kind},
            {"dim", embedding.dim},
            {"base_url", embedding.http.base_url},
            {"timeout_ms", embedding.http.timeout_ms},
            {"max_retries", embedding.http.max_retries}}},
          {"encoder",
           {{"kind", encoder.kind},
            {"vocab_buckets", encoder.toy.vocab_buckets},
            {"d_model", encoder.toy.d_model},
            {"max_len", encoder.toy.max_len},
            {"init_seed", encoder.toy.init_seed},
            {"base_url", encoder.remote.base_url},
            {"timeout_ms", encoder.remote.timeout_ms}}}}},
        {"prompts",
         {{"generation_template", prompts.generation_template.string()},
          {"classification_template", prompts.classification_template.string()}}},
        {"pipeline",
         {{"n_seeds", pipeline.n_seeds},
          {"k_candidates", pipeline.k_candidates},
          {"t", pipeline.t},
          {"m", pipeline.m},
          {"min_negatives", pipeline.min_negatives},
          {"min_positive_score", pipeline.min_positive_score},
          {"max_tokens", pipeline.max_tokens},
          {"tokenizer", pipeline.tokenizer_spec},
          {"max_query_tokens", pipeline.max_query_tokens},
          {"dedupe", pipeline.dedupe},
          {"label_yes", pipeline.labels.yes},
          {"label_no", pipeline.labels.no}}},
        {"training",
         {{"epochs", training.epochs},
          {"batch_size", training.batch_size},
          {"grad_accum_steps", training.grad_accum_steps},
          {"learning_rate", training.learning_rate},
          {"rng_seed", training.rng_seed}}},
        {"eval",
         {{"k", eval.k},
          {"max_pool", eval.max_pool},
          {"test_size", eval.test_size},
          {"out_domain_pools", eval.out_domain_pools.string()},
          {"out_domain_label_source", eval.out_domain_label_source}}},
        {"ablation", {{"sizes", ablation.sizes}}}};
}

void RunConfig::validate(bool check_paths) const {
    if (corpus_path.empty()) {
        throw ConfigError("config: corpus_path is required");
    }
    if (output_dir.empty()) {
        throw ConfigError("config: output_dir is required");
    }
    if (check_paths && !std::filesystem::exists(corpus_path)) {
        throw ConfigError("config: corpus_path does not exist: " + corpus_path.string());
    }
    for (const auto& p : {prompts.generation_template, prompts.classification_template}) {
        if (check_paths && !p.empty() && !std::filesystem::exists(p)) {
            throw ConfigError("config: prompt template does not exist: " + p.string());
        }
    }
    if (check_paths && !eval.out_domain_pools.empty() &&
        !std::filesystem::exists(eval.out_domain_pools)) {
        throw ConfigError("config: out_domain_pools does not exist: " +
                          eval.out_domain_pools.string());
    }
    if (llm.kind != "mock" && llm.kind != "http") {
        throw ConfigError("config: llm backend kind must be mock or http");
    }
    if (llm.kind == "http" && llm.http.base_url.empty()) {
        throw ConfigError("config: llm http backend requires base_url");
    }
    if (embedding.kind != "mock" && embedding.kind != "http") {
        throw ConfigError("config: embedding backend kind must be mock or http");
    }
    if (embedding.kind == "http" && embedding.http.base_url.empty()) {
        throw ConfigError("config: embedding http backend requires base_url");
    }
    if (embedding.dim == 0) {
        throw ConfigError("config: embedding dim must be positive");
    }
    if (encoder.kind != "toy" && encoder.kind != "remote") {
        throw ConfigError("config: encoder kind must be toy or remote");
    }
    if (encoder.kind == "remote" && encoder.remote.base_url.empty()) {
        throw ConfigError("config: remote encoder requires base_url");
    }
    if (!(pipeline.t > 0.0 && pipeline.t < 1.0)) {
        throw ConfigError("config: pipeline.t must lie in (0, 1)");
    }
    if (pipeline.k_candidates == 0 || pipeline.m == 0 || pipeline.max_tokens == 0 ||
        pipeline.max_query_tokens == 0) {
        throw ConfigError("config: pipeline sizes must be positive");
    }
    if (!(pipeline.min_positive_score >= 0.0 && pipeline.min_positive_score <= 1.0)) {
        throw ConfigError("config: pipeline.min_positive_score must lie in [0, 1]");
    }
    if (!TokenizerRegistry::instance().has(pipeline.tokenizer_spec)) {
        throw ConfigError("config: unknown tokenizer spec: " + pipeline.tokenizer_spec);
    }
    if (pipeline.labels.yes.empty() || pipeline.labels.no.empty() ||
        pipeline.labels.yes == pipeline.labels.no) {
        throw ConfigError("config: relevance labels must be two distinct non-empty strings");
    }
    if (training.batch_size == 0 || training.grad_accum_steps == 0) {
        throw ConfigError("config: batch_size and grad_accum_steps must be positive");
    }
    if (!std::isfinite(training.learning_rate) || training.learning_rate < 0.0) {
        throw ConfigError("config: learning_rate must be finite and >= 0");
    }
    if (eval.k == 0 || eval.max_pool == 0) {
        throw ConfigError("config: eval.k and eval.max_pool must be positive");
    }
    if (eval.out_domain_label_source != "native" && eval.out_domain_label_source != "rescored") {
        throw ConfigError("config: out_domain_label_source must be native or rescored");
    }
    for (std::size_t i = 1; i < ablation.sizes.size(); ++i) {
        if (ablation.sizes[i] <= ablation.sizes[i - 1]) {
            throw ConfigError("config: ablation sizes must be strictly increasing");
        }
    }
    if (!ablation.sizes.empty() && ablation.sizes.front() == 0) {
        throw ConfigError("config: ablation sizes must be positive");
    }
}

std::string RunConfig::fingerprint() const {
    return util::to_hex(util::fnv1a64(to_json().dump()));
}

void RunConfig::force_mock_backends() {
    llm.kind = "mock";
    embedding.kind = "mock";
    encoder.kind = "toy";
}

std::unique_ptr<LlmBackend> RunConfig::make_llm_backend() const {
    if (llm.kind == "mock") {
        return std::make_unique<MockLlmBackend>();
    }
    return std::make_unique<HttpLlmBackend>(llm.http);
}

std::unique_ptr<EmbeddingBackend> RunConfig::make_embedding_backend() const {
    if (embedding.kind == "mock") {
        return std::make_unique<MockEmbeddingBackend>(embedding.dim);
    }
    HttpEmbeddingConfig http = embedding.http;
    http.dim = embedding.dim;
    return std::make_unique<HttpEmbeddingBackend>(http);
}

std::shared_ptr<SequenceEncoder> RunConfig::make_sequence_encoder() const {
    if (encoder.kind == "toy") {
        return std::make_shared<ToyEncoder>(encoder.toy);
    }
    return std::make_shared<RemoteEncoder>(encoder.remote);
}

PromptTemplate RunConfig::generation_template() const {
    return prompts.generation_template.empty() ? default_generation_template()
                                               : load_prompt_template(prompts.generation_template);
}

PromptTemplate RunConfig::classification_template() const {
    return prompts.classification_template.empty()
               ? default_classification_template()
               : load_prompt_template(prompts.classification_template);
}

std::uint64_t RunConfig::stage_seed(std::string_view stage) const {
    return util::derive_seed(training.rng_seed, stage);
}

}  // namespace synthrank
