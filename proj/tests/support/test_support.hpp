// Copyright (C) 2026 the synthrank authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared fixtures for the unit and acceptance suites: a deterministic
// desk-scale corpus with two document populations (short single-topic
// passages whose seeded queries mine cleanly, and longer boilerplate
// passages that produce weak positives and duplicate queries), plus config
// and temp-dir helpers.

#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "synthrank/config.hpp"
#include "synthrank/corpus.hpp"
#include "synthrank/jsonl.hpp"
#include "synthrank/metrics.hpp"

namespace synthtest {

struct SyntheticCorpusSpec {
    std::size_t topic_docs = 170;
    std::size_t distractor_docs = 30;
};

inline std::string topic_doc_text(std::size_t i) {
    const std::string n = std::to_string(i);
    return "alpha" + n + " beta" + n + " gamma" + n + " delta" + n + " epsilon" + n + ".";
}

inline std::vector<synthrank::CorpusRecord> make_synthetic_corpus(
    const SyntheticCorpusSpec& spec = {}) {
    static const std::vector<std::string> filler = {
        "lorem",      "ipsum", "dolor",   "amet",       "consectetur", "adipiscing",
        "elit",       "sed",   "eiusmod", "incididunt", "labore",      "magna"};
    std::vector<synthrank::CorpusRecord> records;
    records.reserve(spec.topic_docs + spec.distractor_docs);
    char id[32];
    for (std::size_t i = 0; i < spec.topic_docs; ++i) {
        std::snprintf(id, sizeof id, "doc-%04zu", i);
        records.push_back({id, topic_doc_text(i), "topic"});
    }
    for (std::size_t j = 0; j < spec.distractor_docs; ++j) {
        std::snprintf(id, sizeof id, "noise-%04zu", j);
        std::string text;
        for (std::size_t w = 0; w < 18; ++w) {
            if (!text.empty()) {
                text.push_back(' ');
            }
            text += filler[(j + w) % filler.size()];
        }
        text.push_back('.');
        records.push_back({id, std::move(text), "distractor"});
    }
    return records;
}

inline void write_corpus_file(const std::vector<synthrank::CorpusRecord>& records,
                              const std::filesystem::path& path) {
    std::vector<nlohmann::json> rows;
    rows.reserve(records.size());
    for (const auto& r : records) {
        nlohmann::json row{{"doc_id", r.doc_id}, {"text", r.text}};
        if (!r.source_tag.empty()) {
            row["source_tag"] = r.source_tag;
        }
        rows.push_back(std::move(row));
    }
    synthrank::jsonl::write(path, rows);
}

/// Out-domain evaluation pools over a vocabulary disjoint from the synthetic
/// corpus, with native labels: one relevant passage per query plus
/// same-population non-relevant passages.
inline std::vector<synthrank::EvalQuery> make_out_domain_pools(std::size_t n_queries,
                                                               std::size_t pool_size) {
    std::vector<synthrank::EvalQuery> pools;
    pools.reserve(n_queries);
    char buf[32];
    for (std::size_t i = 0; i < n_queries; ++i) {
        synthrank::EvalQuery eq;
        std::snprintf(buf, sizeof buf, "oq-%03zu", i);
        eq.query_id = buf;
        const std::string n = std::to_string(i);
        eq.query_text = "what is omega" + n + " sigma" + n + "?";
        for (std::size_t p = 0; p < pool_size; ++p) {
            const std::size_t topic = (i + p) % (n_queries + pool_size);
            const std::string t = std::to_string(topic);
            synthrank::EvalPoolDoc doc;
            std::snprintf(buf, sizeof buf, "od-%03zu-%03zu", i, p);
            doc.doc_id = buf;
            doc.text = "omega" + t + " sigma" + t + " kappa" + t + " zeta" + t + ".";
            doc.relevant = topic == i;
            eq.pool.push_back(std::move(doc));
        }
        pools.push_back(std::move(eq));
    }
    return pools;
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("synthrank-" + tag + "-" + std::to_string(::getpid()) + "-" +
                 std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Desk-scale mock configuration shared by the pipeline tests and the
/// acceptance suite.
inline synthrank::RunConfig make_mock_config(const std::filesystem::path& corpus_path,
                                             const std::filesystem::path& out_dir) {
    synthrank::RunConfig cfg;
    cfg.corpus_path = corpus_path;
    cfg.output_dir = out_dir;
    cfg.llm.kind = "mock";
    cfg.embedding.kind = "mock";
    cfg.embedding.dim = 64;
    cfg.encoder.kind = "toy";
    cfg.encoder.toy = {64, 16, 256, 7};
    cfg.pipeline.n_seeds = 150;
    cfg.pipeline.k_candidates = 30;
    cfg.pipeline.t = 0.5;
    cfg.pipeline.m = 4;
    cfg.pipeline.min_negatives = 4;
    cfg.pipeline.min_positive_score = 0.5;
    cfg.pipeline.max_tokens = 512;
    cfg.training.epochs = 5;
    cfg.training.batch_size = 2;
    cfg.training.grad_accum_steps = 2;
    cfg.training.learning_rate = 0.05;
    cfg.training.rng_seed = 42;
    cfg.eval.k = 10;
    cfg.eval.max_pool = 30;
    cfg.eval.test_size = 50;
    return cfg;
}

}  // namespace synthtest
