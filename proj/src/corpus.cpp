// Copyright (C) 2026 the synthrank authors
// SPDX-License-Identifier: Apache-2.0

#include "synthrank/corpus.hpp"

#include <random>

#include <json.hpp>

#include "synthrank/errors.hpp"
#include "synthrank/jsonl.hpp"
#include "synthrank/util.hpp"

namespace synthrank {

Corpus::Corpus(std::string tokenizer_spec, std::size_t max_tokens)
    : tokenizer_spec_(std::move(tokenizer_spec)), max_tokens_(max_tokens) {}

const Document* Corpus::find(const std::string& doc_id) const {
    auto it = index_by_id_.find(doc_id);
    return it == index_by_id_.end() ? nullptr : &documents_[it->second];
}

void Corpus::add(Document doc) {
    auto [it, inserted] = index_by_id_.emplace(doc.doc_id, documents_.size());
    if (!inserted) {
        throw IngestError("duplicate doc_id: " + doc.doc_id);
    }
    documents_.push_back(std::move(doc));
}

bool Corpus::operator==(const Corpus& other) const {
    return tokenizer_spec_ == other.tokenizer_spec_ && max_tokens_ == other.max_tokens_ &&
           documents_ == other.documents_;
}

namespace {

bool ingest_one(Corpus& corpus, const CorpusRecord& record, std::size_t max_tokens,
                const std::string& tokenizer_spec, IngestStats& stats) {
    if (util::normalize_whitespace(record.text).empty()) {
        ++stats.skipped_empty;
        return false;
    }
    const std::size_t tokens = count_tokens(record.text, tokenizer_spec);
    if (tokens > max_tokens) {
        ++stats.skipped_overlong;
        return false;
    }
    corpus.add(Document{record.doc_id, record.text, tokens, record.source_tag});
    return true;
}

}  // namespace

std::pair<Corpus, IngestStats> ingest_corpus(std::span<const CorpusRecord> records,
                                             std::size_t max_tokens,
                                             const std::string& tokenizer_spec) {
    if (max_tokens == 0) {
        throw ArgumentError("ingest_corpus: max_tokens must be positive");
    }
    Corpus corpus(tokenizer_spec, max_tokens);
    IngestStats stats;
    for (const auto& record : records) {
        ingest_one(corpus, record, max_tokens, tokenizer_spec, stats);
    }
    return {std::move(corpus), stats};
}

std::pair<Corpus, IngestStats> ingest_corpus_jsonl(const std::filesystem::path& path,
                                                   std::size_t max_tokens,
                                                   const std::string& tokenizer_spec) {
    if (max_tokens == 0) {
        throw ArgumentError("ingest_corpus_jsonl: max_tokens must be positive");
    }
    Corpus corpus(tokenizer_spec, max_tokens);
    IngestStats stats;
    jsonl::for_each(path, [&](const nlohmann::json& row, std::size_t line_no) {
        if (!row.is_object() || !row.contains("doc_id") || !row.contains("text")) {
            throw IngestError("corpus record missing doc_id/text at " + path.string() + ":" +
                              std::to_string(line_no));
        }
        CorpusRecord record;
        record.doc_id = row.at("doc_id").get<std::string>();
        record.text = row.at("text").get<std::string>();
        record.source_tag = row.value("source_tag", std::string{});
        ingest_one(corpus, record, max_tokens, tokenizer_spec, stats);
    });
    return {std::move(corpus), stats};
}

void write_corpus_jsonl(const Corpus& corpus, const std::filesystem::path& path) {
    std::vector<nlohmann::json> rows;
    rows.reserve(corpus.size());
    for (const auto& doc : corpus) {
        nlohmann::json row{{"doc_id", doc.doc_id}, {"text", doc.text}};
        if (!doc.source_tag.empty()) {
            row["source_tag"] = doc.source_tag;
        }
        rows.push_back(std::move(row));
    }
    jsonl::write(path, rows);
}

std::vector<Document> sample_seed_documents(const Corpus& corpus, std::size_t n,
                                            std::uint64_t rng_seed) {
    if (n > corpus.size()) {
        throw ArgumentError("sample_seed_documents: n (" + std::to_string(n) +
                            ") exceeds corpus size (" + std::to_string(corpus.size()) + ")");
    }
    std::vector<std::size_t> order(corpus.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    // Partial Fisher-Yates over the first n slots.
    std::mt19937_64 rng(util::splitmix64(rng_seed));
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = i + util::uniform_below(rng, order.size() - i);
        std::swap(order[i], order[j]);
    }
    std::vector<Document> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(corpus.at(order[i]));
    }
    return out;
}

}  // namespace synthrank
