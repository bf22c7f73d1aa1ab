// Copyright (C) 2026 the synthrank authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace synthrank {

/// Pluggable joint sequence encoder: maps a (query, document) pair to the
/// classification-position vector that the score head reads. Trainable
/// parameters are exposed as a flat span; frozen backends expose none.
class SequenceEncoder {
public:
    virtual ~SequenceEncoder() = default;

    virtual std::string encoder_id() const = 0;
    virtual std::size_t d_model() const = 0;

    /// Classification vector for the joint input. Deterministic given the
    /// current parameters.
    virtual std::vector<double> encode(const std::string& query,
                                       const std::string& document) const = 0;

    virtual std::span<double> params() = 0;
    virtual std::span<const double> params() const = 0;

    /// Accumulate d(objective)/d(params) into `grad` (same length as
    /// params()), given upstream = d(objective)/d(classification vector).
    virtual void accumulate_param_grad(const std::string& query, const std::string& document,
                                       std::span<const double> upstream,
                                       std::span<double> grad) const = 0;

    /// How many joint inputs had their document side truncated so far.
    virtual std::uint64_t truncation_count() const { return 0; }

    /// Enough to reconstruct the backend (used by checkpoints).
    virtual nlohmann::json encoder_config() const = 0;
};

struct ToyEncoderConfig {
    std::size_t vocab_buckets = 64;
    std::size_t d_model = 16;
    std::size_t max_len = 256;  // joint positions: CLS + query + SEP + document
    std::uint64_t init_seed = 1;
};

/// Deterministic trainable encoder for desk-scale runs: a hashed token
/// embedding table with two special rows (classification and separator
/// markers). The joint sequence is pooled per segment — mean over the
/// classification marker plus query tokens, and mean over the separator
/// marker plus document tokens — and the classification vector is the
/// elementwise product of the two pooled vectors, which gives the score
/// head access to query-document interaction as well as per-side priors.
/// Overlong joint inputs lose document-tail tokens, never query tokens.
class ToyEncoder : public SequenceEncoder {
public:
    explicit ToyEncoder(const ToyEncoderConfig& config);

    std::string encoder_id() const override;
    std::size_t d_model() const override { return config_.d_model; }
    std::vector<double> encode(const std::string& query,
                               const std::string& document) const override;
    std::span<double> params() override { return table_; }
    std::span<const double> params() const override { return table_; }
    void accumulate_param_grad(const std::string& query, const std::string& document,
                               std::span<const double> upstream,
                               std::span<double> grad) const override;
    std::uint64_t truncation_count() const override { return truncations_.load(); }
    nlohmann::json encoder_config() const override;

    const ToyEncoderConfig& config() const { return config_; }

private:
    struct Segments;
    Segments split_segments(const std::string& query, const std::string& document) const;

    ToyEncoderConfig config_;
    std::vector<double> table_;  // (vocab_buckets + 2) x d_model, row-major
    mutable std::atomic<std::uint64_t> truncations_{0};
};

struct RemoteEncoderConfig {
    std::string base_url;
    std::size_t d_model = 0;
    int timeout_ms = 30000;
    int max_retries = 3;
    std::string token_env = "SYNTHRANK_LLM_TOKEN";
};

/// Adapter for an externally served pretrained encoder:
/// POST /v1/encode {query, document} -> {vector:[...]}. The remote weights
/// are frozen — this backend exposes no trainable parameters, so training
/// updates only the score head.
class RemoteEncoder : public SequenceEncoder {
public:
    explicit RemoteEncoder(RemoteEncoderConfig config);
    ~RemoteEncoder() override;

    std::string encoder_id() const override;
    std::size_t d_model() const override;
    std::vector<double> encode(const std::string& query,
                               const std::string& document) const override;
    std::span<double> params() override { return {}; }
    std::span<const double> params() const override { return {}; }
    void accumulate_param_grad(const std::string&, const std::string&, std::span<const double>,
                               std::span<double>) const override {}
    nlohmann::json encoder_config() const override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Reconstruct an encoder from its encoder_config() JSON.
std::shared_ptr<SequenceEncoder> make_encoder(const nlohmann::json& config);

}  // namespace synthrank
