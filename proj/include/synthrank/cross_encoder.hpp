// Copyright (C) 2026 the synthrank authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "synthrank/encoder.hpp"

namespace synthrank {

/// The trainable scorer: a sequence encoder plus a linear score head over the
/// classification vector. score(q, d) = dot(cls(q, d), W_s).
class CrossEncoderModel {
public:
    /// Head weights drawn from a zero-mean uniform at scale 1/sqrt(d_model).
    CrossEncoderModel(std::shared_ptr<SequenceEncoder> encoder, std::uint64_t head_init_seed);

    /// Reconstruct from explicit head weights (checkpoint load).
    CrossEncoderModel(std::shared_ptr<SequenceEncoder> encoder, std::vector<double> head);

    /// Unbounded real score; deterministic given (model state, q, d).
    double score_pair(const std::string& query_text, const std::string& doc_text) const;

    std::size_t d_model() const { return encoder_->d_model(); }
    SequenceEncoder& encoder() { return *encoder_; }
    const SequenceEncoder& encoder() const { return *encoder_; }
    std::shared_ptr<SequenceEncoder> encoder_ptr() const { return encoder_; }

    std::span<double> head() { return head_; }
    std::span<const double> head() const { return head_; }

    /// Total trainable parameters: encoder params followed by the head.
    std::size_t num_params() const { return encoder_->params().size() + head_.size(); }

private:
    std::shared_ptr<SequenceEncoder> encoder_;
    std::vector<double> head_;  // W_s
};

}  // namespace synthrank
