// Copyright (C) 2026 the synthrank authors
// SPDX-License-Identifier: Apache-2.0

#include "synthrank/cross_encoder.hpp"

#include <cmath>
#include <random>

#include "synthrank/errors.hpp"
#include "synthrank/util.hpp"

namespace synthrank {

CrossEncoderModel::CrossEncoderModel(std::shared_ptr<SequenceEncoder> encoder,
                                     std::uint64_t head_init_seed)
    : encoder_(std::move(encoder)) {
    if (!encoder_) {
        throw ArgumentError("CrossEncoderModel: encoder must not be null");
    }
    const std::size_t d = encoder_->d_model();
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    std::mt19937_64 rng(util::derive_seed(head_init_seed, "score-head-init"));
    head_.resize(d);
    for (double& w : head_) {
        w = util::uniform_real(rng, -scale, scale);
    }
}

CrossEncoderModel::CrossEncoderModel(std::shared_ptr<SequenceEncoder> encoder,
                                     std::vector<double> head)
    : encoder_(std::move(encoder)), head_(std::move(head)) {
    if (!encoder_) {
        throw ArgumentError("CrossEncoderModel: encoder must not be null");
    }
    if (head_.size() != encoder_->d_model()) {
        throw ConfigError("CrossEncoderModel: head length " + std::to_string(head_.size()) +
                          " does not match encoder d_model " +
                          std::to_string(encoder_->d_model()));
    }
}

double CrossEncoderModel::score_pair(const std::string& query_text,
                                     const std::string& doc_text) const {
    if (query_text.empty() || doc_text.empty()) {
        throw ArgumentError("score_pair: query and document must be non-empty");
    }
    const std::vector<double> h = encoder_->encode(query_text, doc_text);
    double score = 0.0;
    for (std::size_t k = 0; k < head_.size(); ++k) {
        score += h[k] * head_[k];
    }
    return score;
}

}  // namespace synthrank
