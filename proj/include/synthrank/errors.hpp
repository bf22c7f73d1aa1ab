// Copyright (C) 2026 the synthrank authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace synthrank {

/// Base class for all synthrank errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad configuration: unknown tokenizer spec, dimension mismatch between
/// backend and index, malformed config file, invalid parameter ranges.
struct ConfigError : Error {
    using Error::Error;
};

/// Caller violated an operation precondition.
struct ArgumentError : Error {
    using Error::Error;
};

/// Operation invoked against an object in the wrong state (empty index,
/// unresolved doc_id, missing artifact).
struct StateError : Error {
    using Error::Error;
};

/// Prompt template rendering failed (unbound placeholder).
struct TemplateError : Error {
    using Error::Error;
};

/// Corpus ingestion failed hard (duplicate doc_id, unreadable input).
struct IngestError : Error {
    using Error::Error;
};

/// LLM produced unusable output (empty or overlong generation).
struct GenerationError : Error {
    using Error::Error;
};

/// Training aborted (non-finite loss or gradient).
struct TrainingError : Error {
    using Error::Error;
};

/// Remote backend call failed. `retryable` distinguishes transport-level
/// failures (worth retrying) from protocol-level rejections.
struct GatewayError : Error {
    bool retryable;
    explicit GatewayError(const std::string& what, bool retryable_ = true)
        : Error(what), retryable(retryable_) {}
};

/// Backend cannot provide a required capability (e.g. label-restricted
/// logits). Never retryable; the pipeline must fail loudly.
struct CapabilityError : GatewayError {
    explicit CapabilityError(const std::string& what) : GatewayError(what, false) {}
};

}  // namespace synthrank
