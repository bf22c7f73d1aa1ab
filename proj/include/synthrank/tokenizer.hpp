// Copyright (C) 2026 the synthrank authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>

namespace synthrank {

using TokenCounter = std::function<std::size_t(std::string_view)>;

/// Registry of named token-counting rules. "whitespace" is built in and is
/// the default everywhere; a model-faithful tokenizer can be registered at
/// startup and selected through configuration.
class TokenizerRegistry {
public:
    static TokenizerRegistry& instance();

    void register_spec(const std::string& name, TokenCounter counter);
    bool has(const std::string& name) const;

    /// Throws ConfigError for an unknown spec.
    std::size_t count(const std::string& spec, std::string_view text) const;

private:
    TokenizerRegistry();

    struct Impl;
    Impl* impl_;
};

/// Token count of `text` under the named spec; 0 only for empty or
/// whitespace-only input under the whitespace rule.
std::size_t count_tokens(std::string_view text, const std::string& tokenizer_spec);

inline constexpr const char* kDefaultTokenizerSpec = "whitespace";

}  // namespace synthrank
