// Copyright (C) 2026 the synthrank authors
// SPDX-License-Identifier: Apache-2.0

#include "synthrank/tokenizer.hpp"

#include <map>
#include <mutex>

#include "synthrank/errors.hpp"
#include "synthrank/util.hpp"

namespace synthrank {

struct TokenizerRegistry::Impl {
    mutable std::mutex mutex;
    std::map<std::string, TokenCounter> specs;
};

TokenizerRegistry::TokenizerRegistry() : impl_(new Impl) {
    impl_->specs[kDefaultTokenizerSpec] = [](std::string_view text) {
        return util::split_whitespace(text).size();
    };
}

TokenizerRegistry& TokenizerRegistry::instance() {
    static TokenizerRegistry registry;
    return registry;
}

void TokenizerRegistry::register_spec(const std::string& name, TokenCounter counter) {
    std::lock_guard lock(impl_->mutex);
    impl_->specs[name] = std::move(counter);
}

bool TokenizerRegistry::has(const std::string& name) const {
    std::lock_guard lock(impl_->mutex);
    return impl_->specs.count(name) > 0;
}

std::size_t TokenizerRegistry::count(const std::string& spec, std::string_view text) const {
    TokenCounter counter;
    {
        std::lock_guard lock(impl_->mutex);
        auto it = impl_->specs.find(spec);
        if (it == impl_->specs.end()) {
            throw ConfigError("unknown tokenizer spec: " + spec);
        }
        counter = it->second;
    }
    return counter(text);
}

std::size_t count_tokens(std::string_view text, const std::string& tokenizer_spec) {
    return TokenizerRegistry::instance().count(tokenizer_spec, text);
}

}  // namespace synthrank
