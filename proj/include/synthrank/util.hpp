// Copyright (C) 2026 the synthrank authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace synthrank::util {

/// FNV-1a 64-bit hash. Used for token bucketing and artifact fingerprints;
/// stable across platforms by construction.
std::uint64_t fnv1a64(std::string_view data);

/// splitmix64 mixing step, used to derive decorrelated sub-seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Deterministic per-stage seed: mixes a base seed with a stage tag.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag);

/// Unbiased draw from [0, bound) via rejection sampling. bound must be > 0.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound);

/// Uniform double in [lo, hi) built from the raw 64-bit stream, so results
/// do not depend on the standard library's distribution implementation.
double uniform_real(std::mt19937_64& rng, double lo, double hi);

/// Split on runs of ASCII whitespace. Empty input yields an empty vector.
std::vector<std::string> split_whitespace(std::string_view text);

/// Lowercased alphanumeric runs; the shared lexical tokenization used by the
/// mock backends and the toy encoder.
std::vector<std::string> lex_tokens(std::string_view text);

/// Jaccard similarity between the word sets of two token lists.
/// Returns 0 when both sets are empty.
double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b);

/// Collapse whitespace runs to single spaces and trim the ends.
std::string normalize_whitespace(std::string_view text);

std::string to_hex(std::uint64_t value);

std::string read_file(const std::filesystem::path& path);

/// Write via a temp file in the same directory, then rename. A failed write
/// never leaves a truncated artifact behind.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace synthrank::util
