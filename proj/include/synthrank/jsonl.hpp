// Copyright (C) 2026 the synthrank authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace synthrank::jsonl {

/// Parse a JSON Lines file; blank lines are skipped. Throws IngestError with
/// the offending line number on malformed JSON.
std::vector<nlohmann::json> read(const std::filesystem::path& path);

/// Visit each parsed line without materializing the whole file.
void for_each(const std::filesystem::path& path,
              const std::function<void(const nlohmann::json&, std::size_t line_no)>& fn);

/// Serialize one object per line (compact, sorted keys, LF endings) and write
/// atomically. The byte output is a pure function of the values.
void write(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows);

std::string to_line(const nlohmann::json& row);

}  // namespace synthrank::jsonl
