// Copyright (C) 2026 the synthrank authors
// SPDX-License-Identifier: Apache-2.0

#include "synthrank/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "synthrank/errors.hpp"
#include "synthrank/util.hpp"

namespace synthrank::jsonl {

void for_each(const std::filesystem::path& path,
              const std::function<void(const nlohmann::json&, std::size_t)>& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw StateError("cannot open JSONL file: " + path.string());
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        nlohmann::json row = nlohmann::json::parse(line, nullptr, false);
        if (row.is_discarded()) {
            throw IngestError("malformed JSON at " + path.string() + ":" + std::to_string(line_no));
        }
        fn(row, line_no);
    }
}

std::vector<nlohmann::json> read(const std::filesystem::path& path) {
    std::vector<nlohmann::json> rows;
    for_each(path, [&](const nlohmann::json& row, std::size_t) { rows.push_back(row); });
    return rows;
}

std::string to_line(const nlohmann::json& row) {
    // nlohmann keeps object keys sorted, so dump() is canonical.
    return row.dump();
}

void write(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows) {
    std::ostringstream out;
    for (const auto& row : rows) {
        out << to_line(row) << '\n';
    }
    util::write_file_atomic(path, out.str());
}

}  // namespace synthrank::jsonl
