// Copyright 2026 The dermafuse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dermafuse/errors.hpp"

namespace dermafuse {

// Minimal strict CSV dialect: comma-separated, first row is the header,
// UTF-8, LF or CRLF accepted on read, LF emitted on write. Fields must not
// contain commas, quotes or newlines (identifiers and numbers never do).

struct CsvRow {
    std::vector<std::string> fields;
    std::size_t line;  // 1-based line number in the file, for error messages
};

struct CsvContent {
    std::vector<std::string> header;
    std::vector<CsvRow> rows;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

}  // namespace detail

inline CsvContent read_csv(const std::filesystem::path& path, const std::string& expected_header) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());

    CsvContent content;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!have_header) {
            if (line != expected_header) {
                throw Error(ErrorCode::MalformedHeader,
                            path.string() + ": expected header `" + expected_header + "`, got `" + line + "`");
            }
            content.header = detail::split_csv_line(line);
            have_header = true;
            continue;
        }
        if (line.empty()) continue;  // tolerate blank lines (e.g. trailing newline)
        CsvRow row{detail::split_csv_line(line), line_no};
        if (row.fields.size() != content.header.size()) {
            std::ostringstream msg;
            msg << path.string() << " line " << line_no << ": expected " << content.header.size()
                << " fields, got " << row.fields.size();
            throw Error(ErrorCode::UnparseableCell, msg.str());
        }
        content.rows.push_back(std::move(row));
    }
    if (!have_header) {
        throw Error(ErrorCode::MalformedHeader, path.string() + ": empty file, expected header `" + expected_header + "`");
    }
    return content;
}

inline void write_csv(const std::filesystem::path& path, const std::string& header,
                      const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    out << header << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << row[i];
        }
        out << '\n';
    }
    out.flush();
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace dermafuse
