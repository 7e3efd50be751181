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
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dermafuse/csv.hpp"
#include "dermafuse/errors.hpp"
#include "dermafuse/util.hpp"

namespace dermafuse {

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Three-way lesion class. MM and SK are the targets of the two binary
/// classifiers; NCN is the implicit "rest" class.
enum class Label { MM, SK, NCN };

/// The two binary classification tasks.
enum class Task { MM, SK };

enum class Sex { Male, Female };

inline const char* task_name(Task task) noexcept { return task == Task::MM ? "mm" : "sk"; }

inline const char* label_name(Label label) noexcept {
    switch (label) {
        case Label::MM: return "MM";
        case Label::SK: return "SK";
        case Label::NCN: return "NCN";
    }
    return "?";
}

struct GroundTruthRecord {
    std::string id;
    Label label = Label::NCN;
};

struct MetadataRecord {
    std::string id;
    std::optional<int> age;   // years; absent means unknown, never a sentinel
    std::optional<Sex> sex;
};

/// Per-lesion prediction scores for one task, keyed and iterated by id.
struct ScoreTable {
    Task task = Task::MM;
    std::map<std::string, double> entries;
};

struct ClassCounts {
    std::size_t mm = 0;
    std::size_t sk = 0;
    std::size_t ncn = 0;

    bool operator==(const ClassCounts&) const = default;
    std::size_t total() const noexcept { return mm + sk + ncn; }
};

struct ClassCountReport {
    ClassCounts counts;
    std::optional<ClassCounts> expected;
    bool match = true;  // true iff expected is absent or equals counts
};

/// Scores joined with ground truth, the common currency of evaluation.
struct AlignedPair {
    std::string id;
    double score = 0.0;
    Label label = Label::NCN;
};

struct AlignResult {
    std::vector<AlignedPair> pairs;             // sorted by id
    std::vector<std::string> missing_scores;    // truth ids with no score
    std::vector<std::string> unmatched_scores;  // score ids with no truth
};

// ---------------------------------------------------------------------------
// Loaders
// ---------------------------------------------------------------------------

namespace detail {

constexpr const char* kGroundTruthHeader = "image_id,melanoma,seborrheic_keratosis";
constexpr const char* kMetadataHeader = "image_id,age_approximate,sex";
constexpr const char* kScoreHeader = "image_id,score";

inline double parse_flag_cell(const std::string& cell, const CsvRow& row, const std::filesystem::path& path) {
    double value = 0.0;
    if (!parse_double(cell, value) || (value != 0.0 && value != 1.0)) {
        std::ostringstream msg;
        msg << path.string() << " line " << row.line << ": cell `" << cell << "` is not 0.0/1.0";
        throw Error(ErrorCode::UnparseableCell, msg.str());
    }
    return value;
}

inline void check_unique_id(std::set<std::string>& seen, const std::string& id, const CsvRow& row,
                            const std::filesystem::path& path) {
    if (!seen.insert(id).second) {
        std::ostringstream msg;
        msg << path.string() << " line " << row.line << ": duplicate id `" << id << "`";
        throw Error(ErrorCode::DuplicateId, msg.str());
    }
}

}  // namespace detail

/// Reads challenge-style ground truth (`image_id,melanoma,seborrheic_keratosis`
/// with 0.0/1.0 cells). Neither flag set means NCN; both set is an error.
inline std::vector<GroundTruthRecord> load_ground_truth(const std::filesystem::path& path) {
    const CsvContent csv = read_csv(path, detail::kGroundTruthHeader);
    std::vector<GroundTruthRecord> records;
    records.reserve(csv.rows.size());
    std::set<std::string> seen;
    for (const auto& row : csv.rows) {
        const std::string& id = row.fields[0];
        if (id.empty()) {
            std::ostringstream msg;
            msg << path.string() << " line " << row.line << ": empty image_id";
            throw Error(ErrorCode::UnparseableCell, msg.str());
        }
        detail::check_unique_id(seen, id, row, path);
        const double mm = detail::parse_flag_cell(row.fields[1], row, path);
        const double sk = detail::parse_flag_cell(row.fields[2], row, path);
        if (mm == 1.0 && sk == 1.0) {
            std::ostringstream msg;
            msg << path.string() << " line " << row.line << ": id `" << id
                << "` has both melanoma and seborrheic_keratosis set";
            throw Error(ErrorCode::BothFlagsSet, msg.str());
        }
        Label label = Label::NCN;
        if (mm == 1.0) label = Label::MM;
        else if (sk == 1.0) label = Label::SK;
        records.push_back({id, label});
    }
    return records;
}

/// Reads demographic metadata (`image_id,age_approximate,sex`). Empty cells
/// mean unknown and stay absent; no imputation.
inline std::vector<MetadataRecord> load_metadata(const std::filesystem::path& path) {
    const CsvContent csv = read_csv(path, detail::kMetadataHeader);
    std::vector<MetadataRecord> records;
    records.reserve(csv.rows.size());
    std::set<std::string> seen;
    for (const auto& row : csv.rows) {
        MetadataRecord rec;
        rec.id = row.fields[0];
        detail::check_unique_id(seen, rec.id, row, path);
        const std::string& age_cell = row.fields[1];
        if (!age_cell.empty()) {
            double age = 0.0;
            if (!parse_double(age_cell, age) || age != static_cast<double>(static_cast<long>(age))) {
                std::ostringstream msg;
                msg << path.string() << " line " << row.line << ": age `" << age_cell << "` is not an integer";
                throw Error(ErrorCode::UnparseableCell, msg.str());
            }
            if (age < 0) {
                std::ostringstream msg;
                msg << path.string() << " line " << row.line << ": negative age " << age_cell;
                throw Error(ErrorCode::NegativeAge, msg.str());
            }
            if (age > 130) {
                std::ostringstream msg;
                msg << path.string() << " line " << row.line << ": age " << age_cell << " exceeds 130";
                throw Error(ErrorCode::AgeOutOfRange, msg.str());
            }
            rec.age = static_cast<int>(age);
        }
        const std::string& sex_cell = row.fields[2];
        if (!sex_cell.empty()) {
            if (sex_cell == "male") rec.sex = Sex::Male;
            else if (sex_cell == "female") rec.sex = Sex::Female;
            else {
                std::ostringstream msg;
                msg << path.string() << " line " << row.line << ": unknown sex token `" << sex_cell << "`";
                throw Error(ErrorCode::UnknownSexToken, msg.str());
            }
        }
        records.push_back(std::move(rec));
    }
    return records;
}

/// Reads a score table (`image_id,score`, scores in [0,1]).
inline ScoreTable load_scores(const std::filesystem::path& path, Task task) {
    const CsvContent csv = read_csv(path, detail::kScoreHeader);
    ScoreTable table;
    table.task = task;
    for (const auto& row : csv.rows) {
        const std::string& id = row.fields[0];
        double score = 0.0;
        if (!parse_double(row.fields[1], score)) {
            std::ostringstream msg;
            msg << path.string() << " line " << row.line << ": score `" << row.fields[1] << "` is not a number";
            throw Error(ErrorCode::UnparseableCell, msg.str());
        }
        if (!(score >= 0.0 && score <= 1.0)) {
            std::ostringstream msg;
            msg << path.string() << " line " << row.line << ": score " << row.fields[1] << " outside [0,1]";
            throw Error(ErrorCode::ScoreOutOfRange, msg.str());
        }
        if (!table.entries.emplace(id, score).second) {
            std::ostringstream msg;
            msg << path.string() << " line " << row.line << ": duplicate id `" << id << "`";
            throw Error(ErrorCode::DuplicateId, msg.str());
        }
    }
    return table;
}

/// Writes a score table sorted by id, scores in shortest exact form, so that
/// load_scores(write_scores(t)) == t.
inline void write_scores(const ScoreTable& table, const std::filesystem::path& path) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(table.entries.size());
    for (const auto& [id, score] : table.entries) {
        rows.push_back({id, format_double(score)});
    }
    write_csv(path, detail::kScoreHeader, rows);
}

/// Tallies class counts; match is true iff expected (when given) equals them.
inline ClassCountReport validate_class_counts(const std::vector<GroundTruthRecord>& records,
                                              std::optional<ClassCounts> expected = std::nullopt) {
    ClassCountReport report;
    for (const auto& rec : records) {
        switch (rec.label) {
            case Label::MM: ++report.counts.mm; break;
            case Label::SK: ++report.counts.sk; break;
            case Label::NCN: ++report.counts.ncn; break;
        }
    }
    report.expected = expected;
    report.match = !expected || *expected == report.counts;
    return report;
}

/// Joins scores with ground truth on id. In strict mode a truth id with no
/// score is an error; otherwise both kinds of mismatch are reported back.
inline AlignResult align(const ScoreTable& scores, const std::vector<GroundTruthRecord>& truth,
                         bool strict = false) {
    std::map<std::string, Label> truth_by_id;
    for (const auto& rec : truth) {
        if (!truth_by_id.emplace(rec.id, rec.label).second) {
            throw Error(ErrorCode::DuplicateId, "duplicate id `" + rec.id + "` in ground truth");
        }
    }
    AlignResult result;
    for (const auto& [id, label] : truth_by_id) {
        auto it = scores.entries.find(id);
        if (it == scores.entries.end()) {
            result.missing_scores.push_back(id);
        } else {
            result.pairs.push_back({id, it->second, label});
        }
    }
    for (const auto& [id, score] : scores.entries) {
        if (!truth_by_id.count(id)) result.unmatched_scores.push_back(id);
    }
    if (strict && !result.missing_scores.empty()) {
        std::ostringstream msg;
        msg << result.missing_scores.size() << " truth id(s) with no score, first `"
            << result.missing_scores.front() << "`";
        throw Error(ErrorCode::MissingScores, msg.str());
    }
    return result;
}

}  // namespace dermafuse
