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

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dermafuse/calibration.hpp"
#include "dermafuse/dataset.hpp"
#include "dermafuse/errors.hpp"
#include "dermafuse/util.hpp"

namespace dermafuse {

/// Age gate applied to SK scores only. Missing metadata never penalizes a
/// sample; sex is parsed and carried but unused until a sex-specific rule
/// exists (use_sex is reserved).
struct GateConfig {
    bool enabled = false;
    int age_cutoff = 20;          // years
    double ceiling_ratio = 0.99;  // cap factor relative to c_sk, in (0,1]
    bool use_sex = false;
};

inline void validate_gate(const GateConfig& gate) {
    if (!(gate.ceiling_ratio > 0.0 && gate.ceiling_ratio <= 1.0)) {
        throw Error(ErrorCode::BadConfig, "gate ceiling ratio must lie in (0,1]");
    }
    if (gate.age_cutoff < 0) throw Error(ErrorCode::BadConfig, "gate age cutoff must be >= 0");
}

/// Complementary fusion of the SK classifier into the MM score:
///
///   F_MM = max{0, F~_MM - C~_MM - alpha * (F_SK - C_SK)}   if F_SK > C_SK
///   F_MM = max{0, F~_MM - C~_MM}                           otherwise
///
/// The two branches agree at F_SK = C_SK, so the output is continuous there.
/// Output lies in [0, 1 - C~_MM].
inline double fuse_mm_score(double f_mm_tilde, double f_sk, const Calibration& calib) {
    double adjusted = f_mm_tilde - calib.c_mm_tilde;
    if (f_sk > calib.c_sk) adjusted -= calib.alpha * (f_sk - calib.c_sk);
    return std::max(0.0, adjusted);
}

/// Caps the SK score of young patients just below the SK decision threshold
/// (min(f_sk, ceiling_ratio * c_sk)). Never increases a score; disabled gate,
/// missing age, and age >= cutoff all pass the score through unchanged.
inline double gate_sk_score(double f_sk, const std::optional<MetadataRecord>& meta,
                            const Calibration& calib, const GateConfig& gate) {
    if (!gate.enabled || !meta || !meta->age || *meta->age >= gate.age_cutoff) return f_sk;
    return std::min(f_sk, gate.ceiling_ratio * calib.c_sk);
}

struct FusedScores {
    ScoreTable mm;  // fused MM scores
    ScoreTable sk;  // gated SK scores
    Calibration calibration;
};

/// Gates SK scores, then fuses them into the MM scores, per id. Both input
/// tables must cover the same id set. Deterministic regardless of workers.
inline FusedScores run_pipeline(const ScoreTable& mm_base, const ScoreTable& sk_base,
                                const Calibration& calib, const std::vector<MetadataRecord>& metadata,
                                const GateConfig& gate, unsigned workers = 1) {
    validate_gate(gate);
    if (mm_base.entries.size() != sk_base.entries.size() ||
        !std::equal(mm_base.entries.begin(), mm_base.entries.end(), sk_base.entries.begin(),
                    [](const auto& a, const auto& b) { return a.first == b.first; })) {
        throw Error(ErrorCode::IdSetMismatch, "MM and SK score tables cover different ids");
    }

    std::map<std::string, MetadataRecord> meta_by_id;
    for (const auto& rec : metadata) meta_by_id.emplace(rec.id, rec);

    struct Row {
        const std::string* id;
        double mm_in, sk_in;
        const MetadataRecord* meta;
        double mm_out, sk_out;
    };
    std::vector<Row> rows;
    rows.reserve(mm_base.entries.size());
    auto sk_it = sk_base.entries.begin();
    for (auto mm_it = mm_base.entries.begin(); mm_it != mm_base.entries.end(); ++mm_it, ++sk_it) {
        auto meta_it = meta_by_id.find(mm_it->first);
        rows.push_back({&mm_it->first, mm_it->second, sk_it->second,
                        meta_it == meta_by_id.end() ? nullptr : &meta_it->second, 0.0, 0.0});
    }

    parallel_for(rows.size(), workers, [&](std::size_t i) {
        Row& row = rows[i];
        const std::optional<MetadataRecord> meta =
            row.meta ? std::optional<MetadataRecord>(*row.meta) : std::nullopt;
        row.sk_out = gate_sk_score(row.sk_in, meta, calib, gate);
        row.mm_out = fuse_mm_score(row.mm_in, row.sk_out, calib);
    });

    FusedScores fused;
    fused.mm.task = Task::MM;
    fused.sk.task = Task::SK;
    fused.calibration = calib;
    for (const Row& row : rows) {
        fused.mm.entries.emplace(*row.id, row.mm_out);
        fused.sk.entries.emplace(*row.id, row.sk_out);
    }
    return fused;
}

}  // namespace dermafuse
