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
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dermafuse/dataset.hpp"
#include "dermafuse/errors.hpp"
#include "dermafuse/util.hpp"

namespace dermafuse {

/// Synthetic score generator standing in for a trained base classifier.
/// Positives draw from a Beta(a,1) distribution with mean 0.5+pos_strength/2
/// (a = (1+s)/(1-s)); negatives draw from the mirror distribution. For the
/// MM task, SK-labeled negatives receive an additive confuser_bias, clipped
/// to [0,1], emulating MM/SK confusion. Draws are keyed by (seed, task, id),
/// so tables are reproducible and independent of record order.
struct SyntheticOracleSpec {
    Task task = Task::MM;
    std::uint64_t seed = 0;
    double pos_strength = 0.8;   // in (0,1]; 1 means perfectly separated
    double confuser_bias = 0.0;  // in [0,1); only meaningful for task MM
};

struct ProviderSpec {
    enum class Kind { File, SyntheticOracle };
    Kind kind = Kind::File;
    std::filesystem::path path;    // for Kind::File
    SyntheticOracleSpec synthetic;  // for Kind::SyntheticOracle
};

struct EnsembleConfig {
    enum class Aggregation { Mean };
    std::vector<ProviderSpec> members;
    Aggregation aggregation = Aggregation::Mean;
};

inline void validate_oracle_spec(const SyntheticOracleSpec& spec) {
    if (!(spec.pos_strength > 0.0 && spec.pos_strength <= 1.0)) {
        throw Error(ErrorCode::BadConfig, "pos_strength must lie in (0,1]");
    }
    if (!(spec.confuser_bias >= 0.0 && spec.confuser_bias < 1.0)) {
        throw Error(ErrorCode::BadConfig, "confuser_bias must lie in [0,1)");
    }
}

inline ScoreTable synthetic_oracle_scores(const std::vector<GroundTruthRecord>& truth,
                                          const SyntheticOracleSpec& spec) {
    validate_oracle_spec(spec);
    const Label target = spec.task == Task::MM ? Label::MM : Label::SK;
    const std::uint64_t task_salt = spec.task == Task::MM ? 0x6d6dull : 0x736bull;

    ScoreTable table;
    table.task = spec.task;
    for (const auto& rec : truth) {
        std::uint64_t state = spec.seed ^ task_salt ^ fnv1a64(rec.id);
        const double u = unit_double(splitmix64(state));
        const bool positive = rec.label == target;
        double score;
        if (spec.pos_strength == 1.0) {
            score = positive ? 1.0 : 0.0;
        } else {
            const double a = (1.0 + spec.pos_strength) / (1.0 - spec.pos_strength);
            const double draw = std::pow(u, 1.0 / a);  // Beta(a,1) by inverse transform
            score = positive ? draw : 1.0 - draw;
        }
        if (spec.task == Task::MM && rec.label == Label::SK) {
            score = std::min(1.0, score + spec.confuser_bias);
        }
        if (!table.entries.emplace(rec.id, score).second) {
            throw Error(ErrorCode::DuplicateId, "duplicate id `" + rec.id + "` in ground truth");
        }
    }
    return table;
}

/// Arithmetic mean across member tables, accumulated per id in ascending-id,
/// ascending-member order with compensated summation. All members must share
/// the task and the exact id set.
inline ScoreTable aggregate_mean(const std::vector<ScoreTable>& tables) {
    if (tables.empty()) throw Error(ErrorCode::BadConfig, "aggregate_mean needs at least one table");
    const ScoreTable& first = tables.front();
    for (const auto& t : tables) {
        if (t.task != first.task) throw Error(ErrorCode::TaskMismatch, "member tables disagree on task");
        if (t.entries.size() != first.entries.size() ||
            !std::equal(t.entries.begin(), t.entries.end(), first.entries.begin(),
                        [](const auto& a, const auto& b) { return a.first == b.first; })) {
            throw Error(ErrorCode::IdSetMismatch, "member tables cover different ids");
        }
    }
    ScoreTable out;
    out.task = first.task;
    for (const auto& [id, unused] : first.entries) {
        KahanSum sum;
        for (const auto& t : tables) sum.add(t.entries.at(id));
        out.entries.emplace(id, sum.value() / static_cast<double>(tables.size()));
    }
    return out;
}

/// Dispatches a provider declaration to a score CSV or the synthetic oracle.
inline ScoreTable resolve_provider(const ProviderSpec& spec, Task task,
                                   const std::vector<GroundTruthRecord>* truth = nullptr) {
    if (spec.kind == ProviderSpec::Kind::File) {
        return load_scores(spec.path, task);
    }
    if (truth == nullptr) {
        throw Error(ErrorCode::MissingTruthForOracle, "synthetic oracle provider needs ground truth");
    }
    SyntheticOracleSpec synth = spec.synthetic;
    synth.task = task;
    return synthetic_oracle_scores(*truth, synth);
}

}  // namespace dermafuse
