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
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dermafuse/dataset.hpp"
#include "dermafuse/errors.hpp"
#include "dermafuse/metrics.hpp"
#include "dermafuse/util.hpp"

namespace dermafuse {

struct Provenance {
    std::string data_hash;  // fnv1a-64 hex of the calibration pairs
    std::string fold_spec;  // e.g. "all" or "fold 0/5 seed 42"
};

/// EER operating points of the two base classifiers and the mixing
/// coefficient for complementary fusion.
struct Calibration {
    double c_mm_tilde = 0.5;
    double c_sk = 0.5;
    double alpha = 1.0;
    bool alpha_manual = false;  // true when alpha was overridden, not derived
    Provenance provenance;
};

struct EerResult {
    double threshold = 0.0;
    double eer = 0.0;
};

/// Finds the threshold minimizing |FPR - FNR| under the rule
/// `score >= threshold -> positive`. Candidates are midpoints between
/// consecutive distinct scores plus one sentinel below the minimum and one
/// above the maximum; ties prefer smaller FPR+FNR, then smaller threshold.
inline EerResult eer_threshold(const std::vector<LabeledScore>& pairs) {
    detail::require_both_classes(pairs);
    std::vector<double> pos, neg, distinct;
    distinct.reserve(pairs.size());
    for (const auto& p : pairs) {
        (p.positive ? pos : neg).push_back(p.score);
        distinct.push_back(p.score);
    }
    std::sort(pos.begin(), pos.end());
    std::sort(neg.begin(), neg.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    std::vector<double> candidates;
    candidates.reserve(distinct.size() + 1);
    candidates.push_back(distinct.front() - 0.5);
    for (std::size_t i = 1; i < distinct.size(); ++i) {
        candidates.push_back((distinct[i - 1] + distinct[i]) / 2.0);
    }
    candidates.push_back(distinct.back() + 0.5);

    const double p_count = static_cast<double>(pos.size());
    const double n_count = static_cast<double>(neg.size());
    bool have_best = false;
    double best_gap = 0.0, best_sum = 0.0, best_t = 0.0, best_eer = 0.0;
    for (double t : candidates) {
        // negatives >= t are false positives; positives < t are false negatives
        const auto neg_ge = neg.end() - std::lower_bound(neg.begin(), neg.end(), t);
        const auto pos_lt = std::lower_bound(pos.begin(), pos.end(), t) - pos.begin();
        const double fpr = static_cast<double>(neg_ge) / n_count;
        const double fnr = static_cast<double>(pos_lt) / p_count;
        const double gap = std::fabs(fpr - fnr);
        const double sum = fpr + fnr;
        if (!have_best || gap < best_gap || (gap == best_gap && sum < best_sum) ||
            (gap == best_gap && sum == best_sum && t < best_t)) {
            have_best = true;
            best_gap = gap;
            best_sum = sum;
            best_t = t;
            best_eer = sum / 2.0;
        }
    }
    return {best_t, best_eer};
}

namespace detail {

inline std::string hash_pairs(const std::vector<LabeledScore>& mm, const std::vector<LabeledScore>& sk) {
    std::string blob = "mm\n";
    for (const auto& p : mm) {
        blob += p.id;
        blob += ',';
        blob += format_double(p.score);
        blob += p.positive ? ",1\n" : ",0\n";
    }
    blob += "sk\n";
    for (const auto& p : sk) {
        blob += p.id;
        blob += ',';
        blob += format_double(p.score);
        blob += p.positive ? ",1\n" : ",0\n";
    }
    std::ostringstream hex;
    hex << std::hex << fnv1a64(blob);
    return hex.str();
}

}  // namespace detail

/// Derives both EER thresholds and alpha = c_mm_tilde / c_sk.
inline Calibration derive_calibration(const std::vector<LabeledScore>& mm_pairs,
                                      const std::vector<LabeledScore>& sk_pairs,
                                      const std::string& fold_spec = "all") {
    Calibration calib;
    calib.c_mm_tilde = eer_threshold(mm_pairs).threshold;
    calib.c_sk = eer_threshold(sk_pairs).threshold;
    if (calib.c_sk <= 0.0) {
        throw Error(ErrorCode::ZeroSkThreshold, "SK threshold is not positive, cannot form alpha");
    }
    calib.alpha = calib.c_mm_tilde / calib.c_sk;
    calib.alpha_manual = false;
    calib.provenance.data_hash = detail::hash_pairs(mm_pairs, sk_pairs);
    calib.provenance.fold_spec = fold_spec;
    return calib;
}

struct FoldAssignment {
    int k = 2;
    std::map<std::string, int> assignment;  // id -> fold in [0, k)
};

/// Deterministic stratified k-fold: per class, ids are sorted, shuffled by
/// the seed, and dealt round-robin, so per-class fold sizes differ by at
/// most one. Classes smaller than k simply skip some folds.
inline FoldAssignment stratified_kfold(const std::vector<GroundTruthRecord>& truth, int k,
                                       std::uint64_t seed) {
    if (k < 2) throw Error(ErrorCode::BadK, "fold count must be >= 2");
    FoldAssignment folds;
    folds.k = k;
    const Label classes[] = {Label::MM, Label::SK, Label::NCN};
    for (Label cls : classes) {
        std::vector<std::string> ids;
        for (const auto& rec : truth) {
            if (rec.label == cls) ids.push_back(rec.id);
        }
        std::sort(ids.begin(), ids.end());
        // per-class stream keyed by seed and class so k-fold layout does not
        // depend on which classes happen to be present
        deterministic_shuffle(ids, seed ^ fnv1a64(label_name(cls)));
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (!folds.assignment.emplace(ids[i], static_cast<int>(i % static_cast<std::size_t>(k))).second) {
                throw Error(ErrorCode::DuplicateId, "duplicate id `" + ids[i] + "` in ground truth");
            }
        }
    }
    return folds;
}

// ---------------------------------------------------------------------------
// Calibration file format
// ---------------------------------------------------------------------------

inline nlohmann::json calibration_to_json(const Calibration& calib) {
    nlohmann::json j;
    j["c_mm_tilde"] = calib.c_mm_tilde;
    j["c_sk"] = calib.c_sk;
    j["alpha"] = calib.alpha;
    j["alpha_source"] = calib.alpha_manual ? "manual" : "derived";
    j["provenance"] = {{"data_hash", calib.provenance.data_hash}, {"fold_spec", calib.provenance.fold_spec}};
    return j;
}

inline void validate_calibration(const Calibration& calib) {
    if (!(calib.c_mm_tilde > 0.0 && calib.c_mm_tilde < 1.0) || !(calib.c_sk > 0.0 && calib.c_sk < 1.0)) {
        throw Error(ErrorCode::BadConfig, "calibration thresholds must lie in (0,1)");
    }
    if (!(calib.alpha >= 0.0)) {
        throw Error(ErrorCode::BadConfig, "alpha must be >= 0");
    }
}

inline Calibration calibration_from_json(const nlohmann::json& j) {
    Calibration calib;
    try {
        calib.c_mm_tilde = j.at("c_mm_tilde").get<double>();
        calib.c_sk = j.at("c_sk").get<double>();
        calib.alpha = j.at("alpha").get<double>();
        if (j.contains("alpha_source")) calib.alpha_manual = j.at("alpha_source").get<std::string>() == "manual";
        if (j.contains("provenance")) {
            calib.provenance.data_hash = j.at("provenance").value("data_hash", "");
            calib.provenance.fold_spec = j.at("provenance").value("fold_spec", "");
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::BadConfig, std::string("calibration json: ") + e.what());
    }
    validate_calibration(calib);
    return calib;
}

inline void write_calibration(const Calibration& calib, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    out << calibration_to_json(calib).dump(2) << '\n';
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

inline Calibration load_calibration(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::BadConfig, path.string() + ": " + e.what());
    }
    return calibration_from_json(j);
}

}  // namespace dermafuse
