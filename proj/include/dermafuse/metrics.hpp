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
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dermafuse/dataset.hpp"
#include "dermafuse/errors.hpp"
#include "dermafuse/util.hpp"

namespace dermafuse {

/// A score with its binary ground truth. The id is carried for deterministic
/// tie-breaking and provenance hashing.
struct LabeledScore {
    std::string id;
    double score = 0.0;
    bool positive = false;
};

/// Projects three-class aligned pairs onto one binary task (task class vs rest).
inline std::vector<LabeledScore> binarize(const std::vector<AlignedPair>& pairs, Task task) {
    const Label target = task == Task::MM ? Label::MM : Label::SK;
    std::vector<LabeledScore> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back({p.id, p.score, p.label == target});
    return out;
}

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

/// ROC curve under the rule `score >= threshold -> positive`. points.front()
/// is (0,0); thresholds[i] is the distinct score generating points[i+1], in
/// descending order; the final point is (1,1).
struct RocCurve {
    std::vector<RocPoint> points;
    std::vector<double> thresholds;
};

namespace detail {

inline void require_both_classes(const std::vector<LabeledScore>& pairs) {
    std::size_t pos = 0;
    for (const auto& p : pairs) pos += p.positive ? 1 : 0;
    if (pos == 0 || pos == pairs.size()) {
        throw Error(ErrorCode::DegenerateLabels, "need at least one positive and one negative label");
    }
}

}  // namespace detail

/// Sweeps thresholds over the distinct scores, descending. Tied scores fall
/// into a single step, so the curve has one point per distinct score plus the
/// (0,0) origin.
inline RocCurve roc_points(const std::vector<LabeledScore>& pairs) {
    detail::require_both_classes(pairs);
    std::vector<std::pair<double, bool>> sorted;
    sorted.reserve(pairs.size());
    std::size_t total_pos = 0;
    for (const auto& p : pairs) {
        sorted.emplace_back(p.score, p.positive);
        total_pos += p.positive ? 1 : 0;
    }
    const std::size_t total_neg = pairs.size() - total_pos;
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });

    RocCurve curve;
    curve.points.push_back({0.0, 0.0});
    std::size_t tp = 0, fp = 0, i = 0;
    while (i < sorted.size()) {
        const double score = sorted[i].first;
        while (i < sorted.size() && sorted[i].first == score) {
            if (sorted[i].second) ++tp;
            else ++fp;
            ++i;
        }
        curve.thresholds.push_back(score);
        curve.points.push_back({static_cast<double>(fp) / static_cast<double>(total_neg),
                                static_cast<double>(tp) / static_cast<double>(total_pos)});
    }
    return curve;
}

/// Trapezoidal area under the curve.
inline double auc_trapezoid(const RocCurve& curve) {
    double area = 0.0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& a = curve.points[i - 1];
        const auto& b = curve.points[i];
        area += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
    }
    return area;
}

/// Independent AUC route: fraction of (positive, negative) pairs ranked
/// concordantly, ties counted half. Deliberately brute force so it shares no
/// machinery with the ROC sweep.
inline double auc_pair_count(const std::vector<LabeledScore>& pairs) {
    detail::require_both_classes(pairs);
    std::vector<double> pos, neg;
    for (const auto& p : pairs) (p.positive ? pos : neg).push_back(p.score);
    double concordant = 0.0;
    for (double ps : pos) {
        for (double ns : neg) {
            if (ps > ns) concordant += 1.0;
            else if (ps == ns) concordant += 0.5;
        }
    }
    return concordant / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

/// Step-wise (non-interpolated) average precision. Ranking is by descending
/// score with ties broken by ascending id, so the value is independent of
/// input order.
inline double average_precision(std::vector<LabeledScore> pairs) {
    std::size_t total_pos = 0;
    for (const auto& p : pairs) total_pos += p.positive ? 1 : 0;
    if (total_pos == 0) throw Error(ErrorCode::NoPositives, "average precision needs at least one positive");
    std::sort(pairs.begin(), pairs.end(), [](const LabeledScore& a, const LabeledScore& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
    double ap = 0.0;
    std::size_t seen_pos = 0;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        if (!pairs[k].positive) continue;
        ++seen_pos;
        const double precision = static_cast<double>(seen_pos) / static_cast<double>(k + 1);
        ap += precision / static_cast<double>(total_pos);
    }
    return ap;
}

/// The challenge ranking metric.
inline double mean_auc(double auc_mm, double auc_sk) { return (auc_mm + auc_sk) / 2.0; }

struct EvalReport {
    double auc_mm = 0.0;
    double auc_sk = 0.0;
    double mean_auc = 0.0;
    std::optional<double> ap_mm;
    std::optional<double> ap_sk;
    ClassCounts counts;
};

struct EvalResult {
    EvalReport report;
    RocCurve roc_mm;
    RocCurve roc_sk;
};

/// Full evaluation of one MM and one SK score table against ground truth.
inline EvalResult evaluate_tables(const ScoreTable& mm_scores, const ScoreTable& sk_scores,
                                  const std::vector<GroundTruthRecord>& truth, bool strict = false) {
    const AlignResult mm_aligned = align(mm_scores, truth, strict);
    const AlignResult sk_aligned = align(sk_scores, truth, strict);
    const auto mm_pairs = binarize(mm_aligned.pairs, Task::MM);
    const auto sk_pairs = binarize(sk_aligned.pairs, Task::SK);

    EvalResult result;
    result.roc_mm = roc_points(mm_pairs);
    result.roc_sk = roc_points(sk_pairs);
    result.report.auc_mm = auc_trapezoid(result.roc_mm);
    result.report.auc_sk = auc_trapezoid(result.roc_sk);
    result.report.mean_auc = mean_auc(result.report.auc_mm, result.report.auc_sk);
    result.report.ap_mm = average_precision(mm_pairs);
    result.report.ap_sk = average_precision(sk_pairs);
    for (const auto& p : mm_aligned.pairs) {
        switch (p.label) {
            case Label::MM: ++result.report.counts.mm; break;
            case Label::SK: ++result.report.counts.sk; break;
            case Label::NCN: ++result.report.counts.ncn; break;
        }
    }
    return result;
}

inline nlohmann::json report_to_json(const EvalReport& report) {
    nlohmann::json j;
    j["auc_mm"] = report.auc_mm;
    j["auc_sk"] = report.auc_sk;
    j["mean_auc"] = report.mean_auc;
    if (report.ap_mm) j["ap_mm"] = *report.ap_mm;
    if (report.ap_sk) j["ap_sk"] = *report.ap_sk;
    j["counts"] = {{"mm", report.counts.mm}, {"sk", report.counts.sk}, {"ncn", report.counts.ncn}};
    j["ap_definition"] = "stepwise";
    return j;
}

inline void write_report(const EvalReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    out << report_to_json(report).dump(2) << '\n';
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

/// ROC as CSV `fpr,tpr,threshold`. The (0,0) origin has no finite threshold
/// and is written with `inf`.
inline void write_roc_csv(const RocCurve& curve, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    out << "fpr,tpr,threshold\n";
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        const double threshold = i == 0 ? std::numeric_limits<double>::infinity() : curve.thresholds[i - 1];
        out << format_double(curve.points[i].fpr) << ',' << format_double(curve.points[i].tpr) << ','
            << format_double(threshold) << '\n';
    }
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace dermafuse
