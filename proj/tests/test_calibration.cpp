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

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "dermafuse/calibration.hpp"
#include "helpers.hpp"

using namespace dermafuse;
using testutil::make_pairs;
using testutil::random_pairs;
using testutil::within_ulps;

namespace {

// Independent check: enumerate every candidate threshold exactly as specified
// and recompute the error rates with plain loops.
struct ScanResult {
    double best_gap;
    double best_sum;
};

ScanResult exhaustive_scan(const std::vector<LabeledScore>& pairs) {
    std::vector<double> distinct;
    for (const auto& p : pairs) distinct.push_back(p.score);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<double> candidates{distinct.front() - 0.5};
    for (std::size_t i = 1; i < distinct.size(); ++i) candidates.push_back((distinct[i - 1] + distinct[i]) / 2);
    candidates.push_back(distinct.back() + 0.5);

    ScanResult best{1e300, 1e300};
    for (double t : candidates) {
        double fp = 0, tn = 0, fn = 0, tp = 0;
        for (const auto& p : pairs) {
            if (p.positive) (p.score >= t ? tp : fn) += 1;
            else (p.score >= t ? fp : tn) += 1;
        }
        const double fpr = fp / (fp + tn);
        const double fnr = fn / (fn + tp);
        const double gap = std::fabs(fpr - fnr);
        if (gap < best.best_gap || (gap == best.best_gap && fpr + fnr < best.best_sum)) {
            best = {gap, fpr + fnr};
        }
    }
    return best;
}

std::pair<double, double> rates_at(const std::vector<LabeledScore>& pairs, double t) {
    double fp = 0, tn = 0, fn = 0, tp = 0;
    for (const auto& p : pairs) {
        if (p.positive) (p.score >= t ? tp : fn) += 1;
        else (p.score >= t ? fp : tn) += 1;
    }
    return {fp / (fp + tn), fn / (fn + tp)};
}

}  // namespace

TEST_CASE("eer threshold on separable scores", "[calibration]") {
    const auto result = eer_threshold(make_pairs({0.7, 0.9}, {0.1, 0.2}));
    CHECK(within_ulps(result.threshold, 0.45));  // midpoint of 0.2 and 0.7
    CHECK(result.eer == 0.0);
}

TEST_CASE("eer threshold on interleaved scores", "[calibration]") {
    const auto result = eer_threshold(make_pairs({0.3, 0.8}, {0.2, 0.4}));
    CHECK(within_ulps(result.threshold, 0.35));
    CHECK(result.eer == 0.5);
}

TEST_CASE("eer threshold on inverted scores", "[calibration]") {
    const auto result = eer_threshold(make_pairs({0.1}, {0.9}));
    CHECK(result.threshold == 0.5);
    CHECK(result.eer <= 1.0);
    const auto [fpr, fnr] = rates_at(make_pairs({0.1}, {0.9}), result.threshold);
    CHECK(fpr == fnr);
}

TEST_CASE("eer threshold minimizes |FPR-FNR| over the candidate scan", "[calibration][oracle]") {
    std::mt19937_64 rng(777);
    for (int iter = 0; iter < 200; ++iter) {
        const auto pairs = random_pairs(rng, 2 + iter % 80);
        const auto result = eer_threshold(pairs);
        const auto [fpr, fnr] = rates_at(pairs, result.threshold);
        const auto best = exhaustive_scan(pairs);
        CHECK(std::fabs(fpr - fnr) == best.best_gap);
        CHECK(fpr + fnr == best.best_sum);
        CHECK(result.eer == (fpr + fnr) / 2.0);
    }
}

TEST_CASE("separable sets give eer zero and a separating threshold", "[calibration]") {
    std::mt19937_64 rng(888);
    std::uniform_real_distribution<double> lo(0.0, 0.4), hi(0.6, 1.0);
    for (int iter = 0; iter < 50; ++iter) {
        std::vector<double> pos, neg;
        for (int i = 0; i < 3 + iter % 10; ++i) pos.push_back(hi(rng));
        for (int i = 0; i < 3 + iter % 7; ++i) neg.push_back(lo(rng));
        const auto result = eer_threshold(make_pairs(pos, neg));
        CHECK(result.eer == 0.0);
        for (double p : pos) CHECK(p >= result.threshold);
        for (double n : neg) CHECK(n < result.threshold);
        CHECK(result.threshold > 0.0);
    }
}

TEST_CASE("derive_calibration forms alpha as the threshold ratio", "[calibration]") {
    // mm separable around 0.5, sk separable around 0.6
    const auto mm = make_pairs({0.6, 0.8}, {0.3, 0.4});   // threshold 0.5
    const auto sk = make_pairs({0.7, 0.95}, {0.45, 0.5}); // threshold 0.6
    const auto calib = derive_calibration(mm, sk, "unit-test");
    CHECK(calib.c_mm_tilde == 0.5);
    CHECK(calib.c_sk == 0.6);
    CHECK(within_ulps(calib.alpha, 0.5 / 0.6));
    CHECK(within_ulps(calib.alpha * calib.c_sk, calib.c_mm_tilde));
    CHECK_FALSE(calib.alpha_manual);
    CHECK(calib.provenance.fold_spec == "unit-test");
    CHECK_FALSE(calib.provenance.data_hash.empty());

    const auto equal = derive_calibration(mm, mm);
    CHECK(equal.alpha == 1.0);
}

TEST_CASE("sk negatives at zero still give a positive threshold", "[calibration]") {
    const auto sk = make_pairs({0.4, 0.6}, {0.0});
    const auto calib = derive_calibration(sk, sk);
    CHECK(calib.c_sk > 0.0);
}

TEST_CASE("an all-identical sk score set cannot form alpha", "[calibration]") {
    // only sentinel candidates exist; the lower one wins and is <= 0
    const auto sk = make_pairs({0.0}, {0.0});
    const auto mm = make_pairs({0.8}, {0.2});
    CHECK_THROWS_AS(derive_calibration(mm, sk), Error);
}

TEST_CASE("calibration json round-trip", "[calibration]") {
    testutil::TempDir tmp;
    const auto mm = make_pairs({0.6, 0.8}, {0.3, 0.4});
    const auto sk = make_pairs({0.7, 0.95}, {0.45, 0.5});
    const auto calib = derive_calibration(mm, sk, "fold 0/5 seed 42");
    const auto path = tmp.file("calib.json");
    write_calibration(calib, path);
    const auto back = load_calibration(path);
    CHECK(back.c_mm_tilde == calib.c_mm_tilde);
    CHECK(back.c_sk == calib.c_sk);
    CHECK(back.alpha == calib.alpha);
    CHECK(back.alpha_manual == calib.alpha_manual);
    CHECK(back.provenance.data_hash == calib.provenance.data_hash);
    CHECK(back.provenance.fold_spec == calib.provenance.fold_spec);
}

TEST_CASE("out-of-range calibration json is rejected", "[calibration]") {
    testutil::TempDir tmp;
    const auto path = tmp.file("bad.json");
    testutil::write_text(path, R"({"c_mm_tilde": 1.5, "c_sk": 0.5, "alpha": 3.0})");
    CHECK_THROWS_AS(load_calibration(path), Error);
    testutil::write_text(path, R"({"c_mm_tilde": 0.5, "c_sk": 0.5, "alpha": -1.0})");
    CHECK_THROWS_AS(load_calibration(path), Error);
}

TEST_CASE("stratified folds deal classes round-robin", "[calibration]") {
    std::vector<GroundTruthRecord> truth;
    for (int i = 0; i < 10; ++i) truth.push_back({"mm" + std::to_string(i), Label::MM});
    auto folds = stratified_kfold(truth, 5, 42);
    std::map<int, int> sizes;
    for (const auto& [id, fold] : folds.assignment) ++sizes[fold];
    for (int f = 0; f < 5; ++f) CHECK(sizes[f] == 2);

    truth.push_back({"mm10", Label::MM});
    folds = stratified_kfold(truth, 5, 42);
    sizes.clear();
    for (const auto& [id, fold] : folds.assignment) ++sizes[fold];
    std::vector<int> counts;
    for (int f = 0; f < 5; ++f) counts.push_back(sizes[f]);
    std::sort(counts.begin(), counts.end());
    CHECK(counts == std::vector<int>{2, 2, 2, 2, 3});
}

TEST_CASE("stratified folds are deterministic and partition the ids", "[calibration]") {
    std::mt19937_64 rng(1234);
    std::uniform_int_distribution<int> pick(0, 2);
    std::vector<GroundTruthRecord> truth;
    for (int i = 0; i < 137; ++i) {
        truth.push_back({"id" + std::to_string(i), static_cast<Label>(pick(rng))});
    }
    const auto a = stratified_kfold(truth, 4, 99);
    const auto b = stratified_kfold(truth, 4, 99);
    CHECK(a.assignment == b.assignment);
    const auto c = stratified_kfold(truth, 4, 100);
    CHECK(a.assignment != c.assignment);  // different seed, different shuffle

    CHECK(a.assignment.size() == truth.size());
    for (const auto& rec : truth) {
        REQUIRE(a.assignment.count(rec.id) == 1);
        CHECK(a.assignment.at(rec.id) >= 0);
        CHECK(a.assignment.at(rec.id) < 4);
    }

    // per-class fold sizes differ by at most one
    for (Label cls : {Label::MM, Label::SK, Label::NCN}) {
        std::map<int, int> sizes;
        for (const auto& rec : truth) {
            if (rec.label == cls) ++sizes[a.assignment.at(rec.id)];
        }
        int lo = 1 << 30, hi = 0;
        for (int f = 0; f < 4; ++f) {
            const int n = sizes.count(f) ? sizes[f] : 0;
            lo = std::min(lo, n);
            hi = std::max(hi, n);
        }
        CHECK(hi - lo <= 1);
    }
}

TEST_CASE("small classes skip folds without error", "[calibration]") {
    std::vector<GroundTruthRecord> truth = {{"a", Label::MM}, {"b", Label::SK}, {"c", Label::SK}};
    const auto folds = stratified_kfold(truth, 5, 1);
    CHECK(folds.assignment.size() == 3);
}

TEST_CASE("fold count below two is rejected", "[calibration]") {
    std::vector<GroundTruthRecord> truth = {{"a", Label::MM}, {"b", Label::NCN}};
    CHECK_THROWS_AS(stratified_kfold(truth, 1, 0), Error);
}
