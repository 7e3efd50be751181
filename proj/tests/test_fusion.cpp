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

#include <cmath>
#include <random>

#include "dermafuse/fusion.hpp"
#include "dermafuse/metrics.hpp"
#include "helpers.hpp"

using namespace dermafuse;

namespace {

Calibration fixture_calibration() {
    Calibration calib;
    calib.c_mm_tilde = 0.5;
    calib.c_sk = 0.6;
    calib.alpha = 5.0 / 6.0;
    return calib;
}

}  // namespace

TEST_CASE("fusion formula fixture", "[fusion]") {
    const auto calib = fixture_calibration();
    // max{0, 0.8 - 0.5 - (5/6)(0.9 - 0.6)} = 0.05
    CHECK(std::fabs(fuse_mm_score(0.8, 0.9, calib) - 0.05) <= 1e-15);
}

TEST_CASE("fusion is continuous at the sk threshold", "[fusion]") {
    const auto calib = fixture_calibration();
    const double at_boundary = fuse_mm_score(0.8, calib.c_sk, calib);
    CHECK(at_boundary == 0.8 - 0.5);
    // approaching from above reproduces the boundary value
    const double just_above = fuse_mm_score(0.8, std::nextafter(calib.c_sk, 1.0), calib);
    CHECK(std::fabs(just_above - at_boundary) <= 1e-15);
}

TEST_CASE("fusion clamps at zero", "[fusion]") {
    const auto calib = fixture_calibration();
    CHECK(fuse_mm_score(0.4, 0.9, calib) == 0.0);
}

TEST_CASE("fusion monotonicity and range", "[fusion]") {
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int iter = 0; iter < 30; ++iter) {
        Calibration calib;
        calib.c_mm_tilde = 0.1 + 0.8 * unit(rng);
        calib.c_sk = 0.1 + 0.8 * unit(rng);
        calib.alpha = calib.c_mm_tilde / calib.c_sk;
        double previous = -1.0;
        for (int i = 0; i <= 20; ++i) {
            const double f_mm = i / 20.0;
            const double value = fuse_mm_score(f_mm, 0.7, calib);
            CHECK(value >= previous);  // non-decreasing in f_mm
            CHECK(value >= 0.0);
            CHECK(value <= 1.0 - calib.c_mm_tilde);
            previous = value;
        }
        previous = 2.0;
        for (int i = 0; i <= 20; ++i) {
            const double f_sk = i / 20.0;
            const double value = fuse_mm_score(0.9, f_sk, calib);
            CHECK(value <= previous);  // non-increasing in f_sk
            previous = value;
        }
    }
}

TEST_CASE("fusion preserves base ranking off the clamp", "[fusion]") {
    // all f_sk below c_sk and all fused scores positive: ordering must match
    const auto calib = fixture_calibration();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> high(0.55, 1.0), low(0.0, 0.5);
    std::vector<LabeledScore> base, fused;
    for (int i = 0; i < 40; ++i) {
        const bool positive = i % 2 == 0;
        const double f_mm = high(rng);
        const double f_sk = low(rng);
        const std::string id = "s" + std::to_string(i);
        base.push_back({id, f_mm, positive});
        fused.push_back({id, fuse_mm_score(f_mm, f_sk, calib), positive});
    }
    CHECK(std::fabs(auc_pair_count(base) - auc_pair_count(fused)) <= 1e-12);
}

TEST_CASE("age gate fixtures", "[fusion]") {
    const auto calib = fixture_calibration();
    GateConfig gate;
    gate.enabled = true;

    MetadataRecord adult{"a", 45, Sex::Female};
    CHECK(gate_sk_score(0.9, adult, calib, gate) == 0.9);

    MetadataRecord unknown{"b", std::nullopt, std::nullopt};
    CHECK(gate_sk_score(0.9, unknown, calib, gate) == 0.9);
    CHECK(gate_sk_score(0.9, std::nullopt, calib, gate) == 0.9);

    MetadataRecord young{"c", 15, std::nullopt};
    CHECK(gate_sk_score(0.9, young, calib, gate) == 0.99 * 0.6);  // 0.594
    CHECK(std::fabs(gate_sk_score(0.9, young, calib, gate) - 0.594) <= 1e-12);

    gate.enabled = false;
    CHECK(gate_sk_score(0.9, young, calib, gate) == 0.9);
}

TEST_CASE("age gate never increases a score", "[fusion]") {
    const auto calib = fixture_calibration();
    GateConfig gate;
    gate.enabled = true;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> age(0, 90);
    for (int i = 0; i < 200; ++i) {
        const double f_sk = unit(rng);
        MetadataRecord meta{"x", age(rng), std::nullopt};
        const double gated = gate_sk_score(f_sk, meta, calib, gate);
        CHECK(gated <= f_sk);
        if (*meta.age >= gate.age_cutoff) CHECK(gated == f_sk);
    }
}

TEST_CASE("pipeline composes gate and fusion per id", "[fusion]") {
    const auto calib = fixture_calibration();
    GateConfig gate;
    gate.enabled = true;

    ScoreTable mm{Task::MM, {{"x", 0.8}}};
    ScoreTable sk{Task::SK, {{"x", 0.9}}};
    const auto fused = run_pipeline(mm, sk, calib, {}, gate);
    REQUIRE(fused.mm.entries.size() == 1);
    CHECK(std::fabs(fused.mm.entries.at("x") - 0.05) <= 1e-15);  // no metadata: ungated
    CHECK(fused.sk.entries.at("x") == 0.9);

    // young patient: sk capped below c_sk, so fusion takes the else branch
    const std::vector<MetadataRecord> metadata = {{"x", 15, std::nullopt}};
    const auto gated = run_pipeline(mm, sk, calib, metadata, gate);
    CHECK(gated.sk.entries.at("x") == 0.99 * 0.6);
    CHECK(gated.mm.entries.at("x") == std::max(0.0, 0.8 - 0.5));
}

TEST_CASE("pipeline with alpha zero is a pure shift", "[fusion]") {
    Calibration calib = fixture_calibration();
    calib.alpha = 0.0;
    calib.alpha_manual = true;
    ScoreTable mm{Task::MM, {{"a", 0.9}, {"b", 0.7}, {"c", 0.55}}};
    ScoreTable sk{Task::SK, {{"a", 0.99}, {"b", 0.1}, {"c", 0.8}}};
    const auto fused = run_pipeline(mm, sk, calib, {}, GateConfig{});
    for (const auto& [id, score] : mm.entries) {
        CHECK(fused.mm.entries.at(id) == score - calib.c_mm_tilde);
    }
}

TEST_CASE("pipeline rejects mismatched id sets and preserves ids", "[fusion]") {
    const auto calib = fixture_calibration();
    ScoreTable mm{Task::MM, {{"a", 0.5}, {"b", 0.6}}};
    ScoreTable sk{Task::SK, {{"a", 0.5}}};
    CHECK_THROWS_AS(run_pipeline(mm, sk, calib, {}, GateConfig{}), Error);

    sk.entries = {{"a", 0.5}, {"c", 0.6}};
    CHECK_THROWS_AS(run_pipeline(mm, sk, calib, {}, GateConfig{}), Error);

    sk.entries = {{"a", 0.5}, {"b", 0.6}};
    const auto fused = run_pipeline(mm, sk, calib, {}, GateConfig{});
    CHECK(fused.mm.entries.size() == 2);
    CHECK(fused.mm.entries.count("a") == 1);
    CHECK(fused.mm.entries.count("b") == 1);

    const auto empty = run_pipeline(ScoreTable{Task::MM, {}}, ScoreTable{Task::SK, {}}, calib, {}, GateConfig{});
    CHECK(empty.mm.entries.empty());
    CHECK(empty.sk.entries.empty());
}

TEST_CASE("pipeline output is worker-count independent", "[fusion]") {
    const auto calib = fixture_calibration();
    std::mt19937_64 rng(1717);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    ScoreTable mm{Task::MM, {}}, sk{Task::SK, {}};
    std::vector<MetadataRecord> metadata;
    for (int i = 0; i < 500; ++i) {
        const std::string id = "id" + std::to_string(i);
        mm.entries.emplace(id, unit(rng));
        sk.entries.emplace(id, unit(rng));
        if (i % 3 == 0) metadata.push_back({id, static_cast<int>(unit(rng) * 90), std::nullopt});
    }
    GateConfig gate;
    gate.enabled = true;
    const auto serial = run_pipeline(mm, sk, calib, metadata, gate, 1);
    const auto parallel = run_pipeline(mm, sk, calib, metadata, gate, 8);
    CHECK(serial.mm.entries == parallel.mm.entries);
    CHECK(serial.sk.entries == parallel.sk.entries);
}
