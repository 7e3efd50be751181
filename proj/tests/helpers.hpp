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

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dermafuse/dataset.hpp"
#include "dermafuse/image.hpp"
#include "dermafuse/metrics.hpp"

namespace testutil {

/// Self-deleting scratch directory.
class TempDir {
public:
    TempDir() {
        auto base = std::filesystem::temp_directory_path();
        std::random_device rd;
        std::ostringstream name;
        name << "dermafuse_test_" << std::hex << rd() << rd();
        dir_ = base / name.str();
        std::filesystem::create_directories(dir_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(dir_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return dir_; }
    std::filesystem::path file(const std::string& name) const { return dir_ / name; }

private:
    std::filesystem::path dir_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline bool within_ulps(double a, double b, int ulps = 1) {
    if (a == b) return true;
    double lo = b, hi = b;
    for (int i = 0; i < ulps; ++i) {
        lo = std::nextafter(lo, -std::numeric_limits<double>::infinity());
        hi = std::nextafter(hi, std::numeric_limits<double>::infinity());
    }
    return a >= lo && a <= hi;
}

/// Builds labeled scores from parallel positive/negative score lists with
/// synthetic ids p000... / n000...
inline std::vector<dermafuse::LabeledScore> make_pairs(const std::vector<double>& pos,
                                                       const std::vector<double>& neg) {
    std::vector<dermafuse::LabeledScore> pairs;
    for (std::size_t i = 0; i < pos.size(); ++i) {
        pairs.push_back({"p" + std::to_string(i), pos[i], true});
    }
    for (std::size_t i = 0; i < neg.size(); ++i) {
        pairs.push_back({"n" + std::to_string(i), neg[i], false});
    }
    return pairs;
}

/// Random labeled scores with ties injected by value snapping.
inline std::vector<dermafuse::LabeledScore> random_pairs(std::mt19937_64& rng, std::size_t n,
                                                         double tie_prob = 0.3) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> grid(0, 9);
    std::vector<dermafuse::LabeledScore> pairs;
    bool saw_pos = false, saw_neg = false;
    for (std::size_t i = 0; i < n; ++i) {
        double score = unit(rng);
        if (unit(rng) < tie_prob) score = grid(rng) / 10.0;  // snap to a coarse grid to create ties
        const bool positive = unit(rng) < 0.5;
        (positive ? saw_pos : saw_neg) = true;
        pairs.push_back({"s" + std::to_string(i), score, positive});
    }
    // guarantee both classes
    if (!saw_pos) pairs.front().positive = true;
    if (!saw_neg) pairs.back().positive = false;
    return pairs;
}

inline dermafuse::RgbImage random_image(std::mt19937_64& rng, int w, int h, double lo = 0.05,
                                        double hi = 0.5) {
    std::uniform_real_distribution<double> dist(lo, hi);
    dermafuse::RgbImage image(w, h);
    for (double& v : image.pixels) v = dist(rng);
    return image;
}

}  // namespace testutil
