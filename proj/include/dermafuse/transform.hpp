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
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "dermafuse/errors.hpp"
#include "dermafuse/image.hpp"

namespace dermafuse {

/// One test-time view: horizontal flip first, then rotation (degrees
/// counterclockwise, about the image center), then scaling about the center,
/// then translation in pixels.
struct TransformSpec {
    double rotation_deg = 0.0;
    bool flip_h = false;
    double scale = 1.0;
    double dx = 0.0;
    double dy = 0.0;

    bool operator==(const TransformSpec&) const = default;
};

inline bool is_identity(const TransformSpec& spec) {
    return spec == TransformSpec{};
}

/// Ordered list of views; element 0 is always the identity.
using TransformSet = std::vector<TransformSpec>;

/// Axis lists whose Cartesian product forms a transform set.
struct TransformAxes {
    std::vector<double> rotations = {0.0, 90.0, 180.0, 270.0};
    std::vector<bool> flips = {false, true};
    std::vector<double> scales = {1.0};
    std::vector<std::pair<double, double>> translations = {{0.0, 0.0}};
};

namespace detail {

inline int clamp_index(int v, int lo, int hi) { return std::max(lo, std::min(hi, v)); }

// 90-degree-exact paths. Rotations by 90/270 are pixel permutations only on
// square images; 0/180 and flips are permutations for any shape.
inline bool has_exact_permutation(const TransformSpec& spec, const RgbImage& image) {
    if (spec.scale != 1.0 || spec.dx != 0.0 || spec.dy != 0.0) return false;
    if (spec.rotation_deg == 0.0 || spec.rotation_deg == 180.0) return true;
    if ((spec.rotation_deg == 90.0 || spec.rotation_deg == 270.0) && image.width == image.height) return true;
    return false;
}

inline RgbImage apply_permutation(const RgbImage& image, const TransformSpec& spec) {
    const int w = image.width, h = image.height;
    RgbImage out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            // invert the flip-then-rotate pipeline: undo rotation, undo flip
            int sx = x, sy = y;
            if (spec.rotation_deg == 90.0) {
                sx = h - 1 - y;  // square image, so h - 1 == w - 1
                sy = x;
            } else if (spec.rotation_deg == 180.0) {
                sx = w - 1 - x;
                sy = h - 1 - y;
            } else if (spec.rotation_deg == 270.0) {
                sx = y;
                sy = w - 1 - x;
            }
            if (spec.flip_h) sx = w - 1 - sx;
            for (int c = 0; c < 3; ++c) out.at(x, y, c) = image.at(sx, sy, c);
        }
    }
    return out;
}

}  // namespace detail

/// Applies a geometric view. Output dimensions equal input dimensions.
/// Right-angle rotations and flips are exact pixel permutations (90/270
/// require a square image); everything else samples bilinearly with
/// clamp-to-edge for out-of-frame coordinates.
inline RgbImage apply_transform(const RgbImage& image, const TransformSpec& spec) {
    if (!(spec.scale > 0.0)) throw Error(ErrorCode::BadConfig, "transform scale must be > 0");
    if (is_identity(spec)) return image;
    if (detail::has_exact_permutation(spec, image)) return detail::apply_permutation(image, spec);

    const int w = image.width, h = image.height;
    RgbImage out(w, h);
    const double cx = (w - 1) / 2.0;
    const double cy = (h - 1) / 2.0;
    const double theta = spec.rotation_deg * std::numbers::pi / 180.0;
    // inverse map: undo translation, unscale, unrotate, unflip
    const double cos_t = std::cos(theta);
    const double sin_t = std::sin(theta);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double px = (x - spec.dx) - cx;
            double py = (y - spec.dy) - cy;
            px /= spec.scale;
            py /= spec.scale;
            // rotation by theta counterclockwise in image coordinates (y down)
            // maps (u,v) -> (u cos + v sin, -u sin + v cos); invert with -theta
            double ux = px * cos_t - py * sin_t;
            double uy = px * sin_t + py * cos_t;
            ux += cx;
            uy += cy;
            if (spec.flip_h) ux = (w - 1) - ux;
            // clamp-to-edge bilinear sample
            ux = std::min(static_cast<double>(w - 1), std::max(0.0, ux));
            uy = std::min(static_cast<double>(h - 1), std::max(0.0, uy));
            const int x0 = static_cast<int>(std::floor(ux));
            const int y0 = static_cast<int>(std::floor(uy));
            const int x1 = detail::clamp_index(x0 + 1, 0, w - 1);
            const int y1 = detail::clamp_index(y0 + 1, 0, h - 1);
            const double fx = ux - x0;
            const double fy = uy - y0;
            for (int c = 0; c < 3; ++c) {
                const double top = image.at(x0, y0, c) * (1 - fx) + image.at(x1, y0, c) * fx;
                const double bottom = image.at(x0, y1, c) * (1 - fx) + image.at(x1, y1, c) * fx;
                out.at(x, y, c) = top * (1 - fy) + bottom * fy;
            }
        }
    }
    return out;
}

/// Full Cartesian product of the axes in rotation-major order (rotation,
/// then flip, scale, translation). Each axis is deduplicated and must
/// contain its identity value, which is moved to the front so the identity
/// spec comes first.
inline TransformSet default_transform_set(const TransformAxes& axes) {
    auto prepare = [](auto values, const auto& identity, const char* axis_name) {
        if (values.empty()) throw Error(ErrorCode::EmptyAxis, std::string(axis_name) + " axis is empty");
        // dedupe preserving first occurrence
        auto end = values.begin();
        for (auto it = values.begin(); it != values.end(); ++it) {
            if (std::find(values.begin(), end, *it) == end) *end++ = *it;
        }
        values.erase(end, values.end());
        auto id_pos = std::find(values.begin(), values.end(), identity);
        if (id_pos == values.end()) {
            throw Error(ErrorCode::MissingIdentity,
                        std::string(axis_name) + " axis must contain its identity value");
        }
        std::rotate(values.begin(), id_pos, id_pos + 1);
        return values;
    };
    const auto rotations = prepare(axes.rotations, 0.0, "rotation");
    const auto flips = prepare(axes.flips, false, "flip");
    const auto scales = prepare(axes.scales, 1.0, "scale");
    const auto translations = prepare(axes.translations, std::pair<double, double>{0.0, 0.0}, "translation");

    TransformSet set;
    set.reserve(rotations.size() * flips.size() * scales.size() * translations.size());
    for (double r : rotations) {
        for (bool f : flips) {
            for (double s : scales) {
                for (const auto& [dx, dy] : translations) {
                    set.push_back({r, f, s, dx, dy});
                }
            }
        }
    }
    return set;
}

}  // namespace dermafuse
