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
#include <limits>
#include <optional>
#include <string>

#include "dermafuse/errors.hpp"
#include "dermafuse/image.hpp"
#include "dermafuse/util.hpp"

namespace dermafuse {

/// Minkowski-norm illuminant estimator family: p=1 is gray-world, finite p>1
/// is shades-of-gray, p=infinity is max-RGB.
enum class CcMethod { GrayWorld, ShadesOfGray, MaxRgb };

enum class ClipPolicy {
    ClipToOne,          // clamp each corrected value to 1
    RescaleIfOverflow,  // divide the whole image by its max when max > 1
};

struct NormalizationConfig {
    CcMethod method = CcMethod::ShadesOfGray;
    double p = 6.0;  // Minkowski order for shades-of-gray; must be >= 1
    ClipPolicy clip = ClipPolicy::ClipToOne;
    std::optional<double> gamma;  // optional pre/post linearization, off by default
};

/// Per-channel Minkowski means of an image; the illuminant estimate. All
/// components are strictly positive (a channel that is identically zero has
/// no defined gain).
struct IlluminantEstimate {
    double m_r = 0.0;
    double m_g = 0.0;
    double m_b = 0.0;
    double p = 1.0;  // norm order used; infinity for max-RGB
};

inline void validate_normalization(const NormalizationConfig& config) {
    if (config.method == CcMethod::ShadesOfGray && !(config.p >= 1.0)) {
        throw Error(ErrorCode::BadConfig, "Minkowski order p must be >= 1");
    }
    if (config.gamma && !(*config.gamma > 0.0)) {
        throw Error(ErrorCode::BadConfig, "gamma must be > 0");
    }
}

/// m_c = ((1/N) sum I_c^p)^(1/p) for finite p; the channel max for max-RGB.
inline IlluminantEstimate estimate_illuminant(const RgbImage& image, const NormalizationConfig& config) {
    validate_normalization(config);
    if (image.pixel_count() == 0) throw Error(ErrorCode::ZeroChannel, "empty image");

    IlluminantEstimate est;
    double m[3];
    const std::size_t n = image.pixel_count();
    if (config.method == CcMethod::MaxRgb) {
        est.p = std::numeric_limits<double>::infinity();
        for (int c = 0; c < 3; ++c) {
            double mx = 0.0;
            for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, image.pixels[i * 3 + c]);
            m[c] = mx;
        }
    } else {
        const double p = config.method == CcMethod::GrayWorld ? 1.0 : config.p;
        est.p = p;
        for (int c = 0; c < 3; ++c) {
            KahanSum sum;
            if (p == 1.0) {
                for (std::size_t i = 0; i < n; ++i) sum.add(image.pixels[i * 3 + c]);
            } else {
                for (std::size_t i = 0; i < n; ++i) sum.add(std::pow(image.pixels[i * 3 + c], p));
            }
            const double mean = sum.value() / static_cast<double>(n);
            m[c] = p == 1.0 ? mean : std::pow(mean, 1.0 / p);
        }
    }
    const char* channel_names[] = {"red", "green", "blue"};
    for (int c = 0; c < 3; ++c) {
        if (!(m[c] > 0.0)) {
            throw Error(ErrorCode::ZeroChannel,
                        std::string(channel_names[c]) + " channel is identically zero");
        }
    }
    est.m_r = m[0];
    est.m_g = m[1];
    est.m_b = m[2];
    return est;
}

/// Von Kries diagonal correction: gain_c = mu / m_c with mu the mean of the
/// three channel means, so overall luminance is preserved and a uniform gray
/// image is a fixed point. The clip policy then restores the [0,1] range.
inline RgbImage apply_gains(const RgbImage& image, const IlluminantEstimate& illum, ClipPolicy clip) {
    if (!(illum.m_r > 0.0 && illum.m_g > 0.0 && illum.m_b > 0.0)) {
        throw Error(ErrorCode::ZeroChannel, "illuminant estimate has a non-positive component");
    }
    // equal channel means make the correction the exact identity; computing
    // (m+m+m)/3 would round and smudge the gray fixed point
    const double mu = illum.m_r == illum.m_g && illum.m_g == illum.m_b
                          ? illum.m_r
                          : (illum.m_r + illum.m_g + illum.m_b) / 3.0;
    const double gain[3] = {mu / illum.m_r, mu / illum.m_g, mu / illum.m_b};

    RgbImage out(image.width, image.height);
    double max_value = 0.0;
    for (std::size_t i = 0; i < image.pixel_count(); ++i) {
        for (int c = 0; c < 3; ++c) {
            const double v = image.pixels[i * 3 + c] * gain[c];
            out.pixels[i * 3 + c] = v;
            max_value = std::max(max_value, v);
        }
    }
    if (clip == ClipPolicy::ClipToOne) {
        for (double& v : out.pixels) v = std::min(v, 1.0);
    } else if (max_value > 1.0) {
        for (double& v : out.pixels) v /= max_value;
    }
    return out;
}

namespace detail {

inline RgbImage map_channels(const RgbImage& image, double exponent) {
    RgbImage out(image.width, image.height);
    for (std::size_t i = 0; i < image.pixels.size(); ++i) {
        out.pixels[i] = std::pow(image.pixels[i], exponent);
    }
    return out;
}

}  // namespace detail

/// Full normalization: estimate the illuminant, apply the gains. With gamma
/// set, intensities are linearized before and re-encoded after.
inline RgbImage normalize_image(const RgbImage& image, const NormalizationConfig& config) {
    validate_normalization(config);
    if (!config.gamma) {
        return apply_gains(image, estimate_illuminant(image, config), config.clip);
    }
    const RgbImage linear = detail::map_channels(image, *config.gamma);
    const RgbImage corrected = apply_gains(linear, estimate_illuminant(linear, config), config.clip);
    return detail::map_channels(corrected, 1.0 / *config.gamma);
}

}  // namespace dermafuse
