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
#include <string>
#include <vector>

#include <png.h>

#include "dermafuse/errors.hpp"

namespace dermafuse {

/// Row-major interleaved RGB image with channel intensities in [0,1].
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<double> pixels;  // size 3 * width * height, r g b per pixel

    RgbImage() = default;
    RgbImage(int w, int h, double fill = 0.0)
        : width(w), height(h), pixels(static_cast<std::size_t>(3) * w * h, fill) {}

    double& at(int x, int y, int channel) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + channel];
    }
    double at(int x, int y, int channel) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + channel];
    }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

    bool operator==(const RgbImage&) const = default;
};

// 8-bit PNG I/O. Integer sample k maps to k/255 on read and back by
// round-to-nearest on write, so an 8-bit sourced image round-trips bit-exactly.

inline RgbImage read_png(const std::filesystem::path& path) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&png, path.string().c_str())) {
        throw Error(ErrorCode::IoFailure, path.string() + ": " + png.message);
    }
    png.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(png));
    if (!png_image_finish_read(&png, nullptr, buffer.data(), 0, nullptr)) {
        std::string message = png.message;
        png_image_free(&png);
        throw Error(ErrorCode::IoFailure, path.string() + ": " + message);
    }
    RgbImage image(static_cast<int>(png.width), static_cast<int>(png.height));
    for (std::size_t i = 0; i < buffer.size(); ++i) {
        image.pixels[i] = static_cast<double>(buffer[i]) / 255.0;
    }
    return image;
}

inline void write_png(const RgbImage& image, const std::filesystem::path& path) {
    std::vector<std::uint8_t> buffer(image.pixels.size());
    for (std::size_t i = 0; i < buffer.size(); ++i) {
        const double v = std::min(1.0, std::max(0.0, image.pixels[i]));
        buffer[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(image.width);
    png.height = static_cast<png_uint_32>(image.height);
    png.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&png, path.string().c_str(), 0, buffer.data(), 0, nullptr)) {
        throw Error(ErrorCode::IoFailure, path.string() + ": " + png.message);
    }
}

}  // namespace dermafuse
