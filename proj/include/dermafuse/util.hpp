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
#include <charconv>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <string_view>
#include <system_error>
#include <thread>
#include <vector>

#include "dermafuse/errors.hpp"

namespace dermafuse {

// ---------------------------------------------------------------------------
// Build-stable pseudo-randomness. All randomized behavior in the library is
// derived from these primitives so that identical seeds reproduce identical
// outputs on every run (and across platforms with IEEE-754 doubles).
// ---------------------------------------------------------------------------

/// FNV-1a 64-bit hash.
constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

/// splitmix64 step: advances `state` and returns the next 64-bit output.
constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Maps 64 random bits to a double in [0, 1) with 53-bit resolution.
constexpr double unit_double(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n) by rejection sampling (no modulo bias).
inline std::uint64_t bounded_uint(std::uint64_t& state, std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
    std::uint64_t x;
    do {
        x = splitmix64(state);
    } while (x >= limit);
    return x % n;
}

/// In-place Fisher-Yates shuffle driven by splitmix64.
template <typename T>
void deterministic_shuffle(std::vector<T>& items, std::uint64_t seed) {
    std::uint64_t state = seed;
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(bounded_uint(state, i));
        std::swap(items[i - 1], items[j]);
    }
}

// ---------------------------------------------------------------------------
// Numerics
// ---------------------------------------------------------------------------

/// Kahan compensated accumulator; summation order is the caller's contract.
class KahanSum {
public:
    void add(double x) noexcept {
        const double y = x - compensation_;
        const double t = sum_ + y;
        compensation_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const noexcept { return sum_; }

private:
    double sum_ = 0.0;
    double compensation_ = 0.0;
};

// ---------------------------------------------------------------------------
// Number formatting/parsing. Scores are serialized in the shortest form that
// round-trips exactly, so written files are both human-readable and lossless.
// ---------------------------------------------------------------------------

inline std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) throw Error(ErrorCode::IoFailure, "cannot format double");
    return std::string(buf, ptr);
}

/// Strict parse: the whole field must be consumed.
inline bool parse_double(std::string_view text, double& out) {
    if (text.empty()) return false;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

// ---------------------------------------------------------------------------
// Parallel map. Each index writes its own slot, so results do not depend on
// the number of workers; callers serialize outputs afterwards in index order.
// ---------------------------------------------------------------------------

inline void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    if (workers <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const unsigned count = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    std::vector<std::thread> pool;
    pool.reserve(count);
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (unsigned w = 0; w < count; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += count) fn(i);
            } catch (...) {
                std::scoped_lock lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace dermafuse
