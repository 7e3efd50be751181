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
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dermafuse/calibration.hpp"
#include "dermafuse/color_constancy.hpp"
#include "dermafuse/errors.hpp"
#include "dermafuse/fusion.hpp"
#include "dermafuse/providers.hpp"
#include "dermafuse/transform.hpp"

namespace dermafuse {

/// How to obtain a Calibration when none is given inline: derive it from
/// labeled scores, optionally restricted to one held-out stratified fold.
struct CalibrationDeriveSpec {
    int folds = 5;   // 0 disables folding and uses every sample
    int fold = 0;    // which fold supplies the calibration samples
    std::uint64_t seed = 0;
};

struct RunPaths {
    std::optional<std::filesystem::path> truth;
    std::optional<std::filesystem::path> metadata;
    std::optional<std::filesystem::path> out_dir;
};

/// Declarative run configuration; a single JSON document. CLI flags override
/// individual fields, and the effective merged config is echoed into the
/// out directory for provenance.
struct RunConfig {
    NormalizationConfig normalization;
    TransformAxes transforms;
    std::optional<EnsembleConfig> providers_mm;
    std::optional<EnsembleConfig> providers_sk;
    std::optional<Calibration> calibration;  // inline calibration, if given
    CalibrationDeriveSpec derive;
    GateConfig gate;
    RunPaths paths;
};

namespace detail {

inline CcMethod parse_cc_method(const std::string& name) {
    if (name == "gray_world" || name == "gray-world") return CcMethod::GrayWorld;
    if (name == "shades_of_gray" || name == "shades-of-gray") return CcMethod::ShadesOfGray;
    if (name == "max_rgb" || name == "max-rgb") return CcMethod::MaxRgb;
    throw Error(ErrorCode::BadConfig, "unknown color constancy method `" + name + "`");
}

inline const char* cc_method_name(CcMethod method) {
    switch (method) {
        case CcMethod::GrayWorld: return "gray_world";
        case CcMethod::ShadesOfGray: return "shades_of_gray";
        case CcMethod::MaxRgb: return "max_rgb";
    }
    return "?";
}

inline ClipPolicy parse_clip_policy(const std::string& name) {
    if (name == "clip" || name == "clip_to_one") return ClipPolicy::ClipToOne;
    if (name == "rescale" || name == "rescale_if_overflow") return ClipPolicy::RescaleIfOverflow;
    throw Error(ErrorCode::BadConfig, "unknown clip policy `" + name + "`");
}

inline const char* clip_policy_name(ClipPolicy clip) {
    return clip == ClipPolicy::ClipToOne ? "clip_to_one" : "rescale_if_overflow";
}

inline Task parse_task(const std::string& name) {
    if (name == "mm") return Task::MM;
    if (name == "sk") return Task::SK;
    throw Error(ErrorCode::BadConfig, "unknown task `" + name + "` (expected mm or sk)");
}

}  // namespace detail

inline NormalizationConfig normalization_from_json(const nlohmann::json& j) {
    NormalizationConfig config;
    config.method = detail::parse_cc_method(j.value("method", "shades_of_gray"));
    config.p = j.value("p", 6.0);
    config.clip = detail::parse_clip_policy(j.value("clip", "clip_to_one"));
    if (j.contains("gamma") && !j.at("gamma").is_null()) config.gamma = j.at("gamma").get<double>();
    validate_normalization(config);
    return config;
}

inline nlohmann::json normalization_to_json(const NormalizationConfig& config) {
    nlohmann::json j;
    j["method"] = detail::cc_method_name(config.method);
    j["p"] = config.p;
    j["clip"] = detail::clip_policy_name(config.clip);
    j["gamma"] = config.gamma ? nlohmann::json(*config.gamma) : nlohmann::json(nullptr);
    return j;
}

inline TransformAxes transforms_from_json(const nlohmann::json& j) {
    TransformAxes axes;
    if (j.contains("rotations")) axes.rotations = j.at("rotations").get<std::vector<double>>();
    if (j.contains("flips")) {
        axes.flips.clear();
        for (const auto& f : j.at("flips")) {
            const std::string name = f.get<std::string>();
            if (name == "none") axes.flips.push_back(false);
            else if (name == "horizontal") axes.flips.push_back(true);
            else throw Error(ErrorCode::BadConfig, "unknown flip `" + name + "`");
        }
    }
    if (j.contains("scales")) axes.scales = j.at("scales").get<std::vector<double>>();
    if (j.contains("translations")) {
        axes.translations.clear();
        for (const auto& t : j.at("translations")) {
            if (!t.is_array() || t.size() != 2) {
                throw Error(ErrorCode::BadConfig, "translation entries must be [dx, dy]");
            }
            axes.translations.emplace_back(t[0].get<double>(), t[1].get<double>());
        }
    }
    return axes;
}

inline nlohmann::json transforms_to_json(const TransformAxes& axes) {
    nlohmann::json j;
    j["rotations"] = axes.rotations;
    j["flips"] = nlohmann::json::array();
    for (bool f : axes.flips) j["flips"].push_back(f ? "horizontal" : "none");
    j["scales"] = axes.scales;
    j["translations"] = nlohmann::json::array();
    for (const auto& [dx, dy] : axes.translations) j["translations"].push_back({dx, dy});
    return j;
}

inline EnsembleConfig ensemble_from_json(const nlohmann::json& j) {
    EnsembleConfig config;
    const std::string aggregation = j.value("aggregation", "mean");
    if (aggregation != "mean") {
        throw Error(ErrorCode::BadConfig, "unknown aggregation `" + aggregation + "`");
    }
    if (!j.contains("members") || !j.at("members").is_array() || j.at("members").empty()) {
        throw Error(ErrorCode::BadConfig, "ensemble needs a non-empty members list");
    }
    for (const auto& m : j.at("members")) {
        ProviderSpec spec;
        const std::string kind = m.value("kind", "file");
        if (kind == "file") {
            spec.kind = ProviderSpec::Kind::File;
            if (!m.contains("path")) throw Error(ErrorCode::BadConfig, "file provider needs a path");
            spec.path = m.at("path").get<std::string>();
        } else if (kind == "synthetic_oracle") {
            spec.kind = ProviderSpec::Kind::SyntheticOracle;
            spec.synthetic.seed = m.value("seed", 0ull);
            spec.synthetic.pos_strength = m.value("pos_strength", 0.8);
            spec.synthetic.confuser_bias = m.value("confuser_bias", 0.0);
            validate_oracle_spec(spec.synthetic);
        } else {
            throw Error(ErrorCode::BadConfig, "unknown provider kind `" + kind + "`");
        }
        config.members.push_back(std::move(spec));
    }
    return config;
}

inline nlohmann::json ensemble_to_json(const EnsembleConfig& config) {
    nlohmann::json j;
    j["aggregation"] = "mean";
    j["members"] = nlohmann::json::array();
    for (const auto& m : config.members) {
        nlohmann::json e;
        if (m.kind == ProviderSpec::Kind::File) {
            e["kind"] = "file";
            e["path"] = m.path.string();
        } else {
            e["kind"] = "synthetic_oracle";
            e["seed"] = m.synthetic.seed;
            e["pos_strength"] = m.synthetic.pos_strength;
            e["confuser_bias"] = m.synthetic.confuser_bias;
        }
        j["members"].push_back(std::move(e));
    }
    return j;
}

inline GateConfig gate_from_json(const nlohmann::json& j) {
    GateConfig gate;
    gate.enabled = j.value("enabled", false);
    gate.age_cutoff = j.value("age_cutoff", 20);
    gate.ceiling_ratio = j.value("ceiling_ratio", 0.99);
    gate.use_sex = j.value("use_sex", false);
    validate_gate(gate);
    return gate;
}

inline nlohmann::json gate_to_json(const GateConfig& gate) {
    return {{"enabled", gate.enabled},
            {"age_cutoff", gate.age_cutoff},
            {"ceiling_ratio", gate.ceiling_ratio},
            {"use_sex", gate.use_sex}};
}

/// Inputs must not live inside the output directory, or a re-run would read
/// its own products.
inline void validate_run_paths(const RunPaths& paths) {
    if (!paths.out_dir) return;
    const auto out = paths.out_dir->lexically_normal();
    auto inside = [&](const std::filesystem::path& p) {
        const auto norm = p.lexically_normal();
        const auto [out_end, norm_it] = std::mismatch(out.begin(), out.end(), norm.begin(), norm.end());
        return out_end == out.end() && norm_it != norm.end();
    };
    if ((paths.truth && inside(*paths.truth)) || (paths.metadata && inside(*paths.metadata))) {
        throw Error(ErrorCode::BadConfig, "truth/metadata paths must not live inside out_dir");
    }
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
    RunConfig config;
    try {
        if (j.contains("normalization")) config.normalization = normalization_from_json(j.at("normalization"));
        if (j.contains("transforms")) config.transforms = transforms_from_json(j.at("transforms"));
        if (j.contains("providers")) {
            const auto& p = j.at("providers");
            if (p.contains("mm")) config.providers_mm = ensemble_from_json(p.at("mm"));
            if (p.contains("sk")) config.providers_sk = ensemble_from_json(p.at("sk"));
        }
        if (j.contains("calibration")) {
            const auto& c = j.at("calibration");
            if (c.contains("derive")) {
                const auto& d = c.at("derive");
                config.derive.folds = d.value("folds", 5);
                config.derive.fold = d.value("fold", 0);
                config.derive.seed = d.value("seed", 0ull);
            } else {
                config.calibration = calibration_from_json(c);
            }
        }
        if (j.contains("gate")) config.gate = gate_from_json(j.at("gate"));
        if (j.contains("paths")) {
            const auto& p = j.at("paths");
            if (p.contains("truth")) config.paths.truth = std::filesystem::path(p.at("truth").get<std::string>());
            if (p.contains("metadata")) config.paths.metadata = std::filesystem::path(p.at("metadata").get<std::string>());
            if (p.contains("out_dir")) config.paths.out_dir = std::filesystem::path(p.at("out_dir").get<std::string>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::BadConfig, std::string("run config: ") + e.what());
    }
    validate_run_paths(config.paths);
    return config;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::BadConfig, path.string() + ": " + e.what());
    }
    return run_config_from_json(j);
}

}  // namespace dermafuse
