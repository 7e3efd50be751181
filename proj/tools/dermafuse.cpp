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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dermafuse/dermafuse.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dermafuse;

namespace {

struct GlobalOptions {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    RunConfig config;
    bool have_config = false;

    void load() {
        if (!config_path.empty()) {
            config = load_run_config(config_path);
            have_config = true;
            if (out_dir.empty() && config.paths.out_dir) out_dir = config.paths.out_dir->string();
        }
    }
};

/// Writes the resolved parameters of the executed command into the out
/// directory, when one is configured, so runs are reproducible from disk.
void echo_effective_config(const GlobalOptions& global, const std::string& command, json parameters) {
    if (global.out_dir.empty()) return;
    fs::create_directories(global.out_dir);
    json doc;
    doc["command"] = command;
    doc["config_file"] = global.config_path;
    doc["seed"] = global.seed;
    doc["workers"] = global.workers;
    doc["parameters"] = std::move(parameters);
    std::ofstream out(fs::path(global.out_dir) / "effective_config.json", std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write effective config into " + global.out_dir);
    out << doc.dump(2) << '\n';
}

void warn_alignment(const AlignResult& aligned, const std::string& which) {
    for (const auto& id : aligned.missing_scores) {
        std::cerr << "warning=MissingScores table=" << which << " id=" << id << '\n';
    }
    for (const auto& id : aligned.unmatched_scores) {
        std::cerr << "warning=UnmatchedScore table=" << which << " id=" << id << '\n';
    }
}

std::vector<GroundTruthRecord> load_truth_arg(const std::string& flag_value, const GlobalOptions& global) {
    if (!flag_value.empty()) return load_ground_truth(flag_value);
    if (global.have_config && global.config.paths.truth) return load_ground_truth(*global.config.paths.truth);
    throw Error(ErrorCode::BadConfig, "ground truth path required (--truth or config paths.truth)");
}

// ---------------------------------------------------------------------------
// normalize
// ---------------------------------------------------------------------------

struct NormalizeArgs {
    std::string in_dir;
    std::string out_dir;
    std::string method;
    double p = -1.0;
    std::string clip;
    double gamma = 0.0;
    bool gamma_set = false;
};

int run_normalize(const GlobalOptions& global, const NormalizeArgs& args) {
    NormalizationConfig config = global.have_config ? global.config.normalization : NormalizationConfig{};
    if (!args.method.empty()) config.method = detail::parse_cc_method(args.method);
    if (args.p >= 0.0) config.p = args.p;
    if (!args.clip.empty()) config.clip = detail::parse_clip_policy(args.clip);
    if (args.gamma_set) config.gamma = args.gamma;
    validate_normalization(config);

    if (!fs::is_directory(args.in_dir)) {
        throw Error(ErrorCode::IoFailure, "input directory " + args.in_dir + " does not exist");
    }
    fs::create_directories(args.out_dir);

    std::vector<fs::path> inputs;
    for (const auto& entry : fs::directory_iterator(args.in_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".png") {
            inputs.push_back(entry.path());
        }
    }
    std::sort(inputs.begin(), inputs.end());

    std::vector<std::string> failures(inputs.size());
    parallel_for(inputs.size(), global.workers, [&](std::size_t i) {
        try {
            const RgbImage image = read_png(inputs[i]);
            const RgbImage normalized = normalize_image(image, config);
            write_png(normalized, fs::path(args.out_dir) / inputs[i].filename());
        } catch (const Error& e) {
            failures[i] = e.what();
        }
    });

    std::size_t failed = 0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (!failures[i].empty()) {
            ++failed;
            std::cerr << "error=" << failures[i] << " file=" << inputs[i].string() << '\n';
        }
    }
    echo_effective_config(global, "normalize",
                          {{"in", args.in_dir},
                           {"out", args.out_dir},
                           {"normalization", normalization_to_json(config)}});
    std::cout << "processed=" << (inputs.size() - failed) << " failed=" << failed << '\n';
    return failed == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// aggregate
// ---------------------------------------------------------------------------

struct AggregateArgs {
    std::string task;
    std::string out;
    std::string truth;
    std::vector<std::string> inputs;
};

int run_aggregate(const GlobalOptions& global, const AggregateArgs& args) {
    const Task task = detail::parse_task(args.task);

    EnsembleConfig ensemble;
    if (!args.inputs.empty()) {
        for (const auto& path : args.inputs) {
            ProviderSpec spec;
            spec.kind = ProviderSpec::Kind::File;
            spec.path = path;
            ensemble.members.push_back(std::move(spec));
        }
    } else {
        const auto& configured = task == Task::MM ? global.config.providers_mm : global.config.providers_sk;
        if (!global.have_config || !configured) {
            throw Error(ErrorCode::BadConfig, "no input score files and no providers in config");
        }
        ensemble = *configured;
    }

    std::optional<std::vector<GroundTruthRecord>> truth;
    const bool needs_truth = std::any_of(ensemble.members.begin(), ensemble.members.end(), [](const auto& m) {
        return m.kind == ProviderSpec::Kind::SyntheticOracle;
    });
    if (needs_truth) truth = load_truth_arg(args.truth, global);

    std::vector<ScoreTable> tables;
    tables.reserve(ensemble.members.size());
    for (const auto& member : ensemble.members) {
        tables.push_back(resolve_provider(member, task, truth ? &*truth : nullptr));
    }
    const ScoreTable mean = aggregate_mean(tables);
    write_scores(mean, args.out);

    echo_effective_config(global, "aggregate",
                          {{"task", args.task}, {"out", args.out}, {"providers", ensemble_to_json(ensemble)}});
    std::cout << "task=" << args.task << " members=" << tables.size() << " entries=" << mean.entries.size()
              << " out=" << args.out << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// calibrate
// ---------------------------------------------------------------------------

struct CalibrateArgs {
    std::string mm_scores;
    std::string sk_scores;
    std::string truth;
    std::string out;
    int folds = -1;
    int calib_fold = -1;
    bool strict = false;
};

int run_calibrate(const GlobalOptions& global, const CalibrateArgs& args) {
    const auto truth = load_truth_arg(args.truth, global);
    const ScoreTable mm_table = load_scores(args.mm_scores, Task::MM);
    const ScoreTable sk_table = load_scores(args.sk_scores, Task::SK);
    const AlignResult mm_aligned = align(mm_table, truth, args.strict);
    const AlignResult sk_aligned = align(sk_table, truth, args.strict);
    warn_alignment(mm_aligned, "mm");
    warn_alignment(sk_aligned, "sk");

    const int folds = args.folds >= 0 ? args.folds : (global.have_config ? global.config.derive.folds : 5);
    const int calib_fold = args.calib_fold >= 0 ? args.calib_fold
                                                : (global.have_config ? global.config.derive.fold : 0);

    auto mm_pairs = binarize(mm_aligned.pairs, Task::MM);
    auto sk_pairs = binarize(sk_aligned.pairs, Task::SK);
    std::string fold_spec = "all";
    if (folds > 0) {
        if (calib_fold < 0 || calib_fold >= folds) {
            throw Error(ErrorCode::BadConfig, "calibration fold index out of range");
        }
        const FoldAssignment assignment = stratified_kfold(truth, folds, global.seed);
        auto keep_fold = [&](std::vector<LabeledScore>& pairs) {
            std::erase_if(pairs, [&](const LabeledScore& p) {
                auto it = assignment.assignment.find(p.id);
                return it == assignment.assignment.end() || it->second != calib_fold;
            });
        };
        keep_fold(mm_pairs);
        keep_fold(sk_pairs);
        fold_spec = "fold " + std::to_string(calib_fold) + "/" + std::to_string(folds) + " seed " +
                    std::to_string(global.seed);
    }

    const EerResult mm_eer = eer_threshold(mm_pairs);
    const EerResult sk_eer = eer_threshold(sk_pairs);
    const Calibration calib = derive_calibration(mm_pairs, sk_pairs, fold_spec);
    write_calibration(calib, args.out);

    echo_effective_config(global, "calibrate",
                          {{"mm_scores", args.mm_scores},
                           {"sk_scores", args.sk_scores},
                           {"out", args.out},
                           {"fold_spec", fold_spec}});
    std::cout << "c_mm_tilde=" << format_double(calib.c_mm_tilde) << " c_sk=" << format_double(calib.c_sk)
              << " alpha=" << format_double(calib.alpha) << " eer_mm=" << format_double(mm_eer.eer)
              << " eer_sk=" << format_double(sk_eer.eer) << " out=" << args.out << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// fuse
// ---------------------------------------------------------------------------

struct FuseArgs {
    std::string mm_scores;
    std::string sk_scores;
    std::string calibration;
    std::string metadata;
    std::string out_mm;
    std::string out_sk;
    int gate_age = -1;
    double gate_gamma = -1.0;
    bool no_gate = false;
};

int run_fuse(const GlobalOptions& global, const FuseArgs& args) {
    const ScoreTable mm_table = load_scores(args.mm_scores, Task::MM);
    const ScoreTable sk_table = load_scores(args.sk_scores, Task::SK);

    Calibration calib;
    if (!args.calibration.empty()) {
        calib = load_calibration(args.calibration);
    } else if (global.have_config && global.config.calibration) {
        calib = *global.config.calibration;
    } else {
        throw Error(ErrorCode::MissingCalibration, "no --calibration file and no inline calibration in config");
    }

    std::vector<MetadataRecord> metadata;
    std::string metadata_path = args.metadata;
    if (metadata_path.empty() && global.have_config && global.config.paths.metadata) {
        metadata_path = global.config.paths.metadata->string();
    }
    if (!metadata_path.empty()) metadata = load_metadata(metadata_path);

    GateConfig gate = global.have_config ? global.config.gate : GateConfig{};
    if (!metadata_path.empty()) gate.enabled = true;
    if (args.no_gate) gate.enabled = false;
    if (args.gate_age >= 0) gate.age_cutoff = args.gate_age;
    if (args.gate_gamma >= 0.0) gate.ceiling_ratio = args.gate_gamma;

    const FusedScores fused = run_pipeline(mm_table, sk_table, calib, metadata, gate, global.workers);
    write_scores(fused.mm, args.out_mm);
    write_scores(fused.sk, args.out_sk);

    std::size_t gated = 0;
    for (const auto& [id, score] : fused.sk.entries) {
        if (score != sk_table.entries.at(id)) ++gated;
    }
    echo_effective_config(global, "fuse",
                          {{"mm_scores", args.mm_scores},
                           {"sk_scores", args.sk_scores},
                           {"calibration", calibration_to_json(calib)},
                           {"metadata", metadata_path},
                           {"gate", gate_to_json(gate)},
                           {"out_mm", args.out_mm},
                           {"out_sk", args.out_sk}});
    std::cout << "ids=" << fused.mm.entries.size() << " gated=" << gated << " out_mm=" << args.out_mm
              << " out_sk=" << args.out_sk << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateArgs {
    std::string mm_scores;
    std::string sk_scores;
    std::string truth;
    std::string out;
    std::string emit_roc;
    bool strict = false;
};

int run_evaluate(const GlobalOptions& global, const EvaluateArgs& args) {
    const auto truth = load_truth_arg(args.truth, global);
    const ScoreTable mm_table = load_scores(args.mm_scores, Task::MM);
    const ScoreTable sk_table = load_scores(args.sk_scores, Task::SK);

    const AlignResult mm_aligned = align(mm_table, truth, args.strict);
    const AlignResult sk_aligned = align(sk_table, truth, args.strict);
    warn_alignment(mm_aligned, "mm");
    warn_alignment(sk_aligned, "sk");

    const EvalResult result = evaluate_tables(mm_table, sk_table, truth, args.strict);
    write_report(result.report, args.out);
    if (!args.emit_roc.empty()) {
        fs::create_directories(args.emit_roc);
        write_roc_csv(result.roc_mm, fs::path(args.emit_roc) / "roc_mm.csv");
        write_roc_csv(result.roc_sk, fs::path(args.emit_roc) / "roc_sk.csv");
    }

    echo_effective_config(global, "evaluate",
                          {{"mm_scores", args.mm_scores},
                           {"sk_scores", args.sk_scores},
                           {"out", args.out},
                           {"emit_roc", args.emit_roc}});
    std::cout << "auc_mm=" << format_double(result.report.auc_mm)
              << " auc_sk=" << format_double(result.report.auc_sk)
              << " mean_auc=" << format_double(result.report.mean_auc)
              << " ap_mm=" << format_double(result.report.ap_mm.value_or(0.0))
              << " ap_sk=" << format_double(result.report.ap_sk.value_or(0.0)) << " out=" << args.out << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// split
// ---------------------------------------------------------------------------

struct SplitArgs {
    std::string truth;
    int folds = 5;
    std::string out;
};

int run_split(const GlobalOptions& global, const SplitArgs& args) {
    const auto truth = load_truth_arg(args.truth, global);
    const FoldAssignment folds = stratified_kfold(truth, args.folds, global.seed);
    std::vector<std::vector<std::string>> rows;
    rows.reserve(folds.assignment.size());
    for (const auto& [id, fold] : folds.assignment) {
        rows.push_back({id, std::to_string(fold)});
    }
    write_csv(args.out, "image_id,fold", rows);
    echo_effective_config(global, "split", {{"truth", args.truth}, {"folds", args.folds}, {"out", args.out}});
    std::cout << "folds=" << args.folds << " assigned=" << folds.assignment.size() << " out=" << args.out
              << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// synth-scores
// ---------------------------------------------------------------------------

struct SynthArgs {
    std::string truth;
    std::string task;
    std::string out;
    double pos_strength = 0.8;
    double confuser_bias = 0.0;
};

int run_synth(const GlobalOptions& global, const SynthArgs& args) {
    const auto truth = load_truth_arg(args.truth, global);
    SyntheticOracleSpec spec;
    spec.task = detail::parse_task(args.task);
    spec.seed = global.seed;
    spec.pos_strength = args.pos_strength;
    spec.confuser_bias = args.confuser_bias;
    const ScoreTable table = synthetic_oracle_scores(truth, spec);
    write_scores(table, args.out);
    echo_effective_config(global, "synth-scores",
                          {{"truth", args.truth},
                           {"task", args.task},
                           {"pos_strength", args.pos_strength},
                           {"confuser_bias", args.confuser_bias},
                           {"out", args.out}});
    std::cout << "task=" << args.task << " entries=" << table.entries.size() << " out=" << args.out << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dermafuse: lesion-classification scoring pipeline (normalization, calibration, fusion, evaluation)"};
    app.set_version_flag("--version", "dermafuse 0.1.0");
    app.require_subcommand(1);

    GlobalOptions global;
    app.add_option("--config", global.config_path, "JSON run configuration; flags override its fields");
    app.add_option("--out-dir", global.out_dir, "directory receiving the effective-config echo");
    app.add_option("--seed", global.seed, "seed for all randomized operations");
    app.add_option("--workers", global.workers, "worker thread count (outputs are identical for any value)");

    int exit_code = 0;

    auto* normalize = app.add_subcommand("normalize", "color-constancy normalization of a PNG directory");
    auto norm_args = std::make_shared<NormalizeArgs>();
    normalize->add_option("--in", norm_args->in_dir, "input directory of PNGs")->required();
    normalize->add_option("--out", norm_args->out_dir, "output directory")->required();
    normalize->add_option("--method", norm_args->method, "gray-world | shades-of-gray | max-rgb");
    normalize->add_option("--p", norm_args->p, "Minkowski order for shades-of-gray");
    normalize->add_option("--clip", norm_args->clip, "clip | rescale");
    normalize->add_option("--gamma", norm_args->gamma, "linearize with this gamma before correcting")
        ->each([norm_args](const std::string&) { norm_args->gamma_set = true; });
    normalize->callback([&, norm_args] {
        global.load();
        exit_code = run_normalize(global, *norm_args);
    });

    auto* aggregate = app.add_subcommand("aggregate", "mean-aggregate member score tables");
    auto agg_args = std::make_shared<AggregateArgs>();
    aggregate->add_option("--task", agg_args->task, "mm | sk")->required();
    aggregate->add_option("--out", agg_args->out, "output score CSV")->required();
    aggregate->add_option("--truth", agg_args->truth, "ground truth CSV (needed for synthetic members)");
    aggregate->add_option("inputs", agg_args->inputs, "member score CSVs (default: providers from config)");
    aggregate->callback([&, agg_args] {
        global.load();
        exit_code = run_aggregate(global, *agg_args);
    });

    auto* calibrate = app.add_subcommand("calibrate", "derive EER thresholds and alpha from labeled scores");
    auto cal_args = std::make_shared<CalibrateArgs>();
    calibrate->add_option("--mm-scores", cal_args->mm_scores, "MM score CSV")->required();
    calibrate->add_option("--sk-scores", cal_args->sk_scores, "SK score CSV")->required();
    calibrate->add_option("--truth", cal_args->truth, "ground truth CSV");
    calibrate->add_option("--out", cal_args->out, "output calibration JSON")->required();
    calibrate->add_option("--folds", cal_args->folds, "stratified fold count; 0 calibrates on all samples");
    calibrate->add_option("--calib-fold", cal_args->calib_fold, "held-out fold supplying the calibration samples");
    calibrate->add_flag("--strict", cal_args->strict, "fail when a truth id has no score");
    calibrate->callback([&, cal_args] {
        global.load();
        exit_code = run_calibrate(global, *cal_args);
    });

    auto* fuse = app.add_subcommand("fuse", "gate SK scores and fuse them into the MM scores");
    auto fuse_args = std::make_shared<FuseArgs>();
    fuse->add_option("--mm-scores", fuse_args->mm_scores, "base MM score CSV")->required();
    fuse->add_option("--sk-scores", fuse_args->sk_scores, "base SK score CSV")->required();
    fuse->add_option("--calibration", fuse_args->calibration, "calibration JSON");
    fuse->add_option("--metadata", fuse_args->metadata, "metadata CSV enabling the age gate");
    fuse->add_option("--gate-age", fuse_args->gate_age, "age cutoff in years");
    fuse->add_option("--gate-gamma", fuse_args->gate_gamma, "gate ceiling ratio in (0,1]");
    fuse->add_flag("--no-gate", fuse_args->no_gate, "disable the age gate");
    fuse->add_option("--out-mm", fuse_args->out_mm, "fused MM score CSV")->required();
    fuse->add_option("--out-sk", fuse_args->out_sk, "gated SK score CSV")->required();
    fuse->callback([&, fuse_args] {
        global.load();
        exit_code = run_fuse(global, *fuse_args);
    });

    auto* evaluate = app.add_subcommand("evaluate", "ROC/AUC/AP evaluation against ground truth");
    auto eval_args = std::make_shared<EvaluateArgs>();
    evaluate->add_option("--mm-scores", eval_args->mm_scores, "MM score CSV")->required();
    evaluate->add_option("--sk-scores", eval_args->sk_scores, "SK score CSV")->required();
    evaluate->add_option("--truth", eval_args->truth, "ground truth CSV");
    evaluate->add_option("--out", eval_args->out, "output report JSON")->required();
    evaluate->add_option("--emit-roc", eval_args->emit_roc, "directory receiving roc_mm.csv and roc_sk.csv");
    evaluate->add_flag("--strict", eval_args->strict, "fail when a truth id has no score");
    evaluate->callback([&, eval_args] {
        global.load();
        exit_code = run_evaluate(global, *eval_args);
    });

    auto* split = app.add_subcommand("split", "deterministic stratified k-fold assignment");
    auto split_args = std::make_shared<SplitArgs>();
    split->add_option("--truth", split_args->truth, "ground truth CSV");
    split->add_option("--folds", split_args->folds, "fold count (>= 2)")->required();
    split->add_option("--out", split_args->out, "output CSV `image_id,fold`")->required();
    split->callback([&, split_args] {
        global.load();
        exit_code = run_split(global, *split_args);
    });

    auto* synth = app.add_subcommand("synth-scores", "synthetic oracle scores for a ground truth set");
    auto synth_args = std::make_shared<SynthArgs>();
    synth->add_option("--truth", synth_args->truth, "ground truth CSV");
    synth->add_option("--task", synth_args->task, "mm | sk")->required();
    synth->add_option("--out", synth_args->out, "output score CSV")->required();
    synth->add_option("--pos-strength", synth_args->pos_strength, "separation strength in (0,1]");
    synth->add_option("--confuser-bias", synth_args->confuser_bias, "additive bias for SK negatives (task mm)");
    synth->callback([&, synth_args] {
        global.load();
        exit_code = run_synth(global, *synth_args);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const Error& e) {
        std::cerr << "error=" << e.name() << " " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error=Internal " << e.what() << '\n';
        return 1;
    }
    return exit_code;
}
