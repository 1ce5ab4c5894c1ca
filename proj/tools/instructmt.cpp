// Copyright (c) 2026 the instructmt authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line driver for the instruction-finetuning recipe. Each subcommand
// runs one stage against a single JSON config; reproduce-toy chains the whole
// pipeline on the synthetic language pair.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "instructmt/pipeline.hpp"

using namespace instructmt;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitPrereq = 2;
constexpr int kExitThreshold = 3;

int check_thresholds(const PipelineRunner& runner) {
    const std::string path = runner.path("threshold_violations.json");
    if (!std::filesystem::exists(path)) return kExitOk;
    std::ifstream in(path);
    json violations;
    in >> violations;
    if (violations.empty()) return kExitOk;
    std::cerr << "acceptance thresholds violated:\n";
    for (const auto& v : violations) std::cerr << "  - " << v.get<std::string>() << "\n";
    return kExitThreshold;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"instruction finetuning toolkit for small translation models"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir_flag;
    int64_t seed_flag = -1;
    bool no_parallel_mix = false;
    bool no_instruction_tokens = false;
    bool force = false;
    bool print_config = false;

    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--set", overrides, "override a config field, e.g. --set mix.ratio=3:1");
    app.add_option("--out", out_dir_flag, "output directory (overrides config)");
    app.add_option("--seed", seed_flag, "global seed (overrides config)");
    app.add_flag("--no-parallel-mix", no_parallel_mix, "finetune on task data only");
    app.add_flag("--no-instruction-tokens", no_instruction_tokens,
                 "format instructions without the tag tokens");
    app.add_flag("--force", force, "re-run stages even if manifests are up to date");
    app.add_flag("--print-config", print_config, "print the normalized config and exit");

    auto* cmd_filter = app.add_subcommand("filter", "load and filter the parallel corpus");
    auto* cmd_synth = app.add_subcommand("synthesize", "build instruction task datasets");
    auto* cmd_tok = app.add_subcommand("tokenize", "train the subword vocabulary");
    auto* cmd_base = app.add_subcommand("train-base", "train the base translation model");
    auto* cmd_ft = app.add_subcommand("finetune", "instruction-finetune the base model");
    auto* cmd_decode = app.add_subcommand("decode", "translate a file of source lines");
    auto* cmd_eval = app.add_subcommand("eval", "per-task intrinsic evaluation");
    auto* cmd_compose = app.add_subcommand("compose-eval", "zero-shot composition evaluation");
    auto* cmd_interp = app.add_subcommand("interpolate", "search the base/finetuned blend");
    auto* cmd_toy = app.add_subcommand("reproduce-toy", "run the whole recipe on toy data");

    std::string decode_input, decode_output = "-", decode_instruction, decode_ckpt = "finetuned";
    cmd_decode->add_option("--input", decode_input, "file with one source per line")->required();
    cmd_decode->add_option("--output", decode_output, "output file (default stdout)");
    cmd_decode->add_option("--instruction", decode_instruction, "optional instruction prefix");
    cmd_decode->add_option("--checkpoint", decode_ckpt, "base | finetuned | interpolated");

    // global options may appear after the subcommand name
    for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; }))
        sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        json raw = json::object();
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw ConfigError("cannot open config file: " + config_path);
            try {
                in >> raw;
            } catch (const json::parse_error& e) {
                throw ConfigError(config_path + ": invalid JSON: " + e.what());
            }
        }
        for (const auto& assignment : overrides) apply_override(raw, assignment);
        if (seed_flag >= 0) raw["seed"] = static_cast<uint64_t>(seed_flag);
        if (!out_dir_flag.empty()) raw["out_dir"] = out_dir_flag;
        if (const char* env_out = std::getenv("INSTRUCTMT_OUT_DIR"))
            raw["out_dir"] = std::string(env_out);
        if (no_parallel_mix) raw["mix"]["no_parallel"] = true;
        if (no_instruction_tokens) raw["mix"]["no_instruction_tokens"] = true;

        PipelineConfig cfg = validate_config(raw);
        if (print_config) {
            std::cout << config_to_json(cfg).dump(2) << "\n";
            return kExitOk;
        }

        PipelineRunner runner(cfg, force);
        if (cmd_filter->parsed()) {
            runner.filter();
        } else if (cmd_tok->parsed()) {
            runner.tokenize();
        } else if (cmd_synth->parsed()) {
            runner.synthesize();
        } else if (cmd_base->parsed()) {
            runner.train_base();
        } else if (cmd_ft->parsed()) {
            runner.finetune();
        } else if (cmd_decode->parsed()) {
            const std::string out_path =
                decode_output == "-" ? runner.path("decoded.txt") : decode_output;
            runner.decode_file(decode_input, decode_instruction, decode_ckpt, out_path);
            if (decode_output == "-") {
                std::ifstream in(out_path);
                std::cout << in.rdbuf();
            }
        } else if (cmd_eval->parsed()) {
            runner.evaluate();
            std::ifstream report(runner.path("eval_report.txt"));
            std::cout << report.rdbuf();
            return check_thresholds(runner);
        } else if (cmd_compose->parsed()) {
            runner.compose_eval();
            std::ifstream report(runner.path("compose_report.txt"));
            std::cout << report.rdbuf();
        } else if (cmd_interp->parsed()) {
            runner.interpolate_stage();
        } else if (cmd_toy->parsed()) {
            runner.reproduce_toy();
            std::ifstream report(runner.path("eval_report.txt"));
            std::cout << report.rdbuf();
            std::ifstream compose(runner.path("compose_report.txt"));
            std::cout << "\n" << compose.rdbuf();
            return check_thresholds(runner);
        }
        return kExitOk;
    } catch (const ThresholdError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitThreshold;
    } catch (const PrereqError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPrereq;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
}
