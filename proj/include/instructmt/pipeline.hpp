// Copyright (c) 2026 the instructmt authors
// SPDX-License-Identifier: Apache-2.0
//
// Config-driven orchestration of the full recipe: every stage writes its
// artifacts plus a manifest under one run directory and is resumable.

#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "instructmt/corpus.hpp"
#include "instructmt/eval.hpp"
#include "instructmt/mixer.hpp"
#include "instructmt/model.hpp"
#include "instructmt/tasks.hpp"
#include "instructmt/tokenizer.hpp"

namespace instructmt {

inline constexpr const char* kToolVersion = "instructmt 0.1.0";

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct PrereqError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ThresholdError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PipelineConfig {
    uint64_t seed = 7;
    std::string out_dir = "runs/toy";

    struct CorpusCfg {
        std::string path;       // parallel training corpus
        std::string test_path;  // held-out general test set
        std::string format = "tsv";
    } corpus;

    struct ToyCfg {
        size_t pairs = 5000;
        size_t test_pairs = 400;
        size_t lexicon_size = 32;
    } toy;

    FilterConfig filter;
    std::string langid_train_path;

    struct TokenizerCfg {
        int vocab_size = 512;
    } tokenizer;

    ModelHyper model;
    TrainConfig train_base;
    TrainConfig finetune;
    int pca_rank = 8;  // embedding-expansion rank

    std::vector<TaskSpec> tasks;
    std::string external_tasks_path;

    struct LexiconPaths {
        std::string translation;
        std::string antonym;
        std::string profanity;
    } lexicons;

    MixConfig mix;
    bool export_epochs = false;  // dump each mixed epoch as JSONL
    SplitConfig split;
    ChrfConfig chrf;

    struct ComposeCfg {
        std::vector<std::pair<std::string, std::string>> pairs = {
            {"uppercase", "insert_x_begin"}};
        std::vector<std::string> join_styles = {"space", "and"};
        size_t items = 40;
    } compose;

    struct InterpolateCfg {
        bool enabled = false;
        std::vector<double> grid = {0.0, 0.25, 0.5, 0.75, 1.0};
        double perf_weight = 0.5;
        size_t test_items = 32;
        size_t sr_items_per_task = 8;
    } interpolate;

    struct Thresholds {
        std::map<std::string, double> sr_min;   // task name -> minimum SR
        std::map<std::string, double> rr_max;   // task name -> maximum RR
        double general_chrf_max_drop = -1.0;    // < 0 disables
    } thresholds;
};

// Fills defaults, rejects unknown keys (naming them) and out-of-range values.
PipelineConfig validate_config(const nlohmann::json& j);
PipelineConfig load_config_file(const std::string& path);
nlohmann::json config_to_json(const PipelineConfig& cfg);
uint64_t config_hash(const PipelineConfig& cfg);

// Applies "a.b.c=value" onto the raw config JSON (values parsed as JSON when
// possible, else kept as strings).
void apply_override(nlohmann::json& j, const std::string& assignment);

uint64_t file_hash(const std::string& path);

// Runs the recipe stage by stage. Completed stages with unchanged config and
// inputs are skipped; a changed config on resume is an error unless force.
class PipelineRunner {
public:
    explicit PipelineRunner(PipelineConfig cfg, bool force = false);

    void synthesize_toy();
    void filter();
    void tokenize();
    void synthesize();
    void train_base();
    void finetune();
    void evaluate();
    void compose_eval();
    void interpolate_stage();
    void reproduce_toy();

    void decode_file(const std::string& input_path, const std::string& instruction,
                     const std::string& checkpoint_name, const std::string& output_path);

    // artifact paths inside the run directory
    std::string path(const std::string& name) const;
    const PipelineConfig& config() const { return cfg_; }

private:
    struct StageIo {
        std::vector<std::string> inputs;
        std::vector<std::string> outputs;
    };
    bool run_stage(const std::string& stage, const StageIo& io,
                   const std::function<void()>& body);
    void require(const std::string& artifact, const std::string& producing_stage) const;

    PipelineConfig cfg_;
    bool force_ = false;
};

}  // namespace instructmt
