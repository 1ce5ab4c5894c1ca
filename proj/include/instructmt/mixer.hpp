// Copyright (c) 2026 the instructmt authors
// SPDX-License-Identifier: Apache-2.0
//
// Assembles instruction-formatted training examples and interleaves parallel
// and task data at the configured ratio, with a stratified train/heldout
// split of each task.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "instructmt/corpus.hpp"
#include "instructmt/tasks.hpp"
#include "instructmt/tokenizer.hpp"

namespace instructmt {

inline constexpr const char* kInstructionOpenTag = "<instruction>";
inline constexpr const char* kInstructionCloseTag = "</instruction>";

struct MixConfig {
    int ratio_parallel = 2;  // parallel : task, counted in sentence examples
    int ratio_task = 1;
    uint64_t seed = 0;
    bool no_parallel = false;            // ablation: task data only
    bool no_instruction_tokens = false;  // ablation: bare instruction prefix, no tags
};

struct SplitConfig {
    double train_fraction = 0.9;
    uint64_t seed = 0;
};

enum class ExampleOrigin { parallel, task };

struct TrainingExample {
    std::string input_text;
    std::string target_text;
    ExampleOrigin origin = ExampleOrigin::task;
    std::string task_name;               // empty for parallel examples
    std::vector<int> instruction_tokens; // opaque id prefix, resolved at encode time
};

// tags enabled:  "<instruction> " + instruction + " </instruction> " + src
// tags disabled: instruction + " " + src
TrainingExample format_with_instruction(const TaskRecord& record, bool tags_enabled);

// Stratified per task; train fraction rounded down per task.
std::pair<TaskDataset, TaskDataset> split_task_data(const TaskDataset& data,
                                                    const SplitConfig& cfg);

// One epoch: every task example exactly once plus ratio * |task| parallel
// examples sampled without replacement, shuffled together. Deterministic in
// (cfg.seed, epoch); parallel examples are re-sampled per epoch.
std::vector<TrainingExample> mix_epoch(const ParallelCorpus& parallel,
                                       const std::vector<TrainingExample>& task_examples,
                                       const MixConfig& cfg, int epoch);

// Token ids for one example; opaque instruction ids are spliced between the
// tag ids when tags are enabled, or stand bare when they are not.
std::vector<int> encode_example_input(const TrainingExample& example, const BpeModel& model,
                                      const Vocab& vocab, bool tags_enabled);

void export_epoch_jsonl(const std::vector<TrainingExample>& examples, const std::string& path);

}  // namespace instructmt
