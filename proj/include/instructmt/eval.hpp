// Copyright (c) 2026 the instructmt authors
// SPDX-License-Identifier: Apache-2.0
//
// Evaluation protocol: corpus ChrF, Response Rate, Success Rate, per-task
// general-vs-instruction comparison, and zero-shot composition reports.

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "instructmt/tasks.hpp"

namespace instructmt {

struct ChrfConfig {
    int char_order = 6;
    double beta = 2.0;
    double epsilon = 1e-16;
    bool remove_whitespace = true;
};

// Corpus-level character n-gram F_beta in [0,100]: per-order precision and
// recall from counts summed over all segments, F averaged uniformly over
// orders. Orders empty on both sides are skipped; one-sided empties fall back
// to epsilon.
double chrf_corpus(const std::vector<std::string>& hyps, const std::vector<std::string>& refs,
                   const ChrfConfig& cfg = {});

// Percentage of items whose instruction-case output differs from the
// general-case output (exact string compare after trailing-whitespace trim).
double response_rate(const std::vector<std::string>& general_outputs,
                     const std::vector<std::string>& instruction_outputs);

struct EvalTriple {
    std::string src;
    std::string output;
    std::string general_output;
    ParamMap params;
};

// Mean of check_success over the triples, as a percentage.
double success_rate(TaskKind kind, const std::vector<EvalTriple>& triples,
                    const ParamMap& shared_params = {}, const Lexicon* lexicon = nullptr);

struct TaskEvalRow {
    std::string task;
    double rr = 0.0;
    double chrf_general = 0.0;
    double chrf_instruction = 0.0;
    double improvement = 0.0;
    size_t count = 0;
};

// Decodes a record's source with or without its instruction prefix.
using TaskDecodeFn = std::function<std::string(const TaskRecord&, bool with_instruction)>;

// One row per task plus a count-weighted "average" row. Tasks with no records
// are skipped with a warning on stderr.
std::vector<TaskEvalRow> evaluate_tasks(const TaskDecodeFn& decode_fn, const TaskDataset& heldout,
                                        const ChrfConfig& cfg = {});

struct CompositionRow {
    std::string prompt;
    std::string join_style;
    double rr = 0.0;
    double chrf_general = 0.0;
    double chrf_instruction = 0.0;
    double t1_sr = 0.0;
    double t2_sr = 0.0;
    size_t count = 0;
};

// Decodes a record's source with an explicit composed instruction (or without
// any instruction when the instruction pointer is null).
using ComposedDecodeFn =
    std::function<std::string(const TaskRecord&, const std::string* instruction)>;

struct CompositionTaskContext {
    uint64_t seed = 0;          // for per-record instruction resolution
    ParamMap params;            // kind-level params (e.g. length thresholds)
    const Lexicon* lexicon = nullptr;
};

// Builds composed prompts for every task pair and join style ("space" or
// "and"), decodes once per item, and scores both tasks' success on the same
// outputs.
std::vector<CompositionRow> evaluate_composition(
    const ComposedDecodeFn& decode_fn,
    const std::vector<std::pair<TaskKind, TaskKind>>& task_pairs,
    const std::vector<std::string>& join_styles, const TaskDataset& testset,
    const std::map<TaskKind, CompositionTaskContext>& contexts, const ChrfConfig& cfg = {});

// Reports in the layouts of the intrinsic-evaluation and composition tables.
std::string render_task_report(const std::vector<TaskEvalRow>& rows);
std::string task_report_json(const std::vector<TaskEvalRow>& rows);
std::string render_composition_report(const std::vector<CompositionRow>& rows);
std::string composition_report_json(const std::vector<CompositionRow>& rows);

}  // namespace instructmt
