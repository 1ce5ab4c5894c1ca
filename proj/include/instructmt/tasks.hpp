// Copyright (c) 2026 the instructmt authors
// SPDX-License-Identifier: Apache-2.0
//
// Instruction-task synthesis from parallel data: deterministic per-kind
// transforms, per-kind binary success checkers, and ingestion of externally
// generated task data.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "instructmt/corpus.hpp"
#include "instructmt/lexicon.hpp"

namespace instructmt {

enum class TaskKind {
    uppercase,
    lowercase,
    titlecase,
    remove_punctuation,
    leetify,
    remove_accents,
    shuffle_words,
    add_hashtag,
    insert_x_begin,
    insert_x_end,
    spacing_error,
    coverage_error,
    repetition_error,
    fix_misspelling,
    translate_x_to_y,
    remove_profanity,
    add_antonyms,
    length_same,
    length_shorter,
    length_longer,
    empty_instruction,
    external,
};

std::string task_kind_name(TaskKind kind);
TaskKind task_kind_from_name(const std::string& name);
// Every kind except `external`.
const std::vector<TaskKind>& native_task_kinds();

// Default instruction text for a kind ("uppercase", "insert \"{X}\" at the
// beginning", ...). Placeholders {X}/{Y} are resolved per record.
std::string default_instruction_template(TaskKind kind);

using ParamMap = std::map<std::string, std::string>;

struct TaskRecord {
    TaskKind kind = TaskKind::external;
    std::string task_name;                   // kind name, or the external task label
    std::string instruction;                 // empty only for empty_instruction
    std::vector<int> instruction_tokens;     // opaque instruction ids (external data)
    std::string src;
    std::string tgt;
    int64_t id = 0;
    ParamMap params;                         // resolved placeholders, checker inputs
};

struct TaskDataset {
    std::vector<TaskRecord> records;
    std::map<std::string, size_t> per_task_counts;

    void add(TaskRecord rec);
    void recount();
};

struct TaskSpec {
    TaskKind kind = TaskKind::uppercase;
    std::string instruction_template;  // empty -> default template for the kind
    ParamMap params;
    size_t samples = 0;
    uint64_t seed = 0;
};

struct LengthThresholds {
    double shorter_below = 0.8;
    double same_low = 0.95;
    double same_high = 1.05;
    double longer_above = 1.25;
};

// Labels a pair by the target/source word-count ratio, or nothing when the
// ratio falls between buckets.
std::optional<TaskKind> contrastive_length_label(const SentencePair& pair,
                                                 const LengthThresholds& thresholds = {});

// Applies the kind's transform to one pair. Returns nothing when the pair is
// ineligible (e.g. no punctuation to remove). Deterministic in (seed, pair.id).
std::optional<TaskRecord> apply_transform(TaskKind kind, const SentencePair& pair, uint64_t seed,
                                          const ParamMap& params = {},
                                          const Lexicon* lexicon = nullptr);

// Resolves the instruction text (and its placeholder params) a kind would use
// on this pair, without transforming. Used for zero-shot composition prompts.
std::pair<std::string, ParamMap> resolve_instruction(TaskKind kind, const SentencePair& pair,
                                                     uint64_t seed, const ParamMap& params = {},
                                                     const Lexicon* lexicon = nullptr);

// Scans the corpus in seeded random order, transforming until spec.samples
// records are produced or the corpus is exhausted.
TaskDataset synthesize_task_dataset(const ParallelCorpus& corpus, const TaskSpec& spec,
                                    const Lexicon* lexicon = nullptr);

// Per-kind binary success predicate. `general_output` is the same model's
// no-instruction translation of src.
bool check_success(TaskKind kind, const std::string& src, const std::string& output,
                   const std::string& general_output, const ParamMap& params = {},
                   const Lexicon* lexicon = nullptr);

// Parses placeholder params back out of an instruction string (the quoted
// X / Y arguments of the insert and translate instructions).
ParamMap params_from_instruction(TaskKind kind, const std::string& instruction);

// JSONL with fields: task, instruction (string) or instruction_tokens (int
// list), src, tgt, and optionally params. Records load with kind `external`
// unless the task field names a native kind.
TaskDataset ingest_external(const std::string& path);
void save_task_dataset(const TaskDataset& data, const std::string& path);
TaskDataset load_task_dataset(const std::string& path);

}  // namespace instructmt
