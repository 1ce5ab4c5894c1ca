// Copyright (c) 2026 the instructmt authors
// SPDX-License-Identifier: Apache-2.0

#include "instructmt/mixer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

#include "instructmt/rng.hpp"

namespace instructmt {

using nlohmann::json;

TrainingExample format_with_instruction(const TaskRecord& record, bool tags_enabled) {
    TrainingExample ex;
    ex.origin = ExampleOrigin::task;
    ex.task_name = record.task_name;
    ex.target_text = record.tgt;
    ex.instruction_tokens = record.instruction_tokens;
    if (!record.instruction_tokens.empty()) {
        // opaque instruction ids are spliced in at encode time
        ex.input_text = record.src;
    } else if (tags_enabled) {
        ex.input_text = std::string(kInstructionOpenTag) + " " + record.instruction + " " +
                        kInstructionCloseTag + " " + record.src;
    } else {
        ex.input_text = record.instruction + " " + record.src;
    }
    return ex;
}

std::pair<TaskDataset, TaskDataset> split_task_data(const TaskDataset& data,
                                                    const SplitConfig& cfg) {
    if (cfg.train_fraction <= 0.0 || cfg.train_fraction >= 1.0)
        throw std::runtime_error("train fraction must lie strictly between 0 and 1");

    std::map<std::string, std::vector<size_t>> by_task;
    for (size_t i = 0; i < data.records.size(); ++i)
        by_task[data.records[i].task_name].push_back(i);

    TaskDataset train, heldout;
    for (const auto& [task, indices] : by_task) {
        if (indices.size() < 2)
            throw std::runtime_error("task " + task + " needs at least 2 records to split");
        std::vector<size_t> order = indices;
        Rng rng(mix_seed(cfg.seed, "split:" + task));
        rng.shuffle(order);
        const size_t train_n = static_cast<size_t>(
            std::floor(static_cast<double>(order.size()) * cfg.train_fraction));
        for (size_t i = 0; i < order.size(); ++i) {
            if (i < train_n) {
                train.add(data.records[order[i]]);
            } else {
                heldout.add(data.records[order[i]]);
            }
        }
    }
    return {std::move(train), std::move(heldout)};
}

std::vector<TrainingExample> mix_epoch(const ParallelCorpus& parallel,
                                       const std::vector<TrainingExample>& task_examples,
                                       const MixConfig& cfg, int epoch) {
    if (task_examples.empty()) throw std::runtime_error("no task examples to mix");
    if (cfg.ratio_parallel <= 0 || cfg.ratio_task <= 0)
        throw std::runtime_error("mix ratio components must be positive");

    std::vector<TrainingExample> out = task_examples;
    if (!cfg.no_parallel) {
        const size_t need = task_examples.size() * static_cast<size_t>(cfg.ratio_parallel) /
                            static_cast<size_t>(cfg.ratio_task);
        if (parallel.size() < need)
            throw std::runtime_error("parallel pool of " + std::to_string(parallel.size()) +
                                     " pairs cannot supply " + std::to_string(need) +
                                     " examples per epoch");
        std::vector<size_t> idx(parallel.size());
        std::iota(idx.begin(), idx.end(), 0);
        Rng sample_rng(mix_seed(cfg.seed, "mix_parallel", static_cast<uint64_t>(epoch)));
        sample_rng.shuffle(idx);
        for (size_t i = 0; i < need; ++i) {
            const auto& pair = parallel.pairs[idx[i]];
            TrainingExample ex;
            ex.origin = ExampleOrigin::parallel;
            ex.input_text = pair.src;
            ex.target_text = pair.tgt;
            out.push_back(std::move(ex));
        }
    }
    Rng shuffle_rng(mix_seed(cfg.seed, "mix_shuffle", static_cast<uint64_t>(epoch)));
    shuffle_rng.shuffle(out);
    return out;
}

std::vector<int> encode_example_input(const TrainingExample& example, const BpeModel& model,
                                      const Vocab& vocab, bool tags_enabled) {
    if (example.instruction_tokens.empty()) return encode(model, vocab, example.input_text);

    std::vector<int> ids;
    if (tags_enabled) {
        auto open = vocab.token_to_id.find(kInstructionOpenTag);
        auto close = vocab.token_to_id.find(kInstructionCloseTag);
        if (open == vocab.token_to_id.end() || close == vocab.token_to_id.end())
            throw std::runtime_error("instruction tags are not in the vocabulary");
        ids.push_back(open->second);
        ids.insert(ids.end(), example.instruction_tokens.begin(),
                   example.instruction_tokens.end());
        ids.push_back(close->second);
    } else {
        ids = example.instruction_tokens;
    }
    const std::vector<int> src_ids = encode(model, vocab, " " + example.input_text);
    ids.insert(ids.end(), src_ids.begin(), src_ids.end());
    return ids;
}

void export_epoch_jsonl(const std::vector<TrainingExample>& examples, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write epoch file: " + path);
    for (const auto& ex : examples) {
        json rec;
        rec["input"] = ex.input_text;
        rec["target"] = ex.target_text;
        rec["origin"] = ex.origin == ExampleOrigin::parallel ? "parallel" : "task";
        rec["task"] = ex.task_name;
        if (!ex.instruction_tokens.empty()) rec["instruction_tokens"] = ex.instruction_tokens;
        out << rec.dump() << '\n';
    }
}

}  // namespace instructmt
