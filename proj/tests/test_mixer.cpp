// Copyright (c) 2026 the instructmt authors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"

#include <set>

#include "instructmt/mixer.hpp"

using namespace instructmt;

namespace {

TaskRecord record_of(const std::string& task, const std::string& instruction,
                     const std::string& src, const std::string& tgt, int64_t id) {
    TaskRecord rec;
    rec.task_name = task;
    try {
        rec.kind = task_kind_from_name(task);
    } catch (const std::runtime_error&) {
        rec.kind = TaskKind::external;
    }
    rec.instruction = instruction;
    rec.src = src;
    rec.tgt = tgt;
    rec.id = id;
    return rec;
}

TaskDataset uniform_dataset(const std::string& task, size_t n) {
    TaskDataset ds;
    for (size_t i = 0; i < n; ++i)
        ds.add(record_of(task, task, "src " + std::to_string(i), "tgt " + std::to_string(i),
                         static_cast<int64_t>(i)));
    return ds;
}

}  // namespace

TEST_SUITE("mixer") {

TEST_CASE("instruction formatting matches the tag template") {
    const TaskRecord rec = record_of("informal", "informal", "Do you like Legos?", "Magst du?", 0);
    const TrainingExample tagged = format_with_instruction(rec, true);
    CHECK(tagged.input_text == "<instruction> informal </instruction> Do you like Legos?");
    CHECK(tagged.target_text == "Magst du?");

    const TaskRecord empty = record_of("empty_instruction", "", "quelle", "ziel", 1);
    CHECK(format_with_instruction(empty, true).input_text ==
          "<instruction>  </instruction> quelle");

    const TaskRecord upper = record_of("uppercase", "uppercase", "hi", "HI", 2);
    CHECK(format_with_instruction(upper, false).input_text == "uppercase hi");

    // formatting never alters the target
    CHECK(format_with_instruction(upper, false).target_text == "HI");
    CHECK(format_with_instruction(upper, true).target_text == "HI");
}

TEST_CASE("stratified split rounds the train side down") {
    const TaskDataset one = uniform_dataset("uppercase", 1000);
    SplitConfig cfg;
    cfg.train_fraction = 0.9;
    cfg.seed = 5;
    auto [train, heldout] = split_task_data(one, cfg);
    CHECK(train.records.size() == 900);
    CHECK(heldout.records.size() == 100);

    TaskDataset two = uniform_dataset("uppercase", 10);
    for (const auto& rec : uniform_dataset("leetify", 10).records) two.add(rec);
    auto [train2, heldout2] = split_task_data(two, cfg);
    CHECK(train2.per_task_counts.at("uppercase") == 9);
    CHECK(train2.per_task_counts.at("leetify") == 9);
    CHECK(heldout2.per_task_counts.at("uppercase") == 1);
    CHECK(heldout2.per_task_counts.at("leetify") == 1);

    // no record is lost or duplicated
    std::set<std::string> seen;
    for (const auto& rec : train2.records) seen.insert(rec.task_name + rec.src);
    for (const auto& rec : heldout2.records) seen.insert(rec.task_name + rec.src);
    CHECK(seen.size() == 20);
}

TEST_CASE("split is deterministic and validates inputs") {
    const TaskDataset data = uniform_dataset("uppercase", 50);
    SplitConfig cfg;
    cfg.seed = 9;
    auto [a_train, a_held] = split_task_data(data, cfg);
    auto [b_train, b_held] = split_task_data(data, cfg);
    REQUIRE(a_train.records.size() == b_train.records.size());
    for (size_t i = 0; i < a_train.records.size(); ++i)
        CHECK(a_train.records[i].src == b_train.records[i].src);

    const TaskDataset tiny = uniform_dataset("uppercase", 1);
    CHECK_THROWS_WITH_AS(split_task_data(tiny, cfg), doctest::Contains("at least 2"),
                         std::runtime_error);
    SplitConfig bad;
    bad.train_fraction = 1.0;
    CHECK_THROWS_AS(split_task_data(data, bad), std::runtime_error);
}

TEST_CASE("mix keeps every task example once and honors the ratio") {
    ParallelCorpus parallel;
    for (int i = 0; i < 1000; ++i)
        parallel.pairs.push_back(
            {i, "p_src " + std::to_string(i), "p_tgt " + std::to_string(i)});
    std::vector<TrainingExample> task;
    for (int i = 0; i < 300; ++i) {
        TrainingExample ex;
        ex.origin = ExampleOrigin::task;
        ex.task_name = "uppercase";
        ex.input_text = "task input " + std::to_string(i);
        ex.target_text = "t";
        task.push_back(ex);
    }
    MixConfig cfg;
    cfg.seed = 3;
    const auto epoch0 = mix_epoch(parallel, task, cfg, 0);
    CHECK(epoch0.size() == 900);  // 300 task + 600 parallel at 2:1
    size_t parallel_count = 0;
    std::set<std::string> task_inputs;
    std::set<std::string> parallel_inputs;
    for (const auto& ex : epoch0) {
        if (ex.origin == ExampleOrigin::parallel) {
            ++parallel_count;
            CHECK(parallel_inputs.insert(ex.input_text).second);  // without replacement
        } else {
            CHECK(task_inputs.insert(ex.input_text).second);  // exactly once
        }
    }
    CHECK(parallel_count == 600);
    CHECK(task_inputs.size() == 300);

    // deterministic per (seed, epoch); resampled across epochs
    const auto epoch0_again = mix_epoch(parallel, task, cfg, 0);
    REQUIRE(epoch0_again.size() == epoch0.size());
    for (size_t i = 0; i < epoch0.size(); ++i)
        CHECK(epoch0[i].input_text == epoch0_again[i].input_text);
    const auto epoch1 = mix_epoch(parallel, task, cfg, 1);
    bool any_difference = false;
    for (size_t i = 0; i < epoch0.size(); ++i)
        if (epoch0[i].input_text != epoch1[i].input_text) any_difference = true;
    CHECK(any_difference);
}

TEST_CASE("mix ablation and error paths") {
    ParallelCorpus parallel;
    for (int i = 0; i < 10; ++i) parallel.pairs.push_back({i, "s", "t"});
    std::vector<TrainingExample> task(300);
    for (size_t i = 0; i < task.size(); ++i) {
        task[i].origin = ExampleOrigin::task;
        task[i].input_text = std::to_string(i);
    }
    MixConfig cfg;
    cfg.no_parallel = true;
    CHECK(mix_epoch(parallel, task, cfg, 0).size() == 300);

    MixConfig strict;
    CHECK_THROWS_WITH_AS(mix_epoch(parallel, task, strict, 0), doctest::Contains("cannot supply"),
                         std::runtime_error);
    CHECK_THROWS_AS(mix_epoch(parallel, {}, strict, 0), std::runtime_error);
}

TEST_CASE("opaque instruction ids splice between the tag ids") {
    auto [bpe, vocab] = train_bpe({"ba du ba du"}, 262);
    const auto tag_ids = expand_vocab(vocab, {"<instruction>", "</instruction>"});

    TaskRecord rec;
    rec.task_name = "image";
    rec.kind = TaskKind::external;
    rec.instruction_tokens = {7, 8, 9};
    rec.src = "ba du";
    rec.tgt = "x";
    const TrainingExample ex = format_with_instruction(rec, true);
    const std::vector<int> ids = encode_example_input(ex, bpe, vocab, true);
    REQUIRE(ids.size() >= 5);
    CHECK(ids[0] == tag_ids[0]);
    CHECK(ids[1] == 7);
    CHECK(ids[2] == 8);
    CHECK(ids[3] == 9);
    CHECK(ids[4] == tag_ids[1]);
    // the remainder encodes " ba du"
    const std::vector<int> tail(ids.begin() + 5, ids.end());
    CHECK(decode(bpe, vocab, tail) == " ba du");

    const std::vector<int> bare = encode_example_input(ex, bpe, vocab, false);
    CHECK(bare[0] == 7);

    // text instructions go through the plain encoder
    TaskRecord text_rec;
    text_rec.task_name = "uppercase";
    text_rec.kind = TaskKind::uppercase;
    text_rec.instruction = "uppercase";
    text_rec.src = "ba du";
    text_rec.tgt = "BA DU";
    const TrainingExample text_ex = format_with_instruction(text_rec, true);
    const std::vector<int> text_ids = encode_example_input(text_ex, bpe, vocab, true);
    CHECK(decode(bpe, vocab, text_ids) == "<instruction> uppercase </instruction> ba du");
}

}
