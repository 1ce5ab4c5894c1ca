// Copyright (c) 2026 the instructmt authors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "instructmt/tasks.hpp"
#include "instructmt/text.hpp"

using namespace instructmt;

namespace {

SentencePair pair_of(int64_t id, const std::string& src, const std::string& tgt) {
    return {id, src, tgt};
}

std::string write_temp(const std::string& name, const std::string& content) {
    const std::string path = (std::filesystem::temp_directory_path() / name).string();
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

}  // namespace

TEST_SUITE("tasks") {

TEST_CASE("uppercase transform and checker") {
    const auto rec = apply_transform(TaskKind::uppercase, pair_of(0, "src", "Guten Tag."), 1);
    REQUIRE(rec.has_value());
    CHECK(rec->tgt == "GUTEN TAG.");
    CHECK(rec->instruction == "uppercase");
    CHECK(check_success(TaskKind::uppercase, "x", "ABC DEF", ""));
    CHECK_FALSE(check_success(TaskKind::uppercase, "x", "ABC dEF", ""));
    CHECK_FALSE(check_success(TaskKind::uppercase, "x", "123 !", ""));  // needs a letter
}

TEST_CASE("add_hashtag appends the last alphanumeric source word") {
    const auto rec = apply_transform(TaskKind::add_hashtag,
                                     pair_of(0, "does it damage the nails?", "schadet es?"), 1);
    REQUIRE(rec.has_value());
    CHECK(rec->tgt == "schadet es? #nails");
    CHECK(check_success(TaskKind::add_hashtag, "does it damage the nails?",
                        "whatever #nails", ""));
    CHECK_FALSE(check_success(TaskKind::add_hashtag, "does it damage the nails?",
                              "whatever #hands", ""));
}

TEST_CASE("leetify applies the fixed mapping to every occurrence") {
    const auto rec = apply_transform(TaskKind::leetify, pair_of(0, "src", "lese"), 1);
    REQUIRE(rec.has_value());
    CHECK(rec->tgt == "l353");
    const auto full = apply_transform(TaskKind::leetify, pair_of(0, "src", "aeiost AEIOST"), 1);
    REQUIRE(full.has_value());
    CHECK(full->tgt == "431057 431057");
    CHECK(check_success(TaskKind::leetify, "x", "l353", ""));
    CHECK_FALSE(check_success(TaskKind::leetify, "x", "lese", ""));
}

TEST_CASE("remove_punctuation needs punctuation") {
    CHECK_FALSE(apply_transform(TaskKind::remove_punctuation,
                                pair_of(0, "src", "kein satzzeichen"), 1)
                    .has_value());
    const auto rec =
        apply_transform(TaskKind::remove_punctuation, pair_of(0, "src", "ja, gut!"), 1);
    REQUIRE(rec.has_value());
    CHECK(rec->tgt == "ja gut");
    CHECK(check_success(TaskKind::remove_punctuation, "x", "ja gut", ""));
    CHECK_FALSE(check_success(TaskKind::remove_punctuation, "x", "ja, gut", ""));
}

TEST_CASE("insert tasks sample a source word") {
    const auto begin =
        apply_transform(TaskKind::insert_x_begin, pair_of(3, "alpha beta gamma", "ziel satz"), 9);
    REQUIRE(begin.has_value());
    const std::string x = begin->params.at("x");
    CHECK((x == "alpha" || x == "beta" || x == "gamma"));
    CHECK(begin->tgt == x + " ziel satz");
    CHECK(begin->instruction == "insert \"" + x + "\" at the beginning");
    CHECK(check_success(TaskKind::insert_x_begin, "s", "NOTE hallo", "", {{"x", "NOTE"}}));
    CHECK_FALSE(check_success(TaskKind::insert_x_begin, "s", "NOTEX hallo", "", {{"x", "NOTE"}}));

    const auto end =
        apply_transform(TaskKind::insert_x_end, pair_of(3, "alpha beta gamma", "ziel satz"), 9);
    REQUIRE(end.has_value());
    CHECK(end->tgt == "ziel satz " + end->params.at("x"));
    CHECK(check_success(TaskKind::insert_x_end, "s", "hallo NOTE", "", {{"x", "NOTE"}}));
}

TEST_CASE("params round trip through the instruction text") {
    const auto rec =
        apply_transform(TaskKind::insert_x_begin, pair_of(3, "alpha beta", "ziel"), 9);
    REQUIRE(rec.has_value());
    const ParamMap parsed = params_from_instruction(TaskKind::insert_x_begin, rec->instruction);
    CHECK(parsed.at("x") == rec->params.at("x"));
}

TEST_CASE("noise tasks keep their own checkers satisfied") {
    const SentencePair pair = pair_of(4, "one two three four", "viele lange woerter hier drin");
    for (TaskKind kind : {TaskKind::spacing_error, TaskKind::coverage_error,
                          TaskKind::repetition_error, TaskKind::shuffle_words}) {
        CAPTURE(task_kind_name(kind));
        const auto rec = apply_transform(kind, pair, 17);
        REQUIRE(rec.has_value());
        CHECK(check_success(kind, rec->src, rec->tgt, pair.tgt, rec->params));
        CHECK(rec->tgt != pair.tgt);
    }
}

TEST_CASE("fix_misspelling corrupts the source only") {
    const SentencePair pair = pair_of(5, "update the storage file", "sauberes ziel");
    const auto rec = apply_transform(TaskKind::fix_misspelling, pair, 21);
    REQUIRE(rec.has_value());
    CHECK(rec->tgt == pair.tgt);
    CHECK(rec->src != pair.src);
    CHECK(rec->params.count("corrupted") == 1);
    CHECK(rec->params.at("corrupted") != rec->params.at("clean"));
    // the corrupted token must not survive into a fixed output
    CHECK(check_success(TaskKind::fix_misspelling, rec->src, pair.src, "", rec->params));
    CHECK_FALSE(check_success(TaskKind::fix_misspelling, rec->src,
                              "echo " + rec->params.at("corrupted"), "", rec->params));
}

TEST_CASE("translate_x_to_y replaces the competitor when known") {
    Lexicon lex;
    lex.kind = LexiconKind::translation;
    lex.entries = {{"cat", "Katze"}};
    const SentencePair pair = pair_of(6, "the cat sleeps", "die mieze schlaeft");
    ParamMap params = {{"competitor.cat", "mieze"}};
    const auto rec = apply_transform(TaskKind::translate_x_to_y, pair, 2, params, &lex);
    REQUIRE(rec.has_value());
    CHECK(rec->tgt == "die Katze schlaeft");
    CHECK(rec->instruction == "translate \"cat\" to \"Katze\"");
    CHECK(rec->src.find("cat") != std::string::npos);
    CHECK(rec->tgt.find("Katze") != std::string::npos);
    CHECK(check_success(TaskKind::translate_x_to_y, rec->src, rec->tgt, "", rec->params));

    // without competitor knowledge the pair must already contain Y
    const auto filtered = apply_transform(TaskKind::translate_x_to_y,
                                          pair_of(7, "the cat sleeps", "die Katze schlaeft"), 2,
                                          {}, &lex);
    REQUIRE(filtered.has_value());
    CHECK(filtered->tgt == "die Katze schlaeft");
    CHECK_FALSE(apply_transform(TaskKind::translate_x_to_y, pair, 2, {}, &lex).has_value());
}

TEST_CASE("profanity and antonym lexicon transforms") {
    Lexicon profanity;
    profanity.kind = LexiconKind::profanity;
    profanity.entries = {{"damn", ""}};
    const auto rec = apply_transform(TaskKind::remove_profanity,
                                     pair_of(8, "src", "well damn that hurt"), 3, {}, &profanity);
    REQUIRE(rec.has_value());
    CHECK(rec->tgt == "well that hurt");
    CHECK_FALSE(check_success(TaskKind::remove_profanity, "s", "oh damn", "", {}, &profanity));
    CHECK(check_success(TaskKind::remove_profanity, "s", "oh no", "", {}, &profanity));

    Lexicon antonyms;
    antonyms.kind = LexiconKind::antonym;
    antonyms.entries = {{"warm", "kalt"}};
    const auto anto = apply_transform(TaskKind::add_antonyms,
                                      pair_of(9, "src", "sehr warm heute"), 3, {}, &antonyms);
    REQUIRE(anto.has_value());
    CHECK(anto->tgt == "sehr kalt heute");
    CHECK(check_success(TaskKind::add_antonyms, "s", anto->tgt, "", anto->params, &antonyms));
}

TEST_CASE("contrastive length labels follow the thresholds") {
    auto words = [](int n) {
        std::string s;
        for (int i = 0; i < n; ++i) s += (i ? " w" : "w");
        return s;
    };
    CHECK(contrastive_length_label(pair_of(0, words(10), words(10))) == TaskKind::length_same);
    CHECK(contrastive_length_label(pair_of(0, words(10), words(6))) == TaskKind::length_shorter);
    CHECK(contrastive_length_label(pair_of(0, words(10), words(13))) == TaskKind::length_longer);
    CHECK_FALSE(contrastive_length_label(pair_of(0, words(10), words(9))).has_value());

    CHECK(check_success(TaskKind::length_same, words(10), words(10), ""));
    CHECK(check_success(TaskKind::length_shorter, words(10), words(6), ""));
    CHECK_FALSE(check_success(TaskKind::length_shorter, words(10), words(9), ""));
}

TEST_CASE("empty instruction is the identity") {
    const SentencePair pair = pair_of(10, "quelle", "ziel");
    const auto rec = apply_transform(TaskKind::empty_instruction, pair, 1);
    REQUIRE(rec.has_value());
    CHECK(rec->instruction.empty());
    CHECK(rec->src == pair.src);
    CHECK(rec->tgt == pair.tgt);
    CHECK(check_success(TaskKind::empty_instruction, "s", "same", "same"));
    CHECK_FALSE(check_success(TaskKind::empty_instruction, "s", "same", "other"));
}

TEST_CASE("transforms are deterministic in (seed, pair)") {
    const SentencePair pair = pair_of(11, "alpha beta gamma delta", "fern gelb hier immer");
    for (TaskKind kind : {TaskKind::shuffle_words, TaskKind::insert_x_begin,
                          TaskKind::spacing_error, TaskKind::fix_misspelling}) {
        const auto a = apply_transform(kind, pair, 33);
        const auto b = apply_transform(kind, pair, 33);
        REQUIRE(a.has_value());
        REQUIRE(b.has_value());
        CHECK(a->src == b->src);
        CHECK(a->tgt == b->tgt);
        CHECK(a->instruction == b->instruction);
        const auto c = apply_transform(kind, pair, 34);
        REQUIRE(c.has_value());
        // a different seed is allowed to produce a different record
    }
}

TEST_CASE("idempotent transforms") {
    const std::string accented = "Grüße à côté";
    const auto once = apply_transform(TaskKind::remove_accents, pair_of(0, "s", accented), 1);
    REQUIRE(once.has_value());
    CHECK_FALSE(
        apply_transform(TaskKind::remove_accents, pair_of(0, "s", once->tgt), 1).has_value());
    CHECK(strip_accents(once->tgt) == once->tgt);
    CHECK(to_upper(to_upper("ab")) == to_upper("ab"));
}

TEST_CASE("external kind cannot be synthesized") {
    CHECK_THROWS_AS(apply_transform(TaskKind::external, pair_of(0, "a", "b"), 1),
                    std::runtime_error);
}

TEST_CASE("native references pass their own checkers") {
    auto [corpus, lexicon] = synthesize_toy_parallel(60, 77, 16);
    for (TaskKind kind :
         {TaskKind::uppercase, TaskKind::lowercase, TaskKind::titlecase,
          TaskKind::remove_punctuation, TaskKind::leetify, TaskKind::shuffle_words,
          TaskKind::add_hashtag, TaskKind::insert_x_begin, TaskKind::insert_x_end,
          TaskKind::spacing_error, TaskKind::coverage_error, TaskKind::repetition_error,
          TaskKind::empty_instruction}) {
        CAPTURE(task_kind_name(kind));
        size_t produced = 0;
        for (const auto& pair : corpus.pairs) {
            const auto rec = apply_transform(kind, pair, 5);
            if (!rec) continue;
            ++produced;
            CHECK(check_success(kind, rec->src, rec->tgt, pair.tgt, rec->params));
            CHECK(rec->tgt.find("<instruction>") == std::string::npos);
            CHECK(rec->tgt.find("</instruction>") == std::string::npos);
        }
        CHECK(produced > 0);
    }
}

TEST_CASE("synthesize_task_dataset yields the requested count") {
    auto [corpus, lexicon] = synthesize_toy_parallel(1000, 9, 16);
    TaskSpec spec;
    spec.kind = TaskKind::uppercase;
    spec.samples = 100;
    spec.seed = 4;
    const TaskDataset ds = synthesize_task_dataset(corpus, spec);
    CHECK(ds.records.size() == 100);
    CHECK(ds.per_task_counts.at("uppercase") == 100);

    TaskSpec empty_spec;
    empty_spec.kind = TaskKind::empty_instruction;
    empty_spec.samples = 50;
    const TaskDataset empty_ds = synthesize_task_dataset(corpus, empty_spec);
    CHECK(empty_ds.records.size() == 50);
    for (const auto& rec : empty_ds.records) {
        CHECK(rec.instruction.empty());
        CHECK(rec.src != rec.tgt);  // identity on the pair, not a copy task
    }
}

TEST_CASE("synthesize_task_dataset errors when nothing is eligible") {
    ParallelCorpus corpus;
    corpus.pairs.push_back({0, "abc", "keinesatzzeichen"});
    TaskSpec spec;
    spec.kind = TaskKind::remove_punctuation;
    spec.samples = 5;
    CHECK_THROWS_WITH_AS(synthesize_task_dataset(corpus, spec),
                         doctest::Contains("remove_punctuation"), std::runtime_error);
}

TEST_CASE("ingest external data") {
    const std::string good =
        R"({"task":"formal","instruction":"formal","src":"Do you like it?","tgt":"Moegen Sie es?"})"
        "\n"
        R"({"task":"image","instruction_tokens":[5,9,12],"src":"a girl","tgt":"ein Maedchen"})"
        "\n";
    const auto path = write_temp("tasks_ok.jsonl", good);
    const TaskDataset ds = ingest_external(path);
    REQUIRE(ds.records.size() == 2);
    CHECK(ds.records[0].kind == TaskKind::external);
    CHECK(ds.records[0].instruction == "formal");
    CHECK(ds.records[1].instruction_tokens == std::vector<int>{5, 9, 12});
    CHECK(ds.per_task_counts.at("image") == 1);

    const auto tagged = write_temp(
        "tasks_tag.jsonl",
        R"({"task":"t","instruction":"i","src":"s","tgt":"bad </instruction> here"})" "\n");
    CHECK_THROWS_WITH_AS(ingest_external(tagged), doctest::Contains("line 1"),
                         std::runtime_error);

    const auto broken = write_temp("tasks_broken.jsonl",
                                   R"({"task":"t","instruction":"i","src":"s","tgt":"x"})" "\n"
                                   "{not json}\n");
    CHECK_THROWS_WITH_AS(ingest_external(broken), doctest::Contains("line 2"),
                         std::runtime_error);
}

TEST_CASE("task dataset save and load round trip") {
    auto [corpus, lexicon] = synthesize_toy_parallel(40, 13, 16);
    TaskSpec spec;
    spec.kind = TaskKind::insert_x_begin;
    spec.samples = 10;
    const TaskDataset ds = synthesize_task_dataset(corpus, spec);
    const auto path = write_temp("tasks_rt.jsonl", "");
    save_task_dataset(ds, path);
    const TaskDataset again = load_task_dataset(path);
    REQUIRE(again.records.size() == ds.records.size());
    for (size_t i = 0; i < ds.records.size(); ++i) {
        CHECK(again.records[i].kind == TaskKind::insert_x_begin);
        CHECK(again.records[i].instruction == ds.records[i].instruction);
        CHECK(again.records[i].params.at("x") == ds.records[i].params.at("x"));
    }
}

TEST_CASE("external checker is undefined") {
    CHECK_THROWS_AS(check_success(TaskKind::external, "s", "o", "g"), std::runtime_error);
}

}
