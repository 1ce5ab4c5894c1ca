// Copyright (c) 2026 the instructmt authors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"

#include <filesystem>
#include <map>

#include "instructmt/tokenizer.hpp"

using namespace instructmt;

namespace {

// Brute-force oracle: count adjacent symbol pairs over whitespace-split words
// of the corpus, weighted by word frequency. Independent of the trainer's
// incremental bookkeeping.
std::map<std::pair<std::string, std::string>, long> brute_force_pair_counts(
    const std::vector<std::string>& lines) {
    std::map<std::string, long> word_freq;
    for (const auto& line : lines) {
        std::string word;
        for (char c : line + " ") {
            if (c == ' ' || c == '\t') {
                if (!word.empty()) word_freq[word] += 1;
                word.clear();
            } else {
                word.push_back(c);
            }
        }
    }
    std::map<std::pair<std::string, std::string>, long> counts;
    for (const auto& [word, freq] : word_freq)
        for (size_t i = 0; i + 1 < word.size(); ++i)
            counts[{std::string(1, word[i]), std::string(1, word[i + 1])}] += freq;
    return counts;
}

}  // namespace

TEST_SUITE("tokenizer") {

TEST_CASE("first merge is the most frequent pair") {
    const std::vector<std::string> lines = {"aaab aaab"};
    const auto oracle = brute_force_pair_counts(lines);
    std::pair<std::string, std::string> best;
    long best_count = 0;
    for (const auto& [pair, count] : oracle) {
        if (count > best_count) {
            best = pair;
            best_count = count;
        }
    }
    CHECK(best == std::make_pair(std::string("a"), std::string("a")));

    auto [model, vocab] = train_bpe(lines, Vocab::kNumReserved + Vocab::kNumBytes + 1);
    REQUIRE(model.merges.size() == 1);
    const auto [a, b] = model.merges[0];
    CHECK(vocab.token(a) == "a");
    CHECK(vocab.token(b) == "a");
}

TEST_CASE("vocab budget below the base inventory is an error") {
    CHECK_THROWS_AS(train_bpe({"abc"}, Vocab::kNumReserved + Vocab::kNumBytes),
                    std::runtime_error);
    CHECK_THROWS_AS(train_bpe(std::vector<std::string>{}, 300), std::runtime_error);
    CHECK_THROWS_AS(train_bpe({"   "}, 300), std::runtime_error);
}

TEST_CASE("training is deterministic") {
    const std::vector<std::string> lines = {"der hund lief", "der hund schlief",
                                            "die katze lief"};
    auto [m1, v1] = train_bpe(lines, 300);
    auto [m2, v2] = train_bpe(lines, 300);
    CHECK(m1.merges == m2.merges);
    CHECK(v1.id_to_token == v2.id_to_token);
}

TEST_CASE("merging stops when no pair repeats") {
    auto [model, vocab] = train_bpe({"ab cd"}, 400);
    CHECK(model.merges.empty());  // every pair occurs once
}

TEST_CASE("encode decode round trip") {
    auto [model, vocab] = train_bpe({"viele kleine worte", "kleine alte worte"}, 280);
    for (const std::string s :
         {std::string("kleine worte"), std::string("Grüße"), std::string(""),
          std::string("unbekannt  doppelt  leer "), std::string("<instruction> tag-like text")}) {
        CAPTURE(s);
        CHECK(decode(model, vocab, encode(model, vocab, s)) == s);
    }
    CHECK(encode(model, vocab, "").empty());
    CHECK(decode(model, vocab, {}) == "");
}

TEST_CASE("decode rejects out-of-range ids") {
    auto [model, vocab] = train_bpe({"abc abc"}, 265);
    CHECK_THROWS_AS(decode(model, vocab, {vocab.size()}), std::runtime_error);
    CHECK_THROWS_AS(decode(model, vocab, {-1}), std::runtime_error);
}

TEST_CASE("expand_vocab appends contiguous atomic ids") {
    auto [model, vocab] = train_bpe({"abc abc"}, 262);
    const int before = vocab.size();
    const auto ids = expand_vocab(vocab, {"<instruction>", "</instruction>"});
    REQUIRE(ids.size() == 2);
    CHECK(ids[0] == before);
    CHECK(ids[1] == before + 1);
    CHECK(vocab.is_special(ids[0]));

    CHECK_THROWS_WITH_AS(expand_vocab(vocab, {"<instruction>"}),
                         doctest::Contains("already present"), std::runtime_error);

    // atomicity: the tag maps to exactly one id wherever it appears
    const auto encoded = encode(model, vocab, "x <instruction> y");
    int tag_count = 0;
    for (int id : encoded) {
        if (id == ids[0]) ++tag_count;
        CHECK(id != ids[1]);
    }
    CHECK(tag_count == 1);
    CHECK(decode(model, vocab, encoded) == "x <instruction> y");

    const auto only_tag = encode(model, vocab, "<instruction>");
    REQUIRE(only_tag.size() == 1);
    CHECK(only_tag[0] == ids[0]);
}

TEST_CASE("special tokens never split even after more text") {
    auto [model, vocab] = train_bpe({"in struct ion"}, 280);
    const auto ids = expand_vocab(vocab, {"<instruction>", "</instruction>"});
    const std::string text = "<instruction> formal </instruction> source text";
    const auto encoded = encode(model, vocab, text);
    CHECK(encoded.front() == ids[0]);
    CHECK(decode(model, vocab, encoded) == text);
    size_t close_count = 0;
    for (int id : encoded)
        if (id == ids[1]) ++close_count;
    CHECK(close_count == 1);
}

TEST_CASE("vocab file round trip") {
    auto [model, vocab] = train_bpe({"wiederholte worte", "wiederholte zeichen"}, 290);
    expand_vocab(vocab, {"<instruction>", "</instruction>"});
    const std::string path =
        (std::filesystem::temp_directory_path() / "vocab_rt.json").string();
    save_vocab(model, vocab, path);
    auto [model2, vocab2] = load_vocab(path);
    CHECK(model2.merges == model.merges);
    CHECK(vocab2.id_to_token == vocab.id_to_token);
    CHECK(vocab2.special_ids == vocab.special_ids);
    CHECK(vocab2.hash() == vocab.hash());
}

TEST_CASE("byte fallback covers unseen characters") {
    auto [model, vocab] = train_bpe({"nur kleine woerter"}, 280);
    const std::string s = "VOLLE GROSSE ZEICHEN 123 \xF0\x9F\x98\x80";
    CHECK(decode(model, vocab, encode(model, vocab, s)) == s);
}

}
