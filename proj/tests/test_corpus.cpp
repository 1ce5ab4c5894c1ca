// Copyright (c) 2026 the instructmt authors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "instructmt/corpus.hpp"
#include "instructmt/text.hpp"

using namespace instructmt;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    const std::string path = (std::filesystem::temp_directory_path() / name).string();
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

std::string repeat_words(const std::string& word, int n) {
    std::string s;
    for (int i = 0; i < n; ++i) {
        if (i) s += ' ';
        s += word;
    }
    return s;
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("load tsv assigns sequential ids") {
    const auto path = write_temp("corpus_ok.tsv", "a\tb\nc\td\n");
    const ParallelCorpus corpus = load_parallel(path, CorpusFormat::tsv);
    REQUIRE(corpus.size() == 2);
    CHECK(corpus.pairs[0].id == 0);
    CHECK(corpus.pairs[1].id == 1);
    CHECK(corpus.pairs[0].src == "a");
    CHECK(corpus.pairs[1].tgt == "d");
}

TEST_CASE("load jsonl") {
    const auto path = write_temp("corpus_ok.jsonl", R"({"src":"x","tgt":"y"})" "\n");
    const ParallelCorpus corpus = load_parallel(path, CorpusFormat::jsonl);
    REQUIRE(corpus.size() == 1);
    CHECK(corpus.pairs[0].src == "x");
    CHECK(corpus.pairs[0].tgt == "y");
}

TEST_CASE("malformed records name the line") {
    const auto missing = write_temp("corpus_missing.jsonl", R"({"src":"x"})" "\n");
    CHECK_THROWS_WITH_AS(load_parallel(missing, CorpusFormat::jsonl),
                         doctest::Contains("line 1"), std::runtime_error);
    const auto empty = write_temp("corpus_empty.tsv", "");
    CHECK_THROWS_WITH_AS(load_parallel(empty, CorpusFormat::tsv), doctest::Contains("empty"),
                         std::runtime_error);
    const auto bad_tsv = write_temp("corpus_cols.tsv", "a\tb\nnocolumn\n");
    CHECK_THROWS_WITH_AS(load_parallel(bad_tsv, CorpusFormat::tsv), doctest::Contains("line 2"),
                         std::runtime_error);
}

TEST_CASE("serialization round trip preserves order") {
    const auto path = write_temp("corpus_rt.tsv", "a a\tb b\nc\td\ne\tf\n");
    const ParallelCorpus corpus = load_parallel(path, CorpusFormat::tsv);
    const auto out = write_temp("corpus_rt2.jsonl", "");
    save_parallel(corpus, out, CorpusFormat::jsonl);
    const ParallelCorpus again = load_parallel(out, CorpusFormat::jsonl);
    REQUIRE(again.size() == corpus.size());
    for (size_t i = 0; i < corpus.size(); ++i) {
        CHECK(again.pairs[i].src == corpus.pairs[i].src);
        CHECK(again.pairs[i].tgt == corpus.pairs[i].tgt);
    }
}

TEST_CASE("length ratio rule") {
    ParallelCorpus corpus;
    corpus.pairs.push_back({0, repeat_words("s", 10), repeat_words("t", 14)});  // ratio 1.4
    corpus.pairs.push_back({1, "hello world", "hallo welt"});
    auto [kept, report] = apply_filters(corpus, FilterConfig{});
    CHECK(kept.size() == 1);
    CHECK(report.removed_by_rule.at("len_ratio") == 1);
    CHECK(report.removed_ids == std::vector<int64_t>{0});
}

TEST_CASE("max words rule") {
    ParallelCorpus corpus;
    corpus.pairs.push_back({0, repeat_words("w", 151), repeat_words("v", 150)});
    FilterConfig cfg;
    cfg.max_len_ratio = 2.0;  // keep the ratio rule out of the way
    auto [kept, report] = apply_filters(corpus, cfg);
    CHECK(kept.size() == 0);
    CHECK(report.removed_by_rule.at("max_words") == 1);
}

TEST_CASE("filters are idempotent and partition the input") {
    auto [corpus, lexicon] = synthesize_toy_parallel(300, 11, 20);
    // plant violations
    corpus.pairs.push_back({300, repeat_words("a", 4), repeat_words("b", 9)});
    corpus.pairs.push_back({301, repeat_words("a", 200), repeat_words("b", 200)});
    auto [kept, report] = apply_filters(corpus, FilterConfig{});
    size_t removed = 0;
    for (const auto& [rule, count] : report.removed_by_rule) removed += count;
    CHECK(report.kept + removed == corpus.size());
    CHECK(report.kept == kept.size());
    CHECK(report.removed_ids.size() == removed);

    auto [kept2, report2] = apply_filters(kept, FilterConfig{});
    CHECK(kept2.size() == kept.size());
    for (const auto& [rule, count] : report2.removed_by_rule) CHECK(count == 0);
}

TEST_CASE("filter report json uses the fixed rule names") {
    ParallelCorpus corpus;
    corpus.pairs.push_back({0, "a b", "c d"});
    auto [kept, report] = apply_filters(corpus, FilterConfig{});
    const std::string j = report.to_json();
    CHECK(j.find("len_ratio") != std::string::npos);
    CHECK(j.find("max_words") != std::string::npos);
    CHECK(j.find("langid") != std::string::npos);
}

TEST_CASE("langid classifies disjoint languages") {
    const std::vector<std::pair<std::string, std::string>> samples = {
        {"the and of", "eng"}, {"der die und", "deu"}};
    const LangIdModel model = LangIdModel::train(samples);
    CHECK(model.classify("of the") == "eng");
    CHECK(model.classify("the and of") == "eng");
    CHECK(model.classify("der die und") == "deu");
    CHECK_THROWS_WITH_AS(model.classify(""), doctest::Contains("empty input"),
                         std::runtime_error);
}

TEST_CASE("langid requires two languages") {
    CHECK_THROWS_AS(LangIdModel::train({{"abc", "eng"}}), std::runtime_error);
}

TEST_CASE("langid filter rule") {
    auto [corpus, lexicon] = synthesize_toy_parallel(50, 3, 16);
    std::vector<std::pair<std::string, std::string>> samples;
    for (size_t i = 0; i < 30; ++i) {
        samples.emplace_back(corpus.pairs[i].src, "toysrc");
        samples.emplace_back(corpus.pairs[i].tgt, "toytgt");
    }
    const LangIdModel langid = LangIdModel::train(samples);
    // swap one pair's sides so langid must reject it
    ParallelCorpus mixed = corpus;
    std::swap(mixed.pairs[5].src, mixed.pairs[5].tgt);
    FilterConfig cfg;
    cfg.langid_enabled = true;
    cfg.expected_src_lang = "toysrc";
    cfg.expected_tgt_lang = "toytgt";
    auto [kept, report] = apply_filters(mixed, cfg, &langid);
    CHECK(report.removed_by_rule.at("langid") == 1);
    CHECK(report.removed_ids == std::vector<int64_t>{5});
}

TEST_CASE("langid precondition") {
    ParallelCorpus corpus;
    corpus.pairs.push_back({0, "a", "b"});
    FilterConfig cfg;
    cfg.langid_enabled = true;
    CHECK_THROWS_AS(apply_filters(corpus, cfg, nullptr), std::runtime_error);
}

TEST_CASE("sampling is deterministic and without replacement") {
    auto [corpus, lexicon] = synthesize_toy_parallel(100, 5, 16);
    const ParallelCorpus a = sample_high_quality(corpus, 40, 99);
    const ParallelCorpus b = sample_high_quality(corpus, 40, 99);
    REQUIRE(a.size() == 40);
    for (size_t i = 0; i < a.size(); ++i) CHECK(a.pairs[i].id == b.pairs[i].id);

    std::set<int64_t> ids;
    for (const auto& p : a.pairs) ids.insert(p.id);
    CHECK(ids.size() == 40);  // no replacement

    const ParallelCorpus all = sample_high_quality(corpus, corpus.size(), 1);
    std::multiset<std::string> lhs, rhs;
    for (const auto& p : corpus.pairs) lhs.insert(p.src + "\t" + p.tgt);
    for (const auto& p : all.pairs) rhs.insert(p.src + "\t" + p.tgt);
    CHECK(lhs == rhs);

    CHECK(sample_high_quality(corpus, 0, 1).size() == 0);
    CHECK_THROWS_AS(sample_high_quality(corpus, corpus.size() + 1, 1), std::runtime_error);
}

TEST_CASE("toy translation follows the lexicon plus adjacent swap") {
    Lexicon lex;
    lex.kind = LexiconKind::translation;
    lex.entries = {{"w1", "v1"}, {"w2", "v2"}, {"w3", "v3"}};
    CHECK(toy_translate("w1 w2 w3", lex) == "v2 v1 v3");
    CHECK(toy_translate("w1", lex) == "v1");
    CHECK(toy_translate("w1 w2", lex) == "v2 v1");
}

TEST_CASE("toy corpus is deterministic and invertible") {
    auto [a, lex_a] = synthesize_toy_parallel(50, 123, 16);
    auto [b, lex_b] = synthesize_toy_parallel(50, 123, 16);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a.pairs[i].src == b.pairs[i].src);
        CHECK(a.pairs[i].tgt == b.pairs[i].tgt);
    }
    CHECK(lex_a.entries == lex_b.entries);

    // invert: reverse lexicon then the same swap recovers the source
    Lexicon inverse;
    inverse.kind = LexiconKind::translation;
    for (const auto& [k, v] : lex_a.entries) inverse.entries[v] = k;
    for (const auto& pair : a.pairs) CHECK(toy_translate(pair.tgt, inverse) == pair.src);

    // every target word is a lexicon image
    std::set<std::string> images;
    for (const auto& [k, v] : lex_a.entries) images.insert(v);
    for (const auto& pair : a.pairs)
        for (const auto& w : split_words(pair.tgt)) CHECK(images.count(w) == 1);

    // sentence lengths stay in the contract range
    for (const auto& pair : a.pairs) {
        const size_t n = split_words(pair.src).size();
        CHECK(n >= 3);
        CHECK(n <= 12);
    }
}

TEST_CASE("toy corpus rejects tiny lexicons") {
    CHECK_THROWS_AS(synthesize_toy_parallel(10, 1, 9), std::runtime_error);
}

}
