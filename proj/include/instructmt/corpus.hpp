// Copyright (c) 2026 the instructmt authors
// SPDX-License-Identifier: Apache-2.0
//
// Parallel corpus loading, heuristic bitext filtering, sampling, and the
// deterministic toy language pair used for desk-scale experiments.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "instructmt/lexicon.hpp"

namespace instructmt {

struct SentencePair {
    int64_t id = 0;
    std::string src;
    std::string tgt;
};

struct ParallelCorpus {
    std::vector<SentencePair> pairs;
    std::string provenance;

    size_t size() const { return pairs.size(); }
    bool empty() const { return pairs.empty(); }
};

enum class CorpusFormat { tsv, jsonl };

// TSV: two tab-separated UTF-8 columns, no header.
// JSONL: one object per line with exactly the keys "src" and "tgt".
// Ids are assigned sequentially from 0 in file order.
ParallelCorpus load_parallel(const std::string& path, CorpusFormat format);
void save_parallel(const ParallelCorpus& corpus, const std::string& path, CorpusFormat format);

struct FilterConfig {
    double max_len_ratio = 1.3;
    int max_words = 150;
    bool langid_enabled = false;
    std::string expected_src_lang;
    std::string expected_tgt_lang;
};

struct FilterReport {
    size_t kept = 0;
    std::map<std::string, size_t> removed_by_rule;  // keys: len_ratio, max_words, langid
    std::vector<int64_t> removed_ids;

    std::string to_json() const;
};

// Additive-smoothed character n-gram (1..3) scorer.
class LangIdModel {
public:
    // Training samples: (text, language code). Requires at least two languages.
    static LangIdModel train(const std::vector<std::pair<std::string, std::string>>& samples,
                             double smoothing = 0.5);

    // Returns the argmax language code; ties broken by code order.
    std::string classify(const std::string& text) const;
    double score(const std::string& text, const std::string& lang) const;
    const std::vector<std::string>& languages() const { return langs_; }

private:
    std::vector<std::string> langs_;
    // per language: n-gram codepoint-sequence counts and context totals, n = 1..3
    std::vector<std::map<std::u32string, double>> gram_counts_;
    std::vector<std::map<std::u32string, double>> context_counts_;
    double smoothing_ = 0.5;
    size_t alphabet_size_ = 1;
};

// Rules applied in fixed order: len_ratio, max_words, langid. A pair is
// attributed to the first rule it fails. Never throws; the report records
// every removal.
std::pair<ParallelCorpus, FilterReport> apply_filters(const ParallelCorpus& corpus,
                                                      const FilterConfig& cfg,
                                                      const LangIdModel* langid = nullptr);

// Uniform sample without replacement, deterministic for a fixed seed.
ParallelCorpus sample_high_quality(const ParallelCorpus& corpus, size_t n, uint64_t seed);

// Deterministic synthetic language pair: source sentences of 3-12 words over a
// generated vocabulary, target = bijective word lexicon followed by swapping
// each adjacent word pair. Some sentences end in a punctuation word that maps
// to itself.
std::pair<ParallelCorpus, Lexicon> synthesize_toy_parallel(size_t n, uint64_t seed,
                                                           size_t lexicon_size);

// The exact toy translation rule, exposed so tests and task construction can
// compute references: map each word through the lexicon, then swap words
// pairwise (0<->1, 2<->3, ...).
std::string toy_translate(const std::string& src, const Lexicon& lexicon);

}  // namespace instructmt
