// Copyright (c) 2026 the instructmt authors
// SPDX-License-Identifier: Apache-2.0

#include "instructmt/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>

#include "json.hpp"

#include "instructmt/rng.hpp"
#include "instructmt/text.hpp"

namespace instructmt {

using nlohmann::json;

namespace {

[[noreturn]] void malformed(const std::string& path, size_t lineno, const std::string& what) {
    throw std::runtime_error(path + ": line " + std::to_string(lineno) + ": " + what);
}

}  // namespace

ParallelCorpus load_parallel(const std::string& path, CorpusFormat format) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open corpus file: " + path);
    ParallelCorpus corpus;
    corpus.provenance = path;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string src, tgt;
        if (format == CorpusFormat::tsv) {
            const size_t tab = line.find('\t');
            if (tab == std::string::npos) malformed(path, lineno, "expected a tab separator");
            if (line.find('\t', tab + 1) != std::string::npos)
                malformed(path, lineno, "expected exactly two columns");
            src = line.substr(0, tab);
            tgt = line.substr(tab + 1);
        } else {
            json rec;
            try {
                rec = json::parse(line);
            } catch (const json::parse_error& e) {
                malformed(path, lineno, std::string("invalid JSON: ") + e.what());
            }
            if (!rec.is_object()) malformed(path, lineno, "expected a JSON object");
            if (!rec.contains("src")) malformed(path, lineno, "missing field \"src\"");
            if (!rec.contains("tgt")) malformed(path, lineno, "missing field \"tgt\"");
            if (rec.size() != 2) malformed(path, lineno, "expected exactly the fields src and tgt");
            if (!rec["src"].is_string() || !rec["tgt"].is_string())
                malformed(path, lineno, "src and tgt must be strings");
            src = rec["src"].get<std::string>();
            tgt = rec["tgt"].get<std::string>();
        }
        if (trim(src).empty()) malformed(path, lineno, "empty source text");
        if (trim(tgt).empty()) malformed(path, lineno, "empty target text");
        corpus.pairs.push_back({static_cast<int64_t>(corpus.pairs.size()), src, tgt});
    }
    if (corpus.pairs.empty()) throw std::runtime_error(path + ": empty corpus file");
    return corpus;
}

void save_parallel(const ParallelCorpus& corpus, const std::string& path, CorpusFormat format) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write corpus file: " + path);
    for (const auto& pair : corpus.pairs) {
        if (format == CorpusFormat::tsv) {
            out << pair.src << '\t' << pair.tgt << '\n';
        } else {
            json rec;
            rec["src"] = pair.src;
            rec["tgt"] = pair.tgt;
            out << rec.dump() << '\n';
        }
    }
}

std::string FilterReport::to_json() const {
    json j;
    j["kept"] = kept;
    json rules = json::object();
    for (const auto& [rule, count] : removed_by_rule) rules[rule] = count;
    j["removed_by_rule"] = rules;
    j["removed_ids"] = removed_ids;
    return j.dump(2);
}

LangIdModel LangIdModel::train(const std::vector<std::pair<std::string, std::string>>& samples,
                               double smoothing) {
    std::set<std::string> langs;
    for (const auto& [text, lang] : samples) langs.insert(lang);
    if (langs.size() < 2)
        throw std::runtime_error("language-id training requires at least two languages");

    LangIdModel model;
    model.smoothing_ = smoothing;
    model.langs_.assign(langs.begin(), langs.end());
    model.gram_counts_.resize(model.langs_.size());
    model.context_counts_.resize(model.langs_.size());

    std::set<char32_t> alphabet;
    for (const auto& [text, lang] : samples) {
        const size_t li = static_cast<size_t>(
            std::find(model.langs_.begin(), model.langs_.end(), lang) - model.langs_.begin());
        const auto cps = utf8_codepoints(text);
        std::u32string s(cps.begin(), cps.end());
        for (char32_t c : s) alphabet.insert(c);
        for (size_t n = 1; n <= 3; ++n) {
            if (s.size() < n) continue;
            for (size_t i = 0; i + n <= s.size(); ++i) {
                model.gram_counts_[li][s.substr(i, n)] += 1.0;
                model.context_counts_[li][s.substr(i, n - 1)] += 1.0;
            }
        }
    }
    model.alphabet_size_ = std::max<size_t>(alphabet.size(), 1);
    return model;
}

double LangIdModel::score(const std::string& text, const std::string& lang) const {
    const auto it = std::find(langs_.begin(), langs_.end(), lang);
    if (it == langs_.end()) throw std::runtime_error("unknown language code: " + lang);
    const size_t li = static_cast<size_t>(it - langs_.begin());

    const auto cps = utf8_codepoints(text);
    std::u32string s(cps.begin(), cps.end());
    if (s.empty()) throw std::runtime_error("empty input");

    double total = 0.0;
    size_t terms = 0;
    for (size_t n = 1; n <= 3; ++n) {
        if (s.size() < n) continue;
        for (size_t i = 0; i + n <= s.size(); ++i) {
            double g = 0.0, c = 0.0;
            auto git = gram_counts_[li].find(s.substr(i, n));
            if (git != gram_counts_[li].end()) g = git->second;
            auto cit = context_counts_[li].find(s.substr(i, n - 1));
            if (cit != context_counts_[li].end()) c = cit->second;
            total += std::log((g + smoothing_) /
                              (c + smoothing_ * static_cast<double>(alphabet_size_)));
            ++terms;
        }
    }
    return total / static_cast<double>(terms);
}

std::string LangIdModel::classify(const std::string& text) const {
    std::string best;
    double best_score = 0.0;
    for (const auto& lang : langs_) {
        const double s = score(text, lang);
        if (best.empty() || s > best_score) {
            best = lang;
            best_score = s;
        }
    }
    return best;
}

std::pair<ParallelCorpus, FilterReport> apply_filters(const ParallelCorpus& corpus,
                                                      const FilterConfig& cfg,
                                                      const LangIdModel* langid) {
    if (cfg.langid_enabled && langid == nullptr)
        throw std::runtime_error("langid filtering enabled but no model supplied");

    ParallelCorpus out;
    out.provenance = corpus.provenance;
    FilterReport report;
    report.removed_by_rule["len_ratio"] = 0;
    report.removed_by_rule["max_words"] = 0;
    report.removed_by_rule["langid"] = 0;

    for (const auto& pair : corpus.pairs) {
        const size_t ws = split_words(pair.src).size();
        const size_t wt = split_words(pair.tgt).size();
        const size_t lo = std::min(ws, wt);
        const size_t hi = std::max(ws, wt);

        const char* failed = nullptr;
        if (lo == 0 || static_cast<double>(hi) / static_cast<double>(lo) > cfg.max_len_ratio) {
            failed = "len_ratio";
        } else if (ws > static_cast<size_t>(cfg.max_words) ||
                   wt > static_cast<size_t>(cfg.max_words)) {
            failed = "max_words";
        } else if (cfg.langid_enabled &&
                   (langid->classify(pair.src) != cfg.expected_src_lang ||
                    langid->classify(pair.tgt) != cfg.expected_tgt_lang)) {
            failed = "langid";
        }

        if (failed) {
            report.removed_by_rule[failed] += 1;
            report.removed_ids.push_back(pair.id);
        } else {
            out.pairs.push_back(pair);
        }
    }
    report.kept = out.pairs.size();
    return {std::move(out), std::move(report)};
}

ParallelCorpus sample_high_quality(const ParallelCorpus& corpus, size_t n, uint64_t seed) {
    if (n > corpus.size())
        throw std::runtime_error("sample size " + std::to_string(n) + " exceeds corpus size " +
                                 std::to_string(corpus.size()));
    std::vector<size_t> idx(corpus.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(mix_seed(seed, "sample_high_quality"));
    rng.shuffle(idx);
    ParallelCorpus out;
    out.provenance = corpus.provenance;
    out.pairs.reserve(n);
    for (size_t i = 0; i < n; ++i) out.pairs.push_back(corpus.pairs[idx[i]]);
    return out;
}

namespace {

// Disjoint alphabets so the two toy languages are separable by character
// statistics: source syllables use {b,d,f,g,k}x{a,i,u}, target syllables use
// {l,m,n,p,r,s,t,v,w,z}x{e,o}.
std::vector<std::string> make_toy_words(Rng& rng, size_t count, const std::string& consonants,
                                        const std::string& vowels) {
    std::set<std::string> seen;
    std::vector<std::string> words;
    while (words.size() < count) {
        const int syllables = static_cast<int>(rng.range(2, 3));
        std::string w;
        for (int s = 0; s < syllables; ++s) {
            w += consonants[static_cast<size_t>(rng.below(consonants.size()))];
            w += vowels[static_cast<size_t>(rng.below(vowels.size()))];
        }
        if (seen.insert(w).second) words.push_back(w);
    }
    return words;
}

const std::vector<std::string> kToyPunct = {".", "!", "?"};

}  // namespace

std::string toy_translate(const std::string& src, const Lexicon& lexicon) {
    std::vector<std::string> words = split_words(src);
    for (auto& w : words) {
        const std::string* mapped = lexicon.find(w);
        if (!mapped) throw std::runtime_error("toy lexicon has no entry for word: " + w);
        w = *mapped;
    }
    for (size_t i = 0; i + 1 < words.size(); i += 2) std::swap(words[i], words[i + 1]);
    return join_words(words);
}

std::pair<ParallelCorpus, Lexicon> synthesize_toy_parallel(size_t n, uint64_t seed,
                                                           size_t lexicon_size) {
    if (lexicon_size < 10) throw std::runtime_error("toy lexicon size must be at least 10");
    if (n < 1) throw std::runtime_error("toy corpus size must be at least 1");

    Rng vocab_rng(mix_seed(seed, "toy_vocab"));
    const auto src_words = make_toy_words(vocab_rng, lexicon_size, "bdfgk", "aiu");
    const auto tgt_words = make_toy_words(vocab_rng, lexicon_size, "lmnprstvwz", "eo");

    Lexicon lexicon;
    lexicon.kind = LexiconKind::translation;
    for (size_t i = 0; i < lexicon_size; ++i) lexicon.entries[src_words[i]] = tgt_words[i];
    for (const auto& p : kToyPunct) lexicon.entries[p] = p;
    validate_lexicon(lexicon);

    ParallelCorpus corpus;
    corpus.provenance = "toy(seed=" + std::to_string(seed) + ")";
    corpus.pairs.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        Rng rng(mix_seed(seed, "toy_pair", i));
        const int total_words = static_cast<int>(rng.range(3, 12));
        const bool with_punct = rng.below(10) < 7;
        const int content_words = with_punct ? total_words - 1 : total_words;
        std::vector<std::string> words;
        words.reserve(static_cast<size_t>(total_words));
        for (int w = 0; w < content_words; ++w)
            words.push_back(src_words[static_cast<size_t>(rng.below(src_words.size()))]);
        if (with_punct)
            words.push_back(kToyPunct[static_cast<size_t>(rng.below(kToyPunct.size()))]);
        const std::string src = join_words(words);
        corpus.pairs.push_back({static_cast<int64_t>(i), src, toy_translate(src, lexicon)});
    }
    return {std::move(corpus), std::move(lexicon)};
}

}  // namespace instructmt
