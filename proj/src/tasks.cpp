// Copyright (c) 2026 the instructmt authors
// SPDX-License-Identifier: Apache-2.0

#include "instructmt/tasks.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include "json.hpp"

#include "instructmt/rng.hpp"
#include "instructmt/text.hpp"

namespace instructmt {

using nlohmann::json;

namespace {

constexpr const char* kTagOpen = "<instruction>";
constexpr const char* kTagClose = "</instruction>";

const std::vector<std::pair<TaskKind, const char*>> kKindNames = {
    {TaskKind::uppercase, "uppercase"},
    {TaskKind::lowercase, "lowercase"},
    {TaskKind::titlecase, "titlecase"},
    {TaskKind::remove_punctuation, "remove_punctuation"},
    {TaskKind::leetify, "leetify"},
    {TaskKind::remove_accents, "remove_accents"},
    {TaskKind::shuffle_words, "shuffle_words"},
    {TaskKind::add_hashtag, "add_hashtag"},
    {TaskKind::insert_x_begin, "insert_x_begin"},
    {TaskKind::insert_x_end, "insert_x_end"},
    {TaskKind::spacing_error, "spacing_error"},
    {TaskKind::coverage_error, "coverage_error"},
    {TaskKind::repetition_error, "repetition_error"},
    {TaskKind::fix_misspelling, "fix_misspelling"},
    {TaskKind::translate_x_to_y, "translate_x_to_y"},
    {TaskKind::remove_profanity, "remove_profanity"},
    {TaskKind::add_antonyms, "add_antonyms"},
    {TaskKind::length_same, "length_same"},
    {TaskKind::length_shorter, "length_shorter"},
    {TaskKind::length_longer, "length_longer"},
    {TaskKind::empty_instruction, "empty_instruction"},
    {TaskKind::external, "external"},
};

const std::map<TaskKind, const char*> kInstructionTemplates = {
    {TaskKind::uppercase, "uppercase"},
    {TaskKind::lowercase, "lowercase"},
    {TaskKind::titlecase, "titlecase"},
    {TaskKind::remove_punctuation, "remove punctuation"},
    {TaskKind::leetify, "leetify"},
    {TaskKind::remove_accents, "remove accents"},
    {TaskKind::shuffle_words, "shuffle words"},
    {TaskKind::add_hashtag, "add hashtag"},
    {TaskKind::insert_x_begin, "insert \"{X}\" at the beginning"},
    {TaskKind::insert_x_end, "insert \"{X}\" at the end"},
    {TaskKind::spacing_error, "spacing error"},
    {TaskKind::coverage_error, "coverage error"},
    {TaskKind::repetition_error, "introduce repetition error"},
    {TaskKind::fix_misspelling, "fix misspelling"},
    {TaskKind::translate_x_to_y, "translate \"{X}\" to \"{Y}\""},
    {TaskKind::remove_profanity, "remove profanity"},
    {TaskKind::add_antonyms, "add antonyms"},
    {TaskKind::length_same, "same length"},
    {TaskKind::length_shorter, "shorter length"},
    {TaskKind::length_longer, "longer length"},
    {TaskKind::empty_instruction, ""},
};

std::string render_template(std::string text, const ParamMap& params) {
    auto replace_all = [&text](const std::string& from, const std::string& to) {
        size_t pos = 0;
        while ((pos = text.find(from, pos)) != std::string::npos) {
            text.replace(pos, from.size(), to);
            pos += to.size();
        }
    };
    auto x = params.find("x");
    if (x != params.end()) replace_all("{X}", x->second);
    auto y = params.find("y");
    if (y != params.end()) replace_all("{Y}", y->second);
    return text;
}

bool contains_tag(const std::string& s) {
    return s.find(kTagOpen) != std::string::npos || s.find(kTagClose) != std::string::npos;
}

// Case-insensitive match of a token (ignoring attached punctuation) against
// a lexicon key. Shared by the lexicon transforms and their checkers.
bool word_matches(const std::string& token, const std::string& key) {
    return to_lower(strip_to_alnum(token)) == to_lower(key);
}

const std::map<char, char> kLeetMap = {{'a', '4'}, {'e', '3'}, {'i', '1'},
                                       {'o', '0'}, {'s', '5'}, {'t', '7'}};

std::string leetify_text(const std::string& s) {
    std::string out = s;
    for (char& c : out) {
        const char lower = (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
        auto it = kLeetMap.find(lower);
        if (it != kLeetMap.end()) c = it->second;
    }
    return out;
}

bool has_leet_letters(const std::string& s) {
    for (char c : s) {
        const char lower = (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
        if (kLeetMap.count(lower)) return true;
    }
    return false;
}

std::string titlecase_text(const std::string& s) {
    auto words = split_words(s);
    for (auto& w : words) {
        if (!w.empty() && w[0] >= 'a' && w[0] <= 'z') w[0] = static_cast<char>(w[0] - 'a' + 'A');
    }
    return join_words(words);
}

// Last source word that still has an alphanumeric core, stripped of attached
// punctuation. This is the word the hashtag task appends.
std::string last_alnum_word(const std::string& src) {
    const auto words = split_words(src);
    for (auto it = words.rbegin(); it != words.rend(); ++it) {
        const std::string core = strip_to_alnum(*it);
        if (!core.empty()) return core;
    }
    return {};
}

std::multiset<std::string> word_multiset(const std::string& s) {
    const auto words = split_words(s);
    return {words.begin(), words.end()};
}

std::string remove_all_whitespace(const std::string& s) {
    std::string out;
    for (char c : s)
        if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
    return out;
}

LengthThresholds thresholds_from_params(const ParamMap& params) {
    LengthThresholds t;
    auto get = [&params](const char* key, double& field) {
        auto it = params.find(key);
        if (it != params.end()) field = std::stod(it->second);
    };
    get("shorter_below", t.shorter_below);
    get("same_low", t.same_low);
    get("same_high", t.same_high);
    get("longer_above", t.longer_above);
    return t;
}

// Seeded single-character edit: swap, delete, or replace. Always changes the word.
std::string corrupt_word(const std::string& word, Rng& rng) {
    std::string w = word;
    for (int attempt = 0; attempt < 16; ++attempt) {
        std::string c = word;
        const uint64_t op = rng.below(3);
        if (op == 0 && c.size() >= 2) {
            const size_t i = static_cast<size_t>(rng.below(c.size() - 1));
            std::swap(c[i], c[i + 1]);
        } else if (op == 1 && c.size() >= 2) {
            c.erase(static_cast<size_t>(rng.below(c.size())), 1);
        } else {
            const size_t i = static_cast<size_t>(rng.below(c.size()));
            c[i] = static_cast<char>('a' + rng.below(26));
        }
        if (c != word) return c;
    }
    w.push_back('x');
    return w;
}

}  // namespace

std::string task_kind_name(TaskKind kind) {
    for (const auto& [k, name] : kKindNames)
        if (k == kind) return name;
    throw std::runtime_error("unknown task kind");
}

TaskKind task_kind_from_name(const std::string& name) {
    for (const auto& [k, n] : kKindNames)
        if (name == n) return k;
    throw std::runtime_error("unknown task kind: " + name);
}

const std::vector<TaskKind>& native_task_kinds() {
    static const std::vector<TaskKind> kinds = [] {
        std::vector<TaskKind> v;
        for (const auto& [k, name] : kKindNames)
            if (k != TaskKind::external) v.push_back(k);
        return v;
    }();
    return kinds;
}

std::string default_instruction_template(TaskKind kind) {
    auto it = kInstructionTemplates.find(kind);
    if (it == kInstructionTemplates.end())
        throw std::runtime_error("no instruction template for kind " + task_kind_name(kind));
    return it->second;
}

void TaskDataset::add(TaskRecord rec) {
    per_task_counts[rec.task_name] += 1;
    records.push_back(std::move(rec));
}

void TaskDataset::recount() {
    per_task_counts.clear();
    for (const auto& rec : records) per_task_counts[rec.task_name] += 1;
}

std::optional<TaskKind> contrastive_length_label(const SentencePair& pair,
                                                 const LengthThresholds& thresholds) {
    const double ws = static_cast<double>(split_words(pair.src).size());
    const double wt = static_cast<double>(split_words(pair.tgt).size());
    if (ws == 0.0) return std::nullopt;
    const double r = wt / ws;
    if (r < thresholds.shorter_below) return TaskKind::length_shorter;
    if (r >= thresholds.same_low && r <= thresholds.same_high) return TaskKind::length_same;
    if (r > thresholds.longer_above) return TaskKind::length_longer;
    return std::nullopt;
}

std::optional<TaskRecord> apply_transform(TaskKind kind, const SentencePair& pair, uint64_t seed,
                                          const ParamMap& params, const Lexicon* lexicon) {
    if (kind == TaskKind::external)
        throw std::runtime_error("external records cannot be synthesized; use ingest_external");
    if (contains_tag(pair.tgt) || contains_tag(pair.src)) return std::nullopt;

    Rng rng(mix_seed(seed, "task:" + task_kind_name(kind), static_cast<uint64_t>(pair.id)));

    TaskRecord rec;
    rec.kind = kind;
    rec.task_name = task_kind_name(kind);
    rec.src = pair.src;
    rec.tgt = pair.tgt;
    rec.id = pair.id;
    rec.instruction = default_instruction_template(kind);

    switch (kind) {
        case TaskKind::uppercase:
            if (!has_letter(pair.tgt)) return std::nullopt;
            rec.tgt = to_upper(pair.tgt);
            break;
        case TaskKind::lowercase:
            if (!has_letter(pair.tgt)) return std::nullopt;
            rec.tgt = to_lower(pair.tgt);
            break;
        case TaskKind::titlecase:
            if (!has_letter(pair.tgt)) return std::nullopt;
            rec.tgt = titlecase_text(pair.tgt);
            break;
        case TaskKind::remove_punctuation: {
            if (!contains_punct(pair.tgt)) return std::nullopt;
            const std::string stripped = remove_punct(pair.tgt);
            if (trim(stripped).empty()) return std::nullopt;
            rec.tgt = stripped;
            break;
        }
        case TaskKind::leetify:
            if (!has_leet_letters(pair.tgt)) return std::nullopt;
            rec.tgt = leetify_text(pair.tgt);
            break;
        case TaskKind::remove_accents:
            if (!has_accents(pair.tgt)) return std::nullopt;
            rec.tgt = strip_accents(pair.tgt);
            break;
        case TaskKind::shuffle_words: {
            auto words = split_words(pair.tgt);
            if (words.size() < 2) return std::nullopt;
            if (std::adjacent_find(words.begin(), words.end(), std::not_equal_to<>()) ==
                words.end())
                return std::nullopt;  // all words identical; no visible shuffle exists
            const auto original = words;
            rng.shuffle(words);
            if (words == original) std::rotate(words.begin(), words.begin() + 1, words.end());
            rec.tgt = join_words(words);
            break;
        }
        case TaskKind::add_hashtag: {
            const std::string word = last_alnum_word(pair.src);
            if (word.empty()) return std::nullopt;
            rec.tgt = pair.tgt + " #" + word;
            rec.params["hashtag"] = word;
            break;
        }
        case TaskKind::insert_x_begin:
        case TaskKind::insert_x_end: {
            std::vector<std::string> candidates;
            for (const auto& w : split_words(pair.src)) {
                const std::string core = strip_to_alnum(w);
                if (!core.empty()) candidates.push_back(core);
            }
            if (candidates.empty()) return std::nullopt;
            const std::string x = candidates[static_cast<size_t>(rng.below(candidates.size()))];
            rec.params["x"] = x;
            rec.tgt = kind == TaskKind::insert_x_begin ? x + " " + pair.tgt : pair.tgt + " " + x;
            break;
        }
        case TaskKind::spacing_error: {
            std::vector<size_t> spaces;
            for (size_t i = 0; i < pair.tgt.size(); ++i)
                if (pair.tgt[i] == ' ') spaces.push_back(i);
            if (spaces.empty()) return std::nullopt;
            const size_t pos = spaces[static_cast<size_t>(rng.below(spaces.size()))];
            std::string corrupted = pair.tgt;
            if (rng.below(2) == 0) {
                corrupted.erase(pos, 1);
            } else {
                corrupted.insert(pos, 1, ' ');
            }
            if (trim(corrupted).empty()) return std::nullopt;
            rec.tgt = corrupted;
            break;
        }
        case TaskKind::coverage_error: {
            auto words = split_words(pair.tgt);
            if (words.size() < 2) return std::nullopt;
            std::vector<size_t> candidates;
            for (size_t i = 0; i < words.size(); ++i)
                if (words[i].size() >= 4) candidates.push_back(i);
            if (candidates.empty()) return std::nullopt;
            words.erase(words.begin() +
                        static_cast<long>(candidates[static_cast<size_t>(
                            rng.below(candidates.size()))]));
            rec.tgt = join_words(words);
            break;
        }
        case TaskKind::repetition_error: {
            auto words = split_words(pair.tgt);
            if (words.empty()) return std::nullopt;
            const size_t i = static_cast<size_t>(rng.below(words.size()));
            words.insert(words.begin() + static_cast<long>(i), words[i]);
            rec.tgt = join_words(words);
            break;
        }
        case TaskKind::fix_misspelling: {
            auto words = split_words(pair.src);
            std::vector<size_t> candidates;
            for (size_t i = 0; i < words.size(); ++i)
                if (strip_to_alnum(words[i]).size() >= 3) candidates.push_back(i);
            if (candidates.empty()) return std::nullopt;
            const size_t i = candidates[static_cast<size_t>(rng.below(candidates.size()))];
            const std::string clean = words[i];
            const std::string corrupted = corrupt_word(clean, rng);
            words[i] = corrupted;
            rec.src = join_words(words);
            rec.params["clean"] = clean;
            rec.params["corrupted"] = corrupted;
            break;
        }
        case TaskKind::translate_x_to_y: {
            if (!lexicon) throw std::runtime_error("translate_x_to_y requires a lexicon");
            const auto src_words = split_words(pair.src);
            std::vector<std::pair<std::string, std::string>> matches;
            for (const auto& [x, y] : lexicon->entries) {
                for (const auto& w : src_words) {
                    if (word_matches(w, x)) {
                        matches.emplace_back(x, y);
                        break;
                    }
                }
            }
            if (matches.empty()) return std::nullopt;
            const auto& [x, y] = matches[static_cast<size_t>(rng.below(matches.size()))];
            auto tgt_words = split_words(pair.tgt);
            const auto comp = params.find("competitor." + x);
            bool replaced = false;
            if (comp != params.end()) {
                for (auto& w : tgt_words) {
                    if (word_matches(w, comp->second)) {
                        w = y;
                        replaced = true;
                    }
                }
            }
            if (replaced) {
                rec.tgt = join_words(tgt_words);
            } else {
                const bool y_present = std::any_of(tgt_words.begin(), tgt_words.end(),
                                                   [&](const auto& w) { return word_matches(w, y); });
                if (!y_present) return std::nullopt;
            }
            rec.params["x"] = x;
            rec.params["y"] = y;
            break;
        }
        case TaskKind::remove_profanity: {
            if (!lexicon) throw std::runtime_error("remove_profanity requires a lexicon");
            auto words = split_words(pair.tgt);
            std::vector<std::string> kept;
            bool hit = false;
            for (const auto& w : words) {
                const std::string* repl = nullptr;
                for (const auto& [key, val] : lexicon->entries) {
                    if (word_matches(w, key)) {
                        repl = &val;
                        break;
                    }
                }
                if (repl) {
                    hit = true;
                    if (!repl->empty()) kept.push_back(*repl);
                } else {
                    kept.push_back(w);
                }
            }
            if (!hit || kept.empty()) return std::nullopt;
            rec.tgt = join_words(kept);
            break;
        }
        case TaskKind::add_antonyms: {
            if (!lexicon) throw std::runtime_error("add_antonyms requires a lexicon");
            auto words = split_words(pair.tgt);
            bool hit = false;
            for (auto& w : words) {
                for (const auto& [key, val] : lexicon->entries) {
                    if (word_matches(w, key)) {
                        w = val;
                        if (!hit) rec.params["antonym"] = val;
                        hit = true;
                        break;
                    }
                }
            }
            if (!hit) return std::nullopt;
            rec.tgt = join_words(words);
            break;
        }
        case TaskKind::length_same:
        case TaskKind::length_shorter:
        case TaskKind::length_longer: {
            const auto label = contrastive_length_label(pair, thresholds_from_params(params));
            if (!label || *label != kind) return std::nullopt;
            break;
        }
        case TaskKind::empty_instruction:
            break;
        case TaskKind::external:
            break;  // unreachable
    }

    rec.instruction = render_template(rec.instruction, rec.params);
    if (contains_tag(rec.tgt)) return std::nullopt;
    return rec;
}

std::pair<std::string, ParamMap> resolve_instruction(TaskKind kind, const SentencePair& pair,
                                                     uint64_t seed, const ParamMap& params,
                                                     const Lexicon* lexicon) {
    auto rec = apply_transform(kind, pair, seed, params, lexicon);
    if (rec) return {rec->instruction, rec->params};
    // Ineligible pairs can still carry a prompt as long as it has no
    // unresolved placeholders (needed for zero-shot composition prompts).
    const std::string tmpl = default_instruction_template(kind);
    if (tmpl.find('{') != std::string::npos)
        throw std::runtime_error("cannot resolve instruction for task " + task_kind_name(kind) +
                                 " on this pair");
    return {tmpl, {}};
}

TaskDataset synthesize_task_dataset(const ParallelCorpus& corpus, const TaskSpec& spec,
                                    const Lexicon* lexicon) {
    if (corpus.empty()) throw std::runtime_error("cannot synthesize tasks from an empty corpus");
    std::vector<size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(mix_seed(spec.seed, "task_scan:" + task_kind_name(spec.kind)));
    rng.shuffle(order);

    TaskDataset out;
    for (size_t idx : order) {
        if (spec.samples > 0 && out.records.size() >= spec.samples) break;
        auto rec = apply_transform(spec.kind, corpus.pairs[idx], spec.seed, spec.params, lexicon);
        if (!rec) continue;
        if (!spec.instruction_template.empty())
            rec->instruction = render_template(spec.instruction_template, rec->params);
        out.add(std::move(*rec));
    }
    if (out.records.empty())
        throw std::runtime_error("no eligible pairs for task " + task_kind_name(spec.kind));
    return out;
}

bool check_success(TaskKind kind, const std::string& src, const std::string& output,
                   const std::string& general_output, const ParamMap& params,
                   const Lexicon* lexicon) {
    switch (kind) {
        case TaskKind::uppercase:
            return !has_lower(output) && has_letter(output);
        case TaskKind::lowercase:
            return !has_upper(output) && has_letter(output);
        case TaskKind::titlecase: {
            if (!has_letter(output)) return false;
            for (const auto& w : split_words(output)) {
                const char c = w[0];
                if (c >= 'a' && c <= 'z') return false;
            }
            return true;
        }
        case TaskKind::remove_punctuation:
            return !contains_punct(output);
        case TaskKind::leetify:
            return !has_leet_letters(output) && !output.empty();
        case TaskKind::remove_accents:
            return !has_accents(output);
        case TaskKind::shuffle_words:
            return word_multiset(output) == word_multiset(general_output);
        case TaskKind::add_hashtag: {
            const std::string word = last_alnum_word(src);
            if (word.empty()) return false;
            const std::string tag = "#" + word;
            const std::string trimmed = trim(output);
            return trimmed.size() >= tag.size() &&
                   trimmed.compare(trimmed.size() - tag.size(), tag.size(), tag) == 0;
        }
        case TaskKind::insert_x_begin: {
            auto it = params.find("x");
            if (it == params.end()) throw std::runtime_error("insert_x_begin checker needs param x");
            const std::string& x = it->second;
            const std::string trimmed = trim(output);
            return trimmed.size() >= x.size() && trimmed.compare(0, x.size(), x) == 0 &&
                   (trimmed.size() == x.size() || trimmed[x.size()] == ' ');
        }
        case TaskKind::insert_x_end: {
            auto it = params.find("x");
            if (it == params.end()) throw std::runtime_error("insert_x_end checker needs param x");
            const std::string& x = it->second;
            const std::string trimmed = trim(output);
            return trimmed.size() >= x.size() &&
                   trimmed.compare(trimmed.size() - x.size(), x.size(), x) == 0 &&
                   (trimmed.size() == x.size() || trimmed[trimmed.size() - x.size() - 1] == ' ');
        }
        case TaskKind::spacing_error:
            return remove_all_whitespace(output) == remove_all_whitespace(general_output) &&
                   trim(output) != trim(general_output);
        case TaskKind::coverage_error: {
            const auto out_words = word_multiset(output);
            const auto gen_words = word_multiset(general_output);
            if (out_words.size() + 1 != gen_words.size()) return false;
            return std::includes(gen_words.begin(), gen_words.end(), out_words.begin(),
                                 out_words.end());
        }
        case TaskKind::repetition_error: {
            const auto words = split_words(output);
            for (size_t i = 0; i + 1 < words.size(); ++i)
                if (words[i] == words[i + 1]) return true;
            return false;
        }
        case TaskKind::fix_misspelling: {
            // Weak predicate: the corrupted token must not survive into the output.
            auto it = params.find("corrupted");
            if (it == params.end()) return trim(output) != trim(src);
            for (const auto& w : split_words(output))
                if (word_matches(w, it->second)) return false;
            return true;
        }
        case TaskKind::translate_x_to_y: {
            auto it = params.find("y");
            if (it == params.end())
                throw std::runtime_error("translate_x_to_y checker needs param y");
            return output.find(it->second) != std::string::npos;
        }
        case TaskKind::remove_profanity: {
            if (!lexicon) throw std::runtime_error("remove_profanity checker requires a lexicon");
            for (const auto& w : split_words(output))
                for (const auto& [key, val] : lexicon->entries)
                    if (word_matches(w, key)) return false;
            return true;
        }
        case TaskKind::add_antonyms: {
            auto it = params.find("antonym");
            if (it != params.end()) {
                for (const auto& w : split_words(output))
                    if (word_matches(w, it->second)) return true;
                return false;
            }
            if (!lexicon) throw std::runtime_error("add_antonyms checker requires a lexicon");
            for (const auto& w : split_words(output))
                for (const auto& [key, val] : lexicon->entries)
                    if (word_matches(w, val)) return true;
            return false;
        }
        case TaskKind::length_same:
        case TaskKind::length_shorter:
        case TaskKind::length_longer: {
            const LengthThresholds t = thresholds_from_params(params);
            const double ws = static_cast<double>(split_words(src).size());
            const double wo = static_cast<double>(split_words(output).size());
            if (ws == 0.0) return false;
            const double r = wo / ws;
            if (kind == TaskKind::length_shorter) return r < t.shorter_below;
            if (kind == TaskKind::length_longer) return r > t.longer_above;
            return r >= t.same_low && r <= t.same_high;
        }
        case TaskKind::empty_instruction:
            return trim(output) == trim(general_output);
        case TaskKind::external:
            throw std::runtime_error("no success checker is defined for external tasks");
    }
    throw std::runtime_error("unknown task kind in check_success");
}

ParamMap params_from_instruction(TaskKind kind, const std::string& instruction) {
    ParamMap params;
    auto quoted = [&instruction](size_t from) -> std::pair<std::string, size_t> {
        const size_t a = instruction.find('"', from);
        if (a == std::string::npos) return {"", std::string::npos};
        const size_t b = instruction.find('"', a + 1);
        if (b == std::string::npos) return {"", std::string::npos};
        return {instruction.substr(a + 1, b - a - 1), b + 1};
    };
    if (kind == TaskKind::insert_x_begin || kind == TaskKind::insert_x_end) {
        auto [x, next] = quoted(0);
        if (next != std::string::npos) params["x"] = x;
    } else if (kind == TaskKind::translate_x_to_y) {
        auto [x, next] = quoted(0);
        if (next != std::string::npos) {
            params["x"] = x;
            auto [y, next2] = quoted(next);
            if (next2 != std::string::npos) params["y"] = y;
        }
    }
    return params;
}

namespace {

TaskDataset load_task_jsonl(const std::string& path, bool force_external) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open task file: " + path);
    TaskDataset out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw std::runtime_error(path + ": line " + std::to_string(lineno) +
                                     ": invalid JSON: " + e.what());
        }
        auto fail = [&](const std::string& what) -> void {
            throw std::runtime_error(path + ": line " + std::to_string(lineno) + ": " + what);
        };
        if (!rec.is_object()) fail("expected a JSON object");
        for (const char* field : {"task", "src", "tgt"})
            if (!rec.contains(field)) fail(std::string("missing field \"") + field + "\"");
        TaskRecord r;
        r.task_name = rec["task"].get<std::string>();
        r.src = rec["src"].get<std::string>();
        r.tgt = rec["tgt"].get<std::string>();
        if (contains_tag(r.tgt)) fail("target contains an instruction tag string");
        const bool has_text = rec.contains("instruction");
        const bool has_tokens = rec.contains("instruction_tokens");
        if (has_text == has_tokens)
            fail("expected exactly one of \"instruction\" and \"instruction_tokens\"");
        if (has_text) {
            r.instruction = rec["instruction"].get<std::string>();
        } else {
            if (!rec["instruction_tokens"].is_array()) fail("instruction_tokens must be an array");
            for (const auto& v : rec["instruction_tokens"]) {
                if (!v.is_number_integer()) fail("instruction_tokens must contain integers");
                r.instruction_tokens.push_back(v.get<int>());
            }
            if (r.instruction_tokens.empty()) fail("instruction_tokens must be non-empty");
        }
        if (rec.contains("params")) {
            for (const auto& [k, v] : rec["params"].items()) r.params[k] = v.get<std::string>();
        }
        if (force_external) {
            r.kind = TaskKind::external;
        } else {
            try {
                r.kind = task_kind_from_name(r.task_name);
            } catch (const std::runtime_error&) {
                r.kind = TaskKind::external;
            }
        }
        if (r.kind != TaskKind::empty_instruction && r.instruction.empty() &&
            r.instruction_tokens.empty())
            fail("empty instruction");
        r.id = static_cast<int64_t>(out.records.size());
        out.add(std::move(r));
    }
    if (out.records.empty()) throw std::runtime_error(path + ": empty task file");
    return out;
}

}  // namespace

TaskDataset ingest_external(const std::string& path) { return load_task_jsonl(path, true); }

TaskDataset load_task_dataset(const std::string& path) { return load_task_jsonl(path, false); }

void save_task_dataset(const TaskDataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write task file: " + path);
    for (const auto& r : data.records) {
        json rec;
        rec["task"] = r.task_name;
        if (!r.instruction_tokens.empty()) {
            rec["instruction_tokens"] = r.instruction_tokens;
        } else {
            rec["instruction"] = r.instruction;
        }
        rec["src"] = r.src;
        rec["tgt"] = r.tgt;
        if (!r.params.empty()) {
            json p = json::object();
            for (const auto& [k, v] : r.params) p[k] = v;
            rec["params"] = p;
        }
        out << rec.dump() << '\n';
    }
}

}  // namespace instructmt
