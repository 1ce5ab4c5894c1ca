// Copyright (c) 2026 the instructmt authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>

namespace instructmt {

enum class LexiconKind { translation, antonym, profanity };

// Word-to-word substitution table. Translation lexicons must be injective.
struct Lexicon {
    std::map<std::string, std::string> entries;
    LexiconKind kind = LexiconKind::translation;

    const std::string* find(const std::string& word) const {
        auto it = entries.find(word);
        return it == entries.end() ? nullptr : &it->second;
    }
};

// Two-column TSV (word, replacement). Empty replacement means removal.
Lexicon load_lexicon(const std::string& path, LexiconKind kind);
void save_lexicon(const Lexicon& lex, const std::string& path);

// Validates non-empty keys and, for translation lexicons, injectivity.
void validate_lexicon(const Lexicon& lex);

}  // namespace instructmt
