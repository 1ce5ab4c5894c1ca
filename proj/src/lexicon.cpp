// Copyright (c) 2026 the instructmt authors
// SPDX-License-Identifier: Apache-2.0

#include "instructmt/lexicon.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include "instructmt/text.hpp"

namespace instructmt {

Lexicon load_lexicon(const std::string& path, LexiconKind kind) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open lexicon file: " + path);
    Lexicon lex;
    lex.kind = kind;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw std::runtime_error(path + ": line " + std::to_string(lineno) +
                                     ": expected two tab-separated columns");
        Lexicon tmp;
        const std::string key = trim(line.substr(0, tab));
        const std::string val = trim(line.substr(tab + 1));
        if (key.empty())
            throw std::runtime_error(path + ": line " + std::to_string(lineno) + ": empty key");
        lex.entries[key] = val;
    }
    validate_lexicon(lex);
    return lex;
}

void save_lexicon(const Lexicon& lex, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write lexicon file: " + path);
    for (const auto& [key, val] : lex.entries) out << key << '\t' << val << '\n';
}

void validate_lexicon(const Lexicon& lex) {
    std::set<std::string> values;
    for (const auto& [key, val] : lex.entries) {
        if (key.empty()) throw std::runtime_error("lexicon key must be non-empty");
        if (lex.kind == LexiconKind::translation && !values.insert(val).second)
            throw std::runtime_error("translation lexicon must be injective; duplicate value: " +
                                     val);
    }
}

}  // namespace instructmt
