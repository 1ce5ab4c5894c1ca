// Copyright (c) 2026 the instructmt authors
// SPDX-License-Identifier: Apache-2.0

#include "instructmt/text.hpp"

#include <cctype>
#include <unordered_map>

namespace instructmt {

std::string trim(std::string_view s) {
    size_t b = 0;
    size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_words(std::string_view s) {
    std::vector<std::string> out;
    size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        size_t j = i;
        while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
        if (j > i) out.emplace_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

std::string join_words(const std::vector<std::string>& words, std::string_view sep) {
    std::string out;
    for (size_t i = 0; i < words.size(); ++i) {
        if (i) out += sep;
        out += words[i];
    }
    return out;
}

std::vector<uint32_t> utf8_codepoints(std::string_view s) {
    std::vector<uint32_t> cps;
    cps.reserve(s.size());
    size_t i = 0;
    while (i < s.size()) {
        const unsigned char b0 = static_cast<unsigned char>(s[i]);
        uint32_t cp = 0;
        size_t len = 0;
        if (b0 < 0x80) {
            cp = b0;
            len = 1;
        } else if ((b0 & 0xE0) == 0xC0) {
            cp = b0 & 0x1F;
            len = 2;
        } else if ((b0 & 0xF0) == 0xE0) {
            cp = b0 & 0x0F;
            len = 3;
        } else if ((b0 & 0xF8) == 0xF0) {
            cp = b0 & 0x07;
            len = 4;
        } else {
            cps.push_back(0xDC00u + b0);
            ++i;
            continue;
        }
        if (i + len > s.size()) {
            cps.push_back(0xDC00u + b0);
            ++i;
            continue;
        }
        bool ok = true;
        for (size_t k = 1; k < len; ++k) {
            const unsigned char bk = static_cast<unsigned char>(s[i + k]);
            if ((bk & 0xC0) != 0x80) {
                ok = false;
                break;
            }
            cp = (cp << 6) | (bk & 0x3F);
        }
        if (!ok) {
            cps.push_back(0xDC00u + b0);
            ++i;
            continue;
        }
        cps.push_back(cp);
        i += len;
    }
    return cps;
}

std::string codepoint_to_utf8(uint32_t cp) {
    std::string out;
    if (cp >= 0xDC00u && cp <= 0xDCFFu) {
        // lenient round-trip of an invalid byte
        out.push_back(static_cast<char>(cp - 0xDC00u));
    } else if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
    return out;
}

std::string to_upper(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
    }
    return out;
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

bool has_lower(std::string_view s) {
    for (char c : s)
        if (c >= 'a' && c <= 'z') return true;
    return false;
}

bool has_upper(std::string_view s) {
    for (char c : s)
        if (c >= 'A' && c <= 'Z') return true;
    return false;
}

bool has_letter(std::string_view s) {
    for (char c : s)
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) return true;
    return false;
}

bool is_ascii_alnum(char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

std::string strip_to_alnum(std::string_view word) {
    size_t b = 0;
    size_t e = word.size();
    while (b < e && !is_ascii_alnum(word[b])) ++b;
    while (e > b && !is_ascii_alnum(word[e - 1])) --e;
    return std::string(word.substr(b, e - b));
}

bool is_punct_codepoint(uint32_t cp) {
    if (cp < 0x80) return std::ispunct(static_cast<int>(cp)) != 0;
    switch (cp) {
        case 0x2013:  // en dash
        case 0x2014:  // em dash
        case 0x2018:
        case 0x2019:  // single quotes
        case 0x201C:
        case 0x201D:  // double quotes
        case 0x2026:  // ellipsis
        case 0x00A1:  // inverted exclamation
        case 0x00BF:  // inverted question
        case 0x00AB:
        case 0x00BB:  // guillemets
            return true;
        default:
            return false;
    }
}

bool contains_punct(std::string_view s) {
    for (uint32_t cp : utf8_codepoints(s))
        if (is_punct_codepoint(cp)) return true;
    return false;
}

std::string remove_punct(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (uint32_t cp : utf8_codepoints(s)) {
        if (!is_punct_codepoint(cp)) out += codepoint_to_utf8(cp);
    }
    // collapse whitespace runs left behind by removed tokens
    return join_words(split_words(out));
}

bool is_combining_mark(uint32_t cp) { return cp >= 0x0300 && cp <= 0x036F; }

namespace {

// Precomposed Latin letter -> base ASCII letter. Covers Latin-1 Supplement and
// the Latin Extended-A letters whose decomposition is base + combining mark.
const std::unordered_map<uint32_t, char>& accent_table() {
    static const std::unordered_map<uint32_t, char> table = [] {
        std::unordered_map<uint32_t, char> t;
        auto put = [&t](std::initializer_list<uint32_t> cps, char base) {
            for (uint32_t cp : cps) t[cp] = base;
        };
        put({0xC0, 0xC1, 0xC2, 0xC3, 0xC4, 0xC5, 0x100, 0x102, 0x104}, 'A');
        put({0xE0, 0xE1, 0xE2, 0xE3, 0xE4, 0xE5, 0x101, 0x103, 0x105}, 'a');
        put({0xC7, 0x106, 0x108, 0x10A, 0x10C}, 'C');
        put({0xE7, 0x107, 0x109, 0x10B, 0x10D}, 'c');
        put({0x10E}, 'D');
        put({0x10F}, 'd');
        put({0xC8, 0xC9, 0xCA, 0xCB, 0x112, 0x114, 0x116, 0x118, 0x11A}, 'E');
        put({0xE8, 0xE9, 0xEA, 0xEB, 0x113, 0x115, 0x117, 0x119, 0x11B}, 'e');
        put({0x11C, 0x11E, 0x120, 0x122}, 'G');
        put({0x11D, 0x11F, 0x121, 0x123}, 'g');
        put({0x124}, 'H');
        put({0x125}, 'h');
        put({0xCC, 0xCD, 0xCE, 0xCF, 0x128, 0x12A, 0x12C, 0x12E, 0x130}, 'I');
        put({0xEC, 0xED, 0xEE, 0xEF, 0x129, 0x12B, 0x12D, 0x12F}, 'i');
        put({0x134}, 'J');
        put({0x135}, 'j');
        put({0x136}, 'K');
        put({0x137}, 'k');
        put({0x139, 0x13B, 0x13D}, 'L');
        put({0x13A, 0x13C, 0x13E}, 'l');
        put({0xD1, 0x143, 0x145, 0x147}, 'N');
        put({0xF1, 0x144, 0x146, 0x148}, 'n');
        put({0xD2, 0xD3, 0xD4, 0xD5, 0xD6, 0x14C, 0x14E, 0x150}, 'O');
        put({0xF2, 0xF3, 0xF4, 0xF5, 0xF6, 0x14D, 0x14F, 0x151}, 'o');
        put({0x154, 0x156, 0x158}, 'R');
        put({0x155, 0x157, 0x159}, 'r');
        put({0x15A, 0x15C, 0x15E, 0x160}, 'S');
        put({0x15B, 0x15D, 0x15F, 0x161}, 's');
        put({0x162, 0x164}, 'T');
        put({0x163, 0x165}, 't');
        put({0xD9, 0xDA, 0xDB, 0xDC, 0x168, 0x16A, 0x16C, 0x16E, 0x170, 0x172}, 'U');
        put({0xF9, 0xFA, 0xFB, 0xFC, 0x169, 0x16B, 0x16D, 0x16F, 0x171, 0x173}, 'u');
        put({0x174}, 'W');
        put({0x175}, 'w');
        put({0xDD, 0x176, 0x178}, 'Y');
        put({0xFD, 0xFF, 0x177}, 'y');
        put({0x179, 0x17B, 0x17D}, 'Z');
        put({0x17A, 0x17C, 0x17E}, 'z');
        return t;
    }();
    return table;
}

}  // namespace

std::string strip_accents(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    const auto& table = accent_table();
    for (uint32_t cp : utf8_codepoints(s)) {
        if (is_combining_mark(cp)) continue;
        auto it = table.find(cp);
        if (it != table.end()) {
            out.push_back(it->second);
        } else {
            out += codepoint_to_utf8(cp);
        }
    }
    return out;
}

bool has_accents(std::string_view s) {
    const auto& table = accent_table();
    for (uint32_t cp : utf8_codepoints(s)) {
        if (is_combining_mark(cp) || table.count(cp)) return true;
    }
    return false;
}

}  // namespace instructmt
