// Copyright (c) 2026 the instructmt authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace instructmt {

std::string trim(std::string_view s);

// Whitespace-delimited tokens. Runs of whitespace collapse; no empty tokens.
std::vector<std::string> split_words(std::string_view s);

std::string join_words(const std::vector<std::string>& words, std::string_view sep = " ");

// Lenient UTF-8 decoding: an invalid byte yields a private codepoint
// 0xDC00 + byte so that any byte string round-trips through the char layer.
std::vector<uint32_t> utf8_codepoints(std::string_view s);
std::string codepoint_to_utf8(uint32_t cp);

// ASCII-only case mapping; non-ASCII bytes pass through unchanged. The task
// transforms and their checkers share this definition.
std::string to_upper(std::string_view s);
std::string to_lower(std::string_view s);
bool has_lower(std::string_view s);
bool has_upper(std::string_view s);
bool has_letter(std::string_view s);

bool is_ascii_alnum(char c);
// Word with leading/trailing non-alphanumeric characters stripped; empty if none remain.
std::string strip_to_alnum(std::string_view word);

// Punctuation: ASCII punct plus a small set of common typographic marks.
bool is_punct_codepoint(uint32_t cp);
bool contains_punct(std::string_view s);
std::string remove_punct(std::string_view s);

// Combining diacritical marks U+0300..U+036F.
bool is_combining_mark(uint32_t cp);
// Decomposes common precomposed Latin letters to their base letter and drops
// combining marks. Idempotent.
std::string strip_accents(std::string_view s);
bool has_accents(std::string_view s);

}  // namespace instructmt
