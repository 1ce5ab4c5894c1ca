// Copyright (c) 2026 the instructmt authors
// SPDX-License-Identifier: Apache-2.0
//
// Byte-level BPE with reserved ids and atomic special tokens. Byte-level base
// symbols make decode(encode(s)) exact for any UTF-8 input.

#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace instructmt {

struct Vocab {
    static constexpr int kPad = 0;
    static constexpr int kBos = 1;
    static constexpr int kEos = 2;
    static constexpr int kUnk = 3;
    static constexpr int kNumReserved = 4;
    static constexpr int kNumBytes = 256;

    std::vector<std::string> id_to_token;
    std::unordered_map<std::string, int> token_to_id;
    std::vector<int> special_ids;  // atomic tokens, in registration order

    int size() const { return static_cast<int>(id_to_token.size()); }
    bool is_special(int id) const;
    const std::string& token(int id) const;
    uint64_t hash() const;
};

struct BpeModel {
    // Ordered merge rules over token ids; rule k creates token id
    // kNumReserved + kNumBytes + k.
    std::vector<std::pair<int, int>> merges;
    std::map<std::pair<int, int>, int> rank;

    void rebuild_rank();
};

// Greedy highest-frequency pair merging over whitespace-split words until
// vocab_size is reached or no pair occurs twice. Ties break lexicographically
// by the merged pair's byte strings.
std::pair<BpeModel, Vocab> train_bpe(std::istream& corpus, int vocab_size);
std::pair<BpeModel, Vocab> train_bpe(const std::vector<std::string>& lines, int vocab_size);

// Registered special tokens are matched greedily (leftmost, longest) as
// atomic units before byte-level segmentation.
std::vector<int> encode(const BpeModel& model, const Vocab& vocab, const std::string& text);
std::string decode(const BpeModel& model, const Vocab& vocab, const std::vector<int>& ids);

// Appends new atomic tokens at the end of the vocabulary; returns their ids.
std::vector<int> expand_vocab(Vocab& vocab, const std::vector<std::string>& new_tokens);

void save_vocab(const BpeModel& model, const Vocab& vocab, const std::string& path);
std::pair<BpeModel, Vocab> load_vocab(const std::string& path);

}  // namespace instructmt
