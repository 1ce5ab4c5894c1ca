// Copyright (c) 2026 the instructmt authors
// SPDX-License-Identifier: Apache-2.0

#include "instructmt/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "instructmt/text.hpp"

namespace instructmt {

using nlohmann::json;

namespace {

const std::vector<std::string> kReservedTokens = {"<pad>", "<bos>", "<eos>", "<unk>"};

Vocab base_vocab() {
    Vocab v;
    v.id_to_token.reserve(Vocab::kNumReserved + Vocab::kNumBytes);
    for (const auto& t : kReservedTokens) v.id_to_token.push_back(t);
    for (int b = 0; b < Vocab::kNumBytes; ++b)
        v.id_to_token.push_back(std::string(1, static_cast<char>(b)));
    for (int i = 0; i < v.size(); ++i) v.token_to_id[v.id_to_token[static_cast<size_t>(i)]] = i;
    return v;
}

int byte_id(unsigned char b) { return Vocab::kNumReserved + b; }

std::vector<int> bytes_to_ids(const std::string& s) {
    std::vector<int> ids;
    ids.reserve(s.size());
    for (unsigned char c : s) ids.push_back(byte_id(c));
    return ids;
}

// Applies merge rules by rank: repeatedly merge every occurrence of the
// lowest-ranked adjacent pair present.
void apply_merges(const BpeModel& model, std::vector<int>& ids) {
    if (ids.size() < 2) return;
    for (;;) {
        int best_rank = -1;
        for (size_t i = 0; i + 1 < ids.size(); ++i) {
            auto it = model.rank.find({ids[i], ids[i + 1]});
            if (it != model.rank.end() && (best_rank < 0 || it->second < best_rank))
                best_rank = it->second;
        }
        if (best_rank < 0) break;
        const auto [a, b] = model.merges[static_cast<size_t>(best_rank)];
        const int merged = Vocab::kNumReserved + Vocab::kNumBytes + best_rank;
        std::vector<int> out;
        out.reserve(ids.size());
        size_t i = 0;
        while (i < ids.size()) {
            if (i + 1 < ids.size() && ids[i] == a && ids[i + 1] == b) {
                out.push_back(merged);
                i += 2;
            } else {
                out.push_back(ids[i]);
                ++i;
            }
        }
        ids = std::move(out);
    }
}

}  // namespace

bool Vocab::is_special(int id) const {
    return std::find(special_ids.begin(), special_ids.end(), id) != special_ids.end();
}

const std::string& Vocab::token(int id) const {
    if (id < 0 || id >= size())
        throw std::runtime_error("token id out of range: " + std::to_string(id));
    return id_to_token[static_cast<size_t>(id)];
}

uint64_t Vocab::hash() const {
    uint64_t h = 1469598103934665603ull;
    for (const auto& t : id_to_token) {
        for (unsigned char c : t) {
            h ^= c;
            h *= 1099511628211ull;
        }
        h ^= 0x1Fu;  // token separator
        h *= 1099511628211ull;
    }
    return h;
}

void BpeModel::rebuild_rank() {
    rank.clear();
    for (size_t i = 0; i < merges.size(); ++i) rank[merges[i]] = static_cast<int>(i);
}

std::pair<BpeModel, Vocab> train_bpe(std::istream& corpus, int vocab_size) {
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(corpus, line)) lines.push_back(line);
    return train_bpe(lines, vocab_size);
}

std::pair<BpeModel, Vocab> train_bpe(const std::vector<std::string>& lines, int vocab_size) {
    const int base_size = Vocab::kNumReserved + Vocab::kNumBytes;
    if (vocab_size <= base_size)
        throw std::runtime_error("vocab_size must exceed reserved + base inventory (" +
                                 std::to_string(base_size) + ")");

    // word -> frequency, in first-seen order for determinism
    std::vector<std::pair<std::vector<int>, long>> words;
    {
        std::unordered_map<std::string, size_t> index;
        for (const auto& l : lines) {
            for (const auto& w : split_words(l)) {
                auto it = index.find(w);
                if (it == index.end()) {
                    index.emplace(w, words.size());
                    words.push_back({bytes_to_ids(w), 1});
                } else {
                    words[it->second].second += 1;
                }
            }
        }
    }
    if (words.empty()) throw std::runtime_error("cannot train BPE on an empty corpus");

    Vocab vocab = base_vocab();
    BpeModel model;

    while (vocab.size() < vocab_size) {
        std::map<std::pair<int, int>, long> pair_counts;
        for (const auto& [ids, freq] : words)
            for (size_t i = 0; i + 1 < ids.size(); ++i) pair_counts[{ids[i], ids[i + 1]}] += freq;

        std::pair<int, int> best{-1, -1};
        long best_count = 0;
        for (const auto& [pair, count] : pair_counts) {
            if (count < 2) continue;
            if (count > best_count) {
                best = pair;
                best_count = count;
            } else if (count == best_count && best.first >= 0) {
                const auto lhs = std::make_pair(vocab.token(pair.first), vocab.token(pair.second));
                const auto rhs = std::make_pair(vocab.token(best.first), vocab.token(best.second));
                if (lhs < rhs) best = pair;
            }
        }
        if (best_count < 2) break;

        const int merged = vocab.size();
        const std::string merged_token = vocab.token(best.first) + vocab.token(best.second);
        model.merges.push_back(best);
        vocab.id_to_token.push_back(merged_token);
        // A later merge may produce the same byte string; keep the first id.
        vocab.token_to_id.emplace(merged_token, merged);

        for (auto& [ids, freq] : words) {
            std::vector<int> out;
            out.reserve(ids.size());
            size_t i = 0;
            while (i < ids.size()) {
                if (i + 1 < ids.size() && ids[i] == best.first && ids[i + 1] == best.second) {
                    out.push_back(merged);
                    i += 2;
                } else {
                    out.push_back(ids[i]);
                    ++i;
                }
            }
            ids = std::move(out);
        }
    }
    model.rebuild_rank();
    return {std::move(model), std::move(vocab)};
}

std::vector<int> encode(const BpeModel& model, const Vocab& vocab, const std::string& text) {
    std::vector<int> out;
    if (text.empty()) return out;

    // Longest-first so that overlapping special tokens match greedily.
    std::vector<int> specials = vocab.special_ids;
    std::sort(specials.begin(), specials.end(), [&vocab](int a, int b) {
        return vocab.token(a).size() > vocab.token(b).size();
    });

    auto encode_segment = [&](const std::string& segment) {
        if (segment.empty()) return;
        std::vector<int> ids = bytes_to_ids(segment);
        apply_merges(model, ids);
        out.insert(out.end(), ids.begin(), ids.end());
    };

    size_t pos = 0;
    while (pos < text.size()) {
        size_t best_at = std::string::npos;
        int best_id = -1;
        for (int sid : specials) {
            const size_t at = text.find(vocab.token(sid), pos);
            if (at == std::string::npos) continue;
            if (at < best_at) {
                best_at = at;
                best_id = sid;
            }
        }
        if (best_id < 0) {
            encode_segment(text.substr(pos));
            break;
        }
        encode_segment(text.substr(pos, best_at - pos));
        out.push_back(best_id);
        pos = best_at + vocab.token(best_id).size();
    }
    return out;
}

std::string decode(const BpeModel& /*model*/, const Vocab& vocab, const std::vector<int>& ids) {
    std::string out;
    for (int id : ids) {
        const std::string& tok = vocab.token(id);  // throws on out-of-range
        if (id >= Vocab::kNumReserved || vocab.is_special(id)) out += tok;
        // reserved control tokens render as nothing
    }
    return out;
}

std::vector<int> expand_vocab(Vocab& vocab, const std::vector<std::string>& new_tokens) {
    std::vector<int> ids;
    ids.reserve(new_tokens.size());
    for (const auto& tok : new_tokens) {
        if (tok.empty()) throw std::runtime_error("cannot add an empty token");
        if (vocab.token_to_id.count(tok))
            throw std::runtime_error("token already present in vocabulary: " + tok);
        const int id = vocab.size();
        vocab.id_to_token.push_back(tok);
        vocab.token_to_id[tok] = id;
        vocab.special_ids.push_back(id);
        ids.push_back(id);
    }
    return ids;
}

void save_vocab(const BpeModel& model, const Vocab& vocab, const std::string& path) {
    json j;
    j["format_version"] = 1;
    // full token inventory in id order; byte strings stored as byte values
    json tokens = json::array();
    for (int id = 0; id < vocab.size(); ++id) {
        const std::string& tok = vocab.token(id);
        json bytes = json::array();
        for (unsigned char c : tok) bytes.push_back(static_cast<int>(c));
        tokens.push_back(bytes);
    }
    j["tokens"] = tokens;
    json merges = json::array();
    for (const auto& [a, b] : model.merges) merges.push_back({a, b});
    j["merges"] = merges;
    json specials = json::array();
    for (int sid : vocab.special_ids) specials.push_back(vocab.token(sid));
    j["special_tokens"] = specials;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write vocab file: " + path);
    out << j.dump(2) << '\n';
}

std::pair<BpeModel, Vocab> load_vocab(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open vocab file: " + path);
    json j;
    in >> j;
    if (!j.contains("format_version") || j["format_version"].get<int>() != 1)
        throw std::runtime_error(path + ": unsupported vocab format version");

    Vocab vocab = base_vocab();
    BpeModel model;
    for (const auto& m : j["merges"]) {
        const int a = m[0].get<int>();
        const int b = m[1].get<int>();
        if (a < 0 || a >= vocab.size() || b < 0 || b >= vocab.size())
            throw std::runtime_error(path + ": merge rule references an unknown token id");
        model.merges.push_back({a, b});
        const std::string merged_token = vocab.token(a) + vocab.token(b);
        vocab.id_to_token.push_back(merged_token);
        vocab.token_to_id.emplace(merged_token, vocab.size() - 1);
    }
    model.rebuild_rank();
    std::vector<std::string> specials;
    for (const auto& s : j["special_tokens"]) specials.push_back(s.get<std::string>());
    expand_vocab(vocab, specials);

    // the stored inventory must agree with the reconstruction
    if (j.contains("tokens")) {
        const json& tokens = j["tokens"];
        if (static_cast<int>(tokens.size()) != vocab.size())
            throw std::runtime_error(path + ": token list size disagrees with merges");
        for (int id = 0; id < vocab.size(); ++id) {
            std::string tok;
            for (const auto& b : tokens[static_cast<size_t>(id)])
                tok.push_back(static_cast<char>(b.get<int>()));
            if (tok != vocab.token(id))
                throw std::runtime_error(path + ": token " + std::to_string(id) +
                                         " disagrees with its merge reconstruction");
        }
    }
    return {std::move(model), std::move(vocab)};
}

}  // namespace instructmt
