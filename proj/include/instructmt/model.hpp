// Copyright (c) 2026 the instructmt authors
// SPDX-License-Identifier: Apache-2.0
//
// Small encoder-decoder transformer with hand-written exact gradients,
// greedy decoding, embedding expansion for new vocabulary entries, and
// checkpoint interpolation.

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "instructmt/tensor.hpp"

namespace instructmt {

// Reserved token ids shared with the vocabulary layout.
inline constexpr int kPadId = 0;
inline constexpr int kBosId = 1;
inline constexpr int kEosId = 2;
inline constexpr int kUnkId = 3;

struct ModelHyper {
    int layers = 2;    // encoder and decoder layer count
    int dim = 64;      // model width
    int heads = 4;
    int ffn = 256;
    int max_len = 160;
};

struct ModelParams {
    ModelHyper hyper;
    int vocab_size = 0;
    TensorMap tensors;

    Tensor& t(const std::string& name);
    const Tensor& t(const std::string& name) const;
};

// Deterministic initialization for a fixed seed.
ModelParams init_model(const ModelHyper& hyper, int vocab_size, uint64_t seed);

// One training item: encoder input ids and a bos/eos-framed target sequence.
struct BatchItem {
    std::vector<int> src;
    std::vector<int> tgt;  // [bos, t1..tn, eos]
};
using Batch = std::vector<BatchItem>;

// Frames raw target ids with bos/eos.
BatchItem make_batch_item(std::vector<int> src_ids, const std::vector<int>& tgt_ids);

struct ForwardResult {
    double loss = 0.0;
    int64_t label_tokens = 0;
    TensorMap grads;
};

// Mean token cross-entropy over the batch plus exact gradients.
ForwardResult forward_loss(const ModelParams& params, const Batch& batch);
double forward_loss_only(const ModelParams& params, const Batch& batch);

struct TrainConfig {
    int epochs = 3;
    int batch_size = 16;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.98;
    double adam_eps = 1e-9;
    double clip_norm = 1.0;  // <= 0 disables clipping
    int warmup_steps = 200;
    uint64_t seed = 0;
};

using EpochStream = std::function<std::vector<Batch>(int epoch)>;

struct TrainTrace {
    std::vector<double> epoch_loss;
    int64_t steps = 0;
};

// Adam with linear warmup; optimizer state starts fresh on every call.
// Throws on non-finite loss, naming the failing step.
TrainTrace train(ModelParams& params, const EpochStream& stream, const TrainConfig& cfg);

// Argmax decoding with ties broken by the lowest token id; stops at eos or
// max_len. The returned sequence excludes bos/eos.
std::vector<int> greedy_decode(const ModelParams& params, const std::vector<int>& src,
                               int max_len);

// Orthonormal top-k principal-component basis [d,k] of the mean-centered
// rows, via power iteration with deflation. Column signs are fixed by making
// each column's largest-magnitude entry positive.
Tensor pca_top_k(const Tensor& matrix, int k);

// Appends n_new embedding rows initialized to mean + unit-norm vector in the
// span of the top pca_rank principal components. Existing rows are untouched;
// the tied output projection expands implicitly.
ModelParams expand_embeddings(const ModelParams& params, int n_new, int pca_rank, uint64_t seed);

// (1-alpha) * base + alpha * finetuned for all common parameters. Parameters
// only in the finetuned model (e.g. expanded embedding rows) are copied from
// it; parameters only in the base model are an error.
ModelParams interpolate(const ModelParams& base, const ModelParams& finetuned, double alpha);

struct AlphaSearchResult {
    double best_alpha = 0.0;
    std::vector<std::pair<double, double>> trace;  // (alpha, perf)
};

AlphaSearchResult search_alpha(const ModelParams& base, const ModelParams& finetuned,
                               const std::function<double(const ModelParams&)>& perf_fn,
                               const std::vector<double>& grid);

struct Checkpoint {
    ModelParams params;
    uint64_t vocab_hash = 0;
    int format_version = 1;
};

void save_checkpoint(const ModelParams& params, uint64_t vocab_hash, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Numerically stable softmax; exposed for tests.
std::vector<double> softmax(const std::vector<double>& logits);

}  // namespace instructmt
