// Copyright (c) 2026 the instructmt authors
// SPDX-License-Identifier: Apache-2.0

#include "instructmt/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

#include "instructmt/rng.hpp"

namespace instructmt {

using nlohmann::json;

namespace {

constexpr double kLnEps = 1e-5;
constexpr uint32_t kCheckpointVersion = 1;
constexpr char kCheckpointMagic[8] = {'I', 'M', 'T', 'C', 'K', 'P', 'T', '\0'};

// ---------------------------------------------------------------------------
// matrix helpers (Tensor with shape [rows, cols])
// ---------------------------------------------------------------------------

Tensor make_mat(int64_t rows, int64_t cols) { return Tensor({rows, cols}); }

// C = A * B, A [m,k], B [k,n]
Tensor matmul(const Tensor& a, const Tensor& b) {
    const int64_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor c = make_mat(m, n);
    for (int64_t i = 0; i < m; ++i) {
        const double* arow = a.row(i);
        double* crow = c.row(i);
        for (int64_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = b.row(p);
            for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

// C += A^T * B, A [t,m], B [t,n], C [m,n]
void matmul_acc_at_b(const Tensor& a, const Tensor& b, Tensor& c) {
    const int64_t t = a.rows(), m = a.cols(), n = b.cols();
    for (int64_t r = 0; r < t; ++r) {
        const double* arow = a.row(r);
        const double* brow = b.row(r);
        for (int64_t i = 0; i < m; ++i) {
            const double av = arow[i];
            if (av == 0.0) continue;
            double* crow = c.row(i);
            for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C = A * B^T, A [m,k], B [n,k]
Tensor matmul_a_bt(const Tensor& a, const Tensor& b) {
    const int64_t m = a.rows(), k = a.cols(), n = b.rows();
    Tensor c = make_mat(m, n);
    for (int64_t i = 0; i < m; ++i) {
        const double* arow = a.row(i);
        double* crow = c.row(i);
        for (int64_t j = 0; j < n; ++j) {
            const double* brow = b.row(j);
            double acc = 0.0;
            for (int64_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
            crow[j] = acc;
        }
    }
    return c;
}

// C += A * B^T
void matmul_acc_a_bt(const Tensor& a, const Tensor& b, Tensor& c) {
    const int64_t m = a.rows(), k = a.cols();
    const int64_t n = b.rows();
    for (int64_t i = 0; i < m; ++i) {
        const double* arow = a.row(i);
        double* crow = c.row(i);
        for (int64_t j = 0; j < n; ++j) {
            const double* brow = b.row(j);
            double acc = 0.0;
            for (int64_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
            crow[j] += acc;
        }
    }
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    Tensor y = matmul(x, w);
    for (int64_t i = 0; i < y.rows(); ++i) {
        double* row = y.row(i);
        for (int64_t j = 0; j < y.cols(); ++j) row[j] += b.v[static_cast<size_t>(j)];
    }
    return y;
}

void acc_colsum(const Tensor& dy, Tensor& db) {
    for (int64_t i = 0; i < dy.rows(); ++i) {
        const double* row = dy.row(i);
        for (int64_t j = 0; j < dy.cols(); ++j) db.v[static_cast<size_t>(j)] += row[j];
    }
}

double gelu(double z) { return 0.5 * z * (1.0 + std::erf(z * 0.70710678118654752440)); }

double gelu_grad(double z) {
    const double phi = std::exp(-0.5 * z * z) * 0.39894228040143267794;  // N(0,1) pdf
    return 0.5 * (1.0 + std::erf(z * 0.70710678118654752440)) + z * phi;
}

// ---------------------------------------------------------------------------
// building blocks with caches for the backward pass
// ---------------------------------------------------------------------------

struct LnCache {
    Tensor xhat;
    std::vector<double> istd;
};

Tensor ln_forward(const Tensor& x, const Tensor& g, const Tensor& b, LnCache& cache) {
    const int64_t t = x.rows(), d = x.cols();
    cache.xhat = make_mat(t, d);
    cache.istd.assign(static_cast<size_t>(t), 0.0);
    Tensor y = make_mat(t, d);
    for (int64_t i = 0; i < t; ++i) {
        const double* xi = x.row(i);
        double mu = 0.0;
        for (int64_t j = 0; j < d; ++j) mu += xi[j];
        mu /= static_cast<double>(d);
        double var = 0.0;
        for (int64_t j = 0; j < d; ++j) var += (xi[j] - mu) * (xi[j] - mu);
        var /= static_cast<double>(d);
        const double istd = 1.0 / std::sqrt(var + kLnEps);
        cache.istd[static_cast<size_t>(i)] = istd;
        double* xh = cache.xhat.row(i);
        double* yi = y.row(i);
        for (int64_t j = 0; j < d; ++j) {
            xh[j] = (xi[j] - mu) * istd;
            yi[j] = xh[j] * g.v[static_cast<size_t>(j)] + b.v[static_cast<size_t>(j)];
        }
    }
    return y;
}

void ln_backward(const LnCache& cache, const Tensor& g, const Tensor& dy, Tensor& dx_acc,
                 Tensor& dg, Tensor& db) {
    const int64_t t = dy.rows(), d = dy.cols();
    for (int64_t i = 0; i < t; ++i) {
        const double* dyi = dy.row(i);
        const double* xh = cache.xhat.row(i);
        const double istd = cache.istd[static_cast<size_t>(i)];
        double m1 = 0.0, m2 = 0.0;
        for (int64_t j = 0; j < d; ++j) {
            const double dxh = dyi[j] * g.v[static_cast<size_t>(j)];
            m1 += dxh;
            m2 += dxh * xh[j];
        }
        m1 /= static_cast<double>(d);
        m2 /= static_cast<double>(d);
        double* dxi = dx_acc.row(i);
        for (int64_t j = 0; j < d; ++j) {
            const double dxh = dyi[j] * g.v[static_cast<size_t>(j)];
            dxi[j] += istd * (dxh - m1 - xh[j] * m2);
            dg.v[static_cast<size_t>(j)] += dyi[j] * xh[j];
            db.v[static_cast<size_t>(j)] += dyi[j];
        }
    }
}

struct AttnCache {
    Tensor q, k, v;           // [Tq,d] / [Tk,d]
    std::vector<Tensor> w;    // per head, [Tq,Tk]
    Tensor ctx;               // [Tq,d], pre output projection
};

struct AttnWeights {
    const Tensor *wq, *wk, *wv, *wo, *bq, *bk, *bv, *bo;
};

AttnWeights attn_weights(const ModelParams& p, const std::string& prefix) {
    return {&p.t(prefix + ".wq"), &p.t(prefix + ".wk"), &p.t(prefix + ".wv"),
            &p.t(prefix + ".wo"), &p.t(prefix + ".bq"), &p.t(prefix + ".bk"),
            &p.t(prefix + ".bv"), &p.t(prefix + ".bo")};
}

Tensor attn_forward(const ModelParams& p, const std::string& prefix, const Tensor& q_in,
                    const Tensor& kv_in, bool causal, AttnCache& cache) {
    const auto w = attn_weights(p, prefix);
    const int64_t heads = p.hyper.heads;
    const int64_t d = p.hyper.dim;
    const int64_t dh = d / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    const int64_t tq = q_in.rows(), tk = kv_in.rows();

    cache.q = linear(q_in, *w.wq, *w.bq);
    cache.k = linear(kv_in, *w.wk, *w.bk);
    cache.v = linear(kv_in, *w.wv, *w.bv);
    cache.w.assign(static_cast<size_t>(heads), Tensor());
    cache.ctx = make_mat(tq, d);

    for (int64_t h = 0; h < heads; ++h) {
        const int64_t off = h * dh;
        Tensor& attn = cache.w[static_cast<size_t>(h)];
        attn = make_mat(tq, tk);
        for (int64_t i = 0; i < tq; ++i) {
            const int64_t jmax = causal ? std::min(i + 1, tk) : tk;
            const double* qi = cache.q.row(i) + off;
            double* wrow = attn.row(i);
            double mx = -1e300;
            for (int64_t j = 0; j < jmax; ++j) {
                const double* kj = cache.k.row(j) + off;
                double s = 0.0;
                for (int64_t c = 0; c < dh; ++c) s += qi[c] * kj[c];
                s *= scale;
                wrow[j] = s;
                mx = std::max(mx, s);
            }
            double z = 0.0;
            for (int64_t j = 0; j < jmax; ++j) {
                wrow[j] = std::exp(wrow[j] - mx);
                z += wrow[j];
            }
            double* ci = cache.ctx.row(i) + off;
            for (int64_t j = 0; j < jmax; ++j) {
                wrow[j] /= z;
                const double* vj = cache.v.row(j) + off;
                for (int64_t c = 0; c < dh; ++c) ci[c] += wrow[j] * vj[c];
            }
        }
    }
    return linear(cache.ctx, *w.wo, *w.bo);
}

void attn_backward(const ModelParams& p, const std::string& prefix, const AttnCache& cache,
                   const Tensor& q_in, const Tensor& kv_in, bool causal, const Tensor& d_out,
                   Tensor& d_q_in, Tensor& d_kv_in, TensorMap& grads) {
    const auto w = attn_weights(p, prefix);
    const int64_t heads = p.hyper.heads;
    const int64_t d = p.hyper.dim;
    const int64_t dh = d / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    const int64_t tq = q_in.rows(), tk = kv_in.rows();

    matmul_acc_at_b(cache.ctx, d_out, grads.at(prefix + ".wo"));
    acc_colsum(d_out, grads.at(prefix + ".bo"));
    Tensor d_ctx = matmul_a_bt(d_out, *w.wo);

    Tensor dq = make_mat(tq, d);
    Tensor dk = make_mat(tk, d);
    Tensor dv = make_mat(tk, d);

    for (int64_t h = 0; h < heads; ++h) {
        const int64_t off = h * dh;
        const Tensor& attn = cache.w[static_cast<size_t>(h)];
        for (int64_t i = 0; i < tq; ++i) {
            const int64_t jmax = causal ? std::min(i + 1, tk) : tk;
            const double* wrow = attn.row(i);
            const double* dci = d_ctx.row(i) + off;

            // d attn weights and dV
            std::vector<double> dw(static_cast<size_t>(jmax), 0.0);
            for (int64_t j = 0; j < jmax; ++j) {
                const double* vj = cache.v.row(j) + off;
                double* dvj = dv.row(j) + off;
                double acc = 0.0;
                for (int64_t c = 0; c < dh; ++c) {
                    acc += dci[c] * vj[c];
                    dvj[c] += wrow[j] * dci[c];
                }
                dw[static_cast<size_t>(j)] = acc;
            }
            // softmax backward
            double dot = 0.0;
            for (int64_t j = 0; j < jmax; ++j) dot += dw[static_cast<size_t>(j)] * wrow[j];
            const double* qi = cache.q.row(i) + off;
            double* dqi = dq.row(i) + off;
            for (int64_t j = 0; j < jmax; ++j) {
                const double ds = wrow[j] * (dw[static_cast<size_t>(j)] - dot) * scale;
                if (ds == 0.0) continue;
                const double* kj = cache.k.row(j) + off;
                double* dkj = dk.row(j) + off;
                for (int64_t c = 0; c < dh; ++c) {
                    dqi[c] += ds * kj[c];
                    dkj[c] += ds * qi[c];
                }
            }
        }
    }

    matmul_acc_at_b(q_in, dq, grads.at(prefix + ".wq"));
    acc_colsum(dq, grads.at(prefix + ".bq"));
    matmul_acc_a_bt(dq, *w.wq, d_q_in);

    matmul_acc_at_b(kv_in, dk, grads.at(prefix + ".wk"));
    acc_colsum(dk, grads.at(prefix + ".bk"));
    matmul_acc_a_bt(dk, *w.wk, d_kv_in);

    matmul_acc_at_b(kv_in, dv, grads.at(prefix + ".wv"));
    acc_colsum(dv, grads.at(prefix + ".bv"));
    matmul_acc_a_bt(dv, *w.wv, d_kv_in);
}

struct FfnCache {
    Tensor z1;  // pre-activation
    Tensor a1;  // gelu(z1)
};

Tensor ffn_forward(const ModelParams& p, const std::string& prefix, const Tensor& x,
                   FfnCache& cache) {
    cache.z1 = linear(x, p.t(prefix + ".w1"), p.t(prefix + ".b1"));
    cache.a1 = cache.z1;
    for (double& z : cache.a1.v) z = gelu(z);
    return linear(cache.a1, p.t(prefix + ".w2"), p.t(prefix + ".b2"));
}

void ffn_backward(const ModelParams& p, const std::string& prefix, const FfnCache& cache,
                  const Tensor& x_in, const Tensor& d_out, Tensor& d_x, TensorMap& grads) {
    matmul_acc_at_b(cache.a1, d_out, grads.at(prefix + ".w2"));
    acc_colsum(d_out, grads.at(prefix + ".b2"));
    Tensor dz1 = matmul_a_bt(d_out, p.t(prefix + ".w2"));
    for (size_t i = 0; i < dz1.v.size(); ++i) dz1.v[i] *= gelu_grad(cache.z1.v[i]);
    matmul_acc_at_b(x_in, dz1, grads.at(prefix + ".w1"));
    acc_colsum(dz1, grads.at(prefix + ".b1"));
    matmul_acc_a_bt(dz1, p.t(prefix + ".w1"), d_x);
}

// ---------------------------------------------------------------------------
// full encoder / decoder passes
// ---------------------------------------------------------------------------

void add_position_encoding(const ModelParams& p, Tensor& x) {
    const int64_t d = p.hyper.dim;
    for (int64_t i = 0; i < x.rows(); ++i) {
        double* row = x.row(i);
        for (int64_t j = 0; j + 1 < d; j += 2) {
            const double freq =
                std::pow(10000.0, -static_cast<double>(j) / static_cast<double>(d));
            row[j] += std::sin(static_cast<double>(i) * freq);
            row[j + 1] += std::cos(static_cast<double>(i) * freq);
        }
    }
}

Tensor embed_sequence(const ModelParams& p, const std::vector<int>& ids) {
    const Tensor& emb = p.t("embedding");
    const int64_t d = p.hyper.dim;
    const double scale = std::sqrt(static_cast<double>(d));
    Tensor x = make_mat(static_cast<int64_t>(ids.size()), d);
    for (size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || ids[i] >= p.vocab_size)
            throw std::runtime_error("token id out of range: " + std::to_string(ids[i]));
        const double* erow = emb.row(ids[i]);
        double* xrow = x.row(static_cast<int64_t>(i));
        for (int64_t j = 0; j < d; ++j) xrow[j] = erow[j] * scale;
    }
    add_position_encoding(p, x);
    return x;
}

struct EncLayerCache {
    Tensor x0;
    LnCache ln1;
    Tensor h1;
    AttnCache attn;
    Tensor x1;
    LnCache ln2;
    Tensor h2;
    FfnCache ffn;
};

struct EncCache {
    Tensor x0;
    std::vector<EncLayerCache> layers;
    Tensor x_last;
    LnCache lnf;
    Tensor out;
};

EncCache encoder_forward(const ModelParams& p, const std::vector<int>& src) {
    EncCache cache;
    cache.x0 = embed_sequence(p, src);
    Tensor x = cache.x0;
    cache.layers.resize(static_cast<size_t>(p.hyper.layers));
    for (int l = 0; l < p.hyper.layers; ++l) {
        auto& lc = cache.layers[static_cast<size_t>(l)];
        const std::string pre = "enc." + std::to_string(l);
        lc.x0 = x;
        lc.h1 = ln_forward(x, p.t(pre + ".ln1.g"), p.t(pre + ".ln1.b"), lc.ln1);
        Tensor a = attn_forward(p, pre + ".attn", lc.h1, lc.h1, false, lc.attn);
        for (size_t i = 0; i < x.v.size(); ++i) x.v[i] += a.v[i];
        lc.x1 = x;
        lc.h2 = ln_forward(x, p.t(pre + ".ln2.g"), p.t(pre + ".ln2.b"), lc.ln2);
        Tensor f = ffn_forward(p, pre + ".ffn", lc.h2, lc.ffn);
        for (size_t i = 0; i < x.v.size(); ++i) x.v[i] += f.v[i];
    }
    cache.x_last = x;
    cache.out = ln_forward(x, p.t("enc.final_ln.g"), p.t("enc.final_ln.b"), cache.lnf);
    return cache;
}

// returns d_x0 of the encoder (gradient w.r.t. embedded inputs)
Tensor encoder_backward(const ModelParams& p, const EncCache& cache, const Tensor& d_out,
                        TensorMap& grads) {
    const int64_t t = d_out.rows(), d = d_out.cols();
    Tensor dx = make_mat(t, d);
    ln_backward(cache.lnf, p.t("enc.final_ln.g"), d_out, dx, grads.at("enc.final_ln.g"),
                grads.at("enc.final_ln.b"));
    for (int l = p.hyper.layers - 1; l >= 0; --l) {
        const auto& lc = cache.layers[static_cast<size_t>(l)];
        const std::string pre = "enc." + std::to_string(l);
        // ffn block
        Tensor dh2 = make_mat(t, d);
        ffn_backward(p, pre + ".ffn", lc.ffn, lc.h2, dx, dh2, grads);
        ln_backward(lc.ln2, p.t(pre + ".ln2.g"), dh2, dx, grads.at(pre + ".ln2.g"),
                    grads.at(pre + ".ln2.b"));
        // attention block
        Tensor dh1 = make_mat(t, d);
        attn_backward(p, pre + ".attn", lc.attn, lc.h1, lc.h1, false, dx, dh1, dh1, grads);
        ln_backward(lc.ln1, p.t(pre + ".ln1.g"), dh1, dx, grads.at(pre + ".ln1.g"),
                    grads.at(pre + ".ln1.b"));
    }
    return dx;
}

struct DecLayerCache {
    Tensor x0;
    LnCache ln1;
    Tensor h1;
    AttnCache self_attn;
    Tensor x1;
    LnCache ln2;
    Tensor h2;
    AttnCache cross;
    Tensor x2;
    LnCache ln3;
    Tensor h3;
    FfnCache ffn;
};

struct DecCache {
    Tensor x0;
    std::vector<DecLayerCache> layers;
    Tensor x_last;
    LnCache lnf;
    Tensor out;
};

DecCache decoder_forward(const ModelParams& p, const std::vector<int>& dec_in,
                         const Tensor& enc_out) {
    DecCache cache;
    cache.x0 = embed_sequence(p, dec_in);
    Tensor x = cache.x0;
    cache.layers.resize(static_cast<size_t>(p.hyper.layers));
    for (int l = 0; l < p.hyper.layers; ++l) {
        auto& lc = cache.layers[static_cast<size_t>(l)];
        const std::string pre = "dec." + std::to_string(l);
        lc.x0 = x;
        lc.h1 = ln_forward(x, p.t(pre + ".ln1.g"), p.t(pre + ".ln1.b"), lc.ln1);
        Tensor a = attn_forward(p, pre + ".self", lc.h1, lc.h1, true, lc.self_attn);
        for (size_t i = 0; i < x.v.size(); ++i) x.v[i] += a.v[i];
        lc.x1 = x;
        lc.h2 = ln_forward(x, p.t(pre + ".ln2.g"), p.t(pre + ".ln2.b"), lc.ln2);
        Tensor c = attn_forward(p, pre + ".cross", lc.h2, enc_out, false, lc.cross);
        for (size_t i = 0; i < x.v.size(); ++i) x.v[i] += c.v[i];
        lc.x2 = x;
        lc.h3 = ln_forward(x, p.t(pre + ".ln3.g"), p.t(pre + ".ln3.b"), lc.ln3);
        Tensor f = ffn_forward(p, pre + ".ffn", lc.h3, lc.ffn);
        for (size_t i = 0; i < x.v.size(); ++i) x.v[i] += f.v[i];
    }
    cache.x_last = x;
    cache.out = ln_forward(x, p.t("dec.final_ln.g"), p.t("dec.final_ln.b"), cache.lnf);
    return cache;
}

// returns d_x0 of the decoder; accumulates d_enc_out
Tensor decoder_backward(const ModelParams& p, const DecCache& cache, const Tensor& enc_out,
                        const Tensor& d_out, Tensor& d_enc_out, TensorMap& grads) {
    const int64_t t = d_out.rows(), d = d_out.cols();
    Tensor dx = make_mat(t, d);
    ln_backward(cache.lnf, p.t("dec.final_ln.g"), d_out, dx, grads.at("dec.final_ln.g"),
                grads.at("dec.final_ln.b"));
    for (int l = p.hyper.layers - 1; l >= 0; --l) {
        const auto& lc = cache.layers[static_cast<size_t>(l)];
        const std::string pre = "dec." + std::to_string(l);
        // ffn block
        Tensor dh3 = make_mat(t, d);
        ffn_backward(p, pre + ".ffn", lc.ffn, lc.h3, dx, dh3, grads);
        ln_backward(lc.ln3, p.t(pre + ".ln3.g"), dh3, dx, grads.at(pre + ".ln3.g"),
                    grads.at(pre + ".ln3.b"));
        // cross attention block
        Tensor dh2 = make_mat(t, d);
        attn_backward(p, pre + ".cross", lc.cross, lc.h2, enc_out, false, dx, dh2, d_enc_out,
                      grads);
        ln_backward(lc.ln2, p.t(pre + ".ln2.g"), dh2, dx, grads.at(pre + ".ln2.g"),
                    grads.at(pre + ".ln2.b"));
        // self attention block
        Tensor dh1 = make_mat(t, d);
        attn_backward(p, pre + ".self", lc.self_attn, lc.h1, lc.h1, true, dx, dh1, dh1, grads);
        ln_backward(lc.ln1, p.t(pre + ".ln1.g"), dh1, dx, grads.at(pre + ".ln1.g"),
                    grads.at(pre + ".ln1.b"));
    }
    return dx;
}

void accumulate_embedding_grad(const ModelParams& p, const std::vector<int>& ids,
                               const Tensor& d_x0, Tensor& d_emb) {
    const double scale = std::sqrt(static_cast<double>(p.hyper.dim));
    for (size_t i = 0; i < ids.size(); ++i) {
        const double* drow = d_x0.row(static_cast<int64_t>(i));
        double* erow = d_emb.row(ids[i]);
        for (int64_t j = 0; j < d_x0.cols(); ++j) erow[j] += drow[j] * scale;
    }
}

TensorMap zero_grads(const ModelParams& p) {
    TensorMap grads;
    for (const auto& [name, tensor] : p.tensors) grads.emplace(name, Tensor(tensor.shape));
    return grads;
}

void validate_batch_item(const ModelParams& p, const BatchItem& item) {
    if (item.src.empty()) throw std::runtime_error("empty source sequence");
    if (item.tgt.size() < 2) throw std::runtime_error("target must include bos/eos framing");
    if (item.src.size() > static_cast<size_t>(p.hyper.max_len) ||
        item.tgt.size() > static_cast<size_t>(p.hyper.max_len))
        throw std::runtime_error("sequence exceeds max length " +
                                 std::to_string(p.hyper.max_len));
}

double forward_batch(const ModelParams& p, const Batch& batch, TensorMap* grads,
                     int64_t* label_tokens_out) {
    if (batch.empty()) throw std::runtime_error("empty batch");
    int64_t total_tokens = 0;
    for (const auto& item : batch) {
        validate_batch_item(p, item);
        total_tokens += static_cast<int64_t>(item.tgt.size()) - 1;
    }
    if (label_tokens_out) *label_tokens_out = total_tokens;

    const Tensor& emb = p.t("embedding");
    double loss = 0.0;
    for (const auto& item : batch) {
        const std::vector<int> dec_in(item.tgt.begin(), item.tgt.end() - 1);
        const std::vector<int> labels(item.tgt.begin() + 1, item.tgt.end());

        EncCache enc = encoder_forward(p, item.src);
        DecCache dec = decoder_forward(p, dec_in, enc.out);
        Tensor logits = matmul_a_bt(dec.out, emb);  // [T, V]

        Tensor dlogits;
        if (grads) dlogits = make_mat(logits.rows(), logits.cols());
        for (int64_t i = 0; i < logits.rows(); ++i) {
            const double* row = logits.row(i);
            const int label = labels[static_cast<size_t>(i)];
            double mx = row[0];
            for (int64_t j = 1; j < logits.cols(); ++j) mx = std::max(mx, row[j]);
            double z = 0.0;
            for (int64_t j = 0; j < logits.cols(); ++j) z += std::exp(row[j] - mx);
            const double logz = std::log(z) + mx;
            loss += (logz - row[label]) / static_cast<double>(total_tokens);
            if (grads) {
                double* drow = dlogits.row(i);
                for (int64_t j = 0; j < logits.cols(); ++j)
                    drow[j] = std::exp(row[j] - logz) / static_cast<double>(total_tokens);
                drow[label] -= 1.0 / static_cast<double>(total_tokens);
            }
        }
        if (!grads) continue;

        // logits = dec.out * emb^T
        Tensor d_dec_out = matmul(dlogits, emb);
        matmul_acc_at_b(dlogits, dec.out, grads->at("embedding"));

        Tensor d_enc_out = make_mat(enc.out.rows(), enc.out.cols());
        Tensor d_dec_x0 = decoder_backward(p, dec, enc.out, d_dec_out, d_enc_out, *grads);
        Tensor d_enc_x0 = encoder_backward(p, enc, d_enc_out, *grads);
        accumulate_embedding_grad(p, dec_in, d_dec_x0, grads->at("embedding"));
        accumulate_embedding_grad(p, item.src, d_enc_x0, grads->at("embedding"));
    }
    return loss;
}

}  // namespace

// ---------------------------------------------------------------------------
// public API
// ---------------------------------------------------------------------------

Tensor& ModelParams::t(const std::string& name) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw std::runtime_error("unknown parameter: " + name);
    return it->second;
}

const Tensor& ModelParams::t(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw std::runtime_error("unknown parameter: " + name);
    return it->second;
}

ModelParams init_model(const ModelHyper& hyper, int vocab_size, uint64_t seed) {
    if (hyper.layers < 1 || hyper.dim < 2 || hyper.heads < 1 || hyper.ffn < 1 ||
        hyper.max_len < 2 || vocab_size < 5)
        throw std::runtime_error("invalid model hyperparameters");
    if (hyper.dim % hyper.heads != 0)
        throw std::runtime_error("model width must be divisible by the head count");

    ModelParams p;
    p.hyper = hyper;
    p.vocab_size = vocab_size;
    const int64_t d = hyper.dim;
    const int64_t f = hyper.ffn;

    auto mat = [&p](const std::string& name, int64_t r, int64_t c) {
        p.tensors.emplace(name, Tensor({r, c}));
    };
    auto vec = [&p](const std::string& name, int64_t n) { p.tensors.emplace(name, Tensor({n})); };

    mat("embedding", vocab_size, d);
    auto add_ln = [&vec](const std::string& prefix, int64_t n) {
        vec(prefix + ".g", n);
        vec(prefix + ".b", n);
    };
    auto add_attn = [&](const std::string& prefix) {
        mat(prefix + ".wq", d, d);
        mat(prefix + ".wk", d, d);
        mat(prefix + ".wv", d, d);
        mat(prefix + ".wo", d, d);
        vec(prefix + ".bq", d);
        vec(prefix + ".bk", d);
        vec(prefix + ".bv", d);
        vec(prefix + ".bo", d);
    };
    auto add_ffn = [&](const std::string& prefix) {
        mat(prefix + ".w1", d, f);
        vec(prefix + ".b1", f);
        mat(prefix + ".w2", f, d);
        vec(prefix + ".b2", d);
    };
    for (int l = 0; l < hyper.layers; ++l) {
        const std::string e = "enc." + std::to_string(l);
        add_ln(e + ".ln1", d);
        add_attn(e + ".attn");
        add_ln(e + ".ln2", d);
        add_ffn(e + ".ffn");
        const std::string dc = "dec." + std::to_string(l);
        add_ln(dc + ".ln1", d);
        add_attn(dc + ".self");
        add_ln(dc + ".ln2", d);
        add_attn(dc + ".cross");
        add_ln(dc + ".ln3", d);
        add_ffn(dc + ".ffn");
    }
    add_ln("enc.final_ln", d);
    add_ln("dec.final_ln", d);

    Rng rng(mix_seed(seed, "init_model"));
    for (auto& [name, tensor] : p.tensors) {
        if (name.ends_with(".g")) {
            std::fill(tensor.v.begin(), tensor.v.end(), 1.0);
        } else if (name == "embedding") {
            for (double& x : tensor.v) x = rng.gaussian() * 0.05;
        } else if (tensor.shape.size() == 2) {
            const double std_dev =
                std::sqrt(2.0 / static_cast<double>(tensor.shape[0] + tensor.shape[1]));
            for (double& x : tensor.v) x = rng.gaussian() * std_dev;
        }
        // 1-D biases stay zero
    }
    return p;
}

BatchItem make_batch_item(std::vector<int> src_ids, const std::vector<int>& tgt_ids) {
    BatchItem item;
    item.src = std::move(src_ids);
    item.tgt.reserve(tgt_ids.size() + 2);
    item.tgt.push_back(kBosId);
    item.tgt.insert(item.tgt.end(), tgt_ids.begin(), tgt_ids.end());
    item.tgt.push_back(kEosId);
    return item;
}

ForwardResult forward_loss(const ModelParams& params, const Batch& batch) {
    ForwardResult result;
    result.grads = zero_grads(params);
    result.loss = forward_batch(params, batch, &result.grads, &result.label_tokens);
    return result;
}

double forward_loss_only(const ModelParams& params, const Batch& batch) {
    return forward_batch(params, batch, nullptr, nullptr);
}

TrainTrace train(ModelParams& params, const EpochStream& stream, const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw std::runtime_error("epochs must be at least 1");
    TrainTrace trace;
    TensorMap m = zero_grads(params);
    TensorMap v = zero_grads(params);
    int64_t step = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const std::vector<Batch> batches = stream(epoch);
        if (batches.empty()) throw std::runtime_error("training data stream is empty");
        double epoch_loss = 0.0;
        int64_t epoch_batches = 0;
        for (const auto& batch : batches) {
            TensorMap grads = zero_grads(params);
            int64_t tokens = 0;
            const double loss = forward_batch(params, batch, &grads, &tokens);
            if (!std::isfinite(loss))
                throw std::runtime_error("divergence at step " + std::to_string(step));
            epoch_loss += loss;
            ++epoch_batches;
            ++step;

            if (cfg.clip_norm > 0.0) {
                double sq = 0.0;
                for (const auto& [name, g] : grads)
                    for (double x : g.v) sq += x * x;
                const double norm = std::sqrt(sq);
                if (norm > cfg.clip_norm) {
                    const double scale = cfg.clip_norm / norm;
                    for (auto& [name, g] : grads)
                        for (double& x : g.v) x *= scale;
                }
            }

            const double warm =
                cfg.warmup_steps > 0
                    ? std::min(1.0, static_cast<double>(step) / cfg.warmup_steps)
                    : 1.0;
            const double lr = cfg.lr * warm;
            const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
            for (auto& [name, tensor] : params.tensors) {
                const Tensor& g = grads.at(name);
                Tensor& mm = m.at(name);
                Tensor& vv = v.at(name);
                for (size_t i = 0; i < tensor.v.size(); ++i) {
                    mm.v[i] = cfg.beta1 * mm.v[i] + (1.0 - cfg.beta1) * g.v[i];
                    vv.v[i] = cfg.beta2 * vv.v[i] + (1.0 - cfg.beta2) * g.v[i] * g.v[i];
                    const double mhat = mm.v[i] / bc1;
                    const double vhat = vv.v[i] / bc2;
                    tensor.v[i] -= lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
                }
            }
        }
        trace.epoch_loss.push_back(epoch_loss / static_cast<double>(epoch_batches));
    }
    trace.steps = step;
    return trace;
}

std::vector<int> greedy_decode(const ModelParams& p, const std::vector<int>& src, int max_len) {
    if (src.empty()) throw std::runtime_error("empty source sequence");
    if (src.size() > static_cast<size_t>(p.hyper.max_len))
        throw std::runtime_error("sequence exceeds max length " + std::to_string(p.hyper.max_len));

    const EncCache enc = encoder_forward(p, src);
    const Tensor& emb = p.t("embedding");
    const int64_t d = p.hyper.dim;
    const int64_t heads = p.hyper.heads;
    const int64_t dh = d / heads;
    const double att_scale = 1.0 / std::sqrt(static_cast<double>(dh));
    const double emb_scale = std::sqrt(static_cast<double>(d));
    const int layers = p.hyper.layers;

    // cross-attention keys/values are fixed per layer
    std::vector<Tensor> cross_k(static_cast<size_t>(layers));
    std::vector<Tensor> cross_v(static_cast<size_t>(layers));
    for (int l = 0; l < layers; ++l) {
        const std::string pre = "dec." + std::to_string(l) + ".cross";
        cross_k[static_cast<size_t>(l)] = linear(enc.out, p.t(pre + ".wk"), p.t(pre + ".bk"));
        cross_v[static_cast<size_t>(l)] = linear(enc.out, p.t(pre + ".wv"), p.t(pre + ".bv"));
    }

    std::vector<Tensor> self_k(static_cast<size_t>(layers));
    std::vector<Tensor> self_v(static_cast<size_t>(layers));

    LnCache scratch;
    std::vector<int> out;
    int cur = kBosId;
    for (int t = 0;; ++t) {
        if (static_cast<int>(out.size()) >= max_len) break;
        if (t >= p.hyper.max_len) break;

        Tensor x = make_mat(1, d);
        {
            const double* erow = emb.row(cur);
            double* xr = x.row(0);
            for (int64_t j = 0; j < d; ++j) xr[j] = erow[j] * emb_scale;
            for (int64_t j = 0; j + 1 < d; j += 2) {
                const double freq =
                    std::pow(10000.0, -static_cast<double>(j) / static_cast<double>(d));
                xr[j] += std::sin(static_cast<double>(t) * freq);
                xr[j + 1] += std::cos(static_cast<double>(t) * freq);
            }
        }

        auto one_attn = [&](const Tensor& h, const Tensor& kmat, const Tensor& vmat,
                            const std::string& pre) {
            Tensor q = linear(h, p.t(pre + ".wq"), p.t(pre + ".bq"));
            Tensor ctx = make_mat(1, d);
            const int64_t tk = kmat.rows();
            for (int64_t hd = 0; hd < heads; ++hd) {
                const int64_t off = hd * dh;
                std::vector<double> w(static_cast<size_t>(tk));
                double mx = -1e300;
                for (int64_t j = 0; j < tk; ++j) {
                    const double* kj = kmat.row(j) + off;
                    const double* qi = q.row(0) + off;
                    double s = 0.0;
                    for (int64_t c = 0; c < dh; ++c) s += qi[c] * kj[c];
                    s *= att_scale;
                    w[static_cast<size_t>(j)] = s;
                    mx = std::max(mx, s);
                }
                double z = 0.0;
                for (double& s : w) {
                    s = std::exp(s - mx);
                    z += s;
                }
                double* cr = ctx.row(0) + off;
                for (int64_t j = 0; j < tk; ++j) {
                    const double* vj = vmat.row(j) + off;
                    const double wj = w[static_cast<size_t>(j)] / z;
                    for (int64_t c = 0; c < dh; ++c) cr[c] += wj * vj[c];
                }
            }
            return linear(ctx, p.t(pre + ".wo"), p.t(pre + ".bo"));
        };

        for (int l = 0; l < layers; ++l) {
            const size_t ls = static_cast<size_t>(l);
            const std::string pre = "dec." + std::to_string(l);
            Tensor h = ln_forward(x, p.t(pre + ".ln1.g"), p.t(pre + ".ln1.b"), scratch);
            // append this position's self-attention keys/values
            Tensor kn = linear(h, p.t(pre + ".self.wk"), p.t(pre + ".self.bk"));
            Tensor vn = linear(h, p.t(pre + ".self.wv"), p.t(pre + ".self.bv"));
            if (self_k[ls].rows() == 0) {
                self_k[ls] = kn;
                self_v[ls] = vn;
            } else {
                self_k[ls].shape[0] += 1;
                self_k[ls].v.insert(self_k[ls].v.end(), kn.v.begin(), kn.v.end());
                self_v[ls].shape[0] += 1;
                self_v[ls].v.insert(self_v[ls].v.end(), vn.v.begin(), vn.v.end());
            }
            Tensor a = one_attn(h, self_k[ls], self_v[ls], pre + ".self");
            for (size_t i = 0; i < x.v.size(); ++i) x.v[i] += a.v[i];

            h = ln_forward(x, p.t(pre + ".ln2.g"), p.t(pre + ".ln2.b"), scratch);
            Tensor c = one_attn(h, cross_k[ls], cross_v[ls], pre + ".cross");
            for (size_t i = 0; i < x.v.size(); ++i) x.v[i] += c.v[i];

            h = ln_forward(x, p.t(pre + ".ln3.g"), p.t(pre + ".ln3.b"), scratch);
            FfnCache fc;
            Tensor f = ffn_forward(p, pre + ".ffn", h, fc);
            for (size_t i = 0; i < x.v.size(); ++i) x.v[i] += f.v[i];
        }

        Tensor xf = ln_forward(x, p.t("dec.final_ln.g"), p.t("dec.final_ln.b"), scratch);
        Tensor logits = matmul_a_bt(xf, emb);
        int best = 0;
        const double* lrow = logits.row(0);
        for (int j = 1; j < p.vocab_size; ++j)
            if (lrow[j] > lrow[best]) best = j;

        if (best == kEosId) break;
        out.push_back(best);
        cur = best;
    }
    return out;
}

Tensor pca_top_k(const Tensor& matrix, int k) {
    if (matrix.shape.size() != 2) throw std::runtime_error("pca_top_k expects a 2-D tensor");
    const int64_t n = matrix.rows();
    const int64_t d = matrix.cols();
    if (k < 0 || k > std::min(n, d))
        throw std::runtime_error("pca rank must lie in [0, min(rows, cols)]");
    Tensor basis({d, static_cast<int64_t>(k)});
    if (k == 0) return basis;

    // mean-centered covariance, [d,d]
    std::vector<double> mean(static_cast<size_t>(d), 0.0);
    for (int64_t i = 0; i < n; ++i) {
        const double* row = matrix.row(i);
        for (int64_t j = 0; j < d; ++j) mean[static_cast<size_t>(j)] += row[j];
    }
    for (double& m : mean) m /= static_cast<double>(n);
    Tensor cov = make_mat(d, d);
    for (int64_t i = 0; i < n; ++i) {
        const double* row = matrix.row(i);
        for (int64_t a = 0; a < d; ++a) {
            const double xa = row[a] - mean[static_cast<size_t>(a)];
            if (xa == 0.0) continue;
            double* crow = cov.row(a);
            for (int64_t b = 0; b < d; ++b)
                crow[b] += xa * (row[b] - mean[static_cast<size_t>(b)]);
        }
    }
    const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
    for (double& x : cov.v) x /= denom;

    std::vector<std::vector<double>> comps;
    Rng rng(mix_seed(0x9CAull, "pca_power_iteration"));
    double top_eig = 0.0;
    for (int c = 0; c < k; ++c) {
        std::vector<double> v(static_cast<size_t>(d));
        for (double& x : v) x = rng.gaussian();
        auto orthogonalize = [&]() {
            for (const auto& prev : comps) {
                double dot = 0.0;
                for (size_t j = 0; j < v.size(); ++j) dot += v[j] * prev[j];
                for (size_t j = 0; j < v.size(); ++j) v[j] -= dot * prev[j];
            }
        };
        auto normalize = [&]() {
            double norm = 0.0;
            for (double x : v) norm += x * x;
            norm = std::sqrt(norm);
            if (norm < 1e-300) return false;
            for (double& x : v) x /= norm;
            return true;
        };
        orthogonalize();
        if (!normalize()) throw std::runtime_error("pca rank exceeds matrix rank");
        for (int iter = 0; iter < 500; ++iter) {
            std::vector<double> w(static_cast<size_t>(d), 0.0);
            for (int64_t a = 0; a < d; ++a) {
                const double* crow = cov.row(a);
                double acc = 0.0;
                for (int64_t b = 0; b < d; ++b) acc += crow[b] * v[static_cast<size_t>(b)];
                w[static_cast<size_t>(a)] = acc;
            }
            v = std::move(w);
            orthogonalize();
            if (!normalize()) throw std::runtime_error("pca rank exceeds matrix rank");
        }
        // Rayleigh quotient as the eigenvalue estimate
        double lambda = 0.0;
        for (int64_t a = 0; a < d; ++a) {
            const double* crow = cov.row(a);
            double acc = 0.0;
            for (int64_t b = 0; b < d; ++b) acc += crow[b] * v[static_cast<size_t>(b)];
            lambda += v[static_cast<size_t>(a)] * acc;
        }
        if (c == 0) top_eig = lambda;
        if (lambda < 1e-10 * std::max(top_eig, 1e-10) || lambda <= 0.0)
            throw std::runtime_error("pca rank " + std::to_string(k) +
                                     " exceeds the rank of the matrix");
        // fix sign: largest-magnitude entry positive
        size_t arg = 0;
        for (size_t j = 1; j < v.size(); ++j)
            if (std::abs(v[j]) > std::abs(v[arg])) arg = j;
        if (v[arg] < 0.0)
            for (double& x : v) x = -x;
        comps.push_back(v);
    }
    for (int64_t j = 0; j < d; ++j)
        for (int c = 0; c < k; ++c) basis.at(j, c) = comps[static_cast<size_t>(c)][static_cast<size_t>(j)];
    return basis;
}

ModelParams expand_embeddings(const ModelParams& params, int n_new, int pca_rank, uint64_t seed) {
    if (n_new < 0) throw std::runtime_error("n_new must be non-negative");
    const Tensor& emb = params.t("embedding");
    const int64_t d = emb.cols();
    if (pca_rank < 0 || pca_rank > static_cast<int>(std::min(emb.rows(), d)))
        throw std::runtime_error("pca rank must lie in [0, min(vocab, dim)]");

    std::vector<double> mean(static_cast<size_t>(d), 0.0);
    for (int64_t i = 0; i < emb.rows(); ++i) {
        const double* row = emb.row(i);
        for (int64_t j = 0; j < d; ++j) mean[static_cast<size_t>(j)] += row[j];
    }
    for (double& m : mean) m /= static_cast<double>(emb.rows());

    Tensor basis;
    if (pca_rank > 0) basis = pca_top_k(emb, pca_rank);

    ModelParams out = params;
    Tensor expanded({emb.rows() + n_new, d});
    std::copy(emb.v.begin(), emb.v.end(), expanded.v.begin());
    for (int r = 0; r < n_new; ++r) {
        Rng rng(mix_seed(seed, "expand_embeddings", static_cast<uint64_t>(r)));
        double* row = expanded.row(emb.rows() + r);
        for (int64_t j = 0; j < d; ++j) row[j] = mean[static_cast<size_t>(j)];
        if (pca_rank == 0) continue;
        std::vector<double> dir(static_cast<size_t>(d), 0.0);
        double norm = 0.0;
        while (norm < 1e-12) {
            std::vector<double> coeff(static_cast<size_t>(pca_rank));
            for (double& c : coeff) c = rng.gaussian();
            std::fill(dir.begin(), dir.end(), 0.0);
            for (int64_t j = 0; j < d; ++j)
                for (int c = 0; c < pca_rank; ++c)
                    dir[static_cast<size_t>(j)] += basis.at(j, c) * coeff[static_cast<size_t>(c)];
            norm = 0.0;
            for (double x : dir) norm += x * x;
            norm = std::sqrt(norm);
        }
        for (int64_t j = 0; j < d; ++j) row[j] += dir[static_cast<size_t>(j)] / norm;
    }
    out.tensors["embedding"] = std::move(expanded);
    out.vocab_size = params.vocab_size + n_new;
    return out;
}

ModelParams interpolate(const ModelParams& base, const ModelParams& finetuned, double alpha) {
    if (alpha < 0.0 || alpha > 1.0) throw std::runtime_error("alpha must lie in [0,1]");
    for (const auto& [name, tensor] : base.tensors)
        if (!finetuned.tensors.count(name))
            throw std::runtime_error("parameter present only in the base model: " + name);

    ModelParams out;
    out.hyper = finetuned.hyper;
    out.vocab_size = finetuned.vocab_size;
    for (const auto& [name, ft] : finetuned.tensors) {
        auto bit = base.tensors.find(name);
        if (bit == base.tensors.end()) {
            out.tensors.emplace(name, ft);
            continue;
        }
        const Tensor& bt = bit->second;
        if (bt.same_shape(ft)) {
            Tensor t = ft;
            if (alpha == 0.0) {
                t = bt;
            } else if (alpha != 1.0) {
                for (size_t i = 0; i < t.v.size(); ++i)
                    t.v[i] = (1.0 - alpha) * bt.v[i] + alpha * ft.v[i];
            }
            out.tensors.emplace(name, std::move(t));
        } else if (bt.shape.size() == 2 && ft.shape.size() == 2 && bt.cols() == ft.cols() &&
                   ft.rows() > bt.rows()) {
            // row-expanded tensor: interpolate the common rows, keep new rows
            Tensor t = ft;
            if (alpha != 1.0) {
                const size_t common = static_cast<size_t>(bt.numel());
                for (size_t i = 0; i < common; ++i)
                    t.v[i] = alpha == 0.0 ? bt.v[i] : (1.0 - alpha) * bt.v[i] + alpha * ft.v[i];
            }
            out.tensors.emplace(name, std::move(t));
        } else {
            throw std::runtime_error("shape mismatch for parameter: " + name);
        }
    }
    return out;
}

AlphaSearchResult search_alpha(const ModelParams& base, const ModelParams& finetuned,
                               const std::function<double(const ModelParams&)>& perf_fn,
                               const std::vector<double>& grid) {
    if (grid.empty()) throw std::runtime_error("alpha grid must be non-empty");
    std::vector<double> sorted_grid = grid;
    std::sort(sorted_grid.begin(), sorted_grid.end());
    AlphaSearchResult result;
    bool have_best = false;
    double best_perf = 0.0;
    for (double alpha : sorted_grid) {
        if (alpha < 0.0 || alpha > 1.0)
            throw std::runtime_error("alpha grid values must lie in [0,1]");
        const ModelParams blended = interpolate(base, finetuned, alpha);
        const double perf = perf_fn(blended);
        if (!std::isfinite(perf))
            throw std::runtime_error("non-finite performance at alpha=" + std::to_string(alpha));
        result.trace.emplace_back(alpha, perf);
        if (!have_best || perf > best_perf) {
            have_best = true;
            best_perf = perf;
            result.best_alpha = alpha;
        }
    }
    return result;
}

void save_checkpoint(const ModelParams& params, uint64_t vocab_hash, const std::string& path) {
    json header;
    header["hyper"] = {{"layers", params.hyper.layers}, {"dim", params.hyper.dim},
                       {"heads", params.hyper.heads},   {"ffn", params.hyper.ffn},
                       {"max_len", params.hyper.max_len}};
    header["vocab_size"] = params.vocab_size;
    char hashbuf[17];
    std::snprintf(hashbuf, sizeof(hashbuf), "%016llx",
                  static_cast<unsigned long long>(vocab_hash));
    header["vocab_hash"] = hashbuf;
    json tensors = json::array();
    for (const auto& [name, tensor] : params.tensors)
        tensors.push_back({{"name", name}, {"shape", tensor.shape}});
    header["tensors"] = tensors;
    const std::string header_str = header.dump();

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write checkpoint file: " + path);
        out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
        const uint32_t version = kCheckpointVersion;
        out.write(reinterpret_cast<const char*>(&version), sizeof(version));
        const uint64_t hlen = header_str.size();
        out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
        out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
        for (const auto& [name, tensor] : params.tensors)
            out.write(reinterpret_cast<const char*>(tensor.v.data()),
                      static_cast<std::streamsize>(tensor.v.size() * sizeof(double)));
        if (!out) throw std::runtime_error("failed writing checkpoint file: " + path);
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint file: " + path);

    auto corrupt = [&path](std::streamoff offset) -> std::runtime_error {
        return std::runtime_error("corrupt checkpoint " + path + " at offset " +
                                  std::to_string(offset));
    };

    char magic[8];
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kCheckpointMagic, 8) != 0)
        throw corrupt(0);
    uint32_t version = 0;
    if (!in.read(reinterpret_cast<char*>(&version), sizeof(version))) throw corrupt(8);
    if (version != kCheckpointVersion)
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version) +
                                 " in " + path);
    uint64_t hlen = 0;
    if (!in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen))) throw corrupt(12);
    std::string header_str(hlen, '\0');
    if (!in.read(header_str.data(), static_cast<std::streamsize>(hlen))) throw corrupt(20);

    json header;
    try {
        header = json::parse(header_str);
    } catch (const json::parse_error&) {
        throw corrupt(20);
    }

    Checkpoint ckpt;
    ckpt.format_version = static_cast<int>(version);
    ckpt.params.hyper.layers = header["hyper"]["layers"].get<int>();
    ckpt.params.hyper.dim = header["hyper"]["dim"].get<int>();
    ckpt.params.hyper.heads = header["hyper"]["heads"].get<int>();
    ckpt.params.hyper.ffn = header["hyper"]["ffn"].get<int>();
    ckpt.params.hyper.max_len = header["hyper"]["max_len"].get<int>();
    ckpt.params.vocab_size = header["vocab_size"].get<int>();
    ckpt.vocab_hash = std::stoull(header["vocab_hash"].get<std::string>(), nullptr, 16);

    std::streamoff offset = static_cast<std::streamoff>(20 + hlen);
    for (const auto& entry : header["tensors"]) {
        const std::string name = entry["name"].get<std::string>();
        Tensor tensor(entry["shape"].get<std::vector<int64_t>>());
        if (!in.read(reinterpret_cast<char*>(tensor.v.data()),
                     static_cast<std::streamsize>(tensor.v.size() * sizeof(double))))
            throw corrupt(offset);
        offset += static_cast<std::streamoff>(tensor.v.size() * sizeof(double));
        ckpt.params.tensors.emplace(name, std::move(tensor));
    }
    // trailing garbage also counts as corruption
    char extra;
    if (in.read(&extra, 1)) throw corrupt(offset);
    return ckpt;
}

std::vector<double> softmax(const std::vector<double>& logits) {
    std::vector<double> p(logits.size());
    if (logits.empty()) return p;
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        z += p[i];
    }
    for (double& x : p) x /= z;
    return p;
}

}  // namespace instructmt
