#include "rankbench/model.hpp"

#include "rankbench/error.hpp"
#include "rankbench/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rankbench {
namespace {

constexpr double kNormEps = 1e-5;

struct BlockIndex {
    std::size_t n1g, n1b, wq, bq, wk, bk, wv, bv, wo, bo, n2g, n2b, w1, b1, w2, b2;
};

struct AggregateIndex {
    std::size_t ng, nb, wk, bk, wv, bv, query;
};

struct Index {
    std::size_t in_w = 0, in_b = 0;
    std::vector<BlockIndex> blocks;  // 2 * n_layers, temporal then spatial
    AggregateIndex agg{};
    std::size_t dec_w = 0, dec_b = 0;
    std::vector<ParamTensor> tensors;
    std::size_t total = 0;

    std::size_t add(std::string name, std::vector<std::size_t> shape) {
        std::size_t size = 1;
        for (auto s : shape) size *= s;
        tensors.push_back({std::move(name), std::move(shape), total, size});
        const std::size_t off = total;
        total += size;
        return off;
    }
};

Index build_index(const ModelConfig& c) {
    Index ix;
    const std::size_t D = c.d_model;
    ix.in_w = ix.add("input.weight", {D, c.features});
    ix.in_b = ix.add("input.bias", {D});
    for (std::size_t l = 0; l < c.n_layers; ++l) {
        for (const char* kind : {"temporal", "spatial"}) {
            const std::string p = "layers." + std::to_string(l) + "." + kind + ".";
            BlockIndex b{};
            b.n1g = ix.add(p + "norm1.gamma", {D});
            b.n1b = ix.add(p + "norm1.beta", {D});
            b.wq = ix.add(p + "attn.wq", {D, D});
            b.bq = ix.add(p + "attn.bq", {D});
            b.wk = ix.add(p + "attn.wk", {D, D});
            b.bk = ix.add(p + "attn.bk", {D});
            b.wv = ix.add(p + "attn.wv", {D, D});
            b.bv = ix.add(p + "attn.bv", {D});
            b.wo = ix.add(p + "attn.wo", {D, D});
            b.bo = ix.add(p + "attn.bo", {D});
            b.n2g = ix.add(p + "norm2.gamma", {D});
            b.n2b = ix.add(p + "norm2.beta", {D});
            b.w1 = ix.add(p + "ffn.w1", {c.d_ff, D});
            b.b1 = ix.add(p + "ffn.b1", {c.d_ff});
            b.w2 = ix.add(p + "ffn.w2", {D, c.d_ff});
            b.b2 = ix.add(p + "ffn.b2", {D});
            ix.blocks.push_back(b);
        }
    }
    ix.agg.ng = ix.add("aggregate.norm.gamma", {D});
    ix.agg.nb = ix.add("aggregate.norm.beta", {D});
    ix.agg.wk = ix.add("aggregate.wk", {D, D});
    ix.agg.bk = ix.add("aggregate.bk", {D});
    ix.agg.wv = ix.add("aggregate.wv", {D, D});
    ix.agg.bv = ix.add("aggregate.bv", {D});
    ix.agg.query = ix.add("aggregate.query", {D});
    ix.dec_w = ix.add("decoder.weight", {D});
    ix.dec_b = ix.add("decoder.bias", {1});
    return ix;
}

// ---------------------------------------------------------------------------
// Dense kernels. Weights are [out, in] row-major.

void linear(const double* x, std::size_t rows, std::size_t in, const double* w, const double* b, std::size_t out,
            double* y) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = x + r * in;
        double* yr = y + r * out;
        for (std::size_t o = 0; o < out; ++o) {
            const double* wo = w + o * in;
            double acc = b[o];
            for (std::size_t i = 0; i < in; ++i) acc += wo[i] * xr[i];
            yr[o] = acc;
        }
    }
}

// dx may be null. dx is accumulated into.
void linear_backward(const double* dy, const double* x, std::size_t rows, std::size_t in, const double* w,
                     std::size_t out, double* dw, double* db, double* dx) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* dyr = dy + r * out;
        const double* xr = x + r * in;
        double* dxr = dx ? dx + r * in : nullptr;
        for (std::size_t o = 0; o < out; ++o) {
            const double g = dyr[o];
            if (g == 0.0) continue;
            db[o] += g;
            double* dwo = dw + o * in;
            const double* wo = w + o * in;
            for (std::size_t i = 0; i < in; ++i) dwo[i] += g * xr[i];
            if (dxr)
                for (std::size_t i = 0; i < in; ++i) dxr[i] += g * wo[i];
        }
    }
}

struct NormCache {
    std::vector<double> xhat;
    std::vector<double> rstd;
};

void layer_norm(const double* x, std::size_t rows, std::size_t d, const double* gamma, const double* beta,
                double* y, NormCache& cache) {
    cache.xhat.resize(rows * d);
    cache.rstd.resize(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = x + r * d;
        double mean = 0.0;
        for (std::size_t i = 0; i < d; ++i) mean += xr[i];
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t i = 0; i < d; ++i) var += (xr[i] - mean) * (xr[i] - mean);
        var /= static_cast<double>(d);
        const double rstd = 1.0 / std::sqrt(var + kNormEps);
        cache.rstd[r] = rstd;
        double* xh = cache.xhat.data() + r * d;
        double* yr = y + r * d;
        for (std::size_t i = 0; i < d; ++i) {
            xh[i] = (xr[i] - mean) * rstd;
            yr[i] = gamma[i] * xh[i] + beta[i];
        }
    }
}

// dx is accumulated into.
void layer_norm_backward(const double* dy, std::size_t rows, std::size_t d, const double* gamma,
                         const NormCache& cache, double* dgamma, double* dbeta, double* dx) {
    std::vector<double> dxhat(d);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* dyr = dy + r * d;
        const double* xh = cache.xhat.data() + r * d;
        double mean_dxhat = 0.0;
        double mean_dxhat_xhat = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            dgamma[i] += dyr[i] * xh[i];
            dbeta[i] += dyr[i];
            dxhat[i] = dyr[i] * gamma[i];
            mean_dxhat += dxhat[i];
            mean_dxhat_xhat += dxhat[i] * xh[i];
        }
        mean_dxhat /= static_cast<double>(d);
        mean_dxhat_xhat /= static_cast<double>(d);
        double* dxr = dx + r * d;
        const double rstd = cache.rstd[r];
        for (std::size_t i = 0; i < d; ++i) dxr[i] += rstd * (dxhat[i] - mean_dxhat - xh[i] * mean_dxhat_xhat);
    }
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)

double gelu(double u) { return 0.5 * u * (1.0 + std::tanh(kGeluC * (u + 0.044715 * u * u * u))); }

double gelu_grad(double u) {
    const double th = std::tanh(kGeluC * (u + 0.044715 * u * u * u));
    return 0.5 * (1.0 + th) + 0.5 * u * (1.0 - th * th) * kGeluC * (1.0 + 3.0 * 0.044715 * u * u);
}

// Rows of the hidden state are indexed r = t * N + n. A block attends within
// sequences: row(seq, pos) = seq * seq_stride + pos * pos_stride.
struct SequenceLayout {
    std::size_t count;
    std::size_t length;
    std::size_t seq_stride;
    std::size_t pos_stride;

    std::size_t row(std::size_t seq, std::size_t pos) const { return seq * seq_stride + pos * pos_stride; }
};

class DropoutSource {
public:
    DropoutSource(double rate, std::optional<std::uint64_t> seed)
        : active_(seed.has_value() && rate > 0.0), keep_(1.0 - rate), rng_(seed.value_or(0)) {}

    bool active() const { return active_; }

    // 0 or 1 / keep.
    double draw() { return rng_.uniform() < keep_ ? 1.0 / keep_ : 0.0; }

private:
    bool active_;
    double keep_;
    Rng rng_;
};

struct BlockCache {
    std::vector<double> input;
    NormCache norm1;
    std::vector<double> a, q, k, v;
    std::vector<double> probs;      // count x H x L x L, pre-dropout
    std::vector<double> prob_mult;  // dropout multipliers, empty when off
    std::vector<double> o;
    std::vector<double> h1;
    NormCache norm2;
    std::vector<double> b, u, g;  // g = gelu(u) before dropout
    std::vector<double> g_mult;
};

struct AggregateCache {
    NormCache norm;
    std::vector<double> z, k, v;
    std::vector<double> alpha;  // N x H x T
    std::vector<double> pooled;  // N x D
};

class Network {
public:
    Network(const ModelParams& params, std::size_t stocks)
        : p_(params), c_(params.config), ix_(build_index(params.config)), n_(stocks),
          rows_(params.config.window * stocks) {
        if (p_.values.size() != ix_.total) throw std::invalid_argument("parameter vector does not match config");
        if (p_.positional.size() != c_.window * c_.d_model)
            throw std::invalid_argument("positional table does not match config");
    }

    std::vector<double> forward(std::span<const double> x, DropoutSource& drop) {
        const std::size_t T = c_.window, D = c_.d_model, F = c_.features;
        if (n_ == 0) throw std::invalid_argument("forward needs at least one stock");
        if (x.size() != T * n_ * F)
            throw std::invalid_argument("input has " + std::to_string(x.size()) + " values, expected T*N*F = " +
                                        std::to_string(T * n_ * F));
        for (double v : x)
            if (!std::isfinite(v)) throw std::invalid_argument("non-finite model input");
        x_ = x;

        std::vector<double> h(rows_ * D);
        linear(x.data(), rows_, F, w(ix_.in_w), w(ix_.in_b), D, h.data());
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t nidx = 0; nidx < n_; ++nidx) {
                double* hr = h.data() + (t * n_ + nidx) * D;
                const double* pe = p_.positional.data() + t * D;
                for (std::size_t i = 0; i < D; ++i) hr[i] += pe[i];
            }

        blocks_.assign(ix_.blocks.size(), BlockCache{});
        for (std::size_t bi = 0; bi < ix_.blocks.size(); ++bi)
            h = block_forward(bi, std::move(h), layout_for(bi), drop);

        return aggregate_forward(h);
    }

    // Returns gradients for all trainable parameters.
    std::vector<double> backward(std::span<const double> dpred) {
        const std::size_t D = c_.d_model;
        std::vector<double> grads(ix_.total, 0.0);
        std::vector<double> dh = aggregate_backward(dpred, grads);
        for (std::size_t bi = ix_.blocks.size(); bi-- > 0;) dh = block_backward(bi, dh, layout_for(bi), grads);
        // Positional table is fixed; only the projection receives gradient.
        linear_backward(dh.data(), x_.data(), rows_, c_.features, w(ix_.in_w), D, &grads[ix_.in_w], &grads[ix_.in_b],
                        nullptr);
        return grads;
    }

private:
    const double* w(std::size_t off) const { return p_.values.data() + off; }

    SequenceLayout layout_for(std::size_t block) const {
        if (block % 2 == 0) return {n_, c_.window, 1, n_};  // temporal: per stock over t
        return {c_.window, n_, n_, 1};                       // spatial: per day over stocks
    }

    std::vector<double> block_forward(std::size_t bi, std::vector<double> h, SequenceLayout seq, DropoutSource& drop) {
        const BlockIndex& bx = ix_.blocks[bi];
        BlockCache& cache = blocks_[bi];
        const std::size_t D = c_.d_model, H = c_.n_heads, dh = c_.head_dim(), L = seq.length, R = rows_;
        const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

        cache.a.resize(R * D);
        layer_norm(h.data(), R, D, w(bx.n1g), w(bx.n1b), cache.a.data(), cache.norm1);
        cache.q.resize(R * D);
        cache.k.resize(R * D);
        cache.v.resize(R * D);
        linear(cache.a.data(), R, D, w(bx.wq), w(bx.bq), D, cache.q.data());
        linear(cache.a.data(), R, D, w(bx.wk), w(bx.bk), D, cache.k.data());
        linear(cache.a.data(), R, D, w(bx.wv), w(bx.bv), D, cache.v.data());

        cache.probs.assign(seq.count * H * L * L, 0.0);
        if (drop.active()) cache.prob_mult.assign(cache.probs.size(), 0.0);
        else cache.prob_mult.clear();
        cache.o.assign(R * D, 0.0);
        std::vector<double> scores(L);
        for (std::size_t s = 0; s < seq.count; ++s) {
            for (std::size_t hd = 0; hd < H; ++hd) {
                const std::size_t off = hd * dh;
                for (std::size_t i = 0; i < L; ++i) {
                    const double* qi = cache.q.data() + seq.row(s, i) * D + off;
                    double top = -INFINITY;
                    for (std::size_t j = 0; j < L; ++j) {
                        const double* kj = cache.k.data() + seq.row(s, j) * D + off;
                        double acc = 0.0;
                        for (std::size_t e = 0; e < dh; ++e) acc += qi[e] * kj[e];
                        scores[j] = acc * scale;
                        top = std::max(top, scores[j]);
                    }
                    double sum = 0.0;
                    for (std::size_t j = 0; j < L; ++j) {
                        scores[j] = std::exp(scores[j] - top);
                        sum += scores[j];
                    }
                    const std::size_t pbase = ((s * H + hd) * L + i) * L;
                    double* oi = cache.o.data() + seq.row(s, i) * D + off;
                    for (std::size_t j = 0; j < L; ++j) {
                        const double pij = scores[j] / sum;
                        cache.probs[pbase + j] = pij;
                        double eff = pij;
                        if (drop.active()) {
                            const double m = drop.draw();
                            cache.prob_mult[pbase + j] = m;
                            eff *= m;
                        }
                        if (eff == 0.0) continue;
                        const double* vj = cache.v.data() + seq.row(s, j) * D + off;
                        for (std::size_t e = 0; e < dh; ++e) oi[e] += eff * vj[e];
                    }
                }
            }
        }

        cache.input = std::move(h);
        cache.h1.resize(R * D);
        linear(cache.o.data(), R, D, w(bx.wo), w(bx.bo), D, cache.h1.data());
        for (std::size_t i = 0; i < R * D; ++i) cache.h1[i] += cache.input[i];

        const std::size_t Fd = c_.d_ff;
        cache.b.resize(R * D);
        layer_norm(cache.h1.data(), R, D, w(bx.n2g), w(bx.n2b), cache.b.data(), cache.norm2);
        cache.u.resize(R * Fd);
        linear(cache.b.data(), R, D, w(bx.w1), w(bx.b1), Fd, cache.u.data());
        cache.g.resize(R * Fd);
        std::vector<double> g_eff(R * Fd);
        if (drop.active()) cache.g_mult.resize(R * Fd);
        else cache.g_mult.clear();
        for (std::size_t i = 0; i < R * Fd; ++i) {
            cache.g[i] = gelu(cache.u[i]);
            g_eff[i] = cache.g[i];
            if (drop.active()) {
                cache.g_mult[i] = drop.draw();
                g_eff[i] *= cache.g_mult[i];
            }
        }
        std::vector<double> out(R * D);
        linear(g_eff.data(), R, Fd, w(bx.w2), w(bx.b2), D, out.data());
        for (std::size_t i = 0; i < R * D; ++i) out[i] += cache.h1[i];
        return out;
    }

    std::vector<double> block_backward(std::size_t bi, const std::vector<double>& dout, SequenceLayout seq,
                                       std::vector<double>& grads) {
        const BlockIndex& bx = ix_.blocks[bi];
        const BlockCache& cache = blocks_[bi];
        const std::size_t D = c_.d_model, H = c_.n_heads, dh = c_.head_dim(), L = seq.length, R = rows_,
                          Fd = c_.d_ff;
        const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
        const bool dropped = !cache.g_mult.empty();

        // Feed-forward sublayer.
        std::vector<double> dh1 = dout;
        std::vector<double> g_eff(cache.g);
        if (dropped)
            for (std::size_t i = 0; i < R * Fd; ++i) g_eff[i] *= cache.g_mult[i];
        std::vector<double> dg(R * Fd, 0.0);
        linear_backward(dout.data(), g_eff.data(), R, Fd, w(bx.w2), D, &grads[bx.w2], &grads[bx.b2], dg.data());
        for (std::size_t i = 0; i < R * Fd; ++i) {
            if (dropped) dg[i] *= cache.g_mult[i];
            dg[i] *= gelu_grad(cache.u[i]);
        }
        std::vector<double> db(R * D, 0.0);
        linear_backward(dg.data(), cache.b.data(), R, D, w(bx.w1), Fd, &grads[bx.w1], &grads[bx.b1], db.data());
        layer_norm_backward(db.data(), R, D, w(bx.n2g), cache.norm2, &grads[bx.n2g], &grads[bx.n2b], dh1.data());

        // Attention sublayer.
        std::vector<double> din = dh1;
        std::vector<double> d_o(R * D, 0.0);
        linear_backward(dh1.data(), cache.o.data(), R, D, w(bx.wo), D, &grads[bx.wo], &grads[bx.bo], d_o.data());

        std::vector<double> dq(R * D, 0.0), dk(R * D, 0.0), dv(R * D, 0.0);
        const bool pdrop = !cache.prob_mult.empty();
        std::vector<double> dp(L);
        for (std::size_t s = 0; s < seq.count; ++s) {
            for (std::size_t hd = 0; hd < H; ++hd) {
                const std::size_t off = hd * dh;
                for (std::size_t i = 0; i < L; ++i) {
                    const std::size_t ri = seq.row(s, i);
                    const double* doi = d_o.data() + ri * D + off;
                    const std::size_t pbase = ((s * H + hd) * L + i) * L;
                    double dot = 0.0;
                    for (std::size_t j = 0; j < L; ++j) {
                        const std::size_t rj = seq.row(s, j);
                        const double* vj = cache.v.data() + rj * D + off;
                        double* dvj = dv.data() + rj * D + off;
                        const double mult = pdrop ? cache.prob_mult[pbase + j] : 1.0;
                        const double eff = cache.probs[pbase + j] * mult;
                        double acc = 0.0;
                        for (std::size_t e = 0; e < dh; ++e) {
                            acc += doi[e] * vj[e];
                            dvj[e] += eff * doi[e];
                        }
                        dp[j] = acc * mult;
                        dot += cache.probs[pbase + j] * dp[j];
                    }
                    const double* qi = cache.q.data() + ri * D + off;
                    double* dqi = dq.data() + ri * D + off;
                    for (std::size_t j = 0; j < L; ++j) {
                        const double ds = cache.probs[pbase + j] * (dp[j] - dot) * scale;
                        if (ds == 0.0) continue;
                        const std::size_t rj = seq.row(s, j);
                        const double* kj = cache.k.data() + rj * D + off;
                        double* dkj = dk.data() + rj * D + off;
                        for (std::size_t e = 0; e < dh; ++e) {
                            dqi[e] += ds * kj[e];
                            dkj[e] += ds * qi[e];
                        }
                    }
                }
            }
        }
        std::vector<double> da(R * D, 0.0);
        linear_backward(dq.data(), cache.a.data(), R, D, w(bx.wq), D, &grads[bx.wq], &grads[bx.bq], da.data());
        linear_backward(dk.data(), cache.a.data(), R, D, w(bx.wk), D, &grads[bx.wk], &grads[bx.bk], da.data());
        linear_backward(dv.data(), cache.a.data(), R, D, w(bx.wv), D, &grads[bx.wv], &grads[bx.bv], da.data());
        layer_norm_backward(da.data(), R, D, w(bx.n1g), cache.norm1, &grads[bx.n1g], &grads[bx.n1b], din.data());
        return din;
    }

    std::vector<double> aggregate_forward(const std::vector<double>& h) {
        const std::size_t T = c_.window, D = c_.d_model, H = c_.n_heads, dh = c_.head_dim(), R = rows_;
        const AggregateIndex& ax = ix_.agg;
        const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
        agg_.z.resize(R * D);
        layer_norm(h.data(), R, D, w(ax.ng), w(ax.nb), agg_.z.data(), agg_.norm);
        agg_.k.resize(R * D);
        agg_.v.resize(R * D);
        linear(agg_.z.data(), R, D, w(ax.wk), w(ax.bk), D, agg_.k.data());
        linear(agg_.z.data(), R, D, w(ax.wv), w(ax.bv), D, agg_.v.data());
        agg_.alpha.assign(n_ * H * T, 0.0);
        agg_.pooled.assign(n_ * D, 0.0);
        const double* query = w(ax.query);
        std::vector<double> pred(n_);
        for (std::size_t s = 0; s < n_; ++s) {
            for (std::size_t hd = 0; hd < H; ++hd) {
                const std::size_t off = hd * dh;
                double* alpha = agg_.alpha.data() + (s * H + hd) * T;
                double top = -INFINITY;
                for (std::size_t t = 0; t < T; ++t) {
                    const double* kt = agg_.k.data() + (t * n_ + s) * D + off;
                    double acc = 0.0;
                    for (std::size_t e = 0; e < dh; ++e) acc += query[off + e] * kt[e];
                    alpha[t] = acc * scale;
                    top = std::max(top, alpha[t]);
                }
                double sum = 0.0;
                for (std::size_t t = 0; t < T; ++t) {
                    alpha[t] = std::exp(alpha[t] - top);
                    sum += alpha[t];
                }
                double* pooled = agg_.pooled.data() + s * D + off;
                for (std::size_t t = 0; t < T; ++t) {
                    alpha[t] /= sum;
                    const double* vt = agg_.v.data() + (t * n_ + s) * D + off;
                    for (std::size_t e = 0; e < dh; ++e) pooled[e] += alpha[t] * vt[e];
                }
            }
            const double* pooled = agg_.pooled.data() + s * D;
            double acc = w(ix_.dec_b)[0];
            for (std::size_t i = 0; i < D; ++i) acc += w(ix_.dec_w)[i] * pooled[i];
            pred[s] = acc;
        }
        return pred;
    }

    std::vector<double> aggregate_backward(std::span<const double> dpred, std::vector<double>& grads) {
        const std::size_t T = c_.window, D = c_.d_model, H = c_.n_heads, dh = c_.head_dim(), R = rows_;
        const AggregateIndex& ax = ix_.agg;
        const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
        if (dpred.size() != n_) throw std::invalid_argument("prediction gradient length mismatch");

        std::vector<double> dk(R * D, 0.0), dv(R * D, 0.0);
        const double* query = w(ax.query);
        const double* dec = w(ix_.dec_w);
        std::vector<double> dalpha(T);
        for (std::size_t s = 0; s < n_; ++s) {
            const double g = dpred[s];
            grads[ix_.dec_b] += g;
            const double* pooled = agg_.pooled.data() + s * D;
            for (std::size_t i = 0; i < D; ++i) grads[ix_.dec_w + i] += g * pooled[i];
            for (std::size_t hd = 0; hd < H; ++hd) {
                const std::size_t off = hd * dh;
                const double* alpha = agg_.alpha.data() + (s * H + hd) * T;
                double dot = 0.0;
                for (std::size_t t = 0; t < T; ++t) {
                    const std::size_t r = t * n_ + s;
                    const double* vt = agg_.v.data() + r * D + off;
                    double* dvt = dv.data() + r * D + off;
                    double acc = 0.0;
                    for (std::size_t e = 0; e < dh; ++e) {
                        const double dpool = g * dec[off + e];
                        acc += dpool * vt[e];
                        dvt[e] += alpha[t] * dpool;
                    }
                    dalpha[t] = acc;
                    dot += alpha[t] * acc;
                }
                for (std::size_t t = 0; t < T; ++t) {
                    const double ds = alpha[t] * (dalpha[t] - dot) * scale;
                    const std::size_t r = t * n_ + s;
                    const double* kt = agg_.k.data() + r * D + off;
                    double* dkt = dk.data() + r * D + off;
                    for (std::size_t e = 0; e < dh; ++e) {
                        grads[ax.query + off + e] += ds * kt[e];
                        dkt[e] += ds * query[off + e];
                    }
                }
            }
        }
        std::vector<double> dz(R * D, 0.0);
        linear_backward(dk.data(), agg_.z.data(), R, D, w(ax.wk), D, &grads[ax.wk], &grads[ax.bk], dz.data());
        linear_backward(dv.data(), agg_.z.data(), R, D, w(ax.wv), D, &grads[ax.wv], &grads[ax.bv], dz.data());
        std::vector<double> dh_out(R * D, 0.0);
        layer_norm_backward(dz.data(), R, D, w(ax.ng), agg_.norm, &grads[ax.ng], &grads[ax.nb], dh_out.data());
        return dh_out;
    }

    const ModelParams& p_;
    const ModelConfig& c_;
    Index ix_;
    std::size_t n_;
    std::size_t rows_;
    std::span<const double> x_;
    std::vector<BlockCache> blocks_;
    AggregateCache agg_;
};

}  // namespace

void ModelConfig::validate() const {
    if (d_model == 0 || n_layers == 0 || n_heads == 0 || d_ff == 0 || window == 0 || features == 0)
        throw ConfigError("model dimensions must all be >= 1");
    if (d_model % n_heads != 0)
        throw ConfigError("model.d_model not divisible by model.n_heads (" + std::to_string(d_model) + " % " +
                          std::to_string(n_heads) + ")");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("model.dropout must lie in [0, 1)");
}

std::vector<ParamTensor> parameter_layout(const ModelConfig& config) {
    config.validate();
    return build_index(config).tensors;
}

std::size_t parameter_count(const ModelConfig& config) {
    config.validate();
    return build_index(config).total;
}

std::span<double> ModelParams::tensor(const std::string& name) {
    for (const auto& t : parameter_layout(config))
        if (t.name == name) return {values.data() + t.offset, t.size};
    throw std::out_of_range("no parameter named " + name);
}

std::span<const double> ModelParams::tensor(const std::string& name) const {
    for (const auto& t : parameter_layout(config))
        if (t.name == name) return {values.data() + t.offset, t.size};
    throw std::out_of_range("no parameter named " + name);
}

std::vector<double> sinusoidal_encoding(std::size_t window, std::size_t d_model) {
    std::vector<double> pe(window * d_model);
    for (std::size_t t = 0; t < window; ++t) {
        for (std::size_t i = 0; i < d_model; ++i) {
            const double exponent = static_cast<double>(i - i % 2) / static_cast<double>(d_model);
            const double angle = static_cast<double>(t) / std::pow(10000.0, exponent);
            pe[t * d_model + i] = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
    }
    return pe;
}

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    const Index ix = build_index(config);
    ModelParams p;
    p.config = config;
    p.seed = seed;
    p.values.assign(ix.total, 0.0);
    p.positional = sinusoidal_encoding(config.window, config.d_model);

    Rng rng(seed);
    auto fill_uniform = [&](const ParamTensor& t, std::size_t fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (std::size_t i = 0; i < t.size; ++i) p.values[t.offset + i] = rng.uniform(-bound, bound);
    };
    for (const ParamTensor& t : ix.tensors) {
        const std::string& n = t.name;
        if (n.ends_with(".gamma")) {
            std::fill_n(p.values.begin() + static_cast<std::ptrdiff_t>(t.offset), t.size, 1.0);
        } else if (n.ends_with(".beta") || n == "decoder.bias") {
            // zero
        } else if (n == "aggregate.query") {
            fill_uniform(t, config.head_dim());
        } else if (n == "input.weight" || n == "input.bias") {
            fill_uniform(t, config.features);
        } else if (n.ends_with("ffn.w2") || n.ends_with("ffn.b2")) {
            fill_uniform(t, config.d_ff);
        } else {
            fill_uniform(t, config.d_model);
        }
    }
    return p;
}

ForwardTrace forward(const ModelParams& params, std::span<const double> x, std::size_t stocks) {
    Network net(params, stocks);
    DropoutSource off(0.0, std::nullopt);
    ForwardTrace trace;
    trace.predictions = net.forward(x, off);
    for (double v : trace.predictions)
        if (!std::isfinite(v)) throw TrainingError("model produced a non-finite prediction");
    return trace;
}

ParamGradients forward_backward(const ModelParams& params, std::span<const double> x, std::size_t stocks,
                                std::span<const double> y, const LossSpec& spec,
                                std::optional<std::uint64_t> dropout_seed) {
    Network net(params, stocks);
    DropoutSource drop(params.config.dropout, dropout_seed);
    ParamGradients out;
    out.predictions = net.forward(x, drop);
    const LossOutput loss = evaluate(out.predictions, y, spec);
    out.loss = loss.value;
    out.grads = net.backward(loss.grad);
    return out;
}

ParamGradients backward_from_predictions(const ModelParams& params, std::span<const double> x, std::size_t stocks,
                                         std::span<const double> dpred) {
    Network net(params, stocks);
    DropoutSource off(0.0, std::nullopt);
    ParamGradients out;
    out.predictions = net.forward(x, off);
    out.grads = net.backward(dpred);
    return out;
}

}  // namespace rankbench
