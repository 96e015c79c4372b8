#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "handtex/ops.hpp"
#include "handtex/rng.hpp"
#include "handtex/tensor.hpp"

namespace handtex {

// Pre-norm cross-attention block: queries attend to a key/value sequence,
// followed by a feed-forward sublayer. Output rows follow query order and are
// invariant to any permutation of the key/value rows.
template <class T>
struct AttentionLayer {
    std::size_t dim = 0, heads = 1, ffn_dim = 0;
    Tensor<T> ln_q_g, ln_q_b;    // query-side pre-norm
    Tensor<T> ln_kv_g, ln_kv_b;  // key/value-side pre-norm
    Tensor<T> wq, bq, wk, bk, wv, bv, wo, bo;
    Tensor<T> ln_f_g, ln_f_b;    // feed-forward pre-norm
    Tensor<T> w1, b1, w2, b2;

    static AttentionLayer init(Rng& rng, std::size_t dim, std::size_t heads, std::size_t ffn_dim) {
        if (dim % heads != 0)
            throw std::invalid_argument("attention: dim must be divisible by heads");
        AttentionLayer l;
        l.dim = dim;
        l.heads = heads;
        l.ffn_dim = ffn_dim;
        const double s = 1.0 / std::sqrt(double(dim));
        auto w = [&](std::size_t r, std::size_t c, double sigma) {
            return Tensor<T>({r, c}, rng.template normal_vec<T>(r * c, sigma), true);
        };
        auto zeros = [&](std::size_t n) { return Tensor<T>::zeros({n}, true); };
        auto ones = [&](std::size_t n) { return Tensor<T>::full({n}, T(1), true); };
        l.ln_q_g = ones(dim);
        l.ln_q_b = zeros(dim);
        l.ln_kv_g = ones(dim);
        l.ln_kv_b = zeros(dim);
        l.wq = w(dim, dim, s);
        l.bq = zeros(dim);
        l.wk = w(dim, dim, s);
        l.bk = zeros(dim);
        l.wv = w(dim, dim, s);
        l.bv = zeros(dim);
        l.wo = w(dim, dim, s);
        l.bo = zeros(dim);
        l.ln_f_g = ones(dim);
        l.ln_f_b = zeros(dim);
        l.w1 = w(dim, ffn_dim, s);
        l.b1 = zeros(ffn_dim);
        l.w2 = w(ffn_dim, dim, 1.0 / std::sqrt(double(ffn_dim)));
        l.b2 = zeros(dim);
        return l;
    }

    Tensor<T> forward(const Tensor<T>& queries, const Tensor<T>& kv) const {
        using namespace ops;
        if (kv.dim(0) == 0) throw std::invalid_argument("attention: empty key/value sequence");
        const std::size_t dh = dim / heads;
        Tensor<T> qn = layer_norm_rows(queries, ln_q_g, ln_q_b);
        Tensor<T> kvn = layer_norm_rows(kv, ln_kv_g, ln_kv_b);
        Tensor<T> q = linear(qn, wq, bq);
        Tensor<T> k = linear(kvn, wk, bk);
        Tensor<T> v = linear(kvn, wv, bv);
        std::vector<Tensor<T>> head_out;
        head_out.reserve(heads);
        const T att_scale = T(1) / T(std::sqrt(double(dh)));
        for (std::size_t h = 0; h < heads; ++h) {
            Tensor<T> qh = scale(slice_cols(q, h * dh, (h + 1) * dh), att_scale);
            Tensor<T> kh = slice_cols(k, h * dh, (h + 1) * dh);
            Tensor<T> vh = slice_cols(v, h * dh, (h + 1) * dh);
            Tensor<T> att = softmax_rows(matmul(qh, transpose2d(kh)));
            head_out.push_back(matmul(att, vh));
        }
        Tensor<T> attended = linear(heads == 1 ? head_out[0] : concat_cols(head_out), wo, bo);
        Tensor<T> x = add(queries, attended);
        Tensor<T> xf = layer_norm_rows(x, ln_f_g, ln_f_b);
        Tensor<T> ff = linear(silu(linear(xf, w1, b1)), w2, b2);
        return add(x, ff);
    }

    void collect(std::vector<std::pair<std::string, Tensor<T>*>>& out, const std::string& prefix) {
        out.push_back({prefix + ".ln_q_g", &ln_q_g});
        out.push_back({prefix + ".ln_q_b", &ln_q_b});
        out.push_back({prefix + ".ln_kv_g", &ln_kv_g});
        out.push_back({prefix + ".ln_kv_b", &ln_kv_b});
        out.push_back({prefix + ".wq", &wq});
        out.push_back({prefix + ".bq", &bq});
        out.push_back({prefix + ".wk", &wk});
        out.push_back({prefix + ".bk", &bk});
        out.push_back({prefix + ".wv", &wv});
        out.push_back({prefix + ".bv", &bv});
        out.push_back({prefix + ".wo", &wo});
        out.push_back({prefix + ".bo", &bo});
        out.push_back({prefix + ".ln_f_g", &ln_f_g});
        out.push_back({prefix + ".ln_f_b", &ln_f_b});
        out.push_back({prefix + ".w1", &w1});
        out.push_back({prefix + ".b1", &b1});
        out.push_back({prefix + ".w2", &w2});
        out.push_back({prefix + ".b2", &b2});
    }
};

}  // namespace handtex
