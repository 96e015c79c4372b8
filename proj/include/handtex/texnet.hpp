#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "handtex/attention.hpp"
#include "handtex/checkpoint.hpp"
#include "handtex/ops.hpp"
#include "handtex/rng.hpp"
#include "handtex/sampler.hpp"
#include "handtex/tensor.hpp"

namespace handtex {

struct TexModelConfig {
    std::size_t embed_dim = 6;        // RGB token embedding width (D)
    std::size_t pos_dim = 58;         // Fourier positional width (D'), even
    std::size_t layers = 8;           // cross-attention depth (K)
    std::size_t heads = 4;
    std::size_t query_grid = 4;       // g; T_queries = g^2
    std::size_t upscales = 4;         // U; texture side = g * 2^U
    std::size_t ffn_mult = 2;         // attention feed-forward width multiplier
    double rff_sigma = 3.0;           // frequency scale of the fixed Fourier matrix
    std::uint64_t seed = 1;

    std::size_t token_dim() const { return embed_dim + pos_dim; }
    std::size_t texture_side() const { return query_grid << upscales; }

    void validate() const {
        if (pos_dim % 2 != 0) throw std::invalid_argument("config: pos_dim must be even");
        if (token_dim() % heads != 0)
            throw std::invalid_argument("config: embed_dim + pos_dim must divide by heads");
        if (query_grid == 0 || upscales == 0)
            throw std::invalid_argument("config: query_grid and upscales must be positive");
        if (rff_sigma <= 0) throw std::invalid_argument("config: rff_sigma must be positive");
    }
};

// Decoder channel schedule: starts at token_dim and halves per stage with a
// floor of 8, so deep stacks stay cheap.
inline std::vector<std::size_t> decoder_channels(const TexModelConfig& cfg) {
    std::vector<std::size_t> ch{cfg.token_dim()};
    for (std::size_t u = 0; u < cfg.upscales; ++u)
        ch.push_back(std::max<std::size_t>(8, ch.back() / 2));
    return ch;
}

template <class T>
struct TexModelParams {
    TexModelConfig cfg;

    Tensor<T> w_embed, b_embed;          // 3 -> D token embedding
    Tensor<T> rff_freq;                  // (D'/2) x 2, fixed (never trained)
    Tensor<T> queries;                   // g^2 x (D+D') learned query tokens
    Tensor<T> null_token;                // 1 x (D+D')
    std::vector<AttentionLayer<T>> attn;
    std::vector<Tensor<T>> dec_w, dec_b;  // per-stage 3x3 conv before pixel shuffle
    Tensor<T> out_w, out_b;               // final 3-channel projection

    static TexModelParams init(const TexModelConfig& cfg) {
        cfg.validate();
        TexModelParams p;
        p.cfg = cfg;
        Rng rng(cfg.seed);
        const std::size_t dim = cfg.token_dim();
        auto w = [&](Shape sh, double sigma) {
            return Tensor<T>(sh, rng.template normal_vec<T>(shape_numel(sh), sigma), true);
        };
        // Color occupies embed_dim of token_dim dims while the positional
        // features fill the rest; the init gain here and kPosScale below keep
        // the two blocks at comparable energy so attention sees both.
        p.w_embed = w({3, cfg.embed_dim}, 2.0);
        p.b_embed = Tensor<T>::zeros({cfg.embed_dim}, true);
        p.rff_freq = Tensor<T>({cfg.pos_dim / 2, 2},
                               rng.template normal_vec<T>(cfg.pos_dim, cfg.rff_sigma));
        p.queries = w({cfg.query_grid * cfg.query_grid, dim}, 1.0);
        p.null_token = w({1, dim}, 1.0);
        for (std::size_t k = 0; k < cfg.layers; ++k)
            p.attn.push_back(AttentionLayer<T>::init(rng, dim, cfg.heads, cfg.ffn_mult * dim));
        const auto ch = decoder_channels(cfg);
        for (std::size_t u = 0; u < cfg.upscales; ++u) {
            const std::size_t in = ch[u], out = 4 * ch[u + 1];
            p.dec_w.push_back(w({out, in, 3, 3}, 1.0 / std::sqrt(double(9 * in))));
            p.dec_b.push_back(Tensor<T>::zeros({out}, true));
        }
        p.out_w = w({3, ch.back(), 3, 3}, 1.0 / std::sqrt(double(9 * ch.back())));
        p.out_b = Tensor<T>::zeros({3}, true);
        return p;
    }

    // Every trainable tensor, in a fixed order; rff_freq excluded (constant).
    std::vector<std::pair<std::string, Tensor<T>*>> trainable() {
        std::vector<std::pair<std::string, Tensor<T>*>> out;
        out.push_back({"w_embed", &w_embed});
        out.push_back({"b_embed", &b_embed});
        out.push_back({"queries", &queries});
        out.push_back({"null_token", &null_token});
        for (std::size_t k = 0; k < attn.size(); ++k)
            attn[k].collect(out, "attn" + std::to_string(k));
        for (std::size_t u = 0; u < dec_w.size(); ++u) {
            out.push_back({"dec_w" + std::to_string(u), &dec_w[u]});
            out.push_back({"dec_b" + std::to_string(u), &dec_b[u]});
        }
        out.push_back({"out_w", &out_w});
        out.push_back({"out_b", &out_b});
        return out;
    }

    void save(const std::string& path) {
        Checkpoint ck;
        ck.put("rff_freq", rff_freq);
        for (auto& [name, t] : trainable()) ck.put(name, *t);
        ck.save(path);
    }

    // Overwrites every parameter tensor; shapes must match the current config.
    void load(const std::string& path) {
        Checkpoint ck = Checkpoint::load(path);
        auto read = [&](const std::string& name, Tensor<T>& t) {
            Tensor<T> loaded = ck.template get<T>(name);
            if (loaded.shape() != t.shape())
                throw std::runtime_error("checkpoint: shape mismatch for '" + name + "'");
            std::copy(loaded.values().begin(), loaded.values().end(), t.values().begin());
        };
        read("rff_freq", rff_freq);
        for (auto& [name, t] : trainable()) read(name, *t);
    }
};

// Deep copy: same values in fresh storage, gradient state dropped.
template <class T>
TexModelParams<T> clone_params(TexModelParams<T>& params) {
    TexModelParams<T> out = TexModelParams<T>::init(params.cfg);
    out.rff_freq = Tensor<T>(params.rff_freq.shape(), params.rff_freq.values());
    auto src = params.trainable();
    auto dst = out.trainable();
    for (std::size_t i = 0; i < src.size(); ++i)
        *dst[i].second = Tensor<T>(src[i].second->shape(), src[i].second->values());
    return out;
}

// FNV-1a over the raw parameter bytes; detects any value change.
template <class T>
std::uint64_t param_checksum(TexModelParams<T>& params) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    auto mix = [&](const Tensor<T>& t) {
        const auto* p = reinterpret_cast<const unsigned char*>(t.values().data());
        for (std::size_t i = 0; i < t.size() * sizeof(T); ++i) {
            h ^= p[i];
            h *= 0x100000001B3ull;
        }
    };
    for (auto& [name, t] : params.trainable()) mix(*t);
    return h;
}

template <class T>
std::size_t param_count(TexModelParams<T>& params) {
    std::size_t n = 0;
    for (auto& [name, t] : params.trainable()) n += t->size();
    return n;
}

// Closed-form trainable-parameter count for a given config; kept in sync with
// init() by a unit test.
inline std::size_t param_count_formula(const TexModelConfig& cfg) {
    const std::size_t d = cfg.token_dim(), f = cfg.ffn_mult * d, g = cfg.query_grid;
    // embedding + queries + null token
    std::size_t n = 3 * cfg.embed_dim + cfg.embed_dim + g * g * d + d;
    // per attention layer: 3 layer norms, 4 projections, 2 feed-forward matrices
    n += cfg.layers * (6 * d + 4 * (d * d + d) + (d * f + f) + (f * d + d));
    const auto ch = decoder_channels(cfg);
    for (std::size_t u = 0; u < cfg.upscales; ++u)
        n += 4 * ch[u + 1] * ch[u] * 9 + 4 * ch[u + 1];
    n += 3 * ch.back() * 9 + 3;
    return n;
}

// gamma(u) = kPosScale * [sin(2 pi B u), cos(2 pi B u)] with the fixed
// frequency matrix B. kPosScale damps the positional block so its energy
// (pos_dim dims of unit sin/cos) does not drown the much narrower color
// block under per-token LayerNorm.
inline constexpr double kPosScale = 0.35;

template <class T>
Tensor<T> rff_encode(const std::vector<std::array<double, 2>>& uvs,
                     const TexModelParams<T>& params) {
    const std::size_t half = params.cfg.pos_dim / 2, L = uvs.size();
    const auto& B = params.rff_freq.values();
    std::vector<T> out(L * params.cfg.pos_dim);
    for (std::size_t l = 0; l < L; ++l)
        for (std::size_t j = 0; j < half; ++j) {
            const double phase =
                2.0 * M_PI * (double(B[j * 2]) * uvs[l][0] + double(B[j * 2 + 1]) * uvs[l][1]);
            out[l * params.cfg.pos_dim + j] = T(kPosScale * std::sin(phase));
            out[l * params.cfg.pos_dim + half + j] = T(kPosScale * std::cos(phase));
        }
    return Tensor<T>({L, params.cfg.pos_dim}, std::move(out));
}

// Full texture prediction: embed tokens, cross-attend with the learned query
// grid, decode through pixel-shuffle upscaling. Returns 3 x side x side in
// [0,1]. Differentiable w.r.t. all trainable parameters when a tape is active.
template <class T>
Tensor<T> tex_forward(const SampleSet& samples, TexModelParams<T>& params) {
    using namespace ops;
    const auto& cfg = params.cfg;
    const std::size_t L = samples.size(), dim = cfg.token_dim(), g = cfg.query_grid;

    Tensor<T> kv = params.null_token;
    if (L > 0) {
        std::vector<T> rgb(L * 3);
        std::vector<std::array<double, 2>> uvs(L);
        for (std::size_t l = 0; l < L; ++l) {
            // centered so the embedding carries color variation, not a
            // constant offset every token shares
            for (std::size_t c = 0; c < 3; ++c)
                rgb[l * 3 + c] = T(samples.entries[l].rgb[c] - 0.5);
            uvs[l] = samples.entries[l].uv;
        }
        Tensor<T> e_img = linear(Tensor<T>({L, 3}, std::move(rgb)), params.w_embed, params.b_embed);
        Tensor<T> e = concat_cols(std::vector<Tensor<T>>{e_img, rff_encode(uvs, params)});
        kv = concat_rows(std::vector<Tensor<T>>{e, params.null_token});
    }

    Tensor<T> z = params.queries;
    for (auto& layer : params.attn) z = layer.forward(z, kv);

    // (g^2 x C) token grid -> C x g x g feature map
    Tensor<T> x = reshape(transpose2d(z), {dim, g, g});
    for (std::size_t u = 0; u < cfg.upscales; ++u) {
        x = conv2d(x, params.dec_w[u], params.dec_b[u], 1);
        x = silu(pixel_shuffle(x, 2));
    }
    return sigmoid(conv2d(x, params.out_w, params.out_b, 1));
}

}  // namespace handtex
