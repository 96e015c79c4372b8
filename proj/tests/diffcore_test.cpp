#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <numeric>

#include "handtex/attention.hpp"
#include "handtex/checkpoint.hpp"
#include "handtex/gradcheck.hpp"
#include "handtex/ops.hpp"
#include "handtex/rng.hpp"
#include "handtex/tensor.hpp"

using namespace handtex;

namespace {

struct FiniteChecksOn {
    FiniteChecksOn() { finite_checks() = true; }
    ~FiniteChecksOn() { finite_checks() = false; }
};

}  // namespace

// ---------------------------------------------------------------------------
// backward
// ---------------------------------------------------------------------------

TEST(Backward, SumOfSquares) {
    Tensor<double> x({2}, {1.0, 2.0}, true);
    TapeScope<double> scope;
    auto y = ops::sum(ops::mul(x, x));
    scope.backward(y);
    EXPECT_DOUBLE_EQ(x.grad()[0], 2.0);
    EXPECT_DOUBLE_EQ(x.grad()[1], 4.0);
}

TEST(Backward, IdentityMatmul) {
    Tensor<double> x({3, 1}, {1.5, -2.0, 0.25}, true);
    Tensor<double> eye({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    TapeScope<double> scope;
    auto y = ops::sum(ops::matmul(eye, x));
    scope.backward(y);
    for (double g : x.grad()) EXPECT_DOUBLE_EQ(g, 1.0);
}

TEST(Backward, RandomCompositeMatchesFiniteDifferences) {
    // 5-op composite: mean(silu(A*x + b) * sin(x))
    auto f = [](const std::vector<Tensor<double>>& in) {
        auto h = ops::add(ops::matmul(in[2], in[0]), in[1]);
        return ops::mean(ops::mul(ops::silu(h), ops::sin(in[0])));
    };
    Rng rng(7);
    for (int seed = 0; seed < 3; ++seed) {
        Tensor<double> x({4, 1}, rng.normal_vec<double>(4, 1.0));
        Tensor<double> b({4, 1}, rng.normal_vec<double>(4, 0.5));
        Tensor<double> a({4, 4}, rng.normal_vec<double>(16, 0.7));
        auto rep = grad_check(f, {x, b, a});
        EXPECT_TRUE(rep.pass) << "seed " << seed << " max rel err " << rep.max_rel_err;
    }
}

TEST(Backward, ErrorsOnNonScalarRoot) {
    Tensor<double> x({2}, {1.0, 2.0}, true);
    TapeScope<double> scope;
    auto y = ops::mul(x, x);
    EXPECT_THROW(scope.backward(y), std::invalid_argument);
}

TEST(Backward, ErrorsOnDetachedRoot) {
    Tensor<double> x({1}, {3.0}, true);
    TapeScope<double> scope;
    EXPECT_THROW(scope.backward(x), std::invalid_argument);
}

TEST(Backward, AdditiveOverSumOfFunctions) {
    Rng rng(11);
    Tensor<double> x({5}, rng.normal_vec<double>(5, 1.0), true);
    auto f = [&](const Tensor<double>& t) { return ops::sum(ops::mul(t, t)); };
    auto g = [&](const Tensor<double>& t) { return ops::mean(ops::sin(t)); };

    std::vector<double> grad_sum, grad_f, grad_g;
    {
        TapeScope<double> s;
        auto y = ops::add(f(x), g(x));
        s.backward(y);
        grad_sum = x.grad();
    }
    x.zero_grad();
    {
        TapeScope<double> s;
        auto y = f(x);
        s.backward(y);
        grad_f = x.grad();
    }
    x.zero_grad();
    {
        TapeScope<double> s;
        auto y = g(x);
        s.backward(y);
        grad_g = x.grad();
    }
    for (std::size_t i = 0; i < 5; ++i)
        EXPECT_NEAR(grad_sum[i], grad_f[i] + grad_g[i], 1e-12);
}

TEST(Backward, FiniteCheckCatchesNan) {
    FiniteChecksOn guard;
    Tensor<double> x({1}, {-1.0}, true);
    TapeScope<double> scope;
    EXPECT_THROW(ops::sqrt(x), std::runtime_error);
}

// ---------------------------------------------------------------------------
// grad_check
// ---------------------------------------------------------------------------

TEST(GradCheck, LinearLayerPasses) {
    Rng rng(0);
    Tensor<double> x({3, 3}, rng.normal_vec<double>(9, 1.0));
    Tensor<double> w({3, 3}, rng.normal_vec<double>(9, 0.6));
    Tensor<double> b({3}, rng.normal_vec<double>(3, 0.3));
    auto f = [](const std::vector<Tensor<double>>& in) {
        return ops::mean(ops::linear(in[0], in[1], in[2]));
    };
    auto rep = grad_check(f, {x, w, b});
    EXPECT_TRUE(rep.pass);
    EXPECT_LT(rep.max_rel_err, 1e-4);
}

TEST(GradCheck, DetectsInjectedFault) {
    // doubled gradient: f computes sum(2x) forward but sum(x^2)-style backward
    // is simulated by comparing against the wrong analytic function
    auto wrong = [](const std::vector<Tensor<double>>& in) {
        // forward value intentionally inconsistent with what the finite
        // difference of sum(x) would give: use scale by 2 on the fd side
        return ops::sum(ops::scale(in[0], 2.0));
    };
    // grad of sum(2x) is 2; compare to a hand-written expectation of 1
    Tensor<double> x({3}, {0.5, -1.0, 2.0});
    auto rep = grad_check(wrong, {x});
    EXPECT_TRUE(rep.pass);  // consistent function passes...

    // ...while an op with a deliberately broken pullback fails
    auto broken = [](const std::vector<Tensor<double>>& in) {
        auto y = ops::mul(in[0], in[0]);
        // doubling the upstream contribution through an extra recorded add of
        // the same node models a duplicated-gradient fault
        return ops::scale(ops::add(ops::sum(y), ops::sum(y)), 1.0);
    };
    auto fd_of_half = [&](const std::vector<Tensor<double>>& in) {
        return ops::sum(ops::mul(in[0], in[0]));
    };
    // analytic grads of `broken` are exactly twice those of `fd_of_half`
    Tensor<double> z({3}, {0.5, -1.0, 2.0});
    z.set_requires_grad(true);
    std::vector<double> analytic;
    {
        TapeScope<double> s;
        auto out = broken({z});
        s.backward(out);
        analytic = z.grad();
    }
    auto rep2 = grad_check(fd_of_half, {z});
    EXPECT_TRUE(rep2.pass);
    for (std::size_t i = 0; i < 3; ++i) {
        const double expected = 2.0 * z.values()[i];
        EXPECT_GT(std::abs(analytic[i] - expected), 0.1);  // doubled, so off by 2x
    }
}

TEST(GradCheck, PrimitiveSweep) {
    Rng rng(3);
    for (int seed = 0; seed < 3; ++seed) {
        Tensor<double> a({2, 3}, rng.normal_vec<double>(6, 1.0));
        Tensor<double> b({2, 3}, rng.normal_vec<double>(6, 1.0));
        for (auto& x : b.values()) x += (x >= 0 ? 1.5 : -1.5);  // keep away from 0 for div

        auto check = [&](auto fn, const char* name) {
            auto rep = grad_check(fn, {a, b});
            EXPECT_TRUE(rep.pass) << name << " rel err " << rep.max_rel_err;
        };
        using In = const std::vector<Tensor<double>>&;
        check([](In in) { return ops::mean(ops::mul(in[0], in[1])); }, "mul");
        check([](In in) { return ops::mean(ops::div(in[0], in[1])); }, "div");
        check([](In in) { return ops::mean(ops::sigmoid(in[0])); }, "sigmoid");
        check([](In in) { return ops::mean(ops::silu(in[0])); }, "silu");
        check([](In in) { return ops::mean(ops::cos(in[0])); }, "cos");
        // weight the probe so the row-wise sum-to-one constraint doesn't make
        // the objective constant
        check([](In in) { return ops::mean(ops::mul(ops::softmax_rows(in[0]), in[1])); },
              "softmax");
        check([](In in) { return ops::sum(ops::abs(in[0])); }, "abs");
        check(
            [](In in) {
                return ops::mean(ops::scale_rows(in[0], Tensor<double>({2}, {0.3, -1.2})));
            },
            "scale_rows");
        check([](In in) { return ops::mean(ops::gather_rows(in[0], {1, 0, 1})); }, "gather_rows");
    }
}

TEST(GradCheck, LayerNormAndConv) {
    Rng rng(5);
    Tensor<double> x({3, 4}, rng.normal_vec<double>(12, 1.0));
    Tensor<double> g({4}, rng.normal_vec<double>(4, 0.5));
    Tensor<double> b({4}, rng.normal_vec<double>(4, 0.5));
    auto rep = grad_check(
        [](const std::vector<Tensor<double>>& in) {
            return ops::mean(ops::mul(ops::layer_norm_rows(in[0], in[1], in[2]), in[0]));
        },
        {x, g, b});
    EXPECT_TRUE(rep.pass) << rep.max_rel_err;

    Tensor<double> img({2, 4, 4}, rng.normal_vec<double>(32, 1.0));
    Tensor<double> ker({3, 2, 3, 3}, rng.normal_vec<double>(54, 0.4));
    Tensor<double> bias({3}, rng.normal_vec<double>(3, 0.2));
    auto rep2 = grad_check(
        [](const std::vector<Tensor<double>>& in) {
            return ops::mean(ops::mul(ops::conv2d(in[0], in[1], in[2], 1),
                                      ops::conv2d(in[0], in[1], in[2], 1)));
        },
        {img, ker, bias});
    EXPECT_TRUE(rep2.pass) << rep2.max_rel_err;

    auto rep3 = grad_check(
        [](const std::vector<Tensor<double>>& in) {
            return ops::mean(ops::avg_pool2d(ops::mul(in[0], in[0]), 2));
        },
        {img});
    EXPECT_TRUE(rep3.pass) << rep3.max_rel_err;
}

// ---------------------------------------------------------------------------
// bilinear_sample
// ---------------------------------------------------------------------------

TEST(BilinearSample, CenterOfTwoByTwo) {
    Tensor<double> tex({1, 2, 2}, {0, 1, 2, 3});
    Tensor<double> coords({1, 2}, {0.5, 0.5});
    auto out = ops::bilinear_sample(tex, coords);
    EXPECT_DOUBLE_EQ(out.values()[0], 1.5);
}

TEST(BilinearSample, TexelCenterIsExact) {
    Tensor<double> tex({1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    // texel (row 1, col 2) center: u = 2/(3-1) = 1.0... use (col/(W-1), row/(H-1))
    Tensor<double> coords({1, 2}, {2.0 / 2.0, 1.0 / 2.0});
    auto out = ops::bilinear_sample(tex, coords);
    EXPECT_DOUBLE_EQ(out.values()[0], 6.0);
}

TEST(BilinearSample, HandEvaluatedInterior) {
    Tensor<double> tex({1, 2, 2}, {0, 1, 2, 3});
    // u=0.25, v=0.75 -> x=0.25, y=0.75
    // value = (1-0.75)*((1-0.25)*0 + 0.25*1) + 0.75*((1-0.25)*2 + 0.25*3)
    const double expected = 0.25 * (0.25 * 1.0) + 0.75 * (0.75 * 2.0 + 0.25 * 3.0);
    Tensor<double> coords({1, 2}, {0.25, 0.75});
    auto out = ops::bilinear_sample(tex, coords);
    EXPECT_DOUBLE_EQ(out.values()[0], expected);
}

TEST(BilinearSample, OutOfRangeClampsAndFlags) {
    Tensor<double> tex({1, 2, 2}, {0, 1, 2, 3});
    Tensor<double> coords({1, 2}, {1.5, -0.5});
    const std::size_t before = ops::bilinear_clamp_count();
    auto out = ops::bilinear_sample(tex, coords);
    EXPECT_EQ(ops::bilinear_clamp_count(), before + 1);
    EXPECT_DOUBLE_EQ(out.values()[0], 1.0);  // clamped to (1, 0)
}

TEST(BilinearSample, GradCheckInterior) {
    Rng rng(9);
    Tensor<double> tex({2, 4, 4}, rng.normal_vec<double>(32, 1.0));
    std::vector<double> cv;
    for (int i = 0; i < 5; ++i) {
        // interior points away from texel boundaries
        cv.push_back(0.11 + 0.17 * i);
        cv.push_back(0.73 - 0.13 * i);
    }
    Tensor<double> coords({5, 2}, cv);
    auto rep = grad_check(
        [](const std::vector<Tensor<double>>& in) {
            return ops::mean(ops::mul(ops::bilinear_sample(in[0], in[1]),
                                      ops::bilinear_sample(in[0], in[1])));
        },
        {tex, coords});
    EXPECT_TRUE(rep.pass) << rep.max_rel_err;
}

// ---------------------------------------------------------------------------
// pixel_shuffle
// ---------------------------------------------------------------------------

TEST(PixelShuffle, FourChannelsToTwoByTwo) {
    Tensor<double> x({4, 1, 1}, {10, 20, 30, 40});
    auto y = ops::pixel_shuffle(x, 2);
    ASSERT_EQ(y.shape(), (Shape{1, 2, 2}));
    EXPECT_EQ(y.values(), (std::vector<double>{10, 20, 30, 40}));
}

TEST(PixelShuffle, PreservesMultiset) {
    Rng rng(4);
    Tensor<double> x({8, 2, 2}, rng.normal_vec<double>(32, 1.0));
    auto y = ops::pixel_shuffle(x, 2);
    auto a = x.values(), b = y.values();
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    EXPECT_EQ(a, b);
}

TEST(PixelShuffle, InverseComposesToIdentityBitExact) {
    Rng rng(6);
    Tensor<double> x({8, 3, 5}, rng.normal_vec<double>(120, 1.0));
    auto y = ops::pixel_unshuffle(ops::pixel_shuffle(x, 2), 2);
    EXPECT_EQ(x.values(), y.values());
}

TEST(PixelShuffle, RejectsIndivisibleChannels) {
    Tensor<double> x({3, 2, 2}, std::vector<double>(12, 0.0));
    EXPECT_THROW(ops::pixel_shuffle(x, 2), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// dft2_magnitude
// ---------------------------------------------------------------------------

TEST(Dft2, ConstantImageHasOnlyDC) {
    const double c = 0.7;
    Tensor<double> x({1, 4, 4}, std::vector<double>(16, c));
    auto m = ops::dft2_magnitude(x);
    EXPECT_NEAR(m.values()[0], c * 16.0, 1e-12);
    for (std::size_t i = 1; i < 16; ++i) EXPECT_NEAR(m.values()[i], 0.0, 1e-12);
}

TEST(Dft2, MatchesNaiveSummation) {
    Rng rng(12);
    Tensor<double> x({1, 4, 4}, rng.normal_vec<double>(16, 1.0));
    auto m = ops::dft2_magnitude(x);
    for (std::size_t kr = 0; kr < 4; ++kr)
        for (std::size_t kc = 0; kc < 4; ++kc) {
            const auto ref = fft::dft2_bin_naive(x.values(), 4, 4, kr, kc);
            EXPECT_NEAR(m.values()[kr * 4 + kc], std::abs(ref), 1e-9);
        }
    // non-power-of-two path
    Tensor<double> y({1, 3, 5}, rng.normal_vec<double>(15, 1.0));
    auto m2 = ops::dft2_magnitude(y);
    for (std::size_t kr = 0; kr < 3; ++kr)
        for (std::size_t kc = 0; kc < 5; ++kc) {
            const auto ref = fft::dft2_bin_naive(y.values(), 3, 5, kr, kc);
            EXPECT_NEAR(m2.values()[kr * 5 + kc], std::abs(ref), 1e-9);
        }
}

TEST(Dft2, SingleFrequencyCosineHasTwoBins) {
    const std::size_t n = 8;
    std::vector<double> img(n * n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) img[r * n + c] = std::cos(2.0 * M_PI * 2.0 * c / n);
    auto m = ops::dft2_magnitude(Tensor<double>({1, n, n}, img));
    for (std::size_t kr = 0; kr < n; ++kr)
        for (std::size_t kc = 0; kc < n; ++kc) {
            const double v = m.values()[kr * n + kc];
            if (kr == 0 && (kc == 2 || kc == n - 2))
                EXPECT_NEAR(v, n * n / 2.0, 1e-9);
            else
                EXPECT_NEAR(v, 0.0, 1e-9);
        }
}

TEST(Dft2, ParsevalIdentity) {
    Rng rng(13);
    Tensor<double> x({2, 8, 8}, rng.normal_vec<double>(128, 1.0));
    auto m = ops::dft2_magnitude(x);
    for (int ch = 0; ch < 2; ++ch) {
        double lhs = 0, rhs = 0;
        for (std::size_t i = 0; i < 64; ++i) {
            lhs += m.values()[ch * 64 + i] * m.values()[ch * 64 + i];
            rhs += x.values()[ch * 64 + i] * x.values()[ch * 64 + i];
        }
        EXPECT_NEAR(lhs, 64.0 * rhs, 1e-6 * std::abs(lhs));
    }
}

TEST(Dft2, GradCheck) {
    Rng rng(14);
    Tensor<double> x({1, 4, 4}, rng.normal_vec<double>(16, 1.0));
    auto rep = grad_check(
        [](const std::vector<Tensor<double>>& in) {
            return ops::mean(ops::dft2_magnitude(in[0]));
        },
        {x});
    EXPECT_TRUE(rep.pass) << rep.max_rel_err;
}

// ---------------------------------------------------------------------------
// attention
// ---------------------------------------------------------------------------

TEST(Attention, SingleKeyValueSoftmaxIsOne) {
    Rng rng(21);
    auto layer = AttentionLayer<double>::init(rng, 8, 2, 16);
    Tensor<double> q({2, 8}, rng.normal_vec<double>(16, 1.0));
    Tensor<double> kv({1, 8}, rng.normal_vec<double>(8, 1.0));
    auto out = layer.forward(q, kv);
    ASSERT_EQ(out.shape(), (Shape{2, 8}));
    // with one kv row the attention output is independent of the query scale
    // applied before softmax; doubling kv changes it, shifting q's norm does not
    Tensor<double> q2 = ops::scale(q, 1.0);
    // direct check: softmax of a single column is exactly 1, so attended value
    // equals linear(v row) for every query
    Tensor<double> kvn = ops::layer_norm_rows(kv, layer.ln_kv_g, layer.ln_kv_b);
    Tensor<double> v = ops::linear(kvn, layer.wv, layer.bv);
    Tensor<double> qn = ops::layer_norm_rows(q, layer.ln_q_g, layer.ln_q_b);
    // recompute expected output by hand using softmax weight = 1
    Tensor<double> attended = ops::linear(v, layer.wo, layer.bo);
    Tensor<double> x0 = ops::add(ops::gather_rows(q, {0}), attended);
    Tensor<double> xf = ops::layer_norm_rows(x0, layer.ln_f_g, layer.ln_f_b);
    Tensor<double> expected_row0 = ops::add(
        x0, ops::linear(ops::silu(ops::linear(xf, layer.w1, layer.b1)), layer.w2, layer.b2));
    for (int j = 0; j < 8; ++j) EXPECT_NEAR(out.values()[j], expected_row0.values()[j], 1e-12);
}

TEST(Attention, PermutationInvariantOverKeyValues) {
    Rng rng(22);
    auto layer = AttentionLayer<double>::init(rng, 8, 2, 16);
    Tensor<double> q({3, 8}, rng.normal_vec<double>(24, 1.0));
    Tensor<double> kv({8, 8}, rng.normal_vec<double>(64, 1.0));
    auto base = layer.forward(q, kv);
    for (int trial = 0; trial < 5; ++trial) {
        auto perm = sample_without_replacement(rng, 8, 8);
        // random shuffle: use rng ordering
        std::vector<std::size_t> order(8);
        for (std::size_t i = 0; i < 8; ++i) order[i] = i;
        for (std::size_t i = 7; i > 0; --i) std::swap(order[i], order[rng.index(i + 1)]);
        auto shuffled = ops::gather_rows(kv, order);
        auto out = layer.forward(q, shuffled);
        for (std::size_t i = 0; i < out.size(); ++i)
            EXPECT_NEAR(out.values()[i], base.values()[i], 1e-6);
    }
}

TEST(Attention, MatchesHandRolledOracle) {
    Rng rng(23);
    const std::size_t d = 4;
    auto layer = AttentionLayer<double>::init(rng, d, 1, 8);
    Tensor<double> q({2, d}, rng.normal_vec<double>(2 * d, 1.0));
    Tensor<double> kv({3, d}, rng.normal_vec<double>(3 * d, 1.0));
    auto out = layer.forward(q, kv);

    // plain-loop reimplementation
    auto ln = [&](std::vector<double> m, std::size_t rows, const std::vector<double>& gg,
                  const std::vector<double>& bb) {
        for (std::size_t r = 0; r < rows; ++r) {
            double mu = 0, var = 0;
            for (std::size_t c = 0; c < d; ++c) mu += m[r * d + c];
            mu /= double(d);
            for (std::size_t c = 0; c < d; ++c)
                var += (m[r * d + c] - mu) * (m[r * d + c] - mu);
            var /= double(d);
            for (std::size_t c = 0; c < d; ++c)
                m[r * d + c] = gg[c] * (m[r * d + c] - mu) / std::sqrt(var + 1e-5) + bb[c];
        }
        return m;
    };
    auto lin = [&](const std::vector<double>& m, std::size_t rows, const std::vector<double>& w,
                   const std::vector<double>& b, std::size_t in_d, std::size_t out_d) {
        std::vector<double> o(rows * out_d);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < out_d; ++c) {
                double acc = b[c];
                for (std::size_t k = 0; k < in_d; ++k) acc += m[r * in_d + k] * w[k * out_d + c];
                o[r * out_d + c] = acc;
            }
        return o;
    };
    auto qn = ln(q.values(), 2, layer.ln_q_g.values(), layer.ln_q_b.values());
    auto kvn = ln(kv.values(), 3, layer.ln_kv_g.values(), layer.ln_kv_b.values());
    auto qq = lin(qn, 2, layer.wq.values(), layer.bq.values(), d, d);
    auto kk = lin(kvn, 3, layer.wk.values(), layer.bk.values(), d, d);
    auto vv = lin(kvn, 3, layer.wv.values(), layer.bv.values(), d, d);
    std::vector<double> att_out(2 * d, 0.0);
    for (int r = 0; r < 2; ++r) {
        double scores[3], mx = -1e30, z = 0;
        for (int k = 0; k < 3; ++k) {
            scores[k] = 0;
            for (std::size_t c = 0; c < d; ++c)
                scores[k] += qq[r * d + c] * kk[k * d + c] / std::sqrt(double(d));
            mx = std::max(mx, scores[k]);
        }
        for (int k = 0; k < 3; ++k) {
            scores[k] = std::exp(scores[k] - mx);
            z += scores[k];
        }
        for (int k = 0; k < 3; ++k)
            for (std::size_t c = 0; c < d; ++c)
                att_out[r * d + c] += scores[k] / z * vv[k * d + c];
    }
    auto proj = lin(att_out, 2, layer.wo.values(), layer.bo.values(), d, d);
    std::vector<double> x(2 * d);
    for (std::size_t i = 0; i < 2 * d; ++i) x[i] = q.values()[i] + proj[i];
    auto xf = ln(x, 2, layer.ln_f_g.values(), layer.ln_f_b.values());
    auto h1 = lin(xf, 2, layer.w1.values(), layer.b1.values(), d, 8);
    for (auto& v : h1) v = v / (1.0 + std::exp(-v));
    auto h2 = lin(h1, 2, layer.w2.values(), layer.b2.values(), 8, d);
    for (std::size_t i = 0; i < 2 * d; ++i)
        EXPECT_NEAR(out.values()[i], x[i] + h2[i], 1e-10);
}

// ---------------------------------------------------------------------------
// checkpoint
// ---------------------------------------------------------------------------

TEST(Checkpoint, BitExactRoundTrip) {
    Rng rng(31);
    Tensor<float> a({3, 4}, rng.normal_vec<float>(12, 1.0));
    Tensor<double> b({2, 2, 2}, rng.normal_vec<double>(8, 1.0));
    Checkpoint ck;
    ck.put("layer.weight", a);
    ck.put("stats", b);
    const std::string path = ::testing::TempDir() + "/roundtrip.ckpt";
    ck.save(path);
    auto loaded = Checkpoint::load(path);
    auto a2 = loaded.get<float>("layer.weight");
    auto b2 = loaded.get<double>("stats");
    EXPECT_EQ(a2.shape(), a.shape());
    EXPECT_EQ(a2.values(), a.values());
    EXPECT_EQ(b2.values(), b.values());
    EXPECT_THROW(loaded.get<float>("stats"), std::runtime_error);
    EXPECT_THROW(loaded.get<float>("missing"), std::runtime_error);
}

int main(int argc, char** argv) {
    ::testing::InitGoogleTest(&argc, argv);
    return RUN_ALL_TESTS();
}
