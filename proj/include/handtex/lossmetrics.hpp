#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "handtex/image.hpp"
#include "handtex/ops.hpp"
#include "handtex/sampler.hpp"
#include "handtex/tensor.hpp"

namespace handtex {

struct LossConfig {
    double lambda_freq = 0.01;  // Fourier consistency weight inside weak_loss
    double lambda_tex = 0.5;    // photometric term weight inside total_loss
    double w_keypoint = 1.0;    // toy estimator: 2D keypoint L1
    double w_param = 0.01;      // toy estimator: pose parameter L2

    void validate() const {
        if (lambda_freq < 0 || lambda_tex < 0 || w_keypoint < 0 || w_param < 0)
            throw std::invalid_argument("loss config: weights must be >= 0");
    }
};

struct MetricReport {
    double l1 = 0;    // 0-255 scale
    double ssim = 0;  // [-1, 1]
    double pck05 = 0, pck10 = 0, pck15 = 0;  // percent
};

template <class T>
struct WeakLossResult {
    Tensor<T> total;       // differentiable scalar
    double l1_term = 0;    // masked L1 component (value only)
    double freq_term = 0;  // Fourier component before lambda_freq (value only)
};

// Masked L1 plus Fourier-magnitude consistency against the sparse target.
// L1 normalized by observed texel count x 3 channels; Fourier term by the
// full texel count x 3. Empty mask yields an exact zero.
template <class T>
WeakLossResult<T> weak_loss(const Tensor<T>& predicted, const SupervisionTarget& target,
                            const LossConfig& cfg) {
    using namespace ops;
    const std::size_t h = target.height, w = target.width;
    if (predicted.shape() != Shape{3, h, w})
        throw std::invalid_argument("weak_loss: texture extents differ from target");
    double count = 0;
    for (double m : target.mask) count += m;
    WeakLossResult<T> res;
    if (count == 0) {
        res.total = Tensor<T>({1}, {T(0)});
        return res;
    }
    std::vector<T> mask3(3 * h * w), tstar(3 * h * w);
    for (std::size_t ch = 0; ch < 3; ++ch)
        for (std::size_t i = 0; i < h * w; ++i) {
            mask3[ch * h * w + i] = T(target.mask[i]);
            tstar[ch * h * w + i] = T(target.t_star[ch * h * w + i]);
        }
    Tensor<T> m3({3, h, w}, std::move(mask3));
    Tensor<T> ts({3, h, w}, std::move(tstar));

    Tensor<T> masked_pred = mul(predicted, m3);
    Tensor<T> l1 = scale(sum(abs(sub(masked_pred, ts))), T(1.0 / (3.0 * count)));
    Tensor<T> freq = scale(sum(abs(sub(dft2_magnitude(masked_pred), dft2_magnitude(ts)))),
                           T(1.0 / (3.0 * double(h * w))));
    res.l1_term = double(l1.item());
    res.freq_term = double(freq.item());
    res.total = add(l1, scale(freq, T(cfg.lambda_freq)));
    return res;
}

// Eq-style composition: base + lambda_tex * photometric.
template <class T>
Tensor<T> total_loss(const Tensor<T>& base, const Tensor<T>& photometric, const LossConfig& cfg) {
    return ops::add(base, ops::scale(photometric, T(cfg.lambda_tex)));
}

namespace detail_metrics {

inline std::vector<double> gaussian_window(std::size_t size, double sigma) {
    std::vector<double> w(size);
    const double c = double(size - 1) / 2.0;
    double sum = 0;
    for (std::size_t i = 0; i < size; ++i) {
        w[i] = std::exp(-(double(i) - c) * (double(i) - c) / (2 * sigma * sigma));
        sum += w[i];
    }
    for (auto& x : w) x /= sum;
    return w;
}

// Separable Gaussian filtering, valid region only (window fully inside).
inline std::vector<double> gauss_valid(const std::vector<double>& img, std::size_t h,
                                       std::size_t w, const std::vector<double>& win) {
    const std::size_t k = win.size(), oh = h - k + 1, ow = w - k + 1;
    std::vector<double> tmp(h * ow), out(oh * ow);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < ow; ++c) {
            double acc = 0;
            for (std::size_t i = 0; i < k; ++i) acc += win[i] * img[r * w + c + i];
            tmp[r * ow + c] = acc;
        }
    for (std::size_t r = 0; r < oh; ++r)
        for (std::size_t c = 0; c < ow; ++c) {
            double acc = 0;
            for (std::size_t i = 0; i < k; ++i) acc += win[i] * tmp[(r + i) * ow + c];
            out[r * ow + c] = acc;
        }
    return out;
}

}  // namespace detail_metrics

// Single-channel SSIM, Gaussian window 11 / sigma 1.5, K1=0.01, K2=0.03,
// dynamic range 1.
inline double ssim_channel(const std::vector<double>& a, const std::vector<double>& b,
                           std::size_t h, std::size_t w) {
    using namespace detail_metrics;
    const std::size_t k = 11;
    if (h < k || w < k) throw std::invalid_argument("ssim: image smaller than the window");
    const auto win = gaussian_window(k, 1.5);
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    std::vector<double> aa(a.size()), bb(b.size()), ab(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        aa[i] = a[i] * a[i];
        bb[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
    }
    const auto mu_a = gauss_valid(a, h, w, win), mu_b = gauss_valid(b, h, w, win);
    const auto m_aa = gauss_valid(aa, h, w, win), m_bb = gauss_valid(bb, h, w, win);
    const auto m_ab = gauss_valid(ab, h, w, win);
    double acc = 0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
        const double va = m_aa[i] - mu_a[i] * mu_a[i];
        const double vb = m_bb[i] - mu_b[i] * mu_b[i];
        const double cov = m_ab[i] - mu_a[i] * mu_b[i];
        acc += ((2 * mu_a[i] * mu_b[i] + c1) * (2 * cov + c2)) /
               ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2));
    }
    return acc / double(mu_a.size());
}

// Channel-averaged SSIM of two RGB images in [0,1].
inline double ssim(const Image& a, const Image& b) {
    if (a.height != b.height || a.width != b.width)
        throw std::invalid_argument("ssim: image extents differ");
    const std::size_t hw = a.height * a.width;
    double acc = 0;
    for (std::size_t ch = 0; ch < 3; ++ch) {
        std::vector<double> pa(a.data.begin() + std::ptrdiff_t(ch * hw),
                               a.data.begin() + std::ptrdiff_t((ch + 1) * hw));
        std::vector<double> pb(b.data.begin() + std::ptrdiff_t(ch * hw),
                               b.data.begin() + std::ptrdiff_t((ch + 1) * hw));
        acc += ssim_channel(pa, pb, a.height, a.width);
    }
    return acc / 3.0;
}

// Mean absolute difference on the 0-255 scale.
inline double l1_255(const Image& a, const Image& b) {
    if (a.data.size() != b.data.size()) throw std::invalid_argument("l1: image extents differ");
    double acc = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) acc += std::abs(a.data[i] - b.data[i]);
    return 255.0 * acc / double(a.data.size());
}

// Percentage of keypoints within threshold * bbox_size of ground truth,
// one value per threshold.
inline std::vector<double> pck(const std::vector<std::array<double, 2>>& pred,
                               const std::vector<std::array<double, 2>>& gt, double bbox_size,
                               const std::vector<double>& thresholds = {0.05, 0.10, 0.15}) {
    if (pred.size() != gt.size() || pred.empty())
        throw std::invalid_argument("pck: keypoint lists empty or mismatched");
    if (bbox_size <= 0) throw std::invalid_argument("pck: bbox size must be positive");
    std::vector<double> out;
    for (double t : thresholds) {
        std::size_t hit = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const double dx = pred[i][0] - gt[i][0], dy = pred[i][1] - gt[i][1];
            if (std::sqrt(dx * dx + dy * dy) <= t * bbox_size) ++hit;
        }
        out.push_back(100.0 * double(hit) / double(pred.size()));
    }
    return out;
}

}  // namespace handtex
