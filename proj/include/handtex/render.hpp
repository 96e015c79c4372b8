#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "handtex/image.hpp"
#include "handtex/ops.hpp"
#include "handtex/raster.hpp"
#include "handtex/tensor.hpp"

namespace handtex {

// Textures share the planar 3 x H x W image layout.
using TextureMap = Image;

constexpr double kBackgroundGray = 0.5;

// Plain bilinear texture lookup matching ops::bilinear_sample semantics:
// (0,0)/(1,1) hit corner texel centers, out-of-range coordinates clamp.
inline std::array<double, 3> texture_lookup(const TextureMap& tex, double u, double v) {
    const std::size_t h = tex.height, w = tex.width;
    u = std::clamp(u, 0.0, 1.0);
    v = std::clamp(v, 0.0, 1.0);
    const double x = u * double(w - 1), y = v * double(h - 1);
    const std::size_t x0 = std::min(std::size_t(x), w - 2);
    const std::size_t y0 = std::min(std::size_t(y), h - 2);
    const double fx = x - double(x0), fy = y - double(y0);
    std::array<double, 3> out;
    for (std::size_t ch = 0; ch < 3; ++ch) {
        const double t00 = tex.at(ch, y0, x0), t01 = tex.at(ch, y0, x0 + 1);
        const double t10 = tex.at(ch, y0 + 1, x0), t11 = tex.at(ch, y0 + 1, x0 + 1);
        out[ch] = (1 - fy) * ((1 - fx) * t00 + fx * t01) + fy * ((1 - fx) * t10 + fx * t11);
    }
    return out;
}

struct RenderOutput {
    Image image;
    std::vector<double> coverage;  // H * W, 0 or 1
    FragmentBuffer frags;
};

// Hard rasterization + per-fragment bilinear texture lookup over a fixed
// background. Coverage is non-differentiable by design; gradient paths live in
// covered_pixel_colors below.
inline RenderOutput render_textured(const std::vector<Vec3>& verts,
                                    const std::vector<std::array<std::size_t, 3>>& faces,
                                    const std::vector<std::array<double, 6>>& face_uvs,
                                    const TextureMap& texture, const Camera& cam,
                                    std::size_t width, std::size_t height,
                                    double background = kBackgroundGray) {
    RenderOutput out;
    out.frags = rasterize(verts, faces, face_uvs, cam, width, height);
    out.image = Image(height, width, background);
    out.coverage.assign(height * width, 0.0);
    for (const auto& f : out.frags.frags) {
        if (!f.covered()) continue;
        out.coverage[std::size_t(f.row) * width + std::size_t(f.col)] = 1.0;
        const auto c = texture_lookup(texture, f.uv[0], f.uv[1]);
        for (std::size_t ch = 0; ch < 3; ++ch)
            out.image.at(ch, std::size_t(f.row), std::size_t(f.col)) = c[ch];
    }
    return out;
}

// Mean absolute color difference over covered pixels; 0 with empty coverage.
inline double photometric_loss(const Image& observed, const RenderOutput& rendered) {
    if (observed.height != rendered.image.height || observed.width != rendered.image.width)
        throw std::invalid_argument("photometric_loss: image extents differ");
    double acc = 0;
    std::size_t n = 0;
    for (const auto& f : rendered.frags.frags) {
        if (!f.covered()) continue;
        for (std::size_t ch = 0; ch < 3; ++ch)
            acc += std::abs(observed.at(ch, std::size_t(f.row), std::size_t(f.col)) -
                            rendered.image.at(ch, std::size_t(f.row), std::size_t(f.col)));
        ++n;
    }
    return n == 0 ? 0.0 : acc / double(3 * n);
}

namespace detail_render {

template <class T>
Tensor<T> constant(Shape sh, std::vector<T> v) {
    return Tensor<T>(std::move(sh), std::move(v));
}

}  // namespace detail_render

// Recomputes the colors of an existing fragment buffer's covered pixels as a
// differentiable graph over posed vertex positions (V x 3) and the texture
// (3 x H x W). The coverage set itself stays fixed, so gradients describe
// within-silhouette changes only. Returns N x 3 colors in fragment buffer
// row-major order.
template <class T>
Tensor<T> covered_pixel_colors(const Tensor<T>& posed,
                               const std::vector<std::array<std::size_t, 3>>& faces,
                               const std::vector<std::array<double, 6>>& face_uvs,
                               const Tensor<T>& texture, const Camera& cam,
                               const FragmentBuffer& frags) {
    using namespace ops;
    std::vector<const RasterFragment*> covered;
    for (const auto& f : frags.frags)
        if (f.covered()) covered.push_back(&f);
    const std::size_t n = covered.size();
    if (n == 0) throw std::invalid_argument("covered_pixel_colors: empty coverage");

    // camera transform as a row-vector product: p_cam = p_world * R^T + t
    std::vector<T> rt(9);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) rt[j * 3 + i] = T(cam.rotation[i * 3 + j]);
    Tensor<T> cam_pts = add_rowvec(
        matmul(posed, detail_render::constant<T>({3, 3}, std::move(rt))),
        detail_render::constant<T>(
            {3}, {T(cam.translation[0]), T(cam.translation[1]), T(cam.translation[2])}));
    Tensor<T> z = slice_cols(cam_pts, 2, 3);
    Tensor<T> sx = add_const(mul(scale(slice_cols(cam_pts, 0, 1), T(cam.fx)),
                                 div(detail_render::constant<T>({1}, {T(1)}), z)),
                             T(cam.cx));
    Tensor<T> sy = add_const(mul(scale(slice_cols(cam_pts, 1, 2), T(cam.fy)),
                                 div(detail_render::constant<T>({1}, {T(1)}), z)),
                             T(cam.cy));
    Tensor<T> screen = concat_cols(std::vector<Tensor<T>>{sx, sy});

    std::vector<std::size_t> i0(n), i1(n), i2(n);
    std::vector<T> px(n), py(n), uv0(n * 2), uv1(n * 2), uv2(n * 2);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& f = *covered[i];
        i0[i] = faces[f.face][0];
        i1[i] = faces[f.face][1];
        i2[i] = faces[f.face][2];
        px[i] = T(f.col + 0.5);
        py[i] = T(f.row + 0.5);
        const auto& uv = face_uvs[f.face];
        uv0[i * 2] = T(uv[0]);
        uv0[i * 2 + 1] = T(uv[1]);
        uv1[i * 2] = T(uv[2]);
        uv1[i * 2 + 1] = T(uv[3]);
        uv2[i * 2] = T(uv[4]);
        uv2[i * 2 + 1] = T(uv[5]);
    }
    Tensor<T> pxs = detail_render::constant<T>({n, 1}, std::move(px));
    Tensor<T> pys = detail_render::constant<T>({n, 1}, std::move(py));
    Tensor<T> a = gather_rows(screen, i0), b = gather_rows(screen, i1),
              c = gather_rows(screen, i2);
    Tensor<T> ax = slice_cols(a, 0, 1), ay = slice_cols(a, 1, 2);
    Tensor<T> bx = slice_cols(b, 0, 1), by = slice_cols(b, 1, 2);
    Tensor<T> cx = slice_cols(c, 0, 1), cy = slice_cols(c, 1, 2);

    auto edge = [&](const Tensor<T>& x1, const Tensor<T>& y1, const Tensor<T>& x2,
                    const Tensor<T>& y2) {
        // (p2 - px) x (p1 - px) ordering matches the rasterizer's edge function
        return sub(mul(sub(x1, pxs), sub(y2, pys)), mul(sub(y1, pys), sub(x2, pxs)));
    };
    Tensor<T> area = sub(mul(sub(bx, ax), sub(cy, ay)), mul(sub(by, ay), sub(cx, ax)));
    Tensor<T> w0 = div(edge(bx, by, cx, cy), area);
    Tensor<T> w1 = div(edge(cx, cy, ax, ay), area);
    Tensor<T> w2 = sub(sub(detail_render::constant<T>({1}, {T(1)}), w0), w1);

    // perspective-correct barycentrics
    Tensor<T> za = gather_rows(z, i0), zb = gather_rows(z, i1), zc = gather_rows(z, i2);
    Tensor<T> t0 = div(w0, za), t1 = div(w1, zb), t2 = div(w2, zc);
    Tensor<T> tsum = add(add(t0, t1), t2);
    Tensor<T> b0 = div(t0, tsum), b1 = div(t1, tsum), b2 = div(t2, tsum);

    Tensor<T> uvs =
        add(add(scale_rows(detail_render::constant<T>({n, 2}, std::move(uv0)), reshape(b0, {n})),
                scale_rows(detail_render::constant<T>({n, 2}, std::move(uv1)), reshape(b1, {n}))),
            scale_rows(detail_render::constant<T>({n, 2}, std::move(uv2)), reshape(b2, {n})));
    return bilinear_sample(texture, uvs);
}

// Differentiable photometric objective over a fixed coverage set: mean L1
// between recomputed fragment colors and the observed image.
template <class T>
Tensor<T> photometric_loss_diff(const Image& observed, const Tensor<T>& posed,
                                const std::vector<std::array<std::size_t, 3>>& faces,
                                const std::vector<std::array<double, 6>>& face_uvs,
                                const Tensor<T>& texture, const Camera& cam,
                                const FragmentBuffer& frags) {
    using namespace ops;
    std::vector<T> obs;
    for (const auto& f : frags.frags) {
        if (!f.covered()) continue;
        for (std::size_t ch = 0; ch < 3; ++ch)
            obs.push_back(T(observed.at(ch, std::size_t(f.row), std::size_t(f.col))));
    }
    if (obs.empty()) return Tensor<T>({1}, {T(0)});
    const std::size_t n = obs.size() / 3;
    Tensor<T> pred = covered_pixel_colors(posed, faces, face_uvs, texture, cam, frags);
    return mean(abs(sub(pred, detail_render::constant<T>({n, 3}, std::move(obs)))));
}

}  // namespace handtex
