#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "handtex/camera.hpp"
#include "handtex/mesh.hpp"

namespace handtex {

struct RasterFragment {
    int row = 0, col = 0;
    int face = -1;  // -1 means no coverage
    std::array<double, 3> bary = {0, 0, 0};  // perspective-correct
    double depth = 0;
    std::array<double, 2> uv = {0, 0};

    bool covered() const { return face >= 0; }
};

struct FragmentBuffer {
    std::size_t width = 0, height = 0;
    std::vector<RasterFragment> frags;  // row-major, face = -1 where empty

    const RasterFragment& at(std::size_t row, std::size_t col) const {
        return frags[row * width + col];
    }
    RasterFragment& at(std::size_t row, std::size_t col) { return frags[row * width + col]; }

    std::size_t coverage_count() const {
        std::size_t n = 0;
        for (const auto& f : frags) n += f.covered();
        return n;
    }
};

// Z-buffered, back-face culled scan conversion with perspective-correct
// barycentrics. Pixel centers sampled at (col + 0.5, row + 0.5); depth ties
// go to the lower face id.
inline FragmentBuffer rasterize(const std::vector<Vec3>& verts,
                                const std::vector<std::array<std::size_t, 3>>& faces,
                                const std::vector<std::array<double, 6>>& face_uvs,
                                const Camera& cam, std::size_t width, std::size_t height) {
    FragmentBuffer buf;
    buf.width = width;
    buf.height = height;
    buf.frags.assign(width * height, RasterFragment{});
    for (std::size_t r = 0; r < height; ++r)
        for (std::size_t c = 0; c < width; ++c) {
            buf.at(r, c).row = int(r);
            buf.at(r, c).col = int(c);
        }
    std::vector<double> zbuf(width * height, std::numeric_limits<double>::infinity());

    // project all vertices once
    std::vector<Vec3> cam_pts(verts.size());
    std::vector<std::array<double, 2>> scr(verts.size());
    std::vector<bool> in_front(verts.size());
    for (std::size_t i = 0; i < verts.size(); ++i) {
        cam_pts[i] = cam.to_camera(verts[i]);
        in_front[i] = cam_pts[i][2] > cam.near;
        if (in_front[i]) {
            scr[i] = {cam.fx * cam_pts[i][0] / cam_pts[i][2] + cam.cx,
                      cam.fy * cam_pts[i][1] / cam_pts[i][2] + cam.cy};
        }
    }

    for (std::size_t fi = 0; fi < faces.size(); ++fi) {
        const auto& f = faces[fi];
        if (!in_front[f[0]] || !in_front[f[1]] || !in_front[f[2]]) continue;
        const auto &a = scr[f[0]], &b = scr[f[1]], &c = scr[f[2]];
        const double area =
            (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
        // outward-CCW winding: viewed from the camera a front face keeps its
        // counter-clockwise order, which is negative signed area in y-down
        // screen coordinates
        if (area >= 0) continue;

        const double min_x = std::min({a[0], b[0], c[0]});
        const double max_x = std::max({a[0], b[0], c[0]});
        const double min_y = std::min({a[1], b[1], c[1]});
        const double max_y = std::max({a[1], b[1], c[1]});
        const std::ptrdiff_t c0 = std::max<std::ptrdiff_t>(0, std::ptrdiff_t(std::floor(min_x - 0.5)));
        const std::ptrdiff_t c1 =
            std::min<std::ptrdiff_t>(std::ptrdiff_t(width) - 1, std::ptrdiff_t(std::ceil(max_x)));
        const std::ptrdiff_t r0 = std::max<std::ptrdiff_t>(0, std::ptrdiff_t(std::floor(min_y - 0.5)));
        const std::ptrdiff_t r1 =
            std::min<std::ptrdiff_t>(std::ptrdiff_t(height) - 1, std::ptrdiff_t(std::ceil(max_y)));

        const double z0 = cam_pts[f[0]][2], z1 = cam_pts[f[1]][2], z2 = cam_pts[f[2]][2];
        const auto& uv = face_uvs[fi];

        for (std::ptrdiff_t r = r0; r <= r1; ++r) {
            const double py = double(r) + 0.5;
            for (std::ptrdiff_t col = c0; col <= c1; ++col) {
                const double px = double(col) + 0.5;
                const double w0 = ((b[0] - px) * (c[1] - py) - (b[1] - py) * (c[0] - px)) / area;
                const double w1 = ((c[0] - px) * (a[1] - py) - (c[1] - py) * (a[0] - px)) / area;
                const double w2 = 1.0 - w0 - w1;
                const double eps = -1e-9;
                if (w0 < eps || w1 < eps || w2 < eps) continue;
                // perspective-correct interpolation
                const double t0 = w0 / z0, t1 = w1 / z1, t2 = w2 / z2;
                const double inv_sum = 1.0 / (t0 + t1 + t2);
                const double depth = inv_sum;
                const std::size_t pix = std::size_t(r) * width + std::size_t(col);
                if (depth < zbuf[pix]) {
                    zbuf[pix] = depth;
                    RasterFragment& frag = buf.frags[pix];
                    frag.face = int(fi);
                    frag.bary = {t0 * inv_sum, t1 * inv_sum, t2 * inv_sum};
                    frag.depth = depth;
                    frag.uv = {frag.bary[0] * uv[0] + frag.bary[1] * uv[2] + frag.bary[2] * uv[4],
                               frag.bary[0] * uv[1] + frag.bary[1] * uv[3] + frag.bary[2] * uv[5]};
                }
            }
        }
    }
    return buf;
}

namespace detail_raster {

// Moller-Trumbore; returns t along the ray or a negative value on miss.
inline double ray_triangle(const Vec3& orig, const Vec3& dir, const Vec3& v0, const Vec3& v1,
                           const Vec3& v2, double eps = 1e-7) {
    const Vec3 e1 = vsub(v1, v0), e2 = vsub(v2, v0);
    const Vec3 p = vcross(dir, e2);
    const double det = vdot(e1, p);
    if (std::abs(det) < eps) return -1.0;
    const double inv_det = 1.0 / det;
    const Vec3 tv = vsub(orig, v0);
    const double u = vdot(tv, p) * inv_det;
    if (u < -eps || u > 1.0 + eps) return -1.0;
    const Vec3 q = vcross(tv, e1);
    const double v = vdot(dir, q) * inv_det;
    if (v < -eps || u + v > 1.0 + eps) return -1.0;
    return vdot(e2, q) * inv_det;
}

}  // namespace detail_raster

// Oracle visibility: a vertex is visible iff the segment from the camera
// center to the vertex crosses no triangle it does not belong to.
inline std::vector<bool> visible_vertices_bruteforce(
    const std::vector<Vec3>& verts, const std::vector<std::array<std::size_t, 3>>& faces,
    const Camera& cam) {
    const Vec3 origin = cam.center();
    std::vector<bool> vis(verts.size(), false);
    for (std::size_t vi = 0; vi < verts.size(); ++vi) {
        const Vec3 pc = cam.to_camera(verts[vi]);
        if (pc[2] <= cam.near) continue;
        const Vec3 dir = vsub(verts[vi], origin);  // t = 1 at the vertex
        bool blocked = false;
        for (std::size_t fi = 0; fi < faces.size() && !blocked; ++fi) {
            const auto& f = faces[fi];
            if (f[0] == vi || f[1] == vi || f[2] == vi) continue;
            const double t = detail_raster::ray_triangle(origin, dir, verts[f[0]], verts[f[1]],
                                                         verts[f[2]]);
            blocked = t > 1e-7 && t < 1.0 - 1e-7;
        }
        vis[vi] = !blocked;
    }
    return vis;
}

}  // namespace handtex
