#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace handtex {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<double, 9>;  // row-major

inline Vec3 vsub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 vadd(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 vscale(const Vec3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }
inline double vdot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Vec3 vcross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double vnorm(const Vec3& a) { return std::sqrt(vdot(a, a)); }
inline Vec3 vnormalize(const Vec3& a) {
    const double n = vnorm(a);
    return {a[0] / n, a[1] / n, a[2] / n};
}
inline Vec3 mat3_apply(const Mat3& m, const Vec3& v) {
    return {m[0] * v[0] + m[1] * v[1] + m[2] * v[2], m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
            m[6] * v[0] + m[7] * v[1] + m[8] * v[2]};
}
inline Mat3 mat3_mul(const Mat3& a, const Mat3& b) {
    Mat3 c{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) c[i * 3 + j] += a[i * 3 + k] * b[k * 3 + j];
    return c;
}
inline Mat3 mat3_identity() { return {1, 0, 0, 0, 1, 0, 0, 0, 1}; }

/// Rotation about a unit axis by angle (Rodrigues).
inline Mat3 axis_angle_matrix(const Vec3& axis, double angle) {
    const double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
    const double x = axis[0], y = axis[1], z = axis[2];
    return {t * x * x + c,     t * x * y - s * z, t * x * z + s * y,
            t * x * y + s * z, t * y * y + c,     t * y * z - s * x,
            t * x * z - s * y, t * y * z + s * x, t * z * z + c};
}

// Pinhole camera: p_cam = R * p_world + t, pixel = (fx x/z + cx, fy y/z + cy).
struct Camera {
    double fx = 1, fy = 1, cx = 0, cy = 0;
    Mat3 rotation = mat3_identity();
    Vec3 translation = {0, 0, 0};
    double near = 1e-3;

    void validate() const {
        if (fx <= 0 || fy <= 0) throw std::invalid_argument("camera: fx, fy must be positive");
        if (near <= 0) throw std::invalid_argument("camera: near must be positive");
        // R^T R = I within 1e-6
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double acc = 0;
                for (int k = 0; k < 3; ++k) acc += rotation[k * 3 + i] * rotation[k * 3 + j];
                if (std::abs(acc - (i == j ? 1.0 : 0.0)) > 1e-6)
                    throw std::invalid_argument("camera: rotation is not orthonormal");
            }
    }

    Vec3 to_camera(const Vec3& p) const { return vadd(mat3_apply(rotation, p), translation); }

    /// Camera center in world coordinates (solution of R c + t = 0).
    Vec3 center() const {
        return {-(rotation[0] * translation[0] + rotation[3] * translation[1] +
                  rotation[6] * translation[2]),
                -(rotation[1] * translation[0] + rotation[4] * translation[1] +
                  rotation[7] * translation[2]),
                -(rotation[2] * translation[0] + rotation[5] * translation[1] +
                  rotation[8] * translation[2])};
    }

    static Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fx,
                          double fy, double cx, double cy, double near = 1e-2) {
        // camera z axis points from eye toward target, y points image-down
        const Vec3 zc = vnormalize(vsub(target, eye));
        Vec3 xc = vnormalize(vcross(zc, up));
        const Vec3 yc = vcross(zc, xc);
        Camera cam;
        cam.fx = fx;
        cam.fy = fy;
        cam.cx = cx;
        cam.cy = cy;
        cam.near = near;
        cam.rotation = {xc[0], xc[1], xc[2], yc[0], yc[1], yc[2], zc[0], zc[1], zc[2]};
        cam.translation = {-vdot(xc, eye), -vdot(yc, eye), -vdot(zc, eye)};
        return cam;
    }

    /// Pinhole stand-in for a weak-perspective model (scale s, 2D offset): a
    /// distant camera at depth z0 whose focal length reproduces the scale.
    static Camera weak_perspective(double s, double off_x, double off_y, double z0, double cx,
                                   double cy) {
        Camera cam;
        cam.fx = cam.fy = s * z0;
        cam.cx = cx + s * z0 * off_x / z0;
        cam.cy = cy + s * z0 * off_y / z0;
        cam.rotation = mat3_identity();
        cam.translation = {0, 0, z0};
        cam.near = z0 * 1e-3;
        return cam;
    }
};

struct Projected {
    double x = 0, y = 0;
    bool valid = false;
};

inline std::vector<Projected> project(const std::vector<Vec3>& points, const Camera& cam) {
    std::vector<Projected> out(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        const Vec3 p = cam.to_camera(points[i]);
        if (p[2] <= cam.near) {
            out[i] = {0, 0, false};
            continue;
        }
        out[i] = {cam.fx * p[0] / p[2] + cam.cx, cam.fy * p[1] / p[2] + cam.cy, true};
    }
    return out;
}

}  // namespace handtex
