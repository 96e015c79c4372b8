#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "handtex/mesh.hpp"
#include "handtex/ops.hpp"
#include "handtex/tensor.hpp"

namespace handtex {

struct PoseParams {
    Vec3 global_rotation = {0, 0, 0};  // axis-angle, radians
    Vec3 translation = {0, 0, 0};      // model units
    std::vector<double> curls = std::vector<double>(5, 0.0);  // per finger, radians, [0, pi]

    void validate() const {
        for (double c : curls)
            if (c < 0.0 || c > M_PI)
                throw std::invalid_argument("pose: curl outside joint limits [0, pi]");
    }
};

// Differentiable pose leaves: global rotation (3), translation (3), curls (n).
template <class T>
struct PoseTensors {
    Tensor<T> rotation;
    Tensor<T> translation;
    Tensor<T> curls;

    static PoseTensors from(const PoseParams& p, bool requires_grad = false) {
        PoseTensors pt;
        pt.rotation = Tensor<T>({3}, {T(p.global_rotation[0]), T(p.global_rotation[1]),
                                      T(p.global_rotation[2])},
                                requires_grad);
        pt.translation = Tensor<T>(
            {3}, {T(p.translation[0]), T(p.translation[1]), T(p.translation[2])}, requires_grad);
        std::vector<T> c(p.curls.begin(), p.curls.end());
        pt.curls = Tensor<T>({p.curls.size()}, std::move(c), requires_grad);
        return pt;
    }

    PoseParams to_params() const {
        PoseParams p;
        for (int i = 0; i < 3; ++i) {
            p.global_rotation[i] = double(rotation.values()[i]);
            p.translation[i] = double(translation.values()[i]);
        }
        p.curls.assign(curls.values().begin(), curls.values().end());
        return p;
    }
};

namespace detail_pose {

// skew(u): [[0,-z,y],[z,0,-x],[-y,x,0]] as a sparse placement of u's entries
inline const std::vector<ops::PlaceEntry>& skew_map() {
    static const std::vector<ops::PlaceEntry> m = {
        {1, 2, -1.0}, {2, 1, 1.0}, {3, 2, 1.0}, {5, 0, -1.0}, {6, 1, -1.0}, {7, 0, 1.0}};
    return m;
}

template <class T>
Tensor<T> identity3() {
    return Tensor<T>({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
}

/// Rodrigues rotation from an axis-angle 3-vector tensor.
template <class T>
Tensor<T> rotation_from_axis_angle(const Tensor<T>& aa) {
    using namespace ops;
    Tensor<T> sq = mul(aa, aa);
    Tensor<T> theta = ops::sqrt(add_const(sum(sq), T(1e-24)));
    Tensor<T> unit = div(aa, theta);
    Tensor<T> k = place(unit, {3, 3}, skew_map());
    Tensor<T> k2 = matmul(k, k);
    Tensor<T> sin_t = ops::sin(theta);
    Tensor<T> one_minus_cos = add_const(neg(ops::cos(theta)), T(1));
    return add(add(identity3<T>(), mul(k, sin_t)), mul(k2, one_minus_cos));
}

/// Rotation about a constant unit axis by a scalar angle tensor.
template <class T>
Tensor<T> rotation_about_axis(const Vec3& axis, const Tensor<T>& angle) {
    using namespace ops;
    const double x = axis[0], y = axis[1], z = axis[2];
    Tensor<T> k({3, 3}, {0, T(-z), T(y), T(z), 0, T(-x), T(-y), T(x), 0});
    Tensor<T> k2 = matmul(k, k);
    Tensor<T> sin_t = ops::sin(angle);
    Tensor<T> one_minus_cos = add_const(neg(ops::cos(angle)), T(1));
    return add(add(identity3<T>(), mul(k, sin_t)), mul(k2, one_minus_cos));
}

}  // namespace detail_pose

// Linear blend skinning over the joint chain, then global rotation and
// translation. Returns posed vertices as a V x 3 tensor; gradients flow to
// the pose leaves when they carry requires_grad.
template <class T>
Tensor<T> apply_pose(const TriMesh& mesh, const PoseTensors<T>& pose) {
    using namespace ops;
    if (mesh.rig.joints.empty()) throw std::invalid_argument("apply_pose: mesh has no rig");
    const std::size_t v = mesh.vertex_count();
    const std::size_t j = mesh.rig.joints.size();

    // forward kinematics: world rotation and posed position per joint
    std::vector<Tensor<T>> rot_world(j), pos_world(j);
    for (std::size_t ji = 0; ji < j; ++ji) {
        const Joint& joint = mesh.rig.joints[ji];
        Tensor<T> local = joint.dof >= 0
                              ? detail_pose::rotation_about_axis<T>(
                                    joint.axis, select(pose.curls, std::size_t(joint.dof)))
                              : detail_pose::identity3<T>();
        if (joint.parent < 0) {
            rot_world[ji] = local;
            pos_world[ji] = Tensor<T>(
                {1, 3}, {T(joint.rest[0]), T(joint.rest[1]), T(joint.rest[2])});
        } else {
            const std::size_t p = std::size_t(joint.parent);
            rot_world[ji] = matmul(rot_world[p], local);
            const Vec3 off = vsub(joint.rest, mesh.rig.joints[p].rest);
            Tensor<T> off_col({3, 1}, {T(off[0]), T(off[1]), T(off[2])});
            pos_world[ji] = add(transpose2d(matmul(rot_world[p], off_col)), pos_world[p]);
        }
    }

    // skinning: weighted sum of per-joint rigid transforms of the rest verts
    Tensor<T> posed = Tensor<T>::zeros({v, 3});
    for (std::size_t ji = 0; ji < j; ++ji) {
        bool used = false;
        std::vector<T> w(v), rest_rel(v * 3);
        for (std::size_t vi = 0; vi < v; ++vi) {
            w[vi] = T(mesh.rig.weights[vi][ji]);
            used = used || w[vi] != T(0);
            for (int c = 0; c < 3; ++c)
                rest_rel[vi * 3 + c] = T(mesh.vertices[vi][c] - mesh.rig.joints[ji].rest[c]);
        }
        if (!used) continue;
        Tensor<T> rel({v, 3}, std::move(rest_rel));
        Tensor<T> moved = matmul(rel, transpose2d(rot_world[ji]));
        moved = add_rowvec(moved, reshape(pos_world[ji], {3}));
        posed = add(posed, scale_rows(moved, Tensor<T>({v}, std::move(w))));
    }

    Tensor<T> rg = detail_pose::rotation_from_axis_angle(pose.rotation);
    return add_rowvec(matmul(posed, transpose2d(rg)), pose.translation);
}

/// Convenience: plain-value pose application (no gradient recording).
inline std::vector<Vec3> apply_pose_values(const TriMesh& mesh, const PoseParams& pose) {
    auto pt = PoseTensors<double>::from(pose);
    Tensor<double> posed = apply_pose(mesh, pt);
    std::vector<Vec3> out(mesh.vertex_count());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = {posed.values()[i * 3], posed.values()[i * 3 + 1], posed.values()[i * 3 + 2]};
    return out;
}

}  // namespace handtex
