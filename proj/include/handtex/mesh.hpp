#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "handtex/camera.hpp"

namespace handtex {

struct Joint {
    int parent = -1;          // -1 for root
    Vec3 rest = {0, 0, 0};    // rest position, model units
    Vec3 axis = {1, 0, 0};    // rotation axis (unit)
    int dof = -1;             // index into PoseParams::curls, -1 if not driven
};

struct Rig {
    std::vector<Joint> joints;
    std::vector<std::vector<double>> weights;  // V x J, rows sum to 1

    std::size_t dof_count() const {
        int mx = -1;
        for (const auto& j : joints) mx = std::max(mx, j.dof);
        return std::size_t(mx + 1);
    }
};

struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<std::size_t, 3>> faces;
    std::vector<std::array<double, 6>> face_uvs;  // (u0,v0,u1,v1,u2,v2) per face
    Rig rig;
    std::vector<std::size_t> keypoint_vertex_ids;

    std::size_t vertex_count() const { return vertices.size(); }
    std::size_t face_count() const { return faces.size(); }

    void validate() const {
        const std::size_t v = vertices.size();
        if (faces.size() != face_uvs.size())
            throw std::invalid_argument("mesh: face/uv count mismatch");
        for (const auto& f : faces)
            for (auto i : f)
                if (i >= v) throw std::invalid_argument("mesh: face index out of range");
        for (const auto& uv : face_uvs)
            for (double x : uv)
                if (x < 0.0 || x > 1.0)
                    throw std::invalid_argument("mesh: UV outside unit square");
        if (!rig.weights.empty()) {
            if (rig.weights.size() != v)
                throw std::invalid_argument("mesh: skinning weight row count != V");
            for (const auto& row : rig.weights) {
                if (row.size() != rig.joints.size())
                    throw std::invalid_argument("mesh: skinning weight column count != J");
                double s = 0;
                for (double w : row) {
                    if (w < 0) throw std::invalid_argument("mesh: negative skinning weight");
                    s += w;
                }
                if (std::abs(s - 1.0) > 1e-6)
                    throw std::invalid_argument("mesh: skinning weights do not sum to 1");
            }
        }
        std::vector<bool> seen(v, false);
        for (auto k : keypoint_vertex_ids) {
            if (k >= v) throw std::invalid_argument("mesh: keypoint id out of range");
            if (seen[k]) throw std::invalid_argument("mesh: duplicate keypoint id");
            seen[k] = true;
        }
    }
};

// ---------------------------------------------------------------------------
// OBJ subset: v, vt, f v/vt
// ---------------------------------------------------------------------------

inline void save_obj(const TriMesh& mesh, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_obj: cannot open '" + path + "'");
    f << std::setprecision(17);
    for (const auto& v : mesh.vertices) f << "v " << v[0] << " " << v[1] << " " << v[2] << "\n";
    for (const auto& uv : mesh.face_uvs)
        for (int k = 0; k < 3; ++k) f << "vt " << uv[k * 2] << " " << uv[k * 2 + 1] << "\n";
    for (std::size_t i = 0; i < mesh.faces.size(); ++i) {
        const auto& fc = mesh.faces[i];
        f << "f";
        for (int k = 0; k < 3; ++k) f << " " << fc[k] + 1 << "/" << i * 3 + k + 1;
        f << "\n";
    }
}

inline TriMesh load_obj(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_obj: cannot open '" + path + "'");
    TriMesh mesh;
    std::vector<std::array<double, 2>> vts;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string kw;
        ls >> kw;
        if (kw == "v") {
            Vec3 v;
            ls >> v[0] >> v[1] >> v[2];
            mesh.vertices.push_back(v);
        } else if (kw == "vt") {
            std::array<double, 2> vt;
            ls >> vt[0] >> vt[1];
            vts.push_back(vt);
        } else if (kw == "f") {
            std::array<std::size_t, 3> fv{};
            std::array<std::size_t, 3> ft{};
            for (int k = 0; k < 3; ++k) {
                std::string tok;
                ls >> tok;
                const auto slash = tok.find('/');
                if (slash == std::string::npos)
                    throw std::runtime_error("load_obj: face without UV at line " +
                                             std::to_string(lineno));
                fv[k] = std::stoull(tok.substr(0, slash)) - 1;
                ft[k] = std::stoull(tok.substr(slash + 1)) - 1;
                if (fv[k] >= mesh.vertices.size())
                    throw std::runtime_error("load_obj: vertex index out of range at line " +
                                             std::to_string(lineno));
                if (ft[k] >= vts.size())
                    throw std::runtime_error("load_obj: uv index out of range at line " +
                                             std::to_string(lineno));
            }
            mesh.faces.push_back(fv);
            mesh.face_uvs.push_back({vts[ft[0]][0], vts[ft[0]][1], vts[ft[1]][0], vts[ft[1]][1],
                                     vts[ft[2]][0], vts[ft[2]][1]});
        }
    }
    // degenerate faces are kept but reported
    for (std::size_t i = 0; i < mesh.faces.size(); ++i) {
        const auto& fc = mesh.faces[i];
        const Vec3 e1 = vsub(mesh.vertices[fc[1]], mesh.vertices[fc[0]]);
        const Vec3 e2 = vsub(mesh.vertices[fc[2]], mesh.vertices[fc[0]]);
        if (vnorm(vcross(e1, e2)) < 1e-12)
            std::cerr << "load_obj: warning: zero-area face " << i << "\n";
    }
    return mesh;
}

// ---------------------------------------------------------------------------
// rig sidecar: text key-value tree
// ---------------------------------------------------------------------------

inline void save_rig(const TriMesh& mesh, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_rig: cannot open '" + path + "'");
    f << std::setprecision(17);
    f << "joints " << mesh.rig.joints.size() << "\n";
    for (const auto& j : mesh.rig.joints)
        f << "joint " << j.parent << " " << j.rest[0] << " " << j.rest[1] << " " << j.rest[2]
          << " " << j.axis[0] << " " << j.axis[1] << " " << j.axis[2] << " " << j.dof << "\n";
    f << "weights " << mesh.rig.weights.size() << "\n";
    for (const auto& row : mesh.rig.weights) {
        f << "w";
        for (double w : row) f << " " << w;
        f << "\n";
    }
    f << "keypoints";
    for (auto k : mesh.keypoint_vertex_ids) f << " " << k;
    f << "\n";
}

inline void load_rig(TriMesh& mesh, const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_rig: cannot open '" + path + "'");
    std::string kw;
    std::size_t n;
    f >> kw >> n;
    if (kw != "joints") throw std::runtime_error("load_rig: malformed file");
    mesh.rig.joints.resize(n);
    for (auto& j : mesh.rig.joints)
        f >> kw >> j.parent >> j.rest[0] >> j.rest[1] >> j.rest[2] >> j.axis[0] >> j.axis[1] >>
            j.axis[2] >> j.dof;
    f >> kw >> n;
    if (kw != "weights") throw std::runtime_error("load_rig: malformed weights section");
    mesh.rig.weights.assign(n, std::vector<double>(mesh.rig.joints.size()));
    for (auto& row : mesh.rig.weights) {
        f >> kw;
        for (auto& w : row) f >> w;
    }
    f >> kw;
    if (kw == "keypoints") {
        std::size_t k;
        while (f >> k) mesh.keypoint_vertex_ids.push_back(k);
    }
}

// ---------------------------------------------------------------------------
// toy articulated hand
// ---------------------------------------------------------------------------

// Box-built hand: one palm slab plus five two-segment fingers, rigid skinning
// per box, one UV tile per box. 11 pose DOF total (3 rot, 3 trans, 5 curls).
inline TriMesh make_toy_hand() {
    TriMesh mesh;
    const std::size_t kTileCols = 4, kTileRows = 3;

    auto add_box = [&](const Vec3& lo, const Vec3& hi, std::size_t tile, std::size_t joint) {
        const std::size_t v0 = mesh.vertices.size();
        for (int zi = 0; zi < 2; ++zi)
            for (int yi = 0; yi < 2; ++yi)
                for (int xi = 0; xi < 2; ++xi)
                    mesh.vertices.push_back({xi ? hi[0] : lo[0], yi ? hi[1] : lo[1],
                                             zi ? hi[2] : lo[2]});
        // six quads, outward CCW winding (right-handed coords)
        static const std::size_t quads[6][4] = {
            {0, 2, 3, 1},  // z = lo (back)
            {4, 5, 7, 6},  // z = hi (front)
            {0, 1, 5, 4},  // y = lo
            {2, 6, 7, 3},  // y = hi
            {0, 4, 6, 2},  // x = lo
            {1, 3, 7, 5},  // x = hi
        };
        const double tu0 = double(tile % kTileCols) / kTileCols;
        const double tv0 = double(tile / kTileCols) / kTileRows;
        const double tw = 1.0 / kTileCols, th = 1.0 / kTileRows;
        for (int q = 0; q < 6; ++q) {
            // 2 x 3 sub-rects inside the tile, inset to avoid bleeding
            const double su0 = tu0 + tw * (q % 2) / 2.0 + tw * 0.02;
            const double sv0 = tv0 + th * (q / 2) / 3.0 + th * 0.01;
            const double su1 = tu0 + tw * (q % 2 + 1) / 2.0 - tw * 0.02;
            const double sv1 = tv0 + th * (q / 2 + 1) / 3.0 - th * 0.01;
            const std::array<std::array<double, 2>, 4> corner_uv = {
                {{su0, sv0}, {su1, sv0}, {su1, sv1}, {su0, sv1}}};
            const auto& qd = quads[q];
            mesh.faces.push_back({v0 + qd[0], v0 + qd[1], v0 + qd[2]});
            mesh.face_uvs.push_back({corner_uv[0][0], corner_uv[0][1], corner_uv[1][0],
                                     corner_uv[1][1], corner_uv[2][0], corner_uv[2][1]});
            mesh.faces.push_back({v0 + qd[0], v0 + qd[2], v0 + qd[3]});
            mesh.face_uvs.push_back({corner_uv[0][0], corner_uv[0][1], corner_uv[2][0],
                                     corner_uv[2][1], corner_uv[3][0], corner_uv[3][1]});
        }
        for (int k = 0; k < 8; ++k) {
            std::vector<double> row(11, 0.0);
            row[joint] = 1.0;
            mesh.rig.weights.push_back(row);
        }
    };

    // joints: 0 = root (wrist), then per finger (base, middle)
    mesh.rig.joints.push_back({-1, {0, 0, 0}, {1, 0, 0}, -1});
    const double finger_x[5] = {-18, -9, 0, 9, 18};
    const double palm_top = 45, seg1 = 20, seg2 = 18;
    for (int i = 0; i < 5; ++i) {
        mesh.rig.joints.push_back({0, {finger_x[i], palm_top, 0}, {1, 0, 0}, i});
        mesh.rig.joints.push_back(
            {1 + 2 * i, {finger_x[i], palm_top + seg1, 0}, {1, 0, 0}, i});
    }

    add_box({-22, 0, -6}, {22, palm_top, 6}, 0, 0);
    for (int i = 0; i < 5; ++i) {
        const double x = finger_x[i];
        add_box({x - 4, palm_top, -4.5}, {x + 4, palm_top + seg1, 4.5}, std::size_t(1 + 2 * i),
                std::size_t(1 + 2 * i));
        add_box({x - 3.5, palm_top + seg1, -4}, {x + 3.5, palm_top + seg1 + seg2, 4},
                std::size_t(2 + 2 * i), std::size_t(2 + 2 * i));
    }

    // keypoints: wrist corners (palm box verts 0,1) and one tip corner per
    // finger (distal box vertex 7: (hi,hi,hi) corner)
    mesh.keypoint_vertex_ids = {0, 1};
    for (int i = 0; i < 5; ++i) {
        const std::size_t distal_v0 = 8              // palm box
                                      + (2 * i + 1) * 8;  // boxes before the distal one
        mesh.keypoint_vertex_ids.push_back(distal_v0 + 7);
    }
    mesh.validate();
    return mesh;
}

/// FNV-1a over a file's bytes, for asset manifests.
inline std::uint64_t file_checksum(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("file_checksum: cannot open '" + path + "'");
    std::uint64_t h = 0xCBF29CE484222325ull;
    char c;
    while (f.get(c)) {
        h ^= std::uint8_t(c);
        h *= 0x100000001B3ull;
    }
    return h;
}

}  // namespace handtex
