#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "handtex/camera.hpp"
#include "handtex/gradcheck.hpp"
#include "handtex/mesh.hpp"
#include "handtex/pose.hpp"
#include "handtex/raster.hpp"
#include "handtex/rng.hpp"

using namespace handtex;

namespace {

Camera test_camera(double img = 128) {
    return Camera::look_at({0, 40, 250}, {0, 40, 0}, {0, 1, 0}, 220, 220, img / 2, img / 2, 1.0);
}

}  // namespace

// ---------------------------------------------------------------------------
// mesh loading
// ---------------------------------------------------------------------------

TEST(Mesh, QuadObjRoundTrip) {
    const std::string path = ::testing::TempDir() + "/quad.obj";
    {
        std::ofstream f(path);
        f << "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\n"
          << "vt 0 0\nvt 1 0\nvt 1 1\nvt 0 1\n"
          << "f 1/1 2/2 3/3\nf 1/1 3/3 4/4\n";
    }
    auto mesh = load_obj(path);
    EXPECT_EQ(mesh.vertex_count(), 4u);
    EXPECT_EQ(mesh.face_count(), 2u);
    EXPECT_DOUBLE_EQ(mesh.face_uvs[1][4], 0.0);
    EXPECT_DOUBLE_EQ(mesh.face_uvs[1][5], 1.0);
}

TEST(Mesh, BadUvIndexFailsToLoad) {
    const std::string path = ::testing::TempDir() + "/bad.obj";
    {
        std::ofstream f(path);
        f << "v 0 0 0\nv 1 0 0\nv 1 1 0\n"
          << "vt 0 0\nvt 1 0\nvt 1 1\nvt 0 1\n"
          << "f 1/1 2/2 3/99\n";
    }
    EXPECT_THROW(load_obj(path), std::runtime_error);
}

TEST(Mesh, ToyHandMatchesManifest) {
    auto mesh = make_toy_hand();
    EXPECT_EQ(mesh.vertex_count(), 88u);
    EXPECT_EQ(mesh.face_count(), 132u);
    EXPECT_EQ(mesh.rig.joints.size(), 11u);
    EXPECT_EQ(mesh.rig.dof_count(), 5u);
    EXPECT_EQ(mesh.keypoint_vertex_ids.size(), 7u);
    mesh.validate();
}

TEST(Mesh, ToyHandAssetFilesRoundTrip) {
    auto mesh = make_toy_hand();
    const std::string obj = ::testing::TempDir() + "/hand.obj";
    const std::string rig = ::testing::TempDir() + "/hand.rig";
    save_obj(mesh, obj);
    save_rig(mesh, rig);
    auto loaded = load_obj(obj);
    load_rig(loaded, rig);
    loaded.validate();
    EXPECT_EQ(loaded.vertex_count(), mesh.vertex_count());
    EXPECT_EQ(loaded.face_count(), mesh.face_count());
    EXPECT_EQ(loaded.keypoint_vertex_ids, mesh.keypoint_vertex_ids);
    for (std::size_t i = 0; i < mesh.vertex_count(); ++i)
        for (int c = 0; c < 3; ++c)
            EXPECT_DOUBLE_EQ(loaded.vertices[i][c], mesh.vertices[i][c]);
    for (std::size_t j = 0; j < 11; ++j)
        EXPECT_EQ(loaded.rig.joints[j].dof, mesh.rig.joints[j].dof);
}

TEST(Mesh, BundledAssetMatchesManifest) {
    const std::string dir = std::string(HANDTEX_SOURCE_DIR) + "/assets";
    std::ifstream mf(dir + "/manifest.json");
    ASSERT_TRUE(mf.good()) << "missing " << dir << "/manifest.json";
    nlohmann::json m;
    mf >> m;

    auto mesh = load_obj(dir + "/toy_hand.obj");
    load_rig(mesh, dir + "/toy_hand.rig");
    mesh.validate();
    EXPECT_EQ(mesh.vertex_count(), m["vertex_count"].get<std::size_t>());
    EXPECT_EQ(mesh.face_count(), m["face_count"].get<std::size_t>());
    EXPECT_EQ(mesh.rig.joints.size(), m["joint_count"].get<std::size_t>());
    EXPECT_EQ(mesh.rig.dof_count(), m["dof_count"].get<std::size_t>());
    EXPECT_EQ(mesh.keypoint_vertex_ids.size(), m["keypoint_count"].get<std::size_t>());

    auto fnv64_file = [](const std::string& path) {
        std::ifstream f(path, std::ios::binary);
        std::uint64_t h = 0xCBF29CE484222325ull;
        char c;
        while (f.get(c)) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001B3ull;
        }
        std::ostringstream ss;
        ss << std::hex << std::setfill('0') << std::setw(16) << h;
        return ss.str();
    };
    for (const auto& [name, sum] : m["files"].items())
        EXPECT_EQ(fnv64_file(dir + "/" + name), sum.get<std::string>()) << name;
}

// ---------------------------------------------------------------------------
// pose
// ---------------------------------------------------------------------------

TEST(Pose, IdentityLeavesVerticesUnchanged) {
    auto mesh = make_toy_hand();
    PoseParams pose;
    pose.curls.assign(5, 0.0);
    auto posed = apply_pose_values(mesh, pose);
    for (std::size_t i = 0; i < mesh.vertex_count(); ++i)
        for (int c = 0; c < 3; ++c) EXPECT_NEAR(posed[i][c], mesh.vertices[i][c], 1e-9);
}

TEST(Pose, PureTranslationShiftsEveryVertex) {
    auto mesh = make_toy_hand();
    PoseParams pose;
    pose.curls.assign(5, 0.0);
    pose.translation = {3.0, -2.0, 7.5};
    auto posed = apply_pose_values(mesh, pose);
    for (std::size_t i = 0; i < mesh.vertex_count(); ++i)
        for (int c = 0; c < 3; ++c)
            EXPECT_NEAR(posed[i][c], mesh.vertices[i][c] + pose.translation[c], 1e-9);
}

TEST(Pose, CurledFingerMatchesTwoLinkForwardKinematics) {
    auto mesh = make_toy_hand();
    PoseParams pose;
    pose.curls.assign(5, 0.0);
    pose.curls[2] = M_PI / 2;  // middle finger (x = 0)
    auto posed = apply_pose_values(mesh, pose);

    // closed-form: both joints rotate by pi/2 about +x at (0,45,0), (0,65,0)
    // rest tip keypoint: distal box corner (3.5, 83, 4)
    const std::size_t tip = mesh.keypoint_vertex_ids[2 + 2];
    const Vec3 rest = mesh.vertices[tip];
    // rotate about joint2 (0,65,0) by pi/2 around +x: (y,z) -> (-z, y)
    Vec3 p1 = {rest[0], 65.0 - (rest[2] - 0.0), 0.0 + (rest[1] - 65.0)};
    // joint2 itself then rotates about joint1 (0,45,0) by pi/2
    Vec3 p2 = {p1[0], 45.0 - (p1[2] - 0.0), 0.0 + (p1[1] - 45.0)};
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(posed[tip][c], p2[c], 1e-9);
}

TEST(Pose, GradientsPassGradCheck) {
    auto mesh = make_toy_hand();
    Rng rng(17);
    auto f = [&](const std::vector<Tensor<double>>& in) {
        PoseTensors<double> pt{in[0], in[1], in[2]};
        auto posed = apply_pose(mesh, pt);
        // scalar probe: weighted sum of coordinates
        return ops::mean(ops::mul(posed, posed));
    };
    for (int seed = 0; seed < 2; ++seed) {
        Tensor<double> rot({3}, rng.normal_vec<double>(3, 0.3));
        Tensor<double> trans({3}, rng.normal_vec<double>(3, 5.0));
        std::vector<double> c(5);
        for (auto& x : c) x = rng.uniform(0.1, 1.2);
        Tensor<double> curls({5}, c);
        auto rep = grad_check(f, {rot, trans, curls}, 1e-5, 1e-4);
        EXPECT_TRUE(rep.pass) << "seed " << seed << " rel err " << rep.max_rel_err;
    }
}

// ---------------------------------------------------------------------------
// camera / projection
// ---------------------------------------------------------------------------

TEST(Project, OpticalAxisHitsPrincipalPoint) {
    Camera cam;
    cam.fx = cam.fy = 100;
    cam.cx = 64;
    cam.cy = 48;
    auto p = project({{0, 0, 2}}, cam);
    ASSERT_TRUE(p[0].valid);
    EXPECT_DOUBLE_EQ(p[0].x, 64.0);
    EXPECT_DOUBLE_EQ(p[0].y, 48.0);
}

TEST(Project, HandEvaluatedPoint) {
    Camera cam;
    cam.fx = cam.fy = 100;
    cam.cx = cam.cy = 50;
    auto p = project({{1, 1, 2}}, cam);
    ASSERT_TRUE(p[0].valid);
    EXPECT_DOUBLE_EQ(p[0].x, 100.0);
    EXPECT_DOUBLE_EQ(p[0].y, 100.0);
}

TEST(Project, BehindNearPlaneIsInvalid) {
    Camera cam;
    cam.near = 0.5;
    auto p = project({{0, 0, 0.25}}, cam);
    EXPECT_FALSE(p[0].valid);
}

TEST(Camera, LookAtIsOrthonormal) {
    auto cam = test_camera();
    cam.validate();
    // the target projects to the principal point
    auto p = project({{0, 40, 0}}, cam);
    ASSERT_TRUE(p[0].valid);
    EXPECT_NEAR(p[0].x, 64.0, 1e-9);
    EXPECT_NEAR(p[0].y, 64.0, 1e-9);
}

// ---------------------------------------------------------------------------
// rasterizer
// ---------------------------------------------------------------------------

TEST(Raster, SingleTriangleMatchesHalfSpaceOracle) {
    std::vector<Vec3> verts = {{-30, 10, 0}, {35, 15, 0}, {0, 70, 0}};
    std::vector<std::array<std::size_t, 3>> faces = {{0, 1, 2}};
    std::vector<std::array<double, 6>> uvs = {{0, 0, 1, 0, 0.5, 1}};
    auto cam = test_camera();
    auto buf = rasterize(verts, faces, uvs, cam, 128, 128);

    auto scr = project(verts, cam);
    auto edge = [&](double ax, double ay, double bx, double by, double px, double py) {
        return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
    };
    std::size_t mismatches = 0, covered = 0;
    for (int r = 0; r < 128; ++r)
        for (int c = 0; c < 128; ++c) {
            const double px = c + 0.5, py = r + 0.5;
            const double e0 = edge(scr[0].x, scr[0].y, scr[1].x, scr[1].y, px, py);
            const double e1 = edge(scr[1].x, scr[1].y, scr[2].x, scr[2].y, px, py);
            const double e2 = edge(scr[2].x, scr[2].y, scr[0].x, scr[0].y, px, py);
            const bool inside = (e0 >= 0 && e1 >= 0 && e2 >= 0) || (e0 <= 0 && e1 <= 0 && e2 <= 0);
            const bool frag = buf.at(r, c).covered();
            covered += frag;
            // skip exact-edge pixels where the epsilon rule may differ
            const double margin = std::min({std::abs(e0), std::abs(e1), std::abs(e2)});
            if (margin > 1e-6 && inside != frag) ++mismatches;
        }
    EXPECT_GT(covered, 100u);
    EXPECT_EQ(mismatches, 0u);
}

TEST(Raster, NearerTriangleWinsEveryContestedPixel) {
    std::vector<Vec3> verts = {{-30, 10, 0},  {35, 15, 0},  {0, 70, 0},
                               {-30, 10, 20}, {35, 15, 20}, {0, 70, 20}};
    std::vector<std::array<std::size_t, 3>> faces = {{0, 1, 2}, {3, 4, 5}};
    std::vector<std::array<double, 6>> uvs = {{0, 0, 1, 0, 0.5, 1}, {0, 0, 1, 0, 0.5, 1}};
    auto cam = test_camera();
    auto buf = rasterize(verts, faces, uvs, cam, 128, 128);
    std::size_t near_wins = 0;
    for (const auto& f : buf.frags)
        if (f.covered()) {
            EXPECT_EQ(f.face, 1);  // z=20 plane is closer to the camera at z=250
            ++near_wins;
        }
    EXPECT_GT(near_wins, 100u);
}

TEST(Raster, BackFacingTrianglesCulled) {
    std::vector<Vec3> verts = {{-30, 10, 0}, {35, 15, 0}, {0, 70, 0}};
    std::vector<std::array<std::size_t, 3>> faces = {{0, 2, 1}};  // reversed winding
    std::vector<std::array<double, 6>> uvs = {{0, 0, 1, 0, 0.5, 1}};
    auto cam = test_camera();
    auto buf = rasterize(verts, faces, uvs, cam, 128, 128);
    EXPECT_EQ(buf.coverage_count(), 0u);
}

TEST(Raster, FragmentsReprojectToPixelCenters) {
    auto mesh = make_toy_hand();
    PoseParams pose;
    pose.curls = {0.3, 0.8, 0.1, 1.1, 0.5};
    pose.global_rotation = {0.2, 0.4, -0.1};
    auto posed = apply_pose_values(mesh, pose);
    auto cam = test_camera();
    auto buf = rasterize(posed, mesh.faces, mesh.face_uvs, cam, 128, 128);
    ASSERT_GT(buf.coverage_count(), 500u);
    for (const auto& f : buf.frags) {
        if (!f.covered()) continue;
        const auto& face = mesh.faces[f.face];
        Vec3 p = {0, 0, 0};
        for (int k = 0; k < 3; ++k) p = vadd(p, vscale(posed[face[k]], f.bary[k]));
        auto proj = project({p}, cam);
        ASSERT_TRUE(proj[0].valid);
        EXPECT_NEAR(proj[0].x, f.col + 0.5, 0.75);
        EXPECT_NEAR(proj[0].y, f.row + 0.5, 0.75);
    }
}

TEST(Raster, DeterministicFragmentBuffers) {
    auto mesh = make_toy_hand();
    PoseParams pose;
    pose.curls = {0.2, 0.2, 0.9, 0.4, 0.0};
    auto posed = apply_pose_values(mesh, pose);
    auto cam = test_camera();
    auto a = rasterize(posed, mesh.faces, mesh.face_uvs, cam, 96, 96);
    auto b = rasterize(posed, mesh.faces, mesh.face_uvs, cam, 96, 96);
    for (std::size_t i = 0; i < a.frags.size(); ++i) {
        EXPECT_EQ(a.frags[i].face, b.frags[i].face);
        EXPECT_EQ(a.frags[i].depth, b.frags[i].depth);
        EXPECT_EQ(a.frags[i].uv, b.frags[i].uv);
    }
}

// ---------------------------------------------------------------------------
// visibility oracle
// ---------------------------------------------------------------------------

TEST(Visibility, LoneTriangleFullyVisible) {
    std::vector<Vec3> verts = {{-30, 10, 0}, {35, 15, 0}, {0, 70, 0}};
    std::vector<std::array<std::size_t, 3>> faces = {{0, 1, 2}};
    auto vis = visible_vertices_bruteforce(verts, faces, test_camera());
    EXPECT_TRUE(vis[0] && vis[1] && vis[2]);
}

TEST(Visibility, OccludedVertexDetected) {
    // big triangle in front of a vertex at the origin
    std::vector<Vec3> verts = {{0, 40, 0},
                               {-50, -10, 100}, {50, -10, 100}, {0, 90, 100}};
    std::vector<std::array<std::size_t, 3>> faces = {{1, 2, 3}};
    auto vis = visible_vertices_bruteforce(verts, faces, test_camera());
    EXPECT_FALSE(vis[0]);
    EXPECT_TRUE(vis[1] && vis[2] && vis[3]);
}

TEST(Visibility, AgreesWithRasterizerOnToyHand) {
    auto mesh = make_toy_hand();
    PoseParams pose;
    pose.curls = {0.4, 1.0, 0.2, 0.7, 0.9};
    pose.global_rotation = {0.3, -0.2, 0.1};
    auto posed = apply_pose_values(mesh, pose);
    auto cam = test_camera(192);
    auto vis = visible_vertices_bruteforce(posed, mesh.faces, cam);
    auto buf = rasterize(posed, mesh.faces, mesh.face_uvs, cam, 192, 192);

    // rasterizer-derived visibility: a vertex is visible if some fragment's
    // face contains it with a dominant barycentric
    std::vector<bool> raster_vis(posed.size(), false);
    for (const auto& f : buf.frags) {
        if (!f.covered()) continue;
        const auto& face = mesh.faces[f.face];
        for (int k = 0; k < 3; ++k)
            if (f.bary[k] > 0.6) raster_vis[face[k]] = true;
    }
    std::size_t agree = 0, total = 0;
    for (std::size_t v = 0; v < posed.size(); ++v) {
        // only compare vertices the rasterizer could plausibly decide
        ++total;
        if (vis[v] == raster_vis[v]) ++agree;
    }
    EXPECT_GE(double(agree) / double(total), 0.80) << agree << "/" << total;
}

int main(int argc, char** argv) {
    ::testing::InitGoogleTest(&argc, argv);
    return RUN_ALL_TESTS();
}
