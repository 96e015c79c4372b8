#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "handtex/image.hpp"
#include "handtex/lossmetrics.hpp"
#include "handtex/mesh.hpp"
#include "handtex/pose.hpp"
#include "handtex/render.hpp"
#include "handtex/rng.hpp"

namespace handtex {

struct DataConfig {
    std::size_t image_size = 128;
    std::size_t texture_size = 64;
    double max_curl = 1.2;           // pose draw range, radians
    double rot_range = 0.35;         // global rotation per-axis range, radians
    double trans_range = 8.0;        // translation range, model units
    double color_range = 0.45;       // global texture color shift range
    double tex_coarse_amp = 0.04;    // low-frequency texture noise amplitude
    double tex_fine_amp = 0.0;       // high-frequency texture noise amplitude
    double cam_jitter = 12.0;        // camera eye jitter, model units
    std::size_t train_scenes = 512;
    std::size_t eval_scenes = 64;
    std::size_t max_samples = 4096;  // extraction budget per scene

    void validate() const {
        if (image_size < 16 || texture_size < 8)
            throw std::invalid_argument("data config: extents too small");
        if (color_range < 0 || color_range > 0.5)
            throw std::invalid_argument("data config: color_range must be in [0, 0.5]");
        if (max_curl < 0 || max_curl > M_PI)
            throw std::invalid_argument("data config: max_curl outside [0, pi]");
    }
};

struct SceneSample {
    Image image;
    PoseParams gt_pose;
    TextureMap gt_texture;
    Camera camera;
    std::vector<std::array<double, 2>> gt_keypoints_2d;
    double bbox_size = 0;
};

namespace detail_synth {

// Smooth value noise: a coarse random grid bilinearly upsampled.
inline std::vector<double> value_noise(Rng& rng, std::size_t side, std::size_t grid,
                                       double amplitude) {
    std::vector<double> coarse((grid + 1) * (grid + 1));
    for (auto& v : coarse) v = rng.uniform(-amplitude, amplitude);
    std::vector<double> out(side * side);
    for (std::size_t y = 0; y < side; ++y)
        for (std::size_t x = 0; x < side; ++x) {
            const double gy = double(y) / double(side) * grid, gx = double(x) / double(side) * grid;
            const std::size_t y0 = std::min(grid - 1, std::size_t(gy));
            const std::size_t x0 = std::min(grid - 1, std::size_t(gx));
            const double fy = gy - double(y0), fx = gx - double(x0);
            const auto at = [&](std::size_t r, std::size_t c) { return coarse[r * (grid + 1) + c]; };
            out[y * side + x] = (1 - fy) * ((1 - fx) * at(y0, x0) + fx * at(y0, x0 + 1)) +
                                fy * ((1 - fx) * at(y0 + 1, x0) + fx * at(y0 + 1, x0 + 1));
        }
    return out;
}

}  // namespace detail_synth

// Procedural skin-like texture: a palette base tone, layered low-frequency
// noise, and dark crease strokes across the finger tiles of the UV atlas.
inline TextureMap gen_texture(std::uint64_t seed, const DataConfig& cfg) {
    Rng rng(seed);
    const std::size_t s = cfg.texture_size;
    TextureMap tex(s, s);

    // skin palette: warm channel ratios under a bimodal luminance draw, so
    // scenes split into distinctly dark and distinctly bright populations
    const double lum = rng.index(2) == 0 ? rng.uniform(0.40, 0.70) : rng.uniform(1.05, 1.40);
    const std::array<double, 3> base = {0.62 * lum * rng.uniform(0.9, 1.0),
                                        0.47 * lum * rng.uniform(0.9, 1.0),
                                        0.38 * lum * rng.uniform(0.9, 1.0)};
    auto coarse = detail_synth::value_noise(rng, s, 4, cfg.tex_coarse_amp);
    auto fine = detail_synth::value_noise(rng, s, 8, cfg.tex_fine_amp);
    for (std::size_t ch = 0; ch < 3; ++ch)
        for (std::size_t i = 0; i < s * s; ++i)
            tex.data[ch * s * s + i] = std::clamp(base[ch] + coarse[i] + fine[i], 0.04, 0.96);

    // crease strokes: darkened horizontal bands inside each finger tile row of
    // the 4 x 3 atlas (tiles above the palm row)
    const std::size_t tile_h = s / 3;
    for (int row = 1; row <= 2; ++row) {
        const std::size_t y = std::size_t(row) * tile_h + tile_h / 2 +
                              std::size_t(rng.index(std::max<std::uint64_t>(1, tile_h / 4)));
        if (y + 1 >= s) continue;
        const double dark = rng.uniform(0.7, 0.85);
        for (std::size_t x = 0; x < s; ++x)
            for (std::size_t ch = 0; ch < 3; ++ch) {
                tex.at(ch, y, x) *= dark;
                tex.at(ch, y + 1, x) *= dark;
            }
    }
    return tex;
}

// Applies a fixed global per-channel shift. Values clamp to an interior
// band rather than [0,1] so texel colors stay reachable by a sigmoid output
// without saturating logits.
inline TextureMap color_shift(const TextureMap& tex, const std::array<double, 3>& shift) {
    TextureMap out = tex;
    const std::size_t hw = tex.height * tex.width;
    for (std::size_t ch = 0; ch < 3; ++ch)
        for (std::size_t i = 0; i < hw; ++i)
            out.data[ch * hw + i] = std::clamp(tex.data[ch * hw + i] + shift[ch], 0.04, 0.96);
    return out;
}

// One global per-channel affine shift drawn per call.
inline TextureMap color_randomize(const TextureMap& tex, std::uint64_t seed, double range) {
    if (range < 0 || range > 0.5)
        throw std::invalid_argument("color_randomize: range must be in [0, 0.5]");
    Rng rng(seed);
    // bimodal: a scene is shifted clearly up or clearly down, never by ~0 —
    // cross-scene color diversity is what the completion model must explain
    const double sign = rng.index(2) == 0 ? -1.0 : 1.0;
    std::array<double, 3> shift;
    for (auto& v : shift) v = sign * rng.uniform(0.4 * range, range);
    return color_shift(tex, shift);
}

// Procedural desk-clutter background pattern.
inline Image gen_background(std::uint64_t seed, std::size_t size) {
    Rng rng(seed);
    Image bg(size, size);
    auto coarse = detail_synth::value_noise(rng, size, 6, 0.25);
    const std::array<double, 3> tone = {rng.uniform(0.2, 0.7), rng.uniform(0.2, 0.7),
                                        rng.uniform(0.2, 0.7)};
    for (std::size_t ch = 0; ch < 3; ++ch)
        for (std::size_t i = 0; i < size * size; ++i)
            bg.data[ch * size * size + i] = std::clamp(tone[ch] + coarse[i], 0.0, 1.0);
    return bg;
}

inline PoseParams draw_pose(Rng& rng, const DataConfig& cfg) {
    PoseParams pose;
    for (auto& r : pose.global_rotation) r = rng.uniform(-cfg.rot_range, cfg.rot_range);
    for (auto& t : pose.translation) t = rng.uniform(-cfg.trans_range, cfg.trans_range);
    for (auto& c : pose.curls) c = rng.uniform(0.0, cfg.max_curl);
    return pose;
}

inline Camera draw_camera(Rng& rng, const DataConfig& cfg) {
    const double j = cfg.cam_jitter;
    const Vec3 eye = {rng.uniform(-j, j), 40.0 + rng.uniform(-j, j), 250.0 + rng.uniform(-j, j)};
    const double half = double(cfg.image_size) / 2.0;
    return Camera::look_at(eye, {0, 40, 0}, {0, 1, 0}, 220, 220, half, half, 1.0);
}

// Fully deterministic scene: pose, texture, camera, background and the
// rendered composite, all derived from the seed.
inline SceneSample gen_scene(std::uint64_t seed, const TriMesh& mesh, const DataConfig& cfg) {
    Rng rng(seed);
    SceneSample scene;
    Rng pose_rng = rng.fork(1), tex_rng = rng.fork(2), cam_rng = rng.fork(3), bg_rng = rng.fork(4);
    scene.gt_pose = draw_pose(pose_rng, cfg);
    const std::uint64_t tex_seed = tex_rng.index(std::uint64_t(1) << 62);
    const std::uint64_t shift_seed = tex_rng.index(std::uint64_t(1) << 62);
    scene.gt_texture =
        color_randomize(gen_texture(tex_seed, cfg), shift_seed, cfg.color_range);
    scene.camera = draw_camera(cam_rng, cfg);

    auto posed = apply_pose_values(mesh, scene.gt_pose);
    auto out = render_textured(posed, mesh.faces, mesh.face_uvs, scene.gt_texture, scene.camera,
                               cfg.image_size, cfg.image_size);
    Image bg = gen_background(bg_rng.index(std::uint64_t(1) << 62), cfg.image_size);
    scene.image = bg;
    for (const auto& f : out.frags.frags)
        if (f.covered())
            for (std::size_t ch = 0; ch < 3; ++ch)
                scene.image.at(ch, std::size_t(f.row), std::size_t(f.col)) =
                    out.image.at(ch, std::size_t(f.row), std::size_t(f.col));

    std::vector<Vec3> kp;
    for (std::size_t vid : mesh.keypoint_vertex_ids) kp.push_back(posed[vid]);
    auto proj = project(kp, scene.camera);
    for (const auto& p : proj) scene.gt_keypoints_2d.push_back({p.x, p.y});

    auto all = project(posed, scene.camera);
    double min_x = 1e18, max_x = -1e18, min_y = 1e18, max_y = -1e18;
    for (const auto& p : all) {
        if (!p.valid) continue;
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }
    scene.bbox_size = std::max(max_x - min_x, max_y - min_y);
    return scene;
}

// ---------------------------------------------------------------------------
// scene directory layout: scenes/<id>/{image.ppm, pose.txt, camera.txt,
// texture.ppm, keypoints.csv}
// ---------------------------------------------------------------------------

inline void save_pose(const PoseParams& pose, const std::string& path) {
    std::ofstream f(path);
    f.precision(17);
    f << "rotation " << pose.global_rotation[0] << " " << pose.global_rotation[1] << " "
      << pose.global_rotation[2] << "\n";
    f << "translation " << pose.translation[0] << " " << pose.translation[1] << " "
      << pose.translation[2] << "\n";
    f << "curls";
    for (double c : pose.curls) f << " " << c;
    f << "\n";
}

inline PoseParams load_pose(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_pose: cannot open " + path);
    PoseParams pose;
    std::string kw;
    f >> kw >> pose.global_rotation[0] >> pose.global_rotation[1] >> pose.global_rotation[2];
    f >> kw >> pose.translation[0] >> pose.translation[1] >> pose.translation[2];
    f >> kw;
    pose.curls.clear();
    double c;
    while (f >> c) pose.curls.push_back(c);
    if (pose.curls.empty()) throw std::runtime_error("load_pose: malformed file " + path);
    return pose;
}

inline void save_camera(const Camera& cam, const std::string& path) {
    std::ofstream f(path);
    f.precision(17);
    f << "intrinsics " << cam.fx << " " << cam.fy << " " << cam.cx << " " << cam.cy << " "
      << cam.near << "\n";
    f << "rotation";
    for (double v : cam.rotation) f << " " << v;
    f << "\ntranslation";
    for (double v : cam.translation) f << " " << v;
    f << "\n";
}

inline Camera load_camera(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_camera: cannot open " + path);
    Camera cam;
    std::string kw;
    f >> kw >> cam.fx >> cam.fy >> cam.cx >> cam.cy >> cam.near;
    f >> kw;
    for (auto& v : cam.rotation) f >> v;
    f >> kw;
    for (auto& v : cam.translation) f >> v;
    if (!f) throw std::runtime_error("load_camera: malformed file " + path);
    return cam;
}

inline void save_scene(const SceneSample& scene, const std::string& dir) {
    std::filesystem::create_directories(dir);
    save_ppm(scene.image, dir + "/image.ppm");
    save_ppm(scene.gt_texture, dir + "/texture.ppm");
    save_pose(scene.gt_pose, dir + "/pose.txt");
    save_camera(scene.camera, dir + "/camera.txt");
    std::ofstream f(dir + "/keypoints.csv");
    f.precision(17);
    f << "x,y\n";
    for (const auto& k : scene.gt_keypoints_2d) f << k[0] << ',' << k[1] << '\n';
    f << "bbox," << scene.bbox_size << "\n";
}

inline SceneSample load_scene(const std::string& dir) {
    SceneSample scene;
    scene.image = load_ppm(dir + "/image.ppm");
    scene.gt_texture = load_ppm(dir + "/texture.ppm");
    scene.gt_pose = load_pose(dir + "/pose.txt");
    scene.camera = load_camera(dir + "/camera.txt");
    std::ifstream f(dir + "/keypoints.csv");
    if (!f) throw std::runtime_error("load_scene: missing keypoints.csv in " + dir);
    std::string line;
    std::getline(f, line);  // header
    while (std::getline(f, line)) {
        if (line.rfind("bbox,", 0) == 0) {
            scene.bbox_size = std::stod(line.substr(5));
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) continue;
        scene.gt_keypoints_2d.push_back(
            {std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
    }
    return scene;
}

}  // namespace handtex
