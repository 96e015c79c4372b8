// Command-line entry point: data generation, training, evaluation and
// diagnostics for the texture-completion pipeline.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "handtex/config.hpp"
#include "handtex/gradcheck.hpp"
#include "handtex/mesh.hpp"
#include "handtex/synth.hpp"
#include "handtex/train.hpp"

namespace fs = std::filesystem;
using namespace handtex;

namespace {

struct CliArgs {
    std::string config_path;
    std::string out;
    std::string scene;
    std::string checkpoint;
    std::string variant;
    long long seed = -1;
    long long threads = -1;
    std::string precision;
};

RunConfig effective_config(const CliArgs& args) {
    RunConfig cfg;
    if (!args.config_path.empty()) cfg = load_config(args.config_path);
    if (args.seed >= 0) {
        cfg.seed = std::uint64_t(args.seed);
        cfg.train.seed = cfg.seed;
        cfg.tex.seed = mix_seed(cfg.seed, 17);
    }
    if (args.threads >= 0) cfg.threads = std::size_t(args.threads);
    if (!args.precision.empty()) cfg.precision = args.precision;
    if (!args.out.empty()) cfg.out_dir = args.out;
    if (!args.variant.empty()) cfg.train.variant = args.variant;
    cfg.validate();
    return cfg;
}

std::string run_dir(const RunConfig& cfg) {
    const std::string dir = cfg.out_dir + "/" + run_id(cfg);
    fs::create_directories(dir);
    save_config(cfg, dir + "/config.json");
    return dir;
}

int cmd_gen_data(const RunConfig& cfg) {
    auto mesh = make_toy_hand();
    fs::create_directories(cfg.scenes_dir);
    for (std::size_t i = 0; i < cfg.data.train_scenes; ++i)
        save_scene(gen_scene(scene_seed(cfg.seed, 0, i), mesh, cfg.data),
                   cfg.scenes_dir + "/train_" + std::to_string(i));
    for (std::size_t i = 0; i < cfg.data.eval_scenes; ++i)
        save_scene(gen_scene(scene_seed(cfg.seed, 1, i), mesh, cfg.data),
                   cfg.scenes_dir + "/eval_" + std::to_string(i));
    std::cout << "wrote " << cfg.data.train_scenes << " train + " << cfg.data.eval_scenes
              << " eval scenes under " << cfg.scenes_dir << "\n";
    return 0;
}

template <class T>
int cmd_warmup(const RunConfig& cfg) {
    auto mesh = make_toy_hand();
    auto params = TexModelParams<T>::init(cfg.tex);
    const std::string dir = run_dir(cfg);
    auto res = warmup_train(params, mesh, cfg.data, cfg.train, cfg.loss);
    {
        std::ofstream f(dir + "/loss.csv");
        f.precision(10);
        f << "step,train_loss\n";
        for (std::size_t i = 0; i < res.loss_curve.size(); ++i)
            f << i << ',' << res.loss_curve[i] << '\n';
        f << "heldout_step,heldout_loss\n";
        for (const auto& [s, l] : res.heldout_curve) f << s << ',' << l << '\n';
    }
    if (res.diverged) {
        std::cerr << res.diagnostic << "\n";
        return 1;
    }
    params.save(dir + "/tex.ckpt");
    {
        MetricsWriter wr(dir + "/metrics.csv", run_id(cfg));
        auto table = density_ablation(params, mesh, cfg.data, {0}, cfg.seed,
                                      std::min<std::size_t>(cfg.data.eval_scenes, 16));
        MetricReport m;
        m.l1 = table[0].l1;
        m.ssim = table[0].ssim;
        wr.row(cfg.train.steps, "eval", m);
    }
    std::cout << "warm-up heldout loss " << res.heldout_initial << " -> " << res.heldout_final
              << "; checkpoint " << dir << "/tex.ckpt\n";
    return 0;
}

template <class T>
TexModelParams<T> load_params(const RunConfig& cfg, const std::string& ckpt) {
    auto params = TexModelParams<T>::init(cfg.tex);
    params.load(ckpt);
    return params;
}

// nearest-neighbor resize used only for panel assembly
Image resize_nearest(const Image& src, std::size_t side) {
    Image out(side, side);
    for (std::size_t ch = 0; ch < 3; ++ch)
        for (std::size_t r = 0; r < side; ++r)
            for (std::size_t c = 0; c < side; ++c)
                out.at(ch, r, c) = src.at(ch, r * src.height / side, c * src.width / side);
    return out;
}

template <class T>
int cmd_reconstruct(const RunConfig& cfg, const std::string& scene_dir,
                    const std::string& ckpt) {
    auto mesh = make_toy_hand();
    auto scene = load_scene(scene_dir);
    auto params = load_params<T>(cfg, ckpt);
    auto posed = apply_pose_values(mesh, scene.gt_pose);
    auto samples = extract_samples(scene.image, posed, mesh.faces, mesh.face_uvs, scene.camera,
                                   cfg.data.max_samples, cfg.seed);
    auto target = splat_to_uv(samples, cfg.data.texture_size, cfg.data.texture_size);
    auto pred = tex_forward(samples, params);

    const std::size_t s = cfg.data.texture_size;
    TextureMap predicted(s, s);
    for (std::size_t i = 0; i < pred.size(); ++i) predicted.data[i] = double(pred.values()[i]);
    TextureMap partial(s, s);
    partial.data.assign(target.t_star.begin(), target.t_star.end());

    const std::string dir = run_dir(cfg);
    save_ppm(predicted, dir + "/reconstructed_texture.ppm");
    Image crop = resize_nearest(scene.image, s);
    Image panel(s, 3 * s);
    for (std::size_t ch = 0; ch < 3; ++ch)
        for (std::size_t r = 0; r < s; ++r)
            for (std::size_t c = 0; c < s; ++c) {
                panel.at(ch, r, c) = crop.at(ch, r, c);
                panel.at(ch, r, s + c) = partial.at(ch, r, c);
                panel.at(ch, r, 2 * s + c) = predicted.at(ch, r, c);
            }
    save_ppm(panel, dir + "/panel.ppm");
    std::cout << "reconstructed " << samples.size() << " observations -> " << dir
              << "/reconstructed_texture.ppm (L1 vs gt "
              << l1_255(predicted, scene.gt_texture) << ")\n";
    return 0;
}

int cmd_render(const RunConfig& cfg, const std::string& scene_dir) {
    auto mesh = make_toy_hand();
    auto scene = load_scene(scene_dir);
    auto posed = apply_pose_values(mesh, scene.gt_pose);
    auto out = render_textured(posed, mesh.faces, mesh.face_uvs, scene.gt_texture, scene.camera,
                               cfg.data.image_size, cfg.data.image_size);
    const std::string dir = run_dir(cfg);
    save_ppm(out.image, dir + "/rendered.ppm");
    save_pgm(out.coverage, cfg.data.image_size, cfg.data.image_size, dir + "/coverage.pgm");
    std::cout << "rendered " << out.frags.coverage_count() << " covered pixels -> " << dir
              << "/rendered.ppm\n";
    return 0;
}

template <class T>
int cmd_refine(const RunConfig& cfg, const std::string& scene_dir, const std::string& ckpt) {
    auto mesh = make_toy_hand();
    auto scene = load_scene(scene_dir);
    auto params = load_params<T>(cfg, ckpt);
    Rng rng(mix_seed(cfg.seed, 333));
    PoseParams init = perturb_pose(scene.gt_pose, rng, cfg.train);
    auto kp_err = [&](const PoseParams& pose) {
        auto posed = apply_pose_values(mesh, pose);
        double acc = 0;
        for (std::size_t i = 0; i < mesh.keypoint_vertex_ids.size(); ++i) {
            auto p = project({posed[mesh.keypoint_vertex_ids[i]]}, scene.camera)[0];
            const double dx = p.x - scene.gt_keypoints_2d[i][0];
            const double dy = p.y - scene.gt_keypoints_2d[i][1];
            acc += std::sqrt(dx * dx + dy * dy);
        }
        return acc / double(mesh.keypoint_vertex_ids.size());
    };
    auto res = refine_pose(scene.image, init, params, mesh, scene.camera, cfg.train.steps,
                           cfg.train.lr, cfg.data.max_samples, cfg.loss.lambda_tex);
    if (res.aborted) {
        std::cerr << res.diagnostic << "\n";
        return 1;
    }
    const std::string dir = run_dir(cfg);
    save_pose(res.refined, dir + "/refined_pose.txt");
    std::cout << "keypoint error " << kp_err(init) << " -> " << kp_err(res.refined)
              << " px (gt-relative), pose written to " << dir << "/refined_pose.txt\n";
    return 0;
}

template <class T>
int cmd_finetune(const RunConfig& cfg, const std::string& ckpt) {
    auto mesh = make_toy_hand();
    TexModelParams<T> tex = ckpt.empty() ? TexModelParams<T>::init(cfg.tex)
                                         : load_params<T>(cfg, ckpt);
    if (cfg.train.variant == "H&M*") {
        auto scratch_cfg = cfg.tex;
        scratch_cfg.seed = mix_seed(cfg.tex.seed, 4242);
        tex = TexModelParams<T>::init(scratch_cfg);
    }
    auto head = ToyHead<T>::init(mix_seed(cfg.seed, 555));
    auto res = finetune_variant(head, tex, mesh, cfg.data, cfg.train, cfg.loss);
    const std::string dir = run_dir(cfg);
    MetricsWriter wr(dir + "/metrics.csv", run_id(cfg));
    wr.row(cfg.train.steps, cfg.train.variant, res.metrics);
    tex.save(dir + "/tex_after.ckpt");
    std::cout << "variant " << res.variant << " pck@0.05/0.10/0.15 = " << res.metrics.pck05
              << "/" << res.metrics.pck10 << "/" << res.metrics.pck15
              << (res.tex_checksum_before == res.tex_checksum_after
                      ? " (texture frozen)"
                      : " (texture updated)")
              << "\n";
    return 0;
}

template <class T>
int cmd_ablate(const RunConfig& cfg, const std::string& ckpt) {
    auto mesh = make_toy_hand();
    auto params = load_params<T>(cfg, ckpt);
    auto table = density_ablation(params, mesh, cfg.data, {200, 500, 1000, 2000, 0}, cfg.seed,
                                  cfg.data.eval_scenes);
    const std::string dir = run_dir(cfg);
    std::ofstream f(dir + "/density.csv");
    f.precision(10);
    f << "density,l1,ssim\n";
    std::cout << "visible UV pixels | L1 | SSIM\n";
    for (const auto& row : table) {
        f << row.label << ',' << row.l1 << ',' << row.ssim << '\n';
        std::cout << row.label << " | " << row.l1 << " | " << row.ssim << "\n";
    }
    return 0;
}

template <class T>
int cmd_evaluate(const RunConfig& cfg, const std::string& ckpt) {
    std::vector<std::string> dirs;
    if (fs::is_directory(cfg.scenes_dir))
        for (const auto& e : fs::directory_iterator(cfg.scenes_dir))
            if (e.is_directory() && fs::exists(e.path() / "image.ppm"))
                dirs.push_back(e.path().string());
    std::sort(dirs.begin(), dirs.end());
    if (dirs.empty()) {
        std::cerr << "no scenes found under '" << cfg.scenes_dir << "'\n";
        return 1;
    }
    auto mesh = make_toy_hand();
    auto params = load_params<T>(cfg, ckpt);
    const std::string dir = run_dir(cfg);
    MetricsWriter wr(dir + "/metrics.csv", run_id(cfg));
    MetricReport mean;
    for (const auto& sd : dirs) {
        auto scene = load_scene(sd);
        auto posed = apply_pose_values(mesh, scene.gt_pose);
        auto samples = extract_samples(scene.image, posed, mesh.faces, mesh.face_uvs,
                                       scene.camera, cfg.data.max_samples, cfg.seed);
        auto pred = tex_forward(samples, params);
        TextureMap predicted(cfg.data.texture_size, cfg.data.texture_size);
        for (std::size_t i = 0; i < pred.size(); ++i)
            predicted.data[i] = double(pred.values()[i]);
        mean.l1 += l1_255(predicted, scene.gt_texture);
        mean.ssim += ssim(predicted, scene.gt_texture);
    }
    mean.l1 /= double(dirs.size());
    mean.ssim /= double(dirs.size());
    wr.row(0, "eval", mean);
    std::cout << "eval over " << dirs.size() << " scenes: L1 " << mean.l1 << ", SSIM "
              << mean.ssim << "\n";
    return 0;
}

int cmd_grad_check() {
    using In = const std::vector<Tensor<double>>&;
    Rng rng(1);
    Tensor<double> a({3, 4}, rng.normal_vec<double>(12, 1.0));
    Tensor<double> b({3, 4}, rng.normal_vec<double>(12, 1.0));
    for (auto& x : b.values()) x += (x >= 0 ? 1.5 : -1.5);
    Tensor<double> w({4, 3}, rng.normal_vec<double>(12, 0.5));
    Tensor<double> tex({3, 4, 4}, rng.normal_vec<double>(48, 0.5));
    Tensor<double> uv({5, 2}, {0.2, 0.3, 0.8, 0.1, 0.5, 0.5, 0.33, 0.77, 0.11, 0.95});
    struct Check {
        const char* name;
        std::function<Tensor<double>(In)> f;
        std::vector<Tensor<double>> inputs;
    };
    const std::vector<Check> checks = {
        {"mul", [](In in) { return ops::mean(ops::mul(in[0], in[1])); }, {a, b}},
        {"div", [](In in) { return ops::mean(ops::div(in[0], in[1])); }, {a, b}},
        {"matmul", [](In in) { return ops::mean(ops::matmul(in[0], in[1])); }, {a, w}},
        {"silu", [](In in) { return ops::mean(ops::silu(in[0])); }, {a}},
        {"softmax",
         [](In in) { return ops::mean(ops::mul(ops::softmax_rows(in[0]), in[1])); },
         {a, b}},
        {"bilinear_sample",
         [](In in) { return ops::mean(ops::bilinear_sample(in[0], in[1])); },
         {tex, uv}},
        {"dft2_magnitude", [](In in) { return ops::mean(ops::dft2_magnitude(in[0])); }, {tex}},
    };
    bool all = true;
    for (const auto& c : checks) {
        auto rep = grad_check(c.f, c.inputs);
        std::cout << c.name << ": " << (rep.pass ? "pass" : "FAIL") << " (max rel err "
                  << rep.max_rel_err << ")\n";
        all = all && rep.pass;
    }
    return all ? 0 : 1;
}

int cmd_dump_config(const RunConfig& cfg) {
    std::cout << to_json(cfg).dump(2) << "\n";
    return 0;
}

template <class T>
int dispatch(const std::string& cmd, const RunConfig& cfg, const CliArgs& args) {
    if (cmd == "gen-data") return cmd_gen_data(cfg);
    if (cmd == "warmup") return cmd_warmup<T>(cfg);
    if (cmd == "reconstruct") return cmd_reconstruct<T>(cfg, args.scene, args.checkpoint);
    if (cmd == "render") return cmd_render(cfg, args.scene);
    if (cmd == "refine") return cmd_refine<T>(cfg, args.scene, args.checkpoint);
    if (cmd == "finetune") return cmd_finetune<T>(cfg, args.checkpoint);
    if (cmd == "ablate-density") return cmd_ablate<T>(cfg, args.checkpoint);
    if (cmd == "evaluate") return cmd_evaluate<T>(cfg, args.checkpoint);
    if (cmd == "grad-check") return cmd_grad_check();
    if (cmd == "dump-config") return cmd_dump_config(cfg);
    std::cerr << "unknown command '" << cmd << "'\n";
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"texture-guided hand reconstruction pipeline"};
    app.require_subcommand(1);
    CliArgs args;
    app.add_option("--config", args.config_path, "JSON config file");
    app.add_option("--seed", args.seed, "override seed");
    app.add_option("--threads", args.threads, "thread budget (1 = deterministic)");
    app.add_option("--precision", args.precision, "f32 or f64");
    app.add_option("--out", args.out, "output directory");

    const std::vector<std::string> commands = {"gen-data", "warmup",         "reconstruct",
                                               "render",   "refine",        "finetune",
                                               "ablate-density", "evaluate", "grad-check",
                                               "dump-config"};
    std::map<std::string, CLI::App*> subs;
    for (const auto& c : commands) {
        auto* s = app.add_subcommand(c);
        s->fallthrough();
        s->add_option("--scene", args.scene, "scene directory");
        s->add_option("--checkpoint", args.checkpoint, "texture model checkpoint");
        s->add_option("--variant", args.variant, "fine-tune variant: H, H&M or H&M*");
        subs[c] = s;
    }
    CLI11_PARSE(app, argc, argv);

    try {
        const RunConfig cfg = effective_config(args);
        const std::string cmd = app.get_subcommands().front()->get_name();
        if (cfg.precision == "f64") return dispatch<double>(cmd, cfg, args);
        return dispatch<float>(cmd, cfg, args);
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
}
