#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "handtex/lossmetrics.hpp"
#include "handtex/render.hpp"
#include "handtex/sampler.hpp"
#include "handtex/synth.hpp"
#include "handtex/texnet.hpp"

namespace handtex {

struct TrainConfig {
    double lr = 1.2e-3;
    double lr_final = 5e-5;       // cosine-decay floor; negative keeps lr constant
    std::size_t lr_warmup = 100;  // linear ramp-in steps before the decay
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    double target_heldout = 0;  // early stop once held-out loss dips below; 0 disables
    std::size_t steps = 1200;
    std::size_t batch = 2;
    std::uint64_t seed = 1;
    std::string variant = "H";  // H, H&M, or H&M*
    double sigma_rot = 0.02;    // simulated estimator error, radians
    double sigma_trans = 0.5;   // model units
    double sigma_curl = 0.05;   // radians
    std::size_t eval_every = 100;
    std::size_t heldout_scenes = 8;
    std::vector<std::size_t> train_densities = {200, 500, 2000};

    void validate() const {
        if (lr < 0) throw std::invalid_argument("train config: lr must be >= 0");
        if (batch == 0) throw std::invalid_argument("train config: batch must be positive");
        if (variant != "H" && variant != "H&M" && variant != "H&M*")
            throw std::invalid_argument("train config: unknown variant '" + variant + "'");
    }
};

// ---------------------------------------------------------------------------
// optimizer
// ---------------------------------------------------------------------------

// Adam over a fixed parameter registry. A zero gradient leaves parameters
// bit-identical on a fresh state.
template <class T>
class Adam {
public:
    Adam(double lr, double b1 = 0.9, double b2 = 0.999, double eps = 1e-8)
        : lr_(lr), b1_(b1), b2_(b2), eps_(eps) {}

    void step(std::vector<std::pair<std::string, Tensor<T>*>>& params) {
        if (m_.empty()) {
            for (auto& [name, t] : params) {
                m_.emplace_back(t->size(), T(0));
                v_.emplace_back(t->size(), T(0));
            }
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(b1_, double(t_));
        const double bc2 = 1.0 - std::pow(b2_, double(t_));
        for (std::size_t p = 0; p < params.size(); ++p) {
            auto& t = *params[p].second;
            const auto& g = t.grad();
            auto& vals = t.values();
            for (std::size_t i = 0; i < vals.size(); ++i) {
                m_[p][i] = T(b1_) * m_[p][i] + T(1 - b1_) * g[i];
                v_[p][i] = T(b2_) * v_[p][i] + T(1 - b2_) * g[i] * g[i];
                const double mh = double(m_[p][i]) / bc1;
                const double vh = double(v_[p][i]) / bc2;
                vals[i] -= T(lr_ * mh / (std::sqrt(vh) + eps_));
            }
        }
    }

    double lr() const { return lr_; }
    void set_lr(double lr) { lr_ = lr; }

private:
    double lr_, b1_, b2_, eps_;
    std::size_t t_ = 0;
    std::vector<std::vector<T>> m_, v_;
};

template <class T>
void zero_grads(std::vector<std::pair<std::string, Tensor<T>*>>& params) {
    for (auto& [name, t] : params) t->zero_grad();
}

// ---------------------------------------------------------------------------
// metrics CSV
// ---------------------------------------------------------------------------

class MetricsWriter {
public:
    MetricsWriter(const std::string& path, const std::string& run_id)
        : f_(path), run_id_(run_id) {
        if (!f_) throw std::runtime_error("metrics: cannot open " + path);
        f_ << "run_id,step,split,l1,ssim,pck05,pck10,pck15\n";
    }

    void row(std::size_t step, const std::string& split, const MetricReport& m) {
        f_.precision(10);
        f_ << run_id_ << ',' << step << ',' << split << ',' << m.l1 << ',' << m.ssim << ','
           << m.pck05 << ',' << m.pck10 << ',' << m.pck15 << '\n';
        f_.flush();
    }

private:
    std::ofstream f_;
    std::string run_id_;
};

// ---------------------------------------------------------------------------
// warm-up training of the texture model
// ---------------------------------------------------------------------------

inline std::uint64_t scene_seed(std::uint64_t base, std::size_t split, std::size_t idx) {
    return mix_seed(mix_seed(base, 1000 + split), idx);
}

inline PoseParams perturb_pose(const PoseParams& pose, Rng& rng, const TrainConfig& cfg) {
    PoseParams out = pose;
    for (auto& r : out.global_rotation) r += rng.normal(0.0, cfg.sigma_rot);
    for (auto& t : out.translation) t += rng.normal(0.0, cfg.sigma_trans);
    for (auto& c : out.curls) c = std::clamp(c + rng.normal(0.0, cfg.sigma_curl), 0.0, M_PI);
    return out;
}

struct WarmupResult {
    std::vector<double> loss_curve;
    std::vector<std::pair<std::size_t, double>> heldout_curve;  // (step, loss)
    double heldout_initial = 0, heldout_final = 0;
    bool diverged = false;
    std::string diagnostic;
};

// One observation task: sparse input samples plus the denser splat target the
// model should complete.
struct CompletionTask {
    SampleSet input;
    SupervisionTarget target;
};

template <class T>
CompletionTask make_task(const SceneSample& scene, const TriMesh& mesh, const DataConfig& dcfg,
                         const TrainConfig& tcfg, std::uint64_t seed, bool perturb) {
    Rng rng(seed);
    PoseParams pose = scene.gt_pose;
    if (perturb) pose = perturb_pose(pose, rng, tcfg);
    auto posed = apply_pose_values(mesh, pose);
    auto full = extract_samples(scene.image, posed, mesh.faces, mesh.face_uvs, scene.camera,
                                dcfg.max_samples, rng.index(std::uint64_t(1) << 62));
    CompletionTask task;
    task.target = splat_to_uv(full, dcfg.texture_size, dcfg.texture_size);
    const std::size_t density =
        tcfg.train_densities[rng.index(tcfg.train_densities.size())];
    // densities count visible UV texels, so observations collapse to one
    // token per hit texel before subsampling
    task.input = subsample(aggregate_to_texels(full, dcfg.texture_size, dcfg.texture_size),
                           density, rng.index(std::uint64_t(1) << 62));
    return task;
}

template <class T>
double heldout_weak_loss(TexModelParams<T>& params, const std::vector<CompletionTask>& tasks,
                         const LossConfig& lcfg) {
    double acc = 0;
    for (const auto& task : tasks) {
        auto pred = tex_forward(task.input, params);
        acc += double(weak_loss(pred, task.target, lcfg).total.item());
    }
    return tasks.empty() ? 0.0 : acc / double(tasks.size());
}

template <class T>
WarmupResult warmup_train(TexModelParams<T>& params, const TriMesh& mesh, const DataConfig& dcfg,
                          const TrainConfig& tcfg, const LossConfig& lcfg) {
    tcfg.validate();
    dcfg.validate();
    WarmupResult res;
    Rng rng(mix_seed(tcfg.seed, 7001));

    // fixed held-out completion tasks from the eval split
    std::vector<CompletionTask> heldout;
    for (std::size_t i = 0; i < tcfg.heldout_scenes; ++i) {
        auto scene = gen_scene(scene_seed(tcfg.seed, 1, i), mesh, dcfg);
        heldout.push_back(
            make_task<T>(scene, mesh, dcfg, tcfg, mix_seed(tcfg.seed, 8000 + i), true));
    }
    res.heldout_initial = heldout_weak_loss(params, heldout, lcfg);
    res.heldout_curve.push_back({0, res.heldout_initial});

    auto registry = params.trainable();
    for (auto& [name, t] : registry) t->set_requires_grad(true);
    Adam<T> opt(tcfg.lr, tcfg.beta1, tcfg.beta2, tcfg.eps);

    double initial_loss = -1;
    std::size_t high_streak = 0;
    for (std::size_t step = 0; step < tcfg.steps; ++step) {
        zero_grads(registry);
        double step_loss = 0;
        for (std::size_t b = 0; b < tcfg.batch; ++b) {
            const std::size_t idx = std::size_t(rng.index(dcfg.train_scenes));
            auto scene = gen_scene(scene_seed(tcfg.seed, 0, idx), mesh, dcfg);
            auto task = make_task<T>(scene, mesh, dcfg, tcfg,
                                     mix_seed(tcfg.seed, 90000 + step * tcfg.batch + b), true);
            TapeScope<T> scope;
            auto pred = tex_forward(task.input, params);
            auto loss = ops::scale(weak_loss(pred, task.target, lcfg).total,
                                   T(1.0 / double(tcfg.batch)));
            step_loss += double(loss.item()) * double(tcfg.batch);
            scope.backward(loss);
        }
        step_loss /= double(tcfg.batch);
        res.loss_curve.push_back(step_loss);
        if (initial_loss < 0) initial_loss = step_loss;
        high_streak = step_loss > 10.0 * initial_loss ? high_streak + 1 : 0;
        if (high_streak >= 100) {
            res.diverged = true;
            res.diagnostic = "warm-up diverged: loss exceeded 10x its initial value for 100 "
                             "consecutive steps at step " +
                             std::to_string(step);
            break;
        }
        if (step < tcfg.lr_warmup) {
            opt.set_lr(tcfg.lr * double(step + 1) / double(tcfg.lr_warmup));
        } else if (tcfg.lr_final >= 0) {
            const double frac = double(step - tcfg.lr_warmup) /
                                double(std::max<std::size_t>(1, tcfg.steps - tcfg.lr_warmup));
            opt.set_lr(tcfg.lr_final +
                       (tcfg.lr - tcfg.lr_final) * 0.5 * (1.0 + std::cos(M_PI * frac)));
        }
        opt.step(registry);
        if ((step + 1) % tcfg.eval_every == 0 || step + 1 == tcfg.steps) {
            const double held = heldout_weak_loss(params, heldout, lcfg);
            res.heldout_curve.push_back({step + 1, held});
            if (tcfg.target_heldout > 0 && held <= tcfg.target_heldout) break;
        }
    }
    res.heldout_final = res.heldout_curve.back().second;
    for (auto& [name, t] : registry) t->set_requires_grad(false);
    return res;
}

// ---------------------------------------------------------------------------
// analysis-by-synthesis pose refinement
// ---------------------------------------------------------------------------

struct RefineResult {
    PoseParams refined;
    std::vector<double> loss_trace;
    bool aborted = false;
    std::string diagnostic;
};

template <class T>
RefineResult refine_pose(const Image& image, const PoseParams& init, TexModelParams<T>& tex,
                         const TriMesh& mesh, const Camera& cam, std::size_t steps, double lr,
                         std::size_t max_samples = 4096, double lambda_tex = 1.0) {
    RefineResult res;
    res.refined = init;
    PoseTensors<T> pt = PoseTensors<T>::from(init, true);
    std::vector<std::pair<std::string, Tensor<T>*>> registry = {
        {"rotation", &pt.rotation}, {"translation", &pt.translation}, {"curls", &pt.curls}};
    Adam<T> opt(lr);

    double best = -1;
    for (std::size_t step = 0; step < steps; ++step) {
        const PoseParams cur = pt.to_params();
        auto posed_vals = apply_pose_values(mesh, cur);
        auto frags = rasterize(posed_vals, mesh.faces, mesh.face_uvs, cam, image.width,
                               image.height);
        if (frags.coverage_count() == 0) {
            if (step == 0) {
                res.aborted = true;
                res.diagnostic = "refine_pose: zero coverage at initialization";
                return res;
            }
            break;  // drifted out of frame; keep best pose so far
        }
        auto samples = extract_samples(image, posed_vals, mesh.faces, mesh.face_uvs, cam,
                                       max_samples, mix_seed(1234, step));
        auto predicted = tex_forward(samples, tex);  // texture frozen, no tape
        Tensor<T> tex_const(predicted.shape(), predicted.values());

        zero_grads(registry);
        double loss_val;
        {
            TapeScope<T> scope;
            auto posed_t = apply_pose(mesh, pt);
            auto loss = ops::scale(photometric_loss_diff(image, posed_t, mesh.faces, mesh.face_uvs,
                                                         tex_const, cam, frags),
                                   T(lambda_tex));
            loss_val = double(loss.item());
            scope.backward(loss);
        }
        res.loss_trace.push_back(loss_val);
        if (best < 0) {
            best = loss_val;  // step 0 evaluates the init pose itself
        } else if (loss_val < best) {
            best = loss_val;
            res.refined = cur;
        }
        opt.step(registry);
        // joint limits
        auto& curls = pt.curls.values();
        for (auto& c : curls) c = std::clamp(c, T(0), T(M_PI));
    }
    return res;
}

// ---------------------------------------------------------------------------
// toy pose estimator head
// ---------------------------------------------------------------------------

template <class T>
struct ToyHead {
    Tensor<T> c1w, c1b, c2w, c2b, f1w, f1b, f2w, f2b;
    double trans_scale = 10.0;
    double max_curl = M_PI / 2;

    static ToyHead init(std::uint64_t seed) {
        Rng rng(seed);
        ToyHead h;
        auto w = [&](Shape sh, double fan_in) {
            return Tensor<T>(sh, rng.template normal_vec<T>(shape_numel(sh), 1.0 / std::sqrt(fan_in)),
                             true);
        };
        h.c1w = w({8, 3, 3, 3}, 27);
        h.c1b = Tensor<T>::zeros({8}, true);
        h.c2w = w({16, 8, 3, 3}, 72);
        h.c2b = Tensor<T>::zeros({16}, true);
        h.f1w = w({1024, 64}, 1024);
        h.f1b = Tensor<T>::zeros({64}, true);
        h.f2w = w({64, 11}, 64);
        h.f2b = Tensor<T>::zeros({11}, true);
        return h;
    }

    std::vector<std::pair<std::string, Tensor<T>*>> trainable() {
        return {{"head.c1w", &c1w}, {"head.c1b", &c1b}, {"head.c2w", &c2w}, {"head.c2b", &c2b},
                {"head.f1w", &f1w}, {"head.f1b", &f1b}, {"head.f2w", &f2w}, {"head.f2b", &f2b}};
    }

    // image must be 3 x 128 x 128
    Tensor<T> forward_raw(const Tensor<T>& img) const {
        using namespace ops;
        auto x = silu(avg_pool2d(conv2d(img, c1w, c1b, 1), 4));   // 8 x 32 x 32
        x = silu(avg_pool2d(conv2d(x, c2w, c2b, 1), 4));          // 16 x 8 x 8
        x = silu(linear(reshape(x, {1, 1024}), f1w, f1b));
        return linear(x, f2w, f2b);  // 1 x 11
    }

    PoseTensors<T> forward(const Tensor<T>& img) const {
        using namespace ops;
        Tensor<T> o = forward_raw(img);
        PoseTensors<T> pt;
        pt.rotation = reshape(slice_cols(o, 0, 3), {3});
        pt.translation = reshape(scale(slice_cols(o, 3, 6), T(trans_scale)), {3});
        pt.curls = reshape(scale(sigmoid(slice_cols(o, 6, 11)), T(max_curl)), {5});
        return pt;
    }
};

// Differentiable pinhole projection of a set of world points (N x 3 -> N x 2).
template <class T>
Tensor<T> project_diff(const Tensor<T>& points, const Camera& cam) {
    using namespace ops;
    std::vector<T> rt(9);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) rt[j * 3 + i] = T(cam.rotation[i * 3 + j]);
    Tensor<T> cam_pts = add_rowvec(
        matmul(points, Tensor<T>({3, 3}, std::move(rt))),
        Tensor<T>({3}, {T(cam.translation[0]), T(cam.translation[1]), T(cam.translation[2])}));
    Tensor<T> inv_z = div(Tensor<T>({1}, {T(1)}), slice_cols(cam_pts, 2, 3));
    Tensor<T> sx = add_const(mul(scale(slice_cols(cam_pts, 0, 1), T(cam.fx)), inv_z), T(cam.cx));
    Tensor<T> sy = add_const(mul(scale(slice_cols(cam_pts, 1, 2), T(cam.fy)), inv_z), T(cam.cy));
    return concat_cols(std::vector<Tensor<T>>{sx, sy});
}

// ---------------------------------------------------------------------------
// fine-tuning variants (head only / head+texture / head+texture from scratch)
// ---------------------------------------------------------------------------

struct VariantResult {
    std::string variant;
    MetricReport metrics;
    std::uint64_t tex_checksum_before = 0, tex_checksum_after = 0;
    std::vector<double> loss_curve;
};

template <class T>
MetricReport evaluate_head(ToyHead<T>& head, const TriMesh& mesh, const DataConfig& dcfg,
                           std::uint64_t seed, std::size_t n_scenes) {
    MetricReport rep;
    std::size_t used = 0;
    for (std::size_t i = 0; i < n_scenes; ++i) {
        auto scene = gen_scene(scene_seed(seed, 1, i), mesh, dcfg);
        Tensor<T> img({3, scene.image.height, scene.image.width},
                      std::vector<T>(scene.image.data.begin(), scene.image.data.end()));
        PoseParams pred = head.forward(img).to_params();
        auto posed = apply_pose_values(mesh, pred);
        std::vector<Vec3> kp;
        for (std::size_t vid : mesh.keypoint_vertex_ids) kp.push_back(posed[vid]);
        auto proj = project(kp, scene.camera);
        std::vector<std::array<double, 2>> pred_kp;
        for (const auto& p : proj) pred_kp.push_back({p.x, p.y});
        auto p = pck(pred_kp, scene.gt_keypoints_2d, scene.bbox_size);
        rep.pck05 += p[0];
        rep.pck10 += p[1];
        rep.pck15 += p[2];
        ++used;
    }
    if (used) {
        rep.pck05 /= double(used);
        rep.pck10 /= double(used);
        rep.pck15 /= double(used);
    }
    return rep;
}

template <class T>
VariantResult finetune_variant(ToyHead<T>& head, TexModelParams<T>& tex, const TriMesh& mesh,
                               const DataConfig& dcfg, const TrainConfig& tcfg,
                               const LossConfig& lcfg) {
    tcfg.validate();
    VariantResult res;
    res.variant = tcfg.variant;
    res.tex_checksum_before = param_checksum(tex);

    const bool train_tex = tcfg.variant != "H";
    auto registry = head.trainable();
    if (train_tex) {
        auto texreg = tex.trainable();
        registry.insert(registry.end(), texreg.begin(), texreg.end());
    }
    for (auto& [name, t] : registry) t->set_requires_grad(true);
    auto texreg_all = tex.trainable();
    if (!train_tex)
        for (auto& [name, t] : texreg_all) t->set_requires_grad(false);
    Adam<T> opt(tcfg.lr, tcfg.beta1, tcfg.beta2, tcfg.eps);

    std::vector<std::size_t> kp_ids(mesh.keypoint_vertex_ids.begin(),
                                    mesh.keypoint_vertex_ids.end());
    Rng rng(mix_seed(tcfg.seed, 5005));
    for (std::size_t step = 0; step < tcfg.steps; ++step) {
        zero_grads(registry);
        double step_loss = 0;
        for (std::size_t b = 0; b < tcfg.batch; ++b) {
            const std::size_t idx = std::size_t(rng.index(dcfg.train_scenes));
            auto scene = gen_scene(scene_seed(tcfg.seed, 0, idx), mesh, dcfg);
            Tensor<T> img({3, scene.image.height, scene.image.width},
                          std::vector<T>(scene.image.data.begin(), scene.image.data.end()));

            TapeScope<T> scope;
            PoseTensors<T> pt = head.forward(img);
            Tensor<T> posed = apply_pose(mesh, pt);

            // base loss: keypoint L1 + pose parameter L2
            using namespace ops;
            Tensor<T> pred_kp = project_diff(gather_rows(posed, kp_ids), scene.camera);
            std::vector<T> gt_kp;
            for (const auto& k : scene.gt_keypoints_2d) {
                gt_kp.push_back(T(k[0]));
                gt_kp.push_back(T(k[1]));
            }
            Tensor<T> kp_loss = mean(abs(sub(pred_kp, Tensor<T>({kp_ids.size(), 2}, gt_kp))));
            // normalize keypoint error by bbox size so the loss is scale-free
            kp_loss = scale(kp_loss, T(1.0 / scene.bbox_size));
            std::vector<T> gt_vec;
            for (double v : scene.gt_pose.global_rotation) gt_vec.push_back(T(v));
            for (double v : scene.gt_pose.translation) gt_vec.push_back(T(v * 0.1));
            for (double v : scene.gt_pose.curls) gt_vec.push_back(T(v));
            Tensor<T> pred_vec = concat_cols(std::vector<Tensor<T>>{
                reshape(pt.rotation, {1, 3}), reshape(scale(pt.translation, T(0.1)), {1, 3}),
                reshape(pt.curls, {1, 5})});
            Tensor<T> l2 = mean(mul(sub(pred_vec, Tensor<T>({1, 11}, gt_vec)),
                                    sub(pred_vec, Tensor<T>({1, 11}, gt_vec))));
            Tensor<T> base = add(scale(kp_loss, T(lcfg.w_keypoint)), scale(l2, T(lcfg.w_param)));

            // photometric term through the predicted pose and texture model
            Tensor<T> total = base;
            auto posed_vals = apply_pose_values(mesh, pt.to_params());
            auto frags = rasterize(posed_vals, mesh.faces, mesh.face_uvs, scene.camera,
                                   scene.image.width, scene.image.height);
            if (lcfg.lambda_tex > 0 && frags.coverage_count() > 0) {
                auto samples =
                    extract_samples(scene.image, posed_vals, mesh.faces, mesh.face_uvs,
                                    scene.camera, 512, mix_seed(tcfg.seed, 40000 + step));
                Tensor<T> predicted_tex = tex_forward(samples, tex);
                Tensor<T> photo = photometric_loss_diff(scene.image, posed, mesh.faces,
                                                        mesh.face_uvs, predicted_tex,
                                                        scene.camera, frags);
                total = total_loss(base, photo, lcfg);
            }
            total = scale(total, T(1.0 / double(tcfg.batch)));
            step_loss += double(total.item()) * double(tcfg.batch);
            scope.backward(total);
        }
        res.loss_curve.push_back(step_loss / double(tcfg.batch));
        opt.step(registry);
    }
    for (auto& [name, t] : registry) t->set_requires_grad(false);

    res.tex_checksum_after = param_checksum(tex);
    res.metrics = evaluate_head(head, mesh, dcfg, tcfg.seed, dcfg.eval_scenes);
    return res;
}

// ---------------------------------------------------------------------------
// density ablation
// ---------------------------------------------------------------------------

struct DensityRow {
    std::string label;  // "200", ..., "ALL"
    std::size_t density = 0;  // 0 means ALL
    double l1 = 0;      // 0-255
    double ssim = 0;
};

template <class T>
std::vector<DensityRow> density_ablation(TexModelParams<T>& params, const TriMesh& mesh,
                                         const DataConfig& dcfg,
                                         const std::vector<std::size_t>& densities,
                                         std::uint64_t seed, std::size_t n_scenes) {
    // extraction per scene is shared across rungs
    std::vector<SampleSet> all_samples;
    std::vector<const SceneSample*> scenes;
    std::vector<SceneSample> storage;
    storage.reserve(n_scenes);
    for (std::size_t i = 0; i < n_scenes; ++i) {
        storage.push_back(gen_scene(scene_seed(seed, 1, i), mesh, dcfg));
        const auto& scene = storage.back();
        auto posed = apply_pose_values(mesh, scene.gt_pose);
        // densities are counted in visible UV pixels, so collapse the raw
        // per-image-pixel samples to texel tokens before the rungs subsample
        all_samples.push_back(aggregate_to_texels(
            extract_samples(scene.image, posed, mesh.faces, mesh.face_uvs, scene.camera,
                            dcfg.max_samples, mix_seed(seed, 60000 + i)),
            dcfg.texture_size, dcfg.texture_size));
    }
    std::vector<DensityRow> table;
    for (std::size_t d : densities) {
        DensityRow row;
        row.density = d;
        row.label = d == 0 ? "ALL" : std::to_string(d);
        for (std::size_t i = 0; i < n_scenes; ++i) {
            auto input = d == 0 ? all_samples[i]
                                : subsample(all_samples[i], d, mix_seed(seed, 70000 + i));
            auto pred = tex_forward(input, params);
            TextureMap predicted(dcfg.texture_size, dcfg.texture_size);
            for (std::size_t k = 0; k < pred.size(); ++k)
                predicted.data[k] = double(pred.values()[k]);
            row.l1 += l1_255(predicted, storage[i].gt_texture);
            row.ssim += ssim(predicted, storage[i].gt_texture);
        }
        row.l1 /= double(n_scenes);
        row.ssim /= double(n_scenes);
        table.push_back(row);
    }
    return table;
}

}  // namespace handtex
