#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "handtex/lossmetrics.hpp"
#include "handtex/synth.hpp"
#include "handtex/texnet.hpp"
#include "handtex/train.hpp"

namespace handtex {

// Single source of truth for a run: model, training, loss and data settings
// plus the artifact plumbing (paths, seed, precision, thread budget).
struct RunConfig {
    TexModelConfig tex;
    TrainConfig train;
    LossConfig loss;
    DataConfig data;
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    std::string precision = "f32";  // f32 or f64
    std::string out_dir = "runs";
    std::string scenes_dir = "scenes";

    void validate() const {
        tex.validate();
        train.validate();
        loss.validate();
        data.validate();
        if (precision != "f32" && precision != "f64")
            throw std::invalid_argument("config: precision must be f32 or f64");
        if (threads == 0) throw std::invalid_argument("config: threads must be positive");
    }
};

inline nlohmann::json to_json(const RunConfig& c) {
    nlohmann::json j;
    j["tex"] = {{"embed_dim", c.tex.embed_dim},   {"pos_dim", c.tex.pos_dim},
                {"layers", c.tex.layers},         {"heads", c.tex.heads},
                {"query_grid", c.tex.query_grid}, {"upscales", c.tex.upscales},
                {"ffn_mult", c.tex.ffn_mult},     {"rff_sigma", c.tex.rff_sigma},
                {"seed", c.tex.seed}};
    j["train"] = {{"lr", c.train.lr},
                  {"lr_final", c.train.lr_final},
                  {"lr_warmup", c.train.lr_warmup},
                  {"target_heldout", c.train.target_heldout},
                  {"beta1", c.train.beta1},
                  {"beta2", c.train.beta2},
                  {"eps", c.train.eps},
                  {"steps", c.train.steps},
                  {"batch", c.train.batch},
                  {"seed", c.train.seed},
                  {"variant", c.train.variant},
                  {"sigma_rot", c.train.sigma_rot},
                  {"sigma_trans", c.train.sigma_trans},
                  {"sigma_curl", c.train.sigma_curl},
                  {"eval_every", c.train.eval_every},
                  {"heldout_scenes", c.train.heldout_scenes},
                  {"train_densities", c.train.train_densities}};
    j["loss"] = {{"lambda_freq", c.loss.lambda_freq},
                 {"lambda_tex", c.loss.lambda_tex},
                 {"w_keypoint", c.loss.w_keypoint},
                 {"w_param", c.loss.w_param}};
    j["data"] = {{"image_size", c.data.image_size},
                 {"texture_size", c.data.texture_size},
                 {"max_curl", c.data.max_curl},
                 {"rot_range", c.data.rot_range},
                 {"trans_range", c.data.trans_range},
                 {"color_range", c.data.color_range},
                 {"tex_coarse_amp", c.data.tex_coarse_amp},
                 {"tex_fine_amp", c.data.tex_fine_amp},
                 {"cam_jitter", c.data.cam_jitter},
                 {"train_scenes", c.data.train_scenes},
                 {"eval_scenes", c.data.eval_scenes},
                 {"max_samples", c.data.max_samples}};
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["precision"] = c.precision;
    j["out_dir"] = c.out_dir;
    j["scenes_dir"] = c.scenes_dir;
    return j;
}

inline RunConfig from_json(const nlohmann::json& j) {
    RunConfig c;
    auto get = [](const nlohmann::json& obj, const char* key, auto& field) {
        if (obj.contains(key)) field = obj[key].template get<std::decay_t<decltype(field)>>();
    };
    if (j.contains("tex")) {
        const auto& t = j["tex"];
        get(t, "embed_dim", c.tex.embed_dim);
        get(t, "pos_dim", c.tex.pos_dim);
        get(t, "layers", c.tex.layers);
        get(t, "heads", c.tex.heads);
        get(t, "query_grid", c.tex.query_grid);
        get(t, "upscales", c.tex.upscales);
        get(t, "ffn_mult", c.tex.ffn_mult);
        get(t, "rff_sigma", c.tex.rff_sigma);
        get(t, "seed", c.tex.seed);
    }
    if (j.contains("train")) {
        const auto& t = j["train"];
        get(t, "lr", c.train.lr);
        get(t, "lr_final", c.train.lr_final);
        get(t, "lr_warmup", c.train.lr_warmup);
        get(t, "target_heldout", c.train.target_heldout);
        get(t, "beta1", c.train.beta1);
        get(t, "beta2", c.train.beta2);
        get(t, "eps", c.train.eps);
        get(t, "steps", c.train.steps);
        get(t, "batch", c.train.batch);
        get(t, "seed", c.train.seed);
        get(t, "variant", c.train.variant);
        get(t, "sigma_rot", c.train.sigma_rot);
        get(t, "sigma_trans", c.train.sigma_trans);
        get(t, "sigma_curl", c.train.sigma_curl);
        get(t, "eval_every", c.train.eval_every);
        get(t, "heldout_scenes", c.train.heldout_scenes);
        get(t, "train_densities", c.train.train_densities);
    }
    if (j.contains("loss")) {
        const auto& t = j["loss"];
        get(t, "lambda_freq", c.loss.lambda_freq);
        get(t, "lambda_tex", c.loss.lambda_tex);
        get(t, "w_keypoint", c.loss.w_keypoint);
        get(t, "w_param", c.loss.w_param);
    }
    if (j.contains("data")) {
        const auto& t = j["data"];
        get(t, "image_size", c.data.image_size);
        get(t, "texture_size", c.data.texture_size);
        get(t, "max_curl", c.data.max_curl);
        get(t, "rot_range", c.data.rot_range);
        get(t, "trans_range", c.data.trans_range);
        get(t, "color_range", c.data.color_range);
        get(t, "tex_coarse_amp", c.data.tex_coarse_amp);
        get(t, "tex_fine_amp", c.data.tex_fine_amp);
        get(t, "cam_jitter", c.data.cam_jitter);
        get(t, "train_scenes", c.data.train_scenes);
        get(t, "eval_scenes", c.data.eval_scenes);
        get(t, "max_samples", c.data.max_samples);
    }
    get(j, "seed", c.seed);
    get(j, "threads", c.threads);
    get(j, "precision", c.precision);
    get(j, "out_dir", c.out_dir);
    get(j, "scenes_dir", c.scenes_dir);
    return c;
}

inline void save_config(const RunConfig& c, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("config: cannot open " + path);
    f << to_json(c).dump(2) << "\n";
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("config: cannot open " + path);
    nlohmann::json j;
    f >> j;
    return from_json(j);
}

// Content hash of the effective configuration; collision-free experiment ids.
inline std::string run_id(const RunConfig& c) {
    const std::string canon = to_json(c).dump();
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char ch : canon) {
        h ^= ch;
        h *= 0x100000001B3ull;
    }
    std::ostringstream ss;
    ss << std::hex << h;
    return ss.str();
}

}  // namespace handtex
