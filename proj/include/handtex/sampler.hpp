#pragma once

#include <array>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "handtex/image.hpp"
#include "handtex/raster.hpp"
#include "handtex/rng.hpp"

namespace handtex {

// One UV-RGB observation: a surface point's texture coordinate paired with the
// image color seen there.
struct Sample {
    std::array<double, 2> uv;
    std::array<double, 3> rgb;
};

// Unordered observation set; consumers must be permutation-invariant.
struct SampleSet {
    std::vector<Sample> entries;

    std::size_t size() const { return entries.size(); }

    void validate() const {
        for (const auto& s : entries) {
            for (double u : s.uv)
                if (u < 0.0 || u > 1.0) throw std::invalid_argument("sample uv out of [0,1]");
            for (double c : s.rgb)
                if (c < 0.0 || c > 1.0) throw std::invalid_argument("sample color out of [0,1]");
        }
    }
};

// Sparse texture supervision: per-texel mean observed color plus a binary mask
// of which texels were hit.
struct SupervisionTarget {
    std::size_t height = 0, width = 0;
    std::vector<double> t_star;  // 3 * height * width, zero off-mask
    std::vector<double> mask;    // height * width, 0 or 1

    double density() const {
        double s = 0;
        for (double m : mask) s += m;
        return mask.empty() ? 0.0 : s / double(mask.size());
    }
};

// Back-project the image onto the posed mesh: one sample per covered pixel,
// uniformly subsampled to max_L when coverage exceeds the budget.
inline SampleSet extract_samples(const Image& image, const std::vector<Vec3>& verts,
                                 const std::vector<std::array<std::size_t, 3>>& faces,
                                 const std::vector<std::array<double, 6>>& face_uvs,
                                 const Camera& cam, std::size_t max_L, std::uint64_t seed) {
    auto buf = rasterize(verts, faces, face_uvs, cam, image.width, image.height);
    SampleSet set;
    for (const auto& f : buf.frags) {
        if (!f.covered()) continue;
        Sample s;
        s.uv = {std::clamp(f.uv[0], 0.0, 1.0), std::clamp(f.uv[1], 0.0, 1.0)};
        s.rgb = {std::clamp(image.at(0, f.row, f.col), 0.0, 1.0),
                 std::clamp(image.at(1, f.row, f.col), 0.0, 1.0),
                 std::clamp(image.at(2, f.row, f.col), 0.0, 1.0)};
        set.entries.push_back(s);
    }
    if (set.entries.size() > max_L) {
        Rng rng(seed);
        auto keep = sample_without_replacement(rng, set.entries.size(), max_L);
        SampleSet out;
        out.entries.reserve(max_L);
        for (std::size_t i : keep) out.entries.push_back(set.entries[i]);
        return out;
    }
    return set;
}

// Nearest-texel splat with arithmetic-mean aggregation; mask marks hit texels.
inline SupervisionTarget splat_to_uv(const SampleSet& samples, std::size_t height,
                                     std::size_t width) {
    SupervisionTarget t;
    t.height = height;
    t.width = width;
    t.t_star.assign(3 * height * width, 0.0);
    t.mask.assign(height * width, 0.0);
    std::vector<std::size_t> hits(height * width, 0);
    for (const auto& s : samples.entries) {
        // texel centers at (i + 0.5)/W: nearest texel of u is floor(u * W)
        const std::size_t x =
            std::min(width - 1, std::size_t(std::clamp(s.uv[0], 0.0, 1.0) * double(width)));
        const std::size_t y =
            std::min(height - 1, std::size_t(std::clamp(s.uv[1], 0.0, 1.0) * double(height)));
        const std::size_t pix = y * width + x;
        for (std::size_t ch = 0; ch < 3; ++ch)
            t.t_star[(ch * height + y) * width + x] += s.rgb[ch];
        ++hits[pix];
    }
    for (std::size_t pix = 0; pix < hits.size(); ++pix) {
        if (hits[pix] == 0) continue;
        t.mask[pix] = 1.0;
        for (std::size_t ch = 0; ch < 3; ++ch)
            t.t_star[ch * height * width + pix] /= double(hits[pix]);
    }
    return t;
}

// Collapses per-pixel samples to one sample per hit texel: mean color, texel
// center UV. Mirrors splat_to_uv's nearest-texel assignment, so the result
// carries exactly the information a density count in "visible UV pixels"
// refers to, and keeps the token sequence short for dense observations.
inline SampleSet aggregate_to_texels(const SampleSet& samples, std::size_t height,
                                     std::size_t width) {
    std::vector<std::array<double, 3>> acc(height * width, {0, 0, 0});
    std::vector<std::size_t> hits(height * width, 0);
    for (const auto& s : samples.entries) {
        const std::size_t x =
            std::min(width - 1, std::size_t(std::clamp(s.uv[0], 0.0, 1.0) * double(width)));
        const std::size_t y =
            std::min(height - 1, std::size_t(std::clamp(s.uv[1], 0.0, 1.0) * double(height)));
        const std::size_t pix = y * width + x;
        for (std::size_t ch = 0; ch < 3; ++ch) acc[pix][ch] += s.rgb[ch];
        ++hits[pix];
    }
    SampleSet out;
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x) {
            const std::size_t pix = y * width + x;
            if (hits[pix] == 0) continue;
            Sample s;
            s.uv = {(double(x) + 0.5) / double(width), (double(y) + 0.5) / double(height)};
            for (std::size_t ch = 0; ch < 3; ++ch) s.rgb[ch] = acc[pix][ch] / double(hits[pix]);
            out.entries.push_back(s);
        }
    return out;
}

// Uniform draw without replacement; n >= L returns the input unchanged.
inline SampleSet subsample(const SampleSet& samples, std::size_t n, std::uint64_t seed) {
    if (n >= samples.size()) return samples;
    Rng rng(seed);
    auto keep = sample_without_replacement(rng, samples.size(), n);
    SampleSet out;
    out.entries.reserve(n);
    for (std::size_t i : keep) out.entries.push_back(samples.entries[i]);
    return out;
}

inline void save_samples_csv(const SampleSet& samples, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_samples_csv: cannot open " + path);
    f << "u,v,r,g,b\n";
    f.precision(17);
    for (const auto& s : samples.entries)
        f << s.uv[0] << ',' << s.uv[1] << ',' << s.rgb[0] << ',' << s.rgb[1] << ',' << s.rgb[2]
          << '\n';
}

inline SampleSet load_samples_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_samples_csv: cannot open " + path);
    std::string line;
    std::getline(f, line);  // header
    SampleSet set;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        Sample s;
        char comma;
        ss >> s.uv[0] >> comma >> s.uv[1] >> comma >> s.rgb[0] >> comma >> s.rgb[1] >> comma >>
            s.rgb[2];
        if (!ss) throw std::runtime_error("load_samples_csv: malformed row in " + path);
        set.entries.push_back(s);
    }
    return set;
}

}  // namespace handtex
