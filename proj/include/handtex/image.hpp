#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace handtex {

// Planar RGB image, channel-major (3 x height x width), values in [0, 1].
struct Image {
    std::size_t height = 0, width = 0;
    std::vector<double> data;  // 3 * height * width

    Image() = default;
    Image(std::size_t h, std::size_t w, double fill = 0.0)
        : height(h), width(w), data(3 * h * w, fill) {}

    double& at(std::size_t ch, std::size_t row, std::size_t col) {
        return data[(ch * height + row) * width + col];
    }
    double at(std::size_t ch, std::size_t row, std::size_t col) const {
        return data[(ch * height + row) * width + col];
    }
};

inline std::uint8_t quantize8(double v) {
    const double c = std::clamp(v, 0.0, 1.0);
    return std::uint8_t(std::min(255.0, c * 255.0 + 0.5));
}

inline void save_ppm(const Image& img, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_ppm: cannot open " + path);
    f << "P6\n" << img.width << " " << img.height << "\n255\n";
    std::vector<std::uint8_t> row(img.width * 3);
    for (std::size_t r = 0; r < img.height; ++r) {
        for (std::size_t c = 0; c < img.width; ++c)
            for (std::size_t ch = 0; ch < 3; ++ch)
                row[c * 3 + ch] = quantize8(img.at(ch, r, c));
        f.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size()));
    }
    if (!f) throw std::runtime_error("save_ppm: write failed for " + path);
}

inline Image load_ppm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_ppm: cannot open " + path);
    std::string magic;
    std::size_t w = 0, h = 0, maxval = 0;
    f >> magic >> w >> h >> maxval;
    if (magic != "P6" || maxval != 255)
        throw std::runtime_error("load_ppm: unsupported format in " + path);
    f.get();  // single whitespace after header
    Image img(h, w);
    std::vector<std::uint8_t> row(w * 3);
    for (std::size_t r = 0; r < h; ++r) {
        f.read(reinterpret_cast<char*>(row.data()), std::streamsize(row.size()));
        if (!f) throw std::runtime_error("load_ppm: truncated file " + path);
        for (std::size_t c = 0; c < w; ++c)
            for (std::size_t ch = 0; ch < 3; ++ch) img.at(ch, r, c) = row[c * 3 + ch] / 255.0;
    }
    return img;
}

inline void save_pgm(const std::vector<double>& gray, std::size_t height, std::size_t width,
                     const std::string& path) {
    if (gray.size() != height * width) throw std::runtime_error("save_pgm: size mismatch");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_pgm: cannot open " + path);
    f << "P5\n" << width << " " << height << "\n255\n";
    std::vector<std::uint8_t> row(width);
    for (std::size_t r = 0; r < height; ++r) {
        for (std::size_t c = 0; c < width; ++c) row[c] = quantize8(gray[r * width + c]);
        f.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size()));
    }
}

}  // namespace handtex
