#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

namespace handtex::fft {

inline bool is_pow2(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

// In-place radix-2 Cooley-Tukey. sign = -1 forward, +1 adjoint (unscaled).
template <class T>
void fft_pow2(std::vector<std::complex<T>>& a, int sign) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const T ang = T(sign) * T(2) * T(M_PI) / T(len);
        const std::complex<T> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<T> w(1);
            for (std::size_t k = 0; k < len / 2; ++k) {
                std::complex<T> u = a[i + k];
                std::complex<T> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

template <class T>
void dft_direct(std::vector<std::complex<T>>& a, int sign) {
    const std::size_t n = a.size();
    std::vector<std::complex<T>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<T> acc(0);
        for (std::size_t j = 0; j < n; ++j) {
            const T ang = T(sign) * T(2) * T(M_PI) * T(k) * T(j) / T(n);
            acc += a[j] * std::complex<T>(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    a = std::move(out);
}

template <class T>
void transform_1d(std::vector<std::complex<T>>& a, int sign) {
    if (a.size() <= 1) return;
    if (is_pow2(a.size()))
        fft_pow2(a, sign);
    else
        dft_direct(a, sign);
}

// Unscaled 2-D DFT over an H x W complex grid (row-major). sign = -1 is the
// forward transform; sign = +1 applies the conjugate (adjoint) transform.
template <class T>
void transform_2d(std::vector<std::complex<T>>& grid, std::size_t h, std::size_t w, int sign) {
    std::vector<std::complex<T>> line;
    for (std::size_t r = 0; r < h; ++r) {
        line.assign(grid.begin() + r * w, grid.begin() + (r + 1) * w);
        transform_1d(line, sign);
        std::copy(line.begin(), line.end(), grid.begin() + r * w);
    }
    line.resize(h);
    for (std::size_t c = 0; c < w; ++c) {
        for (std::size_t r = 0; r < h; ++r) line[r] = grid[r * w + c];
        transform_1d(line, sign);
        for (std::size_t r = 0; r < h; ++r) grid[r * w + c] = line[r];
    }
}

// Reference O(N^2 M^2) evaluation of one output bin; kept dumb on purpose so
// it can serve as an oracle for the fast path.
template <class T>
std::complex<T> dft2_bin_naive(const std::vector<T>& x, std::size_t h, std::size_t w,
                               std::size_t kr, std::size_t kc) {
    std::complex<T> acc(0);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) {
            const T ang = -T(2) * T(M_PI) * (T(kr) * T(r) / T(h) + T(kc) * T(c) / T(w));
            acc += x[r * w + c] * std::complex<T>(std::cos(ang), std::sin(ang));
        }
    return acc;
}

}  // namespace handtex::fft
