#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "handtex/fft.hpp"
#include "handtex/tensor.hpp"

namespace handtex::ops {

using detail::record_op;

// ---------------------------------------------------------------------------
// elementwise binary (shapes must match, or either operand may be scalar)
// ---------------------------------------------------------------------------

namespace detail2 {

template <class T>
inline void binary_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op, Shape& out,
                         bool& a_scalar, bool& b_scalar) {
    a_scalar = a.size() == 1;
    b_scalar = b.size() == 1;
    if (a.shape() == b.shape()) {
        out = a.shape();
        a_scalar = b_scalar = false;
    } else if (b_scalar) {
        out = a.shape();
    } else if (a_scalar) {
        out = b.shape();
    } else {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                    " vs " + shape_str(b.shape()));
    }
}

}  // namespace detail2

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    Shape sh;
    bool as, bs;
    detail2::binary_shape(a, b, "add", sh, as, bs);
    const auto &av = a.values(), &bv = b.values();
    std::vector<T> out(shape_numel(sh));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[as ? 0 : i] + bv[bs ? 0 : i];
    Tensor<T> o(sh, std::move(out));
    record_op(
        o, a.requires_grad() || b.requires_grad(),
        [ad = a.data(), bd = b.data(), od = o.data(), as, bs]() {
            const auto& g = od->g;
            if (ad->requires_grad) {
                ad->ensure_grad();
                for (std::size_t i = 0; i < g.size(); ++i) ad->g[as ? 0 : i] += g[i];
            }
            if (bd->requires_grad) {
                bd->ensure_grad();
                for (std::size_t i = 0; i < g.size(); ++i) bd->g[bs ? 0 : i] += g[i];
            }
        },
        "add");
    return o;
}

template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    Shape sh;
    bool as, bs;
    detail2::binary_shape(a, b, "sub", sh, as, bs);
    const auto &av = a.values(), &bv = b.values();
    std::vector<T> out(shape_numel(sh));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[as ? 0 : i] - bv[bs ? 0 : i];
    Tensor<T> o(sh, std::move(out));
    record_op(
        o, a.requires_grad() || b.requires_grad(),
        [ad = a.data(), bd = b.data(), od = o.data(), as, bs]() {
            const auto& g = od->g;
            if (ad->requires_grad) {
                ad->ensure_grad();
                for (std::size_t i = 0; i < g.size(); ++i) ad->g[as ? 0 : i] += g[i];
            }
            if (bd->requires_grad) {
                bd->ensure_grad();
                for (std::size_t i = 0; i < g.size(); ++i) bd->g[bs ? 0 : i] -= g[i];
            }
        },
        "sub");
    return o;
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    Shape sh;
    bool as, bs;
    detail2::binary_shape(a, b, "mul", sh, as, bs);
    const auto &av = a.values(), &bv = b.values();
    std::vector<T> out(shape_numel(sh));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[as ? 0 : i] * bv[bs ? 0 : i];
    Tensor<T> o(sh, std::move(out));
    record_op(
        o, a.requires_grad() || b.requires_grad(),
        [ad = a.data(), bd = b.data(), od = o.data(), as, bs]() {
            const auto& g = od->g;
            if (ad->requires_grad) {
                ad->ensure_grad();
                for (std::size_t i = 0; i < g.size(); ++i)
                    ad->g[as ? 0 : i] += g[i] * bd->v[bs ? 0 : i];
            }
            if (bd->requires_grad) {
                bd->ensure_grad();
                for (std::size_t i = 0; i < g.size(); ++i)
                    bd->g[bs ? 0 : i] += g[i] * ad->v[as ? 0 : i];
            }
        },
        "mul");
    return o;
}

template <class T>
Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b) {
    Shape sh;
    bool as, bs;
    detail2::binary_shape(a, b, "div", sh, as, bs);
    const auto &av = a.values(), &bv = b.values();
    std::vector<T> out(shape_numel(sh));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[as ? 0 : i] / bv[bs ? 0 : i];
    Tensor<T> o(sh, std::move(out));
    record_op(
        o, a.requires_grad() || b.requires_grad(),
        [ad = a.data(), bd = b.data(), od = o.data(), as, bs]() {
            const auto& g = od->g;
            if (ad->requires_grad) {
                ad->ensure_grad();
                for (std::size_t i = 0; i < g.size(); ++i)
                    ad->g[as ? 0 : i] += g[i] / bd->v[bs ? 0 : i];
            }
            if (bd->requires_grad) {
                bd->ensure_grad();
                for (std::size_t i = 0; i < g.size(); ++i) {
                    const T bb = bd->v[bs ? 0 : i];
                    bd->g[bs ? 0 : i] -= g[i] * ad->v[as ? 0 : i] / (bb * bb);
                }
            }
        },
        "div");
    return o;
}

// ---------------------------------------------------------------------------
// elementwise unary
// ---------------------------------------------------------------------------

namespace detail2 {

template <class T, class Fwd, class Bwd>
Tensor<T> unary(const Tensor<T>& a, Fwd fwd, Bwd dfd, const char* name) {
    std::vector<T> out(a.size());
    const auto& av = a.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(av[i]);
    Tensor<T> o(a.shape(), std::move(out));
    record_op(
        o, a.requires_grad(),
        [ad = a.data(), od = o.data(), dfd]() {
            if (!ad->requires_grad) return;
            ad->ensure_grad();
            for (std::size_t i = 0; i < od->g.size(); ++i)
                ad->g[i] += od->g[i] * dfd(ad->v[i], od->v[i]);
        },
        name);
    return o;
}

}  // namespace detail2

template <class T>
Tensor<T> neg(const Tensor<T>& a) {
    return detail2::unary(
        a, [](T x) { return -x; }, [](T, T) { return T(-1); }, "neg");
}

template <class T>
Tensor<T> abs(const Tensor<T>& a) {
    // subgradient 0 at the kink
    return detail2::unary(
        a, [](T x) { return std::abs(x); },
        [](T x, T) { return x > 0 ? T(1) : (x < 0 ? T(-1) : T(0)); }, "abs");
}

template <class T>
Tensor<T> sqrt(const Tensor<T>& a) {
    return detail2::unary(
        a, [](T x) { return std::sqrt(x); }, [](T, T y) { return T(0.5) / y; }, "sqrt");
}

template <class T>
Tensor<T> sin(const Tensor<T>& a) {
    return detail2::unary(
        a, [](T x) { return std::sin(x); }, [](T x, T) { return std::cos(x); }, "sin");
}

template <class T>
Tensor<T> cos(const Tensor<T>& a) {
    return detail2::unary(
        a, [](T x) { return std::cos(x); }, [](T x, T) { return -std::sin(x); }, "cos");
}

template <class T>
Tensor<T> sigmoid(const Tensor<T>& a) {
    return detail2::unary(
        a, [](T x) { return T(1) / (T(1) + std::exp(-x)); }, [](T, T y) { return y * (T(1) - y); },
        "sigmoid");
}

template <class T>
Tensor<T> silu(const Tensor<T>& a) {
    return detail2::unary(
        a,
        [](T x) { return x / (T(1) + std::exp(-x)); },
        [](T x, T) {
            const T s = T(1) / (T(1) + std::exp(-x));
            return s * (T(1) + x * (T(1) - s));
        },
        "silu");
}

template <class T>
Tensor<T> relu(const Tensor<T>& a) {
    return detail2::unary(
        a, [](T x) { return x > 0 ? x : T(0); }, [](T x, T) { return x > 0 ? T(1) : T(0); },
        "relu");
}

template <class T>
Tensor<T> scale(const Tensor<T>& a, T s) {
    return detail2::unary(
        a, [s](T x) { return x * s; }, [s](T, T) { return s; }, "scale");
}

template <class T>
Tensor<T> add_const(const Tensor<T>& a, T c) {
    return detail2::unary(
        a, [c](T x) { return x + c; }, [](T, T) { return T(1); }, "add_const");
}

// ---------------------------------------------------------------------------
// reductions
// ---------------------------------------------------------------------------

template <class T>
Tensor<T> sum(const Tensor<T>& a) {
    T acc(0);
    for (T x : a.values()) acc += x;
    Tensor<T> o = Tensor<T>::scalar(acc);
    record_op(
        o, a.requires_grad(),
        [ad = a.data(), od = o.data()]() {
            if (!ad->requires_grad) return;
            ad->ensure_grad();
            const T g = od->g[0];
            for (auto& x : ad->g) x += g;
        },
        "sum");
    return o;
}

template <class T>
Tensor<T> mean(const Tensor<T>& a) {
    T acc(0);
    for (T x : a.values()) acc += x;
    const T n = T(a.size());
    Tensor<T> o = Tensor<T>::scalar(acc / n);
    record_op(
        o, a.requires_grad(),
        [ad = a.data(), od = o.data(), n]() {
            if (!ad->requires_grad) return;
            ad->ensure_grad();
            const T g = od->g[0] / n;
            for (auto& x : ad->g) x += g;
        },
        "mean");
    return o;
}

// ---------------------------------------------------------------------------
// linear algebra
// ---------------------------------------------------------------------------

namespace detail2 {

// C(n x m) += A(n x k) * B(k x m), row-major, ikj order
template <class T>
inline void mm_acc(const T* A, const T* B, T* C, std::size_t n, std::size_t k, std::size_t m) {
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            const T a = A[i * k + p];
            if (a == T(0)) continue;
            const T* brow = B + p * m;
            T* crow = C + i * m;
            for (std::size_t j = 0; j < m; ++j) crow[j] += a * brow[j];
        }
}

// C(n x m) += A^T(k x n)^T... computes A^T * B where A is (k x n), B is (k x m)
template <class T>
inline void mm_at_b_acc(const T* A, const T* B, T* C, std::size_t k, std::size_t n,
                        std::size_t m) {
    for (std::size_t p = 0; p < k; ++p)
        for (std::size_t i = 0; i < n; ++i) {
            const T a = A[p * n + i];
            if (a == T(0)) continue;
            const T* brow = B + p * m;
            T* crow = C + i * m;
            for (std::size_t j = 0; j < m; ++j) crow[j] += a * brow[j];
        }
}

// C(n x m) += A(n x k) * B^T where B is (m x k)
template <class T>
inline void mm_a_bt_acc(const T* A, const T* B, T* C, std::size_t n, std::size_t k,
                        std::size_t m) {
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            const T* arow = A + i * k;
            const T* brow = B + j * k;
            T acc(0);
            for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
            C[i * m + j] += acc;
        }
}

template <class T>
inline void require_2d(const Tensor<T>& t, const char* op) {
    if (t.shape().size() != 2)
        throw std::invalid_argument(std::string(op) + ": expected 2-D tensor, got " +
                                    shape_str(t.shape()));
}

}  // namespace detail2

template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    detail2::require_2d(a, "matmul");
    detail2::require_2d(b, "matmul");
    const std::size_t n = a.dim(0), k = a.dim(1), m = b.dim(1);
    if (b.dim(0) != k) throw std::invalid_argument("matmul: inner dimension mismatch");
    std::vector<T> out(n * m, T(0));
    detail2::mm_acc(a.values().data(), b.values().data(), out.data(), n, k, m);
    Tensor<T> o({n, m}, std::move(out));
    record_op(
        o, a.requires_grad() || b.requires_grad(),
        [ad = a.data(), bd = b.data(), od = o.data(), n, k, m]() {
            if (ad->requires_grad) {
                ad->ensure_grad();
                detail2::mm_a_bt_acc(od->g.data(), bd->v.data(), ad->g.data(), n, m, k);
            }
            if (bd->requires_grad) {
                bd->ensure_grad();
                detail2::mm_at_b_acc(ad->v.data(), od->g.data(), bd->g.data(), n, k, m);
            }
        },
        "matmul");
    return o;
}

template <class T>
Tensor<T> transpose2d(const Tensor<T>& a) {
    detail2::require_2d(a, "transpose2d");
    const std::size_t n = a.dim(0), m = a.dim(1);
    std::vector<T> out(n * m);
    const auto& av = a.values();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) out[j * n + i] = av[i * m + j];
    Tensor<T> o({m, n}, std::move(out));
    record_op(
        o, a.requires_grad(),
        [ad = a.data(), od = o.data(), n, m]() {
            if (!ad->requires_grad) return;
            ad->ensure_grad();
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < m; ++j) ad->g[i * m + j] += od->g[j * n + i];
        },
        "transpose2d");
    return o;
}

/// out = x * w + b with b broadcast over rows.
template <class T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
    detail2::require_2d(x, "linear");
    detail2::require_2d(w, "linear");
    const std::size_t n = x.dim(0), k = x.dim(1), m = w.dim(1);
    if (w.dim(0) != k || b.size() != m) throw std::invalid_argument("linear: dimension mismatch");
    std::vector<T> out(n * m);
    for (std::size_t i = 0; i < n; ++i)
        std::copy(b.values().begin(), b.values().end(), out.begin() + i * m);
    detail2::mm_acc(x.values().data(), w.values().data(), out.data(), n, k, m);
    Tensor<T> o({n, m}, std::move(out));
    record_op(
        o, x.requires_grad() || w.requires_grad() || b.requires_grad(),
        [xd = x.data(), wd = w.data(), bd = b.data(), od = o.data(), n, k, m]() {
            if (xd->requires_grad) {
                xd->ensure_grad();
                detail2::mm_a_bt_acc(od->g.data(), wd->v.data(), xd->g.data(), n, m, k);
            }
            if (wd->requires_grad) {
                wd->ensure_grad();
                detail2::mm_at_b_acc(xd->v.data(), od->g.data(), wd->g.data(), n, k, m);
            }
            if (bd->requires_grad) {
                bd->ensure_grad();
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < m; ++j) bd->g[j] += od->g[i * m + j];
            }
        },
        "linear");
    return o;
}

/// Adds a length-m vector to every row of an n x m matrix.
template <class T>
Tensor<T> add_rowvec(const Tensor<T>& a, const Tensor<T>& v) {
    detail2::require_2d(a, "add_rowvec");
    const std::size_t n = a.dim(0), m = a.dim(1);
    if (v.size() != m) throw std::invalid_argument("add_rowvec: width mismatch");
    std::vector<T> out(a.values());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) out[i * m + j] += v.values()[j];
    Tensor<T> o(a.shape(), std::move(out));
    record_op(
        o, a.requires_grad() || v.requires_grad(),
        [ad = a.data(), vd = v.data(), od = o.data(), n, m]() {
            if (ad->requires_grad) {
                ad->ensure_grad();
                for (std::size_t i = 0; i < od->g.size(); ++i) ad->g[i] += od->g[i];
            }
            if (vd->requires_grad) {
                vd->ensure_grad();
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < m; ++j) vd->g[j] += od->g[i * m + j];
            }
        },
        "add_rowvec");
    return o;
}

/// Scales row r of an n x m matrix by w[r].
template <class T>
Tensor<T> scale_rows(const Tensor<T>& a, const Tensor<T>& w) {
    detail2::require_2d(a, "scale_rows");
    const std::size_t n = a.dim(0), m = a.dim(1);
    if (w.size() != n) throw std::invalid_argument("scale_rows: row count mismatch");
    std::vector<T> out(n * m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) out[i * m + j] = a.values()[i * m + j] * w.values()[i];
    Tensor<T> o(a.shape(), std::move(out));
    record_op(
        o, a.requires_grad() || w.requires_grad(),
        [ad = a.data(), wd = w.data(), od = o.data(), n, m]() {
            if (ad->requires_grad) {
                ad->ensure_grad();
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < m; ++j)
                        ad->g[i * m + j] += od->g[i * m + j] * wd->v[i];
            }
            if (wd->requires_grad) {
                wd->ensure_grad();
                for (std::size_t i = 0; i < n; ++i) {
                    T acc(0);
                    for (std::size_t j = 0; j < m; ++j) acc += od->g[i * m + j] * ad->v[i * m + j];
                    wd->g[i] += acc;
                }
            }
        },
        "scale_rows");
    return o;
}

// ---------------------------------------------------------------------------
// structural ops
// ---------------------------------------------------------------------------

template <class T>
Tensor<T> reshape(const Tensor<T>& a, Shape new_shape) {
    if (shape_numel(new_shape) != a.size())
        throw std::invalid_argument("reshape: element count mismatch");
    Tensor<T> o(std::move(new_shape), a.values());
    record_op(
        o, a.requires_grad(),
        [ad = a.data(), od = o.data()]() {
            if (!ad->requires_grad) return;
            ad->ensure_grad();
            for (std::size_t i = 0; i < od->g.size(); ++i) ad->g[i] += od->g[i];
        },
        "reshape");
    return o;
}

template <class T>
Tensor<T> concat_rows(const std::vector<Tensor<T>>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: empty input");
    const std::size_t m = parts[0].dim(1);
    std::size_t n = 0;
    bool any_grad = false;
    for (const auto& p : parts) {
        detail2::require_2d(p, "concat_rows");
        if (p.dim(1) != m) throw std::invalid_argument("concat_rows: width mismatch");
        n += p.dim(0);
        any_grad = any_grad || p.requires_grad();
    }
    std::vector<T> out;
    out.reserve(n * m);
    for (const auto& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
    Tensor<T> o({n, m}, std::move(out));
    std::vector<std::shared_ptr<TensorData<T>>> pd;
    for (const auto& p : parts) pd.push_back(p.data());
    record_op(
        o, any_grad,
        [pd, od = o.data()]() {
            std::size_t off = 0;
            for (const auto& d : pd) {
                if (d->requires_grad) {
                    d->ensure_grad();
                    for (std::size_t i = 0; i < d->v.size(); ++i) d->g[i] += od->g[off + i];
                }
                off += d->v.size();
            }
        },
        "concat_rows");
    return o;
}

template <class T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: empty input");
    const std::size_t n = parts[0].dim(0);
    std::size_t m = 0;
    bool any_grad = false;
    for (const auto& p : parts) {
        detail2::require_2d(p, "concat_cols");
        if (p.dim(0) != n) throw std::invalid_argument("concat_cols: row count mismatch");
        m += p.dim(1);
        any_grad = any_grad || p.requires_grad();
    }
    std::vector<T> out(n * m);
    std::size_t coff = 0;
    for (const auto& p : parts) {
        const std::size_t pm = p.dim(1);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < pm; ++j) out[i * m + coff + j] = p.values()[i * pm + j];
        coff += pm;
    }
    Tensor<T> o({n, m}, std::move(out));
    std::vector<std::shared_ptr<TensorData<T>>> pd;
    for (const auto& p : parts) pd.push_back(p.data());
    record_op(
        o, any_grad,
        [pd, od = o.data(), n, m]() {
            std::size_t coff2 = 0;
            for (const auto& d : pd) {
                const std::size_t pm = d->shape[1];
                if (d->requires_grad) {
                    d->ensure_grad();
                    for (std::size_t i = 0; i < n; ++i)
                        for (std::size_t j = 0; j < pm; ++j)
                            d->g[i * pm + j] += od->g[i * m + coff2 + j];
                }
                coff2 += pm;
            }
        },
        "concat_cols");
    return o;
}

template <class T>
Tensor<T> slice_cols(const Tensor<T>& a, std::size_t c0, std::size_t c1) {
    detail2::require_2d(a, "slice_cols");
    const std::size_t n = a.dim(0), m = a.dim(1);
    if (c0 >= c1 || c1 > m) throw std::invalid_argument("slice_cols: bad column range");
    const std::size_t w = c1 - c0;
    std::vector<T> out(n * w);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < w; ++j) out[i * w + j] = a.values()[i * m + c0 + j];
    Tensor<T> o({n, w}, std::move(out));
    record_op(
        o, a.requires_grad(),
        [ad = a.data(), od = o.data(), n, m, c0, w]() {
            if (!ad->requires_grad) return;
            ad->ensure_grad();
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < w; ++j) ad->g[i * m + c0 + j] += od->g[i * w + j];
        },
        "slice_cols");
    return o;
}

template <class T>
Tensor<T> gather_rows(const Tensor<T>& a, const std::vector<std::size_t>& idx) {
    detail2::require_2d(a, "gather_rows");
    const std::size_t m = a.dim(1);
    for (auto i : idx)
        if (i >= a.dim(0)) throw std::invalid_argument("gather_rows: index out of range");
    std::vector<T> out(idx.size() * m);
    for (std::size_t r = 0; r < idx.size(); ++r)
        std::copy_n(a.values().begin() + idx[r] * m, m, out.begin() + r * m);
    Tensor<T> o({idx.size(), m}, std::move(out));
    record_op(
        o, a.requires_grad(),
        [ad = a.data(), od = o.data(), idx, m]() {
            if (!ad->requires_grad) return;
            ad->ensure_grad();
            for (std::size_t r = 0; r < idx.size(); ++r)
                for (std::size_t j = 0; j < m; ++j) ad->g[idx[r] * m + j] += od->g[r * m + j];
        },
        "gather_rows");
    return o;
}

template <class T>
Tensor<T> select(const Tensor<T>& a, std::size_t flat_idx) {
    if (flat_idx >= a.size()) throw std::invalid_argument("select: index out of range");
    Tensor<T> o = Tensor<T>::scalar(a.values()[flat_idx]);
    record_op(
        o, a.requires_grad(),
        [ad = a.data(), od = o.data(), flat_idx]() {
            if (!ad->requires_grad) return;
            ad->ensure_grad();
            ad->g[flat_idx] += od->g[0];
        },
        "select");
    return o;
}

struct PlaceEntry {
    std::size_t dst;
    std::size_t src;
    double coeff;
};

/// Sparse linear placement: out[dst] = base[dst] + sum coeff * src[src].
template <class T>
Tensor<T> place(const Tensor<T>& src, Shape out_shape, const std::vector<PlaceEntry>& map,
                const std::vector<T>& base = {}) {
    const std::size_t n = shape_numel(out_shape);
    std::vector<T> out = base.empty() ? std::vector<T>(n, T(0)) : base;
    if (out.size() != n) throw std::invalid_argument("place: base size mismatch");
    for (const auto& e : map) {
        if (e.dst >= n || e.src >= src.size()) throw std::invalid_argument("place: bad mapping");
        out[e.dst] += T(e.coeff) * src.values()[e.src];
    }
    Tensor<T> o(std::move(out_shape), std::move(out));
    record_op(
        o, src.requires_grad(),
        [sd = src.data(), od = o.data(), map]() {
            if (!sd->requires_grad) return;
            sd->ensure_grad();
            for (const auto& e : map) sd->g[e.src] += T(e.coeff) * od->g[e.dst];
        },
        "place");
    return o;
}

// ---------------------------------------------------------------------------
// normalization / attention helpers
// ---------------------------------------------------------------------------

template <class T>
Tensor<T> softmax_rows(const Tensor<T>& a) {
    detail2::require_2d(a, "softmax_rows");
    const std::size_t n = a.dim(0), m = a.dim(1);
    std::vector<T> out(n * m);
    for (std::size_t i = 0; i < n; ++i) {
        const T* row = a.values().data() + i * m;
        T mx = row[0];
        for (std::size_t j = 1; j < m; ++j) mx = std::max(mx, row[j]);
        T z(0);
        for (std::size_t j = 0; j < m; ++j) {
            out[i * m + j] = std::exp(row[j] - mx);
            z += out[i * m + j];
        }
        for (std::size_t j = 0; j < m; ++j) out[i * m + j] /= z;
    }
    Tensor<T> o(a.shape(), std::move(out));
    record_op(
        o, a.requires_grad(),
        [ad = a.data(), od = o.data(), n, m]() {
            if (!ad->requires_grad) return;
            ad->ensure_grad();
            for (std::size_t i = 0; i < n; ++i) {
                const T* y = od->v.data() + i * m;
                const T* g = od->g.data() + i * m;
                T dot(0);
                for (std::size_t j = 0; j < m; ++j) dot += y[j] * g[j];
                for (std::size_t j = 0; j < m; ++j) ad->g[i * m + j] += y[j] * (g[j] - dot);
            }
        },
        "softmax_rows");
    return o;
}

template <class T>
Tensor<T> layer_norm_rows(const Tensor<T>& a, const Tensor<T>& gain, const Tensor<T>& bias,
                          T eps = T(1e-5)) {
    detail2::require_2d(a, "layer_norm_rows");
    const std::size_t n = a.dim(0), m = a.dim(1);
    if (gain.size() != m || bias.size() != m)
        throw std::invalid_argument("layer_norm_rows: gain/bias width mismatch");
    std::vector<T> out(n * m), xhat(n * m), inv_std(n);
    for (std::size_t i = 0; i < n; ++i) {
        const T* row = a.values().data() + i * m;
        T mu(0);
        for (std::size_t j = 0; j < m; ++j) mu += row[j];
        mu /= T(m);
        T var(0);
        for (std::size_t j = 0; j < m; ++j) var += (row[j] - mu) * (row[j] - mu);
        var /= T(m);
        const T is = T(1) / std::sqrt(var + eps);
        inv_std[i] = is;
        for (std::size_t j = 0; j < m; ++j) {
            xhat[i * m + j] = (row[j] - mu) * is;
            out[i * m + j] = gain.values()[j] * xhat[i * m + j] + bias.values()[j];
        }
    }
    Tensor<T> o(a.shape(), std::move(out));
    record_op(
        o, a.requires_grad() || gain.requires_grad() || bias.requires_grad(),
        [ad = a.data(), gd = gain.data(), bd = bias.data(), od = o.data(),
         xhat = std::move(xhat), inv_std = std::move(inv_std), n, m]() {
            if (gd->requires_grad) {
                gd->ensure_grad();
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < m; ++j)
                        gd->g[j] += od->g[i * m + j] * xhat[i * m + j];
            }
            if (bd->requires_grad) {
                bd->ensure_grad();
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < m; ++j) bd->g[j] += od->g[i * m + j];
            }
            if (ad->requires_grad) {
                ad->ensure_grad();
                for (std::size_t i = 0; i < n; ++i) {
                    T mean_dx(0), mean_dxx(0);
                    std::vector<T> dxh(m);
                    for (std::size_t j = 0; j < m; ++j) {
                        dxh[j] = od->g[i * m + j] * gd->v[j];
                        mean_dx += dxh[j];
                        mean_dxx += dxh[j] * xhat[i * m + j];
                    }
                    mean_dx /= T(m);
                    mean_dxx /= T(m);
                    for (std::size_t j = 0; j < m; ++j)
                        ad->g[i * m + j] +=
                            inv_std[i] * (dxh[j] - mean_dx - xhat[i * m + j] * mean_dxx);
                }
            }
        },
        "layer_norm_rows");
    return o;
}

// ---------------------------------------------------------------------------
// image / conv ops (channel-first C x H x W layout)
// ---------------------------------------------------------------------------

namespace detail2 {

template <class T>
inline void require_3d(const Tensor<T>& t, const char* op) {
    if (t.shape().size() != 3)
        throw std::invalid_argument(std::string(op) + ": expected C x H x W tensor, got " +
                                    shape_str(t.shape()));
}

}  // namespace detail2

/// 2-D convolution, stride 1, zero padding `pad`, kernel w: Cout x Cin x kh x kw.
template <class T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, std::size_t pad) {
    detail2::require_3d(x, "conv2d");
    if (w.shape().size() != 4) throw std::invalid_argument("conv2d: kernel must be 4-D");
    const std::size_t ci = x.dim(0), h = x.dim(1), wd = x.dim(2);
    const std::size_t co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    if (w.dim(1) != ci || b.size() != co) throw std::invalid_argument("conv2d: channel mismatch");
    const std::size_t oh = h + 2 * pad - kh + 1, ow = wd + 2 * pad - kw + 1;
    std::vector<T> out(co * oh * ow);
    const T* xv = x.values().data();
    const T* wv = w.values().data();
    for (std::size_t oc = 0; oc < co; ++oc) {
        std::fill_n(out.begin() + oc * oh * ow, oh * ow, b.values()[oc]);
        for (std::size_t ic = 0; ic < ci; ++ic)
            for (std::size_t ky = 0; ky < kh; ++ky)
                for (std::size_t kx = 0; kx < kw; ++kx) {
                    const T wgt = wv[((oc * ci + ic) * kh + ky) * kw + kx];
                    if (wgt == T(0)) continue;
                    for (std::size_t oy = 0; oy < oh; ++oy) {
                        const std::ptrdiff_t iy =
                            std::ptrdiff_t(oy + ky) - std::ptrdiff_t(pad);
                        if (iy < 0 || iy >= std::ptrdiff_t(h)) continue;
                        for (std::size_t ox = 0; ox < ow; ++ox) {
                            const std::ptrdiff_t ix =
                                std::ptrdiff_t(ox + kx) - std::ptrdiff_t(pad);
                            if (ix < 0 || ix >= std::ptrdiff_t(wd)) continue;
                            out[(oc * oh + oy) * ow + ox] +=
                                wgt * xv[(ic * h + std::size_t(iy)) * wd + std::size_t(ix)];
                        }
                    }
                }
    }
    Tensor<T> o({co, oh, ow}, std::move(out));
    record_op(
        o, x.requires_grad() || w.requires_grad() || b.requires_grad(),
        [xd = x.data(), wd2 = w.data(), bd = b.data(), od = o.data(), ci, h, wd, co, kh, kw, oh,
         ow, pad]() {
            const auto& g = od->g;
            if (bd->requires_grad) {
                bd->ensure_grad();
                for (std::size_t oc = 0; oc < co; ++oc) {
                    T acc(0);
                    for (std::size_t i = 0; i < oh * ow; ++i) acc += g[oc * oh * ow + i];
                    bd->g[oc] += acc;
                }
            }
            const bool gx = xd->requires_grad, gw = wd2->requires_grad;
            if (!gx && !gw) return;
            if (gx) xd->ensure_grad();
            if (gw) wd2->ensure_grad();
            for (std::size_t oc = 0; oc < co; ++oc)
                for (std::size_t ic = 0; ic < ci; ++ic)
                    for (std::size_t ky = 0; ky < kh; ++ky)
                        for (std::size_t kx = 0; kx < kw; ++kx) {
                            const std::size_t widx = ((oc * ci + ic) * kh + ky) * kw + kx;
                            const T wgt = wd2->v[widx];
                            T wacc(0);
                            for (std::size_t oy = 0; oy < oh; ++oy) {
                                const std::ptrdiff_t iy =
                                    std::ptrdiff_t(oy + ky) - std::ptrdiff_t(pad);
                                if (iy < 0 || iy >= std::ptrdiff_t(h)) continue;
                                for (std::size_t ox = 0; ox < ow; ++ox) {
                                    const std::ptrdiff_t ix =
                                        std::ptrdiff_t(ox + kx) - std::ptrdiff_t(pad);
                                    if (ix < 0 || ix >= std::ptrdiff_t(wd)) continue;
                                    const T gg = g[(oc * oh + oy) * ow + ox];
                                    const std::size_t xi =
                                        (ic * h + std::size_t(iy)) * wd + std::size_t(ix);
                                    if (gx) xd->g[xi] += wgt * gg;
                                    if (gw) wacc += xd->v[xi] * gg;
                                }
                            }
                            if (gw) wd2->g[widx] += wacc;
                        }
        },
        "conv2d");
    return o;
}

template <class T>
Tensor<T> avg_pool2d(const Tensor<T>& x, std::size_t k) {
    detail2::require_3d(x, "avg_pool2d");
    const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
    if (h % k || w % k) throw std::invalid_argument("avg_pool2d: extent not divisible by kernel");
    const std::size_t oh = h / k, ow = w / k;
    std::vector<T> out(c * oh * ow, T(0));
    const T inv = T(1) / T(k * k);
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t xx = 0; xx < w; ++xx)
                out[(ch * oh + y / k) * ow + xx / k] += x.values()[(ch * h + y) * w + xx] * inv;
    Tensor<T> o({c, oh, ow}, std::move(out));
    record_op(
        o, x.requires_grad(),
        [xd = x.data(), od = o.data(), c, h, w, k, oh, ow, inv]() {
            if (!xd->requires_grad) return;
            xd->ensure_grad();
            for (std::size_t ch = 0; ch < c; ++ch)
                for (std::size_t y = 0; y < h; ++y)
                    for (std::size_t xx = 0; xx < w; ++xx)
                        xd->g[(ch * h + y) * w + xx] +=
                            od->g[(ch * oh + y / k) * ow + xx / k] * inv;
        },
        "avg_pool2d");
    return o;
}

/// Channel-to-space rearrangement: (C r^2) x h x w -> C x (h r) x (w r).
template <class T>
Tensor<T> pixel_shuffle(const Tensor<T>& x, std::size_t r) {
    detail2::require_3d(x, "pixel_shuffle");
    const std::size_t cin = x.dim(0), h = x.dim(1), w = x.dim(2);
    if (cin % (r * r)) throw std::invalid_argument("pixel_shuffle: channels not divisible by r^2");
    const std::size_t c = cin / (r * r), oh = h * r, ow = w * r;
    std::vector<T> out(c * oh * ow);
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t dy = 0; dy < r; ++dy)
            for (std::size_t dx = 0; dx < r; ++dx)
                for (std::size_t y = 0; y < h; ++y)
                    for (std::size_t xx = 0; xx < w; ++xx)
                        out[(ch * oh + y * r + dy) * ow + xx * r + dx] =
                            x.values()[(((ch * r + dy) * r + dx) * h + y) * w + xx];
    Tensor<T> o({c, oh, ow}, std::move(out));
    record_op(
        o, x.requires_grad(),
        [xd = x.data(), od = o.data(), c, h, w, r, oh, ow]() {
            if (!xd->requires_grad) return;
            xd->ensure_grad();
            for (std::size_t ch = 0; ch < c; ++ch)
                for (std::size_t dy = 0; dy < r; ++dy)
                    for (std::size_t dx = 0; dx < r; ++dx)
                        for (std::size_t y = 0; y < h; ++y)
                            for (std::size_t xx = 0; xx < w; ++xx)
                                xd->g[(((ch * r + dy) * r + dx) * h + y) * w + xx] +=
                                    od->g[(ch * oh + y * r + dy) * ow + xx * r + dx];
        },
        "pixel_shuffle");
    return o;
}

/// Inverse of pixel_shuffle: C x (h r) x (w r) -> (C r^2) x h x w.
template <class T>
Tensor<T> pixel_unshuffle(const Tensor<T>& x, std::size_t r) {
    detail2::require_3d(x, "pixel_unshuffle");
    const std::size_t c = x.dim(0), ih = x.dim(1), iw = x.dim(2);
    if (ih % r || iw % r) throw std::invalid_argument("pixel_unshuffle: extent not divisible");
    const std::size_t h = ih / r, w = iw / r;
    std::vector<T> out(c * r * r * h * w);
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t dy = 0; dy < r; ++dy)
            for (std::size_t dx = 0; dx < r; ++dx)
                for (std::size_t y = 0; y < h; ++y)
                    for (std::size_t xx = 0; xx < w; ++xx)
                        out[(((ch * r + dy) * r + dx) * h + y) * w + xx] =
                            x.values()[(ch * ih + y * r + dy) * iw + xx * r + dx];
    Tensor<T> o({c * r * r, h, w}, std::move(out));
    record_op(
        o, x.requires_grad(),
        [xd = x.data(), od = o.data(), c, h, w, r, ih, iw]() {
            if (!xd->requires_grad) return;
            xd->ensure_grad();
            for (std::size_t ch = 0; ch < c; ++ch)
                for (std::size_t dy = 0; dy < r; ++dy)
                    for (std::size_t dx = 0; dx < r; ++dx)
                        for (std::size_t y = 0; y < h; ++y)
                            for (std::size_t xx = 0; xx < w; ++xx)
                                xd->g[(ch * ih + y * r + dy) * iw + xx * r + dx] +=
                                    od->g[(((ch * r + dy) * r + dx) * h + y) * w + xx];
        },
        "pixel_unshuffle");
    return o;
}

/// Count of samples whose coordinates fell outside [0,1]^2 and were clamped.
inline std::size_t& bilinear_clamp_count() {
    static std::size_t n = 0;
    return n;
}

/// Samples a C x H x W texture at N (u,v) points in [0,1]^2; (0,0) and (1,1)
/// map to corner texel centers. Returns N x C. Differentiable in both inputs.
template <class T>
Tensor<T> bilinear_sample(const Tensor<T>& tex, const Tensor<T>& coords) {
    detail2::require_3d(tex, "bilinear_sample");
    detail2::require_2d(coords, "bilinear_sample");
    if (coords.dim(1) != 2) throw std::invalid_argument("bilinear_sample: coords must be N x 2");
    const std::size_t c = tex.dim(0), h = tex.dim(1), w = tex.dim(2);
    if (h < 2 || w < 2) throw std::invalid_argument("bilinear_sample: texture extents must be >= 2");
    const std::size_t n = coords.dim(0);
    std::vector<T> out(n * c);
    // cached geometry for backward: x0, y0, fx, fy, clamped flags
    std::vector<std::size_t> x0s(n), y0s(n);
    std::vector<T> fxs(n), fys(n);
    std::vector<unsigned char> uclamped(n), vclamped(n);
    for (std::size_t i = 0; i < n; ++i) {
        T u = coords.values()[i * 2 + 0];
        T v = coords.values()[i * 2 + 1];
        if (u < 0 || u > 1 || v < 0 || v > 1) {
            ++bilinear_clamp_count();
            uclamped[i] = u < 0 || u > 1;
            vclamped[i] = v < 0 || v > 1;
            u = std::clamp(u, T(0), T(1));
            v = std::clamp(v, T(0), T(1));
        }
        const T x = u * T(w - 1);
        const T y = v * T(h - 1);
        std::size_t x0 = std::min(std::size_t(x), w - 2);
        std::size_t y0 = std::min(std::size_t(y), h - 2);
        const T fx = x - T(x0);
        const T fy = y - T(y0);
        x0s[i] = x0;
        y0s[i] = y0;
        fxs[i] = fx;
        fys[i] = fy;
        for (std::size_t ch = 0; ch < c; ++ch) {
            const T* plane = tex.values().data() + ch * h * w;
            const T t00 = plane[y0 * w + x0], t01 = plane[y0 * w + x0 + 1];
            const T t10 = plane[(y0 + 1) * w + x0], t11 = plane[(y0 + 1) * w + x0 + 1];
            out[i * c + ch] =
                (T(1) - fy) * ((T(1) - fx) * t00 + fx * t01) + fy * ((T(1) - fx) * t10 + fx * t11);
        }
    }
    Tensor<T> o({n, c}, std::move(out));
    record_op(
        o, tex.requires_grad() || coords.requires_grad(),
        [td = tex.data(), cd = coords.data(), od = o.data(), x0s = std::move(x0s),
         y0s = std::move(y0s), fxs = std::move(fxs), fys = std::move(fys),
         uclamped = std::move(uclamped), vclamped = std::move(vclamped), c, h, w, n]() {
            const bool gt = td->requires_grad, gc = cd->requires_grad;
            if (gt) td->ensure_grad();
            if (gc) cd->ensure_grad();
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t x0 = x0s[i], y0 = y0s[i];
                const T fx = fxs[i], fy = fys[i];
                for (std::size_t ch = 0; ch < c; ++ch) {
                    const T g = od->g[i * c + ch];
                    if (g == T(0)) continue;
                    const std::size_t base = ch * h * w;
                    if (gt) {
                        td->g[base + y0 * w + x0] += g * (T(1) - fy) * (T(1) - fx);
                        td->g[base + y0 * w + x0 + 1] += g * (T(1) - fy) * fx;
                        td->g[base + (y0 + 1) * w + x0] += g * fy * (T(1) - fx);
                        td->g[base + (y0 + 1) * w + x0 + 1] += g * fy * fx;
                    }
                    if (gc) {
                        const T* plane = td->v.data() + base;
                        const T t00 = plane[y0 * w + x0], t01 = plane[y0 * w + x0 + 1];
                        const T t10 = plane[(y0 + 1) * w + x0], t11 = plane[(y0 + 1) * w + x0 + 1];
                        const T dvdx = (T(1) - fy) * (t01 - t00) + fy * (t11 - t10);
                        const T dvdy = (T(1) - fx) * (t10 - t00) + fx * (t11 - t01);
                        if (!uclamped[i]) cd->g[i * 2 + 0] += g * dvdx * T(w - 1);
                        if (!vclamped[i]) cd->g[i * 2 + 1] += g * dvdy * T(h - 1);
                    }
                }
            }
        },
        "bilinear_sample");
    return o;
}

/// Per-channel 2-D DFT magnitude of a C x H x W tensor. The gradient of |F|
/// where the magnitude is exactly zero is defined as zero.
template <class T>
Tensor<T> dft2_magnitude(const Tensor<T>& x) {
    detail2::require_3d(x, "dft2_magnitude");
    const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
    std::vector<T> out(c * h * w);
    std::vector<std::complex<T>> spectrum(c * h * w);
    for (std::size_t ch = 0; ch < c; ++ch) {
        std::vector<std::complex<T>> grid(h * w);
        for (std::size_t i = 0; i < h * w; ++i) grid[i] = x.values()[ch * h * w + i];
        fft::transform_2d(grid, h, w, -1);
        for (std::size_t i = 0; i < h * w; ++i) {
            spectrum[ch * h * w + i] = grid[i];
            out[ch * h * w + i] = std::abs(grid[i]);
        }
    }
    Tensor<T> o({c, h, w}, std::move(out));
    record_op(
        o, x.requires_grad(),
        [xd = x.data(), od = o.data(), spectrum = std::move(spectrum), c, h, w]() {
            if (!xd->requires_grad) return;
            xd->ensure_grad();
            for (std::size_t ch = 0; ch < c; ++ch) {
                std::vector<std::complex<T>> wgrid(h * w);
                for (std::size_t i = 0; i < h * w; ++i) {
                    const T mag = od->v[ch * h * w + i];
                    wgrid[i] = mag > T(0)
                                   ? spectrum[ch * h * w + i] * (od->g[ch * h * w + i] / mag)
                                   : std::complex<T>(0);
                }
                fft::transform_2d(wgrid, h, w, +1);
                for (std::size_t i = 0; i < h * w; ++i)
                    xd->g[ch * h * w + i] += wgrid[i].real();
            }
        },
        "dft2_magnitude");
    return o;
}

}  // namespace handtex::ops
