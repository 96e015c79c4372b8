#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace handtex {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (auto e : s) n *= e;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::string r = "(";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) r += ",";
        r += std::to_string(s[i]);
    }
    return r + ")";
}

/// When enabled, every primitive op verifies its output is finite.
inline bool& finite_checks() {
    static bool on = false;
    return on;
}

template <class T>
struct TensorData {
    Shape shape;
    std::vector<T> v;
    std::vector<T> g;
    bool requires_grad = false;
    bool on_tape = false;

    void ensure_grad() {
        if (g.size() != v.size()) g.assign(v.size(), T(0));
    }
};

// Shared-value handle over a shaped array. Copying a Tensor aliases the
// underlying storage; ops always allocate fresh outputs.
template <class T>
class Tensor {
public:
    Tensor() = default;
    Tensor(Shape shape, std::vector<T> vals, bool requires_grad = false)
        : d_(std::make_shared<TensorData<T>>()) {
        if (shape_numel(shape) != vals.size())
            throw std::invalid_argument("tensor: value count " + std::to_string(vals.size()) +
                                        " does not match shape " + shape_str(shape));
        d_->shape = std::move(shape);
        d_->v = std::move(vals);
        d_->requires_grad = requires_grad;
    }

    static Tensor zeros(Shape shape, bool requires_grad = false) {
        std::size_t n = shape_numel(shape);
        return Tensor(std::move(shape), std::vector<T>(n, T(0)), requires_grad);
    }
    static Tensor full(Shape shape, T value, bool requires_grad = false) {
        std::size_t n = shape_numel(shape);
        return Tensor(std::move(shape), std::vector<T>(n, value), requires_grad);
    }
    static Tensor scalar(T value, bool requires_grad = false) {
        return Tensor({1}, {value}, requires_grad);
    }

    bool defined() const { return d_ != nullptr; }
    const Shape& shape() const { return d_->shape; }
    std::size_t size() const { return d_->v.size(); }
    std::size_t dim(std::size_t i) const { return d_->shape.at(i); }

    std::vector<T>& values() { return d_->v; }
    const std::vector<T>& values() const { return d_->v; }
    T item() const {
        if (d_->v.size() != 1) throw std::logic_error("item(): tensor is not scalar");
        return d_->v[0];
    }

    bool requires_grad() const { return d_ && d_->requires_grad; }
    void set_requires_grad(bool b) { d_->requires_grad = b; }
    bool on_tape() const { return d_ && d_->on_tape; }

    std::vector<T>& grad() {
        d_->ensure_grad();
        return d_->g;
    }
    const std::vector<T>& grad() const {
        d_->ensure_grad();
        return d_->g;
    }
    void zero_grad() { d_->g.assign(d_->v.size(), T(0)); }

    std::shared_ptr<TensorData<T>> data() const { return d_; }

private:
    std::shared_ptr<TensorData<T>> d_;
};

template <class T>
inline void check_finite(const Tensor<T>& t, const char* op) {
    for (T x : t.values())
        if (!std::isfinite(x))
            throw std::runtime_error(std::string("non-finite value produced by op '") + op + "'");
}

// Ordered record of primitive applications. Creation order is topological,
// so backward replays the records exactly once in reverse.
template <class T>
class Tape {
public:
    struct Record {
        std::shared_ptr<TensorData<T>> out;
        std::function<void()> back;
    };

    void record(const Tensor<T>& out, std::function<void()> back) {
        records_.push_back({out.data(), std::move(back)});
    }

    std::size_t size() const { return records_.size(); }

    void backward(Tensor<T>& root) {
        if (root.size() != 1) throw std::invalid_argument("backward: root must be scalar");
        if (!root.on_tape()) throw std::invalid_argument("backward: root is detached from the tape");
        root.grad()[0] += T(1);
        for (auto it = records_.rbegin(); it != records_.rend(); ++it) it->back();
    }

    /// Drops all records and the activations they keep alive.
    void clear() { records_.clear(); }

private:
    std::vector<Record> records_;
};

template <class T>
inline Tape<T>*& active_tape() {
    thread_local Tape<T>* t = nullptr;
    return t;
}

// RAII recording context: ops executed while a scope is live are recorded
// onto its tape whenever an input carries gradient.
template <class T>
class TapeScope {
public:
    TapeScope() : prev_(active_tape<T>()) { active_tape<T>() = &tape_; }
    ~TapeScope() { active_tape<T>() = prev_; }
    TapeScope(const TapeScope&) = delete;
    TapeScope& operator=(const TapeScope&) = delete;

    Tape<T>& tape() { return tape_; }
    void backward(Tensor<T>& root) { tape_.backward(root); }

private:
    Tape<T> tape_;
    Tape<T>* prev_;
};

namespace detail {

template <class T>
inline bool wants_grad(const std::shared_ptr<TensorData<T>>& d) {
    return d->requires_grad;
}

template <class T>
inline void accum(const std::shared_ptr<TensorData<T>>& d, std::size_t i, T g) {
    d->ensure_grad();
    d->g[i] += g;
}

// Marks `out` as a recorded differentiable result and registers its pullback.
template <class T>
inline void record_op(Tensor<T>& out, bool any_input_grad, std::function<void()> back,
                      const char* name) {
    if (finite_checks()) check_finite(out, name);
    Tape<T>* tape = active_tape<T>();
    if (!tape || !any_input_grad) return;
    out.data()->requires_grad = true;
    out.data()->on_tape = true;
    tape->record(out, std::move(back));
}

}  // namespace detail

}  // namespace handtex
