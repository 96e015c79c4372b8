#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "handtex/tensor.hpp"

namespace handtex {

struct GradCheckReport {
    bool pass = true;
    double max_rel_err = 0.0;
    std::size_t worst_input = 0;
    std::size_t worst_element = 0;
    std::string note;
};

// Compares reverse-mode gradients of a scalar-valued function against central
// differences (f(x+h) - f(x-h)) / 2h, elementwise over every input. Meant to
// run in 64-bit mode; 32-bit rounding drowns the difference signal.
inline GradCheckReport grad_check(
    const std::function<Tensor<double>(const std::vector<Tensor<double>>&)>& f,
    std::vector<Tensor<double>> inputs, double h = 1e-5, double tol = 1e-4) {
    GradCheckReport rep;

    // clone so neither requires_grad flags nor accumulated gradients leak into
    // (or from) the caller's tensors
    for (auto& in : inputs) {
        in = Tensor<double>(in.shape(), in.values());
        in.set_requires_grad(true);
    }

    std::vector<std::vector<double>> analytic;
    {
        TapeScope<double> scope;
        Tensor<double> out = f(inputs);
        if (out.size() != 1) {
            rep.pass = false;
            rep.note = "function output is not scalar";
            return rep;
        }
        scope.backward(out);
        for (auto& in : inputs) analytic.push_back(in.grad());
    }

    // Absolute tolerance scaled to the graph's gradient magnitude: a
    // discrepancy six orders below the largest gradient is indistinguishable
    // from central-difference roundoff (e.g. parameters whose true gradient
    // is exactly zero, like a key bias under softmax shift invariance).
    double gmax_global = 0;
    for (const auto& g : analytic)
        for (double v : g) gmax_global = std::max(gmax_global, std::abs(v));
    const double atol = std::max(1e-10, 1e-6 * gmax_global);

    for (std::size_t ii = 0; ii < inputs.size(); ++ii) {
        auto& in = inputs[ii];
        // Scale-aware floor: an element whose gradient sits >= 3 orders of
        // magnitude below its tensor's gradient scale is smaller than the
        // roundoff noise central differences can resolve on a deep graph, so
        // it is compared against that scale instead of against itself.
        double gmax = 0;
        for (double g : analytic[ii]) gmax = std::max(gmax, std::abs(g));
        const double denom_floor = std::max(1e-8, 1e-3 * gmax);
        for (std::size_t e = 0; e < in.size(); ++e) {
            const double x0 = in.values()[e];
            in.values()[e] = x0 + h;
            const double fp = f(inputs).item();
            in.values()[e] = x0 - h;
            const double fm = f(inputs).item();
            in.values()[e] = x0;
            const double numeric = (fp - fm) / (2.0 * h);
            const double a = analytic[ii][e];
            if (std::abs(a - numeric) <= atol) continue;
            const double rel =
                std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), denom_floor});
            if (rel > rep.max_rel_err) {
                rep.max_rel_err = rel;
                rep.worst_input = ii;
                rep.worst_element = e;
            }
        }
    }
    rep.pass = rep.max_rel_err < tol;
    return rep;
}

}  // namespace handtex
