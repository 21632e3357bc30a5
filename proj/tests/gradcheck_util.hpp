#pragma once

#include <functional>

#include "gantruth/nn/graph.hpp"
#include "gantruth/rng.hpp"

namespace gantruth::testutil {

struct GradCheckResult {
    size_t coords_checked = 0;
    double worst_rel_error = 0;
    std::string worst_location;
};

// Central finite differences against the tape's analytic gradients.
// `rebuild` must construct a fresh scalar graph from the current values of
// `inputs`; the checker mutates those values in place.
inline GradCheckResult gradcheck(const std::vector<nn::Var<double>>& inputs,
                                 const std::function<nn::Var<double>()>& rebuild, Rng& rng,
                                 double step = 1e-5, size_t max_coords_per_input = 8) {
    for (const auto& in : inputs) in.zero_grad();
    nn::Var<double> root = rebuild();
    nn::backward(root);
    std::vector<std::vector<double>> analytic;
    for (const auto& in : inputs)
        analytic.push_back(in.requires_grad() ? in.grad() : std::vector<double>(in.numel(), 0));

    GradCheckResult result;
    for (size_t i = 0; i < inputs.size(); ++i) {
        const auto& in = inputs[i];
        size_t n = in.numel();
        std::vector<size_t> coords;
        if (n <= max_coords_per_input) {
            for (size_t k = 0; k < n; ++k) coords.push_back(k);
        } else {
            for (size_t k = 0; k < max_coords_per_input; ++k)
                coords.push_back(size_t(rng.uniform_int(0, int64_t(n) - 1)));
        }
        for (size_t k : coords) {
            double saved = in.value()[k];
            in.value()[k] = saved + step;
            double up = rebuild().item();
            in.value()[k] = saved - step;
            double down = rebuild().item();
            in.value()[k] = saved;
            double numeric = (up - down) / (2 * step);
            double a = analytic[i][k];
            double rel = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
            ++result.coords_checked;
            if (rel > result.worst_rel_error) {
                result.worst_rel_error = rel;
                result.worst_location = cat("input ", i, " coord ", k, " analytic ", a,
                                            " numeric ", numeric);
            }
        }
    }
    return result;
}

} // namespace gantruth::testutil
