// Linear ridge regression with per-sample SGD. The weight vector carries the
// bias at index 0; indices 1..d align with the feature vector.
#pragma once

#include <span>
#include <vector>

#include "fedsel/core.hpp"

namespace fedsel {

struct ModelParams {
    std::vector<double> w;  // length d+1, w[0] is the bias weight

    ModelParams() = default;
    explicit ModelParams(int d) : w(static_cast<std::size_t>(d) + 1, 0.0) {}

    int dim() const { return static_cast<int>(w.size()) - 1; }
    bool finite() const;
};

// w0 + sum_i w[i+1] * x[i]. Throws ConfigError on dimension mismatch.
double predict(const ModelParams& m, std::span<const double> x);

// One gradient step on the per-sample ridge loss (y - f(x))^2 + lambda*|w|^2.
// The gradient is 2*(f(x) - y)*[1, x] + 2*lambda*w. Throws DivergenceError
// if the update produces non-finite weights.
void sgd_step_inplace(ModelParams& m, const Sample& s, double eta, double lambda);
ModelParams sgd_step(const ModelParams& m, const Sample& s, double eta, double lambda);

// Sequential SGD over the window, oldest to newest, repeated `passes` times.
// An empty window returns the model unchanged.
ModelParams sgd_window(const ModelParams& m, const SlidingWindow<Sample>& w, double eta,
                       double lambda, int passes);

// Mean squared residual over the window plus lambda*|w|^2.
double window_loss(const ModelParams& m, const SlidingWindow<Sample>& w, double lambda);

}  // namespace fedsel
