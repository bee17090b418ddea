#include "fedsel/linmodel.hpp"

#include <cmath>
#include <string>

namespace fedsel {

bool ModelParams::finite() const {
    for (double v : w)
        if (!std::isfinite(v)) return false;
    return true;
}

double predict(const ModelParams& m, std::span<const double> x) {
    if (m.w.size() != x.size() + 1)
        throw ConfigError("predict: model has " + std::to_string(m.w.size()) +
                          " weights but input has " + std::to_string(x.size()) + " features");
    double acc = m.w[0];
    for (std::size_t i = 0; i < x.size(); ++i) acc += m.w[i + 1] * x[i];
    return acc;
}

void sgd_step_inplace(ModelParams& m, const Sample& s, double eta, double lambda) {
    const double residual = predict(m, s.x) - s.y;
    const double scale = 2.0 * eta;
    // Bias weight: augmented input component is the constant 1.
    m.w[0] -= scale * (residual + lambda * m.w[0]);
    for (std::size_t i = 0; i < s.x.size(); ++i)
        m.w[i + 1] -= scale * (residual * s.x[i] + lambda * m.w[i + 1]);
    if (!m.finite())
        throw DivergenceError("sgd_step: non-finite weights after update at t=" +
                              std::to_string(s.t));
}

ModelParams sgd_step(const ModelParams& m, const Sample& s, double eta, double lambda) {
    ModelParams out = m;
    sgd_step_inplace(out, s, eta, lambda);
    return out;
}

ModelParams sgd_window(const ModelParams& m, const SlidingWindow<Sample>& w, double eta,
                       double lambda, int passes) {
    ModelParams out = m;
    for (int p = 0; p < passes; ++p)
        for (const Sample& s : w) sgd_step_inplace(out, s, eta, lambda);
    return out;
}

double window_loss(const ModelParams& m, const SlidingWindow<Sample>& w, double lambda) {
    if (w.empty()) throw InsufficientHistoryError("window_loss: empty data window");
    double sq = 0.0;
    for (const Sample& s : w) {
        const double r = s.y - predict(m, s.x);
        sq += r * r;
    }
    double reg = 0.0;
    for (double v : m.w) reg += v * v;
    return sq / static_cast<double>(w.size()) + lambda * reg;
}

}  // namespace fedsel
