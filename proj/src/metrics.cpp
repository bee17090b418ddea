#include "fedsel/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace fedsel {

namespace {
constexpr double kSmoothing = 1e-9;

void require_nonempty(const PredictionTrace& trace, const char* op) {
    if (trace.empty()) throw MetricError(std::string(op) + ": empty prediction trace");
}
}  // namespace

double mae(const PredictionTrace& trace) {
    require_nonempty(trace, "mae");
    double acc = 0.0;
    for (const auto& [yhat, y] : trace.pairs) acc += std::abs(yhat - y);
    return acc / static_cast<double>(trace.size());
}

double rmse(const PredictionTrace& trace) {
    require_nonempty(trace, "rmse");
    double acc = 0.0;
    for (const auto& [yhat, y] : trace.pairs) acc += (yhat - y) * (yhat - y);
    return std::sqrt(acc / static_cast<double>(trace.size()));
}

double smape(const PredictionTrace& trace) {
    require_nonempty(trace, "smape");
    double acc = 0.0;
    for (const auto& [yhat, y] : trace.pairs) {
        const double den = std::abs(y) + std::abs(yhat);
        if (den > 0.0) acc += std::abs(yhat - y) / den;
    }
    return 100.0 * acc / static_cast<double>(trace.size());
}

namespace {
std::vector<double> smoothed_density(const std::vector<double>& values, int bins) {
    std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
    for (double v : values) {
        const double c = std::clamp(v, 0.0, 1.0);
        auto idx = static_cast<std::size_t>(
            std::min<double>(bins - 1, std::floor(c * bins)));
        counts[idx] += 1.0;
    }
    const double total = static_cast<double>(values.size()) + bins * kSmoothing;
    for (double& c : counts) c = (c + kSmoothing) / total;
    return counts;
}
}  // namespace

double kl_divergence(const std::vector<double>& predicted, const std::vector<double>& actual,
                     int bins) {
    if (predicted.empty() || actual.empty())
        throw MetricError("kl_divergence: empty value list");
    if (bins < 2) throw ConfigError("kl_divergence: bins must be >= 2");
    const std::vector<double> q = smoothed_density(predicted, bins);
    const std::vector<double> p = smoothed_density(actual, bins);
    double acc = 0.0;
    for (int i = 0; i < bins; ++i) acc += q[i] * std::log(q[i] / p[i]);
    return acc;
}

}  // namespace fedsel
