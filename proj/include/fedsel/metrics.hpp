// Accuracy and information-loss metrics over prediction traces.
#pragma once

#include <utility>
#include <vector>

#include "fedsel/core.hpp"

namespace fedsel {

// Ordered (prediction, actual) pairs.
struct PredictionTrace {
    std::vector<std::pair<double, double>> pairs;

    void add(double yhat, double y) { pairs.emplace_back(yhat, y); }
    bool empty() const { return pairs.empty(); }
    std::size_t size() const { return pairs.size(); }
};

double mae(const PredictionTrace& trace);
double rmse(const PredictionTrace& trace);

// (100/T) * sum |yhat - y| / (|y| + |yhat|); zero-denominator terms
// contribute 0. Result lies in [0, 100].
double smape(const PredictionTrace& trace);

// Histogram KL divergence between the predicted and actual value
// distributions over [0,1]. Equal-width bins with additive smoothing 1e-9;
// values outside [0,1] land in the edge bins.
double kl_divergence(const std::vector<double>& predicted, const std::vector<double>& actual,
                     int bins);

}  // namespace fedsel
