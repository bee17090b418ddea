// The two per-device selection mechanisms: adaptive reward-window weighting
// of the federated and local predictions, and threshold-based switching
// between them driven by accumulated win counts against trained error
// distributions.
#pragma once

#include <cstdint>
#include <vector>

#include "fedsel/core.hpp"

namespace fedsel {

inline double abs_error(double y, double yhat) { return y > yhat ? y - yhat : yhat - y; }

// Reward for the federated model: 1 iff eps_fed <= eps_local (ties win).
inline int federated_wins(double eps_local, double eps_fed) {
    return eps_fed <= eps_local ? 1 : 0;
}

// Reward for the local model: 1 iff eps_local <= eps_fed (ties win).
inline int local_wins(double eps_local, double eps_fed) {
    return eps_local <= eps_fed ? 1 : 0;
}

// Reward window of the most recent <= U federated-wins outcomes, with the
// running sum tracked incrementally so the blending weight is O(1) per step.
class AsmState {
public:
    explicit AsmState(std::size_t capacity) : window_(capacity) {}

    void push_reward(int theta) {
        if (window_.full()) sum_ -= window_.at(0);
        window_.push(theta);
        sum_ += theta;
    }

    // Mean of the reward window; 1 on an empty window (cold start: with the
    // local model initialized from the federated one the choice is neutral).
    double alpha() const {
        if (window_.empty()) return 1.0;
        return static_cast<double>(sum_) / static_cast<double>(window_.size());
    }

    const SlidingWindow<int>& window() const { return window_; }

private:
    SlidingWindow<int> window_;
    long sum_ = 0;
};

// alpha * yhat_fed + (1 - alpha) * yhat_local.
inline double blend_predictions(double alpha, double yhat_fed, double yhat_local) {
    return alpha * yhat_fed + (1.0 - alpha) * yhat_local;
}

// Empirical CDF over a set of observed error magnitudes.
class EmpiricalCdf {
public:
    EmpiricalCdf() = default;

    static EmpiricalCdf fit(std::vector<double> errors);

    // Fraction of stored values <= v.
    double cdf(double v) const;

    bool trained() const { return !sorted_.empty(); }
    std::size_t count() const { return sorted_.size(); }

private:
    std::vector<double> sorted_;
};

// (beta / (1 - beta)) * expectation. Throws ConfigError unless beta in (0,1).
double switch_threshold(double beta, double expectation);

enum class ActiveModel { Federated, Local };

// Switching state: which model is live, the running win count for the idle
// model, and the trained error distributions that scale the thresholds.
struct TosmState {
    ActiveModel active = ActiveModel::Federated;
    std::int64_t running_sum = 0;
    double beta = 0.3;
    EmpiricalCdf cdf_local_err;
    EmpiricalCdf cdf_fed_err;
    long switch_count = 0;

    // Frozen expectations estimated from paired training errors; used in
    // place of the per-step CDF lookup when use_constant_expectation is set.
    bool use_constant_expectation = false;
    double expectation_z = 0.5;  // P(eps_local <= eps_fed)
    double expectation_q = 0.5;  // P(eps_fed <= eps_local)

    bool trained() const { return cdf_local_err.trained() && cdf_fed_err.trained(); }

    // Feed one step's paired errors; returns the model to use for the next
    // prediction. The running sum resets on every switch.
    ActiveModel observe(double eps_local, double eps_fed);

    // A fresh federated model arrived: activate it and reset the sum.
    // Trained CDFs and the switch count are untouched.
    void on_new_federated_model();
};

}  // namespace fedsel
