#include "fedsel/selection.hpp"

#include <algorithm>

namespace fedsel {

EmpiricalCdf EmpiricalCdf::fit(std::vector<double> errors) {
    if (errors.empty()) throw InsufficientHistoryError("fit_error_cdf: no training errors");
    std::sort(errors.begin(), errors.end());
    EmpiricalCdf out;
    out.sorted_ = std::move(errors);
    return out;
}

double EmpiricalCdf::cdf(double v) const {
    if (sorted_.empty()) throw InsufficientHistoryError("EmpiricalCdf: not trained");
    const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), v);
    return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

double switch_threshold(double beta, double expectation) {
    if (!(beta > 0.0 && beta < 1.0))
        throw ConfigError("switch_threshold: beta must lie strictly inside (0,1)");
    return beta / (1.0 - beta) * expectation;
}

namespace {
// The sum is an integer and the threshold a computed ratio; the relative
// slack keeps e.g. sum == 9 vs beta/(1-beta) == 9 from landing on the wrong
// side of one rounding error. A zero sum never trips the rule.
bool crossed(std::int64_t sum, double threshold) {
    return sum > 0 && static_cast<double>(sum) >= threshold * (1.0 - 1e-12);
}
}  // namespace

ActiveModel TosmState::observe(double eps_local, double eps_fed) {
    if (!trained())
        throw InsufficientHistoryError("tosm: training period incomplete, error CDFs unset");
    if (active == ActiveModel::Federated) {
        running_sum += local_wins(eps_local, eps_fed);
        const double expectation =
            use_constant_expectation ? expectation_z : 1.0 - cdf_local_err.cdf(eps_fed);
        if (crossed(running_sum, switch_threshold(beta, expectation))) {
            active = ActiveModel::Local;
            running_sum = 0;
            ++switch_count;
        }
    } else {
        running_sum += federated_wins(eps_local, eps_fed);
        const double expectation =
            use_constant_expectation ? expectation_q : 1.0 - cdf_fed_err.cdf(eps_local);
        if (crossed(running_sum, switch_threshold(beta, expectation))) {
            active = ActiveModel::Federated;
            running_sum = 0;
            ++switch_count;
        }
    }
    return active;
}

void TosmState::on_new_federated_model() {
    active = ActiveModel::Federated;
    running_sum = 0;
}

}  // namespace fedsel
