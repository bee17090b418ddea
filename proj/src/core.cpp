#include "fedsel/core.hpp"

namespace fedsel {

double window_mean(const SlidingWindow<int>& w) {
    if (w.empty()) throw InsufficientHistoryError("window_mean: empty reward window");
    long sum = 0;
    for (int v : w) sum += v;
    return static_cast<double>(sum) / static_cast<double>(w.size());
}

void ExperimentConfig::validate() const {
    auto positive = [](const char* name, auto v) {
        if (v <= 0) throw ConfigError(std::string("config field '") + name + "' must be positive");
    };
    positive("k", k);
    positive("d", d);
    positive("eta", eta);
    if (lambda < 0) throw ConfigError("config field 'lambda' must be >= 0");
    positive("m", m);
    positive("u", u);
    positive("s_interval", s_interval);
    if (!(beta > 0.0 && beta < 1.0))
        throw ConfigError("config field 'beta' must lie strictly inside (0,1)");
    if (!(alpha_fixed >= 0.0 && alpha_fixed <= 1.0))
        throw ConfigError("config field 'alpha_fixed' must lie in [0,1]");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ConfigError("config field 'train_fraction' must lie strictly inside (0,1)");
    positive("checkpoints", checkpoints);
    positive("horizon", horizon);
    if (!(selection_fraction > 0.0 && selection_fraction <= 1.0))
        throw ConfigError("config field 'selection_fraction' must lie in (0,1]");
    if (passes < 1) throw ConfigError("config field 'passes' must be >= 1");
    if (kl_bins < 2) throw ConfigError("config field 'kl_bins' must be >= 2");
    if (lfm_redistribute_l2 < 0)
        throw ConfigError("config field 'lfm_redistribute_l2' must be >= 0");
}

}  // namespace fedsel
