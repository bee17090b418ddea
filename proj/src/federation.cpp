#include "fedsel/federation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fedsel/rng.hpp"

namespace fedsel {

ModelParams fedavg(const std::vector<ClientUpdate>& updates) {
    if (updates.empty()) throw ConfigError("fedavg: no client updates to aggregate");
    const std::size_t dim = updates.front().params.w.size();
    std::int64_t total = 0;
    for (const ClientUpdate& u : updates) {
        if (u.params.w.size() != dim)
            throw ConfigError("fedavg: update from device " + std::to_string(u.device_id) +
                              " has mismatched dimension");
        if (u.n_k < 1)
            throw ConfigError("fedavg: update from device " + std::to_string(u.device_id) +
                              " has non-positive sample count");
        total += u.n_k;
    }
    ModelParams out;
    out.w.assign(dim, 0.0);
    for (const ClientUpdate& u : updates) {
        const double weight = static_cast<double>(u.n_k) / static_cast<double>(total);
        for (std::size_t i = 0; i < dim; ++i) out.w[i] += weight * u.params.w[i];
    }
    return out;
}

std::vector<int> select_clients(int k, double fraction, std::int64_t round, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw ConfigError("select_clients: fraction must lie in (0,1]");
    const int n_sel = static_cast<int>(
        std::min<double>(k, std::ceil(fraction * static_cast<double>(k))));
    std::vector<int> ids(static_cast<std::size_t>(k));
    std::iota(ids.begin(), ids.end(), 0);
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(round)));
    // Partial Fisher-Yates: the first n_sel slots are the selection.
    for (int i = 0; i < n_sel; ++i) {
        const auto j = i + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(k - i)));
        std::swap(ids[static_cast<std::size_t>(i)], ids[static_cast<std::size_t>(j)]);
    }
    ids.resize(static_cast<std::size_t>(n_sel));
    std::sort(ids.begin(), ids.end());
    return ids;
}

bool is_epoch(std::int64_t t, const EpochSchedule& sched) {
    return t > 0 && t % sched.s_interval == 0;
}

}  // namespace fedsel
