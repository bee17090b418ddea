// Central-location machinery: sample-count-weighted model averaging, client
// selection, and epoch scheduling.
#pragma once

#include <cstdint>
#include <vector>

#include "fedsel/linmodel.hpp"

namespace fedsel {

struct ClientUpdate {
    int device_id = 0;
    ModelParams params;
    std::int64_t n_k = 1;  // sample count backing this update, >= 1
};

struct EpochSchedule {
    std::int64_t s_interval = 250;
    double selection_fraction = 1.0;
    std::uint64_t rng_seed = 0;
};

// Weighted average sum_k (n_k / N) * w_k with N = sum_k n_k. Folds the
// updates in list order, so callers wanting bit-identical results across
// arrival orders must sort by device_id first.
ModelParams fedavg(const std::vector<ClientUpdate>& updates);

// ceil(fraction * k) distinct device ids, uniform without replacement,
// returned in ascending order. Deterministic given (round, seed).
std::vector<int> select_clients(int k, double fraction, std::int64_t round, std::uint64_t seed);

// True iff t is a federation round time: t > 0 and t % s_interval == 0.
bool is_epoch(std::int64_t t, const EpochSchedule& sched);

}  // namespace fedsel
