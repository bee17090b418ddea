// The experiment engine: a time-stepped loop over all devices and enabled
// strategies with epoch barriers, checkpoint evaluation on disposable state
// copies, parameter sweeps, and report serialization.
//
// Device stepping between barriers is data parallel. ExecPolicy{1} runs the
// plain serial reference loop; higher worker counts run the OpenMP driver,
// which is required to produce bit-identical results (per-device work only
// touches device-local state, and every cross-device fold happens serially
// in a fixed order).
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fedsel/data.hpp"
#include "fedsel/metrics.hpp"
#include "fedsel/strategies.hpp"

namespace fedsel {

struct ExecPolicy {
    int workers = 1;  // 1 = serial reference driver
};

struct CommEvent {
    std::int64_t t = 0;      // test-local step of the epoch
    std::int64_t round = 0;  // t / s_interval
    Strategy strategy;
    int device = 0;
    bool up = false;  // true: device -> coordinator, false: broadcast down
};
using CommSink = std::function<void(const CommEvent&)>;

struct RunOptions {
    CommSink comm_sink;                // live epoch traffic; empty to ignore
    bool evaluate_checkpoints = true;  // false advances the live loop only
};

struct CheckpointRow {
    int checkpoint = 0;
    std::int64_t t = 0;  // test-local step the evaluation started at
    double mae = 0, rmse = 0, smape = 0, kl = 0;
};

struct MetricAggregate {
    double mae = 0, rmse = 0, smape = 0, kl = 0;
};

struct CommRound {
    std::int64_t round = 0;
    std::int64_t t = 0;
    std::int64_t up = 0;
    std::int64_t down = 0;
};

struct ReportDiagnostics {
    std::vector<double> alpha_mean_per_device;               // ASM
    std::vector<std::pair<std::int64_t, double>> alpha_trace;  // ASM, device 0
    std::vector<std::int64_t> switch_counts;                  // TOSM
    std::map<std::string, std::vector<CommRound>> comm;
    std::map<std::string, std::vector<double>> mae_per_device;
    std::string trajectory_hash;  // hash of the final live state
};

struct ParamTuple {
    int u = 0;
    int m = 0;
    std::int64_t s_interval = 0;
    double beta = 0;
};

struct ResultsReport {
    ExperimentConfig config;
    std::vector<std::string> strategies;
    std::map<std::string, std::vector<CheckpointRow>> per_checkpoint;
    std::map<std::string, MetricAggregate> aggregates;
    ReportDiagnostics diagnostics;
    ParamTuple tuple;
};

// Live world state over the test region of the given normalized streams.
// Construction runs the training period: per-device model fitting, the
// initial federated merge, and (when TOSM is enabled) prequential error
// collection over the last tenth of the training split.
class Simulation {
public:
    Simulation(const ExperimentConfig& cfg, const std::vector<DeviceStream>& streams,
               const std::vector<Strategy>& strategies, ExecPolicy policy);
    ~Simulation();
    Simulation(Simulation&&) noexcept;
    Simulation& operator=(Simulation&&) noexcept;

    std::int64_t t() const;
    std::int64_t test_len() const;
    std::int64_t train_len() const;

    // One live step: all devices predict and update, then any epoch barrier.
    void advance(const CommSink& comm_sink = nullptr);

    // Freeze the world, run `horizon` steps on the copy recording pooled
    // (prediction, actual) pairs per strategy (device-major), discard the
    // copy. The live state is untouched.
    std::map<Strategy, PredictionTrace> eval_checkpoint(std::int64_t horizon) const;

    // Hash over every model weight, window, and selector state.
    std::uint64_t state_hash() const;

    ReportDiagnostics diagnostics() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Full protocol run: training period, live test loop with epoch barriers,
// metric evaluation at seeded checkpoint times pooled over devices.
ResultsReport run_experiment(const ExperimentConfig& cfg,
                             const std::vector<DeviceStream>& streams,
                             const std::vector<Strategy>& strategies, ExecPolicy policy = {},
                             const RunOptions& options = {});

struct SweepGrid {
    std::vector<int> u;
    std::vector<int> m;
    std::vector<std::int64_t> s_interval;
    std::vector<double> beta;
};

struct SweepEntry {
    ParamTuple tuple;
    std::optional<ResultsReport> report;
    std::string error;  // non-empty when the run failed
};

// Cartesian product of the grid over the base config, u-major. Each run is
// independent and shares the base seed; failures are recorded per entry and
// do not abort the rest.
std::vector<SweepEntry> run_sweep(const ExperimentConfig& base, const SweepGrid& grid,
                                  const std::vector<DeviceStream>& streams,
                                  const std::vector<Strategy>& strategies,
                                  ExecPolicy policy = {});

// JSON round-trips exactly; CSV is one flat row per (strategy, checkpoint,
// metric) plus diagnostics rows.
std::string report_to_json(const ResultsReport& report);
ResultsReport report_from_json(const std::string& text);
void write_report_csv(const ResultsReport& report, std::ostream& out);

}  // namespace fedsel
