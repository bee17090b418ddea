#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <string>

#include "fedsel/rng.hpp"
#include "fedsel/sim.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fedsel {

namespace {

constexpr std::uint64_t kSelectTag = 0x5e1ec7;
constexpr std::uint64_t kCheckpointTag = 0xc4ec;
constexpr std::uint64_t kHashBasis = 0xcbf29ce484222325ull;
constexpr std::uint64_t kHashPrime = 0x00000100000001b3ull;

void hash_u64(std::uint64_t& h, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xff;
        h *= kHashPrime;
    }
}

void hash_double(std::uint64_t& h, double v) { hash_u64(h, std::bit_cast<std::uint64_t>(v)); }

void hash_model(std::uint64_t& h, const ModelParams& m) {
    for (double w : m.w) hash_double(h, w);
}

// Fan the per-device body of one phase out over devices. workers == 1 is
// the serial reference loop; the OpenMP driver must match it bit for bit,
// which holds because the body writes only device-local state. Exceptions
// are re-thrown after the join, lowest device id first, so error behavior
// is identical across drivers.
template <typename F>
void for_each_device(const ExecPolicy& policy, int k, F&& body) {
    if (policy.workers <= 1) {
        for (int i = 0; i < k; ++i) body(i);
        return;
    }
#ifdef _OPENMP
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(k));
#pragma omp parallel for schedule(static) num_threads(policy.workers)
    for (int i = 0; i < k; ++i) {
        try {
            body(i);
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);
#else
    for (int i = 0; i < k; ++i) body(i);
#endif
}

struct Lane {
    Strategy strategy;
    ModelParams global;           // coordinator-side model for this strategy
    ModelParams last_distributed;  // LFM redistribution reference
    std::vector<DeviceState> devices;
};

struct EngineState {
    std::int64_t t = 0;  // test-local step
    std::vector<Lane> lanes;
};

// Per-device (prediction, actual) slots for one evaluation window.
struct TraceBuffer {
    // [lane][device] -> pairs in step order
    std::vector<std::vector<std::vector<std::pair<double, double>>>> slots;

    TraceBuffer(std::size_t lanes, std::size_t devices, std::size_t horizon) {
        slots.resize(lanes);
        for (auto& lane : slots) {
            lane.resize(devices);
            for (auto& dev : lane) dev.reserve(horizon);
        }
    }
};

}  // namespace

struct Simulation::Impl {
    ExperimentConfig cfg;
    ExecPolicy policy;
    EpochSchedule schedule;
    int k = 0;
    std::int64_t train_length = 0;
    std::int64_t test_length = 0;
    std::vector<std::vector<Sample>> test;  // [device][t]

    EngineState state;
    int gm_lane = -1;
    int asm_lane = -1;
    int tosm_lane = -1;

    // Live diagnostics.
    std::vector<std::pair<std::int64_t, double>> alpha_trace;
    std::int64_t alpha_stride = 1;
    std::map<std::string, std::vector<CommRound>> comm_rounds;

    Impl(const ExperimentConfig& config, const std::vector<DeviceStream>& streams,
         const std::vector<Strategy>& strategies, ExecPolicy pol);

    void train_period(const std::vector<DeviceStream>& train_streams,
                      const std::vector<Strategy>& strategies,
                      std::vector<ModelParams>& locals_out, ModelParams& gm_out,
                      std::vector<EmpiricalCdf>& cdf_local, std::vector<EmpiricalCdf>& cdf_fed,
                      std::vector<double>& p_local_wins, std::vector<double>& p_fed_wins);

    // round_log is non-null only for live stepping; checkpoint evaluation
    // leaves the live diagnostics untouched.
    void step(EngineState& es, TraceBuffer* sink, const CommSink& comm,
              std::map<std::string, std::vector<CommRound>>* round_log) const;
    void run_epoch(EngineState& es, std::int64_t t, const CommSink& comm,
                   std::map<std::string, std::vector<CommRound>>* round_log) const;
};

namespace {
std::vector<Strategy> canonical_strategies(const std::vector<Strategy>& in) {
    std::vector<Strategy> out;
    for (Strategy s : kAllStrategies)
        if (std::find(in.begin(), in.end(), s) != in.end()) out.push_back(s);
    return out;
}
}  // namespace

Simulation::Impl::Impl(const ExperimentConfig& config, const std::vector<DeviceStream>& streams,
                       const std::vector<Strategy>& strategies, ExecPolicy pol)
    : cfg(config), policy(pol) {
    cfg.validate();
    if (strategies.empty()) throw ConfigError("run: no strategies enabled");
    if (streams.empty()) throw ConfigError("run: no device streams");
    if (static_cast<int>(streams.size()) != cfg.k)
        throw ConfigError("run: config expects " + std::to_string(cfg.k) + " devices but " +
                          std::to_string(streams.size()) + " streams were provided");
    k = cfg.k;
    schedule = EpochSchedule{cfg.s_interval, cfg.selection_fraction, cfg.seed};

    // All devices share one time axis; ragged streams are trimmed to the
    // shortest so epochs and checkpoints line up.
    std::size_t min_len = std::numeric_limits<std::size_t>::max();
    for (const DeviceStream& s : streams) min_len = std::min(min_len, s.samples.size());
    if (min_len < 2) throw ConfigError("run: streams too short");
    for (const DeviceStream& s : streams)
        for (const Sample& smp : s.samples)
            if (static_cast<int>(smp.x.size()) != cfg.d)
                throw ConfigError("run: stream feature dimension does not match config d");

    train_length = static_cast<std::int64_t>(
        std::floor(cfg.train_fraction * static_cast<double>(min_len)));
    test_length = static_cast<std::int64_t>(min_len) - train_length;
    if (train_length < 10)
        throw ConfigError("run: training region has fewer than 10 samples per device");
    if (test_length < 1) throw ConfigError("run: test region is empty");

    std::vector<DeviceStream> train_streams(static_cast<std::size_t>(k));
    test.resize(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        const auto& src = streams[static_cast<std::size_t>(i)].samples;
        auto& tr = train_streams[static_cast<std::size_t>(i)];
        tr.device_id = i;
        tr.samples.assign(src.begin(), src.begin() + train_length);
        test[static_cast<std::size_t>(i)].assign(src.begin() + train_length,
                                                 src.begin() + train_length + test_length);
    }

    const std::vector<Strategy> enabled = canonical_strategies(strategies);

    std::vector<ModelParams> locals;
    ModelParams gm_model(cfg.d);
    std::vector<EmpiricalCdf> cdf_local, cdf_fed;
    std::vector<double> p_local_wins, p_fed_wins;
    train_period(train_streams, enabled, locals, gm_model, cdf_local, cdf_fed, p_local_wins,
                 p_fed_wins);

    // Initial federated model: merge of every device's training-period model.
    std::vector<ClientUpdate> initial;
    initial.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i)
        initial.push_back({i, locals[static_cast<std::size_t>(i)], train_length});
    const ModelParams f_fl = fedavg(initial);

    state.lanes.reserve(enabled.size());
    for (Strategy s : enabled) {
        Lane lane;
        lane.strategy = s;
        lane.global = s == Strategy::GlobalRaw ? gm_model : f_fl;
        lane.last_distributed = f_fl;
        lane.devices.reserve(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) {
            DeviceState dev(i, s, cfg);
            switch (s) {
                case Strategy::GlobalRaw:
                    break;
                case Strategy::LocalOnly:
                    // Built without the coordinator: keeps its own
                    // training-period model.
                    dev.local_model = locals[static_cast<std::size_t>(i)];
                    break;
                case Strategy::FederatedOnly:
                    dev.federated_model = f_fl;
                    break;
                default:
                    dev.local_model = f_fl;
                    dev.federated_model = f_fl;
                    break;
            }
            if (s == Strategy::TimeOptimized) {
                dev.tosm.cdf_local_err = cdf_local[static_cast<std::size_t>(i)];
                dev.tosm.cdf_fed_err = cdf_fed[static_cast<std::size_t>(i)];
                dev.tosm.expectation_z = p_local_wins[static_cast<std::size_t>(i)];
                dev.tosm.expectation_q = p_fed_wins[static_cast<std::size_t>(i)];
            }
            // The stream is continuous, so windows start holding the
            // training tail rather than empty.
            const auto& tr = train_streams[static_cast<std::size_t>(i)].samples;
            const std::size_t fill = std::min<std::size_t>(tr.size(), static_cast<std::size_t>(cfg.m));
            for (std::size_t j = tr.size() - fill; j < tr.size(); ++j) dev.window.push(tr[j]);
            lane.devices.push_back(std::move(dev));
        }
        const int idx = static_cast<int>(state.lanes.size());
        if (s == Strategy::GlobalRaw) gm_lane = idx;
        if (s == Strategy::AdaptiveSmoothed) asm_lane = idx;
        if (s == Strategy::TimeOptimized) tosm_lane = idx;
        state.lanes.push_back(std::move(lane));
    }

    alpha_stride = std::max<std::int64_t>(1, test_length / 512);
}

void Simulation::Impl::train_period(const std::vector<DeviceStream>& train_streams,
                                    const std::vector<Strategy>& strategies,
                                    std::vector<ModelParams>& locals_out, ModelParams& gm_out,
                                    std::vector<EmpiricalCdf>& cdf_local,
                                    std::vector<EmpiricalCdf>& cdf_fed,
                                    std::vector<double>& p_local_wins,
                                    std::vector<double>& p_fed_wins) {
    const bool want_gm =
        std::find(strategies.begin(), strategies.end(), Strategy::GlobalRaw) != strategies.end();
    const bool want_tosm = std::find(strategies.begin(), strategies.end(),
                                     Strategy::TimeOptimized) != strategies.end();

    // Error distributions come from the last tenth of the training split,
    // collected prequentially against a mid-training federated merge so no
    // model ever sees a sample before predicting it.
    const std::int64_t boundary = train_length - train_length / 10;

    locals_out.assign(static_cast<std::size_t>(k), ModelParams(cfg.d));
    for_each_device(policy, k, [&](int i) {
        ModelParams& m = locals_out[static_cast<std::size_t>(i)];
        const auto& samples = train_streams[static_cast<std::size_t>(i)].samples;
        for (std::int64_t t = 0; t < boundary; ++t)
            sgd_step_inplace(m, samples[static_cast<std::size_t>(t)], cfg.eta, cfg.lambda);
    });

    ModelParams interim(cfg.d);
    if (want_tosm) {
        std::vector<ClientUpdate> ups;
        for (int i = 0; i < k; ++i)
            ups.push_back({i, locals_out[static_cast<std::size_t>(i)], std::max<std::int64_t>(boundary, 1)});
        interim = fedavg(ups);
    }

    cdf_local.assign(static_cast<std::size_t>(k), EmpiricalCdf{});
    cdf_fed.assign(static_cast<std::size_t>(k), EmpiricalCdf{});
    p_local_wins.assign(static_cast<std::size_t>(k), 0.5);
    p_fed_wins.assign(static_cast<std::size_t>(k), 0.5);

    for_each_device(policy, k, [&](int i) {
        ModelParams& m = locals_out[static_cast<std::size_t>(i)];
        const auto& samples = train_streams[static_cast<std::size_t>(i)].samples;
        std::vector<double> errs_local, errs_fed;
        errs_local.reserve(static_cast<std::size_t>(train_length - boundary));
        errs_fed.reserve(static_cast<std::size_t>(train_length - boundary));
        long local_tally = 0, fed_tally = 0;
        for (std::int64_t t = boundary; t < train_length; ++t) {
            const Sample& s = samples[static_cast<std::size_t>(t)];
            if (want_tosm) {
                const double eps_l = abs_error(s.y, predict(m, s.x));
                const double eps_f = abs_error(s.y, predict(interim, s.x));
                errs_local.push_back(eps_l);
                errs_fed.push_back(eps_f);
                local_tally += local_wins(eps_l, eps_f);
                fed_tally += federated_wins(eps_l, eps_f);
            }
            sgd_step_inplace(m, s, cfg.eta, cfg.lambda);
        }
        if (want_tosm && !errs_local.empty()) {
            cdf_local[static_cast<std::size_t>(i)] = EmpiricalCdf::fit(std::move(errs_local));
            cdf_fed[static_cast<std::size_t>(i)] = EmpiricalCdf::fit(std::move(errs_fed));
            const auto n = static_cast<double>(train_length - boundary);
            p_local_wins[static_cast<std::size_t>(i)] = static_cast<double>(local_tally) / n;
            p_fed_wins[static_cast<std::size_t>(i)] = static_cast<double>(fed_tally) / n;
        }
    });

    gm_out = ModelParams(cfg.d);
    if (want_gm) {
        // The raw-data baseline consumes every device's sample each step,
        // device order fixed.
        for (std::int64_t t = 0; t < train_length; ++t)
            for (int i = 0; i < k; ++i)
                sgd_step_inplace(gm_out,
                                 train_streams[static_cast<std::size_t>(i)]
                                     .samples[static_cast<std::size_t>(t)],
                                 cfg.eta, cfg.lambda);
    }
}

void Simulation::Impl::step(EngineState& es, TraceBuffer* sink, const CommSink& comm,
                            std::map<std::string, std::vector<CommRound>>* round_log) const {
    const std::int64_t t = es.t;
    const ModelParams* central = gm_lane >= 0 ? &es.lanes[static_cast<std::size_t>(gm_lane)].global
                                              : nullptr;
    const StepContext ctx{&cfg, central};
    const std::size_t n_lanes = es.lanes.size();

    for_each_device(policy, k, [&](int i) {
        const Sample& s = test[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)];
        for (std::size_t l = 0; l < n_lanes; ++l) {
            DeviceState& dev = es.lanes[l].devices[static_cast<std::size_t>(i)];
            try {
                const double yhat = step_device(dev, s, ctx);
                if (sink)
                    sink->slots[l][static_cast<std::size_t>(i)].emplace_back(yhat, s.y);
            } catch (const DivergenceError& e) {
                throw DivergenceError(std::string(e.what()) + " (device " + std::to_string(i) +
                                      ", strategy " + strategy_name(es.lanes[l].strategy) + ")");
            }
        }
    });

    // Central raw-data model updates: serial, device order fixed.
    if (gm_lane >= 0) {
        ModelParams& gm = es.lanes[static_cast<std::size_t>(gm_lane)].global;
        for (int i = 0; i < k; ++i)
            sgd_step_inplace(gm, test[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)],
                             cfg.eta, cfg.lambda);
    }

    if (is_epoch(t, schedule)) run_epoch(es, t, comm, round_log);
    ++es.t;
}

void Simulation::Impl::run_epoch(EngineState& es, std::int64_t t, const CommSink& comm,
                                 std::map<std::string, std::vector<CommRound>>* round_log) const {
    const std::int64_t round = t / cfg.s_interval;
    const std::vector<int> selected =
        select_clients(k, cfg.selection_fraction, round, mix_seed(cfg.seed, kSelectTag));

    for (Lane& lane : es.lanes) {
        if (lane.strategy == Strategy::GlobalRaw || lane.strategy == Strategy::LocalOnly)
            continue;

        std::int64_t ups = 0, downs = 0;
        auto emit = [&](int device, bool up) {
            (up ? ups : downs) += 1;
            if (comm) comm(CommEvent{t, round, lane.strategy, device, up});
        };

        std::vector<ClientUpdate> updates;
        updates.reserve(selected.size());
        for (int id : selected) {
            DeviceState& dev = lane.devices[static_cast<std::size_t>(id)];
            if (lane.strategy == Strategy::EvolvingFederated)
                emit(id, false);  // receives the pre-merge global to refit
            updates.push_back(epoch_contribute(dev, lane.global, cfg));
            emit(id, true);
        }
        lane.global = fedavg(updates);

        switch (lane.strategy) {
            case Strategy::FederatedOnly:
            case Strategy::Smoothed:
            case Strategy::AdaptiveSmoothed:
            case Strategy::TimeOptimized:
                for (int i = 0; i < k; ++i) {
                    epoch_receive(lane.devices[static_cast<std::size_t>(i)], lane.global);
                    emit(i, false);
                }
                break;
            case Strategy::LocalFederated:
                if (cfg.lfm_redistribute_l2 > 0.0) {
                    double sq = 0.0;
                    for (std::size_t j = 0; j < lane.global.w.size(); ++j) {
                        const double dlt = lane.global.w[j] - lane.last_distributed.w[j];
                        sq += dlt * dlt;
                    }
                    if (std::sqrt(sq) > cfg.lfm_redistribute_l2) {
                        for (int i = 0; i < k; ++i) {
                            lane.devices[static_cast<std::size_t>(i)].local_model = lane.global;
                            emit(i, false);
                        }
                        lane.last_distributed = lane.global;
                    }
                }
                break;
            default:
                break;
        }

        if (round_log)
            (*round_log)[strategy_name(lane.strategy)].push_back(CommRound{round, t, ups, downs});
    }
}

Simulation::Simulation(const ExperimentConfig& cfg, const std::vector<DeviceStream>& streams,
                       const std::vector<Strategy>& strategies, ExecPolicy policy)
    : impl_(std::make_unique<Impl>(cfg, streams, strategies, policy)) {}

Simulation::~Simulation() = default;
Simulation::Simulation(Simulation&&) noexcept = default;
Simulation& Simulation::operator=(Simulation&&) noexcept = default;

std::int64_t Simulation::t() const { return impl_->state.t; }
std::int64_t Simulation::test_len() const { return impl_->test_length; }
std::int64_t Simulation::train_len() const { return impl_->train_length; }

void Simulation::advance(const CommSink& comm_sink) {
    Impl& im = *impl_;
    if (im.state.t >= im.test_length) throw ConfigError("advance: past end of test stream");
    const std::int64_t t = im.state.t;
    im.step(im.state, nullptr, comm_sink, &im.comm_rounds);
    if (im.asm_lane >= 0 && t % im.alpha_stride == 0) {
        const DeviceState& dev0 = im.state.lanes[static_cast<std::size_t>(im.asm_lane)].devices[0];
        im.alpha_trace.emplace_back(t, dev0.last_alpha);
    }
}

std::map<Strategy, PredictionTrace> Simulation::eval_checkpoint(std::int64_t horizon) const {
    const Impl& im = *impl_;
    if (im.state.t + horizon > im.test_length)
        throw ConfigError("eval_checkpoint: horizon overruns the test stream");
    EngineState copy = im.state;
    TraceBuffer buf(copy.lanes.size(), static_cast<std::size_t>(im.k),
                    static_cast<std::size_t>(horizon));
    for (std::int64_t h = 0; h < horizon; ++h) im.step(copy, &buf, nullptr, nullptr);

    std::map<Strategy, PredictionTrace> out;
    for (std::size_t l = 0; l < copy.lanes.size(); ++l) {
        PredictionTrace trace;
        trace.pairs.reserve(static_cast<std::size_t>(im.k) * static_cast<std::size_t>(horizon));
        for (int i = 0; i < im.k; ++i)
            for (const auto& pr : buf.slots[l][static_cast<std::size_t>(i)])
                trace.pairs.push_back(pr);
        out.emplace(copy.lanes[l].strategy, std::move(trace));
    }
    return out;
}

std::uint64_t Simulation::state_hash() const {
    const Impl& im = *impl_;
    std::uint64_t h = kHashBasis;
    hash_u64(h, static_cast<std::uint64_t>(im.state.t));
    for (const Lane& lane : im.state.lanes) {
        hash_u64(h, static_cast<std::uint64_t>(lane.strategy));
        hash_model(h, lane.global);
        for (const DeviceState& dev : lane.devices) {
            hash_model(h, dev.local_model);
            hash_model(h, dev.federated_model);
            for (const Sample& s : dev.window) {
                hash_u64(h, static_cast<std::uint64_t>(s.t));
                for (double v : s.x) hash_double(h, v);
                hash_double(h, s.y);
            }
            for (int r : dev.rewards.window()) hash_u64(h, static_cast<std::uint64_t>(r));
            hash_u64(h, static_cast<std::uint64_t>(dev.tosm.active));
            hash_u64(h, static_cast<std::uint64_t>(dev.tosm.running_sum));
            hash_u64(h, static_cast<std::uint64_t>(dev.tosm.switch_count));
        }
    }
    return h;
}

ReportDiagnostics Simulation::diagnostics() const {
    const Impl& im = *impl_;
    ReportDiagnostics diag;
    if (im.asm_lane >= 0) {
        const Lane& lane = im.state.lanes[static_cast<std::size_t>(im.asm_lane)];
        diag.alpha_mean_per_device.reserve(lane.devices.size());
        for (const DeviceState& dev : lane.devices)
            diag.alpha_mean_per_device.push_back(
                dev.alpha_count > 0 ? dev.alpha_sum / static_cast<double>(dev.alpha_count) : 1.0);
        diag.alpha_trace = im.alpha_trace;
    }
    if (im.tosm_lane >= 0) {
        const Lane& lane = im.state.lanes[static_cast<std::size_t>(im.tosm_lane)];
        diag.switch_counts.reserve(lane.devices.size());
        for (const DeviceState& dev : lane.devices)
            diag.switch_counts.push_back(dev.tosm.switch_count);
    }
    diag.comm = im.comm_rounds;
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(state_hash()));
    diag.trajectory_hash = buf;
    return diag;
}

namespace {

std::vector<std::int64_t> draw_checkpoints(const ExperimentConfig& cfg, std::int64_t test_len) {
    const std::int64_t span = test_len - cfg.horizon;
    if (span < 0 || static_cast<std::int64_t>(cfg.checkpoints) * cfg.horizon > test_len)
        throw ConfigError("checkpoints: test region too short for " +
                          std::to_string(cfg.checkpoints) + " windows of " +
                          std::to_string(cfg.horizon));
    Rng rng(mix_seed(cfg.seed, kCheckpointTag));
    std::vector<std::int64_t> times;
    std::int64_t attempts = 0;
    const std::int64_t max_attempts = 100000 + 1000 * cfg.checkpoints;
    while (static_cast<int>(times.size()) < cfg.checkpoints) {
        if (++attempts > max_attempts)
            throw ConfigError("checkpoints: could not place non-overlapping windows");
        const auto c = static_cast<std::int64_t>(rng.next_below(
            static_cast<std::uint64_t>(span + 1)));
        bool ok = true;
        for (std::int64_t prev : times)
            if (std::abs(prev - c) < cfg.horizon) {
                ok = false;
                break;
            }
        if (ok) times.push_back(c);
    }
    std::sort(times.begin(), times.end());
    return times;
}

CheckpointRow metrics_row(int index, std::int64_t t, const PredictionTrace& trace, int kl_bins) {
    CheckpointRow row;
    row.checkpoint = index;
    row.t = t;
    row.mae = mae(trace);
    row.rmse = rmse(trace);
    row.smape = smape(trace);
    std::vector<double> yhat, y;
    yhat.reserve(trace.size());
    y.reserve(trace.size());
    for (const auto& [p, a] : trace.pairs) {
        yhat.push_back(p);
        y.push_back(a);
    }
    row.kl = kl_divergence(yhat, y, kl_bins);
    return row;
}

}  // namespace

ResultsReport run_experiment(const ExperimentConfig& cfg, const std::vector<DeviceStream>& streams,
                             const std::vector<Strategy>& strategies, ExecPolicy policy,
                             const RunOptions& options) {
    Simulation sim(cfg, streams, strategies, policy);
    const std::int64_t test_len = sim.test_len();
    std::vector<std::int64_t> cps;
    if (options.evaluate_checkpoints) cps = draw_checkpoints(cfg, test_len);

    ResultsReport report;
    report.config = cfg;
    report.tuple = ParamTuple{cfg.u, cfg.m, cfg.s_interval, cfg.beta};
    const std::vector<Strategy> enabled = canonical_strategies(strategies);
    for (Strategy s : enabled) report.strategies.emplace_back(strategy_name(s));

    std::map<std::string, std::vector<double>> abs_err_sums;  // per device
    std::map<std::string, std::vector<std::int64_t>> abs_err_counts;
    for (const std::string& name : report.strategies) {
        abs_err_sums[name].assign(static_cast<std::size_t>(cfg.k), 0.0);
        abs_err_counts[name].assign(static_cast<std::size_t>(cfg.k), 0);
    }

    std::size_t next_cp = 0;
    for (std::int64_t t = 0; t < test_len; ++t) {
        if (next_cp < cps.size() && cps[next_cp] == t) {
            const auto traces = sim.eval_checkpoint(cfg.horizon);
            for (const auto& [strat, trace] : traces) {
                const std::string name = strategy_name(strat);
                report.per_checkpoint[name].push_back(
                    metrics_row(static_cast<int>(next_cp), t, trace, cfg.kl_bins));
                auto& sums = abs_err_sums[name];
                auto& counts = abs_err_counts[name];
                const auto horizon = static_cast<std::size_t>(cfg.horizon);
                for (int dev = 0; dev < cfg.k; ++dev) {
                    const std::size_t base = static_cast<std::size_t>(dev) * horizon;
                    for (std::size_t j = 0; j < horizon; ++j) {
                        const auto& [p, a] = trace.pairs[base + j];
                        sums[static_cast<std::size_t>(dev)] += std::abs(p - a);
                    }
                    counts[static_cast<std::size_t>(dev)] += cfg.horizon;
                }
            }
            ++next_cp;
        }
        sim.advance(options.comm_sink);
    }

    for (const std::string& name : report.strategies) {
        MetricAggregate agg;
        const auto& rows = report.per_checkpoint[name];
        for (const CheckpointRow& r : rows) {
            agg.mae += r.mae;
            agg.rmse += r.rmse;
            agg.smape += r.smape;
            agg.kl += r.kl;
        }
        if (!rows.empty()) {
            const auto n = static_cast<double>(rows.size());
            agg.mae /= n;
            agg.rmse /= n;
            agg.smape /= n;
            agg.kl /= n;
        }
        report.aggregates[name] = agg;
    }

    report.diagnostics = sim.diagnostics();
    for (const std::string& name : report.strategies) {
        std::vector<double> per_dev(static_cast<std::size_t>(cfg.k), 0.0);
        for (int dev = 0; dev < cfg.k; ++dev) {
            const auto cnt = abs_err_counts[name][static_cast<std::size_t>(dev)];
            per_dev[static_cast<std::size_t>(dev)] =
                cnt > 0 ? abs_err_sums[name][static_cast<std::size_t>(dev)] /
                              static_cast<double>(cnt)
                        : 0.0;
        }
        report.diagnostics.mae_per_device[name] = std::move(per_dev);
    }
    return report;
}

std::vector<SweepEntry> run_sweep(const ExperimentConfig& base, const SweepGrid& grid,
                                  const std::vector<DeviceStream>& streams,
                                  const std::vector<Strategy>& strategies, ExecPolicy policy) {
    if (grid.u.empty() || grid.m.empty() || grid.s_interval.empty() || grid.beta.empty())
        throw ConfigError("sweep: every grid list must be non-empty");

    std::vector<ExperimentConfig> configs;
    for (int u : grid.u)
        for (int m : grid.m)
            for (std::int64_t s : grid.s_interval)
                for (double beta : grid.beta) {
                    ExperimentConfig cfg = base;
                    cfg.u = u;
                    cfg.m = m;
                    cfg.s_interval = s;
                    cfg.beta = beta;
                    configs.push_back(cfg);
                }

    std::vector<SweepEntry> entries(configs.size());
    const int n = static_cast<int>(configs.size());
    const ExecPolicy inner{1};  // runs fan out; each run is the serial path

    auto run_one = [&](int i) {
        const ExperimentConfig& cfg = configs[static_cast<std::size_t>(i)];
        SweepEntry& entry = entries[static_cast<std::size_t>(i)];
        entry.tuple = ParamTuple{cfg.u, cfg.m, cfg.s_interval, cfg.beta};
        try {
            entry.report = run_experiment(cfg, streams, strategies, inner, RunOptions{});
        } catch (const std::exception& e) {
            entry.error = e.what();
        }
    };

    if (policy.workers > 1) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(policy.workers)
        for (int i = 0; i < n; ++i) run_one(i);
#else
        for (int i = 0; i < n; ++i) run_one(i);
#endif
    } else {
        for (int i = 0; i < n; ++i) run_one(i);
    }
    return entries;
}

}  // namespace fedsel
