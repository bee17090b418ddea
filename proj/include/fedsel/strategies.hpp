// The per-device prediction policies. Each strategy is a step function:
// observe x_t, emit a prediction, observe y_t, update state. Predictions are
// always computed before the incoming sample touches any state.
#pragma once

#include <array>
#include <optional>
#include <string>

#include "fedsel/federation.hpp"
#include "fedsel/selection.hpp"

namespace fedsel {

enum class Strategy {
    GlobalRaw,          // GM: one central model fed every device's raw samples
    FederatedOnly,      // FM: frozen federated model between epochs
    LocalOnly,          // L: per-device SGD, no coordinator
    EvolvingFederated,  // EFM: selected devices keep their refit, skip broadcasts
    LocalFederated,     // LFM: devices send local models up, nothing comes down
    Smoothed,           // SM: fixed-weight blend of federated and local
    AdaptiveSmoothed,   // ASM: reward-window-weighted blend
    TimeOptimized,      // TOSM: threshold-switched single active model
};

inline constexpr std::array<Strategy, 8> kAllStrategies = {
    Strategy::GlobalRaw,        Strategy::FederatedOnly,  Strategy::LocalOnly,
    Strategy::EvolvingFederated, Strategy::LocalFederated, Strategy::Smoothed,
    Strategy::AdaptiveSmoothed, Strategy::TimeOptimized,
};

const char* strategy_name(Strategy s);
std::optional<Strategy> strategy_from_name(const std::string& name);

struct DeviceState {
    int device_id = 0;
    Strategy strategy = Strategy::LocalOnly;
    ModelParams local_model;
    ModelParams federated_model;
    SlidingWindow<Sample> window;  // capacity M
    AsmState rewards;              // capacity U, SM/ASM only
    TosmState tosm;

    // Diagnostics accumulated over live stepping.
    double alpha_sum = 0.0;
    std::int64_t alpha_count = 0;
    double last_alpha = 1.0;

    DeviceState(int id, Strategy s, const ExperimentConfig& cfg)
        : device_id(id),
          strategy(s),
          local_model(cfg.d),
          federated_model(cfg.d),
          window(static_cast<std::size_t>(cfg.m)),
          rewards(static_cast<std::size_t>(cfg.u)) {
        tosm.beta = cfg.beta;
        tosm.use_constant_expectation = cfg.tosm_constant_expectation;
    }
};

struct StepContext {
    const ExperimentConfig* cfg;
    const ModelParams* central_model = nullptr;  // GM predictions read this
};

// Advance one device by one sample. Returns the emitted prediction. The
// central GM model is read-only here; its updates are applied by the engine
// after all devices of the step have predicted.
double step_device(DeviceState& st, const Sample& s, const StepContext& ctx);

// Epoch upload phase for a selected device. `current_global` is the
// coordinator's model before this round's merge. Returns the update to send.
ClientUpdate epoch_contribute(DeviceState& st, const ModelParams& current_global,
                              const ExperimentConfig& cfg);

// Epoch broadcast phase: the merged global reaches this device.
void epoch_receive(DeviceState& st, const ModelParams& merged_global);

}  // namespace fedsel
