#include "fedsel/strategies.hpp"

namespace fedsel {

const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::GlobalRaw: return "GM";
        case Strategy::FederatedOnly: return "FM";
        case Strategy::LocalOnly: return "L";
        case Strategy::EvolvingFederated: return "EFM";
        case Strategy::LocalFederated: return "LFM";
        case Strategy::Smoothed: return "SM";
        case Strategy::AdaptiveSmoothed: return "ASM";
        case Strategy::TimeOptimized: return "TOSM";
    }
    return "?";
}

std::optional<Strategy> strategy_from_name(const std::string& name) {
    for (Strategy s : kAllStrategies)
        if (name == strategy_name(s)) return s;
    return std::nullopt;
}

double step_device(DeviceState& st, const Sample& s, const StepContext& ctx) {
    const ExperimentConfig& cfg = *ctx.cfg;
    switch (st.strategy) {
        case Strategy::GlobalRaw:
            // Raw-data baseline: the sample's contribution to the central
            // model is applied by the engine once every device has predicted.
            return predict(*ctx.central_model, s.x);

        case Strategy::FederatedOnly: {
            const double yhat = predict(st.federated_model, s.x);
            st.window.push(s);
            return yhat;
        }

        case Strategy::LocalOnly: {
            const double yhat = predict(st.local_model, s.x);
            st.window.push(s);
            sgd_step_inplace(st.local_model, s, cfg.eta, cfg.lambda);
            return yhat;
        }

        case Strategy::EvolvingFederated:
        case Strategy::LocalFederated: {
            const double yhat = predict(st.local_model, s.x);
            st.window.push(s);
            sgd_step_inplace(st.local_model, s, cfg.eta, cfg.lambda);
            return yhat;
        }

        case Strategy::Smoothed: {
            const double yhat_fed = predict(st.federated_model, s.x);
            const double yhat_loc = predict(st.local_model, s.x);
            const double yhat = blend_predictions(cfg.alpha_fixed, yhat_fed, yhat_loc);
            st.last_alpha = cfg.alpha_fixed;
            // Reward window is still maintained so the blend history stays
            // inspectable even though the weight is fixed.
            st.rewards.push_reward(
                federated_wins(abs_error(s.y, yhat_loc), abs_error(s.y, yhat_fed)));
            st.window.push(s);
            sgd_step_inplace(st.local_model, s, cfg.eta, cfg.lambda);
            return yhat;
        }

        case Strategy::AdaptiveSmoothed: {
            const double yhat_fed = predict(st.federated_model, s.x);
            const double yhat_loc = predict(st.local_model, s.x);
            const double alpha = st.rewards.alpha();  // reflects rewards up to t-1
            const double yhat = blend_predictions(alpha, yhat_fed, yhat_loc);
            st.alpha_sum += alpha;
            ++st.alpha_count;
            st.last_alpha = alpha;
            st.rewards.push_reward(
                federated_wins(abs_error(s.y, yhat_loc), abs_error(s.y, yhat_fed)));
            st.window.push(s);
            sgd_step_inplace(st.local_model, s, cfg.eta, cfg.lambda);
            return yhat;
        }

        case Strategy::TimeOptimized: {
            const double yhat_fed = predict(st.federated_model, s.x);
            const double yhat_loc = predict(st.local_model, s.x);
            const double yhat =
                st.tosm.active == ActiveModel::Federated ? yhat_fed : yhat_loc;
            st.tosm.observe(abs_error(s.y, yhat_loc), abs_error(s.y, yhat_fed));
            st.window.push(s);
            sgd_step_inplace(st.local_model, s, cfg.eta, cfg.lambda);
            return yhat;
        }
    }
    throw ConfigError("step_device: unknown strategy");
}

ClientUpdate epoch_contribute(DeviceState& st, const ModelParams& current_global,
                              const ExperimentConfig& cfg) {
    ClientUpdate update;
    update.device_id = st.device_id;
    update.n_k = static_cast<std::int64_t>(st.window.size());

    switch (st.strategy) {
        case Strategy::LocalFederated:
            update.params = st.local_model;
            return update;

        case Strategy::EvolvingFederated:
            st.local_model = sgd_window(current_global, st.window, cfg.eta, cfg.lambda,
                                        cfg.passes);
            update.params = st.local_model;
            return update;

        case Strategy::Smoothed:
        case Strategy::AdaptiveSmoothed:
        case Strategy::TimeOptimized:
            if (cfg.dual_contribute_local) {
                update.params = st.local_model;
                return update;
            }
            [[fallthrough]];

        case Strategy::FederatedOnly:
            st.federated_model =
                sgd_window(current_global, st.window, cfg.eta, cfg.lambda, cfg.passes);
            update.params = st.federated_model;
            return update;

        default:
            throw ConfigError("epoch_contribute: strategy does not participate in epochs");
    }
}

void epoch_receive(DeviceState& st, const ModelParams& merged_global) {
    switch (st.strategy) {
        case Strategy::FederatedOnly:
        case Strategy::Smoothed:
        case Strategy::AdaptiveSmoothed:
            st.federated_model = merged_global;
            return;
        case Strategy::TimeOptimized:
            st.federated_model = merged_global;
            st.tosm.on_new_federated_model();
            return;
        default:
            // EFM keeps its refit; LFM never takes the broadcast.
            return;
    }
}

}  // namespace fedsel
