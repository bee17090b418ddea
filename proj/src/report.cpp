// Report (de)serialization.
#include <cstdio>
#include <ostream>

#include "json.hpp"

#include "fedsel/sim.hpp"

namespace fedsel {

using nlohmann::json;

// Shared with config_io.cpp.
json config_to_json_value(const ExperimentConfig& c);
ExperimentConfig config_from_json_value(const json& j);

json config_to_json_value(const ExperimentConfig& c) {
    return json{{"k", c.k},
                {"d", c.d},
                {"eta", c.eta},
                {"lambda", c.lambda},
                {"m", c.m},
                {"u", c.u},
                {"s_interval", c.s_interval},
                {"beta", c.beta},
                {"alpha_fixed", c.alpha_fixed},
                {"seed", c.seed},
                {"train_fraction", c.train_fraction},
                {"checkpoints", c.checkpoints},
                {"horizon", c.horizon},
                {"selection_fraction", c.selection_fraction},
                {"passes", c.passes},
                {"kl_bins", c.kl_bins},
                {"tosm_constant_expectation", c.tosm_constant_expectation},
                {"dual_contribute_local", c.dual_contribute_local},
                {"lfm_redistribute_l2", c.lfm_redistribute_l2}};
}

ExperimentConfig config_from(const json& j) {
    ExperimentConfig c;
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("k", c.k);
    get("d", c.d);
    get("eta", c.eta);
    get("lambda", c.lambda);
    get("m", c.m);
    get("u", c.u);
    get("s_interval", c.s_interval);
    get("beta", c.beta);
    get("alpha_fixed", c.alpha_fixed);
    get("seed", c.seed);
    get("train_fraction", c.train_fraction);
    get("checkpoints", c.checkpoints);
    get("horizon", c.horizon);
    get("selection_fraction", c.selection_fraction);
    get("passes", c.passes);
    get("kl_bins", c.kl_bins);
    get("tosm_constant_expectation", c.tosm_constant_expectation);
    get("dual_contribute_local", c.dual_contribute_local);
    get("lfm_redistribute_l2", c.lfm_redistribute_l2);
    return c;
}

json tuple_json(const ParamTuple& t) {
    return json{{"u", t.u}, {"m", t.m}, {"s_interval", t.s_interval}, {"beta", t.beta}};
}

ParamTuple tuple_from(const json& j) {
    return ParamTuple{j.at("u").get<int>(), j.at("m").get<int>(),
                      j.at("s_interval").get<std::int64_t>(), j.at("beta").get<double>()};
}

}  // namespace

std::string report_to_json(const ResultsReport& r) {
    json j;
    j["config"] = config_json(r.config);
    j["param_tuple"] = tuple_json(r.tuple);
    j["strategies"] = r.strategies;

    json metrics = json::object();
    for (const auto& [name, rows] : r.per_checkpoint) {
        json arr = json::array();
        for (const CheckpointRow& row : rows)
            arr.push_back(json{{"checkpoint", row.checkpoint},
                               {"t", row.t},
                               {"mae", row.mae},
                               {"rmse", row.rmse},
                               {"smape", row.smape},
                               {"kl", row.kl}});
        metrics[name] = std::move(arr);
    }
    j["metrics"] = std::move(metrics);

    json aggregates = json::object();
    for (const auto& [name, a] : r.aggregates)
        aggregates[name] =
            json{{"mae", a.mae}, {"rmse", a.rmse}, {"smape", a.smape}, {"kl", a.kl}};
    j["aggregates"] = std::move(aggregates);

    json diag;
    diag["alpha_mean_per_device"] = r.diagnostics.alpha_mean_per_device;
    json trace = json::array();
    for (const auto& [t, a] : r.diagnostics.alpha_trace) trace.push_back(json::array({t, a}));
    diag["alpha_trace"] = std::move(trace);
    diag["switch_counts"] = r.diagnostics.switch_counts;
    json comm = json::object();
    for (const auto& [name, rounds] : r.diagnostics.comm) {
        json arr = json::array();
        for (const CommRound& c : rounds)
            arr.push_back(
                json{{"round", c.round}, {"t", c.t}, {"up", c.up}, {"down", c.down}});
        comm[name] = std::move(arr);
    }
    diag["comm"] = std::move(comm);
    diag["mae_per_device"] = r.diagnostics.mae_per_device;
    diag["trajectory_hash"] = r.diagnostics.trajectory_hash;
    j["diagnostics"] = std::move(diag);
    return j.dump(2);
}

ResultsReport report_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("report parse: ") + e.what());
    }
    try {
        ResultsReport r;
        r.config = config_from(j.at("config"));
        r.tuple = tuple_from(j.at("param_tuple"));
        r.strategies = j.at("strategies").get<std::vector<std::string>>();
        for (const auto& [name, arr] : j.at("metrics").items()) {
            std::vector<CheckpointRow> rows;
            for (const json& e : arr)
                rows.push_back(CheckpointRow{e.at("checkpoint").get<int>(),
                                             e.at("t").get<std::int64_t>(),
                                             e.at("mae").get<double>(), e.at("rmse").get<double>(),
                                             e.at("smape").get<double>(),
                                             e.at("kl").get<double>()});
            r.per_checkpoint[name] = std::move(rows);
        }
        for (const auto& [name, a] : j.at("aggregates").items())
            r.aggregates[name] =
                MetricAggregate{a.at("mae").get<double>(), a.at("rmse").get<double>(),
                                a.at("smape").get<double>(), a.at("kl").get<double>()};
        const json& diag = j.at("diagnostics");
        r.diagnostics.alpha_mean_per_device =
            diag.at("alpha_mean_per_device").get<std::vector<double>>();
        for (const json& e : diag.at("alpha_trace"))
            r.diagnostics.alpha_trace.emplace_back(e.at(0).get<std::int64_t>(),
                                                   e.at(1).get<double>());
        r.diagnostics.switch_counts = diag.at("switch_counts").get<std::vector<std::int64_t>>();
        for (const auto& [name, arr] : diag.at("comm").items()) {
            std::vector<CommRound> rounds;
            for (const json& e : arr)
                rounds.push_back(CommRound{e.at("round").get<std::int64_t>(),
                                           e.at("t").get<std::int64_t>(),
                                           e.at("up").get<std::int64_t>(),
                                           e.at("down").get<std::int64_t>()});
            r.diagnostics.comm[name] = std::move(rounds);
        }
        r.diagnostics.mae_per_device =
            diag.at("mae_per_device").get<std::map<std::string, std::vector<double>>>();
        r.diagnostics.trajectory_hash = diag.at("trajectory_hash").get<std::string>();
        return r;
    } catch (const json::exception& e) {
        throw DataError(std::string("report schema: ") + e.what());
    }
}

void write_report_csv(const ResultsReport& r, std::ostream& out) {
    out << "kind,strategy,checkpoint,t,metric,value,u,m,s_interval,beta\n";
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    const std::string tuple = std::to_string(r.tuple.u) + "," + std::to_string(r.tuple.m) + "," +
                              std::to_string(r.tuple.s_interval) + "," + num(r.tuple.beta);
    for (const std::string& name : r.strategies) {
        const auto it = r.per_checkpoint.find(name);
        if (it == r.per_checkpoint.end()) continue;
        for (const CheckpointRow& row : it->second) {
            const std::string prefix = "metric," + name + "," + std::to_string(row.checkpoint) +
                                       "," + std::to_string(row.t) + ",";
            out << prefix << "mae," << num(row.mae) << "," << tuple << "\n";
            out << prefix << "rmse," << num(row.rmse) << "," << tuple << "\n";
            out << prefix << "smape," << num(row.smape) << "," << tuple << "\n";
            out << prefix << "kl," << num(row.kl) << "," << tuple << "\n";
        }
    }
    for (const std::string& name : r.strategies) {
        const auto it = r.aggregates.find(name);
        if (it == r.aggregates.end()) continue;
        const std::string prefix = "diagnostic," + name + ",,,";
        out << prefix << "mean_mae," << num(it->second.mae) << "," << tuple << "\n";
        out << prefix << "mean_rmse," << num(it->second.rmse) << "," << tuple << "\n";
        out << prefix << "mean_smape," << num(it->second.smape) << "," << tuple << "\n";
        out << prefix << "mean_kl," << num(it->second.kl) << "," << tuple << "\n";
    }
    const auto sc = r.diagnostics.switch_counts;
    if (!sc.empty()) {
        double mean = 0;
        for (std::int64_t c : sc) mean += static_cast<double>(c);
        mean /= static_cast<double>(sc.size());
        out << "diagnostic,TOSM,,,mean_switch_count," << num(mean) << "," << tuple << "\n";
    }
    if (!r.diagnostics.alpha_mean_per_device.empty()) {
        double mean = 0;
        for (double a : r.diagnostics.alpha_mean_per_device) mean += a;
        mean /= static_cast<double>(r.diagnostics.alpha_mean_per_device.size());
        out << "diagnostic,ASM,,,mean_alpha," << num(mean) << "," << tuple << "\n";
    }
}

}  // namespace fedsel
