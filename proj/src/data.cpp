#include "fedsel/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "fedsel/rng.hpp"

namespace fedsel {

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, delim)) out.push_back(field);
    if (!line.empty() && line.back() == delim) out.emplace_back();
    return out;
}

bool parse_double(const std::string& s, double& out) {
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end > begin && (end[-1] == ' ' || end[-1] == '\t' || end[-1] == '\r')) --end;
    if (begin == end) return false;
    const auto res = std::from_chars(begin, end, out);
    return res.ec == std::errc() && res.ptr == end && std::isfinite(out);
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    std::size_t b = s.find_last_not_of(" \t\r");
    if (a == std::string::npos) return "";
    return s.substr(a, b - a + 1);
}

}  // namespace

IngestResult ingest_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw DataError("ingest_csv: cannot open '" + path + "'");

    std::string header_line;
    if (!std::getline(in, header_line)) throw DataError("ingest_csv: '" + path + "' is empty");
    const std::vector<std::string> header = split_line(header_line, schema.delimiter);

    auto column_index = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (trim(header[i]) == name) return i;
        throw DataError("ingest_csv: column '" + name + "' missing from '" + path + "'");
    };

    const std::size_t dev_idx = column_index(schema.device_col);
    const std::size_t time_idx = column_index(schema.time_col);
    const std::size_t target_idx = column_index(schema.target_col);
    std::vector<std::size_t> feat_idx;
    feat_idx.reserve(schema.feature_cols.size());
    for (const std::string& c : schema.feature_cols) feat_idx.push_back(column_index(c));

    struct Row {
        double time;
        std::size_t order;  // original file position, breaks timestamp ties
        std::vector<double> x;
        double y;
    };
    std::map<std::string, std::vector<Row>> by_device;  // key order fixes device ids
    std::size_t skipped = 0;
    std::size_t total = 0;
    std::string line;
    std::size_t order = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++total;
        const std::vector<std::string> fields = split_line(line, schema.delimiter);
        Row row;
        row.order = order++;
        bool ok = fields.size() >= header.size();
        ok = ok && parse_double(fields[time_idx], row.time);
        ok = ok && parse_double(fields[target_idx], row.y);
        std::string dev_key;
        if (ok) {
            dev_key = trim(fields[dev_idx]);
            ok = !dev_key.empty();
        }
        if (ok) {
            row.x.reserve(feat_idx.size());
            for (std::size_t i : feat_idx) {
                double v;
                if (!parse_double(fields[i], v)) {
                    ok = false;
                    break;
                }
                row.x.push_back(v);
            }
        }
        if (!ok) {
            ++skipped;
            continue;
        }
        by_device[dev_key].push_back(std::move(row));
    }
    if (total == 0) throw DataError("ingest_csv: '" + path + "' has no data rows");
    if (skipped * 2 > total)
        throw DataError("ingest_csv: " + std::to_string(skipped) + " of " +
                        std::to_string(total) + " rows unusable in '" + path + "'");

    IngestResult out;
    out.skipped_rows = skipped;
    int next_id = 0;
    for (auto& [key, rows] : by_device) {
        std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
            return a.time != b.time ? a.time < b.time : a.order < b.order;
        });
        DeviceStream stream;
        stream.device_id = next_id++;
        stream.samples.reserve(rows.size());
        std::int64_t t = 0;
        for (Row& r : rows) {
            Sample s;
            s.t = t++;
            s.x = std::move(r.x);
            s.y = r.y;
            stream.samples.push_back(std::move(s));
        }
        out.streams.push_back(std::move(stream));
    }
    return out;
}

namespace {
std::int64_t train_len_of(const DeviceStream& s, double fraction) {
    return static_cast<std::int64_t>(std::floor(fraction * static_cast<double>(s.samples.size())));
}
}  // namespace

NormalizationStats fit_normalization(const std::vector<DeviceStream>& streams,
                                     double train_fraction) {
    if (streams.empty()) throw ConfigError("fit_normalization: no streams");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ConfigError("fit_normalization: train_fraction must lie in (0,1)");
    const std::size_t d = streams.front().samples.empty() ? 0 : streams.front().samples[0].x.size();
    const std::size_t dims = d + 1;  // features plus target

    std::vector<double> sum(dims, 0.0), sumsq(dims, 0.0);
    std::int64_t n = 0;
    for (const DeviceStream& s : streams) {
        const std::int64_t len = train_len_of(s, train_fraction);
        for (std::int64_t i = 0; i < len; ++i) {
            const Sample& smp = s.samples[static_cast<std::size_t>(i)];
            for (std::size_t j = 0; j < d; ++j) {
                sum[j] += smp.x[j];
                sumsq[j] += smp.x[j] * smp.x[j];
            }
            sum[d] += smp.y;
            sumsq[d] += smp.y * smp.y;
            ++n;
        }
    }
    if (n == 0) throw ConfigError("fit_normalization: training region is empty");

    NormalizationStats stats;
    stats.mu.resize(dims);
    stats.sigma.resize(dims);
    for (std::size_t j = 0; j < dims; ++j) {
        stats.mu[j] = sum[j] / static_cast<double>(n);
        const double var = sumsq[j] / static_cast<double>(n) - stats.mu[j] * stats.mu[j];
        stats.sigma[j] = std::sqrt(std::max(var, 0.0));
        if (stats.sigma[j] <= 0.0)
            throw ConfigError("fit_normalization: dimension " + std::to_string(j) +
                              " is constant over the training region" +
                              (j == d ? " (target)" : ""));
    }

    stats.zmin.assign(dims, std::numeric_limits<double>::infinity());
    stats.zmax.assign(dims, -std::numeric_limits<double>::infinity());
    for (const DeviceStream& s : streams) {
        const std::int64_t len = train_len_of(s, train_fraction);
        for (std::int64_t i = 0; i < len; ++i) {
            const Sample& smp = s.samples[static_cast<std::size_t>(i)];
            for (std::size_t j = 0; j < dims; ++j) {
                const double v = j < d ? smp.x[j] : smp.y;
                const double z = (v - stats.mu[j]) / stats.sigma[j];
                stats.zmin[j] = std::min(stats.zmin[j], z);
                stats.zmax[j] = std::max(stats.zmax[j], z);
            }
        }
    }
    return stats;
}

void apply_normalization(std::vector<DeviceStream>& streams, const NormalizationStats& stats) {
    const std::size_t dims = stats.mu.size();
    const std::size_t d = dims - 1;
    auto scale = [&](double v, std::size_t j) {
        const double z = (v - stats.mu[j]) / stats.sigma[j];
        const double span = stats.zmax[j] - stats.zmin[j];
        return std::clamp((z - stats.zmin[j]) / span, 0.0, 1.0);
    };
    for (DeviceStream& s : streams)
        for (Sample& smp : s.samples) {
            for (std::size_t j = 0; j < d; ++j) smp.x[j] = scale(smp.x[j], j);
            smp.y = scale(smp.y, d);
        }
}

namespace {
constexpr std::uint64_t kTruthTag = 0x7471;
constexpr std::uint64_t kFeatTag = 0xfea7;
constexpr std::uint64_t kNoiseTag = 0x401c;
constexpr std::uint64_t kPlaneTag = 0x9a3e;

// Shared base weights, scaled so targets land inside the unit interval for
// features in [0,1]^d before clamping.
std::vector<double> synth_base_truth(const SynthSpec& spec) {
    Rng rng(mix_seed(spec.seed, kTruthTag));
    std::vector<double> raw(static_cast<std::size_t>(spec.d));
    double abs_sum = 0.0;
    for (double& v : raw) {
        v = 2.0 * rng.next_unit() - 1.0;
        abs_sum += std::abs(v);
    }
    const double scale = 0.8 / std::max(1.0, abs_sum);
    std::vector<double> w(static_cast<std::size_t>(spec.d) + 1);
    double centered = 0.0;
    for (int i = 0; i < spec.d; ++i) {
        w[static_cast<std::size_t>(i) + 1] = raw[static_cast<std::size_t>(i)] * scale;
        centered += w[static_cast<std::size_t>(i) + 1];
    }
    w[0] = 0.5 - 0.5 * centered;  // E[y] = 0.5 when features average 0.5
    return w;
}

std::vector<double> unit_sphere_vector(Rng& rng, std::size_t dims) {
    std::vector<double> v(dims);
    double norm = 0.0;
    do {
        norm = 0.0;
        for (double& e : v) {
            e = rng.next_gaussian();
            norm += e * e;
        }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (double& e : v) e /= norm;
    return v;
}
}  // namespace

std::vector<double> synth_device_truth(const SynthSpec& spec, int device) {
    std::vector<double> w = synth_base_truth(spec);
    if (spec.heterogeneity > 0.0) {
        Rng rng(mix_seed(spec.seed, kTruthTag, static_cast<std::uint64_t>(device) + 1));
        const std::vector<double> u = unit_sphere_vector(rng, w.size());
        for (std::size_t i = 0; i < w.size(); ++i) w[i] += spec.heterogeneity * u[i];
    }
    return w;
}

std::vector<double> synth_features(const SynthSpec& spec, int device, std::int64_t t) {
    std::vector<double> x(static_cast<std::size_t>(spec.d));
    for (int i = 0; i < spec.d; ++i) {
        Rng param_rng(mix_seed(spec.seed, kFeatTag, static_cast<std::uint64_t>(device),
                               static_cast<std::uint64_t>(i)));
        const double f1 = 1.0 / (50.0 + 350.0 * param_rng.next_unit());
        const double f2 = 1.0 / (10.0 + 40.0 * param_rng.next_unit());
        const double p1 = param_rng.next_unit();
        const double p2 = param_rng.next_unit();
        Rng jitter_rng(mix_seed(spec.seed, kFeatTag, static_cast<std::uint64_t>(device),
                                static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(t)));
        const double td = static_cast<double>(t);
        const double v = 0.5 + 0.3 * std::sin(6.283185307179586 * (f1 * td + p1)) +
                         0.15 * std::sin(6.283185307179586 * (f2 * td + p2)) +
                         0.05 * jitter_rng.next_gaussian();
        x[static_cast<std::size_t>(i)] = std::clamp(v, 0.0, 1.0);
    }
    return x;
}

double synth_noise(const SynthSpec& spec, int device, std::int64_t t) {
    if (spec.noise_sigma <= 0.0) return 0.0;
    Rng rng(mix_seed(spec.seed, kNoiseTag, static_cast<std::uint64_t>(device),
                     static_cast<std::uint64_t>(t)));
    return spec.noise_sigma * rng.next_gaussian();
}

namespace {
double truth_output(const std::vector<double>& w, const std::vector<double>& x) {
    double acc = w[0];
    for (std::size_t i = 0; i < x.size(); ++i) acc += w[i + 1] * x[i];
    return acc;
}
}  // namespace

std::vector<DeviceStream> synth_generate(const SynthSpec& spec) {
    if (spec.k <= 0 || spec.t_len <= 0 || spec.d <= 0)
        throw ConfigError("synth_generate: k, t and d must be positive");
    if (spec.heterogeneity < 0.0 || spec.noise_sigma < 0.0)
        throw ConfigError("synth_generate: noise_sigma and heterogeneity must be >= 0");
    std::vector<DeviceStream> streams(static_cast<std::size_t>(spec.k));
    for (int k = 0; k < spec.k; ++k) {
        DeviceStream& stream = streams[static_cast<std::size_t>(k)];
        stream.device_id = k;
        stream.samples.resize(static_cast<std::size_t>(spec.t_len));
        const std::vector<double> w = synth_device_truth(spec, k);
        for (std::int64_t t = 0; t < spec.t_len; ++t) {
            Sample& s = stream.samples[static_cast<std::size_t>(t)];
            s.t = t;
            s.x = synth_features(spec, k, t);
            s.y = std::clamp(truth_output(w, s.x) + synth_noise(spec, k, t), 0.0, 1.0);
        }
    }
    return streams;
}

std::vector<double> rotated_truth(const SynthSpec& spec, double degrees) {
    std::vector<double> w = synth_base_truth(spec);
    const std::size_t dims = w.size();
    Rng rng(mix_seed(spec.seed, kPlaneTag));
    std::vector<double> a = unit_sphere_vector(rng, dims);
    std::vector<double> b = unit_sphere_vector(rng, dims);
    double dot = 0.0;
    for (std::size_t i = 0; i < dims; ++i) dot += a[i] * b[i];
    double norm = 0.0;
    for (std::size_t i = 0; i < dims; ++i) {
        b[i] -= dot * a[i];
        norm += b[i] * b[i];
    }
    norm = std::sqrt(norm);
    for (double& e : b) e /= norm;

    const double theta = degrees * 3.14159265358979323846 / 180.0;
    double wa = 0.0, wb = 0.0;
    for (std::size_t i = 0; i < dims; ++i) {
        wa += w[i] * a[i];
        wb += w[i] * b[i];
    }
    const double c = std::cos(theta) - 1.0;
    const double s = std::sin(theta);
    for (std::size_t i = 0; i < dims; ++i)
        w[i] += c * (wa * a[i] + wb * b[i]) + s * (wa * b[i] - wb * a[i]);
    return w;
}

void inject_drift(std::vector<DeviceStream>& streams, const DriftSpec& drift,
                  const std::optional<SynthSpec>& synth) {
    if (drift.kind == DriftKind::TargetShift) {
        for (DeviceStream& stream : streams)
            for (Sample& s : stream.samples)
                if (s.t >= drift.at_t) s.y = std::clamp(s.y + drift.magnitude, 0.0, 1.0);
        return;
    }
    if (!synth.has_value())
        throw ConfigError(
            "inject_drift: coefficient rotation requires synthetic streams with their "
            "generator parameters");
    const std::vector<double> w = rotated_truth(*synth, drift.magnitude);
    for (DeviceStream& stream : streams)
        for (Sample& s : stream.samples)
            if (s.t >= drift.at_t)
                s.y = std::clamp(truth_output(w, s.x) + synth_noise(*synth, stream.device_id, s.t),
                                 0.0, 1.0);
}

SplitStreams split_streams(const std::vector<DeviceStream>& streams, double fraction) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw ConfigError("split: fraction must lie strictly inside (0,1)");
    SplitStreams out;
    for (const DeviceStream& s : streams) {
        const auto cut = static_cast<std::size_t>(train_len_of(s, fraction));
        if (cut == 0 || cut == s.samples.size())
            throw ConfigError("split: device " + std::to_string(s.device_id) +
                              " would get an empty train or test side");
        DeviceStream train{s.device_id, {s.samples.begin(), s.samples.begin() + cut}};
        DeviceStream test{s.device_id, {s.samples.begin() + cut, s.samples.end()}};
        out.train.push_back(std::move(train));
        out.test.push_back(std::move(test));
    }
    return out;
}

}  // namespace fedsel
