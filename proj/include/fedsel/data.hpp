// Stream ingestion, normalization, synthetic stream generation, drift
// injection, and temporal train/test splitting.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fedsel/core.hpp"

namespace fedsel {

struct DeviceStream {
    int device_id = 0;
    std::vector<Sample> samples;  // strictly increasing t
};

// Column layout of an ingested CSV file.
struct CsvSchema {
    std::string device_col;
    std::string time_col;
    std::string target_col;
    std::vector<std::string> feature_cols;
    char delimiter = ',';
};

struct IngestResult {
    std::vector<DeviceStream> streams;
    std::size_t skipped_rows = 0;
};

// One stream per distinct device id, samples sorted by timestamp. Rows with
// missing or unparseable values are dropped and counted; more than half
// skipped is an error. Missing schema columns raise DataError naming the
// column.
IngestResult ingest_csv(const std::string& path, const CsvSchema& schema);

// Per-dimension z-score followed by min-max scaling into [0,1]. Dimension d
// is the target.
struct NormalizationStats {
    std::vector<double> mu;    // d+1 entries, last is the target
    std::vector<double> sigma;
    std::vector<double> zmin;  // min/max of z-scores over the training region
    std::vector<double> zmax;
};

// Fit from the training prefix (floor(train_fraction * len) per device),
// pooled over all devices. Constant dimensions raise ConfigError.
NormalizationStats fit_normalization(const std::vector<DeviceStream>& streams,
                                     double train_fraction);

// Z-score then scale with the training-region min/max, clamped to [0,1].
void apply_normalization(std::vector<DeviceStream>& streams, const NormalizationStats& stats);

// Parameters of the synthetic generator. Generation is a pure function of
// (spec, device, t), so any sample can be re-derived independently.
struct SynthSpec {
    int k = 20;
    std::int64_t t_len = 20000;
    int d = 8;
    double noise_sigma = 0.05;
    double heterogeneity = 0.3;
    std::uint64_t seed = 1;
};

// Per-device ground-truth weights: shared base plus a heterogeneity-scaled
// unit perturbation. Length d+1, bias first.
std::vector<double> synth_device_truth(const SynthSpec& spec, int device);

// Deterministic smooth feature process in [0,1]^d and the matching target.
std::vector<double> synth_features(const SynthSpec& spec, int device, std::int64_t t);
double synth_noise(const SynthSpec& spec, int device, std::int64_t t);

std::vector<DeviceStream> synth_generate(const SynthSpec& spec);

enum class DriftKind { TargetShift, CoefficientRotation };

struct DriftSpec {
    std::int64_t at_t = 0;  // stream index where the drift begins
    DriftKind kind = DriftKind::TargetShift;
    double magnitude = 0.0;  // shift amount, or rotation angle in degrees
};

// TargetShift adds magnitude to y (clamped to [0,1]) from at_t onward.
// CoefficientRotation regenerates y from the base ground truth rotated by
// magnitude degrees in a seeded 2-plane; it requires the generating
// SynthSpec and is rejected for ingested data.
void inject_drift(std::vector<DeviceStream>& streams, const DriftSpec& drift,
                  const std::optional<SynthSpec>& synth);

// Rotated base weights used for y from the drift point on.
std::vector<double> rotated_truth(const SynthSpec& spec, double degrees);

// Per-device temporal prefix/suffix split at floor(fraction * len).
struct SplitStreams {
    std::vector<DeviceStream> train;
    std::vector<DeviceStream> test;
};
SplitStreams split_streams(const std::vector<DeviceStream>& streams, double fraction);

}  // namespace fedsel
