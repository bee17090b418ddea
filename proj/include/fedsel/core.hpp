// Shared domain types: samples, bounded sliding windows, experiment
// configuration, and the error taxonomy used across the library.
#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fedsel {

// Usage and configuration problems (CLI exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or unusable input data (CLI exit code 2).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Training produced non-finite model parameters (CLI exit code 1).
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An operation that requires prior observations was called without any.
struct InsufficientHistoryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Metric evaluated on an empty trace.
struct MetricError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One timestamped observation at an edge device. Feature values and the
// target are expected to lie in [0,1] once normalization has been applied.
struct Sample {
    std::int64_t t = 0;
    std::vector<double> x;
    double y = 0.0;
};

// Bounded FIFO buffer. Pushing into a full window evicts the oldest item;
// indexing and iteration run oldest to newest. Items are stored by value so
// a window never aliases its source stream.
template <typename T>
class SlidingWindow {
public:
    explicit SlidingWindow(std::size_t capacity) : cap_(capacity) {
        if (capacity == 0) throw ConfigError("sliding window capacity must be positive");
    }

    void push(const T& item) {
        if (buf_.size() < cap_) {
            buf_.push_back(item);
        } else {
            buf_[head_] = item;
            head_ = (head_ + 1) % cap_;
        }
    }

    std::size_t size() const { return buf_.size(); }
    std::size_t capacity() const { return cap_; }
    bool empty() const { return buf_.empty(); }
    bool full() const { return buf_.size() == cap_; }

    // i = 0 is the oldest item.
    const T& at(std::size_t i) const { return buf_[(head_ + i) % buf_.size()]; }

    void clear() {
        buf_.clear();
        head_ = 0;
    }

    class const_iterator {
    public:
        const_iterator(const SlidingWindow* w, std::size_t i) : w_(w), i_(i) {}
        const T& operator*() const { return w_->at(i_); }
        const_iterator& operator++() {
            ++i_;
            return *this;
        }
        bool operator!=(const const_iterator& o) const { return i_ != o.i_; }

    private:
        const SlidingWindow* w_;
        std::size_t i_;
    };

    const_iterator begin() const { return const_iterator(this, 0); }
    const_iterator end() const { return const_iterator(this, buf_.size()); }

private:
    std::size_t cap_;
    std::size_t head_ = 0;
    std::vector<T> buf_;
};

// Mean of a window of 0/1 rewards.
double window_mean(const SlidingWindow<int>& w);

// All knobs of a single experiment. Field names double as the config-file
// and override keys.
struct ExperimentConfig {
    int k = 20;                     // number of edge devices
    int d = 8;                      // feature dimension
    double eta = 0.01;              // SGD learning rate
    double lambda = 1e-4;           // ridge coefficient
    int m = 250;                    // data window capacity
    int u = 50;                     // reward window capacity
    std::int64_t s_interval = 250;  // steps between federation epochs
    double beta = 0.3;              // switching tolerance, in (0,1)
    double alpha_fixed = 0.5;       // fixed blending weight for SM
    std::uint64_t seed = 1;
    double train_fraction = 0.158;
    int checkpoints = 24;           // evaluation points per run
    std::int64_t horizon = 250;     // samples evaluated per checkpoint
    double selection_fraction = 1.0;
    int passes = 1;                 // window refit passes per epoch
    int kl_bins = 50;
    bool tosm_constant_expectation = false;
    bool dual_contribute_local = false;  // SM/ASM/TOSM send local model at epochs
    double lfm_redistribute_l2 = 0.0;    // 0 disables redistribution

    // Throws ConfigError naming the offending field.
    void validate() const;
};

}  // namespace fedsel
