#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "chspect/model.hpp"

namespace chspect {

enum class Station { A, B };

inline const char* to_string(Station s) { return s == Station::A ? "A" : "B"; }

/// One detection: which station clicked, in which spectrograph channel, when.
struct DetectionEvent {
    Station station = Station::A;
    int channel = 0;
    double timestamp = 0.0;  // seconds

    friend bool operator==(const DetectionEvent&, const DetectionEvent&) = default;
};

/// Emission clock and coincidence window. The constraints w > 2j and
/// w < T - 2j make true pairs always fall inside one window and distinct
/// pairs never share one.
struct TimingConfig {
    double pair_period = 1e-6;  // T, seconds between emitted pairs
    double jitter = 0.0;        // j, uniform timestamp jitter amplitude
    double window = 2.5e-7;     // w, coincidence window

    void validate() const {
        require(std::isfinite(pair_period) && pair_period > 0.0, "pair period T must be > 0");
        require(std::isfinite(jitter) && jitter >= 0.0, "jitter must be >= 0");
        require(std::isfinite(window) && window > 0.0, "window must be > 0");
        require(window > 2.0 * jitter, "window must exceed 2*jitter");
        require(window < pair_period - 2.0 * jitter, "window must stay below T - 2*jitter");
    }
};

/// Everything one run produced: the two time-ordered event streams plus the
/// reproducibility handles (master seed, run index).
struct RunRecord {
    SettingPair pair = SettingPair::AB;
    std::int64_t pair_count = 0;  // emitted pairs N
    std::vector<DetectionEvent> stream_a;
    std::vector<DetectionEvent> stream_b;
    std::uint64_t seed = 0;
    int run_index = 0;
};

}  // namespace chspect
