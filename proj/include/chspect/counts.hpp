#pragma once

#include <array>
#include <cstdint>
#include <numeric>
#include <vector>

#include "chspect/model.hpp"

namespace chspect {

/// Per-channel singles and coincidences for one run, plus the recorded
/// per-station stream totals. Counts are signed so that invalid tables can be
/// represented and audited rather than rejected at construction.
struct ChannelCounts {
    SettingPair pair = SettingPair::AB;
    std::vector<std::int64_t> singles_a;
    std::vector<std::int64_t> singles_b;
    std::vector<std::int64_t> coincidences;
    std::int64_t cross_channel_noise = 0;
    std::int64_t total_a = 0;  // events recorded in stream A
    std::int64_t total_b = 0;

    int channel_count() const { return static_cast<int>(singles_a.size()); }

    std::int64_t sum_singles_a() const {
        return std::accumulate(singles_a.begin(), singles_a.end(), std::int64_t{0});
    }
    std::int64_t sum_singles_b() const {
        return std::accumulate(singles_b.begin(), singles_b.end(), std::int64_t{0});
    }
    std::int64_t sum_coincidences() const {
        return std::accumulate(coincidences.begin(), coincidences.end(), std::int64_t{0});
    }

    friend bool operator==(const ChannelCounts&, const ChannelCounts&) = default;
};

/// The four runs of one experiment, sharing K and the emitted pair count N.
struct CountTable {
    int channel_count = 0;
    std::int64_t pairs_per_run = 0;  // N, identical across runs
    std::array<ChannelCounts, kNumSettingPairs> runs;

    const ChannelCounts& run(SettingPair p) const { return runs[static_cast<int>(p)]; }
    ChannelCounts& run(SettingPair p) { return runs[static_cast<int>(p)]; }

    /// Structural check only (shapes and labels); the physical features #1-#3
    /// are the audit's job, so violating tables stay representable.
    void validate_shape() const {
        require(channel_count >= 1, "count table needs channel_count >= 1");
        require(pairs_per_run >= 0, "count table needs N >= 0");
        for (SettingPair p : all_setting_pairs()) {
            const ChannelCounts& c = run(p);
            require(c.pair == p, "count table run label mismatch");
            require(static_cast<int>(c.singles_a.size()) == channel_count &&
                        static_cast<int>(c.singles_b.size()) == channel_count &&
                        static_cast<int>(c.coincidences.size()) == channel_count,
                    "count table arrays must have length channel_count");
        }
    }

    friend bool operator==(const CountTable&, const CountTable&) = default;
};

}  // namespace chspect
