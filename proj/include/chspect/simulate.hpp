#pragma once

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <vector>

#include "chspect/coincidence.hpp"
#include "chspect/counts.hpp"
#include "chspect/events.hpp"
#include "chspect/model.hpp"
#include "chspect/rng.hpp"

namespace chspect {

/// Generates one run: N emitted pairs at fixed settings. Per pair n the draws
/// are, in order: channel from rho, joint outcome, jitter A, jitter B; events
/// are stamped n*T plus uniform jitter in [-j, +j]. With T > 2j the streams
/// come out time-ordered by construction.
inline RunRecord run_experiment(const HiddenVariableModel& model, SettingPair pair,
                                const SettingsQuad& quad, std::int64_t pair_count,
                                const TimingConfig& timing, std::uint64_t seed, int run_index) {
    model.validate();
    quad.validate();
    timing.validate();
    require(pair_count >= 0, "pair count N must be >= 0");
    require(run_index >= 0, "run index must be >= 0");

    const int channels = model.config.channel_count;
    std::vector<double> cumulative(channels);
    double acc = 0.0;
    for (int i = 0; i < channels; ++i) {
        acc += model.distribution.weights[i];
        cumulative[i] = acc;
    }
    cumulative[channels - 1] = 1.0;

    RunRecord run;
    run.pair = pair;
    run.pair_count = pair_count;
    run.seed = seed;
    run.run_index = run_index;
    run.stream_a.reserve(static_cast<std::size_t>(pair_count));
    run.stream_b.reserve(static_cast<std::size_t>(pair_count));

    const auto run_key = static_cast<std::uint64_t>(run_index);
    for (std::int64_t n = 0; n < pair_count; ++n) {
        const auto pair_key = static_cast<std::uint64_t>(n);
        const double u_channel = uniform_draw(seed, run_key, pair_key, DrawSlot::Channel);
        const int channel = static_cast<int>(
            std::upper_bound(cumulative.begin(), cumulative.end(), u_channel) -
            cumulative.begin());

        const OutcomeProbs q = model.outcome_probs(channel, pair);
        const double u_outcome = uniform_draw(seed, run_key, pair_key, DrawSlot::Outcome);
        const bool detect_a = u_outcome < q.both + q.a_only;
        const bool detect_b = u_outcome < q.both || (u_outcome >= q.both + q.a_only &&
                                                     u_outcome < q.both + q.a_only + q.b_only);

        const double base = static_cast<double>(n) * timing.pair_period;
        if (detect_a) {
            const double u = uniform_draw(seed, run_key, pair_key, DrawSlot::JitterA);
            run.stream_a.push_back({Station::A, channel, base + (2.0 * u - 1.0) * timing.jitter});
        }
        if (detect_b) {
            const double u = uniform_draw(seed, run_key, pair_key, DrawSlot::JitterB);
            run.stream_b.push_back({Station::B, channel, base + (2.0 * u - 1.0) * timing.jitter});
        }
    }

    auto by_time = [](const DetectionEvent& x, const DetectionEvent& y) {
        return x.timestamp < y.timestamp;
    };
    assert(std::is_sorted(run.stream_a.begin(), run.stream_a.end(), by_time));
    assert(std::is_sorted(run.stream_b.begin(), run.stream_b.end(), by_time));
    (void)by_time;
    return run;
}

/// Runs all four setting pairs (run indices 0..3 off one master seed, in
/// label order AB, AB', A'B, A'B') and reduces each through the coincidence
/// matcher.
inline CountTable run_full(const HiddenVariableModel& model, const SettingsQuad& quad,
                           std::int64_t pair_count, const TimingConfig& timing,
                           std::uint64_t seed) {
    CountTable table;
    table.channel_count = model.config.channel_count;
    table.pairs_per_run = pair_count;
    for (SettingPair pair : all_setting_pairs()) {
        const int run_index = static_cast<int>(pair);
        const RunRecord run =
            run_experiment(model, pair, quad, pair_count, timing, seed, run_index);
        table.run(pair) = aggregate(run, timing.window, model.config.channel_count);
    }
    table.validate_shape();
    return table;
}

}  // namespace chspect
