#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "chspect/counts.hpp"
#include "chspect/events.hpp"

namespace chspect {

struct MatchedPair {
    std::size_t a_index = 0;
    std::size_t b_index = 0;
    int channel = 0;

    friend bool operator==(const MatchedPair&, const MatchedPair&) = default;
};

struct MatchResult {
    std::vector<MatchedPair> matches;
    std::vector<std::pair<std::size_t, std::size_t>> cross_channel_discards;  // (a, b) indices
    std::vector<std::size_t> unmatched_a;
    std::vector<std::size_t> unmatched_b;

    friend bool operator==(const MatchResult&, const MatchResult&) = default;
};

namespace detail {

inline void check_match_inputs(const std::vector<DetectionEvent>& stream_a,
                               const std::vector<DetectionEvent>& stream_b, double window) {
    require(std::isfinite(window) && window > 0.0, "coincidence window must be > 0");
    auto sorted = [](const std::vector<DetectionEvent>& s) {
        return std::is_sorted(s.begin(), s.end(), [](const auto& x, const auto& y) {
            return x.timestamp < y.timestamp;
        });
    };
    require(sorted(stream_a) && sorted(stream_b), "event streams must be sorted by timestamp");
}

}  // namespace detail

/// Greedy earliest-first matching.
///
/// The declared convention (the idealized setup leaves tie policy open, so it
/// is fixed here and mirrored by the brute-force oracle):
///   - take the earliest unconsumed event overall, ties going to stream A;
///   - pair it with the earliest unconsumed event of the other stream within
///     |dt| <= w that shares its channel; if none shares it, pair it with the
///     earliest in-window event as a cross-channel discard (both consumed);
///   - with no in-window partner at all, the event is unmatched.
/// Implemented as a single merge pass over the two sorted streams.
inline MatchResult match_events(const std::vector<DetectionEvent>& stream_a,
                                const std::vector<DetectionEvent>& stream_b, double window) {
    detail::check_match_inputs(stream_a, stream_b, window);

    MatchResult result;
    std::vector<char> consumed_a(stream_a.size(), 0);
    std::vector<char> consumed_b(stream_b.size(), 0);
    std::size_t front_a = 0, front_b = 0;

    auto advance = [](std::size_t& front, const std::vector<char>& consumed) {
        while (front < consumed.size() && consumed[front]) ++front;
    };

    while (true) {
        advance(front_a, consumed_a);
        advance(front_b, consumed_b);
        const bool have_a = front_a < stream_a.size();
        const bool have_b = front_b < stream_b.size();
        if (!have_a || !have_b) break;

        const bool lead_is_a = stream_a[front_a].timestamp <= stream_b[front_b].timestamp;
        const auto& lead_stream = lead_is_a ? stream_a : stream_b;
        const auto& other_stream = lead_is_a ? stream_b : stream_a;
        auto& lead_consumed = lead_is_a ? consumed_a : consumed_b;
        auto& other_consumed = lead_is_a ? consumed_b : consumed_a;
        const std::size_t lead = lead_is_a ? front_a : front_b;
        const std::size_t other_front = lead_is_a ? front_b : front_a;

        const DetectionEvent& e = lead_stream[lead];
        // All unconsumed partners sit at or after the other stream's frontier,
        // itself no earlier than e; only the upper window edge needs a scan.
        std::size_t same_channel = other_stream.size();
        std::size_t any_channel = other_stream.size();
        for (std::size_t k = other_front; k < other_stream.size(); ++k) {
            if (other_stream[k].timestamp - e.timestamp > window) break;
            if (other_consumed[k]) continue;
            if (any_channel == other_stream.size()) any_channel = k;
            if (other_stream[k].channel == e.channel) {
                same_channel = k;
                break;
            }
        }

        if (same_channel != other_stream.size()) {
            lead_consumed[lead] = 1;
            other_consumed[same_channel] = 1;
            const std::size_t ai = lead_is_a ? lead : same_channel;
            const std::size_t bi = lead_is_a ? same_channel : lead;
            result.matches.push_back({ai, bi, e.channel});
        } else if (any_channel != other_stream.size()) {
            lead_consumed[lead] = 1;
            other_consumed[any_channel] = 1;
            const std::size_t ai = lead_is_a ? lead : any_channel;
            const std::size_t bi = lead_is_a ? any_channel : lead;
            result.cross_channel_discards.emplace_back(ai, bi);
        } else {
            lead_consumed[lead] = 1;
            (lead_is_a ? result.unmatched_a : result.unmatched_b).push_back(lead);
        }
    }

    for (std::size_t i = 0; i < stream_a.size(); ++i) {
        if (!consumed_a[i]) result.unmatched_a.push_back(i);
    }
    for (std::size_t i = 0; i < stream_b.size(); ++i) {
        if (!consumed_b[i]) result.unmatched_b.push_back(i);
    }
    return result;
}

/// Test oracle: same convention as match_events, realized by exhaustive scans
/// over consumption flags instead of a merge pass.
inline MatchResult brute_force_match(const std::vector<DetectionEvent>& stream_a,
                                     const std::vector<DetectionEvent>& stream_b, double window) {
    detail::check_match_inputs(stream_a, stream_b, window);

    MatchResult result;
    std::vector<char> consumed_a(stream_a.size(), 0);
    std::vector<char> consumed_b(stream_b.size(), 0);

    auto earliest_unconsumed = [](const std::vector<DetectionEvent>& stream,
                                  const std::vector<char>& consumed) {
        std::size_t best = stream.size();
        for (std::size_t i = 0; i < stream.size(); ++i) {
            if (consumed[i]) continue;
            if (best == stream.size() || stream[i].timestamp < stream[best].timestamp) best = i;
        }
        return best;
    };

    while (true) {
        const std::size_t ea = earliest_unconsumed(stream_a, consumed_a);
        const std::size_t eb = earliest_unconsumed(stream_b, consumed_b);
        if (ea == stream_a.size() || eb == stream_b.size()) break;

        const bool lead_is_a = stream_a[ea].timestamp <= stream_b[eb].timestamp;
        const auto& other_stream = lead_is_a ? stream_b : stream_a;
        const auto& other_consumed = lead_is_a ? consumed_b : consumed_a;
        const DetectionEvent& e = lead_is_a ? stream_a[ea] : stream_b[eb];
        const std::size_t lead = lead_is_a ? ea : eb;

        std::size_t same_channel = other_stream.size();
        std::size_t any_channel = other_stream.size();
        for (std::size_t k = 0; k < other_stream.size(); ++k) {
            if (other_consumed[k]) continue;
            const double dt = other_stream[k].timestamp - e.timestamp;
            if (dt < -window || dt > window) continue;
            auto better = [&](std::size_t chosen) {
                return chosen == other_stream.size() ||
                       other_stream[k].timestamp < other_stream[chosen].timestamp;
            };
            if (better(any_channel)) any_channel = k;
            if (other_stream[k].channel == e.channel && better(same_channel)) same_channel = k;
        }

        if (same_channel != other_stream.size()) {
            (lead_is_a ? consumed_a : consumed_b)[lead] = 1;
            (lead_is_a ? consumed_b : consumed_a)[same_channel] = 1;
            const std::size_t ai = lead_is_a ? lead : same_channel;
            const std::size_t bi = lead_is_a ? same_channel : lead;
            result.matches.push_back({ai, bi, e.channel});
        } else if (any_channel != other_stream.size()) {
            (lead_is_a ? consumed_a : consumed_b)[lead] = 1;
            (lead_is_a ? consumed_b : consumed_a)[any_channel] = 1;
            const std::size_t ai = lead_is_a ? lead : any_channel;
            const std::size_t bi = lead_is_a ? any_channel : lead;
            result.cross_channel_discards.emplace_back(ai, bi);
        } else {
            (lead_is_a ? consumed_a : consumed_b)[lead] = 1;
            (lead_is_a ? result.unmatched_a : result.unmatched_b).push_back(lead);
        }
    }

    for (std::size_t i = 0; i < stream_a.size(); ++i) {
        if (!consumed_a[i]) result.unmatched_a.push_back(i);
    }
    for (std::size_t i = 0; i < stream_b.size(); ++i) {
        if (!consumed_b[i]) result.unmatched_b.push_back(i);
    }
    return result;
}

/// Reduces one run to per-channel singles and coincidence counts. Feature #3
/// holds by construction: every match consumes one event per station in its
/// channel.
inline ChannelCounts aggregate(const RunRecord& run, double window, int channel_count) {
    require(channel_count >= 1, "channel_count must be >= 1");
    ChannelCounts counts;
    counts.pair = run.pair;
    counts.singles_a.assign(channel_count, 0);
    counts.singles_b.assign(channel_count, 0);
    counts.coincidences.assign(channel_count, 0);
    counts.total_a = static_cast<std::int64_t>(run.stream_a.size());
    counts.total_b = static_cast<std::int64_t>(run.stream_b.size());

    auto tally_singles = [&](const std::vector<DetectionEvent>& stream,
                             std::vector<std::int64_t>& singles) {
        for (const DetectionEvent& e : stream) {
            if (e.channel < 0 || e.channel >= channel_count) {
                throw std::out_of_range("event channel index outside [0, K)");
            }
            ++singles[e.channel];
        }
    };
    tally_singles(run.stream_a, counts.singles_a);
    tally_singles(run.stream_b, counts.singles_b);

    const MatchResult matched = match_events(run.stream_a, run.stream_b, window);
    for (const MatchedPair& m : matched.matches) ++counts.coincidences[m.channel];
    counts.cross_channel_noise =
        static_cast<std::int64_t>(matched.cross_channel_discards.size());
    return counts;
}

}  // namespace chspect
