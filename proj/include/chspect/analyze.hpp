#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "chspect/counts.hpp"
#include "chspect/model.hpp"
#include "chspect/qm_oracle.hpp"

namespace chspect {

// ---------------------------------------------------------------------------
// Audit of the spectrograph-realism features:
//   #1  every per-channel count is zero or positive,
//   #2  the per-channel counts sum to the station's detected total,
//   #3  per-channel coincidences never exceed either station's singles.
// ---------------------------------------------------------------------------

struct AuditViolation {
    int feature = 0;  // 1, 2 or 3
    SettingPair pair = SettingPair::AB;
    int channel = -1;                 // -1 when the violation is not per-channel
    std::string station;              // "A", "B" or "" when not station-specific
    std::string detail;
};

/// Both readings of "total number of detected particles" for one run: the
/// per-station stream totals (enforced) and the emitted pair count N
/// (reported only, since undetected pairs leave no click).
struct TotalsReading {
    SettingPair pair = SettingPair::AB;
    std::int64_t sum_a = 0, sum_b = 0;
    std::int64_t total_a = 0, total_b = 0;
    bool matches_station_total_a = false, matches_station_total_b = false;
    bool within_emitted_a = false, within_emitted_b = false;
};

struct AuditReport {
    bool pass = false;
    std::vector<AuditViolation> violations;
    std::vector<TotalsReading> totals_readings;
};

inline AuditReport audit_features(const CountTable& table) {
    table.validate_shape();
    AuditReport report;
    for (SettingPair p : all_setting_pairs()) {
        const ChannelCounts& run = table.run(p);
        for (int i = 0; i < table.channel_count; ++i) {
            if (run.singles_a[i] < 0 || run.singles_b[i] < 0 || run.coincidences[i] < 0) {
                report.violations.push_back(
                    {1, p, i, "", "negative count in channel " + std::to_string(i)});
            }
            const std::int64_t cap = std::min(run.singles_a[i], run.singles_b[i]);
            if (run.coincidences[i] > cap) {
                report.violations.push_back(
                    {3, p, i, "",
                     "coincidences " + std::to_string(run.coincidences[i]) +
                         " exceed min singles " + std::to_string(cap)});
            }
        }
        if (run.cross_channel_noise < 0) {
            report.violations.push_back({1, p, -1, "", "negative cross-channel noise count"});
        }

        TotalsReading reading;
        reading.pair = p;
        reading.sum_a = run.sum_singles_a();
        reading.sum_b = run.sum_singles_b();
        reading.total_a = run.total_a;
        reading.total_b = run.total_b;
        reading.matches_station_total_a = reading.sum_a == run.total_a;
        reading.matches_station_total_b = reading.sum_b == run.total_b;
        reading.within_emitted_a = reading.sum_a <= table.pairs_per_run;
        reading.within_emitted_b = reading.sum_b <= table.pairs_per_run;
        report.totals_readings.push_back(reading);

        if (!reading.matches_station_total_a) {
            report.violations.push_back(
                {2, p, -1, "A",
                 "channel sum " + std::to_string(reading.sum_a) +
                     " != recorded station total " + std::to_string(run.total_a)});
        }
        if (!reading.matches_station_total_b) {
            report.violations.push_back(
                {2, p, -1, "B",
                 "channel sum " + std::to_string(reading.sum_b) +
                     " != recorded station total " + std::to_string(run.total_b)});
        }
    }
    report.pass = report.violations.empty();
    return report;
}

// ---------------------------------------------------------------------------
// CH statistic from counts
// ---------------------------------------------------------------------------

/// Integer numerators of the six CH terms. The singles convention pairs each
/// single count with a coincidence count of its own run: the B singles come
/// from run (alpha, beta) and the A singles from run (alpha', beta), which is
/// what makes the per-channel inequalities provable from per-run feature #3.
struct CountTerms {
    std::int64_t joint_ab = 0;
    std::int64_t joint_abp = 0;
    std::int64_t joint_apb = 0;
    std::int64_t joint_apbp = 0;
    std::int64_t single_b = 0;  // from run AB
    std::int64_t single_a = 0;  // from run A'B

    std::int64_t combine() const {
        return joint_ab - joint_abp + joint_apb + joint_apbp - single_b - single_a;
    }
};

inline CountTerms count_terms(const CountTable& table) {
    table.validate_shape();
    CountTerms t;
    t.joint_ab = table.run(SettingPair::AB).sum_coincidences();
    t.joint_abp = table.run(SettingPair::ABp).sum_coincidences();
    t.joint_apb = table.run(SettingPair::ApB).sum_coincidences();
    t.joint_apbp = table.run(SettingPair::ApBp).sum_coincidences();
    t.single_b = table.run(SettingPair::AB).sum_singles_b();
    t.single_a = table.run(SettingPair::ApB).sum_singles_a();
    return t;
}

/// Plug-in standard error of J: per-term binomial variances on N trials,
/// treated as independent (runs use disjoint RNG substreams; the within-run
/// covariances only shrink the true variance, so this is conservative).
inline double sigma_j(const CountTable& table) {
    const CountTerms t = count_terms(table);
    const double n = static_cast<double>(table.pairs_per_run);
    double var = 0.0;
    for (std::int64_t c : {t.joint_ab, t.joint_abp, t.joint_apb, t.joint_apbp, t.single_b,
                           t.single_a}) {
        const double q = std::clamp(static_cast<double>(c) / n, 0.0, 1.0);
        var += q * (1.0 - q) / n;
    }
    return std::sqrt(var);
}

// ---------------------------------------------------------------------------
// Channel partition and the modified bound
// ---------------------------------------------------------------------------

/// Channels split by comparing the (alpha',beta') and (alpha,beta')
/// coincidence counts; ties (equality) stay in set 1.
struct GammaPartition {
    int channel_count = 0;
    std::vector<char> in_gamma2;  // per channel
    std::vector<int> gamma2;      // sorted channel list

    bool gamma2_empty() const { return gamma2.empty(); }
};

inline GammaPartition gamma_partition(const CountTable& table) {
    table.validate_shape();
    GammaPartition part;
    part.channel_count = table.channel_count;
    part.in_gamma2.assign(table.channel_count, 0);
    const auto& apbp = table.run(SettingPair::ApBp).coincidences;
    const auto& abp = table.run(SettingPair::ABp).coincidences;
    for (int i = 0; i < table.channel_count; ++i) {
        if (apbp[i] > abp[i]) {
            part.in_gamma2[i] = 1;
            part.gamma2.push_back(i);
        }
    }
    return part;
}

inline std::int64_t correction_numerator(const CountTable& table, const GammaPartition& part) {
    require(part.channel_count == table.channel_count,
            "partition does not match table channel count");
    const auto& apbp = table.run(SettingPair::ApBp).coincidences;
    const auto& abp = table.run(SettingPair::ABp).coincidences;
    std::int64_t sum = 0;
    for (int i : part.gamma2) sum += apbp[i] - abp[i];
    return 2 * sum;
}

/// The non-negative term replacing the CH upper bound: (2/N) * sum over the
/// set-2 channels of the coincidence count differences. Zero exactly when the
/// set is empty.
inline double correction_term(const CountTable& table, const GammaPartition& part) {
    require(table.pairs_per_run >= 1, "correction term needs N >= 1");
    return static_cast<double>(correction_numerator(table, part)) /
           static_cast<double>(table.pairs_per_run);
}

/// Per-channel residual of the set-1 / set-2 inequality; <= 0 (set 1) resp.
/// < 0 (set 2) whenever features #1-#3 hold.
struct ChannelResidual {
    int channel = 0;
    int gamma_set = 1;  // 1 or 2
    std::int64_t value = 0;

    bool holds() const { return gamma_set == 1 ? value <= 0 : value < 0; }
};

struct JVerdicts {
    bool audit_pass = false;
    bool ch_holds = false;            // J <= 0
    bool spectrograph_holds = false;  // J < correction if set 2 nonempty, else J <= 0
};

struct JReport {
    double j = 0.0;
    ChTerms terms;  // count fractions, each term divided by N
    std::int64_t j_numerator = 0;
    double sigma = 0.0;
    double correction = 0.0;
    std::int64_t correction_num = 0;
    GammaPartition partition;
    std::vector<ChannelResidual> residuals;
    JVerdicts verdicts;
};

/// J and its six terms from a count table (no partition, no verdict beyond
/// the CH sign).
inline JReport ch_j_from_counts(const CountTable& table) {
    table.validate_shape();
    require(table.pairs_per_run >= 1, "J from counts needs N >= 1");
    const CountTerms t = count_terms(table);
    const double n = static_cast<double>(table.pairs_per_run);

    JReport report;
    report.terms.joint_ab = static_cast<double>(t.joint_ab) / n;
    report.terms.joint_abp = static_cast<double>(t.joint_abp) / n;
    report.terms.joint_apb = static_cast<double>(t.joint_apb) / n;
    report.terms.joint_apbp = static_cast<double>(t.joint_apbp) / n;
    report.terms.single_b = static_cast<double>(t.single_b) / n;
    report.terms.single_a = static_cast<double>(t.single_a) / n;
    report.j_numerator = t.combine();
    report.j = static_cast<double>(report.j_numerator) / n;
    report.sigma = sigma_j(table);
    report.verdicts.ch_holds = report.j_numerator <= 0;
    return report;
}

/// Full analysis: audits the table (the derivation's hypotheses), computes J,
/// the channel partition, the correction term, per-channel residuals and the
/// verdicts. All inequality verdicts compare integer numerators, so they are
/// exact. Throws if the audit fails.
inline JReport spectrograph_inequality(const CountTable& table) {
    const AuditReport audit = audit_features(table);
    if (!audit.pass) {
        throw std::invalid_argument(
            "count table violates features #1-#3; the bound's hypotheses do not hold");
    }

    JReport report = ch_j_from_counts(table);
    report.verdicts.audit_pass = true;
    report.partition = gamma_partition(table);
    report.correction_num = correction_numerator(table, report.partition);
    report.correction = static_cast<double>(report.correction_num) /
                        static_cast<double>(table.pairs_per_run);

    const auto& c_ab = table.run(SettingPair::AB).coincidences;
    const auto& c_abp = table.run(SettingPair::ABp).coincidences;
    const auto& c_apb = table.run(SettingPair::ApB).coincidences;
    const auto& c_apbp = table.run(SettingPair::ApBp).coincidences;
    const auto& s_a = table.run(SettingPair::ApB).singles_a;
    const auto& s_b = table.run(SettingPair::AB).singles_b;

    report.residuals.reserve(table.channel_count);
    for (int i = 0; i < table.channel_count; ++i) {
        ChannelResidual res;
        res.channel = i;
        if (report.partition.in_gamma2[i]) {
            res.gamma_set = 2;
            res.value = c_ab[i] + c_apb[i] + c_abp[i] - c_apbp[i] - s_a[i] - s_b[i];
        } else {
            res.gamma_set = 1;
            res.value = c_ab[i] + c_apb[i] + c_apbp[i] - c_abp[i] - s_a[i] - s_b[i];
        }
        report.residuals.push_back(res);
    }

    report.verdicts.spectrograph_holds =
        report.partition.gamma2_empty() ? report.j_numerator <= 0
                                        : report.j_numerator < report.correction_num;
    return report;
}

// ---------------------------------------------------------------------------
// Algebraic CH lemma
// ---------------------------------------------------------------------------

struct ChAlgebraResult {
    double value = 0.0;
    bool holds_lower = false;  // -XY <= value
    bool holds_upper = false;  // value <= 0
};

/// Checks -XY <= xy - xy' + x'y + x'y' - Xy - Yx' <= 0 for
/// 0 <= x, x' <= X and 0 <= y, y' <= Y.
inline ChAlgebraResult ch_algebraic_check(double x, double xp, double y, double yp, double big_x,
                                          double big_y) {
    auto in_box = [](double v, double cap) { return std::isfinite(v) && v >= 0.0 && v <= cap; };
    require(std::isfinite(big_x) && std::isfinite(big_y) && big_x >= 0.0 && big_y >= 0.0,
            "box bounds X, Y must be finite and >= 0");
    require(in_box(x, big_x) && in_box(xp, big_x), "x, x' must lie in [0, X]");
    require(in_box(y, big_y) && in_box(yp, big_y), "y, y' must lie in [0, Y]");

    ChAlgebraResult result;
    result.value = x * y - x * yp + xp * y + xp * yp - big_x * y - big_y * xp;
    result.holds_lower = result.value >= -big_x * big_y;
    result.holds_upper = result.value <= 0.0;
    return result;
}

// ---------------------------------------------------------------------------
// Expectation-level CH statistic for a model
// ---------------------------------------------------------------------------

/// Exact expected CH terms for a model, using the same singles convention as
/// the count analysis (B singles from the AB run, A singles from the A'B run).
inline ChTerms expected_terms(const HiddenVariableModel& model) {
    model.validate();
    ChTerms t;
    for (int i = 0; i < model.config.channel_count; ++i) {
        const double w = model.distribution.weights[i];
        t.joint_ab += w * model.outcome_probs(i, SettingPair::AB).both;
        t.joint_abp += w * model.outcome_probs(i, SettingPair::ABp).both;
        t.joint_apb += w * model.outcome_probs(i, SettingPair::ApB).both;
        t.joint_apbp += w * model.outcome_probs(i, SettingPair::ApBp).both;
        t.single_b += w * model.outcome_probs(i, SettingPair::AB).marginal_b();
        t.single_a += w * model.outcome_probs(i, SettingPair::ApB).marginal_a();
    }
    return t;
}

inline double expected_j(const HiddenVariableModel& model) { return expected_terms(model).combine(); }

// ---------------------------------------------------------------------------
// Bound explorer: the largest J compatible with features #1-#3 alone
// ---------------------------------------------------------------------------

/// Per-run, per-station singles spectra, the input the maximizer keeps fixed.
struct SinglesSpec {
    int channel_count = 0;
    std::array<std::vector<std::int64_t>, kNumSettingPairs> singles_a;
    std::array<std::vector<std::int64_t>, kNumSettingPairs> singles_b;

    void validate(std::int64_t pairs_per_run) const {
        require(channel_count >= 1, "singles spec needs channel_count >= 1");
        require(pairs_per_run >= 0, "singles spec needs N >= 0");
        for (int r = 0; r < kNumSettingPairs; ++r) {
            require(static_cast<int>(singles_a[r].size()) == channel_count &&
                        static_cast<int>(singles_b[r].size()) == channel_count,
                    "singles arrays must have length channel_count");
            std::int64_t sum_a = 0, sum_b = 0;
            for (int i = 0; i < channel_count; ++i) {
                require(singles_a[r][i] >= 0 && singles_b[r][i] >= 0,
                        "singles must be non-negative");
                sum_a += singles_a[r][i];
                sum_b += singles_b[r][i];
            }
            require(sum_a <= pairs_per_run && sum_b <= pairs_per_run,
                    "per-station singles cannot exceed emitted pairs N");
        }
    }
};

struct MaxJResult {
    CountTable table;
    double j_max = 0.0;
};

/// Fills the coincidence spectra to maximize J subject to feature #3 per run:
/// the plus-signed runs take min(N_A_i, N_B_i), the minus-signed run (alpha,
/// beta') takes zero. J is linear in the per-channel coincidences, so this
/// greedy choice is the exact optimum for the given singles.
inline MaxJResult max_j_under_realism(const SinglesSpec& singles, std::int64_t pairs_per_run) {
    require(pairs_per_run >= 1, "maximizer needs N >= 1");
    singles.validate(pairs_per_run);

    CountTable table;
    table.channel_count = singles.channel_count;
    table.pairs_per_run = pairs_per_run;
    for (SettingPair p : all_setting_pairs()) {
        const int r = static_cast<int>(p);
        ChannelCounts& run = table.run(p);
        run.pair = p;
        run.singles_a = singles.singles_a[r];
        run.singles_b = singles.singles_b[r];
        run.coincidences.assign(singles.channel_count, 0);
        if (p != SettingPair::ABp) {
            for (int i = 0; i < singles.channel_count; ++i) {
                run.coincidences[i] = std::min(run.singles_a[i], run.singles_b[i]);
            }
        }
        run.total_a = run.sum_singles_a();
        run.total_b = run.sum_singles_b();
    }

    MaxJResult result;
    result.table = table;
    result.j_max = ch_j_from_counts(table).j;
    return result;
}

}  // namespace chspect
