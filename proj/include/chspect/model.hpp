#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace chspect {

// Sum tolerance for probability normalization checks. All tables are
// closed-form, so anything looser would hide real bugs.
inline constexpr double kProbSumTol = 1e-12;

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

inline void require_finite_angle(double a, const char* name) {
    if (!std::isfinite(a)) {
        throw std::invalid_argument(std::string(name) + ": angle must be finite");
    }
}

/// The four analyzer-angle combinations, one per run.
enum class SettingPair : int { AB = 0, ABp = 1, ApB = 2, ApBp = 3 };

inline constexpr int kNumSettingPairs = 4;

inline constexpr std::array<SettingPair, 4> all_setting_pairs() {
    return {SettingPair::AB, SettingPair::ABp, SettingPair::ApB, SettingPair::ApBp};
}

/// Index of the A-side setting used by a pair: 0 = alpha, 1 = alpha'.
inline constexpr int a_setting_index(SettingPair p) {
    return (p == SettingPair::AB || p == SettingPair::ABp) ? 0 : 1;
}

/// Index of the B-side setting used by a pair: 0 = beta, 1 = beta'.
inline constexpr int b_setting_index(SettingPair p) {
    return (p == SettingPair::AB || p == SettingPair::ApB) ? 0 : 1;
}

inline const char* to_string(SettingPair p) {
    switch (p) {
        case SettingPair::AB: return "AB";
        case SettingPair::ABp: return "ABp";
        case SettingPair::ApB: return "ApB";
        case SettingPair::ApBp: return "ApBp";
    }
    throw std::invalid_argument("invalid SettingPair");
}

inline SettingPair setting_pair_from_string(const std::string& s) {
    for (SettingPair p : all_setting_pairs()) {
        if (s == to_string(p)) return p;
    }
    throw std::invalid_argument("unknown setting pair label: " + s);
}

/// The four analyzer angles {alpha, alpha', beta, beta'}, radians, unreduced.
struct SettingsQuad {
    double alpha = 0.0;
    double alpha_prime = 0.0;
    double beta = 0.0;
    double beta_prime = 0.0;

    void validate() const {
        require_finite_angle(alpha, "alpha");
        require_finite_angle(alpha_prime, "alpha_prime");
        require_finite_angle(beta, "beta");
        require_finite_angle(beta_prime, "beta_prime");
    }

    double a_angle(SettingPair p) const { return a_setting_index(p) == 0 ? alpha : alpha_prime; }
    double b_angle(SettingPair p) const { return b_setting_index(p) == 0 ? beta : beta_prime; }
};

/// Discretization of the hidden-variable coordinate into K uniform channels.
/// Channel i covers lambda_i +/- delta/2 with lambda_i = lambda_min + (i + 1/2)*delta.
struct SpectrographConfig {
    int channel_count = 1;
    double lambda_min = 0.0;
    double lambda_max = 1.0;

    void validate() const {
        require(channel_count >= 1, "channel_count must be >= 1");
        require(std::isfinite(lambda_min) && std::isfinite(lambda_max),
                "lambda range must be finite");
        require(lambda_max > lambda_min, "lambda_max must exceed lambda_min");
    }

    double delta_lambda() const { return (lambda_max - lambda_min) / channel_count; }

    double channel_center(int i) const {
        return lambda_min + (i + 0.5) * delta_lambda();
    }
};

/// Maps a hidden-variable value to its channel index on [lambda_min, lambda_max).
inline int channel_of(double lambda, const SpectrographConfig& config) {
    config.validate();
    if (!(lambda >= config.lambda_min && lambda < config.lambda_max)) {
        throw std::out_of_range("lambda outside [lambda_min, lambda_max)");
    }
    int i = static_cast<int>(std::floor((lambda - config.lambda_min) / config.delta_lambda()));
    if (i < 0) i = 0;
    if (i >= config.channel_count) i = config.channel_count - 1;
    return i;
}

/// Per-channel weights rho_i, the discretized rho(lambda). Independent of the
/// analyzer settings.
struct ChannelDistribution {
    std::vector<double> weights;

    void validate(int channel_count) const {
        require(static_cast<int>(weights.size()) == channel_count,
                "weights length must equal channel_count");
        double sum = 0.0;
        for (double w : weights) {
            require(std::isfinite(w) && w >= 0.0, "channel weights must be >= 0");
            sum += w;
        }
        require(std::abs(sum - 1.0) <= kProbSumTol, "channel weights must sum to 1");
    }
};

inline void require_probability(double p, const char* what) {
    if (!(std::isfinite(p) && p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument(std::string(what) + ": probability outside [0,1]");
    }
}

/// Statistically independent responses: per station, per local setting, per
/// channel, a detection probability. Setting index 0 = alpha/beta,
/// 1 = alpha'/beta'.
struct FactorizableResponse {
    std::array<std::vector<double>, 2> p_a;  // [a-setting][channel]
    std::array<std::vector<double>, 2> p_b;  // [b-setting][channel]

    void validate(int channel_count) const {
        for (int s = 0; s < 2; ++s) {
            require(static_cast<int>(p_a[s].size()) == channel_count,
                    "p_a table length must equal channel_count");
            require(static_cast<int>(p_b[s].size()) == channel_count,
                    "p_b table length must equal channel_count");
            for (double p : p_a[s]) require_probability(p, "p_a");
            for (double p : p_b[s]) require_probability(p, "p_b");
        }
    }
};

/// One channel's joint outcome distribution for one setting pair.
struct OutcomeProbs {
    double both = 0.0;
    double a_only = 0.0;
    double b_only = 0.0;
    double neither = 1.0;

    double sum() const { return both + a_only + b_only + neither; }

    void validate() const {
        require_probability(both, "p(both)");
        require_probability(a_only, "p(A only)");
        require_probability(b_only, "p(B only)");
        require_probability(neither, "p(neither)");
        require(std::abs(sum() - 1.0) <= kProbSumTol,
                "outcome probabilities must sum to 1");
        // Coincidence mass never exceeds either marginal: both <= both+a_only
        // and both <= both+b_only hold automatically with non-negative entries.
    }

    double marginal_a() const { return both + a_only; }
    double marginal_b() const { return both + b_only; }
};

/// Fully general (possibly correlated) responses: per setting pair, per
/// channel, the joint outcome quadruple.
struct JointResponse {
    std::array<std::vector<OutcomeProbs>, kNumSettingPairs> table;  // [pair][channel]

    void validate(int channel_count) const {
        for (const auto& per_pair : table) {
            require(static_cast<int>(per_pair.size()) == channel_count,
                    "joint table length must equal channel_count");
            for (const OutcomeProbs& q : per_pair) q.validate();
        }
    }
};

/// A hidden-variable model: channel layout, a settings-independent channel
/// distribution, and per-channel responses (factorizable or correlated).
/// Immutable after construction.
struct HiddenVariableModel {
    SpectrographConfig config;
    ChannelDistribution distribution;
    std::variant<FactorizableResponse, JointResponse> response;

    bool is_factorizable() const {
        return std::holds_alternative<FactorizableResponse>(response);
    }

    /// Joint outcome distribution for one channel and one setting pair.
    OutcomeProbs outcome_probs(int channel, SettingPair pair) const {
        if (const auto* f = std::get_if<FactorizableResponse>(&response)) {
            const double pa = f->p_a[a_setting_index(pair)][channel];
            const double pb = f->p_b[b_setting_index(pair)][channel];
            OutcomeProbs q;
            q.both = pa * pb;
            q.a_only = pa - q.both;
            q.b_only = pb - q.both;
            q.neither = 1.0 - pa - pb + q.both;
            return q;
        }
        return std::get<JointResponse>(response).table[static_cast<int>(pair)][channel];
    }

    void validate() const {
        config.validate();
        distribution.validate(config.channel_count);
        if (const auto* f = std::get_if<FactorizableResponse>(&response)) {
            f->validate(config.channel_count);
        } else {
            std::get<JointResponse>(response).validate(config.channel_count);
        }
    }
};

inline HiddenVariableModel make_factorizable_model(const SpectrographConfig& config,
                                                   const ChannelDistribution& weights,
                                                   const FactorizableResponse& response) {
    HiddenVariableModel model{config, weights, response};
    model.validate();
    return model;
}

inline HiddenVariableModel make_joint_model(const SpectrographConfig& config,
                                            const ChannelDistribution& weights,
                                            const JointResponse& response) {
    HiddenVariableModel model{config, weights, response};
    model.validate();
    return model;
}

}  // namespace chspect
