#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "chspect/model.hpp"

namespace chspect {

/// Weakly entangled two-photon polarization state with amplitude ratio r.
struct EberhardtState {
    double amplitude_ratio = 0.0;  // r, with r^2 << 1 in the regime of interest

    void validate() const {
        require(std::isfinite(amplitude_ratio) && amplitude_ratio >= 0.0,
                "amplitude ratio r must be finite and >= 0");
    }
};

/// Transmitted-port coincidence probability after analyzers at angles a, b.
inline double prob_joint(const EberhardtState& state, double a, double b) {
    state.validate();
    require_finite_angle(a, "a");
    require_finite_angle(b, "b");
    const double r = state.amplitude_ratio;
    const double amp = std::cos(a) * std::sin(b) + r * std::sin(a) * std::cos(b);
    return amp * amp / (1.0 + r * r);
}

/// Single-detection probability at station A for analyzer angle a.
inline double prob_single_a(const EberhardtState& state, double a) {
    state.validate();
    require_finite_angle(a, "a");
    const double r = state.amplitude_ratio;
    const double c = std::cos(a), s = std::sin(a);
    return (c * c + r * r * s * s) / (1.0 + r * r);
}

/// Single-detection probability at station B for analyzer angle b.
inline double prob_single_b(const EberhardtState& state, double b) {
    state.validate();
    require_finite_angle(b, "b");
    const double r = state.amplitude_ratio;
    const double c = std::cos(b), s = std::sin(b);
    return (r * r * c * c + s * s) / (1.0 + r * r);
}

/// The six terms entering the CH combination
///   J = AB - AB' + A'B + A'B' - B - A'
/// expressed as probabilities (or count fractions downstream).
struct ChTerms {
    double joint_ab = 0.0;
    double joint_abp = 0.0;
    double joint_apb = 0.0;
    double joint_apbp = 0.0;
    double single_b = 0.0;
    double single_a = 0.0;

    double combine() const {
        return joint_ab - joint_abp + joint_apb + joint_apbp - single_b - single_a;
    }
};

struct QmJReport {
    double r_squared = 0.0;
    SettingsQuad quad;
    ChTerms terms;
    double j = 0.0;
};

/// Evaluates the CH statistic for the Eberhardt state at one settings quad.
inline QmJReport j_value(const EberhardtState& state, const SettingsQuad& quad) {
    quad.validate();
    QmJReport report;
    report.r_squared = state.amplitude_ratio * state.amplitude_ratio;
    report.quad = quad;
    report.terms.joint_ab = prob_joint(state, quad.alpha, quad.beta);
    report.terms.joint_abp = prob_joint(state, quad.alpha, quad.beta_prime);
    report.terms.joint_apb = prob_joint(state, quad.alpha_prime, quad.beta);
    report.terms.joint_apbp = prob_joint(state, quad.alpha_prime, quad.beta_prime);
    report.terms.single_b = prob_single_b(state, quad.beta);
    report.terms.single_a = prob_single_a(state, quad.alpha_prime);
    report.j = report.terms.combine();
    return report;
}

/// Searches for the settings quad maximizing J: coarse grid over [0, pi)^4
/// (every probability is pi-periodic in each angle), then coordinate descent
/// with a halving step until the step falls below 1e-6 rad. Grid ties resolve
/// to the lexicographically first quad; descent accepts strict improvements
/// only, so the result is deterministic and J never decreases.
inline QmJReport find_violation(const EberhardtState& state, int grid_points_per_angle = 24,
                                int max_refinement_rounds = 64) {
    state.validate();
    require(grid_points_per_angle >= 8, "grid resolution must be >= 8 points per angle");
    require(max_refinement_rounds >= 0, "refinement rounds must be >= 0");

    const double pi = std::numbers::pi;
    const double spacing = pi / grid_points_per_angle;

    SettingsQuad best{0.0, 0.0, 0.0, 0.0};
    double best_j = j_value(state, best).j;
    for (int ia = 0; ia < grid_points_per_angle; ++ia) {
        for (int iap = 0; iap < grid_points_per_angle; ++iap) {
            for (int ib = 0; ib < grid_points_per_angle; ++ib) {
                for (int ibp = 0; ibp < grid_points_per_angle; ++ibp) {
                    SettingsQuad q{ia * spacing, iap * spacing, ib * spacing, ibp * spacing};
                    const double j = j_value(state, q).j;
                    if (j > best_j) {
                        best_j = j;
                        best = q;
                    }
                }
            }
        }
    }

    double step = spacing;
    for (int round = 0; round < max_refinement_rounds && step >= 1e-6; ++round) {
        bool improved = false;
        double* coords[4] = {&best.alpha, &best.alpha_prime, &best.beta, &best.beta_prime};
        for (double* coord : coords) {
            const double original = *coord;
            for (double candidate : {original - step, original + step}) {
                *coord = candidate;
                const double j = j_value(state, best).j;
                if (j > best_j) {
                    best_j = j;
                } else {
                    *coord = original;
                }
                if (*coord != original) {
                    improved = true;
                    break;
                }
            }
        }
        if (!improved) step *= 0.5;
    }

    return j_value(state, best);
}

/// Correlated demonstration model: every channel carries the same joint
/// response, namely the quantum Eberhardt probabilities at the given quad.
/// The per-channel tables then satisfy non-negativity and the coincidence
/// bound while breaking per-channel factorization.
inline HiddenVariableModel make_qm_channel_model(const SpectrographConfig& config,
                                                 const ChannelDistribution& weights,
                                                 double r, const SettingsQuad& quad) {
    const EberhardtState state{r};
    state.validate();
    quad.validate();
    config.validate();
    weights.validate(config.channel_count);

    JointResponse response;
    for (SettingPair pair : all_setting_pairs()) {
        const double a = quad.a_angle(pair);
        const double b = quad.b_angle(pair);
        OutcomeProbs q;
        q.both = prob_joint(state, a, b);
        q.a_only = prob_single_a(state, a) - q.both;
        q.b_only = prob_single_b(state, b) - q.both;
        q.neither = 1.0 - q.both - q.a_only - q.b_only;
        try {
            q.validate();
        } catch (const std::invalid_argument&) {
            // Cannot happen for valid quantum inputs; anything else is an
            // internal inconsistency, not a user error.
            throw std::logic_error("derived outcome probabilities left [0,1]");
        }
        response.table[static_cast<int>(pair)].assign(config.channel_count, q);
    }
    return make_joint_model(config, weights, response);
}

}  // namespace chspect
