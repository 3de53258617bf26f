#pragma once

// Power objectives as coefficient functions a_1, a_2, a_3 and the score
// s(p) = I(p1 <= a) a_1 + I(p2 <= a) a_2 + I(min(p1, p2) <= a) a_3
// that orders candidate rejection points.

#include <cmath>
#include <string>
#include <string_view>

#include "omt/errors.hpp"
#include "omt/gauss.hpp"

namespace omt {

enum class Objective { any, avg, pi1, combo };

inline std::string_view to_string(Objective o) {
    switch (o) {
        case Objective::any: return "any";
        case Objective::avg: return "avg";
        case Objective::pi1: return "pi1";
        case Objective::combo: return "combo";
    }
    return "?";
}

inline Objective parse_objective(std::string_view s) {
    if (s == "any" || s == "pi_any") return Objective::any;
    if (s == "avg" || s == "pi_avg") return Objective::avg;
    if (s == "pi1" || s == "pi_1") return Objective::pi1;
    if (s == "combo" || s == "pi_combo") return Objective::combo;
    throw DomainError("unknown objective '" + std::string(s) + "'");
}

/// Convex weights over {Pi_any, Pi_avg, Pi_1}.
struct ObjectiveWeights {
    double w_any = 0.0;
    double w_avg = 0.0;
    double w_1 = 0.0;

    static ObjectiveWeights of(Objective o) {
        switch (o) {
            case Objective::any: return {1.0, 0.0, 0.0};
            case Objective::avg: return {0.0, 1.0, 0.0};
            case Objective::pi1: return {0.0, 0.0, 1.0};
            case Objective::combo: return {1.0 / 3.0, 0.0, 2.0 / 3.0};
        }
        return {};
    }
};

struct ObjectiveSpec {
    ObjectiveWeights weights;
    AlternativeModel model;
    double alpha = 0.025;

    static ObjectiveSpec pure(Objective o, AlternativeModel model, double alpha) {
        return {ObjectiveWeights::of(o), model, alpha};
    }

    void validate() const {
        const auto& w = weights;
        if (w.w_any < 0 || w.w_avg < 0 || w.w_1 < 0) throw DomainError("objective weights must be nonnegative");
        if (std::abs(w.w_any + w.w_avg + w.w_1 - 1.0) > 1e-12) throw DomainError("objective weights must sum to 1");
        if (!(alpha > 0.0 && alpha <= 0.5)) throw DomainError("alpha must lie in (0, 0.5]");
        model.validate();
        // Every component uses both alternative densities.
        if (!(model.theta1 < 0.0 && model.theta2 < 0.0)) {
            throw DomainError("objective alternatives need theta1 < 0 and theta2 < 0");
        }
    }
};

enum class Coefficient { a1, a2, a3 };

/// Score function of an objective, evaluated in z-space or p-space.
/// Defined for independent statistics only.
class ScoreFunction {
public:
    explicit ScoreFunction(const ObjectiveSpec& spec) : spec_(spec) {
        spec.validate();
        if (spec.model.rho != 0.0) {
            throw UnsupportedModel("scores are defined only for independent p-values (rho = 0)");
        }
        cut_ = std_normal_quantile(spec.alpha);
    }

    const ObjectiveSpec& spec() const { return spec_; }
    /// Phi^{-1}(alpha): the z-score of the marginal cut.
    double cut() const { return cut_; }

    double coefficient(Coefficient which, ZScorePair z) const {
        const auto& w = spec_.weights;
        const double l1 = lr_z(z.z1, spec_.model.theta1);
        const double l2 = lr_z(z.z2, spec_.model.theta2);
        switch (which) {
            case Coefficient::a1: return 0.5 * (w.w_avg * l1 * l2 + w.w_1 * l1);
            case Coefficient::a2: return 0.5 * (w.w_avg * l1 * l2 + w.w_1 * l2);
            case Coefficient::a3: return w.w_any * l1 * l2;
        }
        return 0.0;
    }

    double score_z(ZScorePair z) const {
        const bool r1 = z.z1 <= cut_;
        const bool r2 = z.z2 <= cut_;
        if (!r1 && !r2) return 0.0;
        return piece(z, r1, r2);
    }

    double operator()(PValuePair p) const { return score_z(z_of(p)); }

    double coefficient(Coefficient which, PValuePair p) const { return coefficient(which, z_of(p)); }

    /// Score with the indicators fixed, i.e. the smooth expression valid on one
    /// of the three rectangles of the L-shaped domain. Used to extend a
    /// rectangle's expression to its closure.
    double piece(ZScorePair z, bool r1, bool r2) const {
        const auto& w = spec_.weights;
        const double l1 = lr_z(z.z1, spec_.model.theta1);
        const double l2 = lr_z(z.z2, spec_.model.theta2);
        const double joint = l1 * l2;
        double s = w.w_any * joint;
        if (r1) s += 0.5 * (w.w_avg * joint + w.w_1 * l1);
        if (r2) s += 0.5 * (w.w_avg * joint + w.w_1 * l2);
        return s;
    }

private:
    static ZScorePair z_of(PValuePair p) {
        if (!(p.p1 > 0.0 && p.p1 < 1.0 && p.p2 > 0.0 && p.p2 < 1.0)) {
            throw DomainError("score: p-values must lie in (0, 1)");
        }
        return {std_normal_quantile(p.p1), std_normal_quantile(p.p2)};
    }

    ObjectiveSpec spec_;
    double cut_ = 0.0;
};

inline double coefficient(const ObjectiveSpec& spec, Coefficient which, PValuePair p) {
    return ScoreFunction(spec).coefficient(which, p);
}

inline double score(const ObjectiveSpec& spec, PValuePair p) { return ScoreFunction(spec)(p); }

}  // namespace omt
