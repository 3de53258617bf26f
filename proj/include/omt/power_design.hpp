#pragma once

// Power measures, two-proportion calibration of the alternative shifts, and
// design searches over the sample split and the total sample size.

#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <vector>

#include "omt/errors.hpp"
#include "omt/gauss.hpp"
#include "omt/numerics.hpp"
#include "omt/objective.hpp"
#include "omt/procedures.hpp"

namespace omt {

inline constexpr std::array<Objective, 4> kMeasures{Objective::avg, Objective::any, Objective::pi1, Objective::combo};

inline const char* measure_name(Objective m) {
    switch (m) {
        case Objective::avg: return "pi_avg";
        case Objective::any: return "pi_any";
        case Objective::pi1: return "pi_1";
        case Objective::combo: return "pi_combo";
    }
    return "?";
}

struct PowerReport {
    double pi_avg = 0.0;
    double pi_any = 0.0;
    double pi_1 = 0.0;
    double pi_combo = 0.0;

    double get(Objective m) const {
        switch (m) {
            case Objective::avg: return pi_avg;
            case Objective::any: return pi_any;
            case Objective::pi1: return pi_1;
            case Objective::combo: return pi_combo;
        }
        return 0.0;
    }
    void set(Objective m, double v) {
        switch (m) {
            case Objective::avg: pi_avg = v; break;
            case Objective::any: pi_any = v; break;
            case Objective::pi1: pi_1 = v; break;
            case Objective::combo: pi_combo = v; break;
        }
    }
};

inline double combo_of(double pi_any, double pi_1) { return pi_any / 3.0 + 2.0 * pi_1 / 3.0; }

/// Pi_any = P(D1 or D2) and Pi_avg = E(D1 + D2) / 2 under (theta1, theta2);
/// Pi_1 = [P_(theta1, 0)(D1) + P_(0, theta2)(D2)] / 2; Pi_combo = Pi_any / 3 + 2 Pi_1 / 3.
inline PowerReport evaluate_power(const Procedure& proc, const AlternativeModel& model, const QuadratureConfig& cfg = {}) {
    model.validate();
    PowerReport r;
    r.pi_any = region_probability(proc, RegionPart::any, model, cfg);
    r.pi_avg = 0.5 * (region_probability(proc, RegionPart::d1, model, cfg) +
                      region_probability(proc, RegionPart::d2, model, cfg));
    r.pi_1 = 0.5 * (region_probability(proc, RegionPart::d1, {model.theta1, 0.0, model.rho}, cfg) +
                    region_probability(proc, RegionPart::d2, {0.0, model.theta2, model.rho}, cfg));
    r.pi_combo = combo_of(r.pi_any, r.pi_1);
    return r;
}

struct PowerEstimate {
    PowerReport mean;
    PowerReport std_error;
};

/// Monte Carlo counterpart of evaluate_power. The both-false and the two
/// one-false configurations are simulated from seeds seed, seed + 1, seed + 2.
inline PowerEstimate evaluate_power_mc(const Procedure& proc, const AlternativeModel& model, const McConfig& cfg) {
    using Event = std::function<double(ZScorePair)>;
    const std::array<Event, 2> both{
        [&](ZScorePair z) { return proc.decide_z(z).any() ? 1.0 : 0.0; },
        [&](ZScorePair z) {
            const Decision d = proc.decide_z(z);
            return 0.5 * (static_cast<double>(d.d1) + static_cast<double>(d.d2));
        }};
    const auto r = mc_estimate_many(both, model, cfg);
    McConfig c1 = cfg, c2 = cfg;
    c1.seed += 1;
    c2.seed += 2;
    const McResult m1 =
        mc_estimate([&](ZScorePair z) { return proc.decide_z(z).d1 ? 1.0 : 0.0; }, {model.theta1, 0.0, model.rho}, c1);
    const McResult m2 =
        mc_estimate([&](ZScorePair z) { return proc.decide_z(z).d2 ? 1.0 : 0.0; }, {0.0, model.theta2, model.rho}, c2);
    PowerEstimate e;
    e.mean = {r[1].mean, r[0].mean, 0.5 * (m1.mean + m2.mean), 0.0};
    e.mean.pi_combo = combo_of(e.mean.pi_any, e.mean.pi_1);
    e.std_error = {r[1].std_error, r[0].std_error, 0.5 * std::hypot(m1.std_error, m2.std_error), 0.0};
    e.std_error.pi_combo = std::hypot(e.std_error.pi_any / 3.0, 2.0 * e.std_error.pi_1 / 3.0);
    return e;
}

/// Power of a single hypothesis tested alone at level alpha.
inline double single_test_power(double theta, double alpha) {
    return std_normal_cdf(std_normal_quantile(alpha) - theta);
}

/// Only one group funded: the other hypothesis is a true null whose
/// rejections are not discoveries.
inline PowerReport single_group_report(double theta_funded, double alpha) {
    const double b = single_test_power(theta_funded, alpha);
    PowerReport r{b / 2.0, b, b / 2.0, 0.0};
    r.pi_combo = combo_of(r.pi_any, r.pi_1);
    return r;
}

inline void write_power_csv(std::ostream& os, const PowerReport& r) {
    char buf[64];
    os << "measure,value\n";
    for (auto m : kMeasures) {
        std::snprintf(buf, sizeof buf, "%s,%.4f\n", measure_name(m), r.get(m));
        os << buf;
    }
}

// ---------------------------------------------------------------------------
// Two-proportion calibration
// ---------------------------------------------------------------------------
struct TwoArmDesign {
    double rate_control = 0.075;
    double rate_treat = 0.04875;
    long n_control = 1;
    long n_treat = 1;

    void validate() const {
        if (!(rate_control > 0.0 && rate_control < 1.0 && rate_treat > 0.0 && rate_treat < 1.0)) {
            throw DomainError("event rates must lie in (0, 1)");
        }
        if (n_control < 1 || n_treat < 1) throw DomainError("arm sizes must be >= 1");
    }
};

/// Mean shift of the one-sided unpooled two-proportion z-statistic.
inline double theta_from_design(const TwoArmDesign& d) {
    d.validate();
    const double var = d.rate_control * (1.0 - d.rate_control) / static_cast<double>(d.n_control) +
                       d.rate_treat * (1.0 - d.rate_treat) / static_cast<double>(d.n_treat);
    return (d.rate_treat - d.rate_control) / std::sqrt(var);
}

/// One-sided p-value Phi(z) of the observed difference in proportions
/// (treated minus control), unpooled normal approximation.
inline double observed_pvalue(long events_control, long n_control, long events_treat, long n_treat) {
    if (n_control < 1 || n_treat < 1 || events_control < 0 || events_treat < 0 || events_control > n_control ||
        events_treat > n_treat) {
        throw DomainError("observed_pvalue: need 0 <= events <= n and n >= 1");
    }
    const double pc = static_cast<double>(events_control) / n_control;
    const double pt = static_cast<double>(events_treat) / n_treat;
    if (pc == 0.0 || pc == 1.0 || pt == 0.0 || pt == 1.0) {
        throw DegenerateVariance("observed_pvalue: an observed proportion is 0 or 1");
    }
    const double z = (pt - pc) / std::sqrt(pc * (1.0 - pc) / n_control + pt * (1.0 - pt) / n_treat);
    return std_normal_cdf(z);
}

/// Shift giving marginal power beta at level alpha: Phi^{-1}(alpha) - Phi^{-1}(beta).
inline double theta_from_marginal_power(double beta, double alpha) {
    if (!(alpha > 0.0 && alpha < 0.5)) throw DomainError("theta_from_marginal_power: alpha must lie in (0, 0.5)");
    if (!(beta >= alpha && beta < 1.0)) throw DomainError("theta_from_marginal_power: beta must lie in [alpha, 1)");
    if (beta == alpha) return 0.0;
    return std_normal_quantile(alpha) - std_normal_quantile(beta);
}

/// Maps the number of persons in a group (split evenly over two arms, odd
/// person to control) to the alternative shift of its hypothesis.
struct ShiftCalibration {
    enum class Mode { design, marginal };
    Mode mode = Mode::marginal;
    // design mode
    double rate_control = 0.075;
    double rate_treat = 0.04875;
    // marginal mode: shift with marginal power `beta` at `reference_persons`,
    // scaled with the square root of the group size
    double beta = 0.85;
    double reference_persons = 2400.0;
    double alpha = 0.025;

    /// Shift for a group of this size; 0 when the group is unfunded (< 2 persons).
    double theta_for_group(long persons) const {
        if (persons < 2) return 0.0;
        if (mode == Mode::design) {
            return theta_from_design({rate_control, rate_treat, (persons + 1) / 2, persons / 2});
        }
        return theta_from_marginal_power(beta, alpha) * std::sqrt(static_cast<double>(persons) / reference_persons);
    }
};

// ---------------------------------------------------------------------------
// Procedure families for design searches
// ---------------------------------------------------------------------------

/// A rule that may be rebuilt for each alternative: a builtin, or the optimal
/// rule for fixed weights, or ("own") the optimal rule for whichever measure
/// is being evaluated.
struct ProcedureFamily {
    std::optional<ProcedureKind> builtin;
    std::optional<ObjectiveWeights> weights;

    static ProcedureFamily own() { return {}; }
    static ProcedureFamily of(ProcedureKind k) { return {k, std::nullopt}; }
    static ProcedureFamily omt_for(ObjectiveWeights w) { return {std::nullopt, w}; }

    Procedure build(const AlternativeModel& model, double alpha, Objective measure, const QuadratureConfig& cfg) const {
        if (builtin) {
            switch (*builtin) {
                case ProcedureKind::hommel: return Procedure::hommel(alpha);
                case ProcedureKind::closed_stouffer: return Procedure::closed_stouffer(alpha);
                case ProcedureKind::fixed_sequence: return Procedure::fixed_sequence(alpha);
                case ProcedureKind::bonferroni: return Procedure::bonferroni(alpha);
                case ProcedureKind::bittman: return build_bittman(alpha, cfg);
                case ProcedureKind::omt: break;
            }
        }
        const ObjectiveWeights w = weights.value_or(ObjectiveWeights::of(measure));
        return build_omt({w, model, alpha}, cfg);
    }

    bool depends_on_measure() const { return !builtin && !weights; }
};

/// Power of the family at a split of `total` persons: r * total to group 1.
inline PowerReport power_at_split(const ProcedureFamily& family, long total, double r, const ShiftCalibration& cal,
                                  const QuadratureConfig& cfg) {
    if (!(r >= 0.0 && r <= 1.0)) throw DomainError("split r must lie in [0, 1]");
    const long n1 = std::lround(r * static_cast<double>(total));
    const long n2 = total - n1;
    const double th1 = cal.theta_for_group(n1);
    const double th2 = cal.theta_for_group(n2);
    if (th1 == 0.0 && th2 == 0.0) throw DomainError("no group is funded");
    if (th1 == 0.0) return single_group_report(th2, cal.alpha);
    if (th2 == 0.0) return single_group_report(th1, cal.alpha);
    const AlternativeModel model{th1, th2, 0.0};
    if (!family.depends_on_measure()) {
        return evaluate_power(family.build(model, cal.alpha, Objective::any, cfg), model, cfg);
    }
    PowerReport out;
    for (auto m : kMeasures) out.set(m, evaluate_power(family.build(model, cal.alpha, m, cfg), model, cfg).get(m));
    return out;
}

struct AllocationResult {
    std::vector<double> r_grid;
    std::vector<PowerReport> power_at_r;

    /// Split with the largest value of the measure (first on ties).
    double argmax(Objective m) const {
        std::size_t best = 0;
        for (std::size_t i = 1; i < power_at_r.size(); ++i) {
            if (power_at_r[i].get(m) > power_at_r[best].get(m)) best = i;
        }
        return r_grid.at(best);
    }
};

inline AllocationResult allocation_search(long total, const ProcedureFamily& family, const ShiftCalibration& cal,
                                          std::vector<double> r_grid, const QuadratureConfig& cfg = {}) {
    if (r_grid.empty()) throw DomainError("allocation_search: empty split grid");
    if (total < 2) throw DomainError("allocation_search: total sample size must be >= 2");
    std::sort(r_grid.begin(), r_grid.end());
    AllocationResult res;
    res.r_grid = r_grid;
    for (double r : r_grid) res.power_at_r.push_back(power_at_split(family, total, r, cal, cfg));
    return res;
}

inline void write_allocation_csv(std::ostream& os, const AllocationResult& a) {
    os << "r,pi_avg,pi_any,pi_1,pi_combo\n";
    char buf[128];
    for (std::size_t i = 0; i < a.r_grid.size(); ++i) {
        const auto& p = a.power_at_r[i];
        std::snprintf(buf, sizeof buf, "%.4f,%.4f,%.4f,%.4f,%.4f\n", a.r_grid[i], p.pi_avg, p.pi_any, p.pi_1,
                      p.pi_combo);
        os << buf;
    }
}

/// Smallest total sample size (integer persons) whose power for `measure`
/// reaches `target`: doubling to bracket, bisection, then a downward scan.
inline long required_n_for_power(const ProcedureFamily& family, Objective measure, double target,
                                 const ShiftCalibration& cal, double r, const QuadratureConfig& cfg = {},
                                 long n_min = 4, long n_cap = 2'000'000) {
    if (target <= 0.0) return n_min;
    if (target >= 1.0) throw Unachievable("power target must be below 1 for a finite sample size");
    std::map<long, double> memo;
    auto power = [&](long n) {
        auto it = memo.find(n);
        if (it != memo.end()) return it->second;
        const double v = power_at_split(family, n, r, cal, cfg).get(measure);
        memo.emplace(n, v);
        return v;
    };
    if (power(n_min) >= target) return n_min;
    long lo = n_min, hi = 2 * n_min;
    while (power(hi) < target) {
        lo = hi;
        if (hi >= n_cap) throw Unachievable("power target not reached below the sample-size cap");
        hi = std::min(2 * hi, n_cap);
    }
    while (hi - lo > 1) {
        const long mid = lo + (hi - lo) / 2;
        if (power(mid) >= target) hi = mid;
        else lo = mid;
    }
    // Even/odd splits make power slightly ragged in N.
    long best = hi;
    for (long n = hi - 1; n >= std::max(n_min, hi - 8); --n) {
        if (power(n) >= target) best = n;
    }
    return best;
}

struct SavingsReport {
    Objective measure;
    long reference_n = 0;
    double omt_power = 0.0;
    long required_n = 0;
    double saving_pct = 0.0;
};

/// Sample size the competitor needs to match the optimal rule's power at
/// `reference_n`, and the relative saving (N_req - N_ref) / N_req * 100.
inline SavingsReport savings_vs(const ProcedureFamily& competitor, Objective measure, long reference_n, double r,
                                const ShiftCalibration& cal, const QuadratureConfig& cfg = {}, long n_cap = 2'000'000) {
    SavingsReport s;
    s.measure = measure;
    s.reference_n = reference_n;
    s.omt_power = power_at_split(ProcedureFamily::own(), reference_n, r, cal, cfg).get(measure);
    s.required_n = required_n_for_power(competitor, measure, s.omt_power, cal, r, cfg, 4, n_cap);
    s.saving_pct = 100.0 * static_cast<double>(s.required_n - reference_n) / static_cast<double>(s.required_n);
    return s;
}

}  // namespace omt
