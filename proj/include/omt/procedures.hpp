#pragma once

// Decision rules for two hypotheses: the builtin procedures and the optimal
// (score + threshold) rule.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "omt/errors.hpp"
#include "omt/gauss.hpp"
#include "omt/numerics.hpp"
#include "omt/objective.hpp"

namespace omt {

enum class ProcedureKind { omt, hommel, closed_stouffer, bittman, fixed_sequence, bonferroni };

inline std::string_view to_string(ProcedureKind k) {
    switch (k) {
        case ProcedureKind::omt: return "omt";
        case ProcedureKind::hommel: return "hommel";
        case ProcedureKind::closed_stouffer: return "closed_stouffer";
        case ProcedureKind::bittman: return "bittman";
        case ProcedureKind::fixed_sequence: return "fixed_sequence";
        case ProcedureKind::bonferroni: return "bonferroni";
    }
    return "?";
}

inline ProcedureKind parse_procedure_kind(std::string_view s) {
    for (auto k : {ProcedureKind::omt, ProcedureKind::hommel, ProcedureKind::closed_stouffer, ProcedureKind::bittman,
                   ProcedureKind::fixed_sequence, ProcedureKind::bonferroni}) {
        if (s == to_string(k)) return k;
    }
    throw DomainError("unknown procedure '" + std::string(s) + "'");
}

struct Decision {
    bool d1 = false;
    bool d2 = false;

    bool any() const { return d1 || d2; }
    /// Componentwise order: every rejection of `other` is also made here.
    bool dominates(const Decision& other) const { return (d1 || !other.d1) && (d2 || !other.d2); }
    friend bool operator==(const Decision&, const Decision&) = default;
};

/// Rejection sets along one coordinate with the other held fixed.
struct SliceSets {
    IntervalSet d1;
    IntervalSet d2;
};

enum class RegionPart { d1, d2, any };

namespace detail {
/// {z : exp(theta z - theta^2 / 2) * a > b} for theta < 0, as (-inf, bound).
inline IntervalSet lr_exceeds(double theta, double a, double b) {
    if (b < 0.0) return {-kInf, kInf};
    if (!(a > 0.0)) return {};
    const double bound = (std::log(b / a) + 0.5 * theta * theta) / theta;
    return {-kInf, bound};
}

/// z with exp(theta z - theta^2 / 2) = l, if l > 0.
inline std::optional<double> lr_inverse(double theta, double l) {
    if (!(l > 0.0) || !std::isfinite(l)) return std::nullopt;
    return (std::log(l) + 0.5 * theta * theta) / theta;
}
}  // namespace detail

/// An immutable two-hypothesis decision rule at level alpha.
///
/// Besides pointwise decisions, every rule exposes its rejection sets along
/// either axis in closed form (slices) together with the outer-coordinate
/// values where those sets change non-smoothly; region probabilities are
/// integrals over slices.
class Procedure {
public:
    static Procedure hommel(double alpha) { return Procedure(ProcedureKind::hommel, alpha, 0.0); }
    static Procedure bonferroni(double alpha) { return Procedure(ProcedureKind::bonferroni, alpha, 0.0); }
    static Procedure fixed_sequence(double alpha) { return Procedure(ProcedureKind::fixed_sequence, alpha, 0.0); }
    static Procedure closed_stouffer(double alpha) {
        return Procedure(ProcedureKind::closed_stouffer, alpha, std::numbers::sqrt2 * std_normal_quantile(alpha));
    }
    /// Consonant z-sum rule with an explicit threshold on z1 + z2.
    static Procedure bittman(double alpha, double z_sum_threshold) {
        return Procedure(ProcedureKind::bittman, alpha, z_sum_threshold);
    }
    /// Score rule: reject H_i iff p_i <= alpha and s(p) > threshold.
    static Procedure omt(const ScoreFunction& score, double threshold) {
        if (!(threshold >= 0.0)) throw DomainError("omt threshold must be >= 0");
        return Procedure(ProcedureKind::omt, score.spec().alpha, threshold, score);
    }

    ProcedureKind kind() const { return kind_; }
    double alpha() const { return alpha_; }
    /// t for omt; the z-sum threshold for bittman and closed_stouffer.
    double threshold() const { return threshold_; }
    const std::optional<ScoreFunction>& score() const { return score_; }
    std::string name() const { return std::string(to_string(kind_)); }

    /// Phi^{-1}(alpha) and Phi^{-1}(alpha / 2).
    double cut() const { return cut_; }
    double half_cut() const { return half_cut_; }

    Decision decide_z(ZScorePair z) const {
        const double c = cut_;
        switch (kind_) {
            case ProcedureKind::hommel: {
                const bool both = z.z1 <= c && z.z2 <= c;
                return {z.z1 <= half_cut_ || both, z.z2 <= half_cut_ || both};
            }
            case ProcedureKind::bonferroni: return {z.z1 <= half_cut_, z.z2 <= half_cut_};
            case ProcedureKind::fixed_sequence: {
                const bool first = z.z1 <= c;
                return {first, first && z.z2 <= c};
            }
            case ProcedureKind::closed_stouffer:
            case ProcedureKind::bittman: {
                const bool sum = z.z1 + z.z2 <= threshold_;
                return {z.z1 <= c && sum, z.z2 <= c && sum};
            }
            case ProcedureKind::omt: {
                const bool pass = score_->score_z(z) > threshold_;
                return {z.z1 <= c && pass, z.z2 <= c && pass};
            }
        }
        return {};
    }

    /// Rejection sets of the inner coordinate with the outer one fixed at v.
    SliceSets slice(Axis outer, double v) const {
        if (kind_ == ProcedureKind::omt) return omt_slice(outer, v);
        if (kind_ == ProcedureKind::fixed_sequence && outer == Axis::z2) {
            SliceSets s;
            s.d1.add(-kInf, cut_);
            if (v <= cut_) s.d2.add(-kInf, cut_);
            return s;
        }
        SliceSets s = column(v);
        if (outer == Axis::z2) std::swap(s.d1, s.d2);  // symmetric rules
        return s;
    }

    /// Outer-coordinate values at which slices change non-smoothly.
    const std::vector<double>& breakpoints(Axis outer) const { return outer == Axis::z1 ? breaks_z1_ : breaks_z2_; }

private:
    Procedure(ProcedureKind kind, double alpha, double threshold, std::optional<ScoreFunction> score = std::nullopt)
        : kind_(kind), alpha_(alpha), threshold_(threshold), score_(std::move(score)) {
        if (!(alpha > 0.0 && alpha <= 0.5)) throw DomainError("procedure alpha must lie in (0, 0.5]");
        cut_ = std_normal_quantile(alpha);
        half_cut_ = std_normal_quantile(alpha / 2.0);
        breaks_z1_ = {cut_};
        switch (kind_) {
            case ProcedureKind::hommel:
            case ProcedureKind::bonferroni: breaks_z1_.push_back(half_cut_); break;
            case ProcedureKind::closed_stouffer:
            case ProcedureKind::bittman: breaks_z1_.push_back(threshold_ - cut_); break;
            case ProcedureKind::fixed_sequence: break;
            case ProcedureKind::omt: break;
        }
        breaks_z2_ = breaks_z1_;
        if (kind_ == ProcedureKind::omt) {
            omt_breaks(Axis::z1, breaks_z1_);
            omt_breaks(Axis::z2, breaks_z2_);
        }
    }

    // Builtin rules sliced along z2 with z1 fixed.
    SliceSets column(double z1) const {
        const double c = cut_;
        SliceSets col;
        switch (kind_) {
            case ProcedureKind::hommel:
                if (z1 <= half_cut_) col.d1.add(-kInf, kInf);
                else if (z1 <= c) col.d1.add(-kInf, c);
                col.d2.add(-kInf, z1 <= c ? c : half_cut_);
                break;
            case ProcedureKind::bonferroni:
                if (z1 <= half_cut_) col.d1.add(-kInf, kInf);
                col.d2.add(-kInf, half_cut_);
                break;
            case ProcedureKind::fixed_sequence:
                if (z1 <= c) {
                    col.d1.add(-kInf, kInf);
                    col.d2.add(-kInf, c);
                }
                break;
            case ProcedureKind::closed_stouffer:
            case ProcedureKind::bittman:
                if (z1 <= c) col.d1.add(-kInf, threshold_ - z1);
                col.d2.add(-kInf, std::min(c, threshold_ - z1));
                break;
            case ProcedureKind::omt: break;
        }
        return col;
    }

    // Score weights regrouped: on the square both indicators are on,
    //   s = k l_o l_i + w1 (l_o + l_i) / 2,          k  = w_any + w_avg;
    // on a strip only one is on,
    //   s = l_small (k' l_other + w1 / 2),            k' = w_any + w_avg / 2.
    struct Grouped {
        double k, kp, half_w1, theta_out, theta_in;
    };

    Grouped grouped(Axis outer) const {
        const auto& sp = score_->spec();
        const auto& w = sp.weights;
        const bool o1 = outer == Axis::z1;
        return {w.w_any + w.w_avg, w.w_any + 0.5 * w.w_avg, 0.5 * w.w_1, o1 ? sp.model.theta1 : sp.model.theta2,
                o1 ? sp.model.theta2 : sp.model.theta1};
    }

    SliceSets omt_slice(Axis outer, double v) const {
        const double c = cut_;
        const double t = threshold_;
        const Grouped g = grouped(outer);
        const double lo = lr_z(v, g.theta_out);
        IntervalSet small_outer, small_inner;  // rejections of the outer / inner hypothesis
        if (v <= c) {
            // square: l_i (k l_o + w1/2) > t - w1 l_o / 2
            const IntervalSet sq = intersect(detail::lr_exceeds(g.theta_in, g.k * lo + g.half_w1, t - g.half_w1 * lo),
                                             IntervalSet(-kInf, c));
            // strip with only the outer p-value small: l_o (k' l_i + w1/2) > t
            const IntervalSet strip =
                intersect(detail::lr_exceeds(g.theta_in, g.kp * lo, t - g.half_w1 * lo), IntervalSet(c, kInf));
            small_outer = unite(sq, strip);
            small_inner = sq;
        } else {
            // strip with only the inner p-value small: l_i (k' l_o + w1/2) > t
            small_inner = intersect(detail::lr_exceeds(g.theta_in, g.kp * lo + g.half_w1, t), IntervalSet(-kInf, c));
        }
        return outer == Axis::z1 ? SliceSets{small_outer, small_inner} : SliceSets{small_inner, small_outer};
    }

    // Outer values where the inner boundary crosses the cut.
    void omt_breaks(Axis outer, std::vector<double>& out) const {
        const double c = cut_;
        const double t = threshold_;
        const Grouped g = grouped(outer);
        const double li = lr_z(c, g.theta_in);
        auto push = [&](std::optional<double> z) {
            if (z && std::isfinite(*z)) out.push_back(*z);
        };
        // square: l_o (k l_i + w1/2) = t - w1 l_i / 2
        push(detail::lr_inverse(g.theta_out, (t - g.half_w1 * li) / (g.k * li + g.half_w1)));
        // inner strip: l_i (k' l_o + w1/2) = t
        if (g.kp > 0.0) push(detail::lr_inverse(g.theta_out, (t / li - g.half_w1) / g.kp));
        // outer strip: l_o (k' l_i + w1/2) = t, evaluated at the cut of the inner coordinate
        push(detail::lr_inverse(g.theta_out, t / (g.kp * li + g.half_w1)));
        std::sort(out.begin(), out.end());
    }

    ProcedureKind kind_;
    double alpha_;
    double threshold_;
    std::optional<ScoreFunction> score_;
    double cut_ = 0.0;
    double half_cut_ = 0.0;
    std::vector<double> breaks_z1_;
    std::vector<double> breaks_z2_;
};

inline Decision decide(const Procedure& proc, PValuePair p) { return proc.decide_z(to_z(p)); }

inline IntervalSet select_part(const SliceSets& s, RegionPart part) {
    switch (part) {
        case RegionPart::d1: return s.d1;
        case RegionPart::d2: return s.d2;
        case RegionPart::any: return unite(s.d1, s.d2);
    }
    return {};
}

namespace detail {
/// Integral of a set-valued description over the plane, split so that every
/// boundary is a smooth bounded graph: {z2 <= c} sliced along z2 with z1
/// outer, and {z2 > c} sliced along z1 with z2 outer.
template <class SetOf>
double split_plane_probability(SetOf&& set_of, double c, const AlternativeModel& model,
                               std::span<const double> breaks_z1, std::span<const double> breaks_z2,
                               const QuadratureConfig& cfg) {
    const GaussLegendre rule(cfg.nodes_per_panel);
    const IntervalSet low(-kInf, c);
    auto eval = [&](int panels) {
        const double a = slice_integral([&](double v) { return intersect(set_of(Axis::z1, v), low); }, Axis::z1,
                                        model.theta1 - cfg.window, model.theta1 + cfg.window, model, breaks_z1,
                                        panels, rule);
        const double b = slice_integral([&](double v) { return set_of(Axis::z2, v); }, Axis::z2,
                                        std::max(c, model.theta2 - cfg.window), model.theta2 + cfg.window, model,
                                        breaks_z2, panels, rule);
        return a + b;
    };
    return certify_by_doubling(eval, cfg);
}
}  // namespace detail

/// P_model(D_1 = 1), P_model(D_2 = 1) or P_model(D_1 or D_2).
inline double region_probability(const Procedure& proc, RegionPart part, const AlternativeModel& model,
                                 const QuadratureConfig& cfg) {
    model.validate();
    cfg.validate();
    return detail::split_plane_probability(
        [&](Axis outer, double v) { return select_part(proc.slice(outer, v), part); }, proc.cut(), model,
        proc.breakpoints(Axis::z1), proc.breakpoints(Axis::z2), cfg);
}

/// Rejection probability when both nulls hold (theta = 0).
inline double null_rejection_probability(const Procedure& proc, const QuadratureConfig& cfg, double rho = 0.0) {
    return region_probability(proc, RegionPart::any, {0.0, 0.0, rho}, cfg);
}

/// Null measure of the set where the two rules make different decisions.
inline double symmetric_difference_measure(const Procedure& a, const Procedure& b, const QuadratureConfig& cfg) {
    if (a.alpha() != b.alpha()) throw DomainError("symmetric_difference_measure: rules must share alpha");
    cfg.validate();
    std::vector<double> b1 = a.breakpoints(Axis::z1), b2 = a.breakpoints(Axis::z2);
    b1.insert(b1.end(), b.breakpoints(Axis::z1).begin(), b.breakpoints(Axis::z1).end());
    b2.insert(b2.end(), b.breakpoints(Axis::z2).begin(), b.breakpoints(Axis::z2).end());
    auto diff = [&](Axis outer, double v) {
        const auto sa = a.slice(outer, v), sb = b.slice(outer, v);
        return unite(symmetric_difference(sa.d1, sb.d1), symmetric_difference(sa.d2, sb.d2));
    };
    return detail::split_plane_probability(diff, a.cut(), AlternativeModel::null(), b1, b2, cfg);
}

/// Largest score over the L-shaped domain on a 256 x 256 grid of p-values.
inline double sampled_max_score(const ScoreFunction& s) {
    constexpr int n = 256;
    double best = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            best = std::max(best, s(PValuePair{(i + 0.5) / n, (j + 0.5) / n}));
        }
    }
    return best;
}

/// Optimal rule for the objective: threshold t solved by bisection so that
/// the global-null rejection probability equals alpha.
inline Procedure build_omt(const ObjectiveSpec& spec, const QuadratureConfig& cfg = {}) {
    cfg.validate();
    const ScoreFunction score(spec);  // validates; throws UnsupportedModel for rho != 0
    const double alpha = spec.alpha;
    auto excess = [&](double t) { return null_rejection_probability(Procedure::omt(score, t), cfg) - alpha; };
    double hi = std::max(2.0 * sampled_max_score(score), 1.0);
    for (int k = 0; excess(hi) > 0.0; ++k) {
        if (k > 200) throw NoBracket("build_omt: could not bracket the threshold");
        hi *= 16.0;
    }
    const double tol = std::min(cfg.abs_tol, 1e-6 * alpha);
    return Procedure::omt(score, bisect(excess, 0.0, hi, tol));
}

/// Bittman's recalibration of closed-Stouffer: z-sum threshold solving
/// P0(z1 + z2 <= t, min(z1, z2) <= Phi^{-1}(alpha)) = alpha.
inline Procedure build_bittman(double alpha, const QuadratureConfig& cfg = {}) {
    if (!(alpha > 0.0 && alpha <= 0.5)) throw DomainError("build_bittman: alpha must lie in (0, 0.5]");
    cfg.validate();
    const double stouffer = std::numbers::sqrt2 * std_normal_quantile(alpha);
    auto excess = [&](double t) { return null_rejection_probability(Procedure::bittman(alpha, t), cfg) - alpha; };
    const double tol = std::min(cfg.abs_tol, 1e-6 * alpha);
    const double t = bisect(excess, stouffer, -2.0 * stouffer + 16.0, tol);
    // At alpha = 1/2 the two thresholds coincide; below it Bittman's is larger.
    if (alpha < 0.5 && !(t > stouffer)) {
        throw NumericalError("build_bittman: threshold does not exceed the closed-Stouffer threshold");
    }
    return Procedure::bittman(alpha, t);
}

/// Shift above which the Pi_1 optimal rule coincides with Hommel's:
/// -log 2 / (Phi^{-1}(alpha) - Phi^{-1}(alpha / 2)).
inline double hommel_coincidence_bound(double alpha) {
    if (!(alpha > 0.0 && alpha < 0.5)) throw DomainError("hommel_coincidence_bound: alpha must lie in (0, 0.5)");
    return -std::numbers::ln2 / (std_normal_quantile(alpha) - std_normal_quantile(alpha / 2.0));
}

// ---------------------------------------------------------------------------
// Region grids
// ---------------------------------------------------------------------------
enum class CellClass { none, only1, only2, both };

inline std::string_view to_string(CellClass c) {
    switch (c) {
        case CellClass::none: return "none";
        case CellClass::only1: return "only1";
        case CellClass::only2: return "only2";
        case CellClass::both: return "both";
    }
    return "?";
}

inline CellClass classify(Decision d) {
    if (d.d1 && d.d2) return CellClass::both;
    if (d.d1) return CellClass::only1;
    if (d.d2) return CellClass::only2;
    return CellClass::none;
}

/// Classification of a square z-grid. `edges` has size()+1 entries shared by
/// both axes; cells(i, j) is the cell with z1 in [edges[i], edges[i+1]) and
/// z2 in [edges[j], edges[j+1]).
struct RegionGrid {
    std::vector<double> edges;
    std::vector<CellClass> cells;  // z1-major

    int size() const { return static_cast<int>(edges.size()) - 1; }
    double center(int i) const { return 0.5 * (edges[i] + edges[i + 1]); }
    CellClass at(int i, int j) const { return cells[static_cast<std::size_t>(i) * size() + j]; }

    std::array<long, 4> counts() const {
        std::array<long, 4> n{};
        for (auto c : cells) ++n[static_cast<int>(c)];
        return n;
    }

    friend bool operator==(const RegionGrid&, const RegionGrid&) = default;
};

/// Evaluates the rule at every cell center. Uniform edges over [z_lo, z_hi],
/// with the edges nearest Phi^{-1}(alpha) and Phi^{-1}(alpha / 2) moved onto
/// those lines so no cell straddles them.
inline RegionGrid export_region(const Procedure& proc, int grid_size, double z_lo, double z_hi) {
    if (grid_size < 16) throw DomainError("export_region: grid_size must be >= 16");
    if (!(z_hi > z_lo)) throw DomainError("export_region: z_hi must exceed z_lo");
    RegionGrid g;
    const double h = (z_hi - z_lo) / grid_size;
    g.edges.resize(grid_size + 1);
    for (int i = 0; i <= grid_size; ++i) g.edges[i] = z_lo + i * h;
    for (double line : {proc.half_cut(), proc.cut()}) {
        if (line <= z_lo || line >= z_hi) continue;
        const int k = static_cast<int>(std::lround((line - z_lo) / h));
        if (k > 0 && k < grid_size) g.edges[k] = line;
    }
    g.cells.resize(static_cast<std::size_t>(grid_size) * grid_size);
    for (int i = 0; i < grid_size; ++i) {
        for (int j = 0; j < grid_size; ++j) {
            g.cells[static_cast<std::size_t>(i) * grid_size + j] = classify(proc.decide_z({g.center(i), g.center(j)}));
        }
    }
    return g;
}

/// CSV with header `z1,z2,class`, one row per cell in z1-major order, cell
/// centers with 6 significant digits.
inline void write_region_csv(std::ostream& os, const RegionGrid& g) {
    os << "z1,z2,class\n";
    char buf[64];
    const int n = g.size();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            std::snprintf(buf, sizeof buf, "%.6g,%.6g,", g.center(i), g.center(j));
            os << buf << to_string(g.at(i, j)) << '\n';
        }
    }
}

}  // namespace omt
