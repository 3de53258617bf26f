#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "catch_amalgamated.hpp"
#include "omt/numerics.hpp"
#include "omt/procedures.hpp"
#include "oracles.hpp"

using Catch::Approx;
using namespace omt;

namespace {

constexpr double kAlpha = 0.025;
const double kCut = oracle::quantile(kAlpha);
const double kHalfCut = oracle::quantile(kAlpha / 2.0);

Procedure omt_for(Objective o, double th1, double th2, double alpha = kAlpha) {
    return build_omt(ObjectiveSpec::pure(o, {th1, th2, 0.0}, alpha));
}

std::vector<Procedure> all_kinds() {
    std::vector<Procedure> out{Procedure::hommel(kAlpha), Procedure::bonferroni(kAlpha),
                               Procedure::fixed_sequence(kAlpha), Procedure::closed_stouffer(kAlpha),
                               build_bittman(kAlpha)};
    for (auto o : {Objective::any, Objective::avg, Objective::pi1, Objective::combo}) {
        out.push_back(omt_for(o, -2.0, -2.0));
        out.push_back(omt_for(o, -3.4, -2.7));
    }
    return out;
}

/// Null mass of {decisions differ} by a midpoint rule on a fine z-grid.
double grid_difference(const Procedure& a, const Procedure& b, double lo, double hi, int n) {
    const double h = (hi - lo) / n;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z1 = lo + (i + 0.5) * h;
        for (int j = 0; j < n; ++j) {
            const double z2 = lo + (j + 0.5) * h;
            if (!(a.decide_z({z1, z2}) == b.decide_z({z1, z2}))) acc += std_normal_pdf(z1) * std_normal_pdf(z2);
        }
    }
    return acc * h * h;
}

}  // namespace

TEST_CASE("decisions at reference points") {
    CHECK(decide(Procedure::hommel(kAlpha), {0.01, 0.9}) == Decision{true, false});
    CHECK(decide(Procedure::hommel(kAlpha), {0.02, 0.02}) == Decision{true, true});
    CHECK(decide(Procedure::hommel(kAlpha), {0.02, 0.03}) == Decision{false, false});
    CHECK(decide(Procedure::closed_stouffer(kAlpha), {0.0001, 0.024}) == Decision{true, true});
    CHECK(decide(Procedure::closed_stouffer(kAlpha), {0.024, 0.024}) == Decision{true, true});
    CHECK(decide(Procedure::closed_stouffer(kAlpha), {0.026, 0.0001}) == Decision{false, true});
    CHECK(decide(Procedure::fixed_sequence(kAlpha), {0.03, 0.001}) == Decision{false, false});
    CHECK(decide(Procedure::fixed_sequence(kAlpha), {0.02, 0.001}) == Decision{true, true});
    CHECK(decide(Procedure::bonferroni(kAlpha), {0.0124, 0.0126}) == Decision{true, false});
    CHECK_THROWS_AS(decide(Procedure::hommel(kAlpha), {-0.1, 0.5}), DomainError);
}

TEST_CASE("procedure names round trip") {
    for (auto k : {ProcedureKind::omt, ProcedureKind::hommel, ProcedureKind::closed_stouffer, ProcedureKind::bittman,
                   ProcedureKind::fixed_sequence, ProcedureKind::bonferroni}) {
        CHECK(parse_procedure_kind(to_string(k)) == k);
    }
    CHECK_THROWS_AS(parse_procedure_kind("holm"), DomainError);
    CHECK_THROWS_AS(Procedure::hommel(0.0), DomainError);
    CHECK_THROWS_AS(Procedure::hommel(0.6), DomainError);
}

TEST_CASE("builtin null rejection probabilities") {
    const QuadratureConfig q;
    CHECK(null_rejection_probability(Procedure::hommel(kAlpha), q) == Approx(kAlpha).margin(1e-9));
    CHECK(null_rejection_probability(Procedure::bonferroni(kAlpha), q) ==
          Approx(1.0 - (1.0 - kAlpha / 2) * (1.0 - kAlpha / 2)).margin(1e-9));
    CHECK(null_rejection_probability(Procedure::fixed_sequence(kAlpha), q) == Approx(kAlpha).margin(1e-9));
    // Closed-Stouffer: P(min z <= c, z1 + z2 <= sqrt2 c), strictly below alpha.
    const double t = std::numbers::sqrt2 * kCut;
    const double cs = null_rejection_probability(Procedure::closed_stouffer(kAlpha), q);
    // Complement inside the half-plane: both z above c; P(S <= t) - P(S <= t, z1 > c, z2 > c).
    // Oracle by 1-D integration of the conditional law of z2 given z1.
    double both_above = 0.0;
    {
        const double lo = kCut, hi = t - kCut;
        const int n = 20000;
        const double h = (hi - lo) / n;
        for (int i = 0; i < n; ++i) {
            const double z1 = lo + (i + 0.5) * h;
            both_above += std_normal_pdf(z1) * (oracle::Phi(t - z1) - oracle::Phi(kCut)) * h;
        }
    }
    CHECK(cs == Approx(kAlpha - both_above).margin(1e-8));
    CHECK(cs < kAlpha);
}

TEST_CASE("optimal rules and Bittman's rule are exactly at level alpha") {
    const QuadratureConfig q;
    for (auto o : {Objective::any, Objective::avg, Objective::pi1, Objective::combo}) {
        for (auto th : {std::pair{-1.0, -1.0}, std::pair{-3.0, -2.0}, std::pair{-2.0, -3.0}}) {
            const Procedure p = omt_for(o, th.first, th.second);
            INFO(to_string(o) << " theta " << th.first << "," << th.second);
            CHECK(p.threshold() >= 0.0);
            CHECK(null_rejection_probability(p, q) == Approx(kAlpha).margin(1e-6));
        }
    }
    CHECK(null_rejection_probability(build_bittman(kAlpha), q) == Approx(kAlpha).margin(1e-6));
}

TEST_CASE("optimal rule at a tiny level is nearly empty") {
    const Procedure p = omt_for(Objective::combo, -2.0, -2.0, 1e-12);
    const double area = null_rejection_probability(p, QuadratureConfig{});
    CHECK(area <= 1e-12 * (1.0 + 1e-6));
}

TEST_CASE("Pi_1 optimal rule coincides with Hommel above the bound") {
    const Procedure h = Procedure::hommel(kAlpha);
    for (double th : {-1.0, -2.0, -2.4}) {
        const Procedure p = omt_for(Objective::pi1, th, th);
        INFO("theta " << th);
        CHECK(symmetric_difference_measure(p, h, QuadratureConfig{}) < 1e-6);
    }
    CHECK(export_region(omt_for(Objective::pi1, -2, -2), 256, -5, 1) == export_region(h, 256, -5, 1));
}

TEST_CASE("Pi_1 optimal rule departs from Hommel below the bound") {
    const Procedure h = Procedure::hommel(kAlpha);
    const Procedure p = omt_for(Objective::pi1, -2.9, -2.9);
    const double measure = symmetric_difference_measure(p, h, QuadratureConfig{});
    // Square below c on a grid; on each strip {z_i <= c < z_j} the rule rejects
    // H_i iff z_i <= b for a constant b, located by bisecting decisions.
    const double square = grid_difference(p, h, -6.0, kCut, 4000);
    double lo = -6.0, hi = kCut;
    for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (lo + hi);
        (p.decide_z({mid, 0.0}).d1 ? lo : hi) = mid;
    }
    const double strips = 2.0 * std::abs(oracle::Phi(lo) - oracle::Phi(kHalfCut)) * (1.0 - kAlpha);
    CHECK(measure > 1e-6);
    CHECK(measure == Approx(square + strips).epsilon(0.05));
}

TEST_CASE("coincidence bound") {
    CHECK(hommel_coincidence_bound(0.025) == Approx(-2.46).margin(0.01));
    CHECK(hommel_coincidence_bound(0.025) == Approx(-2.4627).margin(1e-3));
    CHECK(hommel_coincidence_bound(0.05) ==
          Approx(-std::log(2.0) / (oracle::quantile(0.05) - oracle::quantile(0.025))).epsilon(1e-12));
    CHECK_THROWS_AS(hommel_coincidence_bound(0.5), DomainError);
    CHECK_THROWS_AS(hommel_coincidence_bound(0.0), DomainError);
}

TEST_CASE("Bittman's threshold") {
    const Procedure b = build_bittman(kAlpha);
    CHECK(b.threshold() > -2.77181);
    CHECK(b.threshold() > std::numbers::sqrt2 * kCut);
    const McResult mc = mc_estimate([&](ZScorePair z) { return b.decide_z(z).any() ? 1.0 : 0.0; },
                                    AlternativeModel::null(), McConfig{1'000'000, 17});
    CHECK(std::abs(mc.mean - kAlpha) <= 3.0 * mc.std_error);

    const Procedure half = build_bittman(0.5);
    CHECK(half.threshold() == Approx(0.0).margin(1e-6));
    const McResult mc_half = mc_estimate([&](ZScorePair z) { return half.decide_z(z).any() ? 1.0 : 0.0; },
                                         AlternativeModel::null(), McConfig{200'000, 18});
    CHECK(std::abs(mc_half.mean - 0.5) <= 3.0 * mc_half.std_error);
    CHECK_THROWS_AS(build_bittman(0.0), DomainError);
    CHECK_THROWS_AS(build_bittman(-0.1), DomainError);
}

TEST_CASE("Pi_any optimal rule is Bittman's rule") {
    const Procedure b = build_bittman(kAlpha);
    const Procedure p = omt_for(Objective::any, -2.9, -2.9);
    const RegionGrid gp = export_region(p, 512, -5, 1);
    const RegionGrid gb = export_region(b, 512, -5, 1);
    CHECK(gp == gb);
    CHECK(symmetric_difference_measure(p, b, QuadratureConfig{}) < 1e-6);
}

TEST_CASE("Bittman's rule dominates closed-Stouffer") {
    const Procedure s = Procedure::closed_stouffer(kAlpha);
    const Procedure b = build_bittman(kAlpha);
    const int n = 512;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const ZScorePair z{-5.0 + 6.0 * (i + 0.5) / n, -5.0 + 6.0 * (j + 0.5) / n};
            REQUIRE(b.decide_z(z).dominates(s.decide_z(z)));
        }
    }
}

TEST_CASE("marginal nominality") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (const auto& p : all_kinds()) {
        for (int i = 0; i < 100'000; ++i) {
            const PValuePair x{u(rng), u(rng)};
            const Decision d = decide(p, x);
            if (x.p1 > kAlpha) REQUIRE_FALSE(d.d1);
            if (x.p2 > kAlpha) REQUIRE_FALSE(d.d2);
        }
    }
}

TEST_CASE("weak monotonicity") {
    std::mt19937_64 rng(22);
    // Concentrate pairs where decisions change.
    std::uniform_real_distribution<double> u(0.0, 0.06);
    for (const auto& p : all_kinds()) {
        for (int i = 0; i < 10'000; ++i) {
            double a1 = u(rng), b1 = u(rng), a2 = u(rng), b2 = u(rng);
            if (a1 > b1) std::swap(a1, b1);
            if (a2 > b2) std::swap(a2, b2);
            REQUIRE(decide(p, {a1, a2}).dominates(decide(p, {b1, b2})));
        }
    }
}

TEST_CASE("unconstrained Pi_any rule is not weakly monotone") {
    // Rejects only the hypothesis with the smaller p-value when the z-sum is small.
    auto unconstrained = [](PValuePair p) {
        const double z = std_normal_quantile(p.p1) + std_normal_quantile(p.p2);
        const bool reject = z <= std::numbers::sqrt2 * std_normal_quantile(kAlpha);
        return Decision{reject && p.p1 <= p.p2, reject && p.p2 < p.p1};
    };
    const double a = kAlpha;
    const PValuePair p{a / 3 - a * a / 4, a / 3 + a * a / 4};
    const PValuePair q{a / 2 + a * a / 4, a / 2 - a * a / 4};
    REQUIRE(p.p1 <= q.p1);
    REQUIRE(p.p2 <= q.p2);
    const Decision dp = unconstrained(p), dq = unconstrained(q);
    CHECK(dq.any());
    CHECK_FALSE(dp.dominates(dq));
}

TEST_CASE("Hommel grid classes") {
    const RegionGrid g = export_region(Procedure::hommel(kAlpha), 256, -5, 1);
    bool found_c = false, found_half = false;
    for (double e : g.edges) {
        found_c |= e == std_normal_quantile(kAlpha);
        found_half |= e == std_normal_quantile(kAlpha / 2);
    }
    CHECK(found_c);
    CHECK(found_half);
    for (int i = 0; i < g.size(); ++i) {
        for (int j = 0; j < g.size(); ++j) {
            const double z1 = g.center(i), z2 = g.center(j);
            if (z1 > kHalfCut && z2 > kCut) REQUIRE(g.at(i, j) != CellClass::only1);
            if (z1 <= kCut && z2 <= kCut) REQUIRE(g.at(i, j) == CellClass::both);
        }
    }
}

TEST_CASE("closed-Stouffer diagonal boundary") {
    // On the diagonal both the z-sum and each marginal cut must hold, so the
    // boundary sits at min(c, sqrt2 c / 2) = c.
    const RegionGrid g = export_region(Procedure::closed_stouffer(kAlpha), 600, -5, 1);
    double last_both = -kInf, first_none = kInf;
    for (int i = 0; i < g.size(); ++i) {
        const CellClass c = g.at(i, i);
        if (c == CellClass::both) last_both = std::max(last_both, g.center(i));
        if (c == CellClass::none) first_none = std::min(first_none, g.center(i));
        REQUIRE((c == CellClass::both || c == CellClass::none));
    }
    CHECK(last_both < kCut);
    CHECK(first_none > kCut);
    CHECK(first_none - last_both < 2.0 * 6.0 / 600);
}

TEST_CASE("combo rule is asymmetric for unequal shifts") {
    const auto n = export_region(omt_for(Objective::combo, -3.4, -2.7), 256, -5, 1).counts();
    CHECK(n[1] != n[2]);
}

TEST_CASE("region CSV layout") {
    const RegionGrid g = export_region(Procedure::hommel(kAlpha), 16, -4, 0);
    std::ostringstream os;
    write_region_csv(os, g);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "z1,z2,class");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 256);
    CHECK_THROWS_AS(export_region(Procedure::hommel(kAlpha), 8, -4, 0), DomainError);
}

TEST_CASE("symmetric difference of a rule with itself is zero") {
    const Procedure p = omt_for(Objective::combo, -3.0, -2.0);
    CHECK(symmetric_difference_measure(p, p, QuadratureConfig{}) == 0.0);
    CHECK_THROWS_AS(symmetric_difference_measure(Procedure::hommel(0.025), Procedure::hommel(0.05), {}), DomainError);
}

TEST_CASE("optimal rules reject correlated models") {
    CHECK_THROWS_AS(build_omt(ObjectiveSpec::pure(Objective::any, {-2, -2, 0.5}, kAlpha)), UnsupportedModel);
}

TEST_CASE("region probabilities are stable under panel doubling") {
    QuadratureConfig base;
    QuadratureConfig doubled = base;
    doubled.panels_per_axis *= 2;
    const AlternativeModel m{-2.4, -1.7, 0.0};
    for (const auto& p : all_kinds()) {
        for (auto part : {RegionPart::d1, RegionPart::d2, RegionPart::any}) {
            CHECK(std::abs(region_probability(p, part, m, base) - region_probability(p, part, m, doubled)) <=
                  2 * base.abs_tol);
        }
    }
}
