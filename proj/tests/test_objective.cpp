#include <array>
#include <cmath>
#include <random>

#include "catch_amalgamated.hpp"
#include "omt/objective.hpp"
#include "oracles.hpp"

using Catch::Approx;
using namespace omt;

namespace {

constexpr double kAlpha = 0.025;

double lr(double p, double theta) { return std::exp(oracle::quantile(p) * theta - 0.5 * theta * theta); }

ObjectiveSpec pure(Objective o, double th1 = -2.0, double th2 = -2.0) {
    return ObjectiveSpec::pure(o, {th1, th2, 0.0}, kAlpha);
}

}  // namespace

TEST_CASE("coefficients of the pure objectives") {
    const PValuePair p{0.01, 0.3};
    CHECK(coefficient(pure(Objective::any), Coefficient::a1, p) == 0.0);
    CHECK(coefficient(pure(Objective::any), Coefficient::a2, p) == 0.0);
    CHECK(coefficient(pure(Objective::any), Coefficient::a3, p) == Approx(lr(0.01, -2) * lr(0.3, -2)));
    CHECK(coefficient(pure(Objective::pi1), Coefficient::a3, p) == 0.0);
    CHECK(coefficient(pure(Objective::pi1), Coefficient::a1, p) == Approx(0.5 * lr(0.01, -2)));
    CHECK(coefficient(pure(Objective::pi1), Coefficient::a2, p) == Approx(0.5 * lr(0.3, -2)));
    const double a1 = coefficient(pure(Objective::avg), Coefficient::a1, {0.5, 0.5});
    CHECK(a1 == Approx(std::exp(-4.0) / 2.0).epsilon(1e-12));
    CHECK(a1 == Approx(0.009158).margin(1e-6));
}

TEST_CASE("coefficients reject p outside the open square") {
    CHECK_THROWS_AS(coefficient(pure(Objective::any), Coefficient::a3, {0.0, 0.5}), DomainError);
    CHECK_THROWS_AS(score(pure(Objective::any), {0.5, 1.0}), DomainError);
}

TEST_CASE("score of the pure objectives at reference points") {
    // Pi_any: joint likelihood ratio wherever at least one p-value is below alpha.
    CHECK(score(pure(Objective::any), {0.02, 0.5}) == Approx(lr(0.02, -2) * lr(0.5, -2)).epsilon(1e-12));
    const double pi1 = score(pure(Objective::pi1), {0.02, 0.5});
    CHECK(pi1 == Approx(0.5 * lr(0.02, -2.0)).epsilon(1e-12));
    CHECK(pi1 == Approx(4.1138).margin(1e-3));
    for (auto o : {Objective::any, Objective::avg, Objective::pi1, Objective::combo}) {
        CHECK(score(pure(o), {0.5, 0.5}) == 0.0);
    }
}

TEST_CASE("score is zero off the L-shaped domain and nonnegative on it") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(1e-9, 1.0 - 1e-9);
    const ScoreFunction s(ObjectiveSpec{{0.2, 0.3, 0.5}, {-2.5, -1.5, 0.0}, kAlpha});
    for (int i = 0; i < 10'000; ++i) {
        const PValuePair p{u(rng), u(rng)};
        const double v = s(p);
        REQUIRE(v >= 0.0);
        if (std::min(p.p1, p.p2) > kAlpha) REQUIRE(v == 0.0);
    }
}

TEST_CASE("score is linear in the objective weights") {
    const AlternativeModel m{-2.7, -1.3, 0.0};
    const ObjectiveWeights w{0.25, 0.15, 0.6};
    const ScoreFunction mixed({w, m, kAlpha});
    const ScoreFunction any(ObjectiveSpec::pure(Objective::any, m, kAlpha));
    const ScoreFunction avg(ObjectiveSpec::pure(Objective::avg, m, kAlpha));
    const ScoreFunction one(ObjectiveSpec::pure(Objective::pi1, m, kAlpha));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(1e-6, 0.1);
    for (int i = 0; i < 10'000; ++i) {
        const PValuePair p{u(rng), u(rng)};
        const double expect = w.w_any * any(p) + w.w_avg * avg(p) + w.w_1 * one(p);
        REQUIRE(mixed(p) == Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("score is non-increasing within each rectangle of the domain") {
    std::mt19937_64 rng(5);
    const std::array<std::pair<double, double>, 2> ranges{{{1e-8, kAlpha}, {kAlpha + 1e-12, 1.0 - 1e-9}}};
    for (auto o : {Objective::any, Objective::avg, Objective::pi1, Objective::combo}) {
        const ScoreFunction s(pure(o, -3.0, -1.5));
        int checked = 0;
        for (int rect = 0; rect < 3; ++rect) {
            const auto& r1 = ranges[rect == 2 ? 1 : 0];
            const auto& r2 = ranges[rect == 1 ? 1 : 0];
            std::uniform_real_distribution<double> u1(r1.first, r1.second), u2(r2.first, r2.second);
            for (int i = 0; i < 3'334; ++i) {
                double a1 = u1(rng), b1 = u1(rng), a2 = u2(rng), b2 = u2(rng);
                if (a1 > b1) std::swap(a1, b1);
                if (a2 > b2) std::swap(a2, b2);
                REQUIRE(s({a1, a2}) >= s({b1, b2}));
                ++checked;
            }
        }
        CHECK(checked >= 10'000);
    }
}

TEST_CASE("score is exchangeable for equal shifts") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(1e-7, 0.2);
    for (auto o : {Objective::any, Objective::avg, Objective::pi1, Objective::combo}) {
        const ScoreFunction s(pure(o, -2.2, -2.2));
        for (int i = 0; i < 2'000; ++i) {
            const double a = u(rng), b = u(rng);
            REQUIRE(s({a, b}) == Approx(s({b, a})).epsilon(1e-12));
        }
    }
}

TEST_CASE("Pi_1 score on the square is the mean of the two likelihood ratios") {
    const double th = -2.4;
    const ScoreFunction s(pure(Objective::pi1, th, th));
    for (double a : {1e-5, 0.003, 0.02, 0.025}) {
        for (double b : {1e-4, 0.01, 0.024}) {
            CHECK(s({a, b}) == Approx(0.5 * (lr_density(a, th) + lr_density(b, th))).epsilon(1e-14));
        }
    }
}

TEST_CASE("objective specification validation") {
    const AlternativeModel m{-2.0, -2.0, 0.0};
    CHECK_THROWS_AS((ObjectiveSpec{{0.5, 0.5, 0.1}, m, kAlpha}.validate()), DomainError);
    CHECK_THROWS_AS((ObjectiveSpec{{-0.1, 0.6, 0.5}, m, kAlpha}.validate()), DomainError);
    CHECK_THROWS_AS((ObjectiveSpec{{1, 0, 0}, m, 0.0}.validate()), DomainError);
    CHECK_THROWS_AS((ObjectiveSpec{{1, 0, 0}, m, 0.6}.validate()), DomainError);
    CHECK_THROWS_AS((ObjectiveSpec{{1, 0, 0}, {0.0, -2.0, 0.0}, kAlpha}.validate()), DomainError);
    CHECK_NOTHROW((ObjectiveSpec{{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, m, 0.5}.validate()));
    CHECK_THROWS_AS(ScoreFunction(ObjectiveSpec{{1, 0, 0}, {-2.0, -2.0, 0.3}, kAlpha}), UnsupportedModel);
}

TEST_CASE("objective names round trip") {
    for (auto o : {Objective::any, Objective::avg, Objective::pi1, Objective::combo}) {
        CHECK(parse_objective(to_string(o)) == o);
    }
    CHECK(parse_objective("pi_1") == Objective::pi1);
    CHECK_THROWS_AS(parse_objective("best"), DomainError);
    const auto c = ObjectiveWeights::of(Objective::combo);
    CHECK(c.w_any == Approx(1.0 / 3.0));
    CHECK(c.w_1 == Approx(2.0 / 3.0));
}
