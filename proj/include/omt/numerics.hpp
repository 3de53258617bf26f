#pragma once

// Quadrature, root finding and seeded Monte Carlo.
//
// All integrals are taken in z-space (z_i = Phi^{-1}(p_i)). Decision regions
// are described by slices: with one coordinate fixed, the rejection set in
// the other is a finite union of intervals whose conditional normal mass is
// available in closed form. The outer integral uses Gauss-Legendre panels
// whose edges include every point where the slice structure changes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <thread>
#include <utility>
#include <vector>

#include "omt/errors.hpp"
#include "omt/gauss.hpp"

namespace omt {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct QuadratureConfig {
    int panels_per_axis = 32;
    int nodes_per_panel = 16;
    double abs_tol = 1e-8;
    /// Panel doublings allowed when certifying abs_tol.
    int max_refinements = 4;
    /// Integration window is mean +/- this many standard deviations.
    double window = 10.0;

    void validate() const {
        if (panels_per_axis < 8) throw DomainError("panels_per_axis must be >= 8");
        if (nodes_per_panel < 2 || nodes_per_panel > 64) throw DomainError("nodes_per_panel must be in [2, 64]");
        if (!(abs_tol > 0.0)) throw DomainError("abs_tol must be positive");
        if (max_refinements < 1) throw DomainError("max_refinements must be >= 1");
        if (!(window >= 6.0)) throw DomainError("window must be >= 6");
    }
};

struct McConfig {
    std::int64_t reps = 1'000'000;
    std::uint64_t seed = 20240101;

    void validate() const {
        if (reps < 10'000) throw DomainError("Monte Carlo reps must be >= 1e4");
    }
};

// ---------------------------------------------------------------------------
// Gauss-Legendre rule on [-1, 1]
// ---------------------------------------------------------------------------
class GaussLegendre {
public:
    explicit GaussLegendre(int n) : nodes_(n), weights_(n) {
        // Newton iteration on P_n from the Chebyshev initial guesses.
        for (int i = 0; i < (n + 1) / 2; ++i) {
            double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= n; ++k) {
                    const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = pk;
                }
                if (n == 1) p0 = 1.0;
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-16) break;
            }
            nodes_[i] = -x;
            nodes_[n - 1 - i] = x;
            weights_[i] = weights_[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
    }

    int size() const { return static_cast<int>(nodes_.size()); }
    std::span<const double> nodes() const { return nodes_; }
    std::span<const double> weights() const { return weights_; }

    template <class F>
    double integrate(F&& f, double lo, double hi) const {
        const double half = 0.5 * (hi - lo);
        const double mid = 0.5 * (hi + lo);
        double acc = 0.0;
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            acc += weights_[i] * f(mid + half * nodes_[i]);
        }
        return acc * half;
    }

private:
    std::vector<double> nodes_;
    std::vector<double> weights_;
};

/// Segment edges of [lo, hi] split at every break strictly inside it.
inline std::vector<double> segment_edges(double lo, double hi, std::span<const double> breaks) {
    std::vector<double> edges{lo, hi};
    for (double b : breaks) {
        if (std::isfinite(b) && b > lo && b < hi) edges.push_back(b);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end(),
                            [](double a, double b) { return std::abs(a - b) <= 1e-14 * (1.0 + std::abs(a)); }),
                edges.end());
    return edges;
}

/// Composite Gauss-Legendre over [lo, hi] with `panels` panels spread over the
/// break-delimited segments in proportion to their length.
template <class F>
double integrate_panels(F&& f, double lo, double hi, std::span<const double> breaks, int panels,
                        const GaussLegendre& rule) {
    const auto edges = segment_edges(lo, hi, breaks);
    const double total = hi - lo;
    double acc = 0.0;
    for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
        const double a = edges[s], b = edges[s + 1];
        const int n = std::max(1, static_cast<int>(std::lround(panels * (b - a) / total)));
        const double h = (b - a) / n;
        for (int k = 0; k < n; ++k) {
            const double pa = a + k * h;
            const double pb = (k + 1 == n) ? b : pa + h;
            acc += rule.integrate(f, pa, pb);
        }
    }
    return acc;
}

/// Runs `eval(panels)` with doubling panel counts until two successive
/// results agree within cfg.abs_tol; returns the finer one.
template <class Eval>
double certify_by_doubling(Eval&& eval, const QuadratureConfig& cfg) {
    int panels = cfg.panels_per_axis;
    double coarse = eval(panels);
    for (int r = 0; r < cfg.max_refinements; ++r) {
        panels *= 2;
        const double fine = eval(panels);
        if (std::abs(fine - coarse) <= cfg.abs_tol) return fine;
        coarse = fine;
    }
    throw ToleranceNotMet("quadrature could not certify abs_tol after panel refinement");
}

/// Certified 1-D integral of f over [lo, hi].
template <class F>
double integrate_1d(F&& f, double lo, double hi, std::span<const double> breaks, const QuadratureConfig& cfg) {
    const GaussLegendre rule(cfg.nodes_per_panel);
    return certify_by_doubling([&](int panels) { return integrate_panels(f, lo, hi, breaks, panels, rule); }, cfg);
}

/// Integral over the unit square of indicator(p) * f(p) * g(p), where g is the
/// density of p under `model` (uniform when model is empty). Evaluated as a
/// tensor Gauss-Legendre rule in z-space; z_breaks (e.g. Phi^{-1}(alpha))
/// become panel edges on both axes.
inline double integrate_region(const std::function<double(PValuePair)>& f,
                               const std::function<bool(PValuePair)>& indicator,
                               const std::optional<AlternativeModel>& model, const QuadratureConfig& cfg,
                               std::span<const double> z_breaks = {}) {
    cfg.validate();
    const AlternativeModel m = model.value_or(AlternativeModel::null());
    m.validate();
    const GaussLegendre rule(cfg.nodes_per_panel);
    const double lo1 = m.theta1 - cfg.window, hi1 = m.theta1 + cfg.window;
    const double lo2 = m.theta2 - cfg.window, hi2 = m.theta2 + cfg.window;
    auto eval = [&](int panels) {
        return integrate_panels(
            [&](double z1) {
                const double p1 = std_normal_cdf(z1);
                return integrate_panels(
                    [&](double z2) {
                        const PValuePair p{p1, std_normal_cdf(z2)};
                        if (!indicator(p)) return 0.0;
                        return f(p) * bivariate_null_density(z1 - m.theta1, z2 - m.theta2, m.rho);
                    },
                    lo2, hi2, z_breaks, panels, rule);
            },
            lo1, hi1, z_breaks, panels, rule);
    };
    return certify_by_doubling(eval, cfg);
}

// ---------------------------------------------------------------------------
// Root finding
// ---------------------------------------------------------------------------

/// Bisection for a monotone g on [lo, hi] whose end values bracket zero.
/// Returns t with |g(t)| <= tol.
template <class G>
double bisect(G&& g, double lo, double hi, double tol, int max_iter = 400) {
    double glo = g(lo);
    double ghi = g(hi);
    if (std::abs(glo) <= tol) return lo;
    if (std::abs(ghi) <= tol) return hi;
    if ((glo > 0) == (ghi > 0)) throw NoBracket("bisect: g(lo) and g(hi) have the same sign");
    for (int it = 0; it < max_iter; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if (std::abs(gm) <= tol) return mid;
        if (mid <= lo || mid >= hi) break;
        if ((gm > 0) == (glo > 0)) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    throw MaxIterations("bisect: tolerance not reached");
}

// ---------------------------------------------------------------------------
// Interval sets on the real line
// ---------------------------------------------------------------------------
struct Interval {
    double lo;
    double hi;
};

/// Finite union of disjoint, sorted, non-empty intervals (open/closed ends
/// are immaterial: only Lebesgue-absolutely-continuous masses are taken).
class IntervalSet {
public:
    IntervalSet() = default;
    IntervalSet(double lo, double hi) { add(lo, hi); }

    void add(double lo, double hi) {
        if (!(hi > lo)) return;
        parts_.push_back({lo, hi});
        normalize();
    }

    bool empty() const { return parts_.empty(); }
    std::span<const Interval> parts() const { return parts_; }

    bool contains(double x) const {
        return std::any_of(parts_.begin(), parts_.end(), [x](const Interval& i) { return i.lo < x && x < i.hi; });
    }

    /// P(X in set) for X ~ N(mean, sd^2).
    double normal_mass(double mean, double sd) const {
        double acc = 0.0;
        for (const auto& i : parts_) {
            const double a = (i.lo - mean) / sd, b = (i.hi - mean) / sd;
            // Use the tail that keeps relative precision.
            acc += (a > 0.0) ? std_normal_cdf(-a) - std_normal_cdf(-b) : std_normal_cdf(b) - std_normal_cdf(a);
        }
        return acc;
    }

    friend IntervalSet unite(const IntervalSet& a, const IntervalSet& b) {
        return combine(a, b, [](bool x, bool y) { return x || y; });
    }
    friend IntervalSet intersect(const IntervalSet& a, const IntervalSet& b) {
        return combine(a, b, [](bool x, bool y) { return x && y; });
    }
    friend IntervalSet symmetric_difference(const IntervalSet& a, const IntervalSet& b) {
        return combine(a, b, [](bool x, bool y) { return x != y; });
    }

private:
    void normalize() {
        std::sort(parts_.begin(), parts_.end(), [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
        std::vector<Interval> merged;
        for (const auto& i : parts_) {
            if (!merged.empty() && i.lo <= merged.back().hi) {
                merged.back().hi = std::max(merged.back().hi, i.hi);
            } else {
                merged.push_back(i);
            }
        }
        parts_ = std::move(merged);
    }

    template <class Op>
    static IntervalSet combine(const IntervalSet& a, const IntervalSet& b, Op op) {
        std::vector<double> cuts;
        for (const auto* s : {&a, &b}) {
            for (const auto& i : s->parts_) {
                cuts.push_back(i.lo);
                cuts.push_back(i.hi);
            }
        }
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        IntervalSet out;
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
            const double lo = cuts[k], hi = cuts[k + 1];
            double probe;
            if (std::isinf(lo) && std::isinf(hi)) probe = 0.0;
            else if (std::isinf(lo)) probe = hi - 1.0;
            else if (std::isinf(hi)) probe = lo + 1.0;
            else probe = 0.5 * (lo + hi);
            if (op(a.contains(probe), b.contains(probe))) out.parts_.push_back({lo, hi});
        }
        out.normalize();
        return out;
    }

    std::vector<Interval> parts_;
};

/// Which coordinate is the outer integration variable of a slice integral.
enum class Axis { z1, z2 };

/// Probability that the point lies in {inner in slice(outer)} with the outer
/// coordinate restricted to [lo, hi], under the model. The inner coordinate
/// is conditionally normal given the outer one.
template <class Slice>
double slice_integral(Slice&& slice, Axis outer, double lo, double hi, const AlternativeModel& model,
                      std::span<const double> breaks, int panels, const GaussLegendre& rule) {
    if (!(hi > lo)) return 0.0;
    const double sd = std::sqrt(1.0 - model.rho * model.rho);
    const double m_out = outer == Axis::z1 ? model.theta1 : model.theta2;
    const double m_in = outer == Axis::z1 ? model.theta2 : model.theta1;
    auto integrand = [&](double v) {
        const IntervalSet set = slice(v);
        if (set.empty()) return 0.0;
        return std_normal_pdf(v - m_out) * set.normal_mass(m_in + model.rho * (v - m_out), sd);
    };
    return integrate_panels(integrand, lo, hi, breaks, panels, rule);
}

// ---------------------------------------------------------------------------
// Monte Carlo
// ---------------------------------------------------------------------------

/// SplitMix64 step, used to expand a seed into generator state.
inline std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// xoshiro256** (Blackman & Vigna), state seeded from SplitMix64.
class Xoshiro256 {
public:
    explicit Xoshiro256(std::uint64_t seed) {
        for (auto& w : s_) w = splitmix64(seed);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform on the open interval (0, 1): ((x >> 11) + 0.5) * 2^-53.
    double uniform_open() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

    /// Standard normal by inversion.
    double normal() { return std_normal_quantile(uniform_open()); }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
};

struct McResult {
    double mean = 0.0;
    double std_error = 0.0;
};

namespace detail {
inline constexpr std::int64_t kMcBatch = 1 << 16;

inline std::uint64_t batch_seed(std::uint64_t seed, std::int64_t batch) {
    std::uint64_t x = seed ^ (0xd1b54a32d192ed03ULL * static_cast<std::uint64_t>(batch + 1));
    return splitmix64(x);
}
}  // namespace detail

/// Monte Carlo means of several events evaluated on the same draws
/// z1 = theta1 + Z1, z2 = theta2 + rho Z1 + sqrt(1 - rho^2) Z2.
/// Draws are split into fixed batches, each with its own generator, and
/// reduced in batch order; output does not depend on the thread count.
inline std::vector<McResult> mc_estimate_many(std::span<const std::function<double(ZScorePair)>> events,
                                              const AlternativeModel& model, const McConfig& cfg,
                                              unsigned threads = 0) {
    cfg.validate();
    model.validate();
    const std::size_t ne = events.size();
    const std::int64_t nbatch = (cfg.reps + detail::kMcBatch - 1) / detail::kMcBatch;
    // Per batch, per event: sum and sum of squares.
    std::vector<double> sums(static_cast<std::size_t>(nbatch) * ne * 2, 0.0);
    const double sr = std::sqrt(1.0 - model.rho * model.rho);

    auto run_batch = [&](std::int64_t b) {
        Xoshiro256 rng(detail::batch_seed(cfg.seed, b));
        const std::int64_t begin = b * detail::kMcBatch;
        const std::int64_t end = std::min(cfg.reps, begin + detail::kMcBatch);
        double* out = &sums[static_cast<std::size_t>(b) * ne * 2];
        for (std::int64_t i = begin; i < end; ++i) {
            const double u1 = rng.normal();
            const double u2 = rng.normal();
            const ZScorePair z{model.theta1 + u1, model.theta2 + model.rho * u1 + sr * u2};
            for (std::size_t e = 0; e < ne; ++e) {
                const double v = events[e](z);
                out[2 * e] += v;
                out[2 * e + 1] += v * v;
            }
        }
    };

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::int64_t>(threads, nbatch));
    if (threads <= 1) {
        for (std::int64_t b = 0; b < nbatch; ++b) run_batch(b);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&, t] {
                for (std::int64_t b = t; b < nbatch; b += threads) run_batch(b);
            });
        }
    }

    std::vector<McResult> res(ne);
    const double n = static_cast<double>(cfg.reps);
    for (std::size_t e = 0; e < ne; ++e) {
        double s = 0.0, s2 = 0.0;
        for (std::int64_t b = 0; b < nbatch; ++b) {
            s += sums[(static_cast<std::size_t>(b) * ne + e) * 2];
            s2 += sums[(static_cast<std::size_t>(b) * ne + e) * 2 + 1];
        }
        const double mean = s / n;
        const double var = std::max(0.0, (s2 - n * mean * mean) / (n - 1.0));
        res[e] = {mean, std::sqrt(var / n)};
    }
    return res;
}

inline McResult mc_estimate(const std::function<double(ZScorePair)>& event, const AlternativeModel& model,
                            const McConfig& cfg, unsigned threads = 0) {
    return mc_estimate_many(std::span(&event, 1), model, cfg, threads).front();
}

}  // namespace omt
