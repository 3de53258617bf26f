#pragma once

// Normal-distribution kernels shared by scores, quadrature and sampling.

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/special_functions/erf.hpp>

#include "omt/errors.hpp"

namespace omt {

/// A realization of the two p-values.
struct PValuePair {
    double p1 = 0.5;
    double p2 = 0.5;
};

/// A realization of the two z-scores, z_i = Phi^{-1}(p_i).
struct ZScorePair {
    double z1 = 0.0;
    double z2 = 0.0;
};

/// Shifted bivariate normal model for the z-scores:
///   z1 = theta1 + Z1,  z2 = theta2 + rho Z1 + sqrt(1 - rho^2) Z2.
/// Negative shifts are alternatives; zero is the boundary null.
struct AlternativeModel {
    double theta1 = 0.0;
    double theta2 = 0.0;
    double rho = 0.0;

    static AlternativeModel null() { return {}; }

    void validate() const {
        if (!std::isfinite(theta1) || !std::isfinite(theta2)) {
            throw DomainError("alternative shifts must be finite");
        }
        if (!(rho > -1.0 && rho < 1.0)) {
            throw DomainError("correlation must lie in (-1, 1)");
        }
    }
};

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

/// Standard normal density.
inline double std_normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

/// Standard normal CDF. Accurate to a few ulps in relative terms over the
/// whole line, so lower tails keep full precision.
inline double std_normal_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

/// Standard normal quantile for u in (0, 1).
inline double std_normal_quantile(double u) {
    if (!(u > 0.0 && u < 1.0)) {
        throw DomainError("std_normal_quantile: u must lie in (0, 1), got " + std::to_string(u));
    }
    if (u == 0.5) {
        return 0.0;
    }
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
}

/// Maps a p-value to its z-score after clamping to [1e-300, 1]; p = 1 maps
/// to +inf. NaN and values outside [0, 1] are rejected.
inline double pvalue_to_z(double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw DomainError("p-value outside [0, 1]");
    }
    if (p >= 1.0) {
        return std::numeric_limits<double>::infinity();
    }
    return std_normal_quantile(p < 1e-300 ? 1e-300 : p);
}

inline ZScorePair to_z(PValuePair p) { return {pvalue_to_z(p.p1), pvalue_to_z(p.p2)}; }

/// Likelihood ratio of a shifted normal against the null at z-score z:
/// exp(theta z - theta^2 / 2).
inline double lr_z(double z, double theta) { return std::exp(theta * z - 0.5 * theta * theta); }

/// Density of p = Phi(theta + Z) at p, i.e. its likelihood ratio against the
/// uniform null.
inline double lr_density(double p, double theta) {
    if (!(p > 0.0 && p < 1.0)) {
        throw DomainError("lr_density: p must lie in (0, 1)");
    }
    return lr_z(std_normal_quantile(p), theta);
}

/// Standard bivariate normal density with correlation rho.
inline double bivariate_null_density(double z1, double z2, double rho) {
    if (!(rho > -1.0 && rho < 1.0)) {
        throw DomainError("bivariate_null_density: |rho| must be < 1");
    }
    const double one_m = 1.0 - rho * rho;
    const double q = (z1 * z1 - 2.0 * rho * z1 * z2 + z2 * z2) / one_m;
    return std::exp(-0.5 * q) / (2.0 * std::numbers::pi * std::sqrt(one_m));
}

}  // namespace omt
