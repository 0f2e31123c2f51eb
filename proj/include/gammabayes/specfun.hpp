#pragma once

// Real-argument special functions used by the estimators: log-gamma,
// digamma, trigamma, inverse digamma and the regularized incomplete beta.
//
// Domain is x > 0 throughout; there is no reflection formula for negative
// arguments. All functions are pure.

#include <cmath>
#include <concepts>
#include <limits>
#include <numbers>
#include <string>

#include "gammabayes/errors.hpp"

namespace gammabayes::specfun {

/// Tolerances for the inverse-digamma Newton iteration.
struct SpecFunConfig {
    double newton_tol = 1e-12;
    int newton_max_iter = 100;

    void validate() const {
        if (!(newton_tol > 0.0) || !std::isfinite(newton_tol))
            throw DomainError("SpecFunConfig: newton_tol must be positive");
        if (newton_max_iter < 1)
            throw DomainError("SpecFunConfig: newton_max_iter must be >= 1");
    }
};

namespace detail {

template <std::floating_point Real>
inline void require_positive(Real x, const char* fn) {
    if (!std::isfinite(x) || !(x > 0))
        throw DomainError(std::string(fn) + ": argument must be positive and finite, got " +
                          std::to_string(static_cast<double>(x)));
}

inline constexpr double kEulerGamma = std::numbers::egamma;

// Shift points for the asymptotic expansions.
inline constexpr double kLogGammaShift = 10.0;
inline constexpr double kPolygammaShift = 10.0;

}  // namespace detail

/// ln Gamma(x) for x > 0.
///
/// Stirling series with terms through z^-13 once z >= 10; below that the
/// argument is lifted with Gamma(z+1) = z Gamma(z) and the accumulated
/// product is removed with a single logarithm.
template <std::floating_point Real>
Real log_gamma(Real x) {
    detail::require_positive(x, "log_gamma");
    Real z = x;
    Real product = 1;
    while (z < Real(detail::kLogGammaShift)) {
        product *= z;
        z += 1;
    }
    const Real inv = 1 / z;
    const Real inv2 = inv * inv;
    // B_{2k} / (2k (2k-1)) for k = 1..7
    const Real series =
        inv * (Real(1) / 12 +
               inv2 * (Real(-1) / 360 +
                       inv2 * (Real(1) / 1260 +
                               inv2 * (Real(-1) / 1680 +
                                       inv2 * (Real(1) / 1188 +
                                               inv2 * (Real(-691) / 360360 +
                                                       inv2 * (Real(1) / 156)))))));
    const Real half_log_two_pi = Real(0.91893853320467274178032973640562);
    return (z - Real(0.5)) * std::log(z) - z + half_log_two_pi + series - std::log(product);
}

/// Psi(x) = d/dx ln Gamma(x) for x > 0.
template <std::floating_point Real>
Real digamma(Real x) {
    detail::require_positive(x, "digamma");
    Real z = x;
    Real shift = 0;
    while (z < Real(detail::kPolygammaShift)) {
        shift -= 1 / z;
        z += 1;
    }
    const Real inv2 = 1 / (z * z);
    // B_{2k} / (2k) for k = 1..7
    const Real tail =
        inv2 * (Real(1) / 12 -
                inv2 * (Real(1) / 120 -
                        inv2 * (Real(1) / 252 -
                                inv2 * (Real(1) / 240 -
                                        inv2 * (Real(1) / 132 -
                                                inv2 * (Real(691) / 32760 -
                                                        inv2 * (Real(1) / 12)))))));
    return shift + std::log(z) - Real(0.5) / z - tail;
}

/// Psi_1(x) = d/dx Psi(x) for x > 0. Always strictly positive.
template <std::floating_point Real>
Real trigamma(Real x) {
    detail::require_positive(x, "trigamma");
    Real z = x;
    Real shift = 0;
    while (z < Real(detail::kPolygammaShift)) {
        shift += 1 / (z * z);
        z += 1;
    }
    const Real inv = 1 / z;
    const Real inv2 = inv * inv;
    // B_{2k} for k = 1..7
    const Real tail =
        inv * inv2 *
        (Real(1) / 6 -
         inv2 * (Real(1) / 30 -
                 inv2 * (Real(1) / 42 -
                         inv2 * (Real(1) / 30 -
                                 inv2 * (Real(5) / 66 -
                                         inv2 * (Real(691) / 2730 - inv2 * (Real(7) / 6)))))));
    return shift + inv + Real(0.5) * inv2 + tail;
}

/// Solves Psi(x) = y for x > 0 by Newton iteration.
///
/// Starts from exp(y) + 1/2 when y >= -2.22 and from -1/(y + gamma) otherwise.
/// Psi is increasing and concave, so after the first step the iterates
/// approach the root from the left. A proposal that would leave the
/// positive axis is replaced by half the current iterate.
///
/// Throws ConvergenceError (carrying the last iterate) when
/// |Psi(x) - y| / max(1, |y|) <= newton_tol is not reached in
/// newton_max_iter steps.
template <std::floating_point Real>
Real inverse_digamma(Real y, const SpecFunConfig& cfg = {}) {
    cfg.validate();
    if (!std::isfinite(y)) throw DomainError("inverse_digamma: argument must be finite");

    Real x = y >= Real(-2.22) ? std::exp(y) + Real(0.5)
                              : Real(-1) / (y + Real(detail::kEulerGamma));
    const Real scale = std::max(Real(1), std::abs(y));
    const Real tol = Real(cfg.newton_tol);

    for (int it = 0; it < cfg.newton_max_iter; ++it) {
        const Real residual = digamma(x) - y;
        if (std::abs(residual) / scale <= tol) return x;
        Real next = x - residual / trigamma(x);
        if (!(next > 0)) next = x / 2;
        if (next == x) break;
        x = next;
    }
    if (std::abs(digamma(x) - y) / scale <= tol) return x;
    throw ConvergenceError("inverse_digamma: Newton iteration did not converge",
                           static_cast<double>(x));
}

namespace detail {

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
template <std::floating_point Real>
Real incomplete_beta_cf(Real a, Real b, Real x) {
    constexpr int kMaxIter = 500;
    constexpr Real kTiny = std::numeric_limits<Real>::min() / std::numeric_limits<Real>::epsilon();
    constexpr Real kEps = std::numeric_limits<Real>::epsilon();

    const Real qab = a + b;
    const Real qap = a + 1;
    const Real qam = a - 1;
    Real c = 1;
    Real d = 1 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1 / d;
    Real h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const Real m2 = 2 * Real(m);
        Real aa = Real(m) * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1 / d;
        const Real del = d * c;
        h *= del;
        if (std::abs(del - 1) <= kEps) return h;
    }
    throw ConvergenceError("regularized_incomplete_beta: continued fraction did not converge",
                           static_cast<double>(h));
}

}  // namespace detail

/// I_x(a, b), the regularized incomplete beta function.
template <std::floating_point Real>
Real regularized_incomplete_beta(Real a, Real b, Real x) {
    detail::require_positive(a, "regularized_incomplete_beta(a)");
    detail::require_positive(b, "regularized_incomplete_beta(b)");
    if (!(x >= 0 && x <= 1))
        throw DomainError("regularized_incomplete_beta: x must lie in [0, 1]");
    if (x == 0) return 0;
    if (x == 1) return 1;

    const Real log_front = log_gamma(a + b) - log_gamma(a) - log_gamma(b) + a * std::log(x) +
                           b * std::log1p(-x);
    const Real front = std::exp(log_front);
    if (x < (a + 1) / (a + b + 2)) return front * detail::incomplete_beta_cf(a, b, x) / a;
    return 1 - front * detail::incomplete_beta_cf(b, a, 1 - x) / b;
}

}  // namespace gammabayes::specfun
