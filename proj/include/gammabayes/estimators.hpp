#pragma once

// Gamma parameter estimators: method of moments (MM), two maximum
// likelihood fixed-point iterations (ML1 linear bound, ML2 non-linear
// approximation) and two Bayesian estimators (BL1 unnormalized conjugate
// shape prior, BL2 prior conjugate to the approximated likelihood). Both
// Bayesian estimators use a Gamma prior on the rate and report the Laplace
// mode of the shape posterior.
//
// Every iterative estimator starts from the MM shape and stops on the
// relative change of alpha. The scale is computed once, after alpha has
// converged.

#include <array>
#include <cctype>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gammabayes/errors.hpp"
#include "gammabayes/gamma_model.hpp"
#include "gammabayes/specfun.hpp"

namespace gammabayes {

enum class Method { MM, ML1, ML2, BL1, BL2 };

inline constexpr std::array<Method, 5> kAllMethods = {Method::MM, Method::ML1, Method::ML2,
                                                      Method::BL1, Method::BL2};

inline constexpr std::string_view to_string(Method m) noexcept {
    switch (m) {
        case Method::MM: return "MM";
        case Method::ML1: return "ML1";
        case Method::ML2: return "ML2";
        case Method::BL1: return "BL1";
        case Method::BL2: return "BL2";
    }
    return "?";
}

/// Case-insensitive parse of "mm", "ml1", ... Throws DomainError.
inline Method parse_method(std::string_view name) {
    std::string upper(name);
    for (auto& ch : upper) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    for (Method m : kAllMethods)
        if (upper == to_string(m)) return m;
    throw DomainError("unknown method '" + std::string(name) + "'");
}

/// Gamma(d, e) prior on the rate R = 1/beta (shape d, rate e).
struct RatePrior {
    double d = 1e-3;
    double e = 1e-3;

    void validate() const {
        if (!(d > 0.0) || !std::isfinite(d) || !(e > 0.0) || !std::isfinite(e))
            throw DomainError("RatePrior: d and e must be positive and finite");
    }
};

/// p(alpha) ~ a^(alpha-1) R^(alpha c) / Gamma(alpha)^b, with a kept as log a.
struct ShapePriorBL1 {
    double log_a = 0.0;
    double b = 1e-3;
    double c = 1e-3;

    void validate() const {
        if (!std::isfinite(log_a)) throw DomainError("ShapePriorBL1: log_a must be finite");
        if (!(b > 0.0) || !std::isfinite(b) || !(c > 0.0) || !std::isfinite(c))
            throw DomainError("ShapePriorBL1: b and c must be positive and finite");
    }
};

/// log p(alpha) ~ w0 + w1 alpha + w2 log alpha.
struct ShapePriorBL2 {
    double w0 = 1.0;
    double w1 = 0.0;
    double w2 = 0.0;

    void validate() const {
        if (!std::isfinite(w0) || !std::isfinite(w1) || !std::isfinite(w2))
            throw DomainError("ShapePriorBL2: weights must be finite");
    }
};

struct ConvergenceConfig {
    double rel_tol = 1e-6;
    int max_iter = 1000;
    /// Keep every alpha iterate (starting value first) in FitResult::alpha_trace.
    bool record_trace = false;
    /// Starting shape for the iterative fits; the MM estimate when unset.
    std::optional<double> initial_shape{};
    specfun::SpecFunConfig specfun{};

    void validate() const {
        if (!(rel_tol > 0.0) || !std::isfinite(rel_tol))
            throw DomainError("ConvergenceConfig: rel_tol must be positive");
        if (max_iter < 1) throw DomainError("ConvergenceConfig: max_iter must be >= 1");
        if (initial_shape && (!(*initial_shape > 0.0) || !std::isfinite(*initial_shape)))
            throw DomainError("ConvergenceConfig: initial_shape must be positive and finite");
        specfun.validate();
    }
};

/// Posterior Gamma(d_hat, e_hat) over the rate.
struct RatePosterior {
    double d_hat;
    double e_hat;

    double expected_rate() const noexcept { return d_hat / e_hat; }
    double scale_estimate() const noexcept { return e_hat / d_hat; }
};

struct BL1Posterior {
    double d_hat;
    double e_hat;
    double log_a_hat;
    double b_hat;
    double c_hat;
};

/// w0 is carried for completeness; the shape mode depends on w1, w2 only.
struct BL2Posterior {
    double d_hat;
    double e_hat;
    double w0;
    double w1;
    double w2;
};

using Posterior = std::variant<BL1Posterior, BL2Posterior>;

struct FitResult {
    GammaParams params;
    Method method;
    int iterations = 0;
    bool converged = false;
    /// |alpha_t - alpha_{t-1}| / alpha_{t-1} at the last update.
    double last_relative_step = 0.0;
    /// Updates that had to be shortened to stay positive and finite.
    int safeguard_activations = 0;
    std::optional<Posterior> posterior{};
    std::optional<double> laplace_precision{};
    std::vector<double> alpha_trace{};
};

/// Conjugate rate update: d_hat = d + n alpha, e_hat = e + sum(x).
inline RatePosterior rate_posterior(const RatePrior& prior, const Sample& s, double alpha) {
    prior.validate();
    specfun::detail::require_positive(alpha, "rate_posterior");
    return {prior.d + static_cast<double>(s.size()) * alpha, prior.e + s.sum()};
}

/// Unnormalized BL1 log prior (alpha-1) log a + alpha c log R - b lnGamma(alpha).
inline double bl1_log_prior(double alpha, const ShapePriorBL1& prior, double rate) {
    specfun::detail::require_positive(alpha, "bl1_log_prior(alpha)");
    specfun::detail::require_positive(rate, "bl1_log_prior(rate)");
    return (alpha - 1.0) * prior.log_a + alpha * prior.c * std::log(rate) -
           prior.b * specfun::log_gamma(alpha);
}

namespace detail {

inline void require_moments(const Sample& s) {
    if (s.size() < 2)
        throw InsufficientDataError("at least two observations are required, got " +
                                    std::to_string(s.size()));
    if (!(s.variance() > 0.0))
        throw DegenerateSampleError("sample variance is zero; all observations are equal");
}

inline void require_iterable(const Sample& s) {
    require_moments(s);
    if (!(s.mean_log() < std::log(s.mean())))
        throw DegenerateSampleError("mean of logs is not below log of mean");
}

inline double mm_shape(const Sample& s) { return s.mean() * s.mean() / s.variance(); }

inline double start_shape(const Sample& s, const ConvergenceConfig& cfg) {
    return cfg.initial_shape ? *cfg.initial_shape : mm_shape(s);
}

struct IterationOutcome {
    double alpha;
    int iterations = 0;
    bool converged = false;
    double last_step = 0.0;
    int safeguards = 0;
    std::vector<double> trace{};
};

inline constexpr int kMaxStepHalvings = 50;

// Runs alpha <- update(alpha) until the relative change drops below
// rel_tol. Proposals that are non-positive or non-finite are pulled back
// toward the current iterate by repeated halving of the step.
template <class Update>
IterationOutcome iterate_shape(double alpha0, const ConvergenceConfig& cfg, Update&& update) {
    IterationOutcome out{.alpha = alpha0};
    if (cfg.record_trace) out.trace.push_back(alpha0);
    double alpha = alpha0;
    for (int it = 1; it <= cfg.max_iter; ++it) {
        double proposal = update(alpha);
        if (!(proposal > 0.0) || !std::isfinite(proposal)) {
            double step = std::isfinite(proposal) ? proposal - alpha
                                                  : (proposal > 0.0 ? alpha : -alpha);
            int halvings = 0;
            do {
                step *= 0.5;
                proposal = alpha + step;
            } while ((!(proposal > 0.0) || !std::isfinite(proposal)) &&
                     ++halvings < kMaxStepHalvings);
            if (!(proposal > 0.0) || !std::isfinite(proposal))
                throw NumericalAnomalyError("shape update stayed invalid after step halving");
            ++out.safeguards;
        }
        out.last_step = std::abs(proposal - alpha) / alpha;
        alpha = proposal;
        out.iterations = it;
        if (cfg.record_trace) out.trace.push_back(alpha);
        if (out.last_step < cfg.rel_tol) {
            out.converged = true;
            break;
        }
    }
    out.alpha = alpha;
    return out;
}

inline FitResult make_result(Method m, GammaParams params, IterationOutcome&& it) {
    FitResult r{.params = params, .method = m};
    r.iterations = it.iterations;
    r.converged = it.converged;
    r.last_relative_step = it.last_step;
    r.safeguard_activations = it.safeguards;
    r.alpha_trace = std::move(it.trace);
    return r;
}

}  // namespace detail

/// Method of moments: alpha = mean^2 / var, beta = var / mean.
inline FitResult fit_mm(const Sample& s) {
    detail::require_moments(s);
    FitResult r{.params = GammaParams(detail::mm_shape(s), s.variance() / s.mean()),
                .method = Method::MM};
    r.converged = true;
    return r;
}

/// ML1 map: alpha -> Psi^-1(log alpha + mean(log x) - log mean(x)).
inline double ml1_update(const Sample& s, double alpha, const specfun::SpecFunConfig& sf = {}) {
    return specfun::inverse_digamma(std::log(alpha) + s.mean_log() - std::log(s.mean()), sf);
}

/// ML2 map: Newton-like step on 1/alpha from the local approximation
/// k0 + k1 alpha + k2 log alpha of the profile likelihood.
inline double ml2_update(const Sample& s, double alpha) {
    const double denom = alpha * alpha * (1.0 / alpha - specfun::trigamma(alpha));
    if (!(denom < 0.0))
        throw NumericalAnomalyError("ML2 denominator alpha^2 (1/alpha - trigamma) is not negative");
    const double gradient = s.mean_log() - std::log(s.mean()) + std::log(alpha) -
                            specfun::digamma(alpha);
    return 1.0 / (1.0 / alpha + gradient / denom);
}

inline FitResult fit_ml1(const Sample& s, const ConvergenceConfig& cfg = {}) {
    cfg.validate();
    detail::require_iterable(s);
    auto it = detail::iterate_shape(detail::start_shape(s, cfg), cfg,
                                    [&](double a) { return ml1_update(s, a, cfg.specfun); });
    const double alpha = it.alpha;
    return detail::make_result(Method::ML1, GammaParams(alpha, s.mean() / alpha), std::move(it));
}

inline FitResult fit_ml2(const Sample& s, const ConvergenceConfig& cfg = {}) {
    cfg.validate();
    detail::require_iterable(s);
    auto it = detail::iterate_shape(detail::start_shape(s, cfg), cfg,
                                    [&](double a) { return ml2_update(s, a); });
    const double alpha = it.alpha;
    return detail::make_result(Method::ML2, GammaParams(alpha, s.mean() / alpha), std::move(it));
}

/// Posterior BL1 shape hyperparameters: log a + sum(log x), b + n, c + n.
inline ShapePriorBL1 bl1_shape_posterior(const ShapePriorBL1& prior, const Sample& s) {
    const double n = static_cast<double>(s.size());
    return {prior.log_a + s.sum_log(), prior.b + n, prior.c + n};
}

/// BL1 map: alpha -> Psi^-1((log a_hat + c_hat (log(d + n alpha) - log e_hat)) / b_hat).
inline double bl1_update(const ShapePriorBL1& posterior, const RatePrior& rate_prior,
                         const Sample& s, double alpha, const specfun::SpecFunConfig& sf = {}) {
    const double n = static_cast<double>(s.size());
    const double e_hat = rate_prior.e + s.sum();
    const double arg =
        (posterior.log_a +
         posterior.c * (std::log(rate_prior.d + n * alpha) - std::log(e_hat))) /
        posterior.b;
    return specfun::inverse_digamma(arg, sf);
}

inline FitResult fit_bl1(const Sample& s, const ShapePriorBL1& shape_prior = {},
                         const RatePrior& rate_prior = {}, const ConvergenceConfig& cfg = {}) {
    cfg.validate();
    shape_prior.validate();
    rate_prior.validate();
    detail::require_iterable(s);

    const ShapePriorBL1 post = bl1_shape_posterior(shape_prior, s);
    auto it = detail::iterate_shape(detail::start_shape(s, cfg), cfg, [&](double a) {
        return bl1_update(post, rate_prior, s, a, cfg.specfun);
    });
    const double alpha = it.alpha;
    const RatePosterior rate = rate_posterior(rate_prior, s, alpha);

    FitResult r = detail::make_result(Method::BL1, GammaParams(alpha, rate.scale_estimate()),
                                      std::move(it));
    r.posterior = BL1Posterior{rate.d_hat, rate.e_hat, post.log_a, post.b, post.c};
    r.laplace_precision = post.b * specfun::trigamma(alpha);
    return r;
}

/// Coefficients of f(alpha) = k0 + k1 alpha + k2 log alpha matching the
/// profile log-likelihood and its first two derivatives at `alpha`.
struct LikelihoodApprox {
    double k0;
    double k1;
    double k2;
};

inline LikelihoodApprox bl2_coefficients(const Sample& s, double alpha) {
    const double n = static_cast<double>(s.size());
    const double tri = specfun::trigamma(alpha);
    const double k1 = n * (s.mean_log() - specfun::digamma(alpha) - std::log(s.mean()) +
                           std::log(alpha) - alpha * tri + 1.0);
    const double k2 = n * alpha * alpha * tri - n * alpha;
    const double k0 = profile_log_likelihood(s, alpha) - k1 * alpha - k2 * std::log(alpha);
    return {k0, k1, k2};
}

/// BL2 map: alpha -> -(w2 + k2) / (w1 + k1).
inline double bl2_update(const ShapePriorBL2& prior, const Sample& s, double alpha) {
    const LikelihoodApprox k = bl2_coefficients(s, alpha);
    const double w1 = prior.w1 + k.k1;
    const double w2 = prior.w2 + k.k2;
    if (!(w1 < 0.0))
        throw IllPosedPosteriorError("BL2 posterior coefficient w1 is non-negative at alpha = " +
                                     std::to_string(alpha));
    return -w2 / w1;
}

inline FitResult fit_bl2(const Sample& s, const ShapePriorBL2& shape_prior = {},
                         const RatePrior& rate_prior = {}, const ConvergenceConfig& cfg = {}) {
    cfg.validate();
    shape_prior.validate();
    rate_prior.validate();
    detail::require_iterable(s);

    auto it = detail::iterate_shape(detail::start_shape(s, cfg), cfg,
                                    [&](double a) { return bl2_update(shape_prior, s, a); });
    const double alpha = it.alpha;
    const RatePosterior rate = rate_posterior(rate_prior, s, alpha);
    const LikelihoodApprox k = bl2_coefficients(s, alpha);
    const double w2 = shape_prior.w2 + k.k2;

    FitResult r = detail::make_result(Method::BL2, GammaParams(alpha, rate.scale_estimate()),
                                      std::move(it));
    r.posterior =
        BL2Posterior{rate.d_hat, rate.e_hat, shape_prior.w0 + k.k0, shape_prior.w1 + k.k1, w2};
    r.laplace_precision = w2 / (alpha * alpha);
    return r;
}

struct Hyperparameters {
    RatePrior rate{};
    ShapePriorBL1 bl1{};
    ShapePriorBL2 bl2{};
};

inline FitResult fit(Method m, const Sample& s, const Hyperparameters& hyper = {},
                     const ConvergenceConfig& cfg = {}) {
    switch (m) {
        case Method::MM: return fit_mm(s);
        case Method::ML1: return fit_ml1(s, cfg);
        case Method::ML2: return fit_ml2(s, cfg);
        case Method::BL1: return fit_bl1(s, hyper.bl1, hyper.rate, cfg);
        case Method::BL2: return fit_bl2(s, hyper.bl2, hyper.rate, cfg);
    }
    throw DomainError("fit: unknown method");
}

}  // namespace gammabayes
