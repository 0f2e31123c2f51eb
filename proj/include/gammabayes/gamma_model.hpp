#pragma once

// The two-parameter Gamma law in shape/scale form,
//
//   p(x | alpha, beta) = x^(alpha-1) exp(-x/beta) / (Gamma(alpha) beta^alpha),
//
// together with the validated observation vector the estimators consume.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gammabayes/errors.hpp"
#include "gammabayes/random.hpp"
#include "gammabayes/specfun.hpp"

namespace gammabayes {

/// Shape alpha and scale beta. Rate is derived, never stored.
class GammaParams {
public:
    GammaParams(double shape, double scale) : shape_(shape), scale_(scale) {
        if (!std::isfinite(shape) || !(shape > 0.0))
            throw DomainError("GammaParams: shape must be positive and finite, got " +
                              std::to_string(shape));
        if (!std::isfinite(scale) || !(scale > 0.0))
            throw DomainError("GammaParams: scale must be positive and finite, got " +
                              std::to_string(scale));
    }

    double shape() const noexcept { return shape_; }
    double scale() const noexcept { return scale_; }
    double rate() const noexcept { return 1.0 / scale_; }

    friend bool operator==(const GammaParams&, const GammaParams&) = default;

private:
    double shape_;
    double scale_;
};

/// Positive observations with their sufficient statistics cached at
/// construction. Values keep their input order.
class Sample {
public:
    explicit Sample(std::vector<double> values) : values_(std::move(values)) {
        if (values_.empty()) throw InsufficientDataError("Sample: at least one value required");
        for (std::size_t i = 0; i < values_.size(); ++i) {
            const double v = values_[i];
            if (!std::isfinite(v) || !(v > 0.0))
                throw DomainError("Sample: value at index " + std::to_string(i) +
                                  " must be positive and finite, got " + std::to_string(v));
        }
        for (double v : values_) {
            sum_ += v;
            sum_log_ += std::log(v);
        }
        const double n = static_cast<double>(values_.size());
        mean_ = sum_ / n;
        if (values_.size() > 1) {
            double ss = 0.0;
            for (double v : values_) ss += (v - mean_) * (v - mean_);
            variance_ = ss / (n - 1.0);
        }
    }

    std::span<const double> values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }
    double sum() const noexcept { return sum_; }
    double sum_log() const noexcept { return sum_log_; }
    double mean() const noexcept { return mean_; }
    double mean_log() const noexcept { return sum_log_ / static_cast<double>(values_.size()); }
    /// Unbiased (n-1) variance; zero for a single observation.
    double variance() const noexcept { return variance_; }

private:
    std::vector<double> values_;
    double sum_ = 0.0;
    double sum_log_ = 0.0;
    double mean_ = 0.0;
    double variance_ = 0.0;
};

inline double log_pdf(double x, const GammaParams& p) {
    if (!std::isfinite(x) || !(x > 0.0))
        throw DomainError("log_pdf: x must be positive and finite, got " + std::to_string(x));
    const double a = p.shape();
    const double b = p.scale();
    return (a - 1.0) * std::log(x) - specfun::log_gamma(a) - a * std::log(b) - x / b;
}

/// Log-likelihood from sufficient statistics.
inline double log_likelihood(const Sample& s, const GammaParams& p) {
    const double n = static_cast<double>(s.size());
    const double a = p.shape();
    const double b = p.scale();
    return n * (a - 1.0) * s.mean_log() - n * specfun::log_gamma(a) - n * a * std::log(b) -
           n * s.mean() / b;
}

/// Log-likelihood with the scale profiled out at its maximizer mean/alpha.
inline double profile_log_likelihood(const Sample& s, double alpha) {
    specfun::detail::require_positive(alpha, "profile_log_likelihood");
    const double n = static_cast<double>(s.size());
    return n * (alpha - 1.0) * s.mean_log() - n * specfun::log_gamma(alpha) -
           n * alpha * std::log(s.mean()) + n * alpha * std::log(alpha) - n * alpha;
}

/// (mean, variance) = (alpha beta, alpha beta^2).
inline std::pair<double, double> moments(const GammaParams& p) {
    return {p.shape() * p.scale(), p.shape() * p.scale() * p.scale()};
}

/// KL(p || q) in closed form.
inline double kl_divergence(const GammaParams& p, const GammaParams& q) {
    const double ap = p.shape(), bp = p.scale();
    const double aq = q.shape(), bq = q.scale();
    const double kl = (ap - aq) * specfun::digamma(ap) - specfun::log_gamma(ap) +
                      specfun::log_gamma(aq) + aq * (std::log(bq) - std::log(bp)) +
                      ap * (bp - bq) / bq;
    // Rounding can leave a tiny negative value when p and q nearly coincide.
    return kl > 0.0 ? kl : 0.0;
}

/// One Gamma variate by Marsaglia-Tsang. Shapes below one draw at
/// shape + 1 and multiply by U^(1/shape). A draw that underflows to zero
/// is rejected.
inline double draw_gamma(Rng& rng, const GammaParams& p) {
    const double shape = p.shape();
    const bool boost = shape < 1.0;
    const double d = (boost ? shape + 1.0 : shape) - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = rng.normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform();
        const double x2 = x * x;
        if (u >= 1.0 - 0.0331 * x2 * x2 &&
            std::log(u) >= 0.5 * x2 + d * (1.0 - v + std::log(v)))
            continue;
        double g = d * v;
        if (boost) g *= std::exp(std::log(rng.uniform()) / shape);
        const double value = g * p.scale();
        if (value > 0.0 && std::isfinite(value)) return value;
    }
}

/// n draws from G(p) using a private generator seeded with `seed`.
inline Sample sample(const GammaParams& p, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw InsufficientDataError("sample: n must be >= 1");
    Rng rng(seed);
    std::vector<double> values(n);
    for (auto& v : values) v = draw_gamma(rng, p);
    return Sample(std::move(values));
}

}  // namespace gammabayes
