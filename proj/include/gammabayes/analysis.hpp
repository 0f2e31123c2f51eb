#pragma once

// Post-processing of replicated fits: bias summaries, KL against the
// generating law, and the paired t-test used to compare estimators.

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "gammabayes/errors.hpp"
#include "gammabayes/estimators.hpp"
#include "gammabayes/gamma_model.hpp"
#include "gammabayes/specfun.hpp"

namespace gammabayes {

enum class Param { Shape, Scale };

inline constexpr std::string_view to_string(Param p) noexcept {
    return p == Param::Shape ? "shape" : "scale";
}

struct BiasSummary {
    Method method;
    std::size_t n;
    Param param;
    double mean_bias;
    double sd_bias;
    std::size_t replications;
};

struct PairedTestResult {
    Method method_a;
    Method method_b;
    std::size_t n;
    double t_statistic;
    std::size_t degrees_of_freedom;
    double p_value;
};

struct TruthAndEstimate {
    GammaParams truth;
    GammaParams estimate;
};

namespace detail {

// Mean and unbiased standard deviation, two-pass.
inline std::pair<double, double> mean_sd(std::span<const double> v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

}  // namespace detail

/// Two-sided tail probability P(|T| >= |t|) for Student t with df degrees.
inline double student_t_two_sided_p(double t, double df) {
    if (!(df > 0.0)) throw DomainError("student_t_two_sided_p: df must be positive");
    if (std::isnan(t)) throw DomainError("student_t_two_sided_p: t is NaN");
    if (std::isinf(t)) return 0.0;
    return specfun::regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

/// Bias (estimate - truth) of shape and scale over replications.
inline std::pair<BiasSummary, BiasSummary> bias(std::span<const TruthAndEstimate> pairs,
                                                Method method = Method::MM, std::size_t n = 0) {
    if (pairs.size() < 2)
        throw InsufficientDataError("bias: at least two replications are required");
    std::vector<double> shape, scale;
    shape.reserve(pairs.size());
    scale.reserve(pairs.size());
    for (const auto& p : pairs) {
        shape.push_back(p.estimate.shape() - p.truth.shape());
        scale.push_back(p.estimate.scale() - p.truth.scale());
    }
    const auto [ms, ss] = detail::mean_sd(shape);
    const auto [mb, sb] = detail::mean_sd(scale);
    return {BiasSummary{method, n, Param::Shape, ms, ss, pairs.size()},
            BiasSummary{method, n, Param::Scale, mb, sb, pairs.size()}};
}

/// Paired t-test on d = x - y. A zero-variance difference series gives
/// p = 1 when its mean is zero and p = 0 otherwise.
inline PairedTestResult paired_t_test(std::span<const double> x, std::span<const double> y,
                                      Method method_a = Method::MM, Method method_b = Method::MM,
                                      std::size_t n = 0) {
    if (x.size() != y.size())
        throw DomainError("paired_t_test: series lengths differ (" + std::to_string(x.size()) +
                          " vs " + std::to_string(y.size()) + ")");
    if (x.size() < 2) throw DomainError("paired_t_test: at least two pairs are required");

    std::vector<double> d(x.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = x[i] - y[i];
    const auto [mean, sd] = detail::mean_sd(d);
    const std::size_t df = d.size() - 1;

    PairedTestResult r{method_a, method_b, n, 0.0, df, 1.0};
    if (sd == 0.0) {
        if (mean == 0.0) return r;
        r.t_statistic = mean > 0.0 ? std::numeric_limits<double>::infinity()
                                   : -std::numeric_limits<double>::infinity();
        r.p_value = 0.0;
        return r;
    }
    r.t_statistic = mean / (sd / std::sqrt(static_cast<double>(d.size())));
    r.p_value = student_t_two_sided_p(r.t_statistic, static_cast<double>(df));
    return r;
}

/// KL(truth || fit) for each fitted method.
inline std::map<Method, double> kl_matrix(const GammaParams& truth,
                                          const std::map<Method, GammaParams>& fits) {
    std::map<Method, double> out;
    for (const auto& [m, p] : fits) out.emplace(m, kl_divergence(truth, p));
    return out;
}

}  // namespace gammabayes
