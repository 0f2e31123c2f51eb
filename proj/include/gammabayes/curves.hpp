#pragma once

// Unnormalized BL1 log-prior and log-posterior over a grid of shapes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "gammabayes/errors.hpp"
#include "gammabayes/estimators.hpp"
#include "gammabayes/gamma_model.hpp"

namespace gammabayes {

struct CurvePoint {
    double alpha;
    double log_prior;
    double log_posterior;
};

/// Curves plus the BL1 fit whose rate estimate they were evaluated at.
struct PriorPosteriorCurves {
    std::vector<CurvePoint> points;
    FitResult fit;
    double rate;
};

/// `points` log-spaced shapes over [lo, hi].
inline std::vector<double> log_spaced_grid(double lo, double hi, std::size_t points) {
    if (!(lo > 0.0) || !(hi > lo) || points < 2)
        throw DomainError("log_spaced_grid: need 0 < lo < hi and at least two points");
    std::vector<double> grid(points);
    const double llo = std::log(lo), lhi = std::log(hi);
    for (std::size_t i = 0; i < points; ++i)
        grid[i] = std::exp(llo + (lhi - llo) * static_cast<double>(i) /
                                     static_cast<double>(points - 1));
    return grid;
}

/// Default grid: [alpha_MM / 10, alpha_MM * 10].
inline std::vector<double> default_curve_grid(const Sample& s, std::size_t points = 512) {
    const double a0 = fit_mm(s).params.shape();
    return log_spaced_grid(a0 / 10.0, a0 * 10.0, points);
}

/// Evaluates the prior (hyperparameters a, b, c) and the posterior
/// (a_hat, b_hat, c_hat) at the rate estimate d_hat / e_hat of the BL1 fit.
/// Each column is shifted so that its maximum over the grid is zero.
inline PriorPosteriorCurves emit_prior_posterior_curves(const ShapePriorBL1& shape_prior,
                                                        const RatePrior& rate_prior,
                                                        const Sample& s,
                                                        const std::vector<double>& grid,
                                                        const ConvergenceConfig& cfg = {}) {
    if (grid.empty()) throw DomainError("emit_prior_posterior_curves: empty grid");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0) || !std::isfinite(grid[i]))
            throw DomainError("emit_prior_posterior_curves: grid values must be positive");
        if (i > 0 && !(grid[i] > grid[i - 1]))
            throw DomainError("emit_prior_posterior_curves: grid must be increasing");
    }

    FitResult fit = fit_bl1(s, shape_prior, rate_prior, cfg);
    const auto& post = std::get<BL1Posterior>(*fit.posterior);
    const double rate = post.d_hat / post.e_hat;
    const ShapePriorBL1 posterior_prior{post.log_a_hat, post.b_hat, post.c_hat};

    std::vector<CurvePoint> points;
    points.reserve(grid.size());
    double max_prior = -INFINITY, max_post = -INFINITY;
    for (double a : grid) {
        const CurvePoint p{a, bl1_log_prior(a, shape_prior, rate),
                           bl1_log_prior(a, posterior_prior, rate)};
        max_prior = std::max(max_prior, p.log_prior);
        max_post = std::max(max_post, p.log_posterior);
        points.push_back(p);
    }
    for (auto& p : points) {
        p.log_prior -= max_prior;
        p.log_posterior -= max_post;
    }
    return {std::move(points), std::move(fit), rate};
}

}  // namespace gammabayes
