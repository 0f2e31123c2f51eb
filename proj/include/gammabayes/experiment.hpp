#pragma once

// Replicated fitting experiments on synthetic Gamma data.
//
// Every replication derives its own seed from (master_seed, n, index), draws
// log-uniform true parameters and a sample from that seed, and fits every
// requested method on the same sample. Results land in a slot fixed by
// (n, index, method), so the output does not depend on the thread count.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

#include "gammabayes/analysis.hpp"
#include "gammabayes/errors.hpp"
#include "gammabayes/estimators.hpp"
#include "gammabayes/gamma_model.hpp"
#include "gammabayes/random.hpp"

namespace gammabayes {

struct ParamRanges {
    double shape_lo = 0.5;
    double shape_hi = 20.0;
    double scale_lo = 0.1;
    double scale_hi = 50.0;
};

struct ExperimentConfig {
    std::vector<std::size_t> sample_sizes{10, 100, 1000};
    std::size_t replications = 500;
    std::uint64_t master_seed = 0;
    std::vector<Method> methods{kAllMethods.begin(), kAllMethods.end()};
    ParamRanges true_param_ranges{};
    Hyperparameters hyper{};
    ConvergenceConfig convergence{};
    unsigned threads = 1;

    void validate() const {
        if (sample_sizes.empty()) throw DomainError("ExperimentConfig: no sample sizes");
        for (std::size_t n : sample_sizes)
            if (n < 2) throw DomainError("ExperimentConfig: sample sizes must be >= 2");
        if (replications < 1) throw DomainError("ExperimentConfig: replications must be >= 1");
        if (methods.empty()) throw DomainError("ExperimentConfig: no methods");
        const auto& r = true_param_ranges;
        if (!(r.shape_lo > 0.0) || !(r.scale_lo > 0.0) || !(r.shape_lo <= r.shape_hi) ||
            !(r.scale_lo <= r.scale_hi) || !std::isfinite(r.shape_hi) || !std::isfinite(r.scale_hi))
            throw DomainError("ExperimentConfig: parameter ranges must be positive and ordered");
        hyper.rate.validate();
        hyper.bl1.validate();
        hyper.bl2.validate();
        convergence.validate();
    }
};

struct ExperimentRecord {
    Method method;
    std::size_t n;
    std::size_t replication_index;
    std::uint64_t seed;
    double true_shape;
    double true_scale;
    double est_shape;
    double est_scale;
    double kl;
    int iterations;
    bool converged;
    double wall_time_seconds;

    friend bool operator==(const ExperimentRecord&, const ExperimentRecord&) = default;
};

/// Replications whose first draw could not be fitted by every method.
struct RedrawDiagnostic {
    std::size_t n;
    std::size_t replication_index;
    int redraws;
};

struct ExperimentRun {
    std::vector<ExperimentRecord> records;
    std::vector<RedrawDiagnostic> redraws;
};

inline constexpr int kMaxRedraws = 100;

/// Seed of replication `index` at sample size `n`.
inline std::uint64_t replication_seed(std::uint64_t master_seed, std::size_t n,
                                      std::size_t index) {
    return derive_seed({master_seed, static_cast<std::uint64_t>(n),
                        static_cast<std::uint64_t>(index)});
}

namespace detail {

inline double log_uniform(Rng& rng, double lo, double hi) {
    if (lo == hi) return lo;
    const double u = rng.uniform();
    return std::exp(std::log(lo) + u * (std::log(hi) - std::log(lo)));
}

struct ReplicationOutput {
    std::vector<ExperimentRecord> records;
    int redraws = 0;
};

inline ReplicationOutput run_replication(const ExperimentConfig& cfg, std::size_t n,
                                         std::size_t index, bool timed) {
    const std::uint64_t base = replication_seed(cfg.master_seed, n, index);
    const auto& ranges = cfg.true_param_ranges;
    for (int redraw = 0; redraw <= kMaxRedraws; ++redraw) {
        const std::uint64_t seed =
            redraw == 0 ? base : derive_seed({base, static_cast<std::uint64_t>(redraw)});
        Rng rng(seed);
        const GammaParams truth(log_uniform(rng, ranges.shape_lo, ranges.shape_hi),
                                log_uniform(rng, ranges.scale_lo, ranges.scale_hi));
        const Sample s = sample(truth, n, rng());

        ReplicationOutput out;
        out.redraws = redraw;
        out.records.reserve(cfg.methods.size());
        try {
            for (Method m : cfg.methods) {
                // The MM starting value is computed outside the timed region.
                ConvergenceConfig conv = cfg.convergence;
                if (m != Method::MM && !conv.initial_shape) {
                    detail::require_iterable(s);
                    conv.initial_shape = detail::mm_shape(s);
                }
                const auto start = std::chrono::steady_clock::now();
                const FitResult fit = gammabayes::fit(m, s, cfg.hyper, conv);
                const auto stop = std::chrono::steady_clock::now();
                const double seconds =
                    timed ? std::chrono::duration<double>(stop - start).count() : 0.0;
                out.records.push_back(ExperimentRecord{
                    m, n, index, seed, truth.shape(), truth.scale(), fit.params.shape(),
                    fit.params.scale(), kl_divergence(truth, fit.params), fit.iterations,
                    fit.converged, seconds});
            }
        } catch (const DegenerateSampleError&) {
            continue;
        } catch (const IllPosedPosteriorError&) {
            continue;
        } catch (const NumericalAnomalyError&) {
            continue;
        }
        return out;
    }
    throw NumericalAnomalyError("replication " + std::to_string(index) + " at n = " +
                                std::to_string(n) + " still unfit after " +
                                std::to_string(kMaxRedraws) + " redraws");
}

inline ExperimentRun run_experiment(const ExperimentConfig& cfg, bool timed) {
    cfg.validate();
    const std::size_t per_size = cfg.replications;
    const std::size_t total = cfg.sample_sizes.size() * per_size;
    std::vector<ReplicationOutput> slots(total);

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t job = next.fetch_add(1);
            if (job >= total) return;
            try {
                slots[job] = run_replication(cfg, cfg.sample_sizes[job / per_size],
                                             job % per_size, timed);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(total);
                return;
            }
        }
    };

    const unsigned threads = std::max(1u, cfg.threads);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    ExperimentRun run;
    run.records.reserve(total * cfg.methods.size());
    for (std::size_t job = 0; job < total; ++job) {
        auto& slot = slots[job];
        if (slot.redraws > 0)
            run.redraws.push_back({cfg.sample_sizes[job / per_size], job % per_size, slot.redraws});
        for (auto& r : slot.records) run.records.push_back(r);
    }
    return run;
}

}  // namespace detail

/// Bias study. Fit calls are not timed, so the output is a pure function
/// of the configuration.
inline ExperimentRun run_bias_experiment(const ExperimentConfig& cfg) {
    return detail::run_experiment(cfg, false);
}

/// Timing study: wall time of each fit call. Sampling and the MM starting
/// value are excluded.
inline ExperimentRun run_timing_experiment(const ExperimentConfig& cfg) {
    return detail::run_experiment(cfg, true);
}

// ---------------------------------------------------------------------------
// Summaries

struct TimingSummary {
    Method method;
    std::size_t n;
    double median_iterations;
    double median_wall_time_seconds;
    std::size_t replications;
};

namespace detail {

inline double median(std::vector<double> v) {
    if (v.empty()) return std::nan("");
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

inline std::vector<const ExperimentRecord*> select(const std::vector<ExperimentRecord>& records,
                                                   Method m, std::size_t n) {
    std::vector<const ExperimentRecord*> out;
    for (const auto& r : records)
        if (r.method == m && r.n == n) out.push_back(&r);
    std::sort(out.begin(), out.end(), [](const auto* a, const auto* b) {
        return a->replication_index < b->replication_index;
    });
    return out;
}

inline std::vector<std::size_t> sizes_of(const std::vector<ExperimentRecord>& records) {
    std::vector<std::size_t> out;
    for (const auto& r : records) out.push_back(r.n);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline std::vector<Method> methods_of(const std::vector<ExperimentRecord>& records) {
    std::vector<Method> out;
    for (const auto& r : records) out.push_back(r.method);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace detail

/// Shape and scale bias per (n, method). Cells with fewer than two
/// replications are skipped.
inline std::vector<BiasSummary> summarize_bias(const std::vector<ExperimentRecord>& records) {
    std::vector<BiasSummary> out;
    for (std::size_t n : detail::sizes_of(records)) {
        for (Method m : detail::methods_of(records)) {
            const auto sel = detail::select(records, m, n);
            if (sel.size() < 2) continue;
            std::vector<TruthAndEstimate> pairs;
            pairs.reserve(sel.size());
            for (const auto* r : sel)
                pairs.push_back({GammaParams(r->true_shape, r->true_scale),
                                 GammaParams(r->est_shape, r->est_scale)});
            const auto [shape, scale] = bias(pairs, m, n);
            out.push_back(shape);
            out.push_back(scale);
        }
    }
    return out;
}

/// Paired t-test on KL for every unordered method pair at every n.
inline std::vector<PairedTestResult> compare_kl(const std::vector<ExperimentRecord>& records) {
    std::vector<PairedTestResult> out;
    const auto methods = detail::methods_of(records);
    for (std::size_t n : detail::sizes_of(records)) {
        for (std::size_t i = 0; i < methods.size(); ++i) {
            for (std::size_t j = i + 1; j < methods.size(); ++j) {
                const auto a = detail::select(records, methods[i], n);
                const auto b = detail::select(records, methods[j], n);
                if (a.size() != b.size() || a.size() < 2) continue;
                std::vector<double> ka, kb;
                for (const auto* r : a) ka.push_back(r->kl);
                for (const auto* r : b) kb.push_back(r->kl);
                out.push_back(paired_t_test(ka, kb, methods[i], methods[j], n));
            }
        }
    }
    return out;
}

inline std::vector<TimingSummary> summarize_timing(const std::vector<ExperimentRecord>& records) {
    std::vector<TimingSummary> out;
    for (std::size_t n : detail::sizes_of(records)) {
        for (Method m : detail::methods_of(records)) {
            const auto sel = detail::select(records, m, n);
            if (sel.empty()) continue;
            std::vector<double> iters, times;
            for (const auto* r : sel) {
                iters.push_back(r->iterations);
                times.push_back(r->wall_time_seconds);
            }
            out.push_back({m, n, detail::median(iters), detail::median(times), sel.size()});
        }
    }
    return out;
}

}  // namespace gammabayes
