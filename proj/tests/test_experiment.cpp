#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "gammabayes/gammabayes.hpp"

using namespace gammabayes;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.sample_sizes = {10, 50};
    cfg.replications = 20;
    cfg.master_seed = 99;
    return cfg;
}

const BiasSummary& find_bias(const std::vector<BiasSummary>& rows, Method m, std::size_t n,
                             Param p) {
    for (const auto& r : rows)
        if (r.method == m && r.n == n && r.param == p) return r;
    throw std::out_of_range("no such bias row");
}

}  // namespace

TEST(Experiment, Cardinality) {
    ExperimentConfig cfg;
    cfg.sample_sizes = {10};
    cfg.replications = 3;
    cfg.methods = {Method::MM};
    cfg.master_seed = 5;
    const auto run = run_bias_experiment(cfg);
    ASSERT_EQ(run.records.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(run.records[i].replication_index, i);
        EXPECT_EQ(run.records[i].method, Method::MM);
    }

    const auto full = run_bias_experiment(small_config());
    EXPECT_EQ(full.records.size(), 2u * 20u * 5u);
}

TEST(Experiment, DeterministicAndCanonicallyOrdered) {
    const auto a = run_bias_experiment(small_config());
    const auto b = run_bias_experiment(small_config());
    EXPECT_EQ(a.records, b.records);

    std::size_t k = 0;
    for (std::size_t n : {10u, 50u})
        for (std::size_t rep = 0; rep < 20; ++rep)
            for (Method m : kAllMethods) {
                const auto& r = a.records[k++];
                EXPECT_EQ(r.n, n);
                EXPECT_EQ(r.replication_index, rep);
                EXPECT_EQ(r.method, m);
            }
}

TEST(Experiment, SeedsDeriveFromMasterSizeAndIndex) {
    const auto run = run_bias_experiment(small_config());
    for (const auto& r : run.records) {
        const bool redrawn = std::any_of(run.redraws.begin(), run.redraws.end(), [&](auto& d) {
            return d.n == r.n && d.replication_index == r.replication_index;
        });
        if (!redrawn) {
            EXPECT_EQ(r.seed, replication_seed(99, r.n, r.replication_index));
        }
        EXPECT_GE(r.kl, 0.0);
        EXPECT_EQ(r.wall_time_seconds, 0.0);
        EXPECT_GE(r.true_shape, 0.5);
        EXPECT_LE(r.true_shape, 20.0);
        EXPECT_GE(r.true_scale, 0.1);
        EXPECT_LE(r.true_scale, 50.0);
    }
    auto other = small_config();
    other.master_seed = 100;
    EXPECT_NE(run_bias_experiment(other).records.front().seed, run.records.front().seed);
}

TEST(Experiment, AllMethodsShareOneSample) {
    const auto run = run_bias_experiment(small_config());
    for (std::size_t i = 0; i < run.records.size(); i += 5) {
        for (std::size_t j = 1; j < 5; ++j) {
            EXPECT_EQ(run.records[i + j].seed, run.records[i].seed);
            EXPECT_EQ(run.records[i + j].true_shape, run.records[i].true_shape);
        }
    }
}

TEST(Experiment, IndependentOfThreadCount) {
    auto cfg = small_config();
    const auto serial = run_bias_experiment(cfg);
    cfg.threads = 4;
    const auto parallel = run_bias_experiment(cfg);
    EXPECT_EQ(serial.records, parallel.records);
}

TEST(Experiment, ShapeBiasShrinksWithSampleSize) {
    ExperimentConfig cfg;
    cfg.sample_sizes = {10, 1000};
    cfg.replications = 500;
    cfg.methods = {Method::ML1};
    cfg.master_seed = 2024;
    cfg.threads = 4;
    const auto rows = summarize_bias(run_bias_experiment(cfg).records);
    EXPECT_GT(find_bias(rows, Method::ML1, 10, Param::Shape).mean_bias,
              find_bias(rows, Method::ML1, 1000, Param::Shape).mean_bias);
}

TEST(Experiment, TimingRecords) {
    ExperimentConfig cfg;
    cfg.sample_sizes = {100, 1000};
    cfg.replications = 40;
    cfg.master_seed = 3;
    const auto run = run_timing_experiment(cfg);
    for (const auto& r : run.records) {
        EXPECT_GE(r.wall_time_seconds, 0.0);
        EXPECT_GE(r.iterations, 0);
    }
    for (std::size_t i = 0; i < run.records.size(); i += 5) {
        ASSERT_EQ(run.records[i + 2].method, Method::ML2);
        ASSERT_EQ(run.records[i + 4].method, Method::BL2);
        EXPECT_EQ(run.records[i + 4].iterations, run.records[i + 2].iterations);
    }
    const auto summary = summarize_timing(run.records);
    for (std::size_t n : {100u, 1000u}) {
        double ml1 = 0, ml2 = 0;
        for (const auto& t : summary) {
            if (t.n != n) continue;
            if (t.method == Method::ML1) ml1 = t.median_iterations;
            if (t.method == Method::ML2) ml2 = t.median_iterations;
            EXPECT_EQ(t.replications, 40u);
        }
        EXPECT_LT(ml2, ml1) << "n=" << n;
    }
}

TEST(Experiment, BL2FlatPriorIterationsMatchML2) {
    ExperimentConfig cfg;
    cfg.sample_sizes = {10, 100};
    cfg.replications = 50;
    cfg.methods = {Method::ML2, Method::BL2};
    cfg.hyper.bl2 = {1.0, 0.0, 0.0};
    cfg.master_seed = 8;
    const auto run = run_timing_experiment(cfg);
    for (std::size_t i = 0; i < run.records.size(); i += 2)
        EXPECT_EQ(run.records[i].iterations, run.records[i + 1].iterations);
}

TEST(Experiment, SummariesCoverEveryCell) {
    const auto run = run_bias_experiment(small_config());
    EXPECT_EQ(summarize_bias(run.records).size(), 2u * 5u * 2u);
    const auto tests = compare_kl(run.records);
    EXPECT_EQ(tests.size(), 2u * 10u);
    for (const auto& t : tests) {
        EXPECT_EQ(t.degrees_of_freedom, 19u);
        EXPECT_GE(t.p_value, 0.0);
        EXPECT_LE(t.p_value, 1.0);
    }
}

TEST(Experiment, ConfigValidation) {
    auto cfg = small_config();
    cfg.sample_sizes = {1};
    EXPECT_THROW(run_bias_experiment(cfg), DomainError);
    cfg = small_config();
    cfg.replications = 0;
    EXPECT_THROW(run_bias_experiment(cfg), DomainError);
    cfg = small_config();
    cfg.true_param_ranges.shape_lo = 30.0;
    EXPECT_THROW(run_bias_experiment(cfg), DomainError);
    cfg = small_config();
    cfg.methods.clear();
    EXPECT_THROW(run_bias_experiment(cfg), DomainError);
}

// ---------------------------------------------------------------- CSV

TEST(Io, RecordsRoundTrip) {
    auto run = run_timing_experiment(small_config());
    run.records.front().converged = false;
    std::stringstream buf;
    io::write_records(buf, run.records, {"a comment"});
    const auto back = io::read_records(buf);
    EXPECT_EQ(back, run.records);
}

TEST(Io, FormatDoubleIsExact) {
    for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, 5e-324, 123456789.123456789})
        EXPECT_EQ(*io::parse_double(io::format_double(v)), v);
}

TEST(Io, ReadObservations) {
    std::istringstream with_header("x\n1.5\n\n2\n  3e0 \n");
    EXPECT_EQ(io::read_observations(with_header), (std::vector<double>{1.5, 2.0, 3.0}));
    std::istringstream bare("\n4\n5\n");
    EXPECT_EQ(io::read_observations(bare), (std::vector<double>{4.0, 5.0}));
}

TEST(Io, ReadObservationsNamesOffendingRow) {
    auto message = [](const std::string& text) {
        std::istringstream in(text);
        try {
            io::read_observations(in);
        } catch (const io::InputError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    EXPECT_NE(message("x\n1\n2\n-1\n").find("row 4"), std::string::npos);
    EXPECT_NE(message("1\n0\n").find("row 2"), std::string::npos);
    EXPECT_NE(message("1\nabc\n").find("row 2"), std::string::npos);
    EXPECT_NE(message("1\ninf\n").find("row 2"), std::string::npos);
    EXPECT_NE(message("1\nx\n").find("row 2"), std::string::npos);
    EXPECT_FALSE(message("x\n\n").empty());
}

TEST(Io, MissingFile) {
    EXPECT_THROW(io::read_observations_file("/nonexistent/dir/obs.csv"), io::IoError);
}

// ---------------------------------------------------------------- curves

TEST(Curves, PosteriorPeaksNearTruthAndAtFit) {
    const Sample s = sample(GammaParams(10.0, 25.0), 1000, 31);
    const RatePrior rp{0.01, 0.01};
    const auto grid = default_curve_grid(s);
    const auto curves = emit_prior_posterior_curves({}, rp, s, grid);
    ASSERT_EQ(curves.points.size(), 512u);
    const auto best = std::max_element(
        curves.points.begin(), curves.points.end(),
        [](const auto& a, const auto& b) { return a.log_posterior < b.log_posterior; });
    EXPECT_EQ(best->log_posterior, 0.0);
    EXPECT_NEAR(best->alpha, 10.0, 1.0);

    const double fitted = curves.fit.params.shape();
    const double step = grid[1] / grid[0];
    EXPECT_LE(std::max(best->alpha / fitted, fitted / best->alpha), step);
}

TEST(Curves, PriorFlatInVanishingLimit) {
    const Sample s = sample(GammaParams(10.0, 25.0), 1000, 32);
    const auto curves = emit_prior_posterior_curves(ShapePriorBL1{0.0, 1e-10, 1e-10},
                                                    RatePrior{0.01, 0.01}, s,
                                                    default_curve_grid(s));
    for (const auto& p : curves.points) EXPECT_NEAR(p.log_prior, 0.0, 1e-6);
}

TEST(Curves, GridValidation) {
    const Sample s = sample(GammaParams(2.0, 1.0), 100, 33);
    EXPECT_THROW(emit_prior_posterior_curves({}, {}, s, {}), DomainError);
    EXPECT_THROW(emit_prior_posterior_curves({}, {}, s, {1.0, 0.5}), DomainError);
    EXPECT_THROW(emit_prior_posterior_curves({}, {}, s, {-1.0, 2.0}), DomainError);
    EXPECT_THROW(log_spaced_grid(1.0, 1.0, 10), DomainError);
    const auto g = log_spaced_grid(0.5, 50.0, 3);
    EXPECT_NEAR(g[1], 5.0, 1e-12);
}
