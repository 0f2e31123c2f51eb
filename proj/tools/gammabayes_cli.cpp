// gammabayes: fit Gamma parameters, draw samples, run bias and timing
// benchmarks, and emit BL1 prior/posterior curves.
//
// Exit codes: 0 success, 2 input validation, 3 numerical failure, 4 I/O.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "CLI11.hpp"
#include "gammabayes/gammabayes.hpp"
#include "json.hpp"

namespace gb = gammabayes;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

struct CommonOptions {
    std::uint64_t seed = 0;
    std::string out;
    double tol = 1e-6;
    int max_iter = 1000;
    double d = 1e-3, e = 1e-3;
    double a = 1.0, b = 1e-3, c = 1e-3;
    double w0 = 1.0, w1 = 0.0, w2 = 0.0;
    unsigned threads = 1;

    gb::Hyperparameters hyper() const {
        if (!(a > 0.0)) throw gb::DomainError("--a must be positive");
        gb::Hyperparameters h;
        h.rate = {d, e};
        h.bl1 = {std::log(a), b, c};
        h.bl2 = {w0, w1, w2};
        h.rate.validate();
        h.bl1.validate();
        h.bl2.validate();
        return h;
    }

    gb::ConvergenceConfig convergence() const {
        gb::ConvergenceConfig cfg;
        cfg.rel_tol = tol;
        cfg.max_iter = max_iter;
        cfg.validate();
        return cfg;
    }
};

void add_convergence_flags(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--tol", o.tol, "Relative shape change that ends iteration")
        ->capture_default_str();
    cmd->add_option("--max-iter", o.max_iter, "Iteration cap")->capture_default_str();
}

void add_hyper_flags(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--d", o.d, "Rate prior shape")->capture_default_str();
    cmd->add_option("--e", o.e, "Rate prior rate")->capture_default_str();
    cmd->add_option("--a", o.a, "BL1 shape prior a")->capture_default_str();
    cmd->add_option("--b", o.b, "BL1 shape prior b")->capture_default_str();
    cmd->add_option("--c", o.c, "BL1 shape prior c")->capture_default_str();
    cmd->add_option("--w0", o.w0, "BL2 prior w0")->capture_default_str();
    cmd->add_option("--w1", o.w1, "BL2 prior w1")->capture_default_str();
    cmd->add_option("--w2", o.w2, "BL2 prior w2")->capture_default_str();
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw gb::io::IoError("cannot open '" + path.string() + "' for writing");
    return out;
}

fs::path prepare_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw gb::io::IoError("cannot create directory '" + dir + "': " + ec.message());
    return fs::path(dir);
}

json posterior_json(const gb::FitResult& r) {
    if (!r.posterior) return nullptr;
    return std::visit(
        [](const auto& p) -> json {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, gb::BL1Posterior>)
                return {{"d_hat", p.d_hat}, {"e_hat", p.e_hat}, {"log_a_hat", p.log_a_hat},
                        {"b_hat", p.b_hat}, {"c_hat", p.c_hat}};
            else
                return {{"d_hat", p.d_hat}, {"e_hat", p.e_hat}, {"w0", p.w0}, {"w1", p.w1},
                        {"w2", p.w2}};
        },
        *r.posterior);
}

int run_fit(const std::string& method_name, const std::string& input, bool strict,
            const CommonOptions& o) {
    const gb::Method method = gb::parse_method(method_name);
    const gb::Sample s(gb::io::read_observations_file(input));
    const gb::FitResult r = gb::fit(method, s, o.hyper(), o.convergence());

    json j;
    j["method"] = std::string(gb::to_string(r.method));
    j["shape"] = r.params.shape();
    j["scale"] = r.params.scale();
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["safeguard_activations"] = r.safeguard_activations;
    j["posterior"] = posterior_json(r);
    j["laplace_precision"] = r.laplace_precision ? json(*r.laplace_precision) : json(nullptr);
    if (o.out.empty()) {
        std::cout << j.dump(2) << '\n';
    } else {
        auto out = open_output(prepare_dir(o.out) / "fit.json");
        out << j.dump(2) << '\n';
    }

    if (strict && !r.converged) {
        std::cerr << "error: " << gb::to_string(r.method) << " did not converge in "
                  << r.iterations << " iterations\n";
        return kExitNumerical;
    }
    return kExitOk;
}

int run_sample(double shape, double scale, std::size_t n, const CommonOptions& o) {
    const gb::Sample s = gb::sample(gb::GammaParams(shape, scale), n, o.seed);
    if (o.out.empty()) {
        gb::io::write_observations(std::cout, s.values());
    } else {
        auto out = open_output(prepare_dir(o.out) / "sample.csv");
        gb::io::write_observations(out, s.values());
    }
    return kExitOk;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!gb::io::trim(item).empty()) out.emplace_back(gb::io::trim(item));
    return out;
}

struct BenchOptions {
    std::string sizes = "10,100,1000";
    std::size_t reps = 500;
    std::string methods = "mm,ml1,ml2,bl1,bl2";
    std::vector<double> shape_range{0.5, 20.0};
    std::vector<double> scale_range{0.1, 50.0};
};

int run_bench(bool timing, const BenchOptions& b, const CommonOptions& o) {
    if (o.out.empty()) throw gb::io::InputError("bench requires --out <dir>");
    gb::ExperimentConfig cfg;
    cfg.sample_sizes.clear();
    for (const auto& s : split_list(b.sizes))
        cfg.sample_sizes.push_back(gb::io::parse_integer<std::size_t>(s, "sample size"));
    cfg.methods.clear();
    for (const auto& m : split_list(b.methods)) cfg.methods.push_back(gb::parse_method(m));
    cfg.replications = b.reps;
    cfg.master_seed = o.seed;
    cfg.true_param_ranges = {b.shape_range.at(0), b.shape_range.at(1), b.scale_range.at(0),
                             b.scale_range.at(1)};
    cfg.hyper = o.hyper();
    cfg.convergence = o.convergence();
    cfg.threads = timing ? 1 : o.threads;

    const gb::ExperimentRun run =
        timing ? gb::run_timing_experiment(cfg) : gb::run_bias_experiment(cfg);

    const fs::path dir = prepare_dir(o.out);
    std::vector<std::string> comments{
        std::string("experiment=") + (timing ? "timing" : "bias") +
            " rng=" + std::string(gb::kRngAlgorithm) + " master_seed=" + std::to_string(o.seed),
        timing ? "wall_time_seconds times each fit call; sampling, sufficient statistics "
                 "and the MM starting value are computed before the clock starts"
               : "wall_time_seconds is not measured in the bias experiment and is always 0"};
    {
        auto out = open_output(dir / "records.csv");
        gb::io::write_records(out, run.records, comments);
    }
    {
        auto out = open_output(dir / "summary.csv");
        gb::io::write_summary(out, gb::summarize_bias(run.records), gb::compare_kl(run.records),
                              timing ? gb::summarize_timing(run.records)
                                     : std::vector<gb::TimingSummary>{});
    }
    {
        auto out = open_output(dir / "redraws.csv");
        gb::io::write_redraws(out, run.redraws);
    }
    std::cerr << "wrote " << run.records.size() << " records to " << dir.string() << '\n';
    return kExitOk;
}

struct CurveOptions {
    std::string input;
    std::optional<double> grid_lo, grid_hi;
    std::size_t grid_points = 512;
};

int run_curves(const CurveOptions& c, const CommonOptions& o) {
    const gb::Sample s(gb::io::read_observations_file(c.input));
    std::vector<double> grid;
    if (c.grid_lo || c.grid_hi) {
        const double a0 = gb::fit_mm(s).params.shape();
        grid = gb::log_spaced_grid(c.grid_lo.value_or(a0 / 10.0), c.grid_hi.value_or(a0 * 10.0),
                                   c.grid_points);
    } else {
        grid = gb::default_curve_grid(s, c.grid_points);
    }
    const gb::Hyperparameters h = o.hyper();
    const auto curves = gb::emit_prior_posterior_curves(h.bl1, h.rate, s, grid, o.convergence());
    if (o.out.empty()) {
        gb::io::write_curves(std::cout, curves.points);
    } else {
        auto out = open_output(prepare_dir(o.out) / "curves.csv");
        gb::io::write_curves(out, curves.points);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gamma distribution parameter estimation (MM, ML1, ML2, BL1, BL2)"};
    app.require_subcommand(1);
    CommonOptions common;

    auto* fit_cmd = app.add_subcommand("fit", "Fit one estimator to a CSV of observations");
    std::string method = "ml1", input;
    bool strict = false;
    fit_cmd->add_option("--method", method, "mm, ml1, ml2, bl1 or bl2")->capture_default_str();
    fit_cmd->add_option("--input", input, "CSV file, one positive value per line")->required();
    fit_cmd->add_flag("--strict", strict, "Exit with status 3 if the fit did not converge");
    fit_cmd->add_option("--out", common.out, "Directory for fit.json (default: stdout)");
    fit_cmd->add_option("--seed", common.seed, "Accepted for uniformity; fitting is deterministic");
    add_convergence_flags(fit_cmd, common);
    add_hyper_flags(fit_cmd, common);

    auto* sample_cmd = app.add_subcommand("sample", "Draw a seeded Gamma sample");
    double shape = 1.0, scale = 1.0;
    std::size_t n = 100;
    sample_cmd->add_option("--shape", shape)->required();
    sample_cmd->add_option("--scale", scale)->required();
    sample_cmd->add_option("--n", n)->capture_default_str();
    sample_cmd->add_option("--seed", common.seed)->capture_default_str();
    sample_cmd->add_option("--out", common.out, "Directory for sample.csv (default: stdout)");

    auto* bench_cmd = app.add_subcommand("bench", "Replicated bias or timing experiments");
    bench_cmd->require_subcommand(1);
    BenchOptions bench;
    auto configure_bench = [&](CLI::App* cmd) {
        cmd->add_option("--sizes", bench.sizes, "Comma-separated sample sizes")
            ->capture_default_str();
        cmd->add_option("--reps", bench.reps, "Replications per size")->capture_default_str();
        cmd->add_option("--methods", bench.methods)->capture_default_str();
        cmd->add_option("--seed", common.seed, "Master seed")->capture_default_str();
        cmd->add_option("--out", common.out, "Output directory")->required();
        cmd->add_option("--shape-range", bench.shape_range, "lo hi of true shape")
            ->expected(2)
            ->capture_default_str();
        cmd->add_option("--scale-range", bench.scale_range, "lo hi of true scale")
            ->expected(2)
            ->capture_default_str();
        add_convergence_flags(cmd, common);
        add_hyper_flags(cmd, common);
    };
    auto* bias_cmd = bench_cmd->add_subcommand("bias", "Bias and KL comparison study");
    configure_bench(bias_cmd);
    bias_cmd->add_option("--threads", common.threads, "Worker threads")->capture_default_str();
    auto* timing_cmd = bench_cmd->add_subcommand("timing", "Fit wall-time study (single thread)");
    configure_bench(timing_cmd);

    auto* curves_cmd = app.add_subcommand("curves", "BL1 log-prior and log-posterior curves");
    CurveOptions curves;
    curves_cmd->add_option("--input", curves.input, "CSV file of observations")->required();
    curves_cmd->add_option("--grid-lo", curves.grid_lo, "Smallest shape (default MM/10)");
    curves_cmd->add_option("--grid-hi", curves.grid_hi, "Largest shape (default MM*10)");
    curves_cmd->add_option("--grid-points", curves.grid_points)->capture_default_str();
    curves_cmd->add_option("--out", common.out, "Directory for curves.csv (default: stdout)");
    curves_cmd->add_option("--seed", common.seed, "Accepted for uniformity; curves are deterministic");
    add_convergence_flags(curves_cmd, common);
    add_hyper_flags(curves_cmd, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInput;
    }

    try {
        if (*fit_cmd) return run_fit(method, input, strict, common);
        if (*sample_cmd) return run_sample(shape, scale, n, common);
        if (*bias_cmd) return run_bench(false, bench, common);
        if (*timing_cmd) return run_bench(true, bench, common);
        if (*curves_cmd) return run_curves(curves, common);
    } catch (const gb::io::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const gb::ConvergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const gb::IllPosedPosteriorError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const gb::NumericalAnomalyError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        // InputError, InsufficientDataError, DegenerateSampleError
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::out_of_range& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
    return kExitInput;
}
