#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Outcome {
    int status;
    std::string out;
    std::string err;
};

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        std::string tmpl = (fs::temp_directory_path() / "gammabayes_cli_XXXXXX").string();
        ASSERT_NE(mkdtemp(tmpl.data()), nullptr);
        dir_ = tmpl;
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path path(const std::string& name) const { return dir_ / name; }

    fs::path write(const std::string& name, const std::string& text) const {
        std::ofstream(path(name)) << text;
        return path(name);
    }

    static std::string slurp(const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    Outcome run(const std::string& args) const {
        const fs::path err = path("stderr.txt");
        const std::string cmd =
            std::string("'") + GAMMABAYES_CLI + "' " + args + " 2>'" + err.string() + "'";
        FILE* pipe = popen(cmd.c_str(), "r");
        EXPECT_NE(pipe, nullptr);
        std::string out;
        std::array<char, 4096> buf{};
        std::size_t got;
        while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), got);
        const int raw = pclose(pipe);
        return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, out, slurp(err)};
    }

    static std::size_t data_lines(const std::string& text) {
        std::istringstream in(text);
        std::string line;
        std::size_t count = 0;
        bool header = false;
        while (std::getline(in, line)) {
            if (line.empty() || line.front() == '#') continue;
            if (!header) {
                header = true;
                continue;
            }
            ++count;
        }
        return count;
    }

    fs::path dir_;
};

}  // namespace

TEST_F(Cli, FitMomentsOnThreeValues) {
    const auto input = write("three.csv", "1\n2\n3\n");
    const Outcome r = run("fit --method mm --input '" + input.string() + "'");
    ASSERT_EQ(r.status, 0) << r.err;
    const json j = json::parse(r.out);
    EXPECT_EQ(j["method"], "MM");
    EXPECT_DOUBLE_EQ(j["shape"].get<double>(), 4.0);
    EXPECT_DOUBLE_EQ(j["scale"].get<double>(), 0.5);
    EXPECT_TRUE(j["posterior"].is_null());
    EXPECT_TRUE(j["laplace_precision"].is_null());
}

TEST_F(Cli, FitBL2ReportsPosterior) {
    ASSERT_EQ(run("sample --shape 3 --scale 2 --n 200 --seed 4 --out '" + dir_.string() + "'")
                  .status,
              0);
    const Outcome r =
        run("fit --method bl2 --input '" + path("sample.csv").string() + "' --out '" +
            (dir_ / "fit").string() + "'");
    ASSERT_EQ(r.status, 0) << r.err;
    const json j = json::parse(slurp(dir_ / "fit" / "fit.json"));
    EXPECT_EQ(j["method"], "BL2");
    EXPECT_TRUE(j["converged"].get<bool>());
    ASSERT_TRUE(j["posterior"].is_object());
    EXPECT_LT(j["posterior"]["w1"].get<double>(), 0.0);
    EXPECT_GT(j["posterior"]["w2"].get<double>(), 0.0);
    EXPECT_GT(j["laplace_precision"].get<double>(), 0.0);
}

TEST_F(Cli, FitRejectsNegativeValueWithRow) {
    const auto input = write("negative.csv", "x\n1.2\n-1\n3\n");
    const Outcome r = run("fit --method ml1 --input '" + input.string() + "'");
    EXPECT_EQ(r.status, 2);
    EXPECT_NE(r.err.find("row 3"), std::string::npos) << r.err;
    EXPECT_TRUE(r.out.empty());
}

TEST_F(Cli, ExitCodes) {
    EXPECT_EQ(run("fit --method ml1 --input '" + (dir_ / "missing.csv").string() + "'").status, 4);
    const auto same = write("same.csv", "5\n5\n5\n");
    EXPECT_EQ(run("fit --method ml2 --input '" + same.string() + "'").status, 2);
    EXPECT_EQ(run("fit --method xx --input '" + same.string() + "'").status, 2);
    EXPECT_EQ(run("fit --bogus").status, 2);

    ASSERT_EQ(run("sample --shape 15 --scale 1 --n 500 --seed 2 --out '" + dir_.string() + "'")
                  .status,
              0);
    const std::string sample = "'" + path("sample.csv").string() + "'";
    EXPECT_EQ(run("fit --method ml1 --max-iter 1 --input " + sample).status, 0);
    EXPECT_EQ(run("fit --method ml1 --max-iter 1 --strict --input " + sample).status, 3);
    EXPECT_EQ(run("fit --method bl2 --w1 1e9 --input " + sample).status, 3);
}

TEST_F(Cli, SampleIsSeeded) {
    const Outcome a = run("sample --shape 0.7 --scale 2 --n 50 --seed 9");
    const Outcome b = run("sample --shape 0.7 --scale 2 --n 50 --seed 9");
    const Outcome c = run("sample --shape 0.7 --scale 2 --n 50 --seed 10");
    ASSERT_EQ(a.status, 0);
    EXPECT_EQ(a.out, b.out);
    EXPECT_NE(a.out, c.out);
    EXPECT_EQ(data_lines(a.out), 50u);
}

TEST_F(Cli, BenchBiasCardinalityAndDeterminism) {
    const std::string args = "bench bias --sizes 10,100 --reps 5 --seed 1 --out ";
    ASSERT_EQ(run(args + "'" + (dir_ / "a").string() + "'").status, 0);
    ASSERT_EQ(run(args + "'" + (dir_ / "b").string() + "' --threads 3").status, 0);
    const std::string records = slurp(dir_ / "a" / "records.csv");
    EXPECT_EQ(data_lines(records), 5u * 2u * 5u);
    const std::string summary = slurp(dir_ / "a" / "summary.csv");
    std::size_t bias_rows = 0, t_rows = 0;
    std::istringstream in(summary);
    for (std::string line; std::getline(in, line);) {
        if (line.rfind("bias,", 0) == 0) ++bias_rows;
        if (line.rfind("paired_t,", 0) == 0) ++t_rows;
    }
    EXPECT_EQ(bias_rows, 2u * 5u * 2u);
    EXPECT_EQ(t_rows, 2u * 10u);
    for (const char* f : {"records.csv", "summary.csv", "redraws.csv"})
        EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
}

TEST_F(Cli, BenchTimingReportsMedianIterations) {
    ASSERT_EQ(run("bench timing --sizes 1000 --reps 20 --seed 2 --out '" + dir_.string() + "'")
                  .status,
              0);
    const std::string summary = slurp(dir_ / "summary.csv");
    EXPECT_NE(summary.find("median_iterations"), std::string::npos);
    std::size_t timing_rows = 0;
    std::istringstream in(summary);
    for (std::string line; std::getline(in, line);)
        if (line.rfind("timing,", 0) == 0) ++timing_rows;
    EXPECT_EQ(timing_rows, 5u);
}

TEST_F(Cli, CurvesCsv) {
    ASSERT_EQ(run("sample --shape 10 --scale 25 --n 1000 --seed 5 --out '" + dir_.string() + "'")
                  .status,
              0);
    const Outcome r = run("curves --input '" + path("sample.csv").string() +
                          "' --d 0.01 --e 0.01 --grid-points 64");
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_EQ(r.out.rfind("alpha,log_prior,log_posterior\n", 0), 0u);
    EXPECT_EQ(data_lines(r.out), 64u);
}
