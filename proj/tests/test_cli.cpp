#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "commands.hpp"

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(const std::vector<std::string>& args)
{
    std::ostringstream out;
    std::ostringstream err;
    const int code = lowsync::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text)
{
    std::vector<std::vector<std::string>> rows;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) {
            cells.push_back(cell);
        }
        if (!line.empty() && line.back() == ',') {
            cells.emplace_back();
        }
        rows.push_back(std::move(cells));
    }
    return rows;
}

class ScopedOutDir {
public:
    ScopedOutDir()
        : dir_(std::filesystem::temp_directory_path() /
               ("lowsync_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name()))
    {
        std::filesystem::remove_all(dir_);
        ::setenv(lowsync::cli::kOutDirEnv, dir_.c_str(), 1);
    }
    ~ScopedOutDir()
    {
        ::unsetenv(lowsync::cli::kOutDirEnv);
        std::filesystem::remove_all(dir_);
    }
    [[nodiscard]] const std::filesystem::path& path() const { return dir_; }

private:
    std::filesystem::path dir_;
};

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

TEST(Cli, MissingSubcommandIsAnError)
{
    const auto r = run({});
    EXPECT_EQ(r.code, lowsync::cli::kExitError);
    EXPECT_FALSE(r.err.empty());
}

TEST(Cli, HelpExitsCleanly)
{
    const auto r = run({"--help"});
    EXPECT_EQ(r.code, lowsync::cli::kExitOk);
    EXPECT_NE(r.out.find("solve"), std::string::npos);
}

TEST(Cli, UnknownMethodPrintsUsage)
{
    const auto r = run({"solve", "heat1", "--method", "householder"});
    EXPECT_EQ(r.code, lowsync::cli::kExitError);
    EXPECT_NE(r.err.find("Usage"), std::string::npos);
    EXPECT_TRUE(r.out.empty());
}

TEST(Cli, UnknownProblemAndFormatAreRejected)
{
    EXPECT_EQ(run({"solve", "poisson"}).code, lowsync::cli::kExitError);
    EXPECT_EQ(run({"model", "--format", "png"}).code, lowsync::cli::kExitError);
    EXPECT_EQ(run({"bench", "--format", "svg"}).code, lowsync::cli::kExitError);
    EXPECT_EQ(run({"model", "--phase", "steady"}).code, lowsync::cli::kExitError);
}

TEST(Cli, ModelTableHasFixedHeaderAndFullGrid)
{
    const auto r = run({"model", "--m", "2,5", "--shards", "1,8,64"});
    ASSERT_EQ(r.code, lowsync::cli::kExitOk) << r.err;
    const auto rows = parse_csv(r.out);
    ASSERT_FALSE(rows.empty());
    EXPECT_EQ(rows[0], (std::vector<std::string>{"method", "m", "p", "phase", "syncs", "predicted_seconds"}));
    EXPECT_EQ(rows.size(), 1 + 4 * 2 * 2 * 3);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i][0] == "mgs" && rows[i][1] == "5" && rows[i][3] == "startup") {
            EXPECT_EQ(rows[i][4], "15");
        }
        if (rows[i][0] == "dcgs2" && rows[i][3] == "recycle") {
            EXPECT_EQ(rows[i][4], "2");
        }
    }
}

TEST(Cli, CrossoversInLatencyLimit)
{
    const auto r = run({"model", "--crossovers", "--shards", "16", "--flop-rate", "1e30", "--phase", "recycle"});
    ASSERT_EQ(r.code, lowsync::cli::kExitOk) << r.err;
    const auto rows = parse_csv(r.out);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"method_a", "method_b", "p", "phase", "crossover_m"}));
    int found = 0;
    for (const auto& row : rows) {
        if (row[1] != "mgs") {
            continue;
        }
        if (row[0] == "icwy" || row[0] == "dcgs2") {
            EXPECT_EQ(row[4], "3");
            ++found;
        }
        if (row[0] == "cgs2") {
            EXPECT_EQ(row[4], "4");
            ++found;
        }
    }
    EXPECT_EQ(found, 3);
}

TEST(Cli, BenchMeasurementsMatchModel)
{
    const auto r = run({"bench", "--m", "2,6", "--shards", "1,4", "--n", "256"});
    ASSERT_EQ(r.code, lowsync::cli::kExitOk) << r.err;
    const auto rows = parse_csv(r.out);
    ASSERT_EQ(rows.size(), 1 + 4 * 2 * 2 * 2);
    EXPECT_EQ(rows[0].back(), "match");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i].back(), "1") << rows[i][0] << " m=" << rows[i][1];
        EXPECT_EQ(rows[i][4], rows[i][6]);
        EXPECT_EQ(rows[i][5], rows[i][7]);
    }
}

TEST(Cli, OrthoRowsRespectBounds)
{
    const auto r = run({"ortho", "--n", "120", "--m", "8", "--kappa", "10,1e4"});
    ASSERT_EQ(r.code, lowsync::cli::kExitOk) << r.err;
    const auto rows = parse_csv(r.out);
    ASSERT_EQ(rows.size(), 1 + 4 * 2);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"method", "kappa", "loo", "bound", "within_bound"}));
    for (std::size_t i = 1; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i][4], "1") << rows[i][0] << " kappa=" << rows[i][1];
    }
}

TEST(Cli, SolveWritesIterationAndSummaryRows)
{
    const auto r = run({"solve", "heat1", "--grid", "16", "--m", "3", "--tol", "1e-8", "--shards", "2"});
    ASSERT_EQ(r.code, lowsync::cli::kExitOk) << r.err;
    const auto rows = parse_csv(r.out);
    ASSERT_GE(rows.size(), 3U);
    EXPECT_EQ(rows[0].size(), 17U);
    EXPECT_EQ(rows[0][0], "kind");
    EXPECT_EQ(rows.back()[0], "summary");
    EXPECT_EQ(rows.back()[9], "1");
    EXPECT_EQ(rows.back()[1], std::to_string(rows.size() - 2));
    for (std::size_t i = 1; i + 1 < rows.size(); ++i) {
        EXPECT_EQ(rows[i][0], "iter");
        EXPECT_EQ(rows[i][1], std::to_string(i));
        EXPECT_EQ(rows[i].size(), 17U);
    }
}

TEST(Cli, NonconvergenceExitCode)
{
    const auto r = run({"solve", "bratu", "--grid", "16", "--m", "2", "--max-iters", "2"});
    EXPECT_EQ(r.code, lowsync::cli::kExitNotConverged);
    const auto rows = parse_csv(r.out);
    EXPECT_EQ(rows.back()[9], "0");
}

TEST(Cli, PlainFixedPointWhenDepthIsZero)
{
    const auto aa = parse_csv(run({"solve", "heat1", "--grid", "16", "--m", "4", "--tol", "1e-8"}).out);
    const auto fp = parse_csv(run({"solve", "heat1", "--grid", "16", "--m", "0", "--tol", "1e-8"}).out);
    EXPECT_EQ(fp.back()[3], "0");
    EXPECT_EQ(fp.back()[4], "0");
    EXPECT_GT(std::stoi(fp.back()[1]), std::stoi(aa.back()[1]));
}

TEST(Cli, MixtureSolveRecoversMeans)
{
    const auto r = run({"solve", "em", "--m", "3", "--tol", "1e-8", "--em-replicas", "50", "--max-iters", "200"});
    ASSERT_EQ(r.code, lowsync::cli::kExitOk) << r.err;
    const auto summary = parse_csv(r.out).back();
    EXPECT_NEAR(std::stod(summary[14]), 0.0, 0.25);
    EXPECT_NEAR(std::stod(summary[15]), 0.5, 0.25);
    EXPECT_NEAR(std::stod(summary[16]), 1.0, 0.25);
}

TEST(Cli, OutputIsDeterministic)
{
    const std::vector<std::string> args{"solve", "bratu", "--grid", "12", "--m", "4", "--shards", "3"};
    EXPECT_EQ(run(args).out, run(args).out);
    EXPECT_EQ(run({"model", "--format", "svg"}).out, run({"model", "--format", "svg"}).out);
}

TEST(Cli, SvgDocumentShape)
{
    const auto r = run({"solve", "heat1", "--grid", "12", "--format", "svg"});
    ASSERT_EQ(r.code, lowsync::cli::kExitOk);
    EXPECT_EQ(r.out.rfind("<?xml", 0), 0U);
    EXPECT_NE(r.out.find("<svg"), std::string::npos);
    EXPECT_NE(r.out.find("<polyline"), std::string::npos);
    EXPECT_EQ(r.out.substr(r.out.size() - 7), "</svg>\n");
}

TEST(Cli, EnvironmentDirectoryReceivesDefaultName)
{
    const ScopedOutDir dir;
    const auto r = run({"model", "--m", "3"});
    ASSERT_EQ(r.code, lowsync::cli::kExitOk) << r.err;
    EXPECT_TRUE(r.out.empty());
    const auto written = slurp(dir.path() / "model.csv");
    EXPECT_EQ(written.rfind("method,m,p,phase,syncs,predicted_seconds\n", 0), 0U);

    const auto explicit_path = dir.path() / "chosen.csv";
    ASSERT_EQ(run({"model", "--m", "3", "--out", explicit_path.string()}).code, lowsync::cli::kExitOk);
    EXPECT_EQ(slurp(explicit_path), written);
}

TEST(Cli, UnwritableOutputIsAnError)
{
    const auto r = run({"model", "--out", "/nonexistent-dir/x/model.csv"});
    EXPECT_EQ(r.code, lowsync::cli::kExitError);
    EXPECT_NE(r.err.find("cannot open"), std::string::npos);
}
