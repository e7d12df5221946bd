#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "lowsync/problems.hpp"
#include "oracles.hpp"

using namespace lowsync;
using lowsync::testing::random_vector;

namespace {

constexpr double kPi = std::numbers::pi;

double max_abs(const DistVector& v)
{
    double m = 0.0;
    for (double x : v.values()) {
        m = std::max(m, std::abs(x));
    }
    return m;
}

double norm(const DistVector& v)
{
    return std::sqrt(exact_dot(v.values(), v.values()));
}

/// ‖Δ_h u_exact + c(u_exact) − f‖∞ on an n×n grid.
double manufactured_defect(std::size_t n, HeatTerm term)
{
    const HeatProblem problem(Grid2D{n, n}, term);
    const auto u = problem.exact_solution();
    const auto au = apply_neg_laplacian(problem.grid(), u);
    DistVector defect(problem.layout());
    for (std::size_t k = 0; k < u.size(); ++k) {
        defect[k] = -au[k] + heat_reaction(term, u[k]) - problem.forcing()[k];
    }
    return max_abs(defect);
}

/// ‖G(u_exact) − u_exact‖∞ on an n×n grid.
double fixed_point_defect(std::size_t n, HeatTerm term)
{
    const HeatProblem problem(Grid2D{n, n}, term);
    const auto u = problem.exact_solution();
    DistVector g(problem.layout());
    ReductionLedger ledger;
    problem.eval(u, g, ledger);
    DistVector diff(problem.layout());
    linear_sum(1.0, g, -1.0, u, diff);
    return max_abs(diff);
}

MixtureConfig small_mixture()
{
    MixtureConfig config;
    config.replicas = 16;
    return config;
}

} // namespace

TEST(Grid2D, GeometryAndValidation)
{
    const Grid2D grid{3, 4};
    EXPECT_DOUBLE_EQ(grid.hx(), 0.25);
    EXPECT_DOUBLE_EQ(grid.hy(), 0.2);
    EXPECT_EQ(grid.size(), 12U);
    EXPECT_EQ(grid.index(2, 1), 5U);
    EXPECT_DOUBLE_EQ(grid.x(1), 0.5);
    EXPECT_THROW(Grid2D({1, 4}).validate(), std::invalid_argument);
}

TEST(NegLaplacian, ZeroMapsToZero)
{
    const Grid2D grid{5, 5};
    const auto v = apply_neg_laplacian(grid, DistVector(ShardLayout::make(25, 2)));
    EXPECT_EQ(max_abs(v), 0.0);
}

TEST(NegLaplacian, StencilByHand)
{
    const Grid2D grid{3, 3};
    DistVector u(ShardLayout::make(9, 3));
    u[grid.index(1, 1)] = 1.0;
    const auto v = apply_neg_laplacian(grid, u);
    const double inv_h2 = 16.0;
    EXPECT_DOUBLE_EQ(v[grid.index(1, 1)], 4.0 * inv_h2);
    for (auto [i, j] : {std::pair{0, 1}, {2, 1}, {1, 0}, {1, 2}}) {
        EXPECT_DOUBLE_EQ(v[grid.index(i, j)], -inv_h2);
    }
    for (auto [i, j] : {std::pair{0, 0}, {2, 0}, {0, 2}, {2, 2}}) {
        EXPECT_EQ(v[grid.index(i, j)], 0.0);
    }
}

TEST(NegLaplacian, SineModesAreEigenvectors)
{
    const Grid2D grid{15, 15};
    const double h = grid.hx();
    const auto layout = ShardLayout::make(grid.size(), 4);
    for (auto [k, l] : {std::pair{1, 1}, {2, 3}, {7, 5}, {15, 1}}) {
        DistVector u(layout);
        for (std::size_t j = 0; j < grid.ny; ++j) {
            for (std::size_t i = 0; i < grid.nx; ++i) {
                u[grid.index(i, j)] = std::sin(kPi * k * grid.x(i)) * std::sin(kPi * l * grid.y(j));
            }
        }
        const double lambda =
            4.0 / (h * h) * (std::pow(std::sin(k * kPi * h / 2.0), 2) + std::pow(std::sin(l * kPi * h / 2.0), 2));
        const auto v = apply_neg_laplacian(grid, u);
        for (std::size_t n = 0; n < u.size(); ++n) {
            EXPECT_NEAR(v[n], lambda * u[n], 1e-12 * lambda) << "mode " << k << "," << l;
        }
    }
}

TEST(NegLaplacian, SymmetricPositiveDefinite)
{
    std::mt19937_64 rng(1);
    const Grid2D grid{12, 9};
    const auto layout = ShardLayout::make(grid.size(), 3);
    for (int trial = 0; trial < 10; ++trial) {
        const auto u = random_vector(layout, rng);
        const auto w = random_vector(layout, rng);
        const auto au = apply_neg_laplacian(grid, u);
        const auto aw = apply_neg_laplacian(grid, w);
        const double uaw = exact_dot(u.values(), aw.values());
        const double wau = exact_dot(w.values(), au.values());
        EXPECT_NEAR(uaw, wau, 1e-12 * std::max(std::abs(uaw), 1.0));
        EXPECT_GT(exact_dot(u.values(), au.values()), 0.0);
    }
}

TEST(NegLaplacian, OperatorMatchesFreeFunction)
{
    std::mt19937_64 rng(2);
    const Grid2D grid{7, 6};
    const NegLaplacian op(grid, ShardLayout::make(grid.size(), 2));
    const auto u = random_vector(op.layout(), rng);
    DistVector v(op.layout());
    op.apply(u, v);
    const auto ref = apply_neg_laplacian(grid, u);
    EXPECT_TRUE(std::equal(v.values().begin(), v.values().end(), ref.values().begin()));
    EXPECT_DOUBLE_EQ(op.diagonal()[0], 2.0 * 64.0 + 2.0 * 49.0);
    EXPECT_THROW(apply_neg_laplacian(grid, DistVector(ShardLayout::make(41, 1))), LayoutMismatch);
    EXPECT_THROW(NegLaplacian(grid, ShardLayout::make(41, 1)), LayoutMismatch);
}

TEST(HeatReaction, ReferenceValues)
{
    EXPECT_DOUBLE_EQ(heat_reaction(HeatTerm::term1, 0.0), 1.0);
    const double e = std::numbers::e;
    EXPECT_DOUBLE_EQ(heat_reaction(HeatTerm::term1, 1.0), 1.0 + e + 1.0 / e + (1.0 - e) * (1.0 - e));
    EXPECT_EQ(heat_reaction(HeatTerm::term2, 1.0), 0.0);
    EXPECT_EQ(heat_reaction(HeatTerm::term2, 0.0), 0.0);
    EXPECT_DOUBLE_EQ(heat_reaction(HeatTerm::term2, 0.5), 25.0);
}

TEST(HeatForcing, CenterValue)
{
    const Grid2D grid{3, 3};
    const auto layout = ShardLayout::make(9, 1);
    for (auto term : {HeatTerm::term1, HeatTerm::term2}) {
        const auto f = heat_forcing(grid, term, layout);
        EXPECT_NEAR(f[grid.index(1, 1)], -4.0 * kPi * kPi + heat_reaction(term, 1.0), 1e-12);
    }
}

TEST(HeatForcing, SymmetricUnderTranspose)
{
    const Grid2D grid{11, 11};
    const auto f = heat_forcing(grid, HeatTerm::term1, ShardLayout::make(grid.size(), 1));
    for (std::size_t j = 0; j < grid.ny; ++j) {
        for (std::size_t i = 0; i < grid.nx; ++i) {
            EXPECT_DOUBLE_EQ(f[grid.index(i, j)], f[grid.index(j, i)]);
        }
    }
}

TEST(HeatForcing, ManufacturedSolutionIsSecondOrder)
{
    for (auto term : {HeatTerm::term1, HeatTerm::term2}) {
        const double coarse = manufactured_defect(31, term);
        const double fine = manufactured_defect(63, term);
        EXPECT_GT(coarse / fine, 3.5);
        EXPECT_LT(coarse / fine, 4.5);
    }
}

TEST(HeatProblem, FixedPointDefectShrinksWithMesh)
{
    for (auto term : {HeatTerm::term1, HeatTerm::term2}) {
        const double coarse = fixed_point_defect(31, term);
        const double fine = fixed_point_defect(63, term);
        EXPECT_LT(fine, coarse);
        EXPECT_GT(coarse / fine, 3.0);
        EXPECT_LT(coarse / fine, 5.0);
    }
}

TEST(HeatProblem, VanishingReactionSolvesAgainstForcing)
{
    const HeatProblem problem(Grid2D{16, 16}, HeatTerm::term2, 2);
    DistVector u(problem.layout());
    u.fill(1.0);
    DistVector g(problem.layout());
    ReductionLedger ledger;
    problem.eval(u, g, ledger);
    const auto ag = apply_neg_laplacian(problem.grid(), g);
    DistVector r(problem.layout());
    linear_sum(1.0, ag, 1.0, problem.forcing(), r);
    EXPECT_LE(norm(r), 1e-10 * norm(problem.forcing()));
}

TEST(HeatProblem, EvaluationOnlyChargesInnerSolvePhase)
{
    const HeatProblem problem(Grid2D{10, 12}, HeatTerm::term1, 3);
    DistVector g(problem.layout());
    ReductionLedger ledger;
    problem.eval(DistVector(problem.layout()), g, ledger);
    EXPECT_GT(ledger.count(Phase::other), 0U);
    EXPECT_EQ(ledger.total(), ledger.count(Phase::other));
}

TEST(HeatProblem, InnerSolveFailureIsReported)
{
    const HeatProblem problem(Grid2D{32, 32}, HeatTerm::term1, 1, PCGConfig{.max_iters = 2});
    DistVector g(problem.layout());
    ReductionLedger ledger;
    EXPECT_THROW(problem.eval(DistVector(problem.layout()), g, ledger), InnerSolveFailure);
}

TEST(BratuProblem, ConstantSourceAtZero)
{
    const double lambda = 6.7;
    const BratuProblem problem(Grid2D{12, 12}, lambda, 2);
    DistVector g(problem.layout());
    ReductionLedger ledger;
    problem.eval(DistVector(problem.layout()), g, ledger);
    const auto ag = apply_neg_laplacian(problem.grid(), g);
    DistVector src(problem.layout());
    src.fill(lambda);
    DistVector r(problem.layout());
    linear_sum(1.0, ag, -1.0, src, r);
    EXPECT_LE(norm(r), 1e-10 * norm(src));
    EXPECT_EQ(ledger.total(), ledger.count(Phase::other));
}

TEST(BratuProblem, ZeroLambdaGivesZero)
{
    const BratuProblem problem(Grid2D{8, 8}, 0.0);
    std::mt19937_64 rng(3);
    DistVector g(problem.layout());
    ReductionLedger ledger;
    problem.eval(random_vector(problem.layout(), rng), g, ledger);
    EXPECT_EQ(max_abs(g), 0.0);
}

TEST(BratuProblem, OverflowIsADivergedIterate)
{
    const BratuProblem problem(Grid2D{4, 4}, 1.0);
    DistVector u(problem.layout());
    u.fill(1000.0);
    DistVector g(problem.layout());
    ReductionLedger ledger;
    EXPECT_THROW(problem.eval(u, g, ledger), DivergedIterate);
    EXPECT_THROW(BratuProblem(Grid2D{4, 4}, -1.0), std::invalid_argument);
}

TEST(BratuProblem, ConvergedSolutionSatisfiesDiscreteEquation)
{
    const double lambda = 6.7;
    const double tol = 1e-10;
    const BratuProblem problem(Grid2D{24, 24}, lambda, 2);
    ReductionLedger ledger;
    const auto result = aa_solve(problem, AAConfig{.m = 10, .tol = tol, .max_iters = 200},
                                 DistVector(problem.layout()), ledger);
    ASSERT_TRUE(result.converged);
    const auto ax = apply_neg_laplacian(problem.grid(), result.x);
    DistVector src(problem.layout());
    for (std::size_t k = 0; k < src.size(); ++k) {
        src[k] = lambda * std::exp(result.x[k]);
    }
    DistVector r(problem.layout());
    linear_sum(1.0, ax, -1.0, src, r);
    EXPECT_LE(norm(r), 10.0 * tol * norm(src));
}

TEST(Mixture, ConfigValidation)
{
    EXPECT_NO_THROW(MixtureConfig{}.validate());
    auto bad = MixtureConfig{};
    bad.alphas = {0.5, 0.5, 0.5};
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = MixtureConfig{};
    bad.alphas = {1.2, -0.1, -0.1};
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = MixtureConfig{};
    bad.sigmas = {1.0, 0.0, 1.0};
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = MixtureConfig{};
    bad.samples = 0;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = MixtureConfig{};
    bad.replicas = 0;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Mixture, SampleMeanMatchesMixtureMean)
{
    const MixtureConfig config;
    const auto samples = gen_samples(config, 12345);
    ASSERT_EQ(samples.size(), 100000U);
    double mean = 0.0;
    for (double x : samples) {
        mean += x;
    }
    mean /= static_cast<double>(samples.size());
    // population variance: Σα(σ² + μ²) − 0.55²
    const double sd = std::sqrt(1.0 + 0.3 * 0.25 + 0.4 * 1.0 - 0.55 * 0.55);
    EXPECT_NEAR(mean, 0.55, 3.0 * sd / std::sqrt(1e5));
}

TEST(Mixture, SamplesReproducibleBySeed)
{
    MixtureConfig config;
    config.samples = 1000;
    const auto a = gen_samples(config, 7);
    const auto b = gen_samples(config, 7);
    const auto c = gen_samples(config, 8);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, c);
}

TEST(Mixture, EqualMeansGiveUnimodalSample)
{
    MixtureConfig config;
    config.true_means = {0.5, 0.5, 0.5};
    const auto samples = gen_samples(config, 9);
    std::array<int, 10> bins{};
    for (double x : samples) {
        const double t = (x - 0.5 + 3.0) / 0.6;
        if (t >= 0.0 && t < 10.0) {
            ++bins[static_cast<std::size_t>(t)];
        }
    }
    for (std::size_t b = 1; b < 5; ++b) {
        EXPECT_GT(bins[b], bins[b - 1]);
    }
    for (std::size_t b = 5; b < 10; ++b) {
        EXPECT_LT(bins[b], bins[b - 1]);
    }
}

TEST(Mixture, SymmetricStartGivesSampleMean)
{
    const MixtureProblem problem(small_mixture());
    double mean = 0.0;
    for (double x : problem.samples()) {
        mean += x;
    }
    mean /= static_cast<double>(problem.samples().size());
    const auto updated = problem.em_update({0.3, 0.3, 0.3});
    for (double mu : updated) {
        EXPECT_NEAR(mu, mean, 1e-10);
    }
}

TEST(Mixture, EvaluationIsReplicatedAndFree)
{
    const MixtureProblem problem(small_mixture(), 4);
    ASSERT_EQ(problem.dimension(), 48U);
    DistVector g(problem.layout());
    ReductionLedger ledger;
    problem.eval(problem.initial_guess(), g, ledger);
    EXPECT_EQ(ledger.total(), 0U);
    const auto direct = problem.em_update({0.2, 0.4, 0.6});
    for (std::size_t k = 0; k < g.size(); ++k) {
        EXPECT_EQ(g[k], direct[k % 3]);
    }
}

TEST(Mixture, VanishingComponentIsAnError)
{
    auto config = small_mixture();
    config.alphas = {0.5, 0.5, 0.0};
    const MixtureProblem problem(config);
    EXPECT_THROW((void)problem.em_update({0.0, 0.5, 1.0}), std::runtime_error);
}

TEST(Mixture, AcceleratedSolveReachesSelfConsistentMeans)
{
    const MixtureProblem problem(small_mixture(), 2);
    ReductionLedger ledger;
    const double tol = 1e-8;
    const auto aa = aa_solve(problem, AAConfig{.m = 3, .tol = tol, .max_iters = 200}, problem.initial_guess(), ledger);
    ASSERT_TRUE(aa.converged);
    const Triple means{aa.x[0], aa.x[1], aa.x[2]};
    const auto again = problem.em_update(means);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_LT(std::abs(again[i] - means[i]), tol);
        EXPECT_NEAR(means[i], problem.config().true_means[i], 0.25);
    }
    // every replica carries the same triple
    for (std::size_t k = 3; k < aa.x.size(); ++k) {
        EXPECT_EQ(aa.x[k], aa.x[k % 3]);
    }

    const auto fp = fp_solve(problem, AAConfig{.tol = tol, .max_iters = 5000}, problem.initial_guess(), ledger);
    EXPECT_GT(fp.iterations, aa.iterations);
}
