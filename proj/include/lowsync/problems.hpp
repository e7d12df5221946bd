#ifndef LOWSYNC_PROBLEMS_HPP
#define LOWSYNC_PROBLEMS_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "lowsync/anderson.hpp"
#include "lowsync/pcg.hpp"

namespace lowsync {

/// Interior nodes of the unit square with zero Dirichlet boundary, ordered
/// row-major (x fastest). Node (i, j) sits at ((i+1)·hx, (j+1)·hy).
struct Grid2D {
    std::size_t nx = 2;
    std::size_t ny = 2;

    [[nodiscard]] double hx() const noexcept { return 1.0 / static_cast<double>(nx + 1); }
    [[nodiscard]] double hy() const noexcept { return 1.0 / static_cast<double>(ny + 1); }
    [[nodiscard]] std::size_t size() const noexcept { return nx * ny; }
    [[nodiscard]] std::size_t index(std::size_t i, std::size_t j) const noexcept { return j * nx + i; }
    [[nodiscard]] double x(std::size_t i) const noexcept { return static_cast<double>(i + 1) * hx(); }
    [[nodiscard]] double y(std::size_t j) const noexcept { return static_cast<double>(j + 1) * hy(); }

    void validate() const;
};

/// v = (−Δ_h)u with the 5-point stencil.
DistVector apply_neg_laplacian(const Grid2D& grid, const DistVector& u);

/// −Δ_h as an SPD LinearOperator.
class NegLaplacian final : public LinearOperator {
public:
    NegLaplacian(Grid2D grid, LayoutPtr layout);

    [[nodiscard]] LayoutPtr layout() const override { return layout_; }
    void apply(const DistVector& x, DistVector& y) const override;
    [[nodiscard]] DistVector diagonal() const override;

private:
    Grid2D grid_;
    LayoutPtr layout_;
};

/// Inner linear solve did not reach its tolerance.
class InnerSolveFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The iterate overflowed the nonlinear term.
class DivergedIterate : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class HeatTerm { term1, term2 };

/// term1: c(u) = u + u·eᵘ + u·e⁻ᵘ + (u − eᵘ)²;  term2: c(u) = 100·(u − u²).
double heat_reaction(HeatTerm term, double u);

/// Manufactured solution sin²(πx)·sin²(πy).
double heat_exact(double x, double y);

/// f = Δu_exact + c(u_exact) sampled at the interior nodes.
DistVector heat_forcing(const Grid2D& grid, HeatTerm term, const LayoutPtr& layout);

/// u_xx + u_yy + c(u) = f recast as u = G(u), G(u) = (−Δ_h)⁻¹(c(u) − f).
class HeatProblem final : public FixedPointProblem {
public:
    HeatProblem(Grid2D grid, HeatTerm term, std::size_t shards = 1, PCGConfig pcg = {});

    [[nodiscard]] LayoutPtr layout() const override { return layout_; }
    void eval(const DistVector& u, DistVector& gu, ReductionLedger& ledger) const override;

    [[nodiscard]] const Grid2D& grid() const noexcept { return grid_; }
    [[nodiscard]] HeatTerm term() const noexcept { return term_; }
    [[nodiscard]] const DistVector& forcing() const noexcept { return forcing_; }
    [[nodiscard]] const NegLaplacian& laplacian() const noexcept { return op_; }
    [[nodiscard]] DistVector exact_solution() const;

private:
    Grid2D grid_;
    HeatTerm term_;
    LayoutPtr layout_;
    NegLaplacian op_;
    DistVector forcing_;
    PCGConfig pcg_;
};

/// u_xx + u_yy + λeᵘ = 0 recast as G(u) = (−Δ_h)⁻¹(λeᵘ).
class BratuProblem final : public FixedPointProblem {
public:
    BratuProblem(Grid2D grid, double lambda, std::size_t shards = 1, PCGConfig pcg = {});

    [[nodiscard]] LayoutPtr layout() const override { return layout_; }
    void eval(const DistVector& u, DistVector& gu, ReductionLedger& ledger) const override;

    [[nodiscard]] const Grid2D& grid() const noexcept { return grid_; }
    [[nodiscard]] double lambda() const noexcept { return lambda_; }
    [[nodiscard]] const NegLaplacian& laplacian() const noexcept { return op_; }

private:
    Grid2D grid_;
    double lambda_;
    LayoutPtr layout_;
    NegLaplacian op_;
    PCGConfig pcg_;
};

using Triple = std::array<double, 3>;

struct MixtureConfig {
    Triple alphas{0.3, 0.3, 0.4};
    Triple sigmas{1.0, 1.0, 1.0};
    Triple true_means{0.0, 0.5, 1.0};
    std::size_t samples = 100000;
    /// Copies of the mean triple in the global vector.
    std::size_t replicas = 500000;
    std::uint64_t seed = 20210913;
    Triple initial_means{0.2, 0.4, 0.6};

    void validate() const;
};

/// Unlabeled draws from the three-component normal mixture.
std::vector<double> gen_samples(const MixtureConfig& config, std::uint64_t seed);

/// EM update of the three means with known proportions and deviations,
/// replicated over every triple of the global vector.
class MixtureProblem final : public FixedPointProblem {
public:
    explicit MixtureProblem(MixtureConfig config, std::size_t shards = 1);

    [[nodiscard]] LayoutPtr layout() const override { return layout_; }
    void eval(const DistVector& u, DistVector& gu, ReductionLedger& ledger) const override;

    /// One EM step on a bare mean triple.
    [[nodiscard]] Triple em_update(const Triple& means) const;
    [[nodiscard]] DistVector replicate(const Triple& means) const;
    [[nodiscard]] DistVector initial_guess() const { return replicate(config_.initial_means); }

    [[nodiscard]] const MixtureConfig& config() const noexcept { return config_; }
    [[nodiscard]] const std::vector<double>& samples() const noexcept { return samples_; }

private:
    MixtureConfig config_;
    LayoutPtr layout_;
    std::vector<double> samples_;
};

} // namespace lowsync

#endif
