#include "lowsync/problems.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace lowsync {

void Grid2D::validate() const
{
    if (nx < 2 || ny < 2) {
        throw std::invalid_argument("Grid2D: need at least 2 interior points per dimension");
    }
}

namespace {

void stencil(const Grid2D& grid, std::span<const double> u, std::span<double> v)
{
    const double cx = 1.0 / (grid.hx() * grid.hx());
    const double cy = 1.0 / (grid.hy() * grid.hy());
    const double diag = 2.0 * cx + 2.0 * cy;
    const std::size_t nx = grid.nx;
    const std::size_t ny = grid.ny;
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            const std::size_t k = j * nx + i;
            double acc = diag * u[k];
            if (i > 0) acc -= cx * u[k - 1];
            if (i + 1 < nx) acc -= cx * u[k + 1];
            if (j > 0) acc -= cy * u[k - nx];
            if (j + 1 < ny) acc -= cy * u[k + nx];
            v[k] = acc;
        }
    }
}

LayoutPtr grid_layout(const Grid2D& grid, std::size_t shards)
{
    grid.validate();
    return ShardLayout::make(grid.size(), shards);
}

} // namespace

DistVector apply_neg_laplacian(const Grid2D& grid, const DistVector& u)
{
    grid.validate();
    if (u.size() != grid.size()) {
        throw LayoutMismatch("apply_neg_laplacian: vector length differs from grid size");
    }
    DistVector v(u.layout());
    stencil(grid, u.values(), v.values());
    return v;
}

NegLaplacian::NegLaplacian(Grid2D grid, LayoutPtr layout) : grid_(grid), layout_(std::move(layout))
{
    grid_.validate();
    if (layout_->size() != grid_.size()) {
        throw LayoutMismatch("NegLaplacian: layout length differs from grid size");
    }
}

void NegLaplacian::apply(const DistVector& x, DistVector& y) const
{
    if (!same_layout(x, y) || x.size() != grid_.size()) {
        throw LayoutMismatch("NegLaplacian::apply: layout mismatch");
    }
    stencil(grid_, x.values(), y.values());
}

DistVector NegLaplacian::diagonal() const
{
    DistVector d(layout_);
    d.fill(2.0 / (grid_.hx() * grid_.hx()) + 2.0 / (grid_.hy() * grid_.hy()));
    return d;
}

// ---------------------------------------------------------------------------
// heat

double heat_reaction(HeatTerm term, double u)
{
    switch (term) {
    case HeatTerm::term1: {
        const double eu = std::exp(u);
        const double d = u - eu;
        return u + u * eu + u / eu + d * d;
    }
    case HeatTerm::term2: return 100.0 * (u - u * u);
    }
    throw std::invalid_argument("heat_reaction: unknown term");
}

double heat_exact(double x, double y)
{
    const double sx = std::sin(std::numbers::pi * x);
    const double sy = std::sin(std::numbers::pi * y);
    return sx * sx * sy * sy;
}

DistVector heat_forcing(const Grid2D& grid, HeatTerm term, const LayoutPtr& layout)
{
    grid.validate();
    if (layout->size() != grid.size()) {
        throw LayoutMismatch("heat_forcing: layout length differs from grid size");
    }
    constexpr double two_pi_sq = 2.0 * std::numbers::pi * std::numbers::pi;
    DistVector f(layout);
    for (std::size_t j = 0; j < grid.ny; ++j) {
        const double y = grid.y(j);
        const double cy = std::cos(std::numbers::pi * y);
        const double sy = std::sin(std::numbers::pi * y);
        for (std::size_t i = 0; i < grid.nx; ++i) {
            const double x = grid.x(i);
            const double cx = std::cos(std::numbers::pi * x);
            const double sx = std::sin(std::numbers::pi * x);
            const double laplacian = two_pi_sq * (cx * cx - sx * sx) * sy * sy
                                     + two_pi_sq * (cy * cy - sy * sy) * sx * sx;
            f[grid.index(i, j)] = laplacian + heat_reaction(term, heat_exact(x, y));
        }
    }
    return f;
}

HeatProblem::HeatProblem(Grid2D grid, HeatTerm term, std::size_t shards, PCGConfig pcg)
    : grid_(grid),
      term_(term),
      layout_(grid_layout(grid, shards)),
      op_(grid, layout_),
      forcing_(heat_forcing(grid, term, layout_)),
      pcg_(pcg)
{
}

DistVector HeatProblem::exact_solution() const
{
    DistVector u(layout_);
    for (std::size_t j = 0; j < grid_.ny; ++j) {
        for (std::size_t i = 0; i < grid_.nx; ++i) {
            u[grid_.index(i, j)] = heat_exact(grid_.x(i), grid_.y(j));
        }
    }
    return u;
}

void HeatProblem::eval(const DistVector& u, DistVector& gu, ReductionLedger& ledger) const
{
    DistVector rhs(layout_);
    const auto uv = u.values();
    const auto fv = forcing_.values();
    auto bv = rhs.values();
    for (std::size_t k = 0; k < bv.size(); ++k) {
        bv[k] = heat_reaction(term_, uv[k]) - fv[k];
    }
    // warm start from the current iterate
    auto solved = pcg_solve(op_, rhs, pcg_, u, ledger, Phase::other);
    if (!solved.converged) {
        throw InnerSolveFailure("heat G: inner PCG did not converge (relative residual "
                                + std::to_string(solved.relative_residual) + ")");
    }
    copy(solved.x, gu);
}

// ---------------------------------------------------------------------------
// Bratu

BratuProblem::BratuProblem(Grid2D grid, double lambda, std::size_t shards, PCGConfig pcg)
    : grid_(grid), lambda_(lambda), layout_(grid_layout(grid, shards)), op_(grid, layout_), pcg_(pcg)
{
    if (!(lambda_ >= 0.0)) {
        throw std::invalid_argument("BratuProblem: lambda must be nonnegative");
    }
}

void BratuProblem::eval(const DistVector& u, DistVector& gu, ReductionLedger& ledger) const
{
    DistVector rhs(layout_);
    const auto uv = u.values();
    auto bv = rhs.values();
    for (std::size_t k = 0; k < bv.size(); ++k) {
        bv[k] = lambda_ * std::exp(uv[k]);
        if (!std::isfinite(bv[k])) {
            throw DivergedIterate("Bratu G: exp(u) overflowed");
        }
    }
    auto solved = pcg_solve(op_, rhs, pcg_, u, ledger, Phase::other);
    if (!solved.converged) {
        throw InnerSolveFailure("Bratu G: inner PCG did not converge (relative residual "
                                + std::to_string(solved.relative_residual) + ")");
    }
    copy(solved.x, gu);
}

// ---------------------------------------------------------------------------
// EM mixture

void MixtureConfig::validate() const
{
    double total = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        if (!(alphas[i] >= 0.0)) {
            throw std::invalid_argument("MixtureConfig: mixture proportions must be nonnegative");
        }
        if (!(sigmas[i] > 0.0)) {
            throw std::invalid_argument("MixtureConfig: standard deviations must be positive");
        }
        total += alphas[i];
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw std::invalid_argument("MixtureConfig: mixture proportions must sum to one");
    }
    if (samples < 1) {
        throw std::invalid_argument("MixtureConfig: need at least one sample");
    }
    if (replicas < 1) {
        throw std::invalid_argument("MixtureConfig: need at least one replica");
    }
}

std::vector<double> gen_samples(const MixtureConfig& config, std::uint64_t seed)
{
    config.validate();
    std::mt19937_64 rng(seed);
    std::discrete_distribution<int> component({config.alphas[0], config.alphas[1], config.alphas[2]});
    std::normal_distribution<double> standard;
    std::vector<double> out(config.samples);
    for (auto& x : out) {
        const auto c = static_cast<std::size_t>(component(rng));
        x = config.true_means[c] + config.sigmas[c] * standard(rng);
    }
    return out;
}

MixtureProblem::MixtureProblem(MixtureConfig config, std::size_t shards)
    : config_(config),
      layout_(ShardLayout::make(3 * config.replicas, shards)),
      samples_(gen_samples(config, config.seed))
{
}

Triple MixtureProblem::em_update(const Triple& means) const
{
    Triple scale{};
    Triple inv_two_var{};
    for (std::size_t i = 0; i < 3; ++i) {
        scale[i] = config_.alphas[i] / config_.sigmas[i];
        inv_two_var[i] = 0.5 / (config_.sigmas[i] * config_.sigmas[i]);
    }
    Triple num{};
    Triple den{};
    for (const double x : samples_) {
        Triple w{};
        double p = 0.0;
        for (std::size_t i = 0; i < 3; ++i) {
            const double d = x - means[i];
            w[i] = scale[i] * std::exp(-d * d * inv_two_var[i]);
            p += w[i];
        }
        if (!(p > 0.0)) {
            continue;
        }
        for (std::size_t i = 0; i < 3; ++i) {
            const double resp = w[i] / p;
            num[i] += x * resp;
            den[i] += resp;
        }
    }
    Triple out{};
    for (std::size_t i = 0; i < 3; ++i) {
        if (!(den[i] > 0.0)) {
            throw std::runtime_error("EM G: vanishing responsibility sum for component " + std::to_string(i + 1));
        }
        out[i] = num[i] / den[i];
    }
    return out;
}

DistVector MixtureProblem::replicate(const Triple& means) const
{
    DistVector v(layout_);
    auto vals = v.values();
    for (std::size_t k = 0; k < vals.size(); ++k) {
        vals[k] = means[k % 3];
    }
    return v;
}

void MixtureProblem::eval(const DistVector& u, DistVector& gu, ReductionLedger&) const
{
    if (!(*u.layout() == *layout_) || !same_layout(u, gu)) {
        throw LayoutMismatch("EM G: layout mismatch");
    }
    const Triple updated = em_update({u[0], u[1], u[2]});
    auto out = gu.values();
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = updated[k % 3];
    }
}

} // namespace lowsync
