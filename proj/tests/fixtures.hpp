// Small deterministic problems shared by the unit and acceptance tests.
#ifndef LOWSYNC_TESTS_FIXTURES_HPP
#define LOWSYNC_TESTS_FIXTURES_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "lowsync/anderson.hpp"

namespace lowsync::testing {

/// G(x) = D x + b with D diagonal, spectrum spread over (−0.95, 0.95).
/// Contractive, so the fixed point (I − D)⁻¹ b is unique.
class LinearDiagonalProblem final : public FixedPointProblem {
public:
    LinearDiagonalProblem(std::size_t n, std::size_t shards, std::uint64_t seed)
        : layout_(ShardLayout::make(n, shards)), d_(layout_), b_(layout_)
    {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal;
        for (std::size_t i = 0; i < n; ++i) {
            d_[i] = 0.95 * std::cos(std::numbers::pi * (static_cast<double>(i) + 0.5) / static_cast<double>(n));
            b_[i] = normal(rng);
        }
    }

    [[nodiscard]] LayoutPtr layout() const override { return layout_; }

    void eval(const DistVector& x, DistVector& gx, ReductionLedger&) const override
    {
        for (std::size_t i = 0; i < x.size(); ++i) {
            gx[i] = d_[i] * x[i] + b_[i];
        }
    }

    [[nodiscard]] DistVector solution() const
    {
        DistVector x(layout_);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = b_[i] / (1.0 - d_[i]);
        }
        return x;
    }

private:
    LayoutPtr layout_;
    DistVector d_;
    DistVector b_;
};

} // namespace lowsync::testing

#endif
