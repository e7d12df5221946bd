#ifndef LOWSYNC_EXACT_SUM_HPP
#define LOWSYNC_EXACT_SUM_HPP

#include <array>
#include <bit>
#include <cstdint>

namespace lowsync {

__extension__ using uint128_t = unsigned __int128;

/// Fixed-point accumulator covering the full binary64 range.
///
/// Every finite double is added without rounding, so the accumulated value
/// is independent of the order and grouping of the additions. Rounding
/// happens once, in to_double(), which returns the correctly rounded
/// (nearest-even) result. Shard partials built from these accumulators
/// therefore merge into bitwise-identical sums for any shard count.
class ExactAccumulator {
public:
    void add(double x) noexcept
    {
        const auto bits = std::bit_cast<std::uint64_t>(x);
        const auto biased = static_cast<int>((bits >> 52) & 0x7ffU);
        const std::uint64_t frac = bits & ((std::uint64_t{1} << 52) - 1);
        if (biased == 0x7ff) {
            special_ += x;
            has_special_ = true;
            return;
        }
        if (biased == 0 && frac == 0) {
            return;
        }
        // value = mant * 2^(pos - 1074)
        std::uint64_t mant = frac;
        int pos = 0;
        if (biased != 0) {
            mant |= std::uint64_t{1} << 52;
            pos = biased - 1;
        }
        const auto shifted = static_cast<uint128_t>(mant) << (pos & 31);
        const int idx = pos >> 5;
        const auto c0 = static_cast<std::int64_t>(static_cast<std::uint64_t>(shifted) & kMask);
        const auto c1 = static_cast<std::int64_t>(static_cast<std::uint64_t>(shifted >> 32) & kMask);
        const auto c2 = static_cast<std::int64_t>(static_cast<std::uint64_t>(shifted >> 64));
        if (bits >> 63) {
            limbs_[idx] -= c0;
            limbs_[idx + 1] -= c1;
            limbs_[idx + 2] -= c2;
        } else {
            limbs_[idx] += c0;
            limbs_[idx + 1] += c1;
            limbs_[idx + 2] += c2;
        }
        if (++pending_ == kNormalizeEvery) {
            normalize();
        }
    }

    void merge(const ExactAccumulator& other) noexcept
    {
        ExactAccumulator rhs = other;
        rhs.normalize();
        normalize();
        for (std::size_t i = 0; i < kLimbs; ++i) {
            limbs_[i] += rhs.limbs_[i];
        }
        if (rhs.has_special_) {
            special_ += rhs.special_;
            has_special_ = true;
        }
        normalize();
    }

    [[nodiscard]] double to_double() const noexcept;

private:
    static constexpr std::size_t kLimbs = 68;
    static constexpr std::uint64_t kMask = 0xffffffffULL;
    static constexpr std::uint32_t kNormalizeEvery = 1U << 30;

    void normalize() noexcept
    {
        for (std::size_t i = 0; i + 1 < kLimbs; ++i) {
            const std::int64_t carry = limbs_[i] >> 32;
            limbs_[i] -= carry * (std::int64_t{1} << 32);
            limbs_[i + 1] += carry;
        }
        pending_ = 0;
    }

    std::array<std::int64_t, kLimbs> limbs_{};
    std::uint32_t pending_ = 0;
    double special_ = 0.0;
    bool has_special_ = false;
};

} // namespace lowsync

#endif
