#include "lowsync/exact_sum.hpp"

#include <cmath>
#include <limits>

namespace lowsync {

double ExactAccumulator::to_double() const noexcept
{
    if (has_special_) {
        return special_;
    }
    ExactAccumulator a = *this;
    a.normalize();
    const bool negative = a.limbs_.back() < 0;
    if (negative) {
        for (auto& limb : a.limbs_) {
            limb = -limb;
        }
        a.normalize();
    }

    int h = static_cast<int>(kLimbs) - 1;
    while (h >= 0 && a.limbs_[static_cast<std::size_t>(h)] == 0) {
        --h;
    }
    if (h < 0) {
        return 0.0;
    }
    if (h == static_cast<int>(kLimbs) - 1) {
        // beyond 2^1070, far outside the binary64 range
        return negative ? -std::numeric_limits<double>::infinity()
                        : std::numeric_limits<double>::infinity();
    }

    const auto bit = [&a](int i) -> std::uint64_t {
        if (i < 0) {
            return 0;
        }
        return static_cast<std::uint64_t>(a.limbs_[static_cast<std::size_t>(i >> 5)] >> (i & 31)) & 1U;
    };
    const auto top_limb = static_cast<std::uint64_t>(a.limbs_[static_cast<std::size_t>(h)]);
    const int top = 32 * h + static_cast<int>(std::bit_width(top_limb)) - 1;

    double magnitude = 0.0;
    if (top <= 52) {
        std::uint64_t m = 0;
        for (int i = 0; i <= top; ++i) {
            m |= bit(i) << i;
        }
        magnitude = std::ldexp(static_cast<double>(m), -1074);
    } else {
        const int shift = top - 52;
        std::uint64_t m = 0;
        for (int i = 0; i < 53; ++i) {
            m |= bit(shift + i) << i;
        }
        const std::uint64_t round = bit(shift - 1);
        bool sticky = false;
        for (int i = shift - 2; i >= 0 && !sticky; --i) {
            if ((i & 31) == 31 && a.limbs_[static_cast<std::size_t>(i >> 5)] == 0) {
                i -= 31;
                continue;
            }
            sticky = bit(i) != 0;
        }
        if (round != 0 && (sticky || (m & 1U) != 0)) {
            ++m;
        }
        magnitude = std::ldexp(static_cast<double>(m), shift - 1074);
    }
    return negative ? -magnitude : magnitude;
}

} // namespace lowsync
