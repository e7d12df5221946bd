#ifndef LOWSYNC_VECTOR_HPP
#define LOWSYNC_VECTOR_HPP

#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "lowsync/exact_sum.hpp"

namespace lowsync {

/// Bookkeeping category of a global reduction.
enum class Phase : std::uint8_t { qradd, qrdelete, lsp_rhs, norm_check, other };

inline constexpr std::size_t kPhaseCount = 5;
inline constexpr std::array<Phase, kPhaseCount> kAllPhases = {
    Phase::qradd, Phase::qrdelete, Phase::lsp_rhs, Phase::norm_check, Phase::other};

std::string_view to_string(Phase phase) noexcept;

class LayoutMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Row-wise partition of n entries over p shards: each shard owns n/p
/// contiguous rows, the first n%p shards own one extra row.
class ShardLayout {
public:
    static std::shared_ptr<const ShardLayout> make(std::size_t n, std::size_t p);

    [[nodiscard]] std::size_t size() const noexcept { return boundaries_.back(); }
    [[nodiscard]] std::size_t shards() const noexcept { return boundaries_.size() - 1; }
    [[nodiscard]] std::size_t begin(std::size_t shard) const { return boundaries_.at(shard); }
    [[nodiscard]] std::size_t end(std::size_t shard) const { return boundaries_.at(shard + 1); }
    [[nodiscard]] std::span<const std::size_t> boundaries() const noexcept { return boundaries_; }

    friend bool operator==(const ShardLayout&, const ShardLayout&) = default;

private:
    explicit ShardLayout(std::vector<std::size_t> boundaries) : boundaries_(std::move(boundaries)) {}
    std::vector<std::size_t> boundaries_;
};

using LayoutPtr = std::shared_ptr<const ShardLayout>;

/// Immutable copy of the ledger counters.
struct LedgerSnapshot {
    std::array<std::uint64_t, kPhaseCount> counts{};

    [[nodiscard]] std::uint64_t operator[](Phase phase) const noexcept
    {
        return counts[static_cast<std::size_t>(phase)];
    }
    [[nodiscard]] std::uint64_t total() const noexcept;

    friend LedgerSnapshot operator-(const LedgerSnapshot& a, const LedgerSnapshot& b) noexcept;
    friend bool operator==(const LedgerSnapshot&, const LedgerSnapshot&) = default;
};

/// Counts global reductions per phase. Increments are atomic; the counters
/// only grow until reset().
class ReductionLedger {
public:
    ReductionLedger() = default;
    ReductionLedger(const ReductionLedger&) = delete;
    ReductionLedger& operator=(const ReductionLedger&) = delete;

    void record(Phase phase) noexcept
    {
        counts_[static_cast<std::size_t>(phase)].fetch_add(1, std::memory_order_relaxed);
    }
    [[nodiscard]] std::uint64_t count(Phase phase) const noexcept
    {
        return counts_[static_cast<std::size_t>(phase)].load(std::memory_order_relaxed);
    }
    [[nodiscard]] std::uint64_t total() const noexcept;
    [[nodiscard]] LedgerSnapshot snapshot() const noexcept;
    void reset() noexcept;

private:
    std::array<std::atomic<std::uint64_t>, kPhaseCount> counts_{};
};

/// A real vector partitioned row-wise over the shards of a ShardLayout.
class DistVector {
public:
    explicit DistVector(LayoutPtr layout);
    DistVector(LayoutPtr layout, std::vector<double> values);

    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] const LayoutPtr& layout() const noexcept { return layout_; }
    [[nodiscard]] std::span<double> values() noexcept { return values_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] std::span<double> shard(std::size_t s);
    [[nodiscard]] std::span<const double> shard(std::size_t s) const;

    double& operator[](std::size_t i) noexcept { return values_[i]; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }

    void fill(double value) noexcept;

private:
    LayoutPtr layout_;
    std::vector<double> values_;
};

[[nodiscard]] bool same_layout(const DistVector& a, const DistVector& b) noexcept;

/// Local partial sums of one or more multi-dot batches whose global reduction
/// has not happened yet. finalize() performs the single counted reduction.
///
/// Destroying an unfinalized reduction is a contract violation and is routed
/// to the unfinalized-reduction handler (which aborts by default).
class PendingReduction {
public:
    PendingReduction(PendingReduction&& other) noexcept;
    PendingReduction& operator=(PendingReduction&&) = delete;
    PendingReduction(const PendingReduction&) = delete;
    PendingReduction& operator=(const PendingReduction&) = delete;
    ~PendingReduction();

    /// Adds the partial sums of colsᵀv; no reduction is counted.
    void append(std::span<const DistVector> cols, const DistVector& v);

    /// One global reduction over every appended batch, in append order.
    std::vector<double> finalize(ReductionLedger& ledger);

    [[nodiscard]] Phase phase() const noexcept { return phase_; }
    [[nodiscard]] std::size_t width() const noexcept { return width_; }
    [[nodiscard]] bool finalized() const noexcept { return finalized_; }

private:
    friend PendingReduction begin_delayed_multi_dot(std::span<const DistVector>, const DistVector&, Phase);
    PendingReduction(LayoutPtr layout, Phase phase);

    LayoutPtr layout_;
    Phase phase_;
    std::size_t width_ = 0;
    // partials_[shard][column]
    std::vector<std::vector<ExactAccumulator>> partials_;
    bool finalized_ = false;
    bool moved_from_ = false;
};

using UnfinalizedHandler = std::function<void(Phase)>;

/// Installs the handler invoked when a PendingReduction dies unfinalized and
/// returns the previous one. An empty handler restores the aborting default.
UnfinalizedHandler set_unfinalized_handler(UnfinalizedHandler handler);

double dot(const DistVector& a, const DistVector& b, ReductionLedger& ledger, Phase phase);
std::vector<double> fused_multi_dot(std::span<const DistVector> cols, const DistVector& v,
                                    ReductionLedger& ledger, Phase phase);
PendingReduction begin_delayed_multi_dot(std::span<const DistVector> cols, const DistVector& v, Phase phase);
std::vector<double> finalize(PendingReduction& pending, ReductionLedger& ledger);
double norm2(const DistVector& v, ReductionLedger& ledger, Phase phase);

/// v ← v − Σ_j coeffs[j]·cols[j]. Shard-local.
void gemv_update(DistVector& v, std::span<const DistVector> cols, std::span<const double> coeffs);
/// v ← alpha·v
void scale(DistVector& v, double alpha);
/// y ← alpha·x + y
void axpy(double alpha, const DistVector& x, DistVector& y);
/// dst ← src
void copy(const DistVector& src, DistVector& dst);
/// z ← a·x + b·y
void linear_sum(double a, const DistVector& x, double b, const DistVector& y, DistVector& z);

/// Uncounted, correctly rounded dot product for diagnostics and oracles.
double exact_dot(std::span<const double> a, std::span<const double> b);

} // namespace lowsync

#endif
