#include "lowsync/vector.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <string>
#include <utility>

namespace lowsync {

namespace {

std::mutex g_handler_mutex;
UnfinalizedHandler g_unfinalized_handler;

void require_same_layout(const DistVector& a, const DistVector& b, const char* op)
{
    if (!same_layout(a, b)) {
        throw LayoutMismatch(std::string(op) + ": operands have different layouts");
    }
}

void require_columns(std::span<const DistVector> cols, const DistVector& v, const char* op)
{
    for (const auto& c : cols) {
        require_same_layout(c, v, op);
    }
}

ExactAccumulator shard_partial(std::span<const double> a, std::span<const double> b)
{
    ExactAccumulator acc;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc.add(a[i] * b[i]);
    }
    return acc;
}

} // namespace

std::string_view to_string(Phase phase) noexcept
{
    switch (phase) {
    case Phase::qradd: return "qradd";
    case Phase::qrdelete: return "qrdelete";
    case Phase::lsp_rhs: return "lsp_rhs";
    case Phase::norm_check: return "norm_check";
    case Phase::other: return "other";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// ShardLayout

std::shared_ptr<const ShardLayout> ShardLayout::make(std::size_t n, std::size_t p)
{
    if (p == 0) {
        throw std::invalid_argument("ShardLayout: shard count must be positive");
    }
    if (p > n) {
        throw std::invalid_argument("ShardLayout: more shards than rows");
    }
    std::vector<std::size_t> bounds(p + 1, 0);
    const std::size_t base = n / p;
    const std::size_t extra = n % p;
    for (std::size_t s = 0; s < p; ++s) {
        bounds[s + 1] = bounds[s] + base + (s < extra ? 1 : 0);
    }
    return std::shared_ptr<const ShardLayout>(new ShardLayout(std::move(bounds)));
}

// ---------------------------------------------------------------------------
// ledger

std::uint64_t LedgerSnapshot::total() const noexcept
{
    std::uint64_t sum = 0;
    for (auto c : counts) {
        sum += c;
    }
    return sum;
}

LedgerSnapshot operator-(const LedgerSnapshot& a, const LedgerSnapshot& b) noexcept
{
    LedgerSnapshot d;
    for (std::size_t i = 0; i < kPhaseCount; ++i) {
        d.counts[i] = a.counts[i] - b.counts[i];
    }
    return d;
}

std::uint64_t ReductionLedger::total() const noexcept
{
    return snapshot().total();
}

LedgerSnapshot ReductionLedger::snapshot() const noexcept
{
    LedgerSnapshot s;
    for (std::size_t i = 0; i < kPhaseCount; ++i) {
        s.counts[i] = counts_[i].load(std::memory_order_relaxed);
    }
    return s;
}

void ReductionLedger::reset() noexcept
{
    for (auto& c : counts_) {
        c.store(0, std::memory_order_relaxed);
    }
}

// ---------------------------------------------------------------------------
// DistVector

DistVector::DistVector(LayoutPtr layout) : layout_(std::move(layout))
{
    if (!layout_) {
        throw std::invalid_argument("DistVector: null layout");
    }
    values_.assign(layout_->size(), 0.0);
}

DistVector::DistVector(LayoutPtr layout, std::vector<double> values)
    : layout_(std::move(layout)), values_(std::move(values))
{
    if (!layout_) {
        throw std::invalid_argument("DistVector: null layout");
    }
    if (values_.size() != layout_->size()) {
        throw LayoutMismatch("DistVector: value count does not match layout");
    }
}

std::span<double> DistVector::shard(std::size_t s)
{
    return std::span<double>(values_).subspan(layout_->begin(s), layout_->end(s) - layout_->begin(s));
}

std::span<const double> DistVector::shard(std::size_t s) const
{
    return std::span<const double>(values_).subspan(layout_->begin(s), layout_->end(s) - layout_->begin(s));
}

void DistVector::fill(double value) noexcept
{
    std::fill(values_.begin(), values_.end(), value);
}

bool same_layout(const DistVector& a, const DistVector& b) noexcept
{
    return a.layout() == b.layout() || *a.layout() == *b.layout();
}

// ---------------------------------------------------------------------------
// PendingReduction

PendingReduction::PendingReduction(LayoutPtr layout, Phase phase)
    : layout_(std::move(layout)), phase_(phase), partials_(layout_->shards())
{
}

PendingReduction::PendingReduction(PendingReduction&& other) noexcept
    : layout_(std::move(other.layout_)),
      phase_(other.phase_),
      width_(other.width_),
      partials_(std::move(other.partials_)),
      finalized_(other.finalized_)
{
    other.moved_from_ = true;
}

PendingReduction::~PendingReduction()
{
    if (moved_from_ || finalized_) {
        return;
    }
    UnfinalizedHandler handler;
    {
        std::lock_guard lock(g_handler_mutex);
        handler = g_unfinalized_handler;
    }
    if (handler) {
        handler(phase_);
        return;
    }
    std::fprintf(stderr, "lowsync: PendingReduction (phase %s) destroyed without finalize\n",
                 std::string(to_string(phase_)).c_str());
    std::abort();
}

void PendingReduction::append(std::span<const DistVector> cols, const DistVector& v)
{
    if (finalized_) {
        throw std::logic_error("PendingReduction: append after finalize");
    }
    if (!(*v.layout() == *layout_)) {
        throw LayoutMismatch("PendingReduction: batch layout differs");
    }
    require_columns(cols, v, "begin_delayed_multi_dot");
    for (std::size_t s = 0; s < partials_.size(); ++s) {
        const auto vs = v.shard(s);
        for (const auto& c : cols) {
            partials_[s].push_back(shard_partial(c.shard(s), vs));
        }
    }
    width_ += cols.size();
}

std::vector<double> PendingReduction::finalize(ReductionLedger& ledger)
{
    if (finalized_) {
        throw std::logic_error("PendingReduction: already finalized");
    }
    std::vector<ExactAccumulator> global(width_);
    for (const auto& shard : partials_) {
        for (std::size_t j = 0; j < width_; ++j) {
            global[j].merge(shard[j]);
        }
    }
    finalized_ = true;
    ledger.record(phase_);
    std::vector<double> out(width_);
    for (std::size_t j = 0; j < width_; ++j) {
        out[j] = global[j].to_double();
    }
    return out;
}

UnfinalizedHandler set_unfinalized_handler(UnfinalizedHandler handler)
{
    std::lock_guard lock(g_handler_mutex);
    return std::exchange(g_unfinalized_handler, std::move(handler));
}

// ---------------------------------------------------------------------------
// reductions

double dot(const DistVector& a, const DistVector& b, ReductionLedger& ledger, Phase phase)
{
    require_same_layout(a, b, "dot");
    ExactAccumulator global;
    for (std::size_t s = 0; s < a.layout()->shards(); ++s) {
        global.merge(shard_partial(a.shard(s), b.shard(s)));
    }
    ledger.record(phase);
    return global.to_double();
}

std::vector<double> fused_multi_dot(std::span<const DistVector> cols, const DistVector& v,
                                    ReductionLedger& ledger, Phase phase)
{
    if (cols.empty()) {
        throw std::invalid_argument("fused_multi_dot: empty column request");
    }
    auto pending = begin_delayed_multi_dot(cols, v, phase);
    return pending.finalize(ledger);
}

PendingReduction begin_delayed_multi_dot(std::span<const DistVector> cols, const DistVector& v, Phase phase)
{
    PendingReduction pending(v.layout(), phase);
    pending.append(cols, v);
    return pending;
}

std::vector<double> finalize(PendingReduction& pending, ReductionLedger& ledger)
{
    return pending.finalize(ledger);
}

double norm2(const DistVector& v, ReductionLedger& ledger, Phase phase)
{
    return std::sqrt(dot(v, v, ledger, phase));
}

double exact_dot(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) {
        throw LayoutMismatch("exact_dot: length mismatch");
    }
    return shard_partial(a, b).to_double();
}

// ---------------------------------------------------------------------------
// shard-local updates

void gemv_update(DistVector& v, std::span<const DistVector> cols, std::span<const double> coeffs)
{
    if (cols.size() != coeffs.size()) {
        throw std::invalid_argument("gemv_update: coefficient count differs from column count");
    }
    require_columns(cols, v, "gemv_update");
    auto out = v.values();
    for (std::size_t j = 0; j < cols.size(); ++j) {
        const double c = coeffs[j];
        if (c == 0.0) {
            continue;
        }
        const auto col = cols[j].values();
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] -= c * col[i];
        }
    }
}

void scale(DistVector& v, double alpha)
{
    for (auto& x : v.values()) {
        x *= alpha;
    }
}

void axpy(double alpha, const DistVector& x, DistVector& y)
{
    require_same_layout(x, y, "axpy");
    const auto xs = x.values();
    auto ys = y.values();
    for (std::size_t i = 0; i < ys.size(); ++i) {
        ys[i] += alpha * xs[i];
    }
}

void copy(const DistVector& src, DistVector& dst)
{
    require_same_layout(src, dst, "copy");
    std::copy(src.values().begin(), src.values().end(), dst.values().begin());
}

void linear_sum(double a, const DistVector& x, double b, const DistVector& y, DistVector& z)
{
    require_same_layout(x, y, "linear_sum");
    require_same_layout(x, z, "linear_sum");
    const auto xs = x.values();
    const auto ys = y.values();
    auto zs = z.values();
    for (std::size_t i = 0; i < zs.size(); ++i) {
        zs[i] = a * xs[i] + b * ys[i];
    }
}

} // namespace lowsync
