#ifndef LOWSYNC_PERF_MODEL_HPP
#define LOWSYNC_PERF_MODEL_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

#include "lowsync/qr.hpp"

namespace lowsync {

/// Filling the window (first m iterations) or one iteration with a full window.
enum class BenchPhase { startup, recycle };

std::string_view to_string(BenchPhase phase) noexcept;
std::optional<BenchPhase> parse_bench_phase(std::string_view name) noexcept;

/// Machine model: latency(p) = latency_per_level·log₂(p) + latency_base
/// seconds per global reduction, flop_rate flops/s per shard.
struct CostParams {
    double latency_per_level = 5e-6;
    double latency_base = 10e-6;
    double flop_rate = 1e9;
    std::size_t n = std::size_t{1} << 20;

    [[nodiscard]] double latency(std::size_t p) const;
    void validate() const;
};

/// Reductions needed to fill a window of depth m (initialization included).
std::uint64_t startup_syncs(OrthoMethod method, std::size_t m);

/// Reductions of one QRAdd with a full window of depth m; include_delete adds
/// the QRDelete reduction (ICWY only).
std::uint64_t recycle_syncs(OrthoMethod method, std::size_t m, bool include_delete);

/// Floating-point work of one QRAdd that produces `columns` active columns.
double qradd_flops(OrthoMethod method, std::size_t columns, std::size_t n);
/// Floating-point work of one QRDelete on a full window of depth m.
double qrdelete_flops(OrthoMethod method, std::size_t m, std::size_t n);

/// syncs·latency(p) + flops/(p·flop_rate) for the given phase.
double predict_time(const CostParams& params, std::size_t p, OrthoMethod method, std::size_t m,
                    BenchPhase phase, bool include_delete = false);

/// Smallest m in [1, 64] (recycle: [2, 64]) with predict_time(a) < predict_time(b).
std::optional<std::size_t> crossover_m(const CostParams& params, std::size_t p, OrthoMethod a, OrthoMethod b,
                                       BenchPhase phase, bool include_delete = false);

} // namespace lowsync

#endif
