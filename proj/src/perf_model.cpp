#include "lowsync/perf_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lowsync {

namespace {

void require_depth(std::size_t m, std::size_t minimum, const char* what)
{
    if (m < minimum) {
        throw std::invalid_argument(std::string(what) + ": window depth too small");
    }
}

} // namespace

std::string_view to_string(BenchPhase phase) noexcept
{
    return phase == BenchPhase::startup ? "startup" : "recycle";
}

std::optional<BenchPhase> parse_bench_phase(std::string_view name) noexcept
{
    if (name == "startup") return BenchPhase::startup;
    if (name == "recycle") return BenchPhase::recycle;
    return std::nullopt;
}

double CostParams::latency(std::size_t p) const
{
    if (p == 0) {
        throw std::invalid_argument("CostParams::latency: shard count must be positive");
    }
    return latency_per_level * std::log2(static_cast<double>(p)) + latency_base;
}

void CostParams::validate() const
{
    if (latency_per_level < 0.0 || latency_base < 0.0) {
        throw std::invalid_argument("CostParams: latencies must be nonnegative");
    }
    if (!(flop_rate > 0.0)) {
        throw std::invalid_argument("CostParams: flop_rate must be positive");
    }
    if (n == 0) {
        throw std::invalid_argument("CostParams: vector length must be positive");
    }
}

std::uint64_t startup_syncs(OrthoMethod method, std::size_t m)
{
    require_depth(m, 1, "startup_syncs");
    switch (method) {
    case OrthoMethod::mgs: return (m * m + m) / 2;
    case OrthoMethod::icwy: return 2 * m - 1;
    case OrthoMethod::cgs2: return 3 * m - 2;
    case OrthoMethod::dcgs2: return 2 * m - 1;
    }
    throw std::invalid_argument("startup_syncs: unknown method");
}

std::uint64_t recycle_syncs(OrthoMethod method, std::size_t m, bool include_delete)
{
    require_depth(m, 2, "recycle_syncs");
    switch (method) {
    case OrthoMethod::mgs: return m;
    case OrthoMethod::icwy: return include_delete ? 3 : 2;
    case OrthoMethod::cgs2: return 3;
    case OrthoMethod::dcgs2: return 2;
    }
    throw std::invalid_argument("recycle_syncs: unknown method");
}

double qradd_flops(OrthoMethod method, std::size_t columns, std::size_t n)
{
    const double nn = static_cast<double>(n);
    // normalization: norm (2n) + scaling (n)
    const double finish = 3.0 * nn;
    if (columns <= 1) {
        return finish;
    }
    const double k = static_cast<double>(columns - 1); // existing columns
    switch (method) {
    case OrthoMethod::mgs:
        return 4.0 * nn * k + finish;
    case OrthoMethod::icwy:
        // T row and Qᵀv (4nk), triangular solve (k²), block update (2nk)
        return 6.0 * nn * k + k * k + finish;
    case OrthoMethod::cgs2:
        return 8.0 * nn * k + finish;
    case OrthoMethod::dcgs2: {
        double flops = 4.0 * nn * k + finish;
        if (columns > 3) {
            const double kk = k - 1.0;
            flops += 4.0 * nn * kk + kk;
        }
        return flops;
    }
    }
    throw std::invalid_argument("qradd_flops: unknown method");
}

double qrdelete_flops(OrthoMethod method, std::size_t m, std::size_t n)
{
    const double nn = static_cast<double>(n);
    const double rotations = static_cast<double>(m - 1);
    const double dm = static_cast<double>(m);
    // each rotation touches two Q columns (6n) and at most m entries of R
    double flops = rotations * (6.0 * nn + 6.0 * dm);
    if (method == OrthoMethod::icwy) {
        const double pairs = rotations * (rotations - 1.0) / 2.0;
        flops += 2.0 * nn * pairs;
    }
    return flops;
}

double predict_time(const CostParams& params, std::size_t p, OrthoMethod method, std::size_t m,
                    BenchPhase phase, bool include_delete)
{
    params.validate();
    double syncs = 0.0;
    double flops = 0.0;
    if (phase == BenchPhase::startup) {
        syncs = static_cast<double>(startup_syncs(method, m));
        for (std::size_t k = 1; k <= m; ++k) {
            flops += qradd_flops(method, k, params.n);
        }
    } else {
        syncs = static_cast<double>(recycle_syncs(method, m, include_delete));
        flops = qradd_flops(method, m, params.n);
        if (include_delete) {
            flops += qrdelete_flops(method, m, params.n);
        }
    }
    return syncs * params.latency(p) + flops / (static_cast<double>(p) * params.flop_rate);
}

std::optional<std::size_t> crossover_m(const CostParams& params, std::size_t p, OrthoMethod a, OrthoMethod b,
                                       BenchPhase phase, bool include_delete)
{
    const std::size_t first = phase == BenchPhase::recycle ? 2 : 1;
    for (std::size_t m = first; m <= 64; ++m) {
        if (predict_time(params, p, a, m, phase, include_delete) < predict_time(params, p, b, m, phase, include_delete)) {
            return m;
        }
    }
    return std::nullopt;
}

} // namespace lowsync
