#ifndef LOWSYNC_ANDERSON_HPP
#define LOWSYNC_ANDERSON_HPP

#include <cstddef>
#include <functional>
#include <vector>

#include "lowsync/qr.hpp"
#include "lowsync/vector.hpp"

namespace lowsync {

struct AAConfig {
    std::size_t m = 5;
    double tol = 1e-10;
    std::size_t max_iters = 100;
    OrthoMethod orth_method = OrthoMethod::mgs;
};

/// Throws std::invalid_argument unless m ≥ 1, tol > 0 and max_iters ≥ 1.
void validate(const AAConfig& config);

/// A map G whose fixed point x = G(x) is sought.
class FixedPointProblem {
public:
    virtual ~FixedPointProblem() = default;
    [[nodiscard]] virtual LayoutPtr layout() const = 0;
    /// gx ← G(x). Reductions performed by the evaluation go to `ledger`.
    virtual void eval(const DistVector& x, DistVector& gx, ReductionLedger& ledger) const = 0;

    [[nodiscard]] std::size_t dimension() const { return layout()->size(); }
};

/// Wraps a callable as a FixedPointProblem.
class FunctionProblem final : public FixedPointProblem {
public:
    using Map = std::function<void(const DistVector&, DistVector&)>;
    FunctionProblem(LayoutPtr layout, Map map) : layout_(std::move(layout)), map_(std::move(map)) {}

    [[nodiscard]] LayoutPtr layout() const override { return layout_; }
    void eval(const DistVector& x, DistVector& gx, ReductionLedger&) const override { map_(x, gx); }

private:
    LayoutPtr layout_;
    Map map_;
};

/// The sliding window of an Anderson solve: 𝓕 lives inside the QR
/// factorization, 𝓖 in a cyclic buffer with matching column order.
class AAState {
public:
    AAState(LayoutPtr layout, const AAConfig& config);

    [[nodiscard]] QRFactorization& factorization() noexcept { return fac_; }
    [[nodiscard]] const QRFactorization& factorization() const noexcept { return fac_; }
    [[nodiscard]] std::size_t window() const noexcept { return fac_.active(); }
    [[nodiscard]] OrthoMethod method() const noexcept { return method_; }
    [[nodiscard]] const std::vector<double>& gamma() const noexcept { return gamma_; }
    [[nodiscard]] std::size_t iteration() const noexcept { return iteration_; }

    /// Δg column j in window order (0 = oldest).
    [[nodiscard]] const DistVector& delta_g(std::size_t j) const;
    /// Appends Δg, evicting the oldest column when the buffer is full.
    void push_delta_g(DistVector dg);

    void clear();

private:
    friend std::vector<double> lsp_solve(AAState&, DistVector, const DistVector&, ReductionLedger&);

    OrthoMethod method_;
    QRFactorization fac_;
    std::vector<DistVector> dg_;
    std::size_t dg_head_ = 0;
    std::vector<double> gamma_;
    std::size_t iteration_ = 0;
};

/// Least-squares update: folds Δf into the window (deleting the oldest
/// column first when full), then solves R γ = Qᵀf with one fused reduction
/// for the right-hand side. Throws QRBreakdown on a dependent column.
std::vector<double> lsp_solve(AAState& state, DistVector delta_f, const DistVector& f, ReductionLedger& ledger);

struct IterationRecord {
    std::size_t iteration = 0;
    double update_norm = 0.0;
    std::size_t window = 0;
    LedgerSnapshot ledger;
};

struct SolveResult {
    explicit SolveResult(DistVector x0) : x(std::move(x0)) {}

    DistVector x;
    std::size_t iterations = 0;
    bool converged = false;
    std::size_t restarts = 0;
    std::vector<IterationRecord> history;
    /// Iterates x_1, x_2, … when SolveOptions::keep_iterates is set.
    std::vector<DistVector> iterates;
};

struct SolveOptions {
    bool keep_iterates = false;
};

/// Anderson-accelerated fixed-point iteration. Stops when
/// ‖x_{i+1} − x_i‖₂ < tol; a nonconverged run is flagged, not thrown.
SolveResult aa_solve(const FixedPointProblem& problem, const AAConfig& config, const DistVector& x0,
                     ReductionLedger& ledger, const SolveOptions& options = {});

/// Plain Picard iteration x_{i+1} = G(x_i) with the same stopping rule;
/// config.m and config.orth_method are ignored.
SolveResult fp_solve(const FixedPointProblem& problem, const AAConfig& config, const DistVector& x0,
                     ReductionLedger& ledger, const SolveOptions& options = {});

} // namespace lowsync

#endif
